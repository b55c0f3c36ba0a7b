import numpy as np
import pytest

from fblnorm import (
    Abs,
    Atom,
    Join,
    Meet,
    ParseError,
    Scale,
    Sum,
    format_expr,
    generator,
    match_moduli_combination,
    parse,
)


def test_single_generator():
    e = parse("d(e1)")
    assert e == Atom([1.0])
    e = parse("d(e3)")
    assert e.dim == 3
    assert e == generator(3, 3)


def test_explicit_list_atom():
    e = parse("d([0.5, -2])")
    assert e == Atom([0.5, -2.0])
    e = parse("d([1, 2, 3.25])")
    assert e.dim == 3


def test_moduli_combination_text():
    e = parse("3 * abs(d(e1)) + 2 * abs(d(e2))")
    assert e == Sum(Scale(3.0, Abs(generator(1, 2))), Scale(2.0, Abs(generator(2, 2))))
    lam = match_moduli_combination(e)
    assert np.array_equal(lam, [3.0, 2.0])


def test_subtraction_and_unary_minus():
    e = parse("d(e1) - d(e2)")
    assert e == Sum(generator(1, 2), Scale(-1.0, generator(2, 2)))
    e = parse("-d(e1)")
    assert e == Scale(-1.0, Atom([1.0]))
    e = parse("-2.5 * d(e1)")
    assert e == Scale(-2.5, Atom([1.0]))
    e = parse("--2 * d(e1)")
    assert e == Scale(2.0, Atom([1.0]))


def test_numeric_coefficient_folding():
    e = parse("2 * 3 * d(e1)")
    assert e == Scale(6.0, Atom([1.0]))
    e = parse("2 * d(e1) * 3")
    assert e == Scale(6.0, Atom([1.0]))
    e = parse("1 * d(e1)")
    assert e == Scale(1.0, Atom([1.0]))


def test_join_meet_precedence():
    e = parse("d(e1) + d(e2) \\/ d(e1)")
    assert isinstance(e, Join)
    assert isinstance(e.children[0], Sum)
    # same-precedence lattice operators associate left
    e = parse("d(e1) \\/ d(e2) /\\ d(e1)")
    assert isinstance(e, Meet)
    assert isinstance(e.children[0], Join)
    # runs of one operator collapse into one n-ary node
    e = parse("d(e1) \\/ d(e2) \\/ d(e1) + d(e2)")
    assert isinstance(e, Join)
    assert len(e.children) == 3


def test_multiplication_binds_tighter_than_addition():
    e = parse("2 * d(e1) + 3 * d(e2)")
    assert e == Sum(Scale(2.0, generator(1, 2)), Scale(3.0, generator(2, 2)))


def test_pos_neg_sugar():
    e = parse("pos(d(e1) - d(e2))")
    assert isinstance(e, Join)
    assert e.children[1] == Atom([0.0, 0.0])
    x = np.array([2.0, 5.0])
    assert e.evaluate(x) == 0.0
    assert e.evaluate(-x) == 3.0
    ne = parse("neg(d(e1) - d(e2))")
    assert ne.evaluate(x) == 3.0
    assert ne.evaluate(-x) == 0.0


def test_abs_nesting_and_parens():
    e = parse("abs((d(e1) + d(e2)) /\\ d(e1))")
    assert isinstance(e, Abs)
    assert isinstance(e.child, Meet)


def test_dimension_inference():
    assert parse("d(e1) + d(e4)").dim == 4
    assert parse("d(e2) + d([1, 2, 3])").dim == 3
    assert parse("d(e1)", n=5).dim == 5


def test_dimension_conflicts():
    with pytest.raises(ParseError):
        parse("d([1, 2]) + d([1, 2, 3])")
    with pytest.raises(ParseError):
        parse("d(e3) + d([1, 2])")
    with pytest.raises(ParseError):
        parse("d(e3)", n=2)
    with pytest.raises(ParseError):
        parse("d([1, 2])", n=3)


def test_constant_terms_rejected():
    with pytest.raises(ParseError) as info:
        parse("3")
    assert "numeric" in str(info.value)
    with pytest.raises(ParseError):
        parse("2 * 3")
    with pytest.raises(ParseError):
        parse("d(e1) + 5")


def test_two_expression_factors_rejected():
    with pytest.raises(ParseError):
        parse("d(e1) * d(e2)")
    with pytest.raises(ParseError):
        parse("abs(d(e1)) * d(e1)")


def test_error_positions():
    with pytest.raises(ParseError) as info:
        parse("d(e1) + @")
    assert info.value.line == 1
    assert info.value.column == 9
    with pytest.raises(ParseError) as info:
        parse("d(e1) +\n  %")
    assert info.value.line == 2
    with pytest.raises(ParseError) as info:
        parse("d(e1")
    assert info.value.expected is not None


def test_malformed_atoms():
    for text in ["d(e0)", "d()", "d(e)", "d([])", "d([1,])", "d(1)", "d[e1]"]:
        with pytest.raises(ParseError):
            parse(text)


def test_trailing_input():
    with pytest.raises(ParseError):
        parse("d(e1) d(e2)")
    with pytest.raises(ParseError):
        parse("d(e1))")


def test_unknown_names():
    with pytest.raises(ParseError):
        parse("sin(d(e1))")


def test_round_trip_canonical_form():
    cases = [
        "d(e1)",
        "abs(d(e1))",
        "3 * abs(d(e1)) + 2 * abs(d(e2))",
        "(d(e1) \\/ d(e2)) /\\ (d(e1) + d(e2))",
        "pos(d(e1) - 2 * d(e2))",
        "neg(-1.5 * d([0.25, -4]))",
        "abs(d(e1) /\\ (d(e2) \\/ -d(e3)))",
    ]
    rng = np.random.default_rng(44)
    for text in cases:
        e = parse(text)
        canon = format_expr(e)
        back = parse(canon)
        assert back == e
        assert format_expr(back) == canon
        X = rng.standard_normal((100, e.dim))
        assert np.array_equal(back.evaluate_many(X), e.evaluate_many(X))


def test_scientific_notation_numbers():
    e = parse("1e-2 * d(e1) + 2.5E+1 * d(e2)")
    assert e == Sum(Scale(0.01, generator(1, 2)), Scale(25.0, generator(2, 2)))


def test_whitespace_and_newlines():
    e = parse("  3*abs( d(e1) )\n  + 2 * abs(d(e2))  ")
    assert match_moduli_combination(e) is not None
