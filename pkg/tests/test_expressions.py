import numpy as np
import pytest

from fblnorm import (
    Abs,
    Atom,
    DimensionError,
    Join,
    Meet,
    Scale,
    Sum,
    format_expr,
    generator,
    match_moduli_combination,
    neg_part,
    pos_part,
)
from fblnorm.expressions import zero

from oracles import ref_eval


def random_expr(rng, n, depth=3):
    """Small random expression tree used across these tests."""
    if depth == 0 or rng.random() < 0.3:
        return Atom(rng.standard_normal(n))
    kind = rng.integers(0, 5)
    if kind == 0:
        return Scale(float(rng.standard_normal()), random_expr(rng, n, depth - 1))
    if kind == 1:
        return Abs(random_expr(rng, n, depth - 1))
    cls = (Sum, Join, Meet)[int(kind) - 2]
    width = int(rng.integers(2, 4))
    return cls(*[random_expr(rng, n, depth - 1) for _ in range(width)])


def test_atom_evaluate():
    a = Atom([1.0, -2.0, 0.5])
    assert a.dim == 3
    assert a.evaluate([1.0, 1.0, 2.0]) == 1.0 - 2.0 + 1.0
    assert a.kind == "atom"


def test_generator_is_one_based():
    g = generator(2, 3)
    assert g.evaluate([5.0, 7.0, 9.0]) == 7.0
    with pytest.raises(DimensionError):
        generator(0, 3)
    with pytest.raises(DimensionError):
        generator(4, 3)


def test_evaluate_matches_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(80):
        n = int(rng.integers(1, 5))
        e = random_expr(rng, n)
        x = rng.standard_normal(n)
        assert e.evaluate(x) == pytest.approx(ref_eval(e, x), rel=1e-12, abs=1e-12)


def test_evaluate_many_matches_pointwise():
    rng = np.random.default_rng(31)
    for _ in range(25):
        n = int(rng.integers(1, 5))
        e = random_expr(rng, n)
        X = rng.standard_normal((8, n))
        vals = e.evaluate_many(X)
        for i in range(8):
            assert vals[i] == pytest.approx(e.evaluate(X[i]), rel=1e-12, abs=1e-12)


def test_positive_homogeneity():
    rng = np.random.default_rng(99)
    for _ in range(30):
        n = int(rng.integers(1, 4))
        e = random_expr(rng, n)
        x = rng.standard_normal(n)
        base = e.evaluate(x)
        for c in [0.5, 2.0, 37.25]:
            assert e.evaluate(c * x) == pytest.approx(c * base, rel=1e-12, abs=1e-12)


def test_abs_is_join_with_negation():
    # |f| = f v (-f), pointwise and exactly
    rng = np.random.default_rng(5)
    for _ in range(30):
        n = int(rng.integers(1, 4))
        f = random_expr(rng, n)
        x = rng.standard_normal(n)
        assert Abs(f).evaluate(x) == Join(f, Scale(-1.0, f)).evaluate(x)


def test_meet_de_morgan():
    # f ^ g = -((-f) v (-g)), exactly
    rng = np.random.default_rng(6)
    for _ in range(30):
        n = int(rng.integers(1, 4))
        f = random_expr(rng, n)
        g = random_expr(rng, n)
        x = rng.standard_normal(n)
        lhs = Meet(f, g).evaluate(x)
        rhs = Scale(-1.0, Join(Scale(-1.0, f), Scale(-1.0, g))).evaluate(x)
        assert lhs == rhs


def test_pos_neg_parts():
    rng = np.random.default_rng(8)
    for _ in range(30):
        n = int(rng.integers(1, 4))
        f = random_expr(rng, n)
        x = rng.standard_normal(n)
        v = f.evaluate(x)
        pp = pos_part(f).evaluate(x)
        nn = neg_part(f).evaluate(x)
        assert pp == max(v, 0.0)
        assert nn == max(-v, 0.0)
        assert pp - nn == pytest.approx(v, rel=1e-12, abs=1e-15)
        assert pp + nn == abs(v)


def test_dimension_checks():
    with pytest.raises(DimensionError):
        Sum(Atom([1.0, 2.0]), Atom([1.0]))
    with pytest.raises(DimensionError):
        Join(Atom([1.0]), Atom([1.0, 2.0]))
    e = Atom([1.0, 2.0])
    with pytest.raises(DimensionError):
        e.evaluate([1.0])
    with pytest.raises(DimensionError):
        e.evaluate_many(np.zeros((3, 3)))


def test_immutability():
    a = Atom([1.0, 2.0])
    with pytest.raises(Exception):
        a.vector = np.zeros(2)
    with pytest.raises(Exception):
        a.vector[0] = 5.0
    s = Scale(2.0, a)
    with pytest.raises(Exception):
        s.coeff = 3.0


def test_structural_equality():
    a = Atom([1.0, 0.0])
    assert a == Atom([1.0, 0.0])
    assert a != Atom([0.0, 1.0])
    assert Scale(2.0, a) == Scale(2.0, Atom([1.0, 0.0]))
    assert Scale(2.0, a) != Scale(3.0, a)
    assert Sum(a, a) == Sum(a, a)
    assert Sum(a, a) != Join(a, a)
    assert Abs(a) == Abs(Atom([1.0, 0.0]))


def test_format_round_trips_through_parser():
    from fblnorm import parse

    rng = np.random.default_rng(12)
    for _ in range(25):
        n = int(rng.integers(1, 4))
        e = random_expr(rng, n)
        text = format_expr(e)
        back = parse(text)
        X = rng.standard_normal((10, n))
        assert np.array_equal(back.evaluate_many(X), e.evaluate_many(X))


def test_match_moduli_combination():
    lam = match_moduli_combination(
        Sum(Scale(3.0, Abs(generator(1, 3))), Scale(2.0, Abs(generator(3, 3))))
    )
    assert lam is not None
    assert np.array_equal(lam, [3.0, 0.0, 2.0])

    # plain |d_e1| means lambda = e_1
    lam = match_moduli_combination(Abs(generator(1, 2)))
    assert np.array_equal(lam, [1.0, 0.0])

    # nested scales multiply through
    lam = match_moduli_combination(Scale(2.0, Sum(Scale(0.5, Abs(generator(1, 1))))))
    assert np.array_equal(lam, [1.0])

    # negative coefficients are structural matches too
    lam = match_moduli_combination(Sum(Abs(generator(1, 2)), Scale(-1.0, Abs(generator(2, 2)))))
    assert np.array_equal(lam, [1.0, -1.0])


def test_match_moduli_rejects():
    g1, g2 = generator(1, 2), generator(2, 2)
    assert match_moduli_combination(g1) is None
    assert match_moduli_combination(Abs(Sum(g1, g2))) is None
    assert match_moduli_combination(Join(Abs(g1), Abs(g2))) is None
    # a generator may appear only once
    assert match_moduli_combination(Sum(Abs(g1), Abs(generator(1, 2)))) is None
    # non-basis atoms do not match
    assert match_moduli_combination(Abs(Atom([1.0, 1.0]))) is None
    assert match_moduli_combination(Abs(Atom([2.0, 0.0]))) is None


def test_zero_expression():
    z = zero(3)
    assert z.evaluate([1.0, 2.0, 3.0]) == 0.0
    assert pos_part(Atom([1.0])).dim == 1
