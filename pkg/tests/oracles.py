"""Independent reference implementations used to check the package.

Everything in this file is written in deliberately naive pure Python
(plus the occasional trivially-checkable numpy call) and must stay
independent of the algorithms in src/fblnorm.  The evaluator walks
expression nodes structurally through their ``kind`` attribute so it
shares no evaluation logic with the package, and the constraint oracle
enumerates every one of the 2^M sign patterns without the halving or
blocking tricks the engine uses.
"""

from __future__ import annotations

import itertools
import math


def ref_norm(x, p) -> float:
    """Naive l_p norm of a sequence. p may be math.inf."""
    xs = [abs(float(v)) for v in x]
    if not xs:
        return 0.0
    if p == math.inf:
        return max(xs)
    if p == 1:
        return sum(xs)
    return sum(v**p for v in xs) ** (1.0 / p)


def ref_dual_exponent(p) -> float:
    if p == 1:
        return math.inf
    if p == math.inf:
        return 1.0
    return p / (p - 1.0)


def ref_eval(expr, x) -> float:
    """Evaluate a lattice expression at a point, fully independently.

    Walks nodes by their ``kind`` string: atom / scale / sum / join /
    meet / abs.  Atoms hold a coefficient vector and are evaluated as a
    plain dot product in index order.
    """
    k = expr.kind
    if k == "atom":
        return sum(float(a) * float(b) for a, b in zip(expr.vector, x))
    if k == "scale":
        return float(expr.coeff) * ref_eval(expr.child, x)
    if k == "sum":
        return sum(ref_eval(c, x) for c in expr.children)
    if k == "join":
        return max(ref_eval(c, x) for c in expr.children)
    if k == "meet":
        return min(ref_eval(c, x) for c in expr.children)
    if k == "abs":
        return abs(ref_eval(expr.child, x))
    raise AssertionError(f"unknown node kind {k!r}")


def ref_objective(expr, vectors) -> float:
    return sum(abs(ref_eval(expr, v)) for v in vectors)


def ref_constraint(vectors, p) -> float:
    """Brute-force sup over the unit ball of sum_k |<x, v_k>|.

    Uses the dual reformulation in its most literal form: every sign
    pattern sigma in {-1, +1}^M, dual norm of sum_k sigma_k v_k, take
    the max.  No pattern halving, no vectorization.  Exponential in M;
    keep M small in tests.
    """
    vectors = [list(map(float, v)) for v in vectors]
    m = len(vectors)
    n = len(vectors[0])
    q = ref_dual_exponent(p)
    best = 0.0
    for signs in itertools.product((1.0, -1.0), repeat=m):
        combo = [0.0] * n
        for s, v in zip(signs, vectors):
            for i in range(n):
                combo[i] += s * v[i]
        val = ref_norm(combo, q)
        if val > best:
            best = val
    return best


def ref_constraint_l1_closed_form(vectors) -> float:
    """For p = 1 the sup is the largest column of absolute sums."""
    m = len(vectors)
    n = len(vectors[0])
    best = 0.0
    for i in range(n):
        col = 0.0
        for k in range(m):
            col += abs(float(vectors[k][i]))
        if col > best:
            best = col
    return best


def ref_constraint_sampled(vectors, p, points) -> float:
    """Max of sum_k |<x, v_k>| over caller-supplied points on the sphere."""
    best = 0.0
    for x in points:
        tot = 0.0
        for v in vectors:
            tot += abs(sum(float(a) * float(b) for a, b in zip(x, v)))
        if tot > best:
            best = tot
    return best


def ref_walsh(k: int):
    """Sylvester doubling, returning a list-of-lists of +-1 ints."""
    w = [[1]]
    for _ in range(k):
        w = [row + row for row in w] + [row + [-v for v in row] for row in w]
    return w


def ref_r_exponent(p) -> float:
    if p == math.inf:
        return 2.0
    return 2.0 * p / (p + 2.0)
