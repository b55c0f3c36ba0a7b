"""Lattice expressions over R^n: atoms (point evaluations), linear
combinations, join, meet and absolute value.

Every expression denotes a positively homogeneous, lattice-polynomial
function of a functional x* in R^n: an atom with coefficient vector v
evaluates to <v, x*>, and the lattice operations act pointwise.  Nodes
are immutable; composite constructors validate that all children share
one ambient dimension and raise DimensionError otherwise.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import DimensionError


def _freeze(vec) -> np.ndarray:
    a = np.array(vec, dtype=float, copy=True)
    if a.ndim != 1 or a.size == 0:
        raise DimensionError(f"atom vector must be 1-D and nonempty, got shape {a.shape}")
    a.flags.writeable = False
    return a


def _common_dim(children: Iterable["LatticeExpr"]) -> int:
    dims = [c.dim for c in children]
    first = dims[0]
    for d in dims[1:]:
        if d != first:
            raise DimensionError(f"mixed dimensions in one expression: {first} vs {d}")
    return first


class LatticeExpr:
    """Base node. Subclasses set ``kind`` and implement the two walks."""

    __slots__ = ()
    kind = "?"

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def evaluate(self, x) -> float:
        """Value at a single functional x (length must equal .dim)."""
        v = np.asarray(x, dtype=float)
        if v.ndim != 1 or v.size != self.dim:
            got = v.size if v.ndim == 1 else f"shape {v.shape}"
            raise DimensionError(f"expression has dimension {self.dim}, point has {got}")
        return self._eval(v)

    def evaluate_many(self, X) -> np.ndarray:
        """Values at the rows of X, shape (N, dim) -> shape (N,)."""
        A = np.asarray(X, dtype=float)
        if A.ndim != 2 or A.shape[1] != self.dim:
            raise DimensionError(
                f"expression has dimension {self.dim}, rows have {A.shape[1] if A.ndim == 2 else A.shape}"
            )
        return self._eval_many(A)

    def _eval(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def _eval_many(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __ne__(self, other):
        return not self.__eq__(other)

    __hash__ = None


class Atom(LatticeExpr):
    """Point evaluation x* -> <vector, x*>."""

    __slots__ = ("vector",)
    kind = "atom"

    def __init__(self, vector):
        object.__setattr__(self, "vector", _freeze(vector))

    def __setattr__(self, *a):
        raise AttributeError("expressions are immutable")

    @property
    def dim(self) -> int:
        return self.vector.size

    def _eval(self, x):
        return float(np.dot(self.vector, x))

    def _eval_many(self, X):
        return X @ self.vector

    def __eq__(self, other):
        return isinstance(other, Atom) and np.array_equal(self.vector, other.vector)

    def __repr__(self):
        return f"Atom({self.vector.tolist()!r})"


class Scale(LatticeExpr):
    __slots__ = ("coeff", "child")
    kind = "scale"

    def __init__(self, coeff: float, child: LatticeExpr):
        object.__setattr__(self, "coeff", float(coeff))
        object.__setattr__(self, "child", child)

    def __setattr__(self, *a):
        raise AttributeError("expressions are immutable")

    @property
    def dim(self) -> int:
        return self.child.dim

    def _eval(self, x):
        return self.coeff * self.child._eval(x)

    def _eval_many(self, X):
        return self.coeff * self.child._eval_many(X)

    def __eq__(self, other):
        return isinstance(other, Scale) and self.coeff == other.coeff and self.child == other.child

    def __repr__(self):
        return f"Scale({self.coeff!r}, {self.child!r})"


class _Nary(LatticeExpr):
    __slots__ = ("children", "_dim")
    _min_arity = 1

    def __init__(self, *children: LatticeExpr):
        if len(children) == 1 and isinstance(children[0], (list, tuple)):
            children = tuple(children[0])
        if len(children) < self._min_arity:
            raise DimensionError(
                f"{type(self).__name__} needs at least {self._min_arity} children, got {len(children)}"
            )
        object.__setattr__(self, "children", tuple(children))
        object.__setattr__(self, "_dim", _common_dim(children))

    def __setattr__(self, *a):
        raise AttributeError("expressions are immutable")

    @property
    def dim(self) -> int:
        return self._dim

    def __eq__(self, other):
        return type(other) is type(self) and self.children == other.children

    def __repr__(self):
        return f"{type(self).__name__}({', '.join(map(repr, self.children))})"


class Sum(_Nary):
    kind = "sum"
    _min_arity = 1

    def _eval(self, x):
        total = self.children[0]._eval(x)
        for c in self.children[1:]:
            total = total + c._eval(x)
        return total

    def _eval_many(self, X):
        total = self.children[0]._eval_many(X)
        for c in self.children[1:]:
            total = total + c._eval_many(X)
        return total


class Join(_Nary):
    """Pointwise maximum."""

    kind = "join"
    _min_arity = 2

    def _eval(self, x):
        return max(c._eval(x) for c in self.children)

    def _eval_many(self, X):
        acc = self.children[0]._eval_many(X)
        for c in self.children[1:]:
            acc = np.maximum(acc, c._eval_many(X))
        return acc


class Meet(_Nary):
    """Pointwise minimum."""

    kind = "meet"
    _min_arity = 2

    def _eval(self, x):
        return min(c._eval(x) for c in self.children)

    def _eval_many(self, X):
        acc = self.children[0]._eval_many(X)
        for c in self.children[1:]:
            acc = np.minimum(acc, c._eval_many(X))
        return acc


class Abs(LatticeExpr):
    __slots__ = ("child",)
    kind = "abs"

    def __init__(self, child: LatticeExpr):
        object.__setattr__(self, "child", child)

    def __setattr__(self, *a):
        raise AttributeError("expressions are immutable")

    @property
    def dim(self) -> int:
        return self.child.dim

    def _eval(self, x):
        return abs(self.child._eval(x))

    def _eval_many(self, X):
        return np.abs(self.child._eval_many(X))

    def __eq__(self, other):
        return isinstance(other, Abs) and self.child == other.child

    def __repr__(self):
        return f"Abs({self.child!r})"


def generator(i: int, n: int) -> Atom:
    """The i-th generator over R^n (1-based, matching the d(ei) syntax)."""
    if not 1 <= i <= n:
        raise DimensionError(f"generator index {i} outside 1..{n}")
    v = np.zeros(n)
    v[i - 1] = 1.0
    return Atom(v)


def zero(n: int) -> Atom:
    return Atom(np.zeros(n))


def pos_part(f: LatticeExpr) -> Join:
    """f v 0."""
    return Join(f, zero(f.dim))


def neg_part(f: LatticeExpr) -> Join:
    """(-f) v 0."""
    return Join(Scale(-1.0, f), zero(f.dim))


def _fmt_num(c: float) -> str:
    return repr(float(c))


def format_expr(e: LatticeExpr) -> str:
    """Fully parenthesized canonical text that parse() reads back.

    Atoms always print as explicit coefficient lists so the ambient
    dimension survives the round trip; d(ei) stays input-only sugar.
    """
    if isinstance(e, Atom):
        return "d([" + ", ".join(_fmt_num(v) for v in e.vector) + "])"
    if isinstance(e, Scale):
        return f"({_fmt_num(e.coeff)} * {format_expr(e.child)})"
    if isinstance(e, Sum):
        return "(" + " + ".join(format_expr(c) for c in e.children) + ")"
    if isinstance(e, Join):
        return "(" + " \\/ ".join(format_expr(c) for c in e.children) + ")"
    if isinstance(e, Meet):
        return "(" + " /\\ ".join(format_expr(c) for c in e.children) + ")"
    if isinstance(e, Abs):
        return f"abs({format_expr(e.child)})"
    raise TypeError(f"not a lattice expression: {e!r}")


def match_moduli_combination(e: LatticeExpr) -> np.ndarray | None:
    """Recognize sums of scaled absolute generators.

    Returns the length-n coefficient vector lambda when the expression
    is (up to nesting of Sum/Scale) of the form sum_i lambda_i |d_ei|
    with each basis generator appearing at most once; None otherwise.
    The certification fast paths key off this shape.
    """
    lam = np.zeros(e.dim)
    seen = np.zeros(e.dim, dtype=bool)

    def walk(node: LatticeExpr, factor: float) -> bool:
        if isinstance(node, Scale):
            return walk(node.child, factor * node.coeff)
        if isinstance(node, Sum):
            return all(walk(c, factor) for c in node.children)
        if isinstance(node, Abs) and isinstance(node.child, Atom):
            v = node.child.vector
            nz = np.nonzero(v)[0]
            if nz.size != 1 or v[nz[0]] != 1.0:
                return False
            i = int(nz[0])
            if seen[i]:
                return False
            seen[i] = True
            lam[i] = factor
            return True
        return False

    if walk(e, 1.0):
        return lam
    return None
