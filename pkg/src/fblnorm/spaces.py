"""Finite-dimensional sequence spaces l_p^n, with p = inf standing in
for the sup-norm truncations that model c_0.

Exponents are plain floats in [1, inf]; math.inf is a first-class value
everywhere, including parsing and formatting ("inf" on the wire).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ExponentDomainError

INF = math.inf


def parse_exponent(text: str) -> float:
    """Parse an exponent from user input; "inf" means math.inf."""
    t = text.strip().lower()
    if t == "inf":
        return INF
    try:
        p = float(t)
    except ValueError:
        raise ExponentDomainError(f"cannot parse exponent {text!r}") from None
    if not math.isfinite(p):
        return INF if p > 0 else _reject(p)
    if p < 1.0:
        _reject(p)
    return p


def _reject(p) -> float:
    raise ExponentDomainError(f"exponent must lie in [1, inf], got {p!r}")


def format_exponent(p: float) -> str:
    if p == INF:
        return "inf"
    if float(p).is_integer():
        return str(int(p))
    return repr(float(p))


def check_exponent(p: float) -> float:
    if p != INF and (not math.isfinite(p) or p < 1.0):
        _reject(p)
    return float(p)


@dataclass(frozen=True)
class SpaceSpec:
    """An l_p space of dimension n; p = inf models the c_0 truncation."""

    n: int
    p: float

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise DimensionError(f"dimension must be a positive integer, got {self.n!r}")
        check_exponent(self.p)
        object.__setattr__(self, "p", float(self.p))

    @property
    def dual(self) -> float:
        return dual_exponent(self.p)

    def to_json(self) -> dict:
        return {"n": self.n, "p": "inf" if self.p == INF else self.p}


def dual_exponent(p: float) -> float:
    """Conjugate exponent: 1 <-> inf, otherwise p/(p-1)."""
    check_exponent(p)
    if p == 1.0:
        return INF
    if p == INF:
        return 1.0
    return p / (p - 1.0)


def ell_r_exponent(p: float) -> float:
    """The interpolation exponent r = 2p/(p+2) for p > 2, r = 2 at p = inf.

    Raises ExponentDomainError for p <= 2, where the two-sided estimates
    switch to l_1 behaviour instead of an l_r sandwich.
    """
    check_exponent(p)
    if p == INF:
        return 2.0
    if p <= 2.0:
        raise ExponentDomainError(
            f"r-exponent requires p > 2 (got p = {format_exponent(p)}); "
            "for p <= 2 the norm is pinned to the l_1 value instead"
        )
    return 2.0 * p / (p + 2.0)


def norm(x, p: float) -> float:
    """l_p norm of a vector, stable under extreme scalings.

    General exponents rescale by the max modulus before powering so that
    inputs near the overflow/underflow boundary stay representable.
    """
    check_exponent(p)
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise DimensionError(f"norm expects a vector, got shape {v.shape}")
    if v.size == 0:
        return 0.0
    a = np.abs(v)
    if p == INF:
        return float(a.max())
    if p == 1.0:
        return float(a.sum())
    if p == 2.0:
        m = float(a.max())
        if m == 0.0:
            return 0.0
        s = a / m
        return m * float(math.sqrt(np.dot(s, s)))
    m = float(a.max())
    if m == 0.0:
        return 0.0
    return m * float(np.sum((a / m) ** p) ** (1.0 / p))


def norm_rows(X: np.ndarray, p: float) -> np.ndarray:
    """Row-wise l_p norms of a 2-D array; same stability policy as norm()."""
    check_exponent(p)
    A = np.abs(np.asarray(X, dtype=float))
    if A.ndim != 2:
        raise DimensionError(f"norm_rows expects a matrix, got shape {A.shape}")
    if p == INF:
        return A.max(axis=1)
    if p == 1.0:
        return A.sum(axis=1)
    if p == 2.0:
        return np.sqrt(np.einsum("ij,ij->i", A, A))
    m = A.max(axis=1)
    out = np.zeros(A.shape[0])
    live = m > 0.0
    if np.any(live):
        S = A[live] / m[live, None]
        out[live] = m[live] * np.sum(S**p, axis=1) ** (1.0 / p)
    return out
