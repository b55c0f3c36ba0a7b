"""Single home for the numeric tolerances used across the package.

Comparisons default to 1e-9 relative; feasibility and exactness checks
on certificates use the tighter 1e-12; a handful of diagnostics re-check
at a widened 1e-7 to distinguish "wrong" from "merely noisy".
"""

from __future__ import annotations

REL_TOL = 1e-9
WIDE_REL_TOL = 1e-7
CERT_EPS = 1e-12
UPPER_SLACK = 1e-9


def within(a: float, b: float, tol: float = REL_TOL) -> bool:
    """True when |a - b| <= tol * (1 + max(|a|, |b|))."""
    return abs(a - b) <= tol * (1.0 + max(abs(a), abs(b)))
