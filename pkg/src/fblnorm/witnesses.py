"""Analytic witness families and closed-form bounds for moduli
combinations sum_i lambda_i |d_ei|.

Two constructions cover the exponent range:

* p > 2 (including the sup-norm case): a family built from a
  Sylvester-type orthogonal sign matrix.  With r = 2p/(p+2) (r = 2 at
  p = inf), weights b_i = |l_i|^(r-1) / (sum |l_j|^r)^(1-1/r) and sign
  matrix entries w_ij, the functionals x*_j = (b_i w_ij / m)_i form a
  feasible family whose objective is exactly ||lambda||_r for
  sign-constant lambda.  Feasibility follows from column orthogonality,
  Cauchy-Schwarz and Hoelder; the matching upper bound K_G ||lambda||_r
  is the Grothendieck-constant estimate.

* p <= 2: the all-sign family {sigma / 2^m : sigma in {-1,1}^m}
  supported on the nonzero coordinates has constraint exactly 1 and
  objective ||lambda||_1 for sign-constant lambda, pinning the norm to
  ||lambda||_1 against the triangle-inequality upper bound.

Both constructions depend only on |lambda|, so they stay feasible for
mixed signs; the exact-value identities, and the tests that assert
them, are for sign-constant coefficient vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import (
    FunctionalFamily,
    constraint_norm_exact,
    default_enum_cap,
    objective as family_objective,
    sample_constraint_lower,
)
from .errors import (
    CapacityError,
    CertificationError,
    DegenerateFamilyError,
    DimensionError,
    ExponentDomainError,
)
from .expressions import Abs, LatticeExpr, Scale, Sum, generator
from .spaces import INF, SpaceSpec, ell_r_exponent, norm
from .tolerances import CERT_EPS, UPPER_SLACK, WIDE_REL_TOL

KRIVINE_GROTHENDIECK = math.pi / (2.0 * math.log(1.0 + math.sqrt(2.0)))

_WALSH_K_DOMAIN = 20
_WALSH_K_MATERIALIZE = 13
_WALSH_K_AUTOCHECK = 8
_ALLSIGN_SUPPORT_CAP = 16


def grothendieck_constant(value: float | None = None) -> float:
    """The constant used in the closed-form upper bound.

    Defaults to Krivine's bound pi / (2 ln(1 + sqrt 2)).  Values below 1
    are rejected; no valid constant can be smaller.
    """
    if value is None:
        return KRIVINE_GROTHENDIECK
    v = float(value)
    if not math.isfinite(v) or v < 1.0:
        raise ValueError(f"Grothendieck-type constant must be finite and >= 1, got {value!r}")
    return v


@dataclass(frozen=True)
class WalshMatrix:
    """A 2^k by 2^k orthogonal +-1 matrix from Sylvester doubling."""

    k: int
    entries: np.ndarray

    def __post_init__(self):
        if self.entries.shape != (self.size, self.size):
            raise DimensionError(
                f"entries shape {self.entries.shape} does not match k={self.k}"
            )

    @property
    def size(self) -> int:
        return 1 << self.k

    def validate(self) -> None:
        """Exact integer check of W W^T = m I; raises on failure."""
        W = self.entries.astype(np.int64)
        G = W @ W.T
        m = self.size
        if not np.array_equal(G, m * np.eye(m, dtype=np.int64)):
            raise CertificationError(f"sign matrix of order {m} is not orthogonal")
        if not np.all(self.entries[0] == 1) or not np.all(self.entries[:, 0] == 1):
            raise CertificationError("first row and column must be all +1")


def walsh_matrix(k: int) -> WalshMatrix:
    """Sylvester doubling: W_0 = [1], W_{k+1} = [[W, W], [W, -W]].

    The domain is 0 <= k <= 20, but materializing beyond k = 13 (a
    64 MB int8 block) raises CapacityError; walsh_row serves single
    rows at any admissible k.  Orthogonality is checked exactly on
    construction up to k = 8 and on demand through validate().
    """
    if not 0 <= k <= _WALSH_K_DOMAIN:
        raise ExponentDomainError(f"order exponent k must lie in 0..{_WALSH_K_DOMAIN}, got {k}")
    if k > _WALSH_K_MATERIALIZE:
        raise CapacityError(
            f"materializing a 2^{k} square sign matrix is out of capacity "
            f"(limit k = {_WALSH_K_MATERIALIZE}); use walsh_row for single rows"
        )
    W = np.ones((1, 1), dtype=np.int8)
    for _ in range(k):
        top = np.concatenate([W, W], axis=1)
        bottom = np.concatenate([W, -W], axis=1)
        W = np.concatenate([top, bottom], axis=0)
    W.flags.writeable = False
    wm = WalshMatrix(k, W)
    if k <= _WALSH_K_AUTOCHECK:
        wm.validate()
    return wm


def walsh_row(k: int, i: int) -> np.ndarray:
    """Row i of the order-2^k sign matrix without materializing it.

    Entry (i, j) is (-1)^popcount(i & j) in the Sylvester ordering.
    """
    if not 0 <= k <= _WALSH_K_DOMAIN:
        raise ExponentDomainError(f"order exponent k must lie in 0..{_WALSH_K_DOMAIN}, got {k}")
    m = 1 << k
    if not 0 <= i < m:
        raise DimensionError(f"row index {i} outside 0..{m - 1}")
    j = np.arange(m, dtype=np.int64)
    bits = np.zeros(m, dtype=np.int64)
    masked = j & i
    for b in range(k):
        bits += (masked >> b) & 1
    return np.where(bits % 2 == 0, 1, -1).astype(np.int8)


def _as_lambda(lam, space: SpaceSpec) -> np.ndarray:
    a = np.asarray(lam, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise DimensionError(f"coefficient vector must be 1-D and nonempty, got shape {a.shape}")
    if a.size > space.n:
        raise DimensionError(
            f"coefficient vector has length {a.size} but the space has dimension {space.n}"
        )
    if not np.all(np.isfinite(a)):
        raise DimensionError("coefficients must be finite")
    return a


def _trim_trailing_zeros(a: np.ndarray) -> np.ndarray:
    nz = np.nonzero(a)[0]
    if nz.size == 0:
        raise DegenerateFamilyError("all coefficients are zero; no witness to build")
    return a[: int(nz[-1]) + 1]


def walsh_witness(lam, space: SpaceSpec) -> FunctionalFamily:
    """The orthogonal-sign-matrix witness family for p > 2 or p = inf.

    Trailing zeros of lambda are trimmed, the rest is zero-padded to the
    next power of two m = 2^k, and the family (x*_j)_{j<m} with
    x*_j[i] = b_i w_ij / m is returned, truncated to the ambient
    dimension (safe: padded coordinates carry b_i = 0).
    """
    r = ell_r_exponent(space.p)
    a = _trim_trailing_zeros(_as_lambda(lam, space))
    m0 = a.size
    k = max(0, (m0 - 1).bit_length())
    m = 1 << k
    mod = np.zeros(m)
    mod[:m0] = np.abs(a)
    denom = float(np.sum(mod**r)) ** (1.0 - 1.0 / r)
    b = np.zeros(m)
    live = mod > 0.0
    b[live] = mod[live] ** (r - 1.0) / denom
    W = walsh_matrix(k).entries.astype(float)
    # columns of W indexed by j give the functionals
    width = min(m, space.n)
    vectors = np.zeros((m, space.n))
    vectors[:, :width] = (b[:width] * W[:width, :].T) / m
    return FunctionalFamily(vectors, space)


def allsign_witness(lam, space: SpaceSpec) -> FunctionalFamily:
    """The all-sign witness family for p <= 2.

    Places sigma / 2^m on the nonzero coordinates of lambda for every
    sigma in {-1, +1}^m.  The constraint norm is exactly 1 for p <= 2;
    entries are dyadic so the p = 1 closed form evaluates to 1.0 in
    floating point with no rounding at all.
    """
    if space.p > 2.0:
        raise ExponentDomainError(
            f"the all-sign witness needs p <= 2, got p = {space.p}"
        )
    a = _as_lambda(lam, space)
    support = np.nonzero(a)[0]
    m = support.size
    if m == 0:
        raise DegenerateFamilyError("all coefficients are zero; no witness to build")
    if m > _ALLSIGN_SUPPORT_CAP:
        raise CapacityError(
            f"all-sign family has 2^{m} members; support cap is {_ALLSIGN_SUPPORT_CAP}"
        )
    count = 1 << m
    idx = np.arange(count, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(m, dtype=np.int64)) & 1
    signs = 1.0 - 2.0 * bits.astype(float)
    vectors = np.zeros((count, space.n))
    vectors[:, support] = signs / count
    return FunctionalFamily(vectors, space)


def moduli_expression(lam, n: int) -> LatticeExpr:
    """The expression sum_i lambda_i |d_ei| over R^n (zero terms kept out)."""
    a = np.asarray(lam, dtype=float)
    terms = []
    for i, c in enumerate(a):
        if c == 0.0:
            continue
        g = Abs(generator(i + 1, n))
        terms.append(g if c == 1.0 else Scale(float(c), g))
    if not terms:
        raise DegenerateFamilyError("all coefficients are zero; empty expression")
    return terms[0] if len(terms) == 1 else Sum(*terms)


def krivine_upper(lam, space: SpaceSpec, kg: float | None = None) -> float:
    """Closed-form upper bound K_G * ||lambda||_r for p > 2 or p = inf."""
    r = ell_r_exponent(space.p)
    a = _as_lambda(lam, space)
    return grothendieck_constant(kg) * norm(a, r)


def triangle_upper(lam) -> float:
    """||lambda||_1: valid for every exponent and any signs."""
    a = np.asarray(lam, dtype=float)
    if a.ndim != 1:
        raise DimensionError(f"coefficient vector must be 1-D, got shape {a.shape}")
    return norm(a, 1.0)


@dataclass(frozen=True)
class BoundCertificate:
    """A two-sided certificate for the norm of a moduli combination."""

    lam: tuple
    space: SpaceSpec
    r: float | None
    lower: float
    upper: float
    witness: FunctionalFamily
    provenance: tuple[str, ...]

    def __post_init__(self):
        if self.lower < 0.0:
            raise CertificationError(f"negative lower bound {self.lower}")
        if self.lower > self.upper + UPPER_SLACK:
            raise CertificationError(
                f"lower bound {self.lower} exceeds upper bound {self.upper} beyond tolerance"
            )

    def to_json(self) -> dict:
        return {
            "lambda": [float(v) for v in self.lam],
            "space": self.space.to_json(),
            "r": self.r,
            "lower": self.lower,
            "upper": self.upper,
            "certified": True,
            "method": list(self.provenance),
            "witness": [[float(v) for v in row] for row in self.witness.vectors],
            "family_size": self.witness.size,
        }


def certify_moduli_norm(
    lam,
    space: SpaceSpec,
    kg: float | None = None,
    cap: int | None = None,
    spot_seed: int = 0,
) -> BoundCertificate:
    """Two-sided bounds for || sum_i lambda_i |d_ei| ||.

    Dispatch: p > 2 and p = inf get the sign-matrix witness against the
    Grothendieck-constant upper bound; p <= 2 gets the all-sign witness
    against the triangle upper bound.  The witness constraint is
    re-verified exactly when within enumeration capacity; otherwise the
    construction's feasibility proof stands and a sampled spot check
    guards against implementation slips.  The lower bound is the honest
    ratio objective / constraint (the stored witness is the rescaled
    family), which certifies any sign pattern; for sign-constant lambda
    it is at least the closed-form value ||lambda||_r resp. ||lambda||_1.
    """
    if cap is None:
        cap = default_enum_cap()
    a = _as_lambda(lam, space)
    if not np.any(a):
        witness = FunctionalFamily(np.zeros((1, space.n)), space)
        return BoundCertificate(
            lam=tuple(float(v) for v in a),
            space=space,
            r=None,
            lower=0.0,
            upper=0.0,
            witness=witness,
            provenance=("degenerate-zero",),
        )

    if space.p > 2.0 or space.p == INF:
        family = walsh_witness(a, space)
        r = ell_r_exponent(space.p)
        upper = krivine_upper(a, space, kg)
        provenance = ["walsh-witness", "krivine-upper"]
    else:
        family = allsign_witness(a, space)
        r = None
        upper = triangle_upper(a)
        provenance = ["allsign-witness", "triangle-upper"]

    expr = moduli_expression(a, space.n)
    obj = family_objective(expr, family)
    try:
        c = constraint_norm_exact(family, cap=cap)
        provenance.append("exact-constraint")
        # rescaling the family by 1/c is sound for any c > 0 and
        # tightens the bound whenever the constraint came out below 1
        lower = obj / c
        witness = family.scaled(1.0 / c)
    except CapacityError:
        probe = sample_constraint_lower(family, samples=4096, seed=spot_seed)
        if probe > 1.0 + WIDE_REL_TOL:
            raise CertificationError(
                f"sampled constraint {probe} contradicts the feasibility proof"
            ) from None
        lower = obj
        witness = family
        provenance.append("proof-backed-feasibility")

    return BoundCertificate(
        lam=tuple(float(v) for v in a),
        space=space,
        r=r,
        lower=lower,
        upper=upper,
        witness=witness,
        provenance=tuple(provenance),
    )
