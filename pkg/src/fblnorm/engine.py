"""Certified norm estimation for lattice expressions over l_p^n.

The norm of an expression f is the supremum of sum_k |f(x*_k)| over
finite families (x*_k) of functionals whose constraint

    C(F) = sup_{x in unit ball} sum_k |<x*_k, x>|

is at most one.  The constraint itself reduces to a maximum of dual
norms over sign patterns,

    C(F) = max_{sigma in {-1,+1}^M} || sum_k sigma_k x*_k ||_{p'},

and sigma and -sigma give the same value, so exact evaluation costs
2^(M-1) dual-norm evaluations.  Closed forms shortcut p = 1 (column
sums) and, when cheaper, p = inf (vertex enumeration of the cube).

Everything here is deterministic: given the same inputs and seeds, the
same floats come out, bit for bit, regardless of how work is chunked.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CapacityError,
    CertificationError,
    DegenerateFamilyError,
    DimensionError,
)
from .expressions import LatticeExpr, Abs, Atom, Join, Meet, Scale, Sum, match_moduli_combination
from .spaces import INF, SpaceSpec, dual_exponent, norm, norm_rows
from .tolerances import CERT_EPS, UPPER_SLACK

DEFAULT_ENUM_CAP = 24
_BLOCK_BITS = 13


def default_enum_cap() -> int:
    """Enumeration cap, overridable through FBLNORM_ENUM_CAP."""
    raw = os.environ.get("FBLNORM_ENUM_CAP")
    if raw is None:
        return DEFAULT_ENUM_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise CapacityError(f"FBLNORM_ENUM_CAP must be an integer, got {raw!r}") from None
    if cap < 0:
        raise CapacityError(f"FBLNORM_ENUM_CAP must be nonnegative, got {cap}")
    return cap


@dataclass(frozen=True)
class FunctionalFamily:
    """A finite family of functionals: rows of an (M, n) matrix."""

    vectors: np.ndarray
    space: SpaceSpec

    def __post_init__(self):
        V = np.array(self.vectors, dtype=float, copy=True)
        if V.ndim != 2:
            raise DimensionError(f"family must be a matrix of row functionals, got shape {V.shape}")
        if V.shape[0] < 1:
            raise DimensionError("family needs at least one functional")
        if V.shape[1] != self.space.n:
            raise DimensionError(
                f"functionals have length {V.shape[1]} but the space has dimension {self.space.n}"
            )
        if not np.all(np.isfinite(V)):
            raise DimensionError("family entries must be finite")
        V.flags.writeable = False
        object.__setattr__(self, "vectors", V)

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    def negate(self) -> "FunctionalFamily":
        return FunctionalFamily(-self.vectors, self.space)

    def scaled(self, factor: float) -> "FunctionalFamily":
        return FunctionalFamily(self.vectors * factor, self.space)


@dataclass(frozen=True)
class OptimizerConfig:
    seed: int = 0
    restarts: int = 16
    iterations: int = 200
    initial_step: float = 0.5
    step_decay: float = 0.9
    enumeration_cap: int | None = None
    samples: int = 4096

    def __post_init__(self):
        if self.restarts < 1 or self.iterations < 0:
            raise ValueError("restarts must be >= 1 and iterations >= 0")
        if not (0.0 < self.step_decay <= 1.0) or self.initial_step <= 0.0:
            raise ValueError("initial_step must be positive and step_decay in (0, 1]")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")

    @property
    def cap(self) -> int:
        return default_enum_cap() if self.enumeration_cap is None else self.enumeration_cap


@dataclass(frozen=True)
class NormEstimate:
    """Outcome of a norm computation.

    lower is always a certified value when ``certified`` is set: the
    stored witness family has exact constraint at most 1 + 1e-12 and
    sum_k |f(x*_k)| >= lower on it.  upper, when present, comes from a
    closed-form estimate and must dominate lower up to 1e-9.
    """

    lower: float
    upper: float | None
    witness: FunctionalFamily
    certified: bool
    method: tuple[str, ...]
    constraint: float | None = None
    raw_witness: FunctionalFamily | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.lower < 0.0:
            raise CertificationError(f"negative lower bound {self.lower}")
        if self.upper is not None and self.lower > self.upper + UPPER_SLACK:
            raise CertificationError(
                f"lower bound {self.lower} exceeds upper bound {self.upper} beyond tolerance"
            )
        if self.certified and self.constraint is not None and self.constraint > 1.0 + CERT_EPS:
            raise CertificationError(
                f"certified witness has constraint {self.constraint} > 1 + {CERT_EPS}"
            )

    def to_json(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "certified": self.certified,
            "method": list(self.method),
            "witness": [[float(v) for v in row] for row in self.witness.vectors],
            "space": self.witness.space.to_json(),
            "family_size": self.witness.size,
        }


def _enum_count(free_bits: int) -> int:
    return 1 << free_bits


def constraint_norm_exact(family: FunctionalFamily, cap: int | None = None) -> float:
    """Exact constraint norm by closed form or sign-pattern enumeration.

    Raises CapacityError when every exact route would exceed 2^cap
    dual-norm evaluations; constraint_norm_heuristic is the fallback.
    """
    if cap is None:
        cap = default_enum_cap()
    X = family.vectors
    M, n = X.shape
    p = family.space.p
    if p == 1.0:
        return float(np.abs(X).sum(axis=0).max())
    q = dual_exponent(p)
    pattern_cost = M - 1
    if p == INF:
        vertex_cost = n - 1
        if vertex_cost <= min(pattern_cost, cap):
            return _vertex_max(X, vertex_cost)
        if pattern_cost <= cap:
            return _pattern_max(X, q, pattern_cost)
        raise CapacityError(
            f"exact constraint needs 2^{min(pattern_cost, vertex_cost)} evaluations, "
            f"cap is 2^{cap}; use constraint_norm_heuristic or raise the cap"
        )
    if pattern_cost > cap:
        raise CapacityError(
            f"exact constraint needs 2^{pattern_cost} evaluations, cap is 2^{cap}; "
            "use constraint_norm_heuristic or raise the cap"
        )
    return _pattern_max(X, q, pattern_cost)


def _sign_block(start: int, stop: int, bits: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    cols = (idx[:, None] >> np.arange(bits, dtype=np.int64)) & 1
    return 1.0 - 2.0 * cols.astype(float)


def _pattern_max(X: np.ndarray, q: float, free_bits: int) -> float:
    total = _enum_count(free_bits)
    block = _enum_count(min(free_bits, _BLOCK_BITS))
    best = 0.0
    for start in range(0, total, block):
        S = _sign_block(start, min(start + block, total), free_bits)
        # first functional's sign is pinned to +1; the rest follow the bits
        V = X[0][None, :] + S @ X[1:]
        vals = norm_rows(V, q)
        m = float(vals.max())
        if m > best:
            best = m
    return best


def _vertex_max(X: np.ndarray, free_bits: int) -> float:
    total = _enum_count(free_bits)
    block = _enum_count(min(free_bits, _BLOCK_BITS))
    best = 0.0
    for start in range(0, total, block):
        S = _sign_block(start, min(start + block, total), free_bits)
        # vertices of the sup-norm ball with first coordinate pinned to +1
        V = np.concatenate([np.ones((S.shape[0], 1)), S], axis=1)
        vals = np.abs(V @ X.T).sum(axis=1)
        m = float(vals.max())
        if m > best:
            best = m
    return best


def _greedy_signs(X: np.ndarray, q: float, sigma: np.ndarray, s: np.ndarray, max_sweeps: int = 64):
    """Greedy single-flip ascent on ||sum_k sigma_k x_k||_q.

    sigma and s = sigma @ X are mutated toward a local maximum; every
    visited value belongs to a genuine sign pattern, so the result is a
    true lower bound on the exact constraint.
    """
    cur = norm(s, q)
    for _ in range(max_sweeps):
        A = s[None, :] - (2.0 * sigma)[:, None] * X
        vals = norm_rows(A, q)
        k = int(np.argmax(vals))
        if not vals[k] > cur:
            break
        cur = float(vals[k])
        s = A[k]
        sigma[k] = -sigma[k]
    return cur, sigma, s


_HEURISTIC_ENTROPY = 271828182845


def constraint_norm_heuristic(family: FunctionalFamily, restarts: int = 8) -> float:
    """Deterministic greedy lower bound on the constraint norm.

    Runs greedy sign-flip ascent from the all-ones pattern plus seeded
    random patterns.  Never exceeds the exact value.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    X = family.vectors
    M = X.shape[0]
    p = family.space.p
    if p == 1.0:
        return float(np.abs(X).sum(axis=0).max())
    q = dual_exponent(p)
    best = 0.0
    for r in range(restarts):
        if r == 0:
            sigma = np.ones(M)
        else:
            rng = np.random.default_rng(np.random.SeedSequence(entropy=_HEURISTIC_ENTROPY, spawn_key=(r,)))
            sigma = 1.0 - 2.0 * rng.integers(0, 2, size=M).astype(float)
        s = sigma @ X
        val, _, _ = _greedy_signs(X, q, sigma, s)
        if val > best:
            best = val
    return best


def objective(f: LatticeExpr, family: FunctionalFamily) -> float:
    """sum_k |f(x*_k)| over the family."""
    if f.dim != family.space.n:
        raise DimensionError(f"expression dimension {f.dim} vs space dimension {family.space.n}")
    return float(np.abs(f.evaluate_many(family.vectors)).sum())


def normalized_value(f: LatticeExpr, family: FunctionalFamily, cap: int | None = None) -> float:
    """Objective after rescaling the family to unit constraint norm."""
    c = constraint_norm_exact(family, cap=cap)
    if c == 0.0:
        raise DegenerateFamilyError("family has zero constraint norm; nothing to normalize")
    return objective(f, family) / c


def sample_constraint_lower(family: FunctionalFamily, samples: int = 4096, seed: int = 0) -> float:
    """Monte-Carlo lower bound on the constraint: max over random unit
    vectors of sum_k |<x*_k, x>|.  Deterministic for a fixed seed."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    X = family.vectors
    n = X.shape[1]
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(101,)))
    G = rng.standard_normal((samples, n))
    norms = norm_rows(G, family.space.p)
    live = norms > 0.0
    if not np.any(live):
        return 0.0
    P = G[live] / norms[live, None]
    vals = np.abs(P @ X.T).sum(axis=1)
    return float(vals.max())


class _ScalarFn:
    """Compiled single-point evaluator for the optimizer's hot loop.

    Stacks every atom's coefficient vector into one matrix so a point
    evaluation is a single matrix-vector product followed by a float
    fold over the tree.  Values agree with LatticeExpr.evaluate up to
    (and including) the sign-symmetry used by mirrored runs.
    """

    def __init__(self, f: LatticeExpr):
        rows: list[np.ndarray] = []

        def compile_node(node):
            if isinstance(node, Atom):
                i = len(rows)
                rows.append(node.vector)
                return lambda d: d[i]
            if isinstance(node, Scale):
                c = node.coeff
                g = compile_node(node.child)
                return lambda d: c * g(d)
            if isinstance(node, Abs):
                g = compile_node(node.child)
                return lambda d: abs(g(d))
            if isinstance(node, Sum):
                gs = [compile_node(c) for c in node.children]

                def run_sum(d, gs=gs):
                    t = gs[0](d)
                    for g in gs[1:]:
                        t = t + g(d)
                    return t

                return run_sum
            if isinstance(node, (Join, Meet)):
                gs = [compile_node(c) for c in node.children]
                pick = max if isinstance(node, Join) else min

                def run_lattice(d, gs=gs, pick=pick):
                    return pick(g(d) for g in gs)

                return run_lattice
            raise TypeError(f"not a lattice expression node: {node!r}")

        self._fold = compile_node(f)
        self._A = np.vstack(rows) if rows else np.zeros((0, f.dim))

    def __call__(self, y: np.ndarray) -> float:
        return float(self._fold((self._A @ y).tolist()))


_WITNESS_SEED_LIMIT = 4
_FINALS_SCORED = 4
_TIE_EPS = 1e-12


def _moduli_witness_seeds(f: LatticeExpr, space: SpaceSpec, M: int, cap: int):
    """Analytic starting families when f is a moduli combination."""
    from . import witnesses  # local import; witnesses builds on this module

    lam = match_moduli_combination(f)
    if lam is None or not np.any(lam):
        return []
    seeds = []
    try:
        if space.p > 2.0 or space.p == INF:
            fam = witnesses.walsh_witness(lam, space)
            tag = "walsh-witness"
        else:
            fam = witnesses.allsign_witness(lam, space)
            tag = "allsign-witness"
        if fam.size <= M:
            seeds.append((tag, _pad_rows(fam, M)))
    except (CapacityError, DegenerateFamilyError):
        pass
    # basis seed: unit vectors on the largest-|lambda| coordinates; cheap,
    # feasible for every p, and exact for the single-functional case
    order = np.argsort(-np.abs(lam), kind="stable")
    chosen = [i for i in order[: min(M, int(np.count_nonzero(lam)))] if lam[i] != 0.0]
    if chosen:
        B = np.zeros((M, space.n))
        for row, i in enumerate(chosen):
            B[row, int(i)] = 1.0
        seeds.append(("basis-seed", FunctionalFamily(B, space)))
    return seeds


def _pad_rows(family: FunctionalFamily, M: int) -> FunctionalFamily:
    if family.size == M:
        return family
    pad = np.zeros((M - family.size, family.space.n))
    return FunctionalFamily(np.concatenate([family.vectors, pad]), family.space)


def _check_exact_capacity(space: SpaceSpec, M: int, cap: int):
    if space.p == 1.0:
        return
    pattern_cost = M - 1
    if space.p == INF and space.n - 1 <= cap:
        return
    if pattern_cost > cap:
        raise CapacityError(
            f"optimize_family must score candidates exactly: family size {M} needs "
            f"2^{pattern_cost} evaluations, cap is 2^{cap}; reduce M or raise the cap"
        )


def optimize_family(
    f: LatticeExpr,
    space: SpaceSpec,
    M: int,
    config: OptimizerConfig | None = None,
    *,
    carry: FunctionalFamily | None = None,
    mirror: bool = False,
) -> NormEstimate:
    """Search for a family of M functionals maximizing the certified
    lower bound sum_k |f(x*_k)| / C(F).

    Multi-restart stochastic coordinate ascent: restarts begin at
    analytic witness families (when f is a moduli combination), at the
    carried-in family, or at Gaussian draws; each iteration perturbs one
    entry, scores with a warm-started greedy constraint, and keeps
    improvements; the step decays geometrically.  Every candidate that
    can be reported is re-scored with the exact constraint, so the
    returned lower bound is certified.  Deterministic for a fixed
    config.  ``mirror=True`` negates every random draw, which mirrors
    the whole run; it exists for the pos/neg symmetry checks.

    The carried-in family may have fewer rows; it is padded with zero
    functionals, which changes neither objective nor constraint.
    """
    if config is None:
        config = OptimizerConfig()
    if f.dim != space.n:
        raise DimensionError(f"expression dimension {f.dim} vs space dimension {space.n}")
    if M < 1:
        raise DimensionError("family size must be >= 1")
    cap = config.cap
    _check_exact_capacity(space, M, cap)
    n = space.n
    q = dual_exponent(space.p)
    sgn = -1.0 if mirror else 1.0

    scored: list[tuple[str, float, FunctionalFamily, float]] = []

    def exact_score(tag: str, fam: FunctionalFamily):
        c = constraint_norm_exact(fam, cap=cap)
        if c == 0.0:
            return
        scored.append((tag, objective(f, fam) / c, fam, c))

    seeds = _moduli_witness_seeds(f, space, M, cap)[:_WITNESS_SEED_LIMIT]
    if mirror:
        seeds = [(tag, fam.negate()) for tag, fam in seeds]
    for tag, fam in seeds:
        exact_score(tag, fam)
    seed_floor = max((v for _, v, _, _ in scored), default=0.0)

    start_pool = [fam.vectors for _, fam in seeds]
    if carry is not None:
        if carry.space.n != n:
            raise DimensionError("carried family lives in a different dimension")
        if carry.size <= M:
            padded = _pad_rows(carry, M)
            exact_score("sweep-carry", padded)
            start_pool.append(padded.vectors)

    fast_f = _ScalarFn(f)

    finals: list[tuple[float, int, np.ndarray]] = []
    for r in range(config.restarts):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=config.seed, spawn_key=(r,)))
        start_noise = rng.standard_normal((M, n))
        if r < len(start_pool):
            Y = start_pool[r].copy()
        else:
            Y = sgn * start_noise
        coords = rng.integers(0, M * n, size=config.iterations)
        deltas = sgn * rng.standard_normal(config.iterations)

        sigma = np.ones(M)
        s = sigma @ Y
        c_h, sigma, s = _greedy_signs(Y, q, sigma, s)
        rowvals = np.abs(f.evaluate_many(Y))
        obj = float(rowvals.sum())
        val = obj / c_h if c_h > 0.0 else 0.0

        step = config.initial_step
        for i in range(config.iterations):
            k, j = divmod(int(coords[i]), n)
            old = Y[k, j]
            Y[k, j] = old + step * deltas[i]
            new_row = abs(fast_f(Y[k]))
            obj2 = obj - float(rowvals[k]) + new_row
            sigma2 = sigma.copy()
            s2 = s.copy()
            s2[j] += sigma[k] * (Y[k, j] - old)
            c2, sigma2, s2 = _greedy_signs(Y, q, sigma2, s2, max_sweeps=8)
            val2 = obj2 / c2 if c2 > 0.0 else 0.0
            if val2 > val:
                val, obj = val2, obj2
                rowvals[k] = new_row
                sigma, s = sigma2, s2
            else:
                Y[k, j] = old
            step *= config.step_decay
        finals.append((val, r, Y))

    finals.sort(key=lambda t: (-t[0], t[1]))
    for val, r, Y in finals[:_FINALS_SCORED]:
        exact_score("optimizer", FunctionalFamily(Y, space))

    if not scored:
        raise DegenerateFamilyError("every candidate family had zero constraint norm")

    # Selection: the reported lower bound is the selected candidate's own
    # exact value, so ties may only be broken among candidates that both
    # sit within _TIE_EPS of the maximum and do not undercut any seed
    # witness; among those, prefer the smallest family (sum of squared
    # entries), then earliest candidate.
    vmax = max(v for _, v, _, _ in scored)
    floor = max(vmax - _TIE_EPS, seed_floor)
    best_idx = None
    best_key = None
    for i, (_, v, fam, _) in enumerate(scored):
        if v < floor:
            continue
        key = (float(np.sum(fam.vectors**2)), i)
        if best_key is None or key < best_key:
            best_idx = i
            best_key = key
    if best_idx is None:
        raise CertificationError(
            f"optimizer lost a seed witness: max value {vmax} below seed floor {seed_floor}"
        )

    tag, value, fam, c_raw = scored[best_idx]
    witness = fam.scaled(1.0 / c_raw)
    c_final = constraint_norm_exact(witness, cap=cap)

    upper = None
    method = [tag]
    lam = match_moduli_combination(f)
    if lam is not None and np.any(lam):
        from . import witnesses

        if space.p > 2.0 or space.p == INF:
            upper = witnesses.krivine_upper(lam, space)
            method.append("krivine-upper")
        else:
            upper = witnesses.triangle_upper(lam)
            method.append("triangle-upper")

    return NormEstimate(
        lower=value,
        upper=upper,
        witness=witness,
        certified=True,
        method=tuple(method),
        constraint=c_final,
        raw_witness=fam,
    )


def lower_bound_sweep(
    f: LatticeExpr,
    space: SpaceSpec,
    sizes,
    config: OptimizerConfig | None = None,
) -> list[NormEstimate]:
    """Run optimize_family over nondecreasing family sizes, carrying the
    best raw family forward (padded with zero rows) so the sequence of
    lower bounds is nondecreasing.  Reports empirical stabilization
    only; no claim that the supremum is attained at any finite size.
    """
    sizes = list(sizes)
    if not sizes:
        return []
    if any(b < a for a, b in zip(sizes, sizes[1:])):
        raise ValueError(f"family sizes must be nondecreasing, got {sizes}")
    out: list[NormEstimate] = []
    carry: FunctionalFamily | None = None
    for M in sizes:
        est = optimize_family(f, space, M, config, carry=carry)
        carry = est.raw_witness
        out.append(est)
    return out
