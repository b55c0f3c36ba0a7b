"""Verification suites behind the verify-paper command.

Each suite checks one family of claims on a seeded grid and reports the
number of checks, the worst slack, and full inputs for every failing
cell.  Slack is normalized so that a value <= 0 passes: for an
inequality bound it is (measured - allowed), for an equality it is
|difference| minus the scaled tolerance, and for checks that must hold
exactly it is the raw deviation.

Grid cells are pure functions of their description tuple, so they can
be dispatched to a process pool; results are reassembled in grid order
and are byte-identical for any worker count.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .engine import (
    FunctionalFamily,
    OptimizerConfig,
    constraint_norm_exact,
    lower_bound_sweep,
    objective,
    optimize_family,
    sample_constraint_lower,
)
from .errors import SpecFileError
from .expressions import (
    Abs,
    Atom,
    Join,
    Meet,
    Scale,
    Sum,
    format_expr,
    generator,
    neg_part,
    pos_part,
)
from .experiments import ReportRow, parallel_map, rows_to_csv_text
from .parser import parse
from .spaces import INF, SpaceSpec, ell_r_exponent, norm
from .witnesses import (
    KRIVINE_GROTHENDIECK,
    certify_moduli_norm,
    moduli_expression,
    triangle_upper,
    walsh_matrix,
    walsh_witness,
)

HIGH_EXPONENTS = (2.5, 3.0, 4.0, 10.0, INF)
LOW_EXPONENTS = (1.0, 1.5, 2.0)
COEFF_COUNTS = (2, 4, 8, 16)
DRAWS_PER_CELL = 20
PINNING_COUNTS = (1, 2, 3, 4)
PINNING_L1_EXTRA = (8, 12, 16)
PINNING_DRAWS = 10
MIRROR_PAIRS = 100
ADVERSARIAL_RUNS = 1000
ORACLE_FAMILIES = 200
ORACLE_SAMPLES = 100_000

SUITE_ORDER = (
    "walsh-feasibility",
    "walsh-objective",
    "sandwich",
    "ell1-pinning",
    "mirror-symmetry",
    "falsification",
    "oracle-equivalence",
    "structural",
    "reproducibility",
)

DEFAULT_TOLERANCES = {
    "feasibility": 1e-12,
    "objective": 1e-12,
    "sandwich": 1e-9,
    "pinning": 1e-9,
    "mirror": 1e-12,
    "falsification": 1e-9,
    "oracle": 1e-12,
    "structural": 1e-12,
}

_FAILURE_DETAIL_LIMIT = 20

# spawn-key domains; distinct first entries keep every stream independent
_DOM_GRID = 11
_DOM_MIRROR = 12
_DOM_ADVERSARIAL = 13
_DOM_ORACLE = 17
_DOM_STRUCT = 19
_DOM_PINNING = 23
_DOM_OPT = 31


@dataclass
class VerifyOptions:
    seed: int = 42
    kg: float | None = None
    workers: int = 1
    suites: tuple[str, ...] | None = None
    tolerances: dict = field(default_factory=dict)
    timing: bool = False

    def resolved_kg(self) -> float:
        return KRIVINE_GROTHENDIECK if self.kg is None else float(self.kg)

    def tol(self, name: str) -> float:
        merged = dict(DEFAULT_TOLERANCES)
        for key, value in self.tolerances.items():
            if key not in DEFAULT_TOLERANCES:
                raise SpecFileError(
                    f"unknown tolerance {key!r}; known: {', '.join(sorted(DEFAULT_TOLERANCES))}"
                )
            merged[key] = float(value)
        return merged[name]


@dataclass
class SuiteResult:
    name: str
    checks: int
    failures: list[dict]
    failure_count: int
    worst_slack: float
    rows: list[ReportRow]
    notes: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.failure_count == 0

    def to_json(self, timing: bool = False) -> dict:
        out = {
            "name": self.name,
            "checks": self.checks,
            "failures": self.failures,
            "failure_count": self.failure_count,
            "worst_slack": self.worst_slack,
            "passed": self.passed,
            "notes": self.notes,
        }
        if timing:
            out["seconds"] = round(self.seconds, 3)
        return out


@dataclass
class VerifyReport:
    seed: int
    kg: float
    tolerances: dict
    suites: list[SuiteResult]
    rows: list[ReportRow]
    timing: bool = False

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.suites)

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "kg": self.kg,
            "tolerances": self.tolerances,
            "passed": self.passed,
            "cells": len(self.rows),
            "suites": [s.to_json(timing=self.timing) for s in self.suites],
        }


def _derive_seed(seed: int, *key: int) -> int:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return int(ss.generate_state(1, np.uint64)[0])


def _grid_lambda(seed: int, domain: int, pi: int, mi: int, t: int, m: int,
                 low: float = 0.1, high: float = 2.0) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(domain, pi, mi, t)))
    return rng.uniform(low, high, m)


def _merge_cells(outs):
    rows: list[ReportRow] = []
    failures: list[dict] = []
    worst = -math.inf
    checks = 0
    fail_count = 0
    for cell_rows, cell_fails, cell_worst, cell_checks in outs:
        rows.extend(cell_rows)
        fail_count += len(cell_fails)
        for f in cell_fails:
            if len(failures) < _FAILURE_DETAIL_LIMIT:
                failures.append(f)
        worst = max(worst, cell_worst)
        checks += cell_checks
    if not math.isfinite(worst):
        worst = 0.0
    return rows, failures, fail_count, worst, checks


def _fail(suite: str, case: str, slack: float, **inputs) -> dict:
    clean = {}
    for key, value in inputs.items():
        if isinstance(value, np.ndarray):
            clean[key] = [float(v) for v in value]
        elif isinstance(value, (np.floating, np.integer)):
            clean[key] = value.item()
        elif isinstance(value, tuple):
            clean[key] = list(value)
        else:
            clean[key] = value
    return {"suite": suite, "case": case, "slack": slack, "inputs": clean}


# --------------------------------------------------------------------------
# walsh witness suites (feasibility and objective identity)


def _feasibility_cell(args):
    seed, pi, mi, p, m, tol = args
    rows, fails, worst, checks = [], [], -math.inf, 0
    r = ell_r_exponent(p)
    space = SpaceSpec(m, p)
    for t in range(DRAWS_PER_CELL):
        lam = _grid_lambda(seed, _DOM_GRID, pi, mi, t, m)
        fam = walsh_witness(lam, space)
        c = constraint_norm_exact(fam)
        slack = c - (1.0 + tol)
        checks += 1
        worst = max(worst, slack)
        if slack > 0.0:
            fails.append(_fail(
                "walsh-feasibility", f"constraint {c!r} above 1 + {tol!r}",
                slack, seed=seed, p=p, m=m, draw=t, lam=lam, constraint=c,
            ))
        rows.append(ReportRow(
            experiment="walsh-feasibility", p=p, n=m, m=fam.size,
            lam=tuple(lam), r=r, lower=c, upper=1.0, certified=True,
            method="walsh-witness",
        ))
    return rows, fails, worst, checks


def _objective_cell(args):
    seed, pi, mi, p, m, tol = args
    rows, fails, worst, checks = [], [], -math.inf, 0
    r = ell_r_exponent(p)
    space = SpaceSpec(m, p)
    for t in range(DRAWS_PER_CELL):
        lam = _grid_lambda(seed, _DOM_GRID, pi, mi, t, m)
        fam = walsh_witness(lam, space)
        obj = objective(moduli_expression(lam, m), fam)
        want = norm(lam, r)
        slack = abs(obj - want) - tol * (1.0 + want)
        checks += 1
        worst = max(worst, slack)
        if slack > 0.0:
            fails.append(_fail(
                "walsh-objective", f"objective {obj!r} differs from target {want!r}",
                slack, seed=seed, p=p, m=m, draw=t, lam=lam,
            ))
        rows.append(ReportRow(
            experiment="walsh-objective", p=p, n=m, m=fam.size,
            lam=tuple(lam), r=r, lower=obj, upper=want, certified=True,
            method="walsh-witness",
        ))
    return rows, fails, worst, checks


def _grid_cells(seed: int, tol: float):
    return [
        (seed, pi, mi, p, m, tol)
        for pi, p in enumerate(HIGH_EXPONENTS)
        for mi, m in enumerate(COEFF_COUNTS)
    ]


def _suite_walsh_feasibility(options: VerifyOptions, ctx: dict) -> SuiteResult:
    cells = _grid_cells(options.seed, options.tol("feasibility"))
    outs = parallel_map(_feasibility_cell, cells, options.workers)
    rows, failures, fail_count, worst, checks = _merge_cells(outs)
    return SuiteResult("walsh-feasibility", checks, failures, fail_count, worst, rows)


def _suite_walsh_objective(options: VerifyOptions, ctx: dict) -> SuiteResult:
    cells = _grid_cells(options.seed, options.tol("objective"))
    outs = parallel_map(_objective_cell, cells, options.workers)
    rows, failures, fail_count, worst, checks = _merge_cells(outs)
    return SuiteResult("walsh-objective", checks, failures, fail_count, worst, rows)


# --------------------------------------------------------------------------
# sandwich suite: optimizer lower bound between the two closed forms


def _sandwich_cell(args):
    seed, pi, mi, t, p, m, kg, tol = args
    lam = _grid_lambda(seed, _DOM_GRID, pi, mi, t, m)
    space = SpaceSpec(m, p)
    r = ell_r_exponent(p)
    want = norm(lam, r)
    cfg = OptimizerConfig(seed=_derive_seed(seed, _DOM_OPT, pi, mi, t))
    est = optimize_family(moduli_expression(lam, m), space, m, cfg)
    hi = kg * want + tol
    lo = want - tol
    slack = max(lo - est.lower, est.lower - hi)
    fails = []
    if slack > 0.0:
        side = "below the witness value" if est.lower < lo else "above the closed-form ceiling"
        fails.append(_fail(
            "sandwich", f"certified lower {est.lower!r} {side}",
            slack, seed=seed, p=p, m=m, draw=t, lam=lam,
            target=want, ceiling=hi, method="+".join(est.method),
        ))
    row = ReportRow(
        experiment="sandwich", p=p, n=m, m=m, lam=tuple(lam), r=r,
        lower=est.lower, upper=est.upper if est.upper is not None else kg * want,
        certified=est.certified, method="+".join(est.method),
    )
    bound = (p, m, t, est.lower, want)
    return [row], fails, slack, 1, bound


def _sandwich_cells(options: VerifyOptions):
    return [
        (options.seed, pi, mi, t, p, m, options.resolved_kg(), options.tol("sandwich"))
        for pi, p in enumerate(HIGH_EXPONENTS)
        for mi, m in enumerate(COEFF_COUNTS)
        for t in range(DRAWS_PER_CELL)
    ]


def _suite_sandwich(options: VerifyOptions, ctx: dict) -> SuiteResult:
    cells = _sandwich_cells(options)
    outs = parallel_map(_sandwich_cell, cells, options.workers)
    ctx["sandwich_bounds"] = [out[4] for out in outs]
    rows, failures, fail_count, worst, checks = _merge_cells([out[:4] for out in outs])
    return SuiteResult("sandwich", checks, failures, fail_count, worst, rows)


# --------------------------------------------------------------------------
# low-exponent pinning: lower = upper = l1 norm


def _pinning_cell(args):
    seed, pi, mi, p, m, tol = args
    rows, fails, worst, checks = [], [], -math.inf, 0
    space = SpaceSpec(m, p)
    for t in range(PINNING_DRAWS):
        lam = _grid_lambda(seed, _DOM_PINNING, pi, mi, t, m)
        cert = certify_moduli_norm(lam, space)
        want = triangle_upper(lam)
        slack = max(
            abs(cert.lower - want) - tol * (1.0 + want),
            abs(cert.upper - want) - tol * (1.0 + want),
        )
        checks += 1
        worst = max(worst, slack)
        if slack > 0.0:
            fails.append(_fail(
                "ell1-pinning",
                f"bounds ({cert.lower!r}, {cert.upper!r}) not pinned to {want!r}",
                slack, seed=seed, p=p, m=m, draw=t, lam=lam,
                method="+".join(cert.provenance),
            ))
        rows.append(ReportRow(
            experiment="ell1-pinning", p=p, n=m, m=cert.witness.size,
            lam=tuple(lam), r=None, lower=cert.lower, upper=cert.upper,
            certified=True, method="+".join(cert.provenance),
        ))
    return rows, fails, worst, checks


def _suite_pinning(options: VerifyOptions, ctx: dict) -> SuiteResult:
    tol = options.tol("pinning")
    cells = [
        (options.seed, pi, mi, p, m, tol)
        for pi, p in enumerate(LOW_EXPONENTS)
        for mi, m in enumerate(PINNING_COUNTS)
    ]
    cells += [
        (options.seed, 0, len(PINNING_COUNTS) + mi, 1.0, m, tol)
        for mi, m in enumerate(PINNING_L1_EXTRA)
    ]
    outs = parallel_map(_pinning_cell, cells, options.workers)
    rows, failures, fail_count, worst, checks = _merge_cells(outs)
    return SuiteResult("ell1-pinning", checks, failures, fail_count, worst, rows)


# --------------------------------------------------------------------------
# mirror symmetry: pos/neg parts against the negated family


_MIRROR_EXPONENTS = (1.0, 1.5, 2.0, 2.5, 4.0, INF)


def _mirror_cell(args):
    seed, t, tol = args
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(_DOM_MIRROR, t)))
    n = 2 + t % 3
    M = 1 + t % 6
    p = _MIRROR_EXPONENTS[t % len(_MIRROR_EXPONENTS)]
    space = SpaceSpec(n, p)
    lam = rng.uniform(-2.0, 2.0, n)
    f = Sum([Scale(float(lam[i]), generator(i + 1, n)) for i in range(n)])
    pos = pos_part(f)
    neg = neg_part(f)
    fam = FunctionalFamily(rng.standard_normal((M, n)), space)

    fails, worst, checks = [], -math.inf, 0

    a = objective(pos, fam)
    b = objective(neg, fam.negate())
    slack = abs(a - b)
    checks += 1
    worst = max(worst, slack)
    if slack > 0.0:
        fails.append(_fail(
            "mirror-symmetry", f"objectives {a!r} and {b!r} differ",
            slack, seed=seed, pair=t, p=p, n=n, m=M, lam=lam,
            vectors=[[float(v) for v in row] for row in fam.vectors],
        ))

    c1 = constraint_norm_exact(fam)
    c2 = constraint_norm_exact(fam.negate())
    slack = abs(c1 - c2)
    checks += 1
    worst = max(worst, slack)
    if slack > 0.0:
        fails.append(_fail(
            "mirror-symmetry", f"constraints {c1!r} and {c2!r} differ",
            slack, seed=seed, pair=t, p=p, n=n, m=M,
            vectors=[[float(v) for v in row] for row in fam.vectors],
        ))

    cfg = OptimizerConfig(seed=_derive_seed(seed, _DOM_MIRROR, t, 1), restarts=2, iterations=40)
    e1 = optimize_family(pos, space, M, cfg)
    e2 = optimize_family(neg, space, M, cfg, mirror=True)
    slack = abs(e1.lower - e2.lower) - tol * (1.0 + max(abs(e1.lower), abs(e2.lower)))
    checks += 1
    worst = max(worst, slack)
    if slack > 0.0:
        fails.append(_fail(
            "mirror-symmetry",
            f"mirrored optimizer bounds {e1.lower!r} and {e2.lower!r} differ",
            slack, seed=seed, pair=t, p=p, n=n, m=M, lam=lam,
        ))

    row = ReportRow(
        experiment="mirror-symmetry", p=p, n=n, m=M, lam=tuple(lam), r=None,
        lower=e1.lower, upper=None, certified=e1.certified, method="mirror-pair",
    )
    return [row], fails, worst, checks


def _suite_mirror(options: VerifyOptions, ctx: dict) -> SuiteResult:
    tol = options.tol("mirror")
    cells = [(options.seed, t, tol) for t in range(MIRROR_PAIRS)]
    outs = parallel_map(_mirror_cell, cells, options.workers)
    rows, failures, fail_count, worst, checks = _merge_cells(outs)
    return SuiteResult("mirror-symmetry", checks, failures, fail_count, worst, rows)


# --------------------------------------------------------------------------
# falsification: no certified lower bound may beat the closed-form ceiling


_ADVERSARIAL_BLOCK = 50


def _adversarial_cell(args):
    seed, block, kg, tol = args
    rows, fails, worst, checks = [], [], -math.inf, 0
    for j in range(_ADVERSARIAL_BLOCK):
        t = block * _ADVERSARIAL_BLOCK + j
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(_DOM_ADVERSARIAL, t)))
        p = HIGH_EXPONENTS[t % len(HIGH_EXPONENTS)]
        m = 2 + t % 2
        lam = rng.uniform(-2.0, 2.0, m)
        while not np.any(lam):
            lam = rng.uniform(-2.0, 2.0, m)
        r = ell_r_exponent(p)
        want = norm(lam, r)
        cfg = OptimizerConfig(
            seed=_derive_seed(seed, _DOM_ADVERSARIAL, t, 1),
            restarts=2, iterations=60, initial_step=1.0,
        )
        est = optimize_family(moduli_expression(lam, m), SpaceSpec(m, p), m, cfg)
        ceiling = kg * want + tol
        slack = est.lower - ceiling
        checks += 1
        worst = max(worst, slack)
        if slack > 0.0:
            fails.append(_fail(
                "falsification",
                f"adversarial run produced certified lower {est.lower!r} above {ceiling!r}",
                slack, seed=seed, run=t, p=p, m=m, lam=lam,
                method="+".join(est.method),
            ))
        rows.append(ReportRow(
            experiment="falsification", p=p, n=m, m=m, lam=tuple(lam), r=r,
            lower=est.lower, upper=kg * want, certified=est.certified,
            method="+".join(est.method),
        ))
    return rows, fails, worst, checks


def _suite_falsification(options: VerifyOptions, ctx: dict) -> SuiteResult:
    kg = options.resolved_kg()
    tol = options.tol("falsification")

    bounds = ctx.get("sandwich_bounds")
    if bounds is None:
        outs = parallel_map(_sandwich_cell, _sandwich_cells(options), options.workers)
        bounds = [out[4] for out in outs]

    failures, fail_count, worst, checks = [], 0, -math.inf, 0
    for p, m, t, lower, want in bounds:
        slack = lower - (kg * want + tol)
        checks += 1
        worst = max(worst, slack)
        if slack > 0.0:
            fail_count += 1
            if len(failures) < _FAILURE_DETAIL_LIMIT:
                failures.append(_fail(
                    "falsification",
                    f"grid run certified lower {lower!r} above {(kg * want + tol)!r}",
                    slack, seed=options.seed, p=p, m=m, draw=t, target=want,
                ))

    blocks = ADVERSARIAL_RUNS // _ADVERSARIAL_BLOCK
    cells = [(options.seed, b, kg, tol) for b in range(blocks)]
    outs = parallel_map(_adversarial_cell, cells, options.workers)
    rows, adv_failures, adv_count, adv_worst, adv_checks = _merge_cells(outs)
    for f in adv_failures:
        if len(failures) < _FAILURE_DETAIL_LIMIT:
            failures.append(f)
    fail_count += adv_count
    worst = max(worst, adv_worst)
    checks += adv_checks
    notes = {"grid_bounds": len(bounds), "adversarial_runs": adv_checks}
    return SuiteResult("falsification", checks, failures, fail_count, worst, rows, notes)


# --------------------------------------------------------------------------
# oracle equivalence: sampling never beats enumeration; closed form matches


_ORACLE_EXPONENTS = (1.0, 1.5, 2.0, 3.0, INF)


def _oracle_cell(args):
    seed, t, tol = args
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(_DOM_ORACLE, t)))
    p = _ORACLE_EXPONENTS[t % len(_ORACLE_EXPONENTS)]
    M = 1 + int(rng.integers(10))
    n = 1 + int(rng.integers(4))
    X = rng.standard_normal((M, n))
    fam = FunctionalFamily(X, SpaceSpec(n, p))
    exact = constraint_norm_exact(fam)
    sampled = sample_constraint_lower(fam, samples=ORACLE_SAMPLES, seed=_derive_seed(seed, _DOM_ORACLE, t, 1))
    fails, worst, checks = [], -math.inf, 0

    slack = sampled - exact - tol * (1.0 + exact)
    checks += 1
    worst = max(worst, slack)
    if slack > 0.0:
        fails.append(_fail(
            "oracle-equivalence",
            f"sampled value {sampled!r} above exact value {exact!r}",
            slack, seed=seed, family=t, p=p, n=n, m=M,
            vectors=[[float(v) for v in row] for row in X],
        ))

    method = "sampled<=exact"
    if p == 1.0:
        K = 1 << (M - 1)
        bits = (np.arange(K, dtype=np.uint32)[:, None] >> np.arange(M - 1, dtype=np.uint32)[None, :]) & 1
        S = np.hstack([np.ones((K, 1)), 1.0 - 2.0 * bits.astype(float)])
        V = (S[:, :, None] * X[None, :, :]).sum(axis=1)
        enum = float(np.abs(V).max()) if V.size else 0.0
        slack = abs(enum - exact)
        checks += 1
        worst = max(worst, slack)
        if slack > 0.0:
            fails.append(_fail(
                "oracle-equivalence",
                f"closed form {exact!r} differs from sign enumeration {enum!r}",
                slack, seed=seed, family=t, p=p, n=n, m=M,
                vectors=[[float(v) for v in row] for row in X],
            ))
        method = "sampled<=exact+closed==enumeration"

    row = ReportRow(
        experiment="oracle-equivalence", p=p, n=n, m=M, lam=None, r=None,
        lower=sampled, upper=exact, certified=False, method=method,
    )
    return [row], fails, worst, checks


def _suite_oracle(options: VerifyOptions, ctx: dict) -> SuiteResult:
    tol = options.tol("oracle")
    cells = [(options.seed, t, tol) for t in range(ORACLE_FAMILIES)]
    outs = parallel_map(_oracle_cell, cells, options.workers)
    rows, failures, fail_count, worst, checks = _merge_cells(outs)
    return SuiteResult("oracle-equivalence", checks, failures, fail_count, worst, rows)


# --------------------------------------------------------------------------
# structural identities


def _random_expr(rng, n: int, depth: int):
    if depth == 0 or rng.random() < 0.3:
        kind = int(rng.integers(3))
        vec = rng.standard_normal(n)
        if kind == 0:
            return Atom(vec)
        if kind == 1:
            return Scale(float(rng.standard_normal()), Atom(vec))
        return Abs(Atom(vec))
    kind = int(rng.integers(5))
    if kind == 0:
        # a one-child sum has no surface syntax, so keep sums binary or wider
        width = int(rng.integers(2, 4))
        return Sum([_random_expr(rng, n, depth - 1) for _ in range(width)])
    if kind == 1:
        return Join(_random_expr(rng, n, depth - 1), _random_expr(rng, n, depth - 1))
    if kind == 2:
        return Meet(_random_expr(rng, n, depth - 1), _random_expr(rng, n, depth - 1))
    if kind == 3:
        return Abs(_random_expr(rng, n, depth - 1))
    return Scale(float(rng.standard_normal()), _random_expr(rng, n, depth - 1))


def _structural_homogeneity(rng, tol):
    worst, fails = -math.inf, []
    for i in range(200):
        n = 2 + i % 3
        e = _random_expr(rng, n, 2)
        x = rng.standard_normal(n)
        c = float(rng.uniform(0.1, 3.0))
        lhs = e.evaluate(c * x)
        rhs = c * e.evaluate(x)
        slack = abs(lhs - rhs) - tol * (1.0 + abs(rhs))
        worst = max(worst, slack)
        if slack > 0.0:
            fails.append(_fail(
                "structural", "positive homogeneity violated",
                slack, sample=i, n=n, scale=c, expr=format_expr(e), point=x,
            ))
    return worst, fails, 200


def _structural_lattice_identities(rng, tol):
    worst, fails, checks = -math.inf, [], 0
    for i in range(100):
        n = 2 + i % 3
        f = _random_expr(rng, n, 2)
        g = _random_expr(rng, n, 2)
        X = rng.standard_normal((20, n))
        va = Abs(f).evaluate_many(X)
        vb = Join(f, Scale(-1.0, f)).evaluate_many(X)
        slack = float(np.max(np.abs(va - vb))) if va.size else 0.0
        checks += 1
        worst = max(worst, slack)
        if slack > 0.0:
            fails.append(_fail(
                "structural", "absolute value is not the join with the negation",
                slack, sample=i, n=n, expr=format_expr(f),
            ))
        vc = Meet(f, g).evaluate_many(X)
        vd = -Join(Scale(-1.0, f), Scale(-1.0, g)).evaluate_many(X)
        slack = float(np.max(np.abs(vc - vd))) if vc.size else 0.0
        checks += 1
        worst = max(worst, slack)
        if slack > 0.0:
            fails.append(_fail(
                "structural", "meet does not match the dual join identity",
                slack, sample=i, n=n, expr_f=format_expr(f), expr_g=format_expr(g),
            ))
    return worst, fails, checks


def _structural_walsh():
    worst, fails, checks = -math.inf, [], 0
    for k in range(7):
        W = walsh_matrix(k)
        G = W.entries.astype(np.int64) @ W.entries.astype(np.int64).T
        dev = int(np.abs(G - (1 << k) * np.eye(1 << k, dtype=np.int64)).max())
        checks += 1
        worst = max(worst, float(dev))
        if dev:
            fails.append(_fail(
                "structural", "orthogonality defect in the sign matrix",
                float(dev), k=k,
            ))
    return worst, fails, checks


def _structural_sweep(seed):
    lam = np.array([1.0, 0.6, 0.3])
    space = SpaceSpec(3, 4.0)
    cfg = OptimizerConfig(seed=_derive_seed(seed, _DOM_STRUCT, 4), restarts=4, iterations=60)
    ests = lower_bound_sweep(moduli_expression(lam, 3), space, [1, 2, 4, 6], cfg)
    lowers = [e.lower for e in ests]
    worst, fails = -math.inf, []
    for a, b in zip(lowers, lowers[1:]):
        slack = a - b
        worst = max(worst, slack)
    if worst > 0.0:
        fails.append(_fail(
            "structural", "sweep lower bounds decreased",
            worst, seed=seed, lowers=[float(v) for v in lowers],
        ))
    return worst, fails, len(lowers) - 1


def _structural_permutation(rng, tol):
    worst, fails, checks = -math.inf, [], 0
    exponents = (1.0, 1.5, 2.0, 3.0, INF)
    for i in range(50):
        n = 2 + i % 4
        M = 1 + i % 5
        p = exponents[i % len(exponents)]
        X = rng.standard_normal((M, n))
        perm = rng.permutation(n)
        space = SpaceSpec(n, p)
        c1 = constraint_norm_exact(FunctionalFamily(X, space))
        c2 = constraint_norm_exact(FunctionalFamily(X[:, perm], space))
        slack = abs(c1 - c2) - tol * (1.0 + abs(c1))
        checks += 1
        worst = max(worst, slack)
        if slack > 0.0:
            fails.append(_fail(
                "structural", "constraint changed under a coordinate permutation",
                slack, sample=i, p=p, n=n, m=M, perm=[int(v) for v in perm],
                vectors=[[float(v) for v in row] for row in X],
            ))
        lam = rng.uniform(0.1, 2.0, n)
        o1 = objective(moduli_expression(lam, n), FunctionalFamily(X, space))
        o2 = objective(moduli_expression(lam[perm], n), FunctionalFamily(X[:, perm], space))
        slack = abs(o1 - o2) - tol * (1.0 + abs(o1))
        checks += 1
        worst = max(worst, slack)
        if slack > 0.0:
            fails.append(_fail(
                "structural", "objective changed under a coordinate permutation",
                slack, sample=i, p=p, n=n, m=M, lam=lam,
                perm=[int(v) for v in perm],
            ))
    return worst, fails, checks


def _structural_roundtrip(rng):
    worst, fails, checks = -math.inf, [], 0
    for i in range(50):
        n = 2 + i % 3
        e = _random_expr(rng, n, 2)
        text = format_expr(e)
        e2 = parse(text)
        X = rng.standard_normal((20, n))
        if e2 != e:
            fails.append(_fail(
                "structural", "parsed expression differs structurally from the original",
                1.0, sample=i, text=text,
            ))
            worst = max(worst, 1.0)
        va = e.evaluate_many(X)
        vb = e2.evaluate_many(X)
        slack = float(np.max(np.abs(va - vb))) if va.size else 0.0
        checks += 2
        worst = max(worst, slack)
        if slack > 0.0:
            fails.append(_fail(
                "structural", "parsed expression evaluates differently",
                slack, sample=i, text=text,
            ))
    return worst, fails, checks


def _structural_cell(args):
    seed, tol = args
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(_DOM_STRUCT, 0)))
    rows, fails, worst, checks = [], [], -math.inf, 0
    parts = [
        ("homogeneity", _structural_homogeneity(rng, tol)),
        ("lattice-identities", _structural_lattice_identities(rng, tol)),
        ("walsh-orthogonality", _structural_walsh()),
        ("sweep-monotonicity", _structural_sweep(seed)),
        ("permutation-invariance", _structural_permutation(rng, tol)),
        ("parser-roundtrip", _structural_roundtrip(rng)),
    ]
    for name, (part_worst, part_fails, part_checks) in parts:
        fails.extend(part_fails)
        worst = max(worst, part_worst)
        checks += part_checks
        rows.append(ReportRow(
            experiment="structural", p=2.0, n=0, m=part_checks, lam=None, r=None,
            lower=part_worst, upper=tol, certified=False, method=name,
        ))
    return rows, fails, worst, checks


def _suite_structural(options: VerifyOptions, ctx: dict) -> SuiteResult:
    cells = [(options.seed, options.tol("structural"))]
    outs = parallel_map(_structural_cell, cells, options.workers)
    rows, failures, fail_count, worst, checks = _merge_cells(outs)
    return SuiteResult("structural", checks, failures, fail_count, worst, rows)


# --------------------------------------------------------------------------
# reproducibility: identical reruns, identical under a worker pool


def _suite_reproducibility(options: VerifyOptions, ctx: dict) -> SuiteResult:
    tol = options.tol("feasibility")
    cells = _grid_cells(options.seed, tol)

    def render(outs) -> str:
        rows, _, _, _, _ = _merge_cells(outs)
        return rows_to_csv_text(rows)

    text_serial_1 = render([_feasibility_cell(c) for c in cells])
    text_serial_2 = render([_feasibility_cell(c) for c in cells])
    text_pooled = render(parallel_map(_feasibility_cell, cells, 2))

    failures, fail_count, checks = [], 0, 0
    checks += 1
    if text_serial_1 != text_serial_2:
        fail_count += 1
        failures.append(_fail(
            "reproducibility", "two serial reruns rendered different bytes",
            1.0, seed=options.seed,
        ))
    checks += 1
    if text_serial_1 != text_pooled:
        fail_count += 1
        failures.append(_fail(
            "reproducibility", "pooled run rendered different bytes than the serial run",
            1.0, seed=options.seed, workers=2,
        ))

    lam = np.array([1.3, 0.7, 0.4, 1.1])
    cfg = OptimizerConfig(seed=_derive_seed(options.seed, _DOM_STRUCT, 9), restarts=4, iterations=80)
    e1 = optimize_family(moduli_expression(lam, 4), SpaceSpec(4, 3.0), 4, cfg)
    e2 = optimize_family(moduli_expression(lam, 4), SpaceSpec(4, 3.0), 4, cfg)
    checks += 1
    same = e1.lower == e2.lower and np.array_equal(e1.witness.vectors, e2.witness.vectors)
    if not same:
        fail_count += 1
        failures.append(_fail(
            "reproducibility", "optimizer rerun with the same seed diverged",
            abs(e1.lower - e2.lower), seed=options.seed, lam=lam,
        ))

    worst = 0.0 if fail_count == 0 else 1.0
    notes = {"csv_bytes": len(text_serial_1), "grid_cells": len(cells)}
    return SuiteResult("reproducibility", checks, failures, fail_count, worst, [], notes)


# --------------------------------------------------------------------------
# orchestration


_SUITES = {
    "walsh-feasibility": _suite_walsh_feasibility,
    "walsh-objective": _suite_walsh_objective,
    "sandwich": _suite_sandwich,
    "ell1-pinning": _suite_pinning,
    "mirror-symmetry": _suite_mirror,
    "falsification": _suite_falsification,
    "oracle-equivalence": _suite_oracle,
    "structural": _suite_structural,
    "reproducibility": _suite_reproducibility,
}


def run_verification(options: VerifyOptions | None = None) -> VerifyReport:
    if options is None:
        options = VerifyOptions()
    selected = options.suites if options.suites else SUITE_ORDER
    for name in selected:
        if name not in _SUITES:
            raise SpecFileError(
                f"unknown suite {name!r}; known: {', '.join(SUITE_ORDER)}"
            )
    for name in DEFAULT_TOLERANCES:
        options.tol(name)   # validates any overrides up front

    ctx: dict = {}
    results: list[SuiteResult] = []
    rows: list[ReportRow] = []
    for name in SUITE_ORDER:
        if name not in selected:
            continue
        t0 = time.perf_counter()
        res = _SUITES[name](options, ctx)
        res.seconds = time.perf_counter() - t0
        results.append(res)
        rows.extend(res.rows)

    merged_tols = {name: options.tol(name) for name in sorted(DEFAULT_TOLERANCES)}
    return VerifyReport(
        seed=options.seed, kg=options.resolved_kg(), tolerances=merged_tols,
        suites=results, rows=rows, timing=options.timing,
    )


def summary_lines(report: VerifyReport) -> list[str]:
    lines = []
    for s in report.suites:
        status = "PASS" if s.passed else "FAIL"
        line = f"{status} {s.name:<20} checks={s.checks:<5} worst_slack={s.worst_slack:.3e}"
        if report.timing:
            line += f"  ({s.seconds:.1f}s)"
        lines.append(line)
    lines.append("PASS all suites" if report.passed else "FAIL one or more suites")
    return lines


def failure_lines(report: VerifyReport) -> list[str]:
    lines = []
    for s in report.suites:
        for f in s.failures:
            lines.append(f"{s.name}: {f['case']}")
            lines.append(f"  slack {f['slack']!r}; inputs: {f['inputs']!r}")
        extra = s.failure_count - len(s.failures)
        if extra > 0:
            lines.append(f"{s.name}: {extra} further failures omitted")
    return lines
