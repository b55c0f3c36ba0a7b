"""Experiment descriptions, grid execution and delimited reports.

A scan runs a grid of certification or optimization cells described by
a small key-value text file and writes one CSV row per cell.  The CSV
column set is fixed:

    experiment,p,n,m,lambda,r,lower,upper,certified,method,ms

Floats are rendered with repr (shortest round-trip form), the sup-norm
exponent as the literal ``inf``, and the lambda digest is the full
comma-joined decimal list for up to 16 coefficients, else a hash plus
the l1/l2 norms.  The ms column is 0 unless timing was requested;
wall-clock timing is the one thing that would break byte-identical
reports, so it is opt-in.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime
import hashlib
import io
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engine import OptimizerConfig, optimize_family
from .errors import SpecFileError
from .spaces import INF, SpaceSpec, format_exponent, parse_exponent
from .witnesses import certify_moduli_norm, moduli_expression

CSV_COLUMNS = ("experiment", "p", "n", "m", "lambda", "r", "lower", "upper", "certified", "method", "ms")

_DIGEST_FULL_LIMIT = 16


def default_workers() -> int:
    raw = os.environ.get("FBLNORM_WORKERS")
    if raw is not None:
        try:
            w = int(raw)
        except ValueError:
            raise SpecFileError(f"FBLNORM_WORKERS must be an integer, got {raw!r}") from None
        if w < 1:
            raise SpecFileError(f"FBLNORM_WORKERS must be >= 1, got {w}")
        return w
    return min(8, os.cpu_count() or 1)


def lambda_digest(values) -> str:
    """Full decimals for small coefficient vectors, hash plus norms else."""
    vals = [float(v) for v in values]
    if len(vals) <= _DIGEST_FULL_LIMIT:
        return ",".join(repr(v) for v in vals)
    payload = ",".join(repr(v) for v in vals).encode()
    h = hashlib.sha256(payload).hexdigest()[:16]
    l1 = float(np.sum(np.abs(vals)))
    l2 = float(np.sqrt(np.sum(np.square(vals))))
    return f"sha256:{h},l1={l1!r},l2={l2!r}"


def _fmt_float(v) -> str:
    if v is None:
        return ""
    v = float(v)
    if v == INF:
        return "inf"
    return repr(v)


@dataclass(frozen=True)
class ReportRow:
    """One delimited-report line; field order mirrors CSV_COLUMNS."""

    experiment: str
    p: float
    n: int
    m: int
    lam: tuple | None
    r: float | None
    lower: float
    upper: float | None
    certified: bool
    method: str
    ms: int = 0

    def to_fields(self) -> list[str]:
        return [
            self.experiment,
            format_exponent(self.p),
            str(self.n),
            str(self.m),
            lambda_digest(self.lam) if self.lam is not None else "-",
            _fmt_float(self.r),
            _fmt_float(self.lower),
            _fmt_float(self.upper),
            "true" if self.certified else "false",
            self.method,
            str(self.ms),
        ]


def rows_to_csv_text(rows, timestamp: bool = False) -> str:
    buf = io.StringIO()
    if timestamp:
        stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
        buf.write(f"# generated {stamp}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow(row.to_fields())
    return buf.getvalue()


def write_csv(path, rows, timestamp: bool = False) -> None:
    Path(path).write_text(rows_to_csv_text(rows, timestamp=timestamp))


# --------------------------------------------------------------------------
# experiment description files


@dataclass(frozen=True)
class LambdaSource:
    """Either explicit coefficient vectors or a seeded random draw."""

    explicit: tuple = ()
    count: int = 0
    dim: int = 0
    low: float = 0.1
    high: float = 2.0
    seed: int | None = None

    def draw(self):
        lams = [np.asarray(v, dtype=float) for v in self.explicit]
        if self.count:
            if self.seed is None:
                raise SpecFileError("random lambda draws need a seed")
            for t in range(self.count):
                rng = np.random.default_rng(np.random.SeedSequence(entropy=self.seed, spawn_key=(7, t)))
                lams.append(rng.uniform(self.low, self.high, self.dim))
        if not lams:
            raise SpecFileError("experiment defines no coefficient vectors")
        return lams


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    exponents: tuple[float, ...]
    source: LambdaSource
    mode: str = "certify"                      # "certify" or "optimize"
    sizes: tuple[int, ...] = ()                # family sizes, optimize mode
    n: int | None = None                       # ambient dimension override
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    kg: float | None = None
    out: str = "scan.csv"

    def __post_init__(self):
        if not self.name:
            raise SpecFileError("experiment needs a name")
        if not self.exponents:
            raise SpecFileError("experiment needs at least one exponent")
        if self.mode not in ("certify", "optimize"):
            raise SpecFileError(f"mode must be 'certify' or 'optimize', got {self.mode!r}")
        if self.mode == "optimize" and not self.sizes:
            raise SpecFileError("optimize mode needs family sizes (key: sizes)")


_SPEC_KEYS = {
    "name", "p", "n", "mode", "sizes", "lambda", "lambda_count", "lambda_dim",
    "lambda_low", "lambda_high", "seed", "restarts", "iterations", "initial_step",
    "step_decay", "enumeration_cap", "samples", "kg", "out",
}


def _parse_number_list(value: str, key: str) -> list[float]:
    out = []
    for piece in value.split(","):
        piece = piece.strip()
        if not piece:
            raise SpecFileError(f"field {key!r}: empty entry in list")
        try:
            out.append(float(piece))
        except ValueError:
            raise SpecFileError(f"field {key!r}: cannot parse number {piece!r}") from None
    return out


def _parse_int(value: str, key: str) -> int:
    try:
        return int(value.strip())
    except ValueError:
        raise SpecFileError(f"field {key!r}: expected an integer, got {value!r}") from None


def _parse_float(value: str, key: str) -> float:
    try:
        return float(value.strip())
    except ValueError:
        raise SpecFileError(f"field {key!r}: expected a number, got {value!r}") from None


def parse_spec_text(text: str) -> ExperimentSpec:
    """Parse the documented key = value format (see README).

    Lines are ``key = value``; blank lines and #-comments are skipped;
    the ``lambda`` key may repeat to add explicit coefficient vectors.
    Unknown keys and malformed values fail with the field name.
    """
    values: dict[str, str] = {}
    explicit: list[tuple] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecFileError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key not in _SPEC_KEYS:
            raise SpecFileError(f"line {lineno}: unknown key {key!r}")
        if key == "lambda":
            explicit.append(tuple(_parse_number_list(value, key)))
        elif key in values:
            raise SpecFileError(f"line {lineno}: duplicate key {key!r}")
        else:
            values[key] = value

    if "name" not in values:
        raise SpecFileError("missing required key 'name'")
    if "p" not in values:
        raise SpecFileError("missing required key 'p'")
    exponents = tuple(parse_exponent(piece.strip()) for piece in values["p"].split(","))

    count = _parse_int(values["lambda_count"], "lambda_count") if "lambda_count" in values else 0
    if count and "lambda_dim" not in values:
        raise SpecFileError("lambda_count needs lambda_dim")
    if count and "seed" not in values:
        raise SpecFileError("random lambda draws need a seed (key: seed)")
    source = LambdaSource(
        explicit=tuple(explicit),
        count=count,
        dim=_parse_int(values["lambda_dim"], "lambda_dim") if "lambda_dim" in values else 0,
        low=_parse_float(values.get("lambda_low", "0.1"), "lambda_low"),
        high=_parse_float(values.get("lambda_high", "2.0"), "lambda_high"),
        seed=_parse_int(values["seed"], "seed") if "seed" in values else None,
    )

    opt_kwargs = {}
    if "seed" in values:
        opt_kwargs["seed"] = _parse_int(values["seed"], "seed")
    for key, conv in [
        ("restarts", _parse_int), ("iterations", _parse_int),
        ("initial_step", _parse_float), ("step_decay", _parse_float),
        ("enumeration_cap", _parse_int), ("samples", _parse_int),
    ]:
        if key in values:
            opt_kwargs[key] = conv(values[key], key)
    try:
        optimizer = OptimizerConfig(**opt_kwargs)
    except ValueError as e:
        raise SpecFileError(f"optimizer configuration: {e}") from None

    sizes = ()
    if "sizes" in values:
        sizes = tuple(int(v) for v in _parse_number_list(values["sizes"], "sizes"))
        if any(s < 1 for s in sizes):
            raise SpecFileError("field 'sizes': family sizes must be >= 1")

    return ExperimentSpec(
        name=values["name"],
        exponents=exponents,
        source=source,
        mode=values.get("mode", "certify").strip().lower(),
        sizes=sizes,
        n=_parse_int(values["n"], "n") if "n" in values else None,
        optimizer=optimizer,
        kg=_parse_float(values["kg"], "kg") if "kg" in values else None,
        out=values.get("out", "scan.csv"),
    )


def parse_spec_file(path) -> ExperimentSpec:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise SpecFileError(f"cannot read experiment file {path}: {e}") from None
    return parse_spec_text(text)


# --------------------------------------------------------------------------
# scan execution


def _scan_cell(args) -> ReportRow:
    name, p, n, lam, mode, size, optimizer, kg, timing = args
    t0 = time.perf_counter() if timing else 0.0
    lam = np.asarray(lam, dtype=float)
    space = SpaceSpec(n, p)
    if mode == "certify":
        cert = certify_moduli_norm(lam, space, kg=kg, cap=optimizer.cap)
        row = ReportRow(
            experiment=name, p=p, n=n, m=cert.witness.size, lam=tuple(lam),
            r=cert.r, lower=cert.lower, upper=cert.upper, certified=True,
            method="+".join(cert.provenance),
        )
    else:
        expr = moduli_expression(lam, n)
        est = optimize_family(expr, space, size, optimizer)
        row = ReportRow(
            experiment=name, p=p, n=n, m=size, lam=tuple(lam),
            r=None, lower=est.lower, upper=est.upper, certified=est.certified,
            method="+".join(est.method),
        )
    if timing:
        ms = int(round((time.perf_counter() - t0) * 1000.0))
        row = dataclasses.replace(row, ms=ms)
    return row


def scan_cells(spec: ExperimentSpec, timing: bool = False) -> list[tuple]:
    lams = spec.source.draw()
    cells = []
    for p in spec.exponents:
        for lam in lams:
            n = spec.n if spec.n is not None else len(lam)
            if len(lam) > n:
                raise SpecFileError(
                    f"lambda of length {len(lam)} does not fit dimension {n}"
                )
            if spec.mode == "certify":
                cells.append((spec.name, p, n, tuple(lam), "certify", 0, spec.optimizer, spec.kg, timing))
            else:
                for size in spec.sizes:
                    cells.append((spec.name, p, n, tuple(lam), "optimize", size, spec.optimizer, spec.kg, timing))
    return cells


def run_scan(spec: ExperimentSpec, workers: int = 1, timing: bool = False) -> list[ReportRow]:
    """Execute every cell of the experiment grid, in grid order.

    Results are identical for any worker count: cells are pure functions
    of their description and are reassembled in submission order.
    """
    cells = scan_cells(spec, timing=timing)
    return parallel_map(_scan_cell, cells, workers)


def parallel_map(fn, items, workers: int) -> list:
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    import concurrent.futures

    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (workers * 4))))
