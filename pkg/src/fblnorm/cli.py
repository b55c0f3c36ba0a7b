"""Command-line interface.

Subcommands: eval, bound, scan, walsh, verify-paper.  Exit codes
follow a fixed contract: 0 success, 1 verification or certification
failure, 2 input error, 3 capacity or exponent-domain error.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import sys
from pathlib import Path

import numpy as np

from .engine import OptimizerConfig, optimize_family
from .errors import (
    CapacityError,
    CertificationError,
    ExponentDomainError,
    FBLNormError,
    SpecFileError,
)
from .experiments import parse_spec_file, run_scan, write_csv
from .parser import parse as parse_expr
from .spaces import SpaceSpec, parse_exponent
from .verify import (
    SUITE_ORDER,
    VerifyOptions,
    failure_lines,
    run_verification,
    summary_lines,
)
from .witnesses import certify_moduli_norm, walsh_matrix


def _parse_point(text: str) -> np.ndarray:
    raw = text.strip()
    if raw.startswith("[") and raw.endswith("]"):
        raw = raw[1:-1]
    pieces = [s.strip() for s in raw.split(",") if s.strip()]
    if not pieces:
        raise ValueError(f"empty coordinate list {text!r}")
    try:
        return np.array([float(s) for s in pieces])
    except ValueError:
        raise ValueError(f"cannot parse coordinate list {text!r}") from None


def _parse_lambda(text: str) -> np.ndarray:
    return _parse_point(text)


def _print_json(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _cmd_eval(args) -> int:
    point = _parse_point(args.at)
    f = parse_expr(args.expr, n=len(point))
    value = f.evaluate(point)
    print(f"{value:.17g}")
    return 0


def _cmd_bound(args) -> int:
    p = parse_exponent(args.p)
    if args.lam is not None:
        lam = _parse_lambda(args.lam)
        n = args.n if args.n is not None else len(lam)
        cert = certify_moduli_norm(lam, SpaceSpec(n, p), kg=args.kg)
        _print_json(cert.to_json())
        return 0
    f = parse_expr(args.expr, n=args.n)
    space = SpaceSpec(f.dim, p)
    config = OptimizerConfig(
        seed=args.seed, restarts=args.restarts, iterations=args.iterations
    )
    est = optimize_family(f, space, args.family_size, config)
    _print_json(est.to_json())
    return 0


def _cmd_scan(args) -> int:
    spec = parse_spec_file(args.spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = run_scan(spec, workers=args.workers, timing=args.timing)
    csv_path = out_dir / spec.out
    write_csv(csv_path, rows, timestamp=args.timestamp)
    print(f"wrote {csv_path} ({len(rows)} rows)")
    if not args.no_figures:
        from .figures import render_scan_figure

        fig_path = out_dir / f"scan_{spec.name}.png"
        render_scan_figure(rows, fig_path)
        print(f"wrote {fig_path}")
    return 0


def _cmd_walsh(args) -> int:
    wm = walsh_matrix(args.k)
    target = sys.stdout if args.out is None else open(args.out, "w", newline="")
    try:
        writer = csv.writer(target, lineterminator="\n")
        for row in wm.entries:
            writer.writerow([int(v) for v in row])
    finally:
        if args.out is not None:
            target.close()
            print(f"wrote {args.out} ({wm.size}x{wm.size})")
    return 0


def _parse_tol_overrides(pairs) -> dict:
    out = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise SpecFileError(f"tolerance override must look like name=value, got {pair!r}")
        name, _, value = pair.partition("=")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise SpecFileError(f"tolerance {name.strip()!r}: cannot parse value {value!r}") from None
    return out


def _cmd_verify(args) -> int:
    options = VerifyOptions(
        seed=args.seed,
        kg=args.kg,
        workers=args.workers,
        suites=tuple(args.suite) if args.suite else None,
        tolerances=_parse_tol_overrides(args.tol),
        timing=args.timing,
    )
    report = run_verification(options)
    for line in summary_lines(report):
        print(line)
    for line in failure_lines(report):
        print(line)
    if args.out_dir is not None:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        payload = report.to_json()
        if args.timestamp:
            payload["generated"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
        (out_dir / "report.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n"
        )
        write_csv(out_dir / "cells.csv", report.rows, timestamp=args.timestamp)
        print(f"wrote {out_dir / 'report.json'}")
        print(f"wrote {out_dir / 'cells.csv'} ({len(report.rows)} rows)")
        if not args.no_figures:
            from .figures import render_verify_figures

            for path in render_verify_figures(report.rows, out_dir):
                print(f"wrote {path}")
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fblnorm",
        description="Certified lower and closed-form upper bounds for "
        "lattice expression norms over finite-dimensional sequence spaces.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("eval", help="evaluate an expression at a dual vector")
    ev.add_argument("expr", help="expression text, e.g. 'abs(d(e1)) \\/ d(e2)'")
    ev.add_argument("--at", required=True, help="coordinates, e.g. '[-3,0]' or '1,2'")
    ev.set_defaults(func=_cmd_eval)

    bd = sub.add_parser("bound", help="compute certified norm bounds")
    src = bd.add_mutually_exclusive_group(required=True)
    src.add_argument("--expr", help="expression text")
    src.add_argument("--lambda", dest="lam", help="moduli coefficients, e.g. '1,1,1,1'")
    bd.add_argument("--p", required=True, help="space exponent; 'inf' for the sup norm")
    bd.add_argument("--n", type=int, default=None, help="ambient dimension override")
    bd.add_argument("--family-size", type=int, default=4,
                    help="functional family size for the optimizer path (default 4)")
    bd.add_argument("--seed", type=int, default=0)
    bd.add_argument("--restarts", type=int, default=16)
    bd.add_argument("--iterations", type=int, default=200)
    bd.add_argument("--kg", type=float, default=None,
                    help="override the closed-form upper bound constant")
    bd.set_defaults(func=_cmd_bound)

    sc = sub.add_parser("scan", help="run an experiment grid to CSV")
    sc.add_argument("--spec", required=True, help="experiment description file")
    sc.add_argument("--out-dir", default=".", help="directory for CSV and figures")
    sc.add_argument("--workers", type=int, default=1)
    sc.add_argument("--timing", action="store_true", help="measure per-cell wall time")
    sc.add_argument("--timestamp", action="store_true",
                    help="add a generation-time header comment")
    sc.add_argument("--no-figures", action="store_true")
    sc.set_defaults(func=_cmd_scan)

    wl = sub.add_parser("walsh", help="dump a sign matrix as CSV")
    wl.add_argument("--k", type=int, required=True, help="order exponent; size is 2^k")
    wl.add_argument("--out", default=None, help="output file (default stdout)")
    wl.set_defaults(func=_cmd_walsh)

    vp = sub.add_parser("verify-paper", help="run the verification suites")
    vp.add_argument("--seed", type=int, default=42)
    vp.add_argument("--suite", action="append", choices=list(SUITE_ORDER),
                    help="run only the named suite (repeatable)")
    vp.add_argument("--kg", type=float, default=None,
                    help="override the closed-form upper bound constant")
    vp.add_argument("--tol", action="append", metavar="NAME=VALUE",
                    help="tolerance override (repeatable)")
    vp.add_argument("--workers", type=int, default=1)
    vp.add_argument("--out-dir", default=None,
                    help="write report.json, cells.csv and figures here")
    vp.add_argument("--timing", action="store_true",
                    help="include per-suite seconds in output")
    vp.add_argument("--timestamp", action="store_true",
                    help="add generation-time metadata to the artifacts")
    vp.add_argument("--no-figures", action="store_true")
    vp.set_defaults(func=_cmd_verify)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (CapacityError, ExponentDomainError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except CertificationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (FBLNormError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
