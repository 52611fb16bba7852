"""Command-line interface: run, scan, verify, inspect."""

from __future__ import annotations

import argparse
import os
import sys
from contextlib import nullcontext
from pathlib import Path

from ..errors import ConfigError, FormatError, UnsupportedVersionError, WnlsError
from .checkpoint import load_checkpoint
from .config import parse_config
from .runner import EXIT_CONFIG, EXIT_IO, run_experiment
from .scan import phase_scan, worker_count
from .verify import SUITES, run_suite

__all__ = ["main"]


def _workers_context():
    workers = worker_count()
    if workers > 1:
        import scipy.fft

        return scipy.fft.set_workers(workers)
    return nullcontext()


def _load_config(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_IO)
    try:
        return parse_config(text)
    except ConfigError as exc:
        for lineno, message in exc.errors:
            where = f"line {lineno}" if lineno else "config"
            print(f"error: {where}: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    with _workers_context():
        result = run_experiment(cfg, base_dir=args.out_dir)
    if result.run_state is not None:
        print(
            f"status={result.run_state.status.value} steps={result.run_state.step_count} "
            f"t_star={result.run_state.t_star} out={result.out_dir}"
        )
    else:
        print(f"error: {result.manifest.get('error')}", file=sys.stderr)
    return result.exit_code


def _parse_cells(args) -> list[tuple[float, float]]:
    cells: list[tuple[float, float]] = []
    if args.cells:
        for item in args.cells.split(","):
            a, _, b = item.partition(":")
            cells.append((float(a), float(b)))
    if args.diagonal:
        lo, hi, count = args.diagonal.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
        step = (hi - lo) / (count - 1) if count > 1 else 0.0
        for i in range(count):
            val = lo + i * step
            cells.append((val, val))
    return cells


def _cmd_scan(args) -> int:
    cfg = _load_config(args.config)
    cells = _parse_cells(args)
    if not cells:
        print("error: no cells; pass --cells or --diagonal", file=sys.stderr)
        return EXIT_CONFIG
    with _workers_context():
        results = phase_scan(cells, cfg, base_dir=args.out_dir)
    print("alpha beta regime s_c outcome max_h1 ew_drift")
    for r in results:
        print(
            f"{r.alpha:g} {r.beta:g} {r.regime} {r.s_c:.4f} {r.outcome} "
            f"{r.max_h1:.4e} {r.final_ew_drift:.3e} {r.note}"
        )
    bad = any(r.outcome == "diverged" for r in results)
    return 3 if bad else 0


def _cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    if any(name not in SUITES for name in names):
        print(f"error: unknown suite {args.suite!r}; choose from "
              f"{', '.join(SUITES)} or all", file=sys.stderr)
        return EXIT_CONFIG
    failed = 0
    with _workers_context():
        for name in names:
            result = run_suite(name)
            print(result.line())
            failed += 0 if result.passed else 1
    return 1 if failed else 0


def _cmd_inspect(args) -> int:
    try:
        header, state = load_checkpoint(args.checkpoint)
    except (FormatError, UnsupportedVersionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    from ..grid import l2_norm, h1_norm

    print(
        f"version={header.version} d={header.d} n={header.n} L={header.L:g} "
        f"t={header.t:g} alpha={header.alpha:g} beta={header.beta:g} "
        f"lambda={header.lam:g} mu={header.mu:g}"
    )
    print(
        f"mass_u={l2_norm(state.u)**2:.12e} mass_v={l2_norm(state.v)**2:.12e} "
        f"h1_u={h1_norm(state.u):.6e} h1_v={h1_norm(state.v):.6e}"
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="wnls",
        description="Pseudo-spectral lab for weighted gradient Schrodinger systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one configured experiment")
    p_run.add_argument("config")
    p_run.add_argument("--out-dir", default=".", help="root for the outputs directory")
    p_run.set_defaults(func=_cmd_run)

    p_scan = sub.add_parser("scan", help="phase scan over (alpha, beta) cells")
    p_scan.add_argument("config")
    p_scan.add_argument("--cells", default="", help="comma list a:b,a:b,...")
    p_scan.add_argument("--diagonal", default="", help="lo:hi:count along alpha=beta")
    p_scan.add_argument("--out-dir", default=".")
    p_scan.set_defaults(func=_cmd_scan)

    p_verify = sub.add_parser("verify", help="run a named acceptance suite")
    p_verify.add_argument("suite", help=f"one of {', '.join(SUITES)} or all")
    p_verify.set_defaults(func=_cmd_verify)

    p_inspect = sub.add_parser("inspect", help="print checkpoint header and norms")
    p_inspect.add_argument("checkpoint")
    p_inspect.set_defaults(func=_cmd_inspect)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except WnlsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
