"""Phase scan over (alpha, beta) cells around the critical line."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..functionals import energy_h1_bound
from ..model import SystemParams, classify_regime
from ..stepper import RunStatus
from .config import ExperimentConfig
from .runner import build_grid, build_initial_state, run_experiment

__all__ = ["CellResult", "phase_scan", "worker_count"]


@dataclass
class CellResult:
    alpha: float
    beta: float
    regime: str
    s_c: float
    outcome: str  # global-bounded | diverged | inconclusive
    max_h1: float
    final_ew_drift: float
    note: str = ""


def worker_count() -> int:
    raw = os.environ.get("WNLS_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _cell_config(base: ExperimentConfig, alpha: float, beta: float, index: int) -> ExperimentConfig:
    params = SystemParams(
        base.params.d,
        alpha,
        beta,
        base.params.lam,
        base.params.mu,
        base.params.allow_sign_mismatch,
    )
    outputs = replace(base.outputs, dir=str(Path(base.outputs.dir) / f"cell_{index:03d}"))
    enable = tuple(base.diagnostics.enable)
    if "conserved" not in enable:
        enable = ("conserved",) + enable
    diagnostics = replace(base.diagnostics, enable=enable)
    return replace(base, params=params, outputs=outputs, diagnostics=diagnostics)


def _run_cell(base: ExperimentConfig, alpha: float, beta: float, index: int, base_dir) -> CellResult:
    cfg = _cell_config(base, alpha, beta, index)
    regime = classify_regime(cfg.params)
    try:
        result = run_experiment(cfg, base_dir=base_dir)
        if result.run_state is None:
            return CellResult(
                alpha, beta, regime.label.value, regime.s_c, "inconclusive",
                float("nan"), float("nan"), note=str(result.manifest.get("error", "")),
            )
        trace = result.trace
        h1 = trace.column("h1_sum")
        max_h1 = float(np.nanmax(h1))
        ew = trace.column("e_w")
        finite_ew = ew[np.isfinite(ew)]
        if finite_ew.size >= 2 and finite_ew[0] != 0:
            drift = float(abs(finite_ew[-1] - finite_ew[0]) / abs(finite_ew[0]))
        else:
            drift = 0.0
        if result.run_state.status is RunStatus.DIVERGED:
            return CellResult(
                alpha, beta, regime.label.value, regime.s_c, "diverged", max_h1, drift
            )
        if cfg.params.is_defocusing or cfg.params.is_linear:
            grid = build_grid(cfg)
            bound = energy_h1_bound(cfg.params, build_initial_state(cfg, grid))
            outcome = "global-bounded" if max_h1 <= 2.0 * bound else "inconclusive"
        else:
            outcome = "global-bounded"  # finished without divergence
        return CellResult(alpha, beta, regime.label.value, regime.s_c, outcome, max_h1, drift)
    except Exception as exc:  # cell failures never stop the scan
        return CellResult(
            alpha, beta, regime.label.value, regime.s_c, "inconclusive",
            float("nan"), float("nan"), note=f"{type(exc).__name__}: {exc}",
        )


def phase_scan(
    cells: list[tuple[float, float]],
    base: ExperimentConfig,
    base_dir: str | Path = ".",
) -> list[CellResult]:
    """Run one experiment per (alpha, beta) cell and tabulate outcomes.

    Cells are independent; WNLS_THREADS > 1 runs them concurrently.  The
    result order always follows the input cell order.
    """
    if not cells:
        raise ValueError("cell list is empty")
    workers = min(worker_count(), len(cells))
    if workers == 1:
        results = [
            _run_cell(base, a, b, i, base_dir) for i, (a, b) in enumerate(cells)
        ]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_cell, base, a, b, i, base_dir)
                for i, (a, b) in enumerate(cells)
            ]
            results = [f.result() for f in futures]
    out_dir = Path(base_dir) / base.outputs.dir
    out_dir.mkdir(parents=True, exist_ok=True)
    write_scan_csv(results, out_dir / "scan.csv")
    return results


def write_scan_csv(results: list[CellResult], path: Path) -> None:
    lines = ["alpha,beta,regime,s_c,outcome,max_h1,final_ew_drift,note"]
    for r in results:
        lines.append(
            f"{r.alpha!r},{r.beta!r},{r.regime},{r.s_c!r},{r.outcome},"
            f"{r.max_h1!r},{r.final_ew_drift!r},{r.note}"
        )
    path.write_text("\n".join(lines) + "\n")
