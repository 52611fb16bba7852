"""Experiment execution: initial data, diagnostic hooks, artifacts on disk."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import __version__
from ..asymptotics import blowup_certify, pullback
from ..functionals import (
    conserved_set,
    morawetz_sample,
    pseudoconformal_sample,
    spacetime_l4_density,
    virial_sample,
)
from ..grid import Field, FieldPair, SpectralGrid, h1_norm
from ..model import SystemParams, classify_regime, weights_for
from ..stepper import DiagnosticsTrace, RunState, RunStatus, StepperConfig, evolve
from ..errors import NotFocusingError, InvalidParamsError
from ..asymptotics import sc_norm_monitor
from .checkpoint import save_checkpoint, load_checkpoint
from .config import ComponentInitial, ExperimentConfig, serialize_config

__all__ = [
    "ExperimentResult",
    "build_grid",
    "build_initial_state",
    "assemble_hooks",
    "run_experiment",
    "TRACE_SCHEMA_VERSION",
]

TRACE_SCHEMA_VERSION = "wnls-trace-v1"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_IO = 4


def build_grid(cfg: ExperimentConfig) -> SpectralGrid:
    return SpectralGrid(cfg.grid.d, cfg.grid.n, cfg.grid.L)


def _component_field(
    grid: SpectralGrid, spec: ComponentInitial, rng: np.random.Generator, which: str
) -> Field:
    mesh = np.meshgrid(*grid.x, indexing="ij")
    center = spec.center or (0.0,) * grid.d
    velocity = spec.velocity or (0.0,) * grid.d
    rel = [m - c for m, c in zip(mesh, center)]
    r2 = sum(x**2 for x in rel)
    if spec.kind == "zero":
        data = np.zeros(grid.shape, dtype=complex)
    elif spec.kind == "gaussian":
        data = spec.amplitude * np.exp(-r2 / spec.width**2)
    elif spec.kind == "ring":
        r = np.sqrt(r2)
        data = spec.amplitude * np.exp(-((r - spec.radius) / spec.width) ** 2)
    elif spec.kind == "file":
        _, loaded = load_checkpoint(spec.path)
        if loaded.grid != grid:
            raise InvalidParamsError(
                f"checkpoint grid {loaded.grid} does not match configured {grid}"
            )
        data = (loaded.u if which == "u" else loaded.v).data.copy()
    else:
        raise InvalidParamsError(f"unknown initial kind {spec.kind!r}")
    if spec.kind in ("gaussian", "ring"):
        phase = sum(v * x for v, x in zip(velocity, rel)) + spec.chirp * r2
        data = data * np.exp(1j * phase)
    if spec.noise > 0.0:
        data = data + spec.noise * (
            rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        )
    return Field(grid, data)


def build_initial_state(cfg: ExperimentConfig, grid: SpectralGrid | None = None) -> FieldPair:
    grid = grid or build_grid(cfg)
    rng = np.random.default_rng(cfg.run.seed)
    u = _component_field(grid, cfg.initial_u, rng, "u")
    v = _component_field(grid, cfg.initial_v, rng, "v")
    return FieldPair(u, v)


class _L4Hook:
    def __init__(self):
        self.value = 0.0
        self._last_t = None

    def __call__(self, snap: FieldPair, trace: DiagnosticsTrace) -> None:
        if self._last_t is not None:
            self.value += (snap.t - self._last_t) * spacetime_l4_density(snap)
        self._last_t = snap.t
        trace.record("l4_acc", self.value)


class _PullbackHook:
    def __init__(self):
        self._prev = None

    def __call__(self, snap: FieldPair, trace: DiagnosticsTrace) -> None:
        cur = pullback(snap)
        if self._prev is not None:
            du = Field(snap.grid, cur.u.data - self._prev.u.data)
            dv = Field(snap.grid, cur.v.data - self._prev.v.data)
            trace.record("pullback_h1_inc", h1_norm(du) + h1_norm(dv))
        self._prev = cur


def assemble_hooks(cfg: ExperimentConfig, p: SystemParams):
    hooks = []
    names = cfg.diagnostics.enable
    boundary_tol = cfg.stepper.boundary_mass_tol
    if "conserved" in names:
        w = weights_for(p)

        def conserved_hook(snap, trace):
            cs = conserved_set(p, snap, w)
            trace.record("m_w", cs.m_w)
            trace.record("e_w", cs.e_w)
            for ax in range(snap.grid.d):
                trace.record(f"p_w_{ax}", cs.p_w[ax])

        hooks.append(conserved_hook)
    if "virial" in names:

        def virial_hook(snap, trace):
            vs = virial_sample(p, snap, boundary_tol=boundary_tol)
            trace.record("y", vs.y)
            trace.record("yp", vs.yp)
            trace.record("ypp_formula", vs.ypp_formula)

        hooks.append(virial_hook)
    if "pseudoconformal" in names:

        def pc_hook(snap, trace):
            ps = pseudoconformal_sample(p, snap, boundary_tol=boundary_tol)
            trace.record("pc_p", ps.p)
            trace.record("pc_rhs", ps.rhs_integrand)

        hooks.append(pc_hook)
    if "morawetz" in names:

        def morawetz_hook(snap, trace):
            ms = morawetz_sample(p, snap)
            trace.record("m2", ms.m2)
            trace.record("m2_rate", ms.lower_bound_rate)

        hooks.append(morawetz_hook)
    if "l4" in names:
        hooks.append(_L4Hook())
    if "sc_norm" in names:
        hooks.append(lambda snap, trace: trace.record("sc_norm", sc_norm_monitor(p, snap)))
    if "pullback" in names:
        hooks.append(_PullbackHook())
    if "decay" in names:
        from ..functionals import _potential_integral

        hooks.append(
            lambda snap, trace: trace.record(
                "t2_pot", snap.t**2 * _potential_integral(p, snap)
            )
        )
    return hooks


def _format_cell(value) -> str:
    if isinstance(value, float):
        if np.isnan(value):
            return ""
        return repr(value)
    return str(value)


def write_trace_csv(trace: DiagnosticsTrace, path: Path) -> None:
    names = trace.column_names()
    lines = [f"# schema={TRACE_SCHEMA_VERSION}", ",".join(names)]
    for row in trace.rows:
        lines.append(",".join(_format_cell(row.get(name, float("nan"))) for name in names))
    path.write_text("\n".join(lines) + "\n")


def write_trace_json(trace: DiagnosticsTrace, path: Path) -> None:
    payload = {
        "schema": TRACE_SCHEMA_VERSION,
        "columns": trace.column_names(),
        "rows": trace.rows,
        "warnings": trace.warnings,
        "meta": trace.meta,
    }
    path.write_text(json.dumps(payload, indent=1, sort_keys=True, allow_nan=True) + "\n")


_PLOT_SCRIPT = """\
#!/usr/bin/env python3
# Generic plotting companion for trace.csv (written by the run, not executed).
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "trace.csv"
with open(path) as fh:
    rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
header, data = rows[0], rows[1:]
cols = {name: [float(r[i]) if r[i] else float("nan") for r in data]
        for i, name in enumerate(header)}
t = cols.pop("t")
fig, axes = plt.subplots(len(cols), 1, sharex=True, figsize=(8, 2 * len(cols)))
for ax, (name, series) in zip(axes if len(cols) > 1 else [axes], cols.items()):
    ax.plot(t, series)
    ax.set_ylabel(name)
plt.xlabel("t")
plt.tight_layout()
plt.savefig("trace.png", dpi=150)
"""


@dataclass
class ExperimentResult:
    exit_code: int
    run_state: RunState | None
    trace: DiagnosticsTrace | None
    out_dir: Path
    manifest: dict


def run_experiment(cfg: ExperimentConfig, base_dir: str | Path = ".") -> ExperimentResult:
    """Execute one configured run and persist every artifact.

    Artifacts: trace.csv / trace.json, manifest.json (config echo, code
    version, wall time, status), plot_trace.py, optional checkpoints.
    Exit code 3 flags unexpected divergence, 4 an I/O failure.
    """
    out_dir = Path(base_dir) / cfg.outputs.dir
    t_wall = time.perf_counter()
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        grid = build_grid(cfg)
        state0 = build_initial_state(cfg, grid)
        p = cfg.params
        hooks = assemble_hooks(cfg, p)

        checkpoints: list[str] = []
        if cfg.outputs.checkpoint_every > 0:
            counter = {"samples": 0}

            def checkpoint_hook(snap, trace):
                counter["samples"] += 1
                if counter["samples"] % cfg.outputs.checkpoint_every == 0:
                    name = f"checkpoint_{counter['samples']:06d}.wnls"
                    save_checkpoint(out_dir / name, p, snap)
                    checkpoints.append(name)

            hooks.append(checkpoint_hook)

        run_state, trace = evolve(p, state0, cfg.stepper, hooks=hooks)

        blowup_report = None
        if "blowup" in cfg.diagnostics.enable:
            try:
                cert = blowup_certify(p, state0)
                blowup_report = {
                    "e_tilde": cert.e_tilde,
                    "v0": cert.v0,
                    "v0p": cert.v0p,
                    "verdict": cert.verdict,
                    "t_envelope": cert.t_envelope,
                }
            except (NotFocusingError, InvalidParamsError) as exc:
                blowup_report = {"error": str(exc)}

        if cfg.outputs.checkpoint_final:
            save_checkpoint(out_dir / "checkpoint_final.wnls", p, run_state.state)
            checkpoints.append("checkpoint_final.wnls")

        if "csv" in cfg.outputs.formats:
            write_trace_csv(trace, out_dir / "trace.csv")
        if "json" in cfg.outputs.formats:
            write_trace_json(trace, out_dir / "trace.json")
        (out_dir / "plot_trace.py").write_text(_PLOT_SCRIPT)

        diverged = run_state.status is RunStatus.DIVERGED
        exit_code = EXIT_OK if (not diverged or cfg.run.expect_blowup) else EXIT_DIVERGENCE
        manifest = {
            "config": serialize_config(cfg),
            "version": __version__,
            "schema": TRACE_SCHEMA_VERSION,
            "seed": cfg.run.seed,
            "regime": classify_regime(p).label.value,
            "s_c": classify_regime(p).s_c,
            "status": run_state.status.value,
            "t_star": run_state.t_star,
            "steps": run_state.step_count,
            "warnings": trace.warnings,
            "blowup": blowup_report,
            "checkpoints": checkpoints,
            "wall_seconds": time.perf_counter() - t_wall,
            "exit_code": exit_code,
        }
        (out_dir / "manifest.json").write_text(
            json.dumps(manifest, indent=1, sort_keys=True) + "\n"
        )
        return ExperimentResult(exit_code, run_state, trace, out_dir, manifest)
    except OSError as exc:
        return ExperimentResult(EXIT_IO, None, None, out_dir, {"error": str(exc)})
