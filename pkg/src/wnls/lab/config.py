"""Flat key=value experiment configuration with dotted section keys.

The format is line oriented: blank lines and '#' comments are ignored,
every other line must read  section.key = value.  parse_config validates
types and constraints and reports every problem with its line number;
serialize_config emits the canonical form, which parses back identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..errors import ConfigError, InvalidParamsError
from ..model import SystemParams, classify_regime
from ..stepper import StepperConfig

__all__ = [
    "ComponentInitial",
    "GridSpec",
    "DiagnosticsSpec",
    "OutputSpec",
    "RunSpec",
    "ExperimentConfig",
    "parse_config",
    "serialize_config",
    "KNOWN_DIAGNOSTICS",
]

KNOWN_DIAGNOSTICS = (
    "conserved",
    "virial",
    "pseudoconformal",
    "morawetz",
    "l4",
    "sc_norm",
    "pullback",
    "decay",
    "blowup",
)

INITIAL_KINDS = ("gaussian", "ring", "file", "zero")


@dataclass
class ComponentInitial:
    kind: str = "gaussian"
    amplitude: float = 1.0
    width: float = 1.0
    center: tuple[float, ...] = ()
    velocity: tuple[float, ...] = ()
    chirp: float = 0.0
    radius: float = 1.0  # ring only
    noise: float = 0.0  # seeded complex perturbation amplitude
    path: str = ""  # file only


@dataclass
class GridSpec:
    d: int
    n: int
    L: float


@dataclass
class DiagnosticsSpec:
    every: int = 10
    enable: tuple[str, ...] = ("conserved",)


@dataclass
class OutputSpec:
    dir: str = "runs/out"
    formats: tuple[str, ...] = ("csv", "json")
    checkpoint_every: int = 0  # in samples; 0 disables
    checkpoint_final: bool = False


@dataclass
class RunSpec:
    expect_blowup: bool = False
    seed: int = 0


@dataclass
class ExperimentConfig:
    params: SystemParams
    grid: GridSpec
    initial_u: ComponentInitial
    initial_v: ComponentInitial
    stepper: StepperConfig
    diagnostics: DiagnosticsSpec = field(default_factory=DiagnosticsSpec)
    outputs: OutputSpec = field(default_factory=OutputSpec)
    run: RunSpec = field(default_factory=RunSpec)


# -- value codecs ------------------------------------------------------------


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(part) for part in text.split(","))


def _parse_names(text: str) -> tuple[str, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ",".join(_fmt(v) for v in value)
    if value is None:
        return ""
    return str(value)


# key -> (codec, constraint description, constraint predicate)
_SCHEMA: dict[str, tuple] = {
    "params.d": (int, "d in 1..3", lambda v: v in (1, 2, 3)),
    "params.alpha": (float, "alpha >= 0", lambda v: v >= 0),
    "params.beta": (float, "beta >= 0", lambda v: v >= 0),
    "params.lambda": (float, None, None),
    "params.mu": (float, None, None),
    "params.allow_sign_mismatch": (_parse_bool, None, None),
    "grid.n": (int, "n even and >= 8", lambda v: v >= 8 and v % 2 == 0),
    "grid.L": (float, "L > 0", lambda v: v > 0),
    "stepper.dt": (float, "dt > 0", lambda v: v > 0),
    "stepper.t_end": (float, "t_end != 0", lambda v: v != 0),
    "stepper.adapt": (_parse_bool, None, None),
    "stepper.blowup_h1_threshold": (float, "threshold > 0", lambda v: v > 0),
    "stepper.boundary_mass_tol": (float, "tolerance > 0", lambda v: v > 0),
    "diagnostics.every": (int, "cadence >= 1", lambda v: v >= 1),
    "diagnostics.enable": (
        _parse_names,
        f"diagnostics from {KNOWN_DIAGNOSTICS}",
        lambda v: all(name in KNOWN_DIAGNOSTICS for name in v),
    ),
    "outputs.dir": (str, None, None),
    "outputs.formats": (
        _parse_names,
        "formats from (csv, json)",
        lambda v: all(name in ("csv", "json") for name in v),
    ),
    "outputs.checkpoint_every": (int, "checkpoint_every >= 0", lambda v: v >= 0),
    "outputs.checkpoint_final": (_parse_bool, None, None),
    "run.expect_blowup": (_parse_bool, None, None),
    "run.seed": (int, "seed >= 0", lambda v: v >= 0),
}

for comp in ("u", "v"):
    _SCHEMA[f"initial.{comp}.kind"] = (
        str,
        f"kind in {INITIAL_KINDS}",
        lambda v: v in INITIAL_KINDS,
    )
    _SCHEMA[f"initial.{comp}.amplitude"] = (float, None, None)
    _SCHEMA[f"initial.{comp}.width"] = (float, "width > 0", lambda v: v > 0)
    _SCHEMA[f"initial.{comp}.center"] = (_parse_floats, None, None)
    _SCHEMA[f"initial.{comp}.velocity"] = (_parse_floats, None, None)
    _SCHEMA[f"initial.{comp}.chirp"] = (float, None, None)
    _SCHEMA[f"initial.{comp}.radius"] = (float, "radius >= 0", lambda v: v >= 0)
    _SCHEMA[f"initial.{comp}.noise"] = (float, "noise >= 0", lambda v: v >= 0)
    _SCHEMA[f"initial.{comp}.path"] = (str, None, None)

_MANDATORY = (
    "params.d",
    "params.alpha",
    "params.beta",
    "params.lambda",
    "params.mu",
    "grid.n",
    "grid.L",
    "stepper.dt",
    "stepper.t_end",
)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate; raises ConfigError listing every located problem."""
    errors: list[tuple[int, str]] = []
    values: dict[str, object] = {}
    lines_seen: dict[str, int] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            errors.append((lineno, f"expected key = value, got {line!r}"))
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _SCHEMA:
            errors.append((lineno, f"unknown key {key!r}"))
            continue
        if key in lines_seen:
            errors.append((lineno, f"duplicate key {key!r} (first at line {lines_seen[key]})"))
            continue
        lines_seen[key] = lineno
        codec, constraint, predicate = _SCHEMA[key]
        if value == "" and codec is not str:
            continue  # empty value keeps the default
        try:
            parsed = codec(value)
        except ValueError:
            errors.append((lineno, f"cannot parse {value!r} for {key}"))
            continue
        if predicate is not None and not predicate(parsed):
            errors.append((lineno, f"{key}: constraint violated ({constraint})"))
            continue
        values[key] = parsed

    for key in _MANDATORY:
        if key in values:
            continue
        if key not in lines_seen:
            errors.append((0, f"missing mandatory key {key}"))
        elif not any(ln == lines_seen[key] for ln, _ in errors):
            errors.append((lines_seen[key], f"empty value for mandatory key {key}"))

    if errors:
        raise ConfigError(sorted(errors))

    try:
        params = SystemParams(
            d=values["params.d"],
            alpha=values["params.alpha"],
            beta=values["params.beta"],
            lam=values["params.lambda"],
            mu=values["params.mu"],
            allow_sign_mismatch=values.get("params.allow_sign_mismatch", False),
        )
    except InvalidParamsError as exc:
        raise ConfigError([(lines_seen.get("params.lambda", 0), str(exc))])

    grid = GridSpec(values["params.d"], values["grid.n"], values["grid.L"])

    def initial(comp: str) -> ComponentInitial:
        spec = ComponentInitial()
        for name in (
            "kind",
            "amplitude",
            "width",
            "center",
            "velocity",
            "chirp",
            "radius",
            "noise",
            "path",
        ):
            key = f"initial.{comp}.{name}"
            if key in values:
                spec = replace(spec, **{name: values[key]})
        return spec

    initial_u, initial_v = initial("u"), initial("v")
    for comp, spec in (("u", initial_u), ("v", initial_v)):
        if spec.kind == "file" and not spec.path:
            errors.append((0, f"initial.{comp}.path required for kind=file"))
        for name in ("center", "velocity"):
            vec = getattr(spec, name)
            if vec and len(vec) != grid.d:
                errors.append(
                    (
                        lines_seen.get(f"initial.{comp}.{name}", 0),
                        f"initial.{comp}.{name} needs {grid.d} components",
                    )
                )

    stepper = StepperConfig(
        dt=values["stepper.dt"],
        t_end=values["stepper.t_end"],
        adapt=values.get("stepper.adapt", False),
        blowup_h1_threshold=values.get("stepper.blowup_h1_threshold"),
        boundary_mass_tol=values.get("stepper.boundary_mass_tol", 1e-10),
        sample_every=values.get("diagnostics.every", 10),
    )
    diagnostics = DiagnosticsSpec(
        every=values.get("diagnostics.every", 10),
        enable=values.get("diagnostics.enable", ("conserved",)),
    )
    if "morawetz" in diagnostics.enable and grid.d != 3:
        errors.append((lines_seen.get("diagnostics.enable", 0), "morawetz requires d=3"))
    if "sc_norm" in diagnostics.enable and classify_regime(params).s_c < 0:
        errors.append((lines_seen.get("diagnostics.enable", 0), "sc_norm requires s_c >= 0"))

    if errors:
        raise ConfigError(sorted(errors))

    outputs = OutputSpec(
        dir=values.get("outputs.dir", "runs/out"),
        formats=values.get("outputs.formats", ("csv", "json")),
        checkpoint_every=values.get("outputs.checkpoint_every", 0),
        checkpoint_final=values.get("outputs.checkpoint_final", False),
    )
    run = RunSpec(
        expect_blowup=values.get("run.expect_blowup", False),
        seed=values.get("run.seed", 0),
    )
    return ExperimentConfig(params, grid, initial_u, initial_v, stepper, diagnostics, outputs, run)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; parse_config(serialize_config(c)) == c."""
    lines = [
        "# wnls experiment configuration",
        f"params.d = {cfg.params.d}",
        f"params.alpha = {_fmt(cfg.params.alpha)}",
        f"params.beta = {_fmt(cfg.params.beta)}",
        f"params.lambda = {_fmt(cfg.params.lam)}",
        f"params.mu = {_fmt(cfg.params.mu)}",
        f"params.allow_sign_mismatch = {_fmt(cfg.params.allow_sign_mismatch)}",
        f"grid.n = {cfg.grid.n}",
        f"grid.L = {_fmt(cfg.grid.L)}",
    ]
    for comp, spec in (("u", cfg.initial_u), ("v", cfg.initial_v)):
        lines += [
            f"initial.{comp}.kind = {spec.kind}",
            f"initial.{comp}.amplitude = {_fmt(spec.amplitude)}",
            f"initial.{comp}.width = {_fmt(spec.width)}",
            f"initial.{comp}.center = {_fmt(spec.center)}",
            f"initial.{comp}.velocity = {_fmt(spec.velocity)}",
            f"initial.{comp}.chirp = {_fmt(spec.chirp)}",
            f"initial.{comp}.radius = {_fmt(spec.radius)}",
            f"initial.{comp}.noise = {_fmt(spec.noise)}",
            f"initial.{comp}.path = {spec.path}",
        ]
    lines += [
        f"stepper.dt = {_fmt(cfg.stepper.dt)}",
        f"stepper.t_end = {_fmt(cfg.stepper.t_end)}",
        f"stepper.adapt = {_fmt(cfg.stepper.adapt)}",
        f"stepper.blowup_h1_threshold = {_fmt(cfg.stepper.blowup_h1_threshold)}",
        f"stepper.boundary_mass_tol = {_fmt(cfg.stepper.boundary_mass_tol)}",
        f"diagnostics.every = {cfg.diagnostics.every}",
        f"diagnostics.enable = {_fmt(cfg.diagnostics.enable)}",
        f"outputs.dir = {cfg.outputs.dir}",
        f"outputs.formats = {_fmt(cfg.outputs.formats)}",
        f"outputs.checkpoint_every = {cfg.outputs.checkpoint_every}",
        f"outputs.checkpoint_final = {_fmt(cfg.outputs.checkpoint_final)}",
        f"run.expect_blowup = {_fmt(cfg.run.expect_blowup)}",
        f"run.seed = {cfg.run.seed}",
    ]
    return "\n".join(lines) + "\n"
