"""Experiment runner: configuration, persistence, scans and verification."""

from .config import (
    ComponentInitial,
    DiagnosticsSpec,
    ExperimentConfig,
    GridSpec,
    OutputSpec,
    RunSpec,
    parse_config,
    serialize_config,
)
from .checkpoint import CheckpointHeader, load_checkpoint, save_checkpoint
from .runner import ExperimentResult, build_initial_state, run_experiment
from .scan import CellResult, phase_scan
