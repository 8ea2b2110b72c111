"""Experiment harness: spec files, seeded sweeps and the ``flowsim`` CLI."""

from .experiment import (
    ExperimentResult,
    ResultRow,
    emit_results,
    run_experiment,
    verify_workflow,
)
from .specfile import ExperimentSpec, load_spec, parse_spec

__all__ = [
    "ExperimentResult",
    "ExperimentSpec",
    "ResultRow",
    "emit_results",
    "load_spec",
    "parse_spec",
    "run_experiment",
    "verify_workflow",
]
