"""Experiment orchestration and the ``lab`` command line tool."""

from .config import ConfigError, ExperimentConfig, resolve_model
from .experiments import (
    run,
    run_anomaly,
    run_compare_embeddings,
    run_donsker,
    run_holder,
    run_nongeo,
    run_occupation,
)
from .report import ExperimentReport, Statistic

__all__ = [
    "ConfigError", "ExperimentConfig", "ExperimentReport", "Statistic", "resolve_model", "run",
    "run_anomaly", "run_compare_embeddings", "run_donsker", "run_holder", "run_nongeo",
    "run_occupation",
]
