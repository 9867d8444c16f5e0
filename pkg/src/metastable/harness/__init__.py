"""Experiment configuration, runners, result files and plots behind the ``metastable`` CLI."""

from .config import DEFAULT_SIGMAS, DEFAULT_TOLERANCES, EXPERIMENTS, ExperimentConfig, build_config, load_config
from .experiments import TaskResult, run_experiment, run_task
from .output import COLUMNS, SCHEMA_VERSION, ResultRow, RowWriter, read_rows
from .plot import plot_file, render_svg

__all__ = [
    "DEFAULT_SIGMAS", "DEFAULT_TOLERANCES", "EXPERIMENTS", "ExperimentConfig", "build_config",
    "load_config", "TaskResult", "run_experiment", "run_task", "COLUMNS", "SCHEMA_VERSION",
    "ResultRow", "RowWriter", "read_rows", "plot_file", "render_svg",
]
