"""Experiment harness: config files, runs, grid tuning and CSV traces."""

from .config import ExperimentConfig, MethodSpec, TuneSpec, load_config, parse_config
from .runner import ExperimentResult, TunePoint, TuneResult, build_problem, run_experiment, run_method, tune_grid
from .traces import SummaryRow, emit_trace, read_summary, read_trace, summarize, write_summary
