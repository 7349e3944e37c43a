from .ablation import run_ablation
from .config import ExperimentConfig, config_from_dict, parse_config
from .plotdata import emit_plot_data
from .runner import TRACE_COLUMNS, RunResult, read_trace, run_experiment

__all__ = [
    "ExperimentConfig", "config_from_dict", "parse_config",
    "run_experiment", "run_ablation", "emit_plot_data", "read_trace",
    "RunResult", "TRACE_COLUMNS",
]
