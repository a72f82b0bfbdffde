from .config import ConfigError, ExperimentConfig, bundled_config, load_config, parse_config
from .outputs import emit_outputs, load_curves
from .runner import ExperimentResult, run_experiment, run_single, tune_scales
from .stats import compare_policies, mean_of_scale_range, welch_t_test

__all__ = [
    "ConfigError", "ExperimentConfig", "ExperimentResult", "bundled_config", "compare_policies",
    "emit_outputs", "load_config", "load_curves", "mean_of_scale_range", "parse_config",
    "run_experiment", "run_single", "tune_scales", "welch_t_test",
]
