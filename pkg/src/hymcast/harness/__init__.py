"""Everything needed to run experiments from a scenario file or the command line."""

from .config import ConfigError, ScenarioConfig, SweepAxis, config_from_dict, load_config
from .presets import PRESET_NAMES, preset
from .sweep import (
    AggregateRow,
    RunRow,
    SweepTable,
    beam_pattern_study,
    correlation_study,
    mean_power_dbm,
    realization_seed,
    run_once,
    run_sweep,
)

__all__ = [
    "AggregateRow",
    "ConfigError",
    "PRESET_NAMES",
    "RunRow",
    "ScenarioConfig",
    "SweepAxis",
    "SweepTable",
    "beam_pattern_study",
    "config_from_dict",
    "correlation_study",
    "load_config",
    "mean_power_dbm",
    "preset",
    "realization_seed",
    "run_once",
    "run_sweep",
]
