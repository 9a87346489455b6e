"""Analytical power model for out-of-order CPU cores.

Hardware knobs become array geometries and energy per operation; simulator
event counts become operation counts and then power. Twenty-five injected
parameters at three levels (architecture, implementation, technology) correct
the model, and the calibration module decides their values from labelled
training designs.
"""

from .calibration import (
    CalibrationConfig, CalibrationDivergence, calibrate_all, calibrate_component,
    decide_tech_array_factor, decide_tech_logic_factor, finite_diff_gradient,
    fit_scaling_baseline,
)
from .dataio import TrainingSample, bundled_config, bundled_config_table
from .evaluation import Metrics, Scenario, mape, pearson_r, run_ablation, split_scenario, transfer_tech
from .hardware import ComponentId, EventCounts, HardwareConfig
from .model import PowerReport, estimate_core
from .params import Level, ParameterSet, default_parameter_set
from .tech import SURROGATE_28NM, SURROGATE_40NM, TechCharacterization, TechProfile

__version__ = "0.1.0"

__all__ = [
    "CalibrationConfig", "CalibrationDivergence", "ComponentId", "EventCounts", "HardwareConfig",
    "Level", "Metrics", "ParameterSet", "PowerReport", "SURROGATE_28NM", "SURROGATE_40NM",
    "Scenario", "TechCharacterization", "TechProfile", "TrainingSample", "bundled_config",
    "bundled_config_table", "calibrate_all", "calibrate_component", "decide_tech_array_factor",
    "decide_tech_logic_factor", "default_parameter_set", "estimate_core", "finite_diff_gradient",
    "fit_scaling_baseline", "mape", "pearson_r", "run_ablation", "split_scenario", "transfer_tech",
]
