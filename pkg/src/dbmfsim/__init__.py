"""dbmfsim: deterministic packet-level MANET simulator with fuzzy-fusion
multipath load balancing (DBMF) and simplified baseline protocols."""

from .engine import Simulation, run
from .kernels import backend_name
from .model import (Flow, FuzzyLabel, InvalidConfigError, Path,
                    ScenarioConfig, load_scenario, scenario_from_dict,
                    validate_config)
from .report import MetricsReport, to_csv

__version__ = "0.1.0"

__all__ = [
    "Simulation", "run", "backend_name", "Flow", "FuzzyLabel",
    "InvalidConfigError", "Path", "ScenarioConfig", "load_scenario",
    "scenario_from_dict", "validate_config", "MetricsReport", "to_csv",
    "__version__",
]
