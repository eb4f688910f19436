"""Moving-horizon on/off scheduling of dwell-constrained loads against a solar forecast."""
from .config import PreparedScenario, ScenarioConfig, ScenarioKind
from .errors import LoadSchedError
from .forecast import ClearSkyProfile, ForecastSet, clear_sky, forecast_errors, perfect_forecast, persistence_forecast
from .kernels import BACKEND
from .loads import DiscretizedLoad, FleetState, LoadSpec, LoadState, discretize, simulate_fleet, step, table_one
from .metrics import battery_estimate, efficiency, exceedance
from .mpc import BarrierMode, CriterionConfig, closed_loop, plan_step, run_closed_loop
from .schedule_space import DwellConstraint, EndRule, count_admissible, enumerate_rows, is_admissible
from .series import PowerSeries, read_power_csv, write_power_csv

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BarrierMode",
    "ClearSkyProfile",
    "CriterionConfig",
    "DiscretizedLoad",
    "DwellConstraint",
    "EndRule",
    "FleetState",
    "ForecastSet",
    "LoadSchedError",
    "LoadSpec",
    "LoadState",
    "PowerSeries",
    "PreparedScenario",
    "ScenarioConfig",
    "ScenarioKind",
    "battery_estimate",
    "clear_sky",
    "closed_loop",
    "count_admissible",
    "discretize",
    "efficiency",
    "enumerate_rows",
    "exceedance",
    "forecast_errors",
    "is_admissible",
    "perfect_forecast",
    "persistence_forecast",
    "plan_step",
    "read_power_csv",
    "run_closed_loop",
    "simulate_fleet",
    "step",
    "table_one",
    "write_power_csv",
]
