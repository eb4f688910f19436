from pathlib import Path

import numpy as np
import pytest

from loadsched.config import ScenarioConfig, ScenarioKind, divides, parse_cloud_steps
from loadsched.errors import ConfigError, CoverageGap
from loadsched.forecast import ForecastSet, perfect_forecast, write_forecast_set
from loadsched.mpc import BarrierMode
from loadsched.schedule_space import EndRule
from loadsched.series import PowerSeries, write_power_csv

from conftest import day_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

MINIMAL = """
[scenario]
dt = 60
decision_interval = 60
horizon = 360

[clearsky]
p_peak = 1
t_rise = 0
t_set = 3600

[load.a]
rated_power = 0.5
tau_on = 30
tau_off = 30
min_on = 120
min_off = 120
"""


def test_shipped_configs_parse_and_validate():
    paths = sorted(CONFIGS.glob("*.ini"))
    assert len(paths) >= 4
    for path in paths:
        cfg = ScenarioConfig.from_file(path).validate()
        assert [ld.id for ld in cfg.loads] == ["L1", "L2", "L3"]


def test_example_values():
    cfg = ScenarioConfig.from_file(CONFIGS / "cloudy_persistence.ini")
    assert cfg.scenario is ScenarioKind.PERSISTENCE
    assert cfg.end_rule is EndRule.EXTENDABLE
    assert cfg.criterion.barrier_weight == 1e-3 and cfg.criterion.mode is BarrierMode.HARD
    assert cfg.cloud == ((36000.0, 37800.0, 0.35), (46800.0, 48000.0, 0.6))
    assert (cfg.hold, cfg.horizon_decisions, cfg.horizon_samples) == (1, 6, 6)
    assert cfg.default_duration() == 43200.0


def test_defaults():
    cfg = ScenarioConfig.from_string(MINIMAL)
    assert cfg.end_rule is EndRule.STRICT and not cfg.first_step_fixed
    assert cfg.dwell_rounding == "ceil" and cfg.criterion.terminal_check
    assert cfg.criterion.barrier_weight == 1e-3


@pytest.mark.parametrize("edit,field", [
    (("decision_interval = 60", "decision_interval = 90"), "decision_interval"),
    (("horizon = 360", "horizon = 330"), "horizon"),
    (("dt = 60", "dt = -1"), "dt"),
    (("[load.a]", "[load.a]\nbogus = 1"), None),
])
def test_nesting_and_field_errors(edit, field):
    text = MINIMAL.replace(*edit)
    if field is None:
        ScenarioConfig.from_string(text)  # unknown keys in a load section are ignored by LoadSpec parsing
        return
    with pytest.raises(ConfigError, match=f"^{field}"):
        ScenarioConfig.from_string(text).validate()


@pytest.mark.parametrize("text,field", [
    (MINIMAL.replace("dt = 60", "dt = 60\ncolour = blue"), "colour"),
    (MINIMAL.replace("[clearsky]", "[nonsense]\n[clearsky]"), "[nonsense]"),
    (MINIMAL.replace("min_on = 120", "min_on = 0"), "load.a"),
    (MINIMAL.replace("rated_power = 0.5", "rated_power = 2"), "power_unit"),
    (MINIMAL + "\n[criterion]\nmode = sideways\n", "criterion"),
    (MINIMAL + "\n[criterion]\nterminal_check = perhaps\n", "terminal_check"),
    (MINIMAL + "\n[criterion]\nweight = 1\n", "weight"),
    (MINIMAL.replace("dt = 60", "dt = 60\nfirst_step_fixed = maybe"), "first_step_fixed"),
    (MINIMAL.replace("dt = 60", "dt = 60\nkind = external"), "forecast_file"),
    (MINIMAL.replace("dt = 60", "dt = 60\nend_rule = loose"), "end_rule"),
    (MINIMAL + "\n[cloud]\nsteps = 10:5:0.5\n", "cloud"),
    ("[load.a]\nrated_power=1\n", "scenario"),
])
def test_errors_name_the_field(text, field):
    with pytest.raises(ConfigError) as info:
        ScenarioConfig.from_string(text).validate()
    assert str(info.value).startswith(field)


def test_exact_rounding_rejects_fractional_dwell():
    cfg = day_config(dwell_rounding="exact")
    with pytest.raises(ConfigError, match="load.L1.min_off"):
        cfg.validate()


def test_divides():
    assert divides(60, 360) and divides(0.1, 0.3) and divides(30, 30)
    assert not divides(60, 90) and not divides(120, 60)


def test_cloud_parser():
    assert parse_cloud_steps("1:2:0.5, 3:4:0") == ((1.0, 2.0, 0.5), (3.0, 4.0, 0.0))
    assert parse_cloud_steps("") == ()
    with pytest.raises(ConfigError):
        parse_cloud_steps("1:2")


def test_actual_power_file_and_coverage(tmp_path):
    actual = PowerSeries(0.0, 60.0, np.full(50, 0.8))
    write_power_csv(actual, tmp_path / "actual.csv")
    text = MINIMAL.replace("horizon = 360", "horizon = 360\nactual_power = actual.csv")
    (tmp_path / "s.ini").write_text(text)
    cfg = ScenarioConfig.from_file(tmp_path / "s.ini")
    assert cfg.actual_power == tmp_path / "actual.csv"
    prepared = cfg.prepare()
    assert prepared.decisions == 43  # (50 - 1) samples minus a 6-sample horizon
    with pytest.raises(CoverageGap):
        cfg.prepare(duration=60.0 * 44)


def test_external_forecast_file(tmp_path):
    actual = PowerSeries(0.0, 60.0, np.linspace(0.2, 0.9, 40))
    write_power_csv(actual, tmp_path / "actual.csv")
    fset = ForecastSet.from_function([60.0 * k for k in range(33)], lambda t: perfect_forecast(actual, t, 6))
    write_forecast_set(fset, tmp_path / "fc.csv")
    text = MINIMAL.replace("horizon = 360", "horizon = 360\nkind = external\nactual_power = actual.csv\n"
                                             "forecast_file = fc.csv")
    (tmp_path / "ext.ini").write_text(text)
    external = ScenarioConfig.from_file(tmp_path / "ext.ini").prepare()
    perfect = ScenarioConfig.from_file(tmp_path / "ext.ini").replace(scenario="perfect").prepare()
    np.testing.assert_array_equal(external.run().demand, perfect.run().demand)
    short = ForecastSet.from_function([60.0 * k for k in range(10)], lambda t: perfect_forecast(actual, t, 6))
    write_forecast_set(short, tmp_path / "fc.csv")
    with pytest.raises(CoverageGap):
        ScenarioConfig.from_file(tmp_path / "ext.ini").prepare()


def test_missing_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError, match="config"):
        ScenarioConfig.from_file(tmp_path / "nope.ini")
