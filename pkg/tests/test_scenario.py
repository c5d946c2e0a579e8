import pytest
from hypothesis import given, strategies as st

from qwaveguide.scenario import ConfigError, Scenario, builtin, builtin_names


@pytest.mark.parametrize("name", builtin_names())
def test_builtin_yaml_round_trip(name):
    s = builtin(name)
    back = Scenario.from_yaml(s.to_yaml())
    assert back.to_dict() == s.to_dict()
    assert Scenario.from_yaml(back.to_yaml()).to_yaml() == s.to_yaml()


def test_builtins_present():
    assert {"fig3", "fig4a", "fig4b", "fig4c", "fig5", "figS4"} <= set(builtin_names())
    with pytest.raises(KeyError):
        builtin("nope")


def _base():
    return builtin("fig4a").to_dict()


@pytest.mark.parametrize(
    "path, value, field",
    [
        (("sweep", "points"), 0, "sweep.points"),
        (("sweep", "axis"), "time", "sweep.axis"),
        (("input", "occupations"), [1, -1], "input.occupations"),
        (("input", "occupations"), [1, 0, 0], "input.occupations"),
        (("detection", "efficiency"), 1.5, "detection"),
        (("detection", "loss"), "magic", "detection.loss"),
        (("fit", "harmonic"), 3, "fit.harmonic"),
    ],
)
def test_field_level_errors(path, value, field):
    d = _base()
    d[path[0]][path[1]] = value
    with pytest.raises(ConfigError) as err:
        Scenario.from_dict(d)
    assert err.value.field.startswith(field.split(".")[0])
    assert field.split(".")[0] in str(err.value)


def test_unknown_and_missing_fields():
    d = _base()
    d["colour"] = "red"
    with pytest.raises(ConfigError, match="colour"):
        Scenario.from_dict(d)
    d = _base()
    del d["circuit"]
    with pytest.raises(ConfigError, match="circuit"):
        Scenario.from_dict(d)


def test_bad_yaml():
    with pytest.raises(ConfigError):
        Scenario.from_yaml("name: [unclosed")


def test_decreasing_grid_rejected():
    d = _base()
    d["sweep"] = {"axis": "phase", "values": [0.0, 0.2, 0.1]}
    with pytest.raises(ConfigError, match="increasing"):
        Scenario.from_dict(d)


@given(st.integers(0, 2**31), st.integers(1, 10**6))
def test_seed_and_trials_round_trip(seed, trials):
    d = _base()
    d["seed"], d["trials"] = seed, trials
    s = Scenario.from_yaml(Scenario.from_dict(d).to_yaml())
    assert (s.seed, s.trials) == (seed, trials)
