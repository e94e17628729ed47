"""Scenario model, validation, and the text file format."""

import math

import numpy as np
import pytest

from pcca import (
    BarrierParams,
    Controller,
    ObservationMode,
    Scenario,
    ScenarioParseError,
    ScenarioValidationError,
    load_scenario,
    load_scenario_file,
    save_scenario,
    scenario_digest,
    validate_scenario,
)
from helpers import agent, head_on, pursuit


def test_scenario_defaults():
    s = head_on()
    assert s.dt == 0.05
    assert s.observation is ObservationMode.EXACT
    assert s.symmetry_perturbation == 0.0


def test_damping_root_exact():
    # x^2 + 5x + 6 factors as (x+2)(x+3); the more negative root is kept
    assert BarrierParams(r=4.0, l0=6.0, l1=5.0).lambda1 == -3.0


def test_damping_root_complex_pair_is_nan():
    assert math.isnan(BarrierParams(r=4.0, l0=10.0, l1=5.0).lambda1)


def test_committed_scenarios_validate():
    for name in ("example1", "example1_perturbed", "example2"):
        s = load_scenario_file(f"scenarios/{name}.ini")
        assert validate_scenario(s) == [], name


def _violations(s):
    return "\n".join(validate_scenario(s))


def test_validation_needs_two_agents():
    s = head_on()
    single = Scenario(agents=s.agents[:1], barrier=s.barrier, horizon=s.horizon)
    assert "at least 2 agents" in _violations(single)


def test_validation_radius_chi_and_target():
    bad = Scenario(
        agents=(
            agent([-10, 0], [0, 0], [10, 0], Controller.PCCA, radius=-1.0, chi=0.7),
            agent([10, 0], [0, 0], [-10, 0], Controller.PURSUER, target=1),
        ),
        barrier=BarrierParams(r=4.0, l0=6.0, l1=5.0),
        horizon=30.0,
    )
    text = _violations(bad)
    assert "radius must be > 0" in text
    assert "chi must be 1 or 0.5" in text
    assert "pursuer target 1 is not another agent" in text


def test_validation_barrier_params():
    s = head_on()
    bad = Scenario(agents=s.agents, barrier=BarrierParams(r=3.0, l0=-1.0, l1=4.0),
                   horizon=30.0)
    text = _violations(bad)
    assert "l0 must be > 0" in text
    assert "r must be >= 2*max(radius)" in text
    complex_roots = Scenario(agents=s.agents,
                             barrier=BarrierParams(r=4.0, l0=10.0, l1=4.0),
                             horizon=30.0)
    assert "roots must be real" in _violations(complex_roots)


def test_validation_times_and_perturbation():
    s = head_on()
    bad = Scenario(agents=s.agents, barrier=s.barrier, horizon=0.01, dt=0.05,
                   symmetry_perturbation=-1e-3)
    text = _violations(bad)
    assert "horizon must exceed dt" in text
    assert "symmetry_perturbation must be >= 0" in text
    worse = Scenario(agents=s.agents, barrier=s.barrier, horizon=1.0, dt=0.0)
    assert "dt must be > 0" in _violations(worse)


def test_validation_initial_overlap():
    bad = Scenario(
        agents=(
            agent([0, 0], [0, 0], [10, 0], Controller.PCCA),
            agent([3.0, 0], [0, 0], [-10, 0], Controller.PCCA),
        ),
        barrier=BarrierParams(r=4.0, l0=6.0, l1=5.0),
        horizon=30.0,
    )
    assert "initial distance not > r" in _violations(bad)


def test_validation_non_finite():
    bad = Scenario(
        agents=(
            agent([np.nan, 0], [0, 0], [10, 0], Controller.PCCA),
            agent([10, 0], [0, 0], [np.inf, 0], Controller.PCCA),
        ),
        barrier=BarrierParams(r=4.0, l0=6.0, l1=5.0),
        horizon=30.0,
    )
    text = _violations(bad)
    assert "agent 0: initial state has non-finite entries" in text
    assert "agent 1: destination has non-finite entries" in text


def test_save_load_round_trip_is_fixed_point():
    for s in (head_on(perturb=1e-3), pursuit()):
        text = save_scenario(s)
        again = save_scenario(load_scenario(text))
        assert text == again
        assert scenario_digest(s) == scenario_digest(load_scenario(text))


def test_save_uses_plain_float_repr():
    # regression: numpy scalar repr ("np.float64(...)") must never leak in
    text = save_scenario(head_on())
    assert "np.float64" not in text
    assert "position = -10.0, 0.0" in text


def test_digest_tracks_content():
    assert scenario_digest(head_on(r=4.0)) != scenario_digest(head_on(r=4.05))
    assert len(scenario_digest(head_on())) == 12


def test_parse_error_names_section_and_key():
    text = save_scenario(head_on()).replace("position = -10.0, 0.0",
                                            "position = ten, 0.0")
    with pytest.raises(ScenarioParseError, match=r"\[agent 0\] position"):
        load_scenario(text)


def test_parse_unknown_controller():
    text = save_scenario(head_on()).replace("controller = pcca",
                                            "controller = warp", 1)
    with pytest.raises(ScenarioParseError, match="controller"):
        load_scenario(text)


def test_parse_unknown_key_rejected():
    text = save_scenario(head_on()).replace("[barrier]", "[barrier]\nr2 = 1.0")
    with pytest.raises(ScenarioParseError, match="unknown key"):
        load_scenario(text)


def test_parse_missing_key():
    text = save_scenario(head_on()).replace("r = 4.0\n", "")
    with pytest.raises(ScenarioParseError, match="missing required key"):
        load_scenario(text)


def test_parse_missing_section():
    with pytest.raises(ScenarioParseError):
        load_scenario("[scenario]\nhorizon = 30.0\n")


def test_parse_vector_arity():
    text = save_scenario(head_on()).replace("velocity = 0.0, 0.0",
                                            "velocity = 0.0", 1)
    with pytest.raises(ScenarioParseError, match="expected two numbers"):
        load_scenario(text)


def test_load_runs_validation():
    text = save_scenario(head_on()).replace("position = -10.0, 0.0",
                                            "position = 9.0, 0.0")
    with pytest.raises(ScenarioValidationError) as info:
        load_scenario(text)
    assert any("initial distance" in v for v in info.value.violations)
