import numpy as np
import pytest

from fk_ergo.scenario import SCENARIOS, ScenarioConfig, ScenarioError, get_scenario
from fk_ergo.state_space import GridSpace

SEG = GridSpace.segment(-8, 8, 321)


def test_every_preset_is_valid(scenario_name):
    s = SCENARIOS[scenario_name]
    assert s.config.violations(s.grid) == []


def test_unknown_preset():
    with pytest.raises(KeyError, match="unknown scenario"):
        get_scenario("nope")


def test_unknown_family():
    with pytest.raises(ScenarioError):
        ScenarioConfig("brownian")


def test_bad_expression_fails_at_construction():
    with pytest.raises(ValueError):
        ScenarioConfig("ou", rho=0.5, weight="import os")


def test_ou_beta_above_bound_cites_the_bound():
    cfg = ScenarioConfig("ou", rho=0.5, beta=0.45)
    (msg,) = cfg.violations()
    assert "(1-rho^2)/(2 sigma^2)" in msg and "0.375" in msg


def test_dmc_beta_above_bound_cites_the_bound():
    cfg = ScenarioConfig("gaussian_rw", weight="-x**2", a=1.0, c=0.0, beta=0.45)
    (msg,) = cfg.violations(SEG)
    assert "sqrt(1 + 2/(a sigma^2))" in msg and "0.366025" in msg


def test_confinement_checked_on_grid():
    cfg = ScenarioConfig("gaussian_rw", weight="-x**2/2", a=1.0, c=0.0, beta=0.3)
    assert any("V(x) >= a x^2 - c" in m for m in cfg.violations(SEG))


def test_weight_growth_checked_on_grid():
    cfg = ScenarioConfig("ou", rho=0.5, weight="x**2", a=1.0, p=1.0, c=0.0)
    problems = cfg.violations(SEG)
    assert any("a|x|^p" in m for m in problems)


def test_euler_maruyama_needs_torus_and_dt():
    cfg = ScenarioConfig("euler_maruyama", drift="-sin(x)")
    problems = cfg.violations(SEG)
    assert any("dt > 0" in m for m in problems) and any("torus" in m for m in problems)
    with pytest.raises(ScenarioError):
        cfg.validate(SEG)


def test_default_lyapunov_function():
    cfg = ScenarioConfig("ou", rho=0.5, beta=0.3)
    np.testing.assert_allclose(cfg.lyapunov_function(SEG).values, np.exp(0.3 * SEG.nodes**2))
    np.testing.assert_array_equal(ScenarioConfig("ou", rho=0.5).lyapunov_function(SEG).values, 1.0)
    with pytest.raises(ScenarioError):
        ScenarioConfig("ou", rho=0.5, lyapunov="0.5").lyapunov_function(SEG)


def test_tilt_scale():
    assert SCENARIOS["torus_em"].config.scale == 0.1
    assert SCENARIOS["ou_harmonic"].config.scale == 1.0


def test_digest_is_stable_and_sensitive():
    a = SCENARIOS["ou_harmonic"].config
    assert a.digest() == a.with_().digest()
    assert a.digest() != a.with_(rho=0.4).digest()
