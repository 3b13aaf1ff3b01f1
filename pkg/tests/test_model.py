import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hetnet.model import (AlwaysNlos, ENERGY_SCENARIOS, ExponentialLos, Link, NetworkConfig,
                          PowerModel, ThreeGppLinearLos, ThreeGppTwoPieceLos, TierParams,
                          apply_energy, area_power, b_constant, db_to_linear, dbm_to_watts,
                          effective_tx_power, linear_to_db, los_probability, paper_two_tier,
                          watts_to_dbm)
from hetnet.numerics import QuadratureSpec, integrate

from conftest import single_tier

LOS_MODELS = [ExponentialLos(0.01), ExponentialLos(1e-4), ThreeGppLinearLos(300.0),
              ThreeGppTwoPieceLos(156.0, 30.0), AlwaysNlos()]


def tier(**kw):
    base = dict(density=1e-5, tx_power_dbm=46.0, pl_intercept_nl_db=2.7, pl_intercept_l_db=30.8,
                alpha_nl=4.28, alpha_l=2.42, shadow_sigma_nl_db=8.0, shadow_sigma_l_db=4.0,
                sinr_threshold_db=0.0)
    base.update(kw)
    return TierParams(**base)


def test_db_conversions():
    assert db_to_linear(0.0) == 1.0
    assert db_to_linear(10.0) == pytest.approx(10.0)
    assert dbm_to_watts(-95.0) == pytest.approx(3.1623e-13, rel=1e-4)
    assert dbm_to_watts(0.0) == pytest.approx(1e-3)
    assert linear_to_db(100.0) == pytest.approx(20.0)
    assert watts_to_dbm(1.0) == pytest.approx(30.0)
    with pytest.raises(ValueError):
        db_to_linear(float("nan"))


@given(st.floats(-200, 200))
def test_db_round_trip(x):
    assert linear_to_db(db_to_linear(x)) == pytest.approx(x, abs=1e-9)


def test_los_probability_examples():
    exp = ExponentialLos(0.01)
    assert los_probability(exp, 0.0) == 1.0
    assert los_probability(exp, 100.0) == pytest.approx(0.36788, abs=1e-5)
    assert los_probability(AlwaysNlos(), 123.0) == 0.0
    with pytest.raises(ValueError):
        los_probability(exp, -1.0)


@pytest.mark.parametrize("model", LOS_MODELS, ids=lambda m: type(m).__name__)
@given(d=st.floats(0, 1e5), dd=st.floats(0, 1e4))
def test_los_probability_bounded_and_monotone(model, d, dd):
    p1, p2 = float(model.los(d)), float(model.los(d + dd))
    assert 0.0 <= p1 <= 1.0
    assert p2 <= p1 + 1e-15
    assert float(model.nlos(d)) == pytest.approx(1.0 - p1)


@pytest.mark.parametrize("model", LOS_MODELS, ids=lambda m: type(m).__name__)
@pytest.mark.parametrize("x", [0.5, 20.0, 156.0, 400.0, 3000.0])
def test_los_moment_matches_quadrature(model, x):
    spec = QuadratureSpec(rel_tol=1e-10, abs_tol=1e-12)
    for link in (Link.NL, Link.L):
        expected = integrate(lambda z: model.prob(link, z) * z, 0.0, x, spec)
        assert float(model.moment(link, x)) == pytest.approx(float(expected), rel=1e-8, abs=1e-12)


def test_two_piece_validation():
    with pytest.raises(ValueError):
        ThreeGppTwoPieceLos(156.0, 200.0)
    with pytest.raises(ValueError):
        ExponentialLos(-1.0)


def test_tier_invariants():
    with pytest.raises(ValueError):
        tier(alpha_nl=2.0)
    with pytest.raises(ValueError):
        tier(alpha_nl=3.0, alpha_l=3.5)
    with pytest.raises(ValueError):
        tier(density=-1.0)
    with pytest.raises(ValueError):
        tier(shadow_sigma_l_db=-1.0)
    with pytest.raises(ValueError):
        tier(energy_b=-1.0)


def test_fixed_power():
    assert effective_tx_power(tier(tx_power_dbm=46.0)) == pytest.approx(39.81, rel=1e-4)
    assert effective_tx_power(tier(tx_power_dbm=0.0)) == pytest.approx(1e-3)


def test_density_dependent_power_matches_scalar_oracle():
    # Oracle from a 30-digit mpmath evaluation of T*eta*r^alpha / 10^(-A/10).
    t = tier(density=1e-4, sinr_threshold_db=0.0, pl_intercept_nl_db=2.7, alpha_nl=4.28)
    p = effective_tx_power(t, PowerModel.DENSITY_DEPENDENT, -95.0)
    assert p == pytest.approx(1.845437206964574e-05, rel=1e-10)


@given(st.floats(1e-9, 1e-2))
def test_density_dependent_power_positive(density):
    assert effective_tx_power(tier(density=density), PowerModel.DENSITY_DEPENDENT, -95.0) > 0


def test_density_dependent_power_errors():
    with pytest.raises(ValueError):
        effective_tx_power(tier(density=0.0), PowerModel.DENSITY_DEPENDENT, -95.0)
    with pytest.raises(ValueError):
        effective_tx_power(tier(), PowerModel.DENSITY_DEPENDENT, None)


def test_b_constant():
    assert b_constant(tier(tx_power_dbm=0.0, pl_intercept_nl_db=0.0), Link.NL) == pytest.approx(1e-3)
    assert b_constant(tier(tx_power_dbm=46.0, pl_intercept_l_db=30.8), Link.L) == pytest.approx(0.03311, rel=1e-3)
    # 10^((24 - 30 - 41.1)/10) W; see the decisions ledger for the listed 4.898e-6.
    assert b_constant(tier(tx_power_dbm=24.0, pl_intercept_l_db=41.1, alpha_l=2.09, alpha_nl=3.75),
                      Link.L) == pytest.approx(1.9498e-5, rel=1e-4)


def test_network_config_helpers(preset):
    assert preset.n_tiers == 2
    assert preset.densities == (1e-5, 1e-4)
    assert preset.with_densities([0.0, 0.0]).any_deployed is False
    key = preset.coverage_key()
    assert all(t.energy_a == 0 and t.energy_b == 0 for t in key.tiers)
    assert key == apply_energy(preset, "S2").coverage_key()
    with pytest.raises(ValueError):
        preset.with_densities([1.0])


def test_area_power_examples():
    cfg = single_tier(density=1e-5, tx_power_dbm=46.0, energy_a=1.0, energy_b=0.0)
    assert area_power(cfg) == pytest.approx(3.981e-4, rel=1e-3)
    macro = paper_two_tier(1e-6, 0.0, AlwaysNlos(), energy="S1")
    assert area_power(macro) == pytest.approx(1.314e-3, rel=1e-3)
    assert area_power(macro.with_densities([0.0, 0.0])) == 0.0


def test_energy_scenarios():
    assert ENERGY_SCENARIOS["S3"].a == (10.3, 5.5)
    assert ENERGY_SCENARIOS["S3"].b == (156.2, 32.0)
    cfg = apply_energy(paper_two_tier(1e-5, 1e-4, AlwaysNlos()), "S2")
    assert [(t.energy_a, t.energy_b) for t in cfg.tiers] == [(1.0, 0.0), (1.0, 0.0)]
