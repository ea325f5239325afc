import numpy as np
import pytest

from energyloans.contracts import EnergyContract, build_domain, utility
from energyloans.scenarios import (
    NoiseModel, ScenarioSet, expected_utility, expected_utility_grid, expected_utility_nodeal,
    generate_scenarios,
)

from conftest import context, inert_battery, series


def test_zero_sigma_reproduces_prediction():
    pred = series(np.linspace(-0.5, 0.5, 8))
    scen = generate_scenarios(pred, NoiseModel.linear(0.0, 8, 0.3, seed=1), 5)
    assert len(scen) == 5
    for s in range(5):
        np.testing.assert_array_equal(scen.scenarios[s], pred.values)


def test_independent_lags_have_configured_spread():
    pred = series(np.zeros(4))
    scen = generate_scenarios(pred, NoiseModel((0.1, 0.2, 0.3, 0.4), 0.0, seed=3), 10_000)
    np.testing.assert_allclose(scen.scenarios.std(axis=0), [0.1, 0.2, 0.3, 0.4], rtol=0.05)


def test_full_correlation_keeps_errors_constant():
    pred = series(np.zeros(6))
    scen = generate_scenarios(pred, NoiseModel((0.2,) * 6, 1.0, seed=9), 50)
    d = scen.scenarios
    np.testing.assert_allclose(d, d[:, :1].repeat(6, axis=1), atol=1e-15)


def test_same_seed_same_scenarios():
    pred = series(np.ones(10))
    a = generate_scenarios(pred, NoiseModel.linear(0.1, 10, 0.5, seed=4), 20)
    b = generate_scenarios(pred, NoiseModel.linear(0.1, 10, 0.5, seed=4), 20)
    np.testing.assert_array_equal(a.scenarios, b.scenarios)


def test_linear_sigma_schedule():
    assert NoiseModel.linear(0.4, 4).sigma_per_lag == pytest.approx((0.1, 0.2, 0.3, 0.4))


def test_expected_utility_is_equiprobable_mean():
    ctx = context([0.0], battery=inert_battery(), weights=(0.0, 1.0))
    scen = ScenarioSet(series([0.0]).grid, np.array([[1.0], [3.0]]))
    assert expected_utility(None, ctx, scen) == pytest.approx(-2.0, abs=1e-9)


def test_single_scenario_equals_deterministic():
    net = np.array([0.2, -0.4, 0.5, 0.1, -0.3])
    ctx = context(net)
    scen = generate_scenarios(series(net), NoiseModel.linear(0.0, 5, seed=0), 1)
    c = EnergyContract(-0.5, 3)
    assert expected_utility(c, ctx, scen) == pytest.approx(utility(c, ctx, 0, 4), abs=1e-12)


def test_grid_matches_reference(backend):
    rng = np.random.default_rng(0)
    net = rng.normal(0, 0.4, 12)
    ctx = context(net)
    scen = generate_scenarios(series(net), NoiseModel.linear(0.1, 12, 0.4, seed=2), 7)
    dom = build_domain([-0.6, -0.2, 0.3, 0.9], [2, 5, 11])
    grid = expected_utility_grid(ctx, dom, scen, backend=backend)
    ref = np.array([expected_utility(c, ctx, scen) for c in dom]).reshape(dom.shape)
    np.testing.assert_allclose(grid, ref, atol=1e-12, rtol=0)
    assert expected_utility_nodeal(ctx, scen, backend=backend) == pytest.approx(
        expected_utility(None, ctx, scen), abs=1e-12)


def test_counterparty_grid_mirrors_sign(backend):
    net = np.array([0.3, -0.2, 0.1, 0.4, -0.5, 0.0])
    ctx = context(net)
    scen = generate_scenarios(series(net), NoiseModel.linear(0.05, 6, seed=5), 3)
    dom = build_domain([-0.5, 0.5], [1, 3])
    g = expected_utility_grid(ctx, dom, scen, sign=-1.0, backend=backend)
    ref = np.array([expected_utility(c, ctx, scen, side="counterparty") for c in dom]).reshape(dom.shape)
    np.testing.assert_allclose(g, ref, atol=1e-12)


def test_permutation_and_duplication_invariance(backend):
    rng = np.random.default_rng(3)
    net = rng.normal(0, 0.3, 9)
    ctx = context(net)
    scen = generate_scenarios(series(net), NoiseModel.linear(0.2, 9, 0.5, seed=8), 6)
    dom = build_domain([-0.5, 0.5], [2, 4, 8])
    base = expected_utility_grid(ctx, dom, scen, backend=backend)
    perm = ScenarioSet(scen.grid, scen.scenarios[rng.permutation(6)])
    dup = ScenarioSet(scen.grid, np.concatenate([scen.scenarios, scen.scenarios]))
    np.testing.assert_allclose(expected_utility_grid(ctx, dom, perm, backend=backend), base, atol=1e-12)
    np.testing.assert_allclose(expected_utility_grid(ctx, dom, dup, backend=backend), base, atol=1e-12)
