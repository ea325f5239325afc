import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from energyloans.battery import BatterySpec, BatteryState, greedy_dispatch
from energyloans.contracts import CriteriaWeights, EnergyContract
from energyloans.welfare import (
    S0, S1, S2, AgentTrajectory, StrategyId, WelfareReport, nash_distance, nash_relative, nash_solution,
    normalize_distances, strategy_utility, utilitarian_sw,
)

from conftest import series


def traj(net, dispatch=None, exchange=None, soc=None, battery=None):
    net = np.asarray(net, float)
    n = len(net)
    d = np.zeros(n) if dispatch is None else np.asarray(dispatch, float)
    x = np.zeros(n) if exchange is None else np.asarray(exchange, float)
    soc = np.full(n + 1, 3.0) if soc is None else np.asarray(soc, float)
    return AgentTrajectory(net, x, d, net + x + d, soc, battery or BatterySpec())


def test_zero_demand_scores_zero():
    for s in (S0, S1, S2):
        assert strategy_utility(traj(np.zeros(4)), s, CriteriaWeights(0.33, 0.67)) == 0.0


def test_s0_example():
    u = strategy_utility(traj([1.0, -1.5, 0.5]), S0, CriteriaWeights(0.33, 0.67))
    assert u == pytest.approx(-2.01)


def test_lossless_battery_flattens_under_s1():
    spec = BatterySpec(capacity_kwh=100.0, charge_rate_kw=10.0, discharge_rate_kw=10.0,
                       eta_charge=1.0, eta_discharge=1.0, soc_min_frac=0.0, soc_max_frac=1.0)
    net = np.array([0.4, -0.6, 0.2])
    res = greedy_dispatch(series(net), BatteryState(50.0), spec)
    soc = np.concatenate([[50.0], res.soc_trajectory])
    t = traj(net, res.dispatch.values, soc=soc, battery=spec)
    w = CriteriaWeights(0.5, 0.5)
    assert strategy_utility(t, S1, w) == pytest.approx(0.0, abs=1e-12)
    assert strategy_utility(t, S1, w) >= strategy_utility(t, S0, w)


def test_s1_rejects_exchange():
    with pytest.raises(ValueError):
        strategy_utility(traj([0.0, 0.0], exchange=[1.0, -1.0]), S1, CriteriaWeights())


def test_horizon_check():
    with pytest.raises(ValueError):
        strategy_utility(traj([0.0]), S0, CriteriaWeights(), horizon=2)


def test_sw_examples():
    assert utilitarian_sw({"a": -1, "b": -2, "c": -3}) == -6
    assert utilitarian_sw({"a": -1.5}) == -1.5


def test_nash_relative_examples():
    assert nash_relative({"a": 2.0, "b": 3.0}, {"a": 0.0, "b": 0.0}) == (6.0, 0)
    prod, neg = nash_relative({"a": 2.0, "b": 1.0}, {"a": 0.0, "b": 1.0})
    assert prod == 0.0 and neg == 1


def test_nash_solution_examples():
    cs = [EnergyContract(q, 2) for q in (1.0, 2.0, 3.0, 4.0)]
    assert nash_solution(cs, [0.9, 0.5, 0.2, 0.6], [0.1, 0.5, 0.8, 0.3]) == cs[1]
    u = [0.3, 0.9, 0.1, 0.5]
    assert nash_solution(cs, u, u) == cs[int(np.argmax(u))]
    assert nash_solution(cs[:1], [0.2], [0.7]) == cs[0]


@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=40))
def test_nash_solution_maximizes_product(pairs):
    cs = [EnergyContract(float(i + 1), 1) for i in range(len(pairs))]
    best = nash_solution(cs, [p[0] for p in pairs], [p[1] for p in pairs])
    i = cs.index(best)
    assert pairs[i][0] * pairs[i][1] == max(a * b for a, b in pairs)


def test_nash_distance_examples():
    assert nash_distance((0.5, 0.5), (0.5, 0.5), (0.0, 0.0))[0] == 0.0
    assert nash_distance((0.0, 0.0), (1.0, 1.0), (0.0, 0.0)) == pytest.approx((math.sqrt(2), math.sqrt(2)))
    assert nash_distance((0.2, 0.4), (0.3, 0.3), (0.3, 0.3))[1] == 0.0


def test_normalize_distances_pooled_max():
    assert normalize_distances([(0, 1.0, 2.0), (1, 0.5, 4.0)]) == [(0, 0.25, 0.5), (1, 0.125, 1.0)]
    assert normalize_distances([(0, 0.0, 0.0)]) == [(0, 0.0, 0.0)]


def test_report_assembly():
    per = {"b": {"s0": -3.0, "s1": -2.0, "s2": -1.0}, "a": {"s0": -4.0, "s1": -2.5, "s2": -2.0}}
    rep = WelfareReport.assemble(per, [(0, 0.1, 0.2)])
    assert rep.utilitarian == {"s0": -7.0, "s1": -4.5, "s2": -3.0}
    assert rep.nash_relative["s2|s0"] == {"product": 2.0 * 2.0, "negative_count": 0}
    assert list(rep.per_agent_utility) == ["a", "b"]
    assert rep.mean_distances() == (0.5, 1.0)
    assert StrategyId("s2").long_name == "negotiation_and_control"


@given(st.dictionaries(st.text(min_size=1, max_size=3), st.floats(-100, 100), min_size=1, max_size=9),
       st.floats(-10, 10))
def test_sw_linearity(per, a):
    scaled = {k: a * v for k, v in per.items()}
    assert utilitarian_sw(scaled) == pytest.approx(a * utilitarian_sw(per), abs=1e-9)


@given(st.lists(st.floats(-5, 5).filter(lambda x: abs(x) > 1e-6), min_size=1, max_size=9))
def test_nash_relative_sign(diffs):
    s = {str(i): d for i, d in enumerate(diffs)}
    h = {str(i): 0.0 for i in range(len(diffs))}
    prod, neg = nash_relative(s, h)
    assert neg == sum(d < 0 for d in diffs)
    if prod != 0:
        assert (prod > 0) == (neg % 2 == 0)
