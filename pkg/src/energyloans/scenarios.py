"""Net-load scenarios around a prediction and expected contract utility."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .contracts import OFFEROR, AgentContext, EnergyContract, NegotiationDomain, utility, weighted_utility
from .profiles import PowerSeries, TimeGrid


@dataclass(frozen=True)
class NoiseModel:
    sigma_per_lag: tuple
    rho: float = 0.0
    seed: int = 0

    def __post_init__(self):
        sig = tuple(float(s) for s in self.sigma_per_lag)
        if any(s < 0 for s in sig):
            raise ValueError("sigma_per_lag entries must be >= 0")
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must be in [-1, 1], got {self.rho}")
        object.__setattr__(self, "sigma_per_lag", sig)

    @classmethod
    def linear(cls, sigma_base: float, n_lags: int, rho: float = 0.0, seed: int = 0) -> "NoiseModel":
        """Error spread growing linearly from ``sigma_base/n`` to ``sigma_base``."""
        return cls(tuple(sigma_base * l / n_lags for l in range(1, n_lags + 1)), rho, seed)


@dataclass(frozen=True)
class ScenarioSet:
    grid: TimeGrid
    scenarios: np.ndarray = field(repr=False)  # (count, periods)

    def __post_init__(self):
        arr = np.array(self.scenarios, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] != self.grid.num_periods:
            raise ValueError(f"scenario array of shape {arr.shape} does not fit grid {self.grid}")
        arr.setflags(write=False)
        object.__setattr__(self, "scenarios", arr)

    def __len__(self):
        return self.scenarios.shape[0]

    @property
    def probability(self) -> float:
        return 1.0 / len(self)

    def series(self, s: int) -> PowerSeries:
        return PowerSeries(self.grid, self.scenarios[s], "net")


def generate_scenarios(predicted_net: PowerSeries, noise: NoiseModel, count: int) -> ScenarioSet:
    """Sample ``count`` equiprobable net-load paths around a window prediction.

    Errors follow an AR(1) recursion: each lag has its own spread, and ``rho``
    couples consecutive periods.
    """
    n = len(predicted_net)
    if count < 1:
        raise ValueError("scenario count must be >= 1")
    if len(noise.sigma_per_lag) < n:
        raise ValueError(f"sigma_per_lag has {len(noise.sigma_per_lag)} lags, window needs {n}")
    sigma = np.asarray(noise.sigma_per_lag[:n])
    rng = np.random.default_rng(noise.seed)
    z = rng.standard_normal((count, n))
    d = np.empty((count, n))
    innov = np.sqrt(1.0 - noise.rho ** 2)
    if n:
        d[:, 0] = sigma[0] * z[:, 0]
    for l in range(1, n):
        d[:, l] = noise.rho * d[:, l - 1] + innov * sigma[l] * z[:, l]
    return ScenarioSet(predicted_net.grid, predicted_net.values[None, :] + d)


def window_context(ctx: AgentContext, t: int, n: int) -> AgentContext:
    return AgentContext(ctx.net.window(t, n), ctx.exchange.window(t, n), ctx.battery,
                        ctx.state, ctx.weights, ctx.agent_id)


def expected_utility(contract, ctx: AgentContext, scenario_set: ScenarioSet, t: int = 0,
                     side: str = OFFEROR) -> float:
    """Equiprobable average of the contract utility over scenarios.

    Reference path: one rollout per scenario through ``contracts.utility``.
    ``ctx`` holds full-grid series; the scenario window starts at ``t``.
    """
    n = scenario_set.grid.num_periods
    wctx = window_context(ctx, t, n)
    total = 0.0
    for s in range(len(scenario_set)):
        total += utility(contract, wctx.with_net(scenario_set.series(s)), 0, n - 1, side)
    return total / len(scenario_set)


def _base(ctx: AgentContext, scenario_set: ScenarioSet, t: int) -> np.ndarray:
    n = scenario_set.grid.num_periods
    return scenario_set.scenarios + ctx.exchange.window(t, n).values[None, :]


def expected_utility_grid(ctx: AgentContext, domain: NegotiationDomain, scenario_set: ScenarioSet,
                          t: int = 0, sign: float = 1.0, backend=None) -> np.ndarray:
    """Expected utility of every contract in ``domain`` as a (|Q|, |T|) array.

    ``sign=-1`` scores the domain from the counterparty's side.
    """
    q = sign * np.asarray(domain.q_values, dtype=float)
    flex, aut = kernels.evaluate_domain(
        _base(ctx, scenario_set, t), q, domain.tau_values, ctx.battery, ctx.state.soc_kwh,
        scenario_set.grid.delta_hours, backend=backend,
    )
    return weighted_utility(flex, aut, ctx.weights)


def expected_utility_nodeal(ctx: AgentContext, scenario_set: ScenarioSet, t: int = 0, backend=None) -> float:
    """Expected utility of trading nothing over the same window and scenarios."""
    flex, aut = kernels.evaluate_domain(
        _base(ctx, scenario_set, t), [0.0], [1], ctx.battery, ctx.state.soc_kwh,
        scenario_set.grid.delta_hours, backend=backend,
    )
    return float(weighted_utility(flex, aut, ctx.weights)[0, 0])
