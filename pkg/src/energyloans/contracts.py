"""Energy-loan contracts, the negotiation domain and contract evaluation.

A contract ``(q, tau)`` is read from the offeror's side: the offeror
receives ``q`` kWh at period ``t`` and returns it at ``t + tau``. A negative
``q`` means the offeror lends. The counterparty sees the same contract with
``q`` negated.

Exchange series use the residual convention: exports are positive (they add
to demand), imports negative.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .battery import BatterySpec, BatteryState, greedy_dispatch, soc_offset
from .profiles import PowerSeries, ProfileError

OFFEROR = "offeror"
COUNTERPARTY = "counterparty"


class HorizonOverflow(ValueError):
    """A contract leg or evaluation window falls outside the series grid."""


@dataclass(frozen=True, order=True)
class EnergyContract:
    q_kwh: float
    tau_periods: int

    def __post_init__(self):
        if int(self.tau_periods) != self.tau_periods or self.tau_periods < 1:
            raise ValueError(f"tau_periods must be a positive integer, got {self.tau_periods}")

    def signed_q(self, side: str) -> float:
        if side == OFFEROR:
            return self.q_kwh
        if side == COUNTERPARTY:
            return -self.q_kwh
        raise ValueError(f"unknown side {side!r}")

    def sort_key(self):
        # tie-break: smaller |q|, shorter tau, positive q first
        return (abs(self.q_kwh), self.tau_periods, 0 if self.q_kwh > 0 else 1)


@dataclass(frozen=True)
class NegotiationDomain:
    q_values: tuple
    tau_values: tuple

    def __post_init__(self):
        q = tuple(float(v) for v in self.q_values)
        tau = tuple(int(v) for v in self.tau_values)
        if len(set(q)) != len(q):
            raise ValueError("q_values must be distinct")
        if len(set(tau)) != len(tau):
            raise ValueError("tau_values must be distinct")
        if any(v < 1 for v in tau):
            raise ValueError("tau_values must be positive")
        object.__setattr__(self, "q_values", q)
        object.__setattr__(self, "tau_values", tau)

    def __len__(self):
        return len(self.q_values) * len(self.tau_values)

    def __iter__(self):
        for q, tau in itertools.product(self.q_values, self.tau_values):
            yield EnergyContract(q, tau)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.q_values), len(self.tau_values)

    def contracts(self) -> list[EnergyContract]:
        return list(self)

    def restrict_tau(self, max_tau: int) -> "NegotiationDomain":
        """Drop return times beyond ``max_tau``; may leave an empty domain."""
        return NegotiationDomain(self.q_values, tuple(t for t in self.tau_values if t <= max_tau))


@dataclass(frozen=True)
class CriteriaWeights:
    lambda_flex: float = 0.5
    lambda_autarky: float = 0.5

    def __post_init__(self):
        if self.lambda_flex < 0 or self.lambda_autarky < 0:
            raise ValueError("criteria weights must be >= 0")
        if abs(self.lambda_flex + self.lambda_autarky - 1.0) > 1e-9:
            raise ValueError(
                f"criteria weights must sum to 1, got {self.lambda_flex} + {self.lambda_autarky}"
            )


@dataclass(frozen=True)
class AgentContext:
    """Everything an agent needs to score contracts at one period.

    ``net`` is the (predicted) net demand and ``exchange`` the already
    committed exchange, both on the same grid. ``state`` is the SOC at the
    start of the evaluation period.
    """

    net: PowerSeries
    exchange: PowerSeries
    battery: BatterySpec
    state: BatteryState
    weights: CriteriaWeights
    agent_id: str = ""

    def with_net(self, net: PowerSeries) -> "AgentContext":
        return AgentContext(net, self.exchange, self.battery, self.state, self.weights, self.agent_id)


def build_domain(q_values: Iterable[float], tau_values: Iterable[int]) -> NegotiationDomain:
    q = tuple(q_values)
    tau = tuple(tau_values)
    if not q or not tau:
        raise ValueError("negotiation domain needs at least one q value and one tau value")
    return NegotiationDomain(q, tau)


def default_q_values(scale_kwh: float = 1.0) -> tuple[float, ...]:
    """Ten symmetric non-zero volumes, +-{0.5, 1, 1.5, 2, 2.5} * scale."""
    mags = [0.5 * k * scale_kwh for k in range(1, 6)]
    return tuple([-m for m in reversed(mags)] + mags)


def apply_contract(contract: EnergyContract, side: str, t: int, exchange: PowerSeries) -> PowerSeries:
    q = contract.signed_q(side)
    end = t + contract.tau_periods
    if t < 0 or end >= len(exchange):
        raise HorizonOverflow(
            f"contract legs at periods {t} and {end} fall outside series of length {len(exchange)}"
        )
    values = np.array(exchange.values)
    values[t] -= q
    values[end] += q
    return PowerSeries(exchange.grid, values, "exchange")


def _window_rollout(contract: EnergyContract | None, ctx: AgentContext, t: int, w: int, side: str):
    n = w + 1
    if t < 0 or t + n > len(ctx.net):
        raise HorizonOverflow(f"window [{t}, {t + w}] outside series of length {len(ctx.net)}")
    if len(ctx.exchange) != len(ctx.net):
        raise ProfileError("net and exchange series have different lengths")
    exchange = ctx.exchange.window(t, n)
    if contract is not None:
        if contract.tau_periods > w:
            raise HorizonOverflow(f"return period t+{contract.tau_periods} beyond horizon t+{w}")
        exchange = apply_contract(contract, side, 0, exchange)
    pre = PowerSeries(exchange.grid, ctx.net.window(t, n).values + exchange.values, "residual")
    result = greedy_dispatch(pre, ctx.state, ctx.battery)
    return result, result.post_residual(pre)


def eval_flex_loss(contract, ctx: AgentContext, t: int, w: int, side: str = OFFEROR) -> float:
    """Summed dispatch over ``[t, t+w]`` plus the SOC restoration offset.

    ``contract=None`` scores the no-contract plan.
    """
    result, _ = _window_rollout(contract, ctx, t, w, side)
    return float(np.sum(result.dispatch.values)) + soc_offset(result.final_state, ctx.state, ctx.battery)


def eval_autarky(contract, ctx: AgentContext, t: int, w: int, side: str = OFFEROR) -> float:
    _, residual = _window_rollout(contract, ctx, t, w, side)
    return float(np.sum(np.abs(residual.values)))


def weighted_utility(flex_loss, autarky, weights: CriteriaWeights):
    return -(weights.lambda_flex * flex_loss + weights.lambda_autarky * autarky)


def utility(contract, ctx: AgentContext, t: int, w: int, side: str = OFFEROR) -> float:
    result, residual = _window_rollout(contract, ctx, t, w, side)
    e1 = float(np.sum(result.dispatch.values)) + soc_offset(result.final_state, ctx.state, ctx.battery)
    e2 = float(np.sum(np.abs(residual.values)))
    return weighted_utility(e1, e2, ctx.weights)


def normalize_scores(raw: np.ndarray, ref: np.ndarray | None = None):
    """Min-max normalize ``raw``; a flat range maps everything to 1.

    ``ref`` is rescaled with the same bounds, so it may land outside [0, 1].
    """
    raw = np.asarray(raw, dtype=float)
    lo = raw.min()
    hi = raw.max()
    span = hi - lo
    if span <= 0:
        out = np.ones_like(raw)
        ref_out = None if ref is None else np.ones_like(np.asarray(ref, dtype=float))
    else:
        out = (raw - lo) / span
        ref_out = None if ref is None else (np.asarray(ref, dtype=float) - lo) / span
    return out if ref is None else (out, ref_out)


def normalize_over_domain(raw_scores: Mapping) -> dict:
    if not raw_scores:
        raise ValueError("need at least one score to normalize")
    keys = list(raw_scores)
    vals = normalize_scores(np.array([raw_scores[k] for k in keys]))
    return {k: float(v) for k, v in zip(keys, vals)}
