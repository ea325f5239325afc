"""Strategy utilities, social welfare and Nash-solution fairness measures."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .battery import BatterySpec, BatteryState, soc_offset
from .contracts import CriteriaWeights, EnergyContract


class StrategyId(str, enum.Enum):
    NO_FLEXIBILITY = "s0"
    INDIVIDUAL_CONTROL = "s1"
    NEGOTIATION_AND_CONTROL = "s2"

    @property
    def long_name(self) -> str:
        return {"s0": "no_flexibility", "s1": "individual_control", "s2": "negotiation_and_control"}[self.value]


S0, S1, S2 = StrategyId.NO_FLEXIBILITY, StrategyId.INDIVIDUAL_CONTROL, StrategyId.NEGOTIATION_AND_CONTROL
STRATEGIES = (S0, S1, S2)


@dataclass(frozen=True)
class AgentTrajectory:
    """Realized per-period series of one agent over the simulated horizon.

    ``soc`` has one more entry than the other series: the initial SOC
    followed by the SOC after each period.
    """

    net: np.ndarray
    exchange: np.ndarray
    dispatch: np.ndarray
    residual: np.ndarray
    soc: np.ndarray
    battery: BatterySpec

    def __post_init__(self):
        n = len(self.net)
        for name in ("exchange", "dispatch", "residual"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"trajectory {name} has {len(getattr(self, name))} periods, net has {n}")
        if len(self.soc) != n + 1:
            raise ValueError(f"trajectory soc needs {n + 1} points, has {len(self.soc)}")

    def __len__(self):
        return len(self.net)


def strategy_utility(traj: AgentTrajectory, strategy: StrategyId, weights: CriteriaWeights,
                     horizon: int | None = None) -> float:
    """Negated weighted cost of a realized trajectory under ``strategy``."""
    if horizon is not None and len(traj) != horizon:
        raise ValueError(f"trajectory covers {len(traj)} periods, horizon is {horizon}")
    strategy = StrategyId(strategy)
    if strategy is S0:
        return -weights.lambda_autarky * float(np.sum(np.abs(traj.net)))
    if strategy is S1 and np.any(traj.exchange != 0):
        raise ValueError("individual-control trajectory must not carry exchange")
    theta = soc_offset(BatteryState(float(traj.soc[-1])), BatteryState(float(traj.soc[0])), traj.battery)
    flex = float(np.sum(traj.dispatch)) + theta
    autarky = float(np.sum(np.abs(traj.residual)))
    return -(weights.lambda_flex * flex + weights.lambda_autarky * autarky)


def utilitarian_sw(per_agent: Mapping[str, float]) -> float:
    if not per_agent:
        raise ValueError("social welfare of an empty cooperative")
    return math.fsum(per_agent.values())


def nash_relative(per_agent_s: Mapping[str, float], per_agent_h: Mapping[str, float]) -> tuple[float, int]:
    """Product of per-agent improvements of ``s`` over ``h``.

    Also returns how many improvements are <= 0; with any of those the
    product no longer reads as a fairness score.
    """
    if set(per_agent_s) != set(per_agent_h):
        raise ValueError("nash_relative needs the same agents under both strategies")
    diffs = [per_agent_s[a] - per_agent_h[a] for a in sorted(per_agent_s)]
    return math.prod(diffs), sum(1 for d in diffs if d <= 0)


def nash_solution(contracts: Sequence[EnergyContract], u_a: Sequence[float], u_b: Sequence[float]) -> EnergyContract:
    """Contract maximizing the product of both agents' normalized utilities."""
    if not contracts:
        raise ValueError("nash solution of an empty domain")
    prod = np.asarray(u_a, dtype=float) * np.asarray(u_b, dtype=float)
    best = prod.max()
    ties = [c for c, p in zip(contracts, prod) if p == best]
    return min(ties, key=EnergyContract.sort_key)


def nash_distance(outcome_point, nash_point, nodeal_point) -> tuple[float, float]:
    """Distances to the Nash point from the outcome and from the no-deal point.

    Pass the no-deal point as ``outcome_point`` for sessions without
    agreement.
    """
    nash = np.asarray(nash_point, dtype=float)
    d_out = float(np.linalg.norm(np.asarray(outcome_point, dtype=float) - nash))
    d_nd = float(np.linalg.norm(np.asarray(nodeal_point, dtype=float) - nash))
    return d_out, d_nd


def normalize_distances(rows: Sequence[tuple]) -> list[tuple]:
    """Scale ``(session, d_agreement, d_nodeal)`` rows by the pooled maximum."""
    top = max((max(d1, d2) for _, d1, d2 in rows), default=0.0)
    if top <= 0:
        return [(s, 0.0, 0.0) for s, _, _ in rows]
    return [(s, d1 / top, d2 / top) for s, d1, d2 in rows]


@dataclass
class WelfareReport:
    per_agent_utility: dict  # agent -> {strategy: utility}
    utilitarian: dict  # strategy -> sw
    nash_relative: dict  # "s|h" -> {"product": .., "negative_count": ..}
    nash_distances: list = field(default_factory=list)  # (session, d_agreement, d_nodeal), normalized

    @classmethod
    def assemble(cls, per_agent: Mapping[str, Mapping[str, float]], distances: Sequence[tuple]) -> "WelfareReport":
        agents = sorted(per_agent)
        per_agent = {a: {StrategyId(s).value: float(u) for s, u in per_agent[a].items()} for a in agents}
        sw = {s.value: utilitarian_sw({a: per_agent[a][s.value] for a in agents}) for s in STRATEGIES}
        nw = {}
        for s, h in ((S1, S0), (S2, S0), (S2, S1)):
            prod, neg = nash_relative({a: per_agent[a][s.value] for a in agents},
                                      {a: per_agent[a][h.value] for a in agents})
            nw[f"{s.value}|{h.value}"] = {"product": prod, "negative_count": neg}
        return cls(per_agent, sw, nw, normalize_distances(list(distances)))

    def mean_distances(self) -> tuple[float, float]:
        if not self.nash_distances:
            return float("nan"), float("nan")
        arr = np.array([(d1, d2) for _, d1, d2 in self.nash_distances])
        return float(arr[:, 0].mean()), float(arr[:, 1].mean())

    def to_dict(self) -> dict:
        return {
            "per_agent_utility": self.per_agent_utility,
            "utilitarian": self.utilitarian,
            "nash_relative": self.nash_relative,
            "nash_distances": [
                {"session": s, "d_agreement": d1, "d_nodeal": d2} for s, d1, d2 in self.nash_distances
            ],
        }
