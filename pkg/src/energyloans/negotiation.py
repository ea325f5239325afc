"""Alternating-offers negotiation over energy-loan contracts."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .battery import DispatchResult, greedy_dispatch
from .contracts import COUNTERPARTY, OFFEROR, AgentContext, EnergyContract, NegotiationDomain, normalize_scores
from .profiles import PowerSeries
from .scenarios import ScenarioSet, expected_utility_grid, expected_utility_nodeal

AGREEMENT = "agreement"
NO_DEAL = "no_deal"


@dataclass(frozen=True)
class ReservationPolicy:
    """Reservation value as a quantile of the agent's normalized utilities.

    With ``outside_option_floor`` the value is raised to the no-deal utility
    when that is higher, so no contract worse than trading nothing is ever
    proposed or accepted.
    """

    quantile: float = 0.5
    outside_option_floor: bool = False

    def __post_init__(self):
        if not 0.0 <= self.quantile <= 1.0:
            raise ValueError(f"reservation quantile must be in [0, 1], got {self.quantile}")


def reservation_value(utilities: Sequence[float], quantile: float) -> float:
    """Nearest-rank quantile: the ceil(quantile * n)-th smallest value."""
    vals = sorted(float(u) for u in utilities)
    if not vals:
        raise ValueError("reservation value of an empty utility list")
    if not 0.0 <= quantile <= 1.0:
        raise ValueError(f"quantile must be in [0, 1], got {quantile}")
    # guard against 0.7 * 10 == 7.000000000000001
    rank = math.ceil(quantile * len(vals) - 1e-9)
    return vals[max(rank, 1) - 1]


@dataclass(frozen=True)
class PreferenceProfile:
    ranked: tuple  # ((contract, normalized utility), ...) best first
    reservation: float
    aspiration: tuple  # contracts with utility >= reservation, best first
    raw: dict = field(repr=False, default_factory=dict)
    nodeal_utility: float = float("nan")  # normalized with the domain's bounds

    def __post_init__(self):
        object.__setattr__(self, "_lookup", {c: u for c, u in self.ranked})

    def utility_of(self, contract: EnergyContract) -> float:
        return self._lookup[contract]

    def accepts(self, contract: EnergyContract) -> bool:
        return self._lookup[contract] >= self.reservation

    def __len__(self):
        return len(self.ranked)


def rank_contracts(contracts: Sequence[EnergyContract], normalized: Sequence[float]) -> list:
    pairs = list(zip(contracts, (float(u) for u in normalized)))
    pairs.sort(key=lambda cu: (-cu[1],) + cu[0].sort_key())
    return pairs


def profile_from_utilities(contracts: Sequence[EnergyContract], raw: Sequence[float],
                           policy: ReservationPolicy, nodeal_raw: float | None = None) -> PreferenceProfile:
    raw = np.asarray(raw, dtype=float)
    if nodeal_raw is None:
        norm = normalize_scores(raw)
        nodeal = float("nan")
    else:
        norm, nodeal = normalize_scores(raw, np.array([nodeal_raw]))
        nodeal = float(nodeal[0])
    ranked = rank_contracts(contracts, norm)
    rv = reservation_value(norm, policy.quantile)
    if policy.outside_option_floor and not math.isnan(nodeal):
        rv = max(rv, nodeal)
    aspiration = tuple(c for c, u in ranked if u >= rv)
    return PreferenceProfile(
        tuple(ranked), rv, aspiration,
        raw={c: float(r) for c, r in zip(contracts, raw)},
        nodeal_utility=nodeal,
    )


def build_preference_profile(ctx: AgentContext, domain: NegotiationDomain, scenario_set: ScenarioSet,
                             t: int, policy: ReservationPolicy, side: str = OFFEROR,
                             backend=None) -> PreferenceProfile:
    """Score every contract by expected utility, normalize and rank.

    ``ctx`` carries full-grid series; the scenario window starts at ``t``.
    """
    if len(domain) == 0:
        raise ValueError("cannot build a preference profile over an empty domain")
    sign = 1.0 if side == OFFEROR else -1.0
    grid = expected_utility_grid(ctx, domain, scenario_set, t, sign=sign, backend=backend)
    nodeal = expected_utility_nodeal(ctx, scenario_set, t, backend=backend)
    return profile_from_utilities(domain.contracts(), grid.ravel(), policy, nodeal)


class Negotiator:
    """Concedes down its aspiration list and accepts anything at or above its reservation value."""

    def __init__(self, agent_id: str, profile: PreferenceProfile):
        self.agent_id = agent_id
        self.profile = profile
        self._next = 0

    def make_offer(self) -> EnergyContract | None:
        asp = self.profile.aspiration
        if not asp:
            return None
        offer = asp[self._next % len(asp)]
        self._next += 1
        return offer

    def accept_offer(self, offer: EnergyContract) -> bool:
        return self.profile.accepts(offer)


@dataclass(frozen=True)
class TraceEntry:
    round: int
    proposer: str
    contract: EnergyContract
    u_proposer: float
    u_responder: float
    accepted: bool

    def as_dict(self) -> dict:
        return {
            "round": self.round,
            "proposer": self.proposer,
            "q_kwh": self.contract.q_kwh,
            "tau_periods": self.contract.tau_periods,
            "u_proposer": self.u_proposer,
            "u_responder": self.u_responder,
            "accepted": self.accepted,
        }


@dataclass(frozen=True)
class SessionOutcome:
    status: str
    agreement: EnergyContract | None
    agreement_round: int | None
    trace: tuple
    period: int = 0
    agents: tuple = ("A", "B")

    @property
    def agreed(self) -> bool:
        return self.status == AGREEMENT


def negotiate(profile_a: PreferenceProfile, profile_b: PreferenceProfile, deadline: int,
              t: int = 0, ids: tuple = ("A", "B")) -> SessionOutcome:
    """Run the alternating-offers loop; A proposes on even rounds.

    ``profile_b`` must score contracts from the counterparty side so both
    profiles key on the same contract objects.
    """
    if deadline < 0:
        raise ValueError("deadline must be >= 0")
    a = Negotiator(ids[0], profile_a)
    b = Negotiator(ids[1], profile_b)
    trace = []
    for r in range(deadline):
        proposer, responder = (a, b) if r % 2 == 0 else (b, a)
        offer = proposer.make_offer()
        if offer is None:
            # nothing beats the proposer's outside option
            break
        accepted = responder.accept_offer(offer)
        trace.append(TraceEntry(
            r, proposer.agent_id, offer,
            proposer.profile.utility_of(offer), responder.profile.utility_of(offer), accepted,
        ))
        if accepted:
            return SessionOutcome(AGREEMENT, offer, r, tuple(trace), t, tuple(ids))
    return SessionOutcome(NO_DEAL, None, None, tuple(trace), t, tuple(ids))


def implement_reserve_plan(ctx: AgentContext, t: int) -> DispatchResult:
    """Greedy dispatch for period ``t`` alone, with no new exchange."""
    pre = PowerSeries(ctx.net.grid.window(t, 1), ctx.net.values[t:t + 1] + ctx.exchange.values[t:t + 1], "residual")
    return greedy_dispatch(pre, ctx.state, ctx.battery)


def trace_lines(outcome: SessionOutcome, session: int | None = None) -> list[str]:
    lines = []
    for e in outcome.trace:
        d = e.as_dict()
        d["period"] = outcome.period
        if session is not None:
            d["session"] = session
        lines.append(json.dumps(d, sort_keys=True))
    return lines


__all__ = [
    "AGREEMENT", "NO_DEAL", "COUNTERPARTY", "OFFEROR", "ReservationPolicy", "PreferenceProfile",
    "Negotiator", "TraceEntry", "SessionOutcome", "reservation_value", "profile_from_utilities",
    "build_preference_profile", "negotiate", "implement_reserve_plan", "trace_lines",
]
