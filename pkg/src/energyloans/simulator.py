"""Period-by-period cooperative simulation under the three strategies."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .battery import BatterySpec, BatteryState, greedy_step
from .contracts import COUNTERPARTY, OFFEROR, AgentContext, CriteriaWeights, EnergyContract, NegotiationDomain
from .ledger import ExchangeLedger
from .negotiation import ReservationPolicy, SessionOutcome, build_preference_profile, negotiate, trace_lines
from .profiles import PowerSeries, PredictionNoise, TimeGrid, net_demand, pseudo_predict, write_series_csv
from .scenarios import NoiseModel, generate_scenarios
from .welfare import S0, S1, S2, STRATEGIES, AgentTrajectory, StrategyId, WelfareReport, nash_distance, \
    nash_solution, strategy_utility

log = logging.getLogger(__name__)

PAIRING_MODES = ("random_matching", "round_robin", "fixed_pairs")


def derive_seed(*parts: int) -> int:
    """Stable 32-bit seed from a tuple of integers."""
    return int(np.random.SeedSequence([int(p) & 0xFFFFFFFF for p in parts]).generate_state(1)[0])


@dataclass(frozen=True)
class PairingPolicy:
    mode: str = "random_matching"
    seed: int = 0
    pairs: tuple = ()

    def __post_init__(self):
        if self.mode not in PAIRING_MODES:
            raise ValueError(f"unknown pairing mode {self.mode!r}; expected one of {PAIRING_MODES}")
        pairs = tuple(tuple(p) for p in self.pairs)
        seen = [a for p in pairs for a in p]
        if any(len(p) != 2 for p in pairs) or len(seen) != len(set(seen)):
            raise ValueError("fixed pairs must be disjoint pairs of distinct agents")
        object.__setattr__(self, "pairs", pairs)


def pair_agents(agent_ids, policy: PairingPolicy, period: int) -> list[tuple]:
    """Disjoint pairs for one period; with an odd count one agent sits out."""
    ids = list(agent_ids)
    if policy.mode == "fixed_pairs":
        known = set(ids)
        return [p for p in policy.pairs if p[0] in known and p[1] in known]
    if policy.mode == "random_matching":
        rng = np.random.default_rng(derive_seed(policy.seed, period))
        order = [ids[i] for i in rng.permutation(len(ids))]
        return [(order[i], order[i + 1]) for i in range(0, len(order) - 1, 2)]
    # round robin by the circle method
    slots = ids + [None] if len(ids) % 2 else list(ids)
    n = len(slots)
    if n < 2:
        return []
    r = period % (n - 1)
    rest = slots[1:]
    rest = rest[-r:] + rest[:-r] if r else rest
    ring = [slots[0]] + rest
    pairs = [(ring[i], ring[n - 1 - i]) for i in range(n // 2)]
    return [p for p in pairs if p[0] is not None and p[1] is not None]


@dataclass(frozen=True)
class AgentConfig:
    agent_id: str
    load: PowerSeries
    pv: PowerSeries
    battery: BatterySpec
    weights: CriteriaWeights
    reservation: ReservationPolicy = ReservationPolicy()
    initial_soc_frac: float = 0.5
    prediction_sigma_kwh: float = 0.0

    @property
    def initial_soc(self) -> float:
        b = self.battery
        return b.soc_min + self.initial_soc_frac * (b.soc_max - b.soc_min)


@dataclass(frozen=True)
class CooperativeConfig:
    agents: tuple
    horizon_w_periods: int
    sim_periods: int
    domain: NegotiationDomain
    deadline: int = 5000
    pairing: PairingPolicy = PairingPolicy()
    scenario_count: int = 100
    scenario_sigma_base_kwh: float = 0.0
    scenario_rho: float = 0.0
    scenario_seed: int = 0
    prediction_seed: int = 0
    negotiation_interval: int = 1

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        if not self.agents:
            raise ValueError("cooperative needs at least one agent")
        ids = [a.agent_id for a in self.agents]
        if len(set(ids)) != len(ids):
            raise ValueError("agent ids must be unique")
        if self.horizon_w_periods < 1 or self.sim_periods < 1:
            raise ValueError("horizon and simulation length must be >= 1 period")
        need = self.sim_periods + self.horizon_w_periods
        grid = self.agents[0].load.grid
        for a in self.agents:
            for s in (a.load, a.pv):
                if s.grid != grid:
                    raise ValueError(f"agent {a.agent_id}: all profiles must share one grid")
            if len(a.load) < need:
                raise ValueError(
                    f"agent {a.agent_id}: profiles hold {len(a.load)} periods, need sim_periods + w = {need}"
                )
            floor_need = a.battery.degradation_kwh_per_period / a.battery.eta_charge
            if floor_need > a.battery.charge_cap(grid.delta_hours):
                raise ValueError(f"agent {a.agent_id}: degradation exceeds what one period of charging restores")
        if max(self.domain.tau_values, default=0) > self.horizon_w_periods:
            raise ValueError("return delays must fit inside the planning horizon")
        if self.deadline < 0 or self.scenario_count < 1 or self.negotiation_interval < 1:
            raise ValueError("deadline >= 0, scenario_count >= 1 and negotiation_interval >= 1 required")

    @property
    def grid(self) -> TimeGrid:
        return self.agents[0].load.grid

    @property
    def agent_ids(self) -> list[str]:
        return [a.agent_id for a in self.agents]


@dataclass
class SessionRecord:
    session: int
    period: int
    agents: tuple
    outcome: SessionOutcome
    nash_contract: EnergyContract
    nash_point: tuple
    nodeal_point: tuple
    agreement_point: tuple | None

    def distances(self) -> tuple[float, float]:
        point = self.agreement_point if self.agreement_point is not None else self.nodeal_point
        return nash_distance(point, self.nash_point, self.nodeal_point)


@dataclass
class SimulationRecord:
    strategy: StrategyId
    grid: TimeGrid
    trajectories: dict  # agent id -> AgentTrajectory
    sessions: list = field(default_factory=list)
    ledger: ExchangeLedger = field(default_factory=ExchangeLedger)
    battery_active: bool = True

    @property
    def agent_ids(self) -> list[str]:
        return list(self.trajectories)

    def agreements(self) -> list[SessionRecord]:
        return [s for s in self.sessions if s.outcome.agreed]


class _AgentRun:
    def __init__(self, cfg: AgentConfig, index: int, config: CooperativeConfig):
        self.cfg = cfg
        self.index = index
        n_ext = len(cfg.load)
        self.real_net = net_demand(cfg.load, cfg.pv)
        self.pred_net = pseudo_predict(
            self.real_net, PredictionNoise(cfg.prediction_sigma_kwh, derive_seed(config.prediction_seed, index))
        )
        self.exchange = np.zeros(n_ext)
        T = config.sim_periods
        self.dispatch = np.zeros(T)
        self.residual = np.zeros(T)
        self.soc = np.empty(T + 1)
        self.soc[0] = cfg.initial_soc

    def context(self, t: int) -> AgentContext:
        return AgentContext(
            self.pred_net,
            PowerSeries(self.pred_net.grid, self.exchange, "exchange"),
            self.cfg.battery,
            BatteryState(float(self.soc[t])),
            self.cfg.weights,
            self.cfg.agent_id,
        )

    def trajectory(self, T: int) -> AgentTrajectory:
        return AgentTrajectory(
            self.real_net.values[:T].copy(), self.exchange[:T].copy(), self.dispatch, self.residual,
            self.soc, self.cfg.battery,
        )


def _run_session(a: _AgentRun, b: _AgentRun, t: int, config: CooperativeConfig, domain: NegotiationDomain,
                 session: int, backend=None) -> SessionRecord:
    w = config.horizon_w_periods
    profiles = []
    for run, side in ((a, OFFEROR), (b, COUNTERPARTY)):
        noise = NoiseModel.linear(config.scenario_sigma_base_kwh, w + 1, config.scenario_rho,
                                  derive_seed(config.scenario_seed, run.index, t))
        scen = generate_scenarios(run.pred_net.window(t, w + 1), noise, config.scenario_count)
        profiles.append(build_preference_profile(run.context(t), domain, scen, t, run.cfg.reservation,
                                                 side=side, backend=backend))
    pa, pb = profiles
    ids = (a.cfg.agent_id, b.cfg.agent_id)
    outcome = negotiate(pa, pb, config.deadline, t, ids)
    contracts = domain.contracts()
    nash = nash_solution(contracts, [pa.utility_of(c) for c in contracts], [pb.utility_of(c) for c in contracts])
    agreement_point = None
    if outcome.agreed:
        agreement_point = (pa.utility_of(outcome.agreement), pb.utility_of(outcome.agreement))
    return SessionRecord(
        session, t, ids, outcome, nash,
        (pa.utility_of(nash), pb.utility_of(nash)),
        (pa.nodeal_utility, pb.nodeal_utility),
        agreement_point,
    )


def run_strategy(config: CooperativeConfig, strategy, backend=None) -> SimulationRecord:
    strategy = StrategyId(strategy)
    T = config.sim_periods
    w = config.horizon_w_periods
    dt = config.grid.delta_hours
    runs = [_AgentRun(cfg, i, config) for i, cfg in enumerate(config.agents)]
    by_id = {r.cfg.agent_id: r for r in runs}
    ledger = ExchangeLedger(num_periods=T)
    sessions: list[SessionRecord] = []

    for t in range(T):
        if strategy is S2 and t % config.negotiation_interval == 0:
            # returns must land inside the simulated horizon
            domain = config.domain.restrict_tau(min(w, T - 1 - t))
            if len(domain):
                wave = []
                for ida, idb in pair_agents(config.agent_ids, config.pairing, t):
                    wave.append(_run_session(by_id[ida], by_id[idb], t, config, domain, len(sessions) + len(wave),
                                             backend))
                # commit phase, after every session of the wave has finished
                for rec in wave:
                    if rec.outcome.agreed:
                        c = rec.outcome.agreement
                        ledger.record_agreement(c, t, *rec.agents)
                        off, cp = by_id[rec.agents[0]], by_id[rec.agents[1]]
                        off.exchange[t] -= c.q_kwh
                        off.exchange[t + c.tau_periods] += c.q_kwh
                        cp.exchange[t] += c.q_kwh
                        cp.exchange[t + c.tau_periods] -= c.q_kwh
                sessions.extend(wave)

        for r in runs:
            pre = r.real_net.values[t] + r.exchange[t]
            if strategy is S0:
                d, soc = 0.0, r.soc[t]
            else:
                d, soc = greedy_step(float(r.soc[t]), float(pre), r.cfg.battery, dt)
            r.dispatch[t] = d
            r.soc[t + 1] = soc
            r.residual[t] = r.real_net.values[t] + r.exchange[t] + d

    log.info("strategy %s: %d sessions, %d agreements", strategy.value, len(sessions),
             sum(s.outcome.agreed for s in sessions))
    return SimulationRecord(
        strategy,
        config.grid.window(0, T),
        {r.cfg.agent_id: r.trajectory(T) for r in runs},
        sessions,
        ledger,
        battery_active=strategy is not S0,
    )


def replay_errors(record: SimulationRecord) -> tuple[float, float]:
    """Largest energy-balance and SOC-update residuals over a record."""
    bal = 0.0
    soc_err = 0.0
    for traj in record.trajectories.values():
        bal = max(bal, float(np.max(np.abs(traj.residual - traj.net - traj.exchange - traj.dispatch), initial=0.0)))
        if record.battery_active:
            b = traj.battery
            eta = np.where(traj.dispatch >= 0, b.eta_charge, 1.0 / b.eta_discharge)
            pred = traj.soc[:-1] + eta * traj.dispatch - b.degradation_kwh_per_period
            soc_err = max(soc_err, float(np.max(np.abs(pred - traj.soc[1:]), initial=0.0)))
    return bal, soc_err


def strategy_utilities(config: CooperativeConfig, records: dict) -> dict:
    out = {}
    for a in config.agents:
        out[a.agent_id] = {
            s.value: strategy_utility(records[s].trajectories[a.agent_id], s, a.weights, config.sim_periods)
            for s in STRATEGIES
        }
    return out


def compare_strategies(config: CooperativeConfig, backend=None) -> tuple[WelfareReport, dict]:
    records = {s: run_strategy(config, s, backend) for s in STRATEGIES}
    distances = [(rec.session,) + rec.distances() for rec in records[S2].sessions]
    report = WelfareReport.assemble(strategy_utilities(config, records), distances)
    return report, records


def write_record(record: SimulationRecord, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    grid = record.grid
    for agent, traj in record.trajectories.items():
        for kind in ("net", "exchange", "dispatch", "residual"):
            write_series_csv(PowerSeries(grid, getattr(traj, kind), kind), os.path.join(out_dir, f"{agent}_{kind}.csv"))
        with open(os.path.join(out_dir, f"{agent}_soc.csv"), "w") as fh:
            fh.write("period,soc_kwh\n")
            for k, v in enumerate(traj.soc):
                fh.write(f"{grid.start_index + k},{float(v)!r}\n")
    record.ledger.write_csv(os.path.join(out_dir, "ledger.csv"))
    with open(os.path.join(out_dir, "traces.jsonl"), "w") as fh:
        for rec in record.sessions:
            for line in trace_lines(rec.outcome, rec.session):
                fh.write(line + "\n")


def write_report(report: WelfareReport, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "welfare.json"), "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "utilities.csv"), "w") as fh:
        fh.write("agent,u_s0,u_s1,u_s2\n")
        for agent, u in report.per_agent_utility.items():
            fh.write(f"{agent},{u['s0']!r},{u['s1']!r},{u['s2']!r}\n")
    with open(os.path.join(out_dir, "nash_distances.csv"), "w") as fh:
        fh.write("session,d_agreement,d_nodeal\n")
        for s, d1, d2 in report.nash_distances:
            fh.write(f"{s},{d1!r},{d2!r}\n")
