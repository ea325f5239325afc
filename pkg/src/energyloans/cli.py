"""Command-line entry point: ``energyloans {simulate,compare,heatmap,synth-data}``.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .battery import BatteryState, greedy_step
from .config import ConfigError, RunConfig
from .contracts import OFFEROR, AgentContext
from .negotiation import build_preference_profile
from .profiles import PredictionNoise, net_demand, pseudo_predict, write_series_kw_csv, zeros
from .scenarios import NoiseModel, generate_scenarios
from .simulator import S2, compare_strategies, derive_seed, run_strategy, write_record, write_report

log = logging.getLogger("energyloans")


def _load(args) -> RunConfig:
    if not args.config:
        raise ConfigError("--config: required")
    cfg = RunConfig.load(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _out_dir(args, cfg: RunConfig) -> str:
    return args.out if args.out else cfg.output_dir


def cmd_simulate(args) -> int:
    cfg = _load(args)
    coop = cfg.build()
    record = run_strategy(coop, S2)
    out = _out_dir(args, cfg)
    write_record(record, out)
    print(f"wrote {out}: {len(record.sessions)} sessions, {len(record.agreements())} agreements")
    return 0


def cmd_compare(args) -> int:
    cfg = _load(args)
    report, _ = compare_strategies(cfg.build())
    out = _out_dir(args, cfg)
    write_report(report, out)
    sw = report.utilitarian
    print(f"wrote {out}: sw s0={sw['s0']:.4f} s1={sw['s1']:.4f} s2={sw['s2']:.4f}")
    return 0


def heatmap_rows(cfg: RunConfig, agent_id: str, t: int) -> list[tuple]:
    """Normalized expected utility of every contract for one agent at period ``t``.

    The SOC at ``t`` comes from individual control over periods ``0..t-1``;
    no exchange is assumed.
    """
    coop = cfg.build()
    ids = coop.agent_ids
    if agent_id not in ids:
        raise ConfigError(f"--agent: unknown agent id {agent_id!r}; known: {ids}")
    index = ids.index(agent_id)
    agent = coop.agents[index]
    w = coop.horizon_w_periods
    if not 0 <= t < coop.sim_periods:
        raise ConfigError(f"--period: must be in [0, {coop.sim_periods - 1}]")
    real = net_demand(agent.load, agent.pv)
    pred = pseudo_predict(real, PredictionNoise(agent.prediction_sigma_kwh, derive_seed(coop.prediction_seed, index)))
    soc = agent.initial_soc
    dt = coop.grid.delta_hours
    for k in range(t):
        _, soc = greedy_step(soc, float(real.values[k]), agent.battery, dt)
    ctx = AgentContext(pred, zeros(pred.grid, "exchange"), agent.battery, BatteryState(soc), agent.weights, agent_id)
    noise = NoiseModel.linear(coop.scenario_sigma_base_kwh, w + 1, coop.scenario_rho,
                              derive_seed(coop.scenario_seed, index, t))
    scen = generate_scenarios(pred.window(t, w + 1), noise, coop.scenario_count)
    profile = build_preference_profile(ctx, coop.domain, scen, t, agent.reservation, side=OFFEROR)
    aspiration = set(profile.aspiration)
    return [(c.q_kwh, c.tau_periods, profile.utility_of(c), c in aspiration) for c in coop.domain]


def cmd_heatmap(args) -> int:
    cfg = _load(args)
    rows = heatmap_rows(cfg, args.agent, args.period)
    out = _out_dir(args, cfg)
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, f"heatmap_{args.agent}_t{args.period}.csv")
    with open(path, "w") as fh:
        fh.write("q_kwh,tau_periods,expected_utility,in_aspiration\n")
        for q, tau, u, asp in rows:
            fh.write(f"{q!r},{tau},{u!r},{int(asp)}\n")
    print(f"wrote {path}: {len(rows)} contracts")
    return 0


def cmd_synth_data(args) -> int:
    """Write every agent's load and PV profile as ingestion-ready kW CSVs."""
    cfg = _load(args)
    coop = cfg.build()
    out = _out_dir(args, cfg)
    os.makedirs(out, exist_ok=True)
    for a in coop.agents:
        write_series_kw_csv(a.load, os.path.join(out, f"{a.agent_id}_load.csv"))
        write_series_kw_csv(a.pv, os.path.join(out, f"{a.agent_id}_pv.csv"))
    print(f"wrote {2 * len(coop.agents)} profiles to {out}")
    return 0


def _global_flags(default):
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=default, help="experiment YAML file")
    p.add_argument("--out", default=default, help="output directory (overrides output.dir)")
    p.add_argument("--seed", type=int, default=default, help="master seed override")
    p.add_argument("-v", "--verbose", action="store_true", default=default)
    return p


def build_parser() -> argparse.ArgumentParser:
    # flags are accepted before or after the subcommand; SUPPRESS keeps the
    # subcommand's unset flags from clobbering ones given earlier
    common = _global_flags(argparse.SUPPRESS)
    parser = argparse.ArgumentParser(prog="energyloans", parents=[_global_flags(None)],
                                     description="Energy-loan negotiation in a residential cooperative")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run the negotiation strategy and write the record")
    sub.add_parser("compare", parents=[common], help="run all three strategies and write welfare reports")
    hm = sub.add_parser("heatmap", parents=[common], help="expected utility over the contract domain")
    hm.add_argument("--agent", required=True)
    hm.add_argument("--period", type=int, default=0)
    sub.add_parser("synth-data", parents=[common], help="write the configured profiles as CSV")
    return parser


COMMANDS = {"simulate": cmd_simulate, "compare": cmd_compare, "heatmap": cmd_heatmap, "synth-data": cmd_synth_data}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - report and map to the runtime exit code
        log.debug("runtime failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
