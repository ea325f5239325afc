"""Experiment configuration: YAML parsing, validation and defaults.

A config document is validated into a fully populated plain dict (every
default filled in), which is what ``RunConfig.to_dict`` returns and what
round-trips through YAML unchanged. Named seeds are mixed with the master
``seed`` so one ``--seed`` override reseeds the whole experiment.
"""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass

import yaml

from .battery import BatterySpec
from .contracts import CriteriaWeights, build_domain, default_q_values
from .negotiation import ReservationPolicy
from .profiles import SYNTHETIC_PRESETS, ProfileError, TimeGrid, generate_synthetic, load_profiles_csv
from .simulator import PAIRING_MODES, AgentConfig, CooperativeConfig, PairingPolicy, derive_seed

SCHEMA_VERSION = 1

DEFAULT_BATTERY = {
    "capacity_kwh": 6.8,
    "charge_rate_kw": 1.3,
    "discharge_rate_kw": 3.3,
    "eta_charge": 0.9,
    "eta_discharge": 0.9,
    "soc_min_frac": 0.2,
    "soc_max_frac": 0.9,
    "degradation_daily_frac": 0.004,
    "initial_soc_frac": 0.5,
}


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending path."""


def _fail(path, msg):
    raise ConfigError(f"{path}: {msg}")


def _section(raw, key, path):
    val = raw.get(key, {})
    if val is None:
        return {}
    if not isinstance(val, dict):
        _fail(f"{path}{key}", "expected a mapping")
    return val


def _unknown(d, allowed, path):
    extra = sorted(set(d) - set(allowed))
    if extra:
        _fail(f"{path}{extra[0]}", "unknown field")


def _num(d, key, path, default, *, lo=None, hi=None, lo_open=False, hi_open=False, integer=False):
    val = d.get(key, default)
    p = f"{path}{key}"
    if val is None:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        _fail(p, f"expected a number, got {val!r}")
    if integer:
        if int(val) != val:
            _fail(p, f"expected an integer, got {val!r}")
        val = int(val)
    else:
        val = float(val)
    if lo is not None and (val < lo or (lo_open and val == lo)):
        _fail(p, f"must be {'>' if lo_open else '>='} {lo}, got {val}")
    if hi is not None and (val > hi or (hi_open and val == hi)):
        _fail(p, f"must be {'<' if hi_open else '<='} {hi}, got {val}")
    return val


def _profile_source(d, path, kind):
    if not isinstance(d, dict):
        _fail(path.rstrip("."), "expected a mapping with 'csv' or 'synthetic'")
    if "csv" in d:
        _unknown(d, ("csv",), path)
        if not isinstance(d["csv"], str):
            _fail(f"{path}csv", "expected a file path")
        return {"csv": d["csv"]}
    if "synthetic" in d:
        _unknown(d, ("synthetic", "scale_kwh", "seed", "peak_hour", "width_hours", "noise_frac"), path)
        preset = d["synthetic"]
        if preset not in SYNTHETIC_PRESETS:
            _fail(f"{path}synthetic", f"unknown preset {preset!r}; expected one of {list(SYNTHETIC_PRESETS)}")
        return {
            "synthetic": preset,
            "scale_kwh": _num(d, "scale_kwh", path, 0.25 if kind == "load" else 0.5, lo=0),
            "seed": _num(d, "seed", path, 0, integer=True),
            "peak_hour": _num(d, "peak_hour", path, 12.5, lo=0, hi=24),
            "width_hours": _num(d, "width_hours", path, 2.5, lo=0, lo_open=True),
            "noise_frac": _num(d, "noise_frac", path, 0.1, lo=0, hi=1),
        }
    _fail(path.rstrip("."), "expected 'csv' or 'synthetic'")


def _battery(d, path):
    _unknown(d, list(DEFAULT_BATTERY) + ["degradation_kwh_per_period"], path)
    out = {
        "capacity_kwh": _num(d, "capacity_kwh", path, DEFAULT_BATTERY["capacity_kwh"], lo=0, lo_open=True),
        "charge_rate_kw": _num(d, "charge_rate_kw", path, DEFAULT_BATTERY["charge_rate_kw"], lo=0, lo_open=True),
        "discharge_rate_kw": _num(d, "discharge_rate_kw", path, DEFAULT_BATTERY["discharge_rate_kw"], lo=0, lo_open=True),
        "eta_charge": _num(d, "eta_charge", path, DEFAULT_BATTERY["eta_charge"], lo=0, hi=1, lo_open=True),
        "eta_discharge": _num(d, "eta_discharge", path, DEFAULT_BATTERY["eta_discharge"], lo=0, hi=1, lo_open=True),
        "soc_min_frac": _num(d, "soc_min_frac", path, DEFAULT_BATTERY["soc_min_frac"], lo=0, hi=1, hi_open=True),
        "soc_max_frac": _num(d, "soc_max_frac", path, DEFAULT_BATTERY["soc_max_frac"], lo=0, hi=1, lo_open=True),
        "initial_soc_frac": _num(d, "initial_soc_frac", path, DEFAULT_BATTERY["initial_soc_frac"], lo=0, hi=1),
    }
    if out["soc_min_frac"] >= out["soc_max_frac"]:
        _fail(f"{path}soc_min_frac", "must be below soc_max_frac")
    if d.get("degradation_kwh_per_period") is not None:
        out["degradation_kwh_per_period"] = _num(d, "degradation_kwh_per_period", path, 0.0, lo=0)
        out["degradation_daily_frac"] = None
    else:
        out["degradation_daily_frac"] = _num(d, "degradation_daily_frac", path,
                                             DEFAULT_BATTERY["degradation_daily_frac"], lo=0, hi=1)
        out["degradation_kwh_per_period"] = None
    return out


def validate(raw: dict) -> dict:
    """Check a raw config mapping and return it with every default filled in."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>: expected a mapping")
    _unknown(raw, ("schema_version", "seed", "grid", "simulation", "domain", "scenario", "prediction",
                   "negotiation", "pairing", "output", "agents"), "")
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        _fail("schema_version", f"unsupported version {version!r}; expected {SCHEMA_VERSION}")
    out = {"schema_version": SCHEMA_VERSION, "seed": _num(raw, "seed", "", 0, integer=True)}

    g = _section(raw, "grid", "")
    _unknown(g, ("delta_minutes",), "grid.")
    out["grid"] = {"delta_minutes": _num(g, "delta_minutes", "grid.", 15.0, lo=0, lo_open=True)}
    ppd = 24 * 60 / out["grid"]["delta_minutes"]

    s = _section(raw, "simulation", "")
    _unknown(s, ("days", "sim_periods", "horizon_periods", "negotiation_interval"), "simulation.")
    sim_periods = _num(s, "sim_periods", "simulation.", None, lo=1, integer=True)
    days = _num(s, "days", "simulation.", None if sim_periods else 20, lo=0, lo_open=True)
    if sim_periods is None:
        sim_periods = int(round(days * ppd))
        if sim_periods < 1:
            _fail("simulation.days", "yields zero periods")
    horizon = _num(s, "horizon_periods", "simulation.", int(round(48 * 60 / out["grid"]["delta_minutes"])),
                   lo=1, integer=True)
    out["simulation"] = {
        "sim_periods": sim_periods,
        "horizon_periods": horizon,
        "negotiation_interval": _num(s, "negotiation_interval", "simulation.", 1, lo=1, integer=True),
    }

    d = _section(raw, "domain", "")
    _unknown(d, ("q_values", "q_scale_kwh", "tau_min", "tau_max"), "domain.")
    q_scale = _num(d, "q_scale_kwh", "domain.", 1.0, lo=0, lo_open=True)
    q_values = d.get("q_values")
    if q_values is None:
        q_values = list(default_q_values(q_scale))
    if not isinstance(q_values, list) or not q_values:
        _fail("domain.q_values", "expected a non-empty list")
    for i, q in enumerate(q_values):
        if isinstance(q, bool) or not isinstance(q, (int, float)):
            _fail(f"domain.q_values[{i}]", f"expected a number, got {q!r}")
    q_values = [float(q) for q in q_values]
    if len(set(q_values)) != len(q_values):
        _fail("domain.q_values", "values must be distinct")
    tau_min = _num(d, "tau_min", "domain.", 2, lo=1, integer=True)
    tau_max = _num(d, "tau_max", "domain.", horizon, lo=1, integer=True)
    if tau_max > horizon:
        _fail("domain.tau_max", f"must be <= simulation.horizon_periods ({horizon})")
    if tau_min > tau_max:
        _fail("domain.tau_min", "must be <= tau_max")
    out["domain"] = {"q_values": q_values, "q_scale_kwh": q_scale, "tau_min": tau_min, "tau_max": tau_max}

    sc = _section(raw, "scenario", "")
    _unknown(sc, ("count", "sigma_base_kwh", "rho", "seed"), "scenario.")
    out["scenario"] = {
        "count": _num(sc, "count", "scenario.", 100, lo=1, integer=True),
        "sigma_base_kwh": _num(sc, "sigma_base_kwh", "scenario.", 0.05, lo=0),
        "rho": _num(sc, "rho", "scenario.", 0.5, lo=-1, hi=1),
        "seed": _num(sc, "seed", "scenario.", 1, integer=True),
    }
    pr = _section(raw, "prediction", "")
    _unknown(pr, ("sigma_abs_kwh", "seed"), "prediction.")
    out["prediction"] = {
        "sigma_abs_kwh": _num(pr, "sigma_abs_kwh", "prediction.", 0.02, lo=0),
        "seed": _num(pr, "seed", "prediction.", 2, integer=True),
    }
    ng = _section(raw, "negotiation", "")
    _unknown(ng, ("deadline",), "negotiation.")
    out["negotiation"] = {"deadline": _num(ng, "deadline", "negotiation.", 5000, lo=0, integer=True)}

    pa = _section(raw, "pairing", "")
    _unknown(pa, ("mode", "seed", "pairs"), "pairing.")
    mode = pa.get("mode", "random_matching")
    if mode not in PAIRING_MODES:
        _fail("pairing.mode", f"unknown mode {mode!r}; expected one of {list(PAIRING_MODES)}")
    pairs = pa.get("pairs") or []
    if not isinstance(pairs, list) or any(not isinstance(p, list) or len(p) != 2 for p in pairs):
        _fail("pairing.pairs", "expected a list of [agent, agent] pairs")
    out["pairing"] = {"mode": mode, "seed": _num(pa, "seed", "pairing.", 3, integer=True),
                      "pairs": [[str(a), str(b)] for a, b in pairs]}

    o = _section(raw, "output", "")
    _unknown(o, ("dir",), "output.")
    out["output"] = {"dir": str(o.get("dir", "out"))}

    agents = raw.get("agents")
    if not isinstance(agents, list) or not agents:
        _fail("agents", "expected a non-empty list of agents")
    out["agents"] = []
    seen = set()
    for i, a in enumerate(agents):
        p = f"agents[{i}]."
        if not isinstance(a, dict):
            _fail(p.rstrip("."), "expected a mapping")
        _unknown(a, ("id", "load", "pv", "battery", "weights", "reservation"), p)
        aid = str(a.get("id", f"agent{i}"))
        if aid in seen:
            _fail(f"{p}id", f"duplicate agent id {aid!r}")
        seen.add(aid)
        if "load" not in a:
            _fail(f"{p}load", "missing profile source")
        pv = a.get("pv", {"synthetic": "flat", "scale_kwh": 0.0})
        w = a.get("weights") or {}
        if not isinstance(w, dict):
            _fail(f"{p}weights", "expected a mapping")
        _unknown(w, ("flex", "autarky"), f"{p}weights.")
        lf = _num(w, "flex", f"{p}weights.", 0.5, lo=0, hi=1)
        la = _num(w, "autarky", f"{p}weights.", 1.0 - lf, lo=0, hi=1)
        if abs(lf + la - 1.0) > 1e-9:
            _fail(f"{p}weights", f"flex + autarky must equal 1, got {lf + la}")
        r = a.get("reservation") or {}
        if not isinstance(r, dict):
            _fail(f"{p}reservation", "expected a mapping")
        _unknown(r, ("quantile", "outside_option_floor"), f"{p}reservation.")
        floor = r.get("outside_option_floor", False)
        if not isinstance(floor, bool):
            _fail(f"{p}reservation.outside_option_floor", "expected true or false")
        out["agents"].append({
            "id": aid,
            "load": _profile_source(a["load"], f"{p}load.", "load"),
            "pv": _profile_source(pv, f"{p}pv.", "pv"),
            "battery": _battery(a.get("battery") or {}, f"{p}battery."),
            "weights": {"flex": lf, "autarky": la},
            "reservation": {"quantile": _num(r, "quantile", f"{p}reservation.", 0.5, lo=0, hi=1),
                            "outside_option_floor": floor},
        })
    ids = {a["id"] for a in out["agents"]}
    for j, pair in enumerate(out["pairing"]["pairs"]):
        for aid in pair:
            if aid not in ids:
                _fail(f"pairing.pairs[{j}]", f"unknown agent id {aid!r}")
    return out


@dataclass(frozen=True)
class RunConfig:
    data: dict
    base_dir: str = "."

    @classmethod
    def from_dict(cls, raw: dict, base_dir: str = ".") -> "RunConfig":
        return cls(validate(copy.deepcopy(raw)), base_dir)

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = os.fspath(path)
        if not os.path.exists(path):
            raise ConfigError(f"{path}: config file not found")
        with open(path) as fh:
            try:
                raw = yaml.safe_load(fh)
            except yaml.YAMLError as exc:
                raise ConfigError(f"{path}: not valid YAML ({exc})") from None
        return cls.from_dict(raw or {}, os.path.dirname(os.path.abspath(path)))

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def dump(self) -> str:
        return yaml.safe_dump(self.data, sort_keys=True)

    def with_seed(self, seed: int) -> "RunConfig":
        data = self.to_dict()
        data["seed"] = int(seed)
        return RunConfig(data, self.base_dir)

    def seed_for(self, named: int) -> int:
        return derive_seed(self.data["seed"], named)

    @property
    def grid(self) -> TimeGrid:
        sim = self.data["simulation"]
        return TimeGrid(0, self.data["grid"]["delta_minutes"], sim["sim_periods"] + sim["horizon_periods"])

    @property
    def output_dir(self) -> str:
        return self._path(self.data["output"]["dir"])

    def _path(self, p):
        return p if os.path.isabs(p) else os.path.normpath(os.path.join(self.base_dir, p))

    def _series(self, src, kind, where):
        grid = self.grid
        if "csv" in src:
            path = self._path(src["csv"])
            try:
                return load_profiles_csv(path, grid, kind)
            except ProfileError as exc:
                raise ConfigError(f"{where}.csv: {exc}") from None
        series = generate_synthetic(
            grid, src["synthetic"], src["scale_kwh"], self.seed_for(src["seed"]),
            peak_hour=src["peak_hour"], width_hours=src["width_hours"], noise_frac=src["noise_frac"],
        )
        return series.with_kind(kind)

    def build(self) -> CooperativeConfig:
        """Materialize profiles and assemble the simulator configuration."""
        d = self.data
        grid = self.grid
        agents = []
        for i, a in enumerate(d["agents"]):
            b = dict(a["battery"])
            init = b.pop("initial_soc_frac")
            daily = b.pop("degradation_daily_frac")
            per = b.pop("degradation_kwh_per_period")
            if per is None:
                per = b["capacity_kwh"] * daily / grid.periods_per_day
            try:
                battery = BatterySpec(degradation_kwh_per_period=per, **b)
            except ValueError as exc:
                raise ConfigError(f"agents[{i}].battery: {exc}") from None
            agents.append(AgentConfig(
                a["id"],
                self._series(a["load"], "load", f"agents[{i}].load"),
                self._series(a["pv"], "pv", f"agents[{i}].pv"),
                battery,
                CriteriaWeights(a["weights"]["flex"], a["weights"]["autarky"]),
                ReservationPolicy(a["reservation"]["quantile"], a["reservation"]["outside_option_floor"]),
                init,
                d["prediction"]["sigma_abs_kwh"],
            ))
        dom = d["domain"]
        try:
            return CooperativeConfig(
                tuple(agents),
                d["simulation"]["horizon_periods"],
                d["simulation"]["sim_periods"],
                build_domain(dom["q_values"], range(dom["tau_min"], dom["tau_max"] + 1)),
                d["negotiation"]["deadline"],
                PairingPolicy(d["pairing"]["mode"], self.seed_for(d["pairing"]["seed"]),
                              tuple(tuple(p) for p in d["pairing"]["pairs"])),
                d["scenario"]["count"],
                d["scenario"]["sigma_base_kwh"],
                d["scenario"]["rho"],
                self.seed_for(d["scenario"]["seed"]),
                self.seed_for(d["prediction"]["seed"]),
                d["simulation"]["negotiation_interval"],
            )
        except ValueError as exc:
            raise ConfigError(f"<config>: {exc}") from None
