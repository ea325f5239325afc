"""Battery state of charge, greedy dispatch and the SOC restoration offset.

Sign convention: dispatch is energy at the battery terminals in kWh per
period, positive when charging. It adds to the agent's residual, so a
deficit (positive residual) is served by negative dispatch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .profiles import PowerSeries

SOC_TOL = 1e-9


class BoundViolation(ValueError):
    """SOC update left the operating window."""


@dataclass(frozen=True)
class BatterySpec:
    capacity_kwh: float = 6.8
    charge_rate_kw: float = 1.3
    discharge_rate_kw: float = 3.3
    eta_charge: float = 0.9
    eta_discharge: float = 0.9
    soc_min_frac: float = 0.2
    soc_max_frac: float = 0.9
    degradation_kwh_per_period: float = 0.0

    def __post_init__(self):
        if self.capacity_kwh <= 0:
            raise ValueError(f"capacity_kwh must be > 0, got {self.capacity_kwh}")
        if self.charge_rate_kw <= 0 or self.discharge_rate_kw <= 0:
            raise ValueError("charge and discharge rates must be > 0")
        for name in ("eta_charge", "eta_discharge"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must be in (0, 1], got {v}")
        if not 0 <= self.soc_min_frac < self.soc_max_frac <= 1:
            raise ValueError(
                f"need 0 <= soc_min_frac < soc_max_frac <= 1, got {self.soc_min_frac}, {self.soc_max_frac}"
            )
        if self.degradation_kwh_per_period < 0:
            raise ValueError("degradation_kwh_per_period must be >= 0")

    @property
    def soc_min(self) -> float:
        return self.capacity_kwh * self.soc_min_frac

    @property
    def soc_max(self) -> float:
        return self.capacity_kwh * self.soc_max_frac

    def charge_cap(self, dt_hours: float) -> float:
        return self.charge_rate_kw * dt_hours

    def discharge_cap(self, dt_hours: float) -> float:
        return self.discharge_rate_kw * dt_hours

    @classmethod
    def with_daily_degradation(cls, daily_frac: float, periods_per_day: int, **kw) -> "BatterySpec":
        """Spread ``daily_frac`` of capacity evenly over a day's periods."""
        cap = kw.get("capacity_kwh", cls.capacity_kwh)
        return cls(degradation_kwh_per_period=cap * daily_frac / periods_per_day, **kw)


@dataclass(frozen=True)
class BatteryState:
    soc_kwh: float

    def check(self, spec: BatterySpec, period=None) -> None:
        if not spec.soc_min - SOC_TOL <= self.soc_kwh <= spec.soc_max + SOC_TOL:
            where = f" at period {period}" if period is not None else ""
            raise BoundViolation(
                f"SOC {self.soc_kwh:.6f} kWh outside [{spec.soc_min:.6f}, {spec.soc_max:.6f}]{where}"
            )


@dataclass(frozen=True)
class DispatchResult:
    dispatch: PowerSeries
    soc_trajectory: np.ndarray  # SOC after each period
    final_state: BatteryState

    def post_residual(self, pre_residual: PowerSeries) -> PowerSeries:
        return PowerSeries(pre_residual.grid, pre_residual.values + self.dispatch.values, "residual")


def soc_delta(dispatch_kwh: float, spec: BatterySpec) -> float:
    if dispatch_kwh >= 0:
        return spec.eta_charge * dispatch_kwh
    return dispatch_kwh / spec.eta_discharge


def step_soc(state: BatteryState, dispatch_kwh: float, spec: BatterySpec,
             dt_hours: float | None = None, period=None) -> BatteryState:
    """Apply one period of the SOC update.

    ``dt_hours`` enables the rate-limit check; ``period`` only labels errors.
    """
    if dt_hours is not None:
        if dispatch_kwh > spec.charge_cap(dt_hours) + SOC_TOL or -dispatch_kwh > spec.discharge_cap(dt_hours) + SOC_TOL:
            raise BoundViolation(f"dispatch {dispatch_kwh:.6f} kWh exceeds rate limit at period {period}")
    new = BatteryState(state.soc_kwh + soc_delta(dispatch_kwh, spec) - spec.degradation_kwh_per_period)
    new.check(spec, period)
    return new


def greedy_step(soc: float, residual: float, spec: BatterySpec, dt_hours: float) -> tuple[float, float]:
    """One period of greedy dispatch; returns ``(dispatch_kwh, new_soc)``.

    The battery tries to cancel the residual, limited by the rate caps and by
    keeping the post-update SOC within bounds. If degradation alone would
    push the SOC under its floor, the battery is forced to charge just enough
    to stay on it.
    """
    eps = spec.degradation_kwh_per_period
    eta_c = spec.eta_charge
    eta_d = spec.eta_discharge
    hi = min(spec.charge_cap(dt_hours), (spec.soc_max - soc + eps) / eta_c)
    room = soc - eps - spec.soc_min
    if room >= 0:
        lo = max(-spec.discharge_cap(dt_hours), -room * eta_d)
    else:
        lo = -room / eta_c
    d = -residual
    if d < lo:
        d = lo
    if d > hi:
        d = hi
    if d >= 0:
        new = soc + eta_c * d - eps
    else:
        new = soc + d / eta_d - eps
    return d, new


def greedy_dispatch(pre_battery_residual: PowerSeries, initial: BatteryState, spec: BatterySpec) -> DispatchResult:
    dt = pre_battery_residual.grid.delta_hours
    n = len(pre_battery_residual)
    dispatch = np.empty(n)
    traj = np.empty(n)
    soc = initial.soc_kwh
    for k, r in enumerate(pre_battery_residual.values):
        d, soc = greedy_step(soc, float(r), spec, dt)
        dispatch[k] = d
        traj[k] = soc
    return DispatchResult(
        PowerSeries(pre_battery_residual.grid, dispatch, "dispatch"),
        traj,
        BatteryState(soc),
    )


def soc_offset(trajectory_final: BatteryState, reference: BatteryState, spec: BatterySpec) -> float:
    """Charging energy needed to bring the SOC back up to ``reference``."""
    return max(0.0, reference.soc_kwh - trajectory_final.soc_kwh) / spec.eta_charge
