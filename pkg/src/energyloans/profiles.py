"""Energy time series: grids, CSV ingestion, synthetic presets, pseudo-predictions.

All values are stored in kWh per period. kW inputs are converted once, at
ingestion, using the grid's period length.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

SERIES_KINDS = ("load", "pv", "net", "residual", "dispatch", "exchange")
SYNTHETIC_PRESETS = ("household_diurnal", "pv_bell", "flat")


class ProfileError(ValueError):
    """Raised for malformed or inconsistent profile data."""


@dataclass(frozen=True)
class TimeGrid:
    start_index: int = 0
    delta_minutes: float = 15.0
    num_periods: int = 96

    def __post_init__(self):
        if self.delta_minutes <= 0:
            raise ProfileError(f"delta_minutes must be > 0, got {self.delta_minutes}")
        if self.num_periods < 0:
            raise ProfileError(f"num_periods must be >= 0, got {self.num_periods}")

    @property
    def delta_hours(self) -> float:
        return self.delta_minutes / 60.0

    @property
    def periods_per_day(self) -> int:
        return int(round(24 * 60 / self.delta_minutes))

    def hour_of_day(self) -> np.ndarray:
        idx = np.arange(self.start_index, self.start_index + self.num_periods)
        return (idx * self.delta_minutes / 60.0) % 24.0

    def window(self, start: int, length: int) -> "TimeGrid":
        return TimeGrid(self.start_index + start, self.delta_minutes, length)


@dataclass(frozen=True)
class PowerSeries:
    grid: TimeGrid
    values: np.ndarray = field(repr=False)
    kind: str = "net"

    def __post_init__(self):
        if self.kind not in SERIES_KINDS:
            raise ProfileError(f"unknown series kind {self.kind!r}")
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1 or len(vals) != self.grid.num_periods:
            raise ProfileError(
                f"{self.kind} series has {vals.size} values, grid expects {self.grid.num_periods}"
            )
        if self.kind in ("load", "pv") and np.any(vals < 0):
            raise ProfileError(f"{self.kind} series must be non-negative")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def scaled(self, factor: float) -> "PowerSeries":
        return PowerSeries(self.grid, self.values * factor, self.kind)

    def window(self, start: int, length: int) -> "PowerSeries":
        if start < 0 or start + length > len(self):
            raise ProfileError(
                f"window [{start}, {start + length}) outside series of length {len(self)}"
            )
        return PowerSeries(self.grid.window(start, length), self.values[start:start + length], self.kind)

    def with_kind(self, kind: str) -> "PowerSeries":
        return PowerSeries(self.grid, self.values, kind)


@dataclass(frozen=True)
class PredictionNoise:
    sigma_abs: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma_abs < 0:
            raise ProfileError(f"sigma_abs must be >= 0, got {self.sigma_abs}")


def zeros(grid: TimeGrid, kind: str) -> PowerSeries:
    return PowerSeries(grid, np.zeros(grid.num_periods), kind)


def load_profiles_csv(path, grid: TimeGrid, kind: str = "load") -> PowerSeries:
    """Read a ``period,value_kw`` (or ``period,value_kwh``) CSV onto ``grid``.

    kW columns are converted to kWh per period. Rows beyond
    ``grid.num_periods`` are an error, as are missing rows.
    """
    path = os.fspath(path)
    if not os.path.exists(path):
        raise ProfileError(f"{path}: profile file not found")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [(n, row) for n, row in enumerate(reader, start=1) if row and any(c.strip() for c in row)]
    if not rows:
        if grid.num_periods == 0:
            return PowerSeries(grid, np.zeros(0), kind)
        raise ProfileError(f"{path}: empty file, expected {grid.num_periods} rows")

    header = [c.strip().lower() for c in rows[0][1]]
    factor = grid.delta_hours
    if header[:2] == ["period", "value_kw"]:
        rows = rows[1:]
    elif header[:2] == ["period", "value_kwh"]:
        rows = rows[1:]
        factor = 1.0
    if len(rows) != grid.num_periods:
        raise ProfileError(f"{path}: {len(rows)} data rows, grid expects {grid.num_periods}")

    values = np.empty(len(rows))
    for i, (lineno, row) in enumerate(rows):
        if len(row) < 2:
            raise ProfileError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
        try:
            int(row[0])
            values[i] = float(row[1]) * factor
        except ValueError:
            raise ProfileError(f"{path}:{lineno}: non-numeric cell in {row!r}") from None
        if not math.isfinite(values[i]):
            raise ProfileError(f"{path}:{lineno}: non-finite value {row[1]!r}")
    return PowerSeries(grid, values, kind)


def write_series_csv(series: PowerSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["period", "value_kwh"])
        for i, v in enumerate(series.values):
            writer.writerow([series.grid.start_index + i, repr(float(v))])


def write_series_kw_csv(series: PowerSeries, path) -> None:
    """Write in the ingestion schema (``period,value_kw``)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["period", "value_kw"])
        for i, v in enumerate(series.values):
            writer.writerow([series.grid.start_index + i, repr(float(v) / series.grid.delta_hours)])


def _check_same_grid(a: PowerSeries, b: PowerSeries) -> None:
    if a.grid != b.grid:
        raise ProfileError(f"grid mismatch: {a.grid} vs {b.grid}")


def net_demand(load: PowerSeries, pv: PowerSeries) -> PowerSeries:
    _check_same_grid(load, pv)
    return PowerSeries(load.grid, load.values - pv.values, "net")


def pseudo_predict(real_net: PowerSeries, noise: PredictionNoise) -> PowerSeries:
    """Add i.i.d. absolute Gaussian noise to a realized net-demand series."""
    if noise.sigma_abs == 0:
        return PowerSeries(real_net.grid, real_net.values, "net")
    rng = np.random.default_rng(noise.seed)
    g = rng.normal(0.0, noise.sigma_abs, size=len(real_net))
    return PowerSeries(real_net.grid, real_net.values + g, "net")


def _diurnal_shape(hours: np.ndarray) -> np.ndarray:
    # morning and evening peaks on a base load, mean close to 1
    morning = 0.9 * np.exp(-0.5 * ((hours - 7.5) / 1.2) ** 2)
    evening = 1.6 * np.exp(-0.5 * ((hours - 19.0) / 1.8) ** 2)
    base = 0.45
    return (base + morning + evening) / 0.85


def generate_synthetic(
    grid: TimeGrid,
    profile_shape: str,
    scale_kwh: float,
    seed: int = 0,
    *,
    peak_hour: float = 12.5,
    width_hours: float = 2.5,
    noise_frac: float = 0.1,
) -> PowerSeries:
    """Build a reproducible synthetic profile in kWh/period.

    ``household_diurnal`` is a two-peak load with multiplicative noise whose
    mean is about ``scale_kwh``; ``pv_bell`` is a Gaussian bell with peak
    ``scale_kwh`` at ``peak_hour`` that is exactly zero more than
    ``2.4 * width_hours`` away from the peak; ``flat`` is constant.
    """
    if profile_shape not in SYNTHETIC_PRESETS:
        raise ProfileError(f"unknown synthetic preset {profile_shape!r}; expected one of {SYNTHETIC_PRESETS}")
    if scale_kwh < 0:
        raise ProfileError(f"scale_kwh must be >= 0, got {scale_kwh}")
    n = grid.num_periods
    if profile_shape == "flat":
        return PowerSeries(grid, np.full(n, float(scale_kwh)), "load")

    rng = np.random.default_rng(seed)
    hours = grid.hour_of_day()
    if profile_shape == "household_diurnal":
        jitter = 1.0 + noise_frac * rng.standard_normal(n)
        values = scale_kwh * _diurnal_shape(hours) * np.clip(jitter, 0.0, None)
        return PowerSeries(grid, values, "load")

    # pv_bell: circular distance to the peak hour, clipped at the daylight edge
    dist = np.abs((hours - peak_hour + 12.0) % 24.0 - 12.0)
    bell = np.exp(-0.5 * (dist / width_hours) ** 2)
    bell[dist > 2.4 * width_hours] = 0.0
    # day-to-day cloudiness
    ppd = grid.periods_per_day
    days = (np.arange(n) + grid.start_index) // ppd
    uniq = np.unique(days)
    cloud = dict(zip(uniq.tolist(), np.clip(1.0 - noise_frac * np.abs(rng.standard_normal(len(uniq))), 0.0, 1.0)))
    factor = np.array([cloud[d] for d in days.tolist()])
    return PowerSeries(grid, scale_kwh * bell * factor, "pv")
