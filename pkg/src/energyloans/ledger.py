"""Exchange pool: committed loan legs and the per-agent energy balance."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .contracts import EnergyContract, HorizonOverflow
from .profiles import PowerSeries, ProfileError, TimeGrid


@dataclass(frozen=True)
class ExchangeEntry:
    period: int
    from_agent: str
    to_agent: str
    energy_kwh: float

    def __post_init__(self):
        if not self.energy_kwh > 0:
            raise ValueError(f"ledger energy must be > 0, got {self.energy_kwh}")
        if self.from_agent == self.to_agent:
            raise ValueError("ledger entry needs two distinct agents")


class ExchangeLedger:
    """Append-only list of delivery legs.

    ``num_periods`` bounds the periods a leg may land in (``None`` for no
    bound).
    """

    def __init__(self, num_periods: int | None = None):
        self.num_periods = num_periods
        self._entries: list[ExchangeEntry] = []

    @property
    def entries(self) -> tuple:
        return tuple(self._entries)

    def __len__(self):
        return len(self._entries)

    def record_agreement(self, contract: EnergyContract, t: int, offeror: str, counterparty: str) -> "ExchangeLedger":
        """Append both legs of a loan: delivery at ``t``, return at ``t + tau``."""
        back = t + contract.tau_periods
        if self.num_periods is not None and back >= self.num_periods:
            raise HorizonOverflow(f"return leg at period {back} beyond horizon of {self.num_periods} periods")
        q = contract.q_kwh
        if q == 0:
            return self
        # q > 0: offeror borrows, so the counterparty delivers first
        lender, borrower = (counterparty, offeror) if q > 0 else (offeror, counterparty)
        self._entries.append(ExchangeEntry(t, lender, borrower, abs(q)))
        self._entries.append(ExchangeEntry(back, borrower, lender, abs(q)))
        return self

    def exchange_series(self, agent: str, grid: TimeGrid) -> PowerSeries:
        """Per-period signed exchange of ``agent``: exports positive, imports negative."""
        values = np.zeros(grid.num_periods)
        for e in self._entries:
            k = e.period - grid.start_index
            if not 0 <= k < grid.num_periods:
                continue
            if e.from_agent == agent:
                values[k] += e.energy_kwh
            elif e.to_agent == agent:
                values[k] -= e.energy_kwh
        return PowerSeries(grid, values, "exchange")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["period", "from", "to", "energy_kwh"])
            for e in self._entries:
                writer.writerow([e.period, e.from_agent, e.to_agent, repr(e.energy_kwh)])


def residual(net: PowerSeries, exchange: PowerSeries, dispatch: PowerSeries) -> PowerSeries:
    if not net.grid == exchange.grid == dispatch.grid:
        raise ProfileError("residual inputs must share one grid")
    return PowerSeries(net.grid, net.values + exchange.values + dispatch.values, "residual")
