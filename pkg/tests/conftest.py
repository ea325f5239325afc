import numpy as np
import pytest

from energyloans import kernels
from energyloans.battery import BatterySpec, BatteryState
from energyloans.contracts import AgentContext, CriteriaWeights
from energyloans.profiles import PowerSeries, TimeGrid, zeros


def series(values, kind="net", delta_minutes=15.0):
    values = np.asarray(values, dtype=float)
    return PowerSeries(TimeGrid(0, delta_minutes, len(values)), values, kind)


def inert_battery(**kw):
    """A battery whose rate limits make it effectively absent."""
    base = dict(capacity_kwh=10.0, charge_rate_kw=1e-12, discharge_rate_kw=1e-12,
                soc_min_frac=0.0, soc_max_frac=1.0)
    base.update(kw)
    return BatterySpec(**base)


def context(net, battery=None, soc=None, weights=(0.5, 0.5), exchange=None):
    net = series(net) if not isinstance(net, PowerSeries) else net
    battery = battery or BatterySpec()
    soc = battery.soc_min + 0.5 * (battery.soc_max - battery.soc_min) if soc is None else soc
    ex = exchange if exchange is not None else zeros(net.grid, "exchange")
    return AgentContext(net, ex, battery, BatteryState(soc), CriteriaWeights(*weights))


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    return request.param


ACCEPTANCE_LINES = []


def report_criterion(number, title, ok, detail):
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
