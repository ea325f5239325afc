"""Backend selection for the contract-domain sweep.

The compiled extension is used when it imports; otherwise, or when
``ENERGYLOANS_PURE_PYTHON`` is set, the numpy version is used. Both expose
``evaluate_domain`` with the same signature.
"""

import os

import numpy as np

from . import _kernels_py

if os.environ.get("ENERGYLOANS_PURE_PYTHON"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
_IMPLS = {"python": _kernels_py.evaluate_domain}
if _compiled is not None:
    _IMPLS["cython"] = _compiled.evaluate_domain


def available_backends():
    return sorted(_IMPLS)


def evaluate_domain(base, q_values, taus, battery, soc0, dt_hours, backend=None):
    """Mean flexibility loss and mean autarky cost over scenarios.

    ``base`` is the (scenarios, window) pre-battery residual without the
    contract. ``q_values`` are the signed volumes the evaluating agent
    receives at the window start; each is returned ``taus`` periods later.
    Returns two ``(len(q_values), len(taus))`` arrays.
    """
    name = backend or BACKEND
    if name not in _IMPLS:
        raise ValueError(f"unknown or unavailable backend {name!r}; available: {sorted(_IMPLS)}")
    impl = _IMPLS[name]
    base = np.ascontiguousarray(base, dtype=np.float64)
    if base.ndim == 1:
        base = base[None, :]
    return impl(
        base,
        np.ascontiguousarray(q_values, dtype=np.float64),
        np.ascontiguousarray(taus, dtype=np.int64),
        float(soc0),
        battery.soc_min,
        battery.soc_max,
        battery.eta_charge,
        battery.eta_discharge,
        battery.degradation_kwh_per_period,
        battery.charge_cap(dt_hours),
        battery.discharge_cap(dt_hours),
    )
