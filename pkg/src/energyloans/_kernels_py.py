"""Pure numpy implementation of the contract-domain sweep.

Vectorized over (volume, return delay, scenario); the window is walked one
period at a time because greedy dispatch is sequential in the SOC.
"""

import numpy as np


def evaluate_domain(base, q_values, taus, soc0, soc_min, soc_max,
                    eta_c, eta_d, eps, charge_cap, discharge_cap):
    base = np.asarray(base, dtype=np.float64)
    q = np.asarray(q_values, dtype=np.float64)[:, None, None]
    taus = np.asarray(taus, dtype=np.int64)
    S, n = base.shape
    if np.any(taus < 1) or np.any(taus >= n):
        raise ValueError(f"return delay outside window of {n} periods")
    shape = (len(q), len(taus), S)
    tau_b = taus[None, :, None]

    soc = np.full(shape, float(soc0))
    cpb = np.zeros(shape)
    cab = np.zeros(shape)
    zero = np.zeros(shape)
    for k in range(n):
        col = base[:, k][None, None, :]
        if k == 0:
            r = col - q + zero
        else:
            r = col + np.where(tau_b == k, q, 0.0)
        hi = np.minimum(charge_cap, (soc_max - soc + eps) / eta_c)
        room = soc - eps - soc_min
        lo = np.where(room >= 0, np.maximum(-discharge_cap, -room * eta_d), -room / eta_c)
        d = -r
        d = np.where(d < lo, lo, d)
        d = np.where(d > hi, hi, d)
        soc = np.where(d >= 0, soc + eta_c * d - eps, soc + d / eta_d - eps)
        cpb = cpb + d
        cab = cab + np.abs(r + d)
    theta = np.maximum(soc0 - soc, 0.0) / eta_c
    flex = cpb + theta
    # sequential sum over scenarios to match the compiled kernel's order
    flex_sum = np.zeros(shape[:2])
    aut_sum = np.zeros(shape[:2])
    for s in range(S):
        flex_sum += flex[:, :, s]
        aut_sum += cab[:, :, s]
    return flex_sum / S, aut_sum / S
