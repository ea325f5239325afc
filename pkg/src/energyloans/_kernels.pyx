# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled contract-domain sweep.

Mirrors ``_kernels_py.evaluate_domain`` operation for operation. For each
(scenario, volume) pair the rollout up to the return period is shared by
every return time, so only the tail after ``tau`` is recomputed.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


cdef inline double _step(double soc, double r, double* d_out,
                         double soc_min, double soc_max, double eta_c, double eta_d,
                         double eps, double charge_cap, double discharge_cap) noexcept nogil:
    cdef double hi, lo, room, d
    hi = (soc_max - soc + eps) / eta_c
    if charge_cap < hi:
        hi = charge_cap
    room = soc - eps - soc_min
    if room >= 0:
        lo = -room * eta_d
        if -discharge_cap > lo:
            lo = -discharge_cap
    else:
        lo = -room / eta_c
    d = -r
    if d < lo:
        d = lo
    if d > hi:
        d = hi
    d_out[0] = d
    if d >= 0:
        return soc + eta_c * d - eps
    return soc + d / eta_d - eps


def evaluate_domain(const double[:, ::1] base, const double[::1] q_values,
                    const long long[::1] taus, double soc0, double soc_min, double soc_max,
                    double eta_c, double eta_d, double eps,
                    double charge_cap, double discharge_cap):
    cdef Py_ssize_t S = base.shape[0]
    cdef Py_ssize_t n = base.shape[1]
    cdef Py_ssize_t Q = q_values.shape[0]
    cdef Py_ssize_t T = taus.shape[0]
    cdef Py_ssize_t s, iq, it, k, tau
    cdef double q, soc, cpb, cab, r, d, theta

    flex_arr = np.zeros((Q, T), dtype=np.float64)
    aut_arr = np.zeros((Q, T), dtype=np.float64)
    cdef double[:, ::1] flex = flex_arr
    cdef double[:, ::1] aut = aut_arr
    pre_arr = np.empty((3, n), dtype=np.float64)
    cdef double[:, ::1] pre = pre_arr

    for it in range(T):
        if taus[it] < 1 or taus[it] >= n:
            raise ValueError(f"return delay {taus[it]} outside window of {n} periods")

    with nogil:
        for s in range(S):
            for iq in range(Q):
                q = q_values[iq]
                soc = soc0
                cpb = 0.0
                cab = 0.0
                for k in range(n):
                    if k == 0:
                        r = base[s, k] - q
                    else:
                        r = base[s, k]
                    soc = _step(soc, r, &d, soc_min, soc_max, eta_c, eta_d, eps, charge_cap, discharge_cap)
                    cpb = cpb + d
                    cab = cab + fabs(r + d)
                    pre[0, k] = soc
                    pre[1, k] = cpb
                    pre[2, k] = cab
                for it in range(T):
                    tau = taus[it]
                    soc = pre[0, tau - 1]
                    cpb = pre[1, tau - 1]
                    cab = pre[2, tau - 1]
                    for k in range(tau, n):
                        if k == tau:
                            r = base[s, k] + q
                        else:
                            r = base[s, k] + 0.0
                        soc = _step(soc, r, &d, soc_min, soc_max, eta_c, eta_d, eps, charge_cap, discharge_cap)
                        cpb = cpb + d
                        cab = cab + fabs(r + d)
                    theta = soc0 - soc
                    if theta < 0:
                        theta = 0.0
                    theta = theta / eta_c
                    flex[iq, it] += cpb + theta
                    aut[iq, it] += cab
        for iq in range(Q):
            for it in range(T):
                flex[iq, it] = flex[iq, it] / S
                aut[iq, it] = aut[iq, it] / S
    return flex_arr, aut_arr
