# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled slot loops. Semantics mirror rispf._pykernels line for line."""

from libc.math cimport exp

import numpy as np

cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t i64


def pf_loop(double[:, ::1] rate_table, i64[::1] idx, double[::1] ewma, double tc,
            i64[::1] selected, double[::1] served, double[:, ::1] ewma_trace):
    cdef Py_ssize_t n_ues = rate_table.shape[0]
    cdef Py_ssize_t n_slots = idx.shape[0]
    cdef bint record = ewma_trace.shape[0] > 0
    cdef double inv = 1.0 / tc
    cdef double decay = 1.0 - inv
    cdef Py_ssize_t t, k, best, col
    cdef double m, best_m, r
    for t in range(n_slots):
        col = idx[t]
        best = 0
        best_m = rate_table[0, col] / ewma[0]
        for k in range(1, n_ues):
            m = rate_table[k, col] / ewma[k]
            if m > best_m:
                best_m = m
                best = k
        r = rate_table[best, col]
        for k in range(n_ues):
            ewma[k] = decay * ewma[k]
        ewma[best] += inv * r
        selected[t] = best
        served[t] = r
        if record:
            for k in range(n_ues):
                ewma_trace[t, k] = ewma[k]


cdef inline double _bler(double snr_db, double threshold_db, double slope):
    cdef double x = slope * (snr_db - threshold_db)
    if x > 700.0:
        return 0.0
    return 1.0 / (1.0 + exp(x))


cdef inline i64 _nominal(double rsrp):
    if rsrp > -102.0:
        return 25
    if rsrp < -115.0:
        return 10
    return 15


cdef inline i64 _clamp(i64 m, i64 lo, i64 hi):
    if m < lo:
        return lo
    if m > hi:
        return hi
    return m


def nr_loop(double[:, ::1] snr_table, i64[::1] idx, i64[::1] switches, double[::1] uniforms,
            i64 start_slot,
            double[::1] thresholds, double[::1] se, i64[::1] tb_bits,
            double[::1] ewma, i64[::1] mcs, double[::1] rsrp_last, i64[::1] win_tx,
            i64[::1] win_fail, i64[::1] harq,
            i64[::1] params, double[::1] fparams,
            i64[::1] selected, i64[::1] mcs_used, i64[::1] bits, i64[::1] flags,
            double[:, ::1] ewma_trace):
    """NR-flavoured slot loop.

    ``switches[t]`` is 1 when the RIS state changes at slot ``t``; every UE's MCS
    is then re-initialised from the nominal MCS of its last RSRP report
    (``rsrp_last``).
    ``harq`` = [pending UE or -1, retries used, MCS of pending TB, RR pointer].
    ``params`` = [sched mode (0 PF / 1 RR), rsrp period, bler period, tdd period,
    dl slots, mcs min, mcs max, max retx, fast step].
    ``fparams`` = [tc, rsrp offset dB, bler slope].
    ``flags`` bit 0: retransmission, bit 1: TB failed.
    """
    cdef Py_ssize_t n_ues = snr_table.shape[0]
    cdef Py_ssize_t n_slots = idx.shape[0]
    cdef i64 mode = params[0], rsrp_period = params[1], bler_period = params[2]
    cdef i64 tdd_period = params[3], tdd_dl = params[4], mcs_lo = params[5], mcs_hi = params[6]
    cdef i64 max_retx = params[7], fast_step = params[8]
    cdef double inv = 1.0 / fparams[0]
    cdef double decay = 1.0 - inv
    cdef double rsrp_offset = fparams[1], slope = fparams[2]
    cdef Py_ssize_t t, k, best, col
    cdef i64 slot, nominal, m_use, retx
    cdef double m, best_m, p_fail, bler_est
    cdef bint ok
    cdef bint record = ewma_trace.shape[0] > 0
    for t in range(n_slots):
        if record and t > 0:
            for k in range(n_ues):
                ewma_trace[t - 1, k] = ewma[k]
        slot = start_slot + t
        col = idx[t]
        if slot % rsrp_period == 0:
            for k in range(n_ues):
                rsrp_last[k] = snr_table[k, col] + rsrp_offset
                nominal = _nominal(rsrp_last[k])
                if mcs[k] - nominal > fast_step:
                    mcs[k] = _clamp(mcs[k] - fast_step, mcs_lo, mcs_hi)
                elif nominal - mcs[k] > fast_step:
                    mcs[k] = _clamp(mcs[k] + fast_step, mcs_lo, mcs_hi)
        if switches[t]:
            for k in range(n_ues):
                mcs[k] = _clamp(_nominal(rsrp_last[k]), mcs_lo, mcs_hi)
        if slot > 0 and slot % bler_period == 0:
            for k in range(n_ues):
                if win_tx[k] > 0:
                    bler_est = <double>win_fail[k] / <double>win_tx[k]
                    if bler_est < 0.05:
                        mcs[k] = _clamp(mcs[k] + 1, mcs_lo, mcs_hi)
                    elif bler_est > 0.15:
                        mcs[k] = _clamp(mcs[k] - 1, mcs_lo, mcs_hi)
                    win_tx[k] = 0
                    win_fail[k] = 0
        for k in range(n_ues):
            ewma[k] = decay * ewma[k]
        if slot % tdd_period >= tdd_dl:
            selected[t] = -1
            mcs_used[t] = -1
            bits[t] = 0
            flags[t] = 0
            continue
        if harq[0] >= 0:
            best = harq[0]
            m_use = harq[2]
            retx = 1
        else:
            if mode == 0:
                best = 0
                best_m = se[mcs[0]] / ewma[0]
                for k in range(1, n_ues):
                    m = se[mcs[k]] / ewma[k]
                    if m > best_m:
                        best_m = m
                        best = k
            else:
                best = harq[3] % n_ues
                harq[3] += 1
            m_use = mcs[best]
            retx = 0
        p_fail = _bler(snr_table[best, col], thresholds[m_use], slope)
        ok = uniforms[t] >= p_fail
        win_tx[best] += 1
        selected[t] = best
        mcs_used[t] = m_use
        if ok:
            bits[t] = tb_bits[m_use]
            ewma[best] += inv * se[m_use]
            flags[t] = retx
            harq[0] = -1
            harq[1] = 0
            harq[2] = -1
        else:
            bits[t] = 0
            flags[t] = retx | 2
            win_fail[best] += 1
            if harq[0] >= 0 and harq[1] >= max_retx:
                harq[0] = -1
                harq[1] = 0
                harq[2] = -1
            elif harq[0] >= 0:
                harq[1] += 1
            else:
                harq[0] = best
                harq[1] = 1
                harq[2] = m_use
    if record and n_slots > 0:
        for k in range(n_ues):
            ewma_trace[n_slots - 1, k] = ewma[k]
