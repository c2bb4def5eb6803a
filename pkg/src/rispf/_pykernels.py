"""Pure-Python slot loops used when the compiled extension is unavailable.

Arithmetic is ordered exactly as in ``_kernels.pyx`` so both backends
produce bit-identical traces.
"""
import math


def pf_loop(rate_table, idx, ewma, tc, selected, served, ewma_trace):
    n_ues = rate_table.shape[0]
    record = ewma_trace.shape[0] > 0
    inv = 1.0 / tc
    decay = 1.0 - inv
    table = rate_table.tolist()
    cols = [list(col) for col in zip(*table)]
    e = ewma.tolist()
    for t, col in enumerate(idx.tolist()):
        rates = cols[col]
        best = 0
        best_m = rates[0] / e[0]
        for k in range(1, n_ues):
            m = rates[k] / e[k]
            if m > best_m:
                best_m = m
                best = k
        r = rates[best]
        e = [decay * x for x in e]
        e[best] += inv * r
        selected[t] = best
        served[t] = r
        if record:
            ewma_trace[t, :] = e
    ewma[:] = e


def _bler(snr_db, threshold_db, slope):
    x = slope * (snr_db - threshold_db)
    if x > 700.0:
        return 0.0
    return 1.0 / (1.0 + math.exp(x))


def _clamp(m, lo, hi):
    return lo if m < lo else hi if m > hi else m


def _nominal(rsrp):
    return 25 if rsrp > -102.0 else 10 if rsrp < -115.0 else 15


def nr_loop(snr_table, idx, switches, uniforms, start_slot, thresholds, se, tb_bits,
            ewma, mcs, rsrp_last, win_tx, win_fail, harq, params, fparams,
            selected, mcs_used, bits, flags, ewma_trace):
    n_ues = snr_table.shape[0]
    record = ewma_trace.shape[0] > 0
    mode, rsrp_period, bler_period, tdd_period, tdd_dl, mcs_lo, mcs_hi, max_retx, fast_step = (
        int(x) for x in params)
    tc, rsrp_offset, slope = (float(x) for x in fparams)
    inv = 1.0 / tc
    decay = 1.0 - inv
    snr = snr_table.tolist()
    thr = thresholds.tolist()
    se_l = se.tolist()
    bits_l = tb_bits.tolist()
    e = ewma.tolist()
    m_k = mcs.tolist()
    r_last = rsrp_last.tolist()
    sw = switches.tolist()
    wtx = win_tx.tolist()
    wfail = win_fail.tolist()
    h_ue, h_retries, h_mcs, rr_ptr = (int(x) for x in harq)
    u_l = uniforms.tolist()
    for t, col in enumerate(idx.tolist()):
        if record and t > 0:
            ewma_trace[t - 1, :] = e
        slot = start_slot + t
        if slot % rsrp_period == 0:
            for k in range(n_ues):
                r_last[k] = snr[k][col] + rsrp_offset
                nominal = _nominal(r_last[k])
                if m_k[k] - nominal > fast_step:
                    m_k[k] = _clamp(m_k[k] - fast_step, mcs_lo, mcs_hi)
                elif nominal - m_k[k] > fast_step:
                    m_k[k] = _clamp(m_k[k] + fast_step, mcs_lo, mcs_hi)
        if sw[t]:
            for k in range(n_ues):
                m_k[k] = _clamp(_nominal(r_last[k]), mcs_lo, mcs_hi)
        if slot > 0 and slot % bler_period == 0:
            for k in range(n_ues):
                if wtx[k] > 0:
                    bler_est = wfail[k] / wtx[k]
                    if bler_est < 0.05:
                        m_k[k] = _clamp(m_k[k] + 1, mcs_lo, mcs_hi)
                    elif bler_est > 0.15:
                        m_k[k] = _clamp(m_k[k] - 1, mcs_lo, mcs_hi)
                    wtx[k] = 0
                    wfail[k] = 0
        e = [decay * x for x in e]
        if slot % tdd_period >= tdd_dl:
            selected[t] = -1
            mcs_used[t] = -1
            bits[t] = 0
            flags[t] = 0
            continue
        if h_ue >= 0:
            best, m_use, retx = h_ue, h_mcs, 1
        else:
            if mode == 0:
                best = 0
                best_m = se_l[m_k[0]] / e[0]
                for k in range(1, n_ues):
                    m = se_l[m_k[k]] / e[k]
                    if m > best_m:
                        best_m = m
                        best = k
            else:
                best = rr_ptr % n_ues
                rr_ptr += 1
            m_use, retx = m_k[best], 0
        p_fail = _bler(snr[best][col], thr[m_use], slope)
        ok = u_l[t] >= p_fail
        wtx[best] += 1
        selected[t] = best
        mcs_used[t] = m_use
        if ok:
            bits[t] = bits_l[m_use]
            e[best] += inv * se_l[m_use]
            flags[t] = retx
            h_ue, h_retries, h_mcs = -1, 0, -1
        else:
            bits[t] = 0
            flags[t] = retx | 2
            wfail[best] += 1
            if h_ue >= 0 and h_retries >= max_retx:
                h_ue, h_retries, h_mcs = -1, 0, -1
            elif h_ue >= 0:
                h_retries += 1
            else:
                h_ue, h_retries, h_mcs = best, 1, m_use
    if record and len(idx):
        ewma_trace[len(idx) - 1, :] = e
    ewma[:] = e
    mcs[:] = m_k
    rsrp_last[:] = r_last
    win_tx[:] = wtx
    win_fail[:] = wfail
    harq[:] = [h_ue, h_retries, h_mcs, rr_ptr]
