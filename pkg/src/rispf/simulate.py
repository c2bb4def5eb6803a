"""Single-trajectory simulation: drop construction, slot loop and summary.

Random inputs are drawn up front from four independent child streams of the
trajectory seed (UE drop, RIS states, fading refresh, TB outcomes), so the
compiled and pure-Python kernels consume identical inputs and every scheduler
sees the same drop for a given seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from . import kernels
from .analysis import genie_throughput, optimality_gap, ThroughputVectors, tv_distance
from .channel import (
    ArrayGeometry, SteeringDirection, array_gains, cascaded_direction, cascaded_path_gain,
    db_to_linear, direction_between, draw_fading, steering_matrix,
)
from .config import SimConfig
from .link_adaptation import (
    FAST_ADAPT_STEP, MAX_RETX, MCS_MAX, MCS_MIN, RSRP_PERIOD_SLOTS, SLOTS_PER_BLER_WINDOW,
    TDD_DL_SLOTS, TDD_PERIOD_SLOTS, clamp_mcs, default_table, nominal_mcs_from_rsrp, nr_tb_bits,
)
from .ris_controller import (
    RisCodebook, SamplingPmf, codebook_from_directions, state_sequence, tile_and_build,
)
from .scheduler import EWMA_INIT

CHUNK_SLOTS = 1 << 16


@dataclass(frozen=True)
class Drop:
    """One static UE placement with its codebook and array gains."""
    positions: np.ndarray  # (K, 2)
    directions: tuple  # cascaded SteeringDirection per UE
    responses: np.ndarray  # (K, N)
    betas: np.ndarray
    alphas: np.ndarray
    codebook: RisCodebook
    pmf: SamplingPmf
    assignment: np.ndarray  # region of each UE
    gains: np.ndarray  # (K, L) |phi_l^H a_k|^2
    residual: float  # additive non-beamformed array gain

    @property
    def k(self) -> int:
        return len(self.betas)

    @property
    def optimal_states(self) -> np.ndarray:
        return np.argmax(self.gains, axis=1)

    @property
    def optimal_gains(self) -> np.ndarray:
        return self.gains.max(axis=1)


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, (tuple, list)):
        return np.random.SeedSequence([int(s) for s in seed])
    return np.random.SeedSequence(int(seed))


def trial_seed(base_seed: int, trial: int) -> tuple:
    """Seed of trial ``trial``; independent of how trials are spread over workers."""
    return (int(base_seed), int(trial))


def place_ues(cfg: SimConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.ue_positions:
        return np.array(cfg.ue_positions, dtype=float)
    if cfg.ue_polar:
        polar = np.array(cfg.ue_polar, dtype=float)
        az = np.deg2rad(polar[:, 0])
        return np.asarray(cfg.ris_position) + polar[:, 1:2] * np.column_stack([np.cos(az), np.sin(az)])
    x0, x1, y0, y1 = cfg.ue_box
    return np.column_stack([rng.uniform(x0, x1, cfg.n_ues), rng.uniform(y0, y1, cfg.n_ues)])


def build_drop(cfg: SimConfig, rng: np.random.Generator) -> Drop:
    geom = ArrayGeometry(cfg.n_x, cfg.n_y, cfg.spacing_wavelengths)
    positions = place_ues(cfg, rng)
    bs_dir = direction_between(cfg.ris_position, cfg.bs_position)
    dirs = tuple(cascaded_direction(bs_dir, direction_between(cfg.ris_position, p)) for p in positions)
    responses = steering_matrix(geom, dirs)
    betas = np.array([cascaded_path_gain(cfg.bs_position, cfg.ris_position, p, cfg.budget)
                      for p in positions])
    k = len(positions)
    alphas = draw_fading(rng, k) if cfg.fading == "rayleigh" else np.ones(k, dtype=complex)
    if cfg.codebook_angles_deg:
        beams = [cascaded_direction(bs_dir, SteeringDirection.from_angles(math.radians(a)))
                 for a in cfg.codebook_angles_deg]
        codebook = codebook_from_directions(beams, geom)
        n_beams = len(beams)
        pmf = SamplingPmf(np.full(n_beams, 1.0 / n_beams))
        gains = array_gains(codebook.phase_vectors, responses)
        assignment = np.argmax(gains, axis=1)
    else:
        codebook, pmf, assignment = tile_and_build(dirs, cfg.n_states, geom)
        gains = array_gains(codebook.phase_vectors, responses)
    residual = db_to_linear(cfg.residual_gain_db) * geom.n_elements ** 2
    return Drop(positions, dirs, responses, betas, alphas, codebook, pmf,
                np.asarray(assignment, dtype=np.int64), gains, residual)


def drop_for_seed(cfg: SimConfig, seed) -> Drop:
    """The drop :func:`run_trajectory` builds for ``seed``."""
    return build_drop(cfg, np.random.default_rng(_seed_sequence(seed).spawn(4)[0]))


# ---------------------------------------------------------------- inputs


def _draw_powers(cfg: SimConfig, drop: Drop, rng: np.random.Generator):
    """Fading powers ``|alpha|^2`` per refresh epoch, shape (n_epochs, K), and the epoch length."""
    static = np.abs(drop.alphas[None, :]) ** 2
    ts = int(cfg.ts_slots[0])
    if cfg.fading_refresh == "static" or cfg.fading == "none":
        return static, 0
    period = 1 if cfg.fading_refresh == "slot" or ts == 0 else ts
    if cfg.fading_refresh == "block" and ts == 0:
        return static, 0
    n_epochs = -(-cfg.n_slots // period)
    return np.abs(draw_fading(rng, (n_epochs, drop.k))) ** 2, period


class _Channel:
    """Linear SNR tables served chunk by chunk.

    ``kind`` selects the array gain: ``"ris"`` uses the sampled RIS state,
    ``"opt"`` each UE's best codeword and ``"off"`` the residual gain only.
    """

    def __init__(self, cfg, drop, kind, states, powers, period):
        self.drop, self.kind, self.states = drop, kind, states
        self.powers, self.period = powers, period
        self.scale = cfg.budget.tx_snr * drop.betas
        if period == 0:
            base = self.scale * powers[0]
            self.static = base[:, None] * self._gain_matrix()
        else:
            self.static = None

    def _gain_matrix(self):
        d = self.drop
        if self.kind == "ris":
            return d.gains + d.residual
        if self.kind == "opt":
            return (d.optimal_gains + d.residual)[:, None]
        return np.full((d.k, 1), d.residual)

    def chunk(self, t0, t1):
        n = t1 - t0
        if self.static is not None:
            if self.kind == "ris":
                return self.static, self.states[t0:t1]
            return self.static, np.zeros(n, dtype=np.int64)
        epochs = np.arange(t0, t1) // self.period
        p = self.powers[epochs]  # (n, K)
        if self.kind == "ris":
            g = self.drop.gains[:, self.states[t0:t1]].T + self.drop.residual
        elif self.kind == "opt":
            g = (self.drop.optimal_gains + self.drop.residual)[None, :]
        else:
            g = self.drop.residual
        snr = np.ascontiguousarray((self.scale[None, :] * p * g).T)
        return snr, np.arange(n, dtype=np.int64)


# ---------------------------------------------------------------- outputs


@dataclass
class Trace:
    """Per-slot log; one entry per slot in every array."""
    slot: np.ndarray
    ris_state: np.ndarray  # -1 when the surface is off
    scheduled_ue: np.ndarray  # -1 in non-DL slots
    is_retransmission: np.ndarray
    rate: np.ndarray  # (n, K) Shannon rate of every UE, bits/s/Hz
    ewma: np.ndarray  # (n, K) EWMA after the slot
    served_rate: np.ndarray  # metric numerator credited to the served UE
    mcs: np.ndarray  # -1 in theory mode
    bler: np.ndarray  # TB failure probability of the served TB (nan in theory mode)
    rsrp_dbm: np.ndarray  # RSRP of the served UE's channel (nan in theory mode)
    delivered_bits: np.ndarray  # bits delivered (nan in theory mode)

    @property
    def n_ues(self) -> int:
        return self.rate.shape[1]

    def header(self):
        k = self.n_ues
        return (["slot", "ris_state", "scheduled_ue", "is_retransmission", "served_rate", "mcs",
                 "bler", "rsrp_dbm", "delivered_bits"]
                + [f"rate_{i}" for i in range(k)] + [f"ewma_{i}" for i in range(k)])

    def rows(self):
        for t in range(len(self.slot)):
            yield ([int(self.slot[t]), int(self.ris_state[t]), int(self.scheduled_ue[t]),
                    int(self.is_retransmission[t]), float(self.served_rate[t]), int(self.mcs[t]),
                    float(self.bler[t]), float(self.rsrp_dbm[t]), float(self.delivered_bits[t])]
                   + self.rate[t].tolist() + self.ewma[t].tolist())


@dataclass
class RunSummary:
    """Aggregates over the measurement window ``[warmup_slots, n_slots)``.

    Throughput is bits/s/Hz per slot in theory mode and Mbps in NR mode.
    ``aligned_fraction[k]`` is the share of scheduled slots in which UE ``k``
    was served while the RIS held its best codeword; together with
    ``misaligned_fraction`` it sums to one over all UEs.
    """
    mode: str
    scheduler: str
    tc_slots: float
    ts_slots: int
    n_measured: int
    mean_throughput: float
    per_ue_throughput: np.ndarray
    optimal_per_ue: np.ndarray  # R_k^opt / K in theory mode, nan in NR mode
    genie_mean: float
    p_hat: np.ndarray
    q_hat: np.ndarray
    pmf: np.ndarray
    tv_p: float
    tv_q: float
    optimality_gap: float
    aligned_fraction: np.ndarray
    misaligned_fraction: np.ndarray
    class_fractions: np.ndarray
    final_ewma: np.ndarray
    bler: float = float("nan")
    mean_mcs: float = float("nan")
    retx_fraction: float = float("nan")
    extra: dict = field(default_factory=dict)


def _ewma_rr(sel, served, ewma, tc, record):
    """EWMA recursion for a fixed selection sequence, vectorised over slots."""
    inv = 1.0 / tc
    decay = 1.0 - inv
    x = np.zeros((len(sel), len(ewma)))
    ok = sel >= 0
    x[np.nonzero(ok)[0], sel[ok]] = served[ok]
    y, _ = lfilter([inv], [1.0, -decay], x, axis=0, zi=(decay * ewma)[None, :])
    if len(sel):
        ewma[:] = y[-1]
    return y if record else None


def _theory_loop(cfg, chan, k, record, backend):
    n, tc = cfg.n_slots, float(cfg.tc_slots[0])
    sel = np.empty(n, dtype=np.int64)
    served = np.empty(n)
    ewma = np.full(k, EWMA_INIT)
    rates_log, ewma_log = [], []
    for t0 in range(0, n, CHUNK_SLOTS):
        t1 = min(n, t0 + CHUNK_SLOTS)
        snr, idx = chan.chunk(t0, t1)
        table = np.log2(1.0 + snr)
        if cfg.scheduler in ("pf", "no-ris"):
            trace_buf = np.empty((t1 - t0, k) if record else (0, k))
            backend.pf_loop(table, idx, ewma, tc, sel[t0:t1], served[t0:t1], trace_buf)
        else:
            s = np.arange(t0, t1, dtype=np.int64) % k
            sel[t0:t1] = s
            served[t0:t1] = table[s, idx]
            trace_buf = _ewma_rr(s, served[t0:t1], ewma, tc, record)
        if record:
            rates_log.append(table[:, idx].T)
            ewma_log.append(trace_buf)
    out = dict(selected=sel, served=served, ewma=ewma)
    if record:
        out["rate"] = np.vstack(rates_log)
        out["ewma_trace"] = np.vstack(ewma_log)
    return out


def state_switches(states) -> np.ndarray:
    """1 where the RIS state differs from the previous slot's (never at slot 0)."""
    sw = np.zeros(len(states), dtype=np.int64)
    sw[1:] = states[1:] != states[:-1]
    return sw


def _nr_loop(cfg, chan, k, record, backend, tb_rng):
    n, tc = cfg.n_slots, float(cfg.tc_slots[0])
    switches = state_switches(chan.states) if chan.kind == "ris" else np.zeros(n, dtype=np.int64)
    table = default_table()
    thr = table.thresholds_db
    se = table.spectral_efficiencies
    tb_bits = np.array([nr_tb_bits(e) for e in table], dtype=np.int64)
    snr0, idx0 = chan.chunk(0, 1)
    rsrp0 = 10.0 * np.log10(snr0[:, idx0[0]]) + cfg.rsrp_offset_db
    mcs = np.array([clamp_mcs(nominal_mcs_from_rsrp(r)) for r in rsrp0], dtype=np.int64)
    rsrp_last = rsrp0.copy()
    ewma = np.full(k, EWMA_INIT)
    win_tx = np.zeros(k, dtype=np.int64)
    win_fail = np.zeros(k, dtype=np.int64)
    harq = np.array([-1, 0, -1, 0], dtype=np.int64)
    mode = 0 if cfg.scheduler in ("pf", "no-ris") else 1
    params = np.array([mode, RSRP_PERIOD_SLOTS, SLOTS_PER_BLER_WINDOW, TDD_PERIOD_SLOTS,
                       TDD_DL_SLOTS, MCS_MIN, MCS_MAX, MAX_RETX, FAST_ADAPT_STEP], dtype=np.int64)
    fparams = np.array([tc, cfg.rsrp_offset_db, cfg.bler_slope])
    sel = np.empty(n, dtype=np.int64)
    mcs_used = np.empty(n, dtype=np.int64)
    bits = np.empty(n, dtype=np.int64)
    flags = np.empty(n, dtype=np.int64)
    logs = {"rate": [], "ewma": [], "snr_db": []}
    for t0 in range(0, n, CHUNK_SLOTS):
        t1 = min(n, t0 + CHUNK_SLOTS)
        snr, idx = chan.chunk(t0, t1)
        snr_db = 10.0 * np.log10(snr)
        uniforms = tb_rng.random(t1 - t0)
        trace_buf = np.empty((t1 - t0, k) if record else (0, k))
        backend.nr_loop(snr_db, idx, switches[t0:t1], uniforms, t0, thr, se, tb_bits, ewma, mcs,
                        rsrp_last, win_tx, win_fail,
                        harq, params, fparams, sel[t0:t1], mcs_used[t0:t1], bits[t0:t1],
                        flags[t0:t1], trace_buf)
        if record:
            logs["rate"].append(np.log2(1.0 + snr[:, idx].T))
            logs["ewma"].append(trace_buf)
            logs["snr_db"].append(snr_db[:, idx].T)
    out = dict(selected=sel, mcs_used=mcs_used, bits=bits, flags=flags, ewma=ewma,
               served=np.where(bits > 0, se[np.maximum(mcs_used, 0)], 0.0))
    if record:
        out["rate"] = np.vstack(logs["rate"])
        out["ewma_trace"] = np.vstack(logs["ewma"])
        out["snr_db"] = np.vstack(logs["snr_db"])
    return out


def _ris_states(cfg, drop, rng):
    n = cfg.n_slots
    if cfg.scheduler in ("pf", "rr"):
        return state_sequence(drop.pmf, int(cfg.ts_slots[0]), n, rng)
    return np.full(n, -1, dtype=np.int64)


def run_trajectory(cfg: SimConfig, seed=None, record_trace: bool = False, backend=None):
    """Simulate one drop for ``cfg.n_slots`` slots.

    Parameters
    ----------
    cfg : SimConfig
        Only the first entries of ``tc_slots``/``ts_slots`` are used.
    seed : int or tuple of int, optional
        Defaults to ``cfg.seed``.
    record_trace : bool
        Keep the per-slot log (memory grows with ``n_slots * K``).
    backend : str, optional
        ``"cython"`` or ``"python"``; defaults to the import-time choice.

    Returns
    -------
    trace : Trace or None
    summary : RunSummary
    """
    seed = cfg.seed if seed is None else seed
    impl = kernels.get_backend(backend)
    drop_ss, ris_ss, fade_ss, tb_ss = _seed_sequence(seed).spawn(4)
    drop = build_drop(cfg, np.random.default_rng(drop_ss))
    states = _ris_states(cfg, drop, np.random.default_rng(ris_ss))
    powers, period = _draw_powers(cfg, drop, np.random.default_rng(fade_ss))
    kind = {"pf": "ris", "rr": "ris", "genie": "opt", "no-ris": "off"}[cfg.scheduler]
    chan = _Channel(cfg, drop, kind, states, powers, period)
    k = drop.k
    if cfg.mode == "theory":
        out = _theory_loop(cfg, chan, k, record_trace, impl)
    else:
        out = _nr_loop(cfg, chan, k, record_trace, impl, np.random.default_rng(tb_ss))
    if cfg.scheduler == "genie":
        # the surface tracks the served UE
        states = np.where(out["selected"] >= 0, drop.optimal_states[np.maximum(out["selected"], 0)], -1)
    summary = summarize(cfg, drop, states, powers, period, out)
    trace = _make_trace(cfg, states, out) if record_trace else None
    return trace, summary


def _make_trace(cfg, states, out):
    n = cfg.n_slots
    nan = np.full(n, np.nan)
    if cfg.mode == "theory":
        return Trace(np.arange(n), states, out["selected"], np.zeros(n, dtype=np.int64), out["rate"],
                     out["ewma_trace"], out["served"], np.full(n, -1), nan, nan, nan)
    table = default_table()
    sel = out["selected"]
    dl = sel >= 0
    rows = np.nonzero(dl)[0]
    snr_served = np.full(n, np.nan)
    snr_served[rows] = out["snr_db"][rows, sel[rows]]
    bler = np.full(n, np.nan)
    thr = table.thresholds_db
    x = cfg.bler_slope * (snr_served[rows] - thr[out["mcs_used"][rows]])
    bler[rows] = 1.0 / (1.0 + np.exp(np.minimum(x, 700.0)))
    return Trace(np.arange(n), states, sel, (out["flags"] & 1).astype(np.int64), out["rate"],
                 out["ewma_trace"], out["served"], out["mcs_used"], bler,
                 snr_served + cfg.rsrp_offset_db, out["bits"].astype(float))


def summarize(cfg: SimConfig, drop: Drop, states, powers, period, out) -> RunSummary:
    w0, n = cfg.warmup_slots, cfg.n_slots
    n_w = n - w0
    k, n_states = drop.k, drop.codebook.size
    sel = out["selected"][w0:]
    dl = sel >= 0
    sel_dl = sel[dl]
    n_sched = max(1, len(sel_dl))

    if cfg.mode == "theory":
        per_ue = np.bincount(sel_dl, weights=out["served"][w0:][dl], minlength=k) / n_w
    else:
        bits = out["bits"][w0:]
        per_ue = np.bincount(sel_dl, weights=bits[dl], minlength=k) / (n_w * cfg.slot_duration_s) / 1e6

    st = states[w0:]
    if cfg.scheduler in ("pf", "rr"):
        p_hat = np.bincount(st, minlength=n_states) / n_w
        tv_p = tv_distance(p_hat, drop.pmf.probs)
    else:
        p_hat = np.full(n_states, np.nan)
        tv_p = float("nan")
    q_hat = np.bincount(sel_dl, minlength=k) / n_sched
    tv_q = tv_distance(q_hat, np.full(k, 1.0 / k)) if len(sel_dl) else float("nan")

    served_state = st[dl]
    aligned = (served_state >= 0) & (served_state == drop.optimal_states[sel_dl])
    aligned_frac = np.bincount(sel_dl[aligned], minlength=k) / n_sched
    misaligned_frac = np.bincount(sel_dl[~aligned], minlength=k) / n_sched
    class_frac = np.bincount(drop.assignment[sel_dl], minlength=n_states) / n_sched

    if cfg.mode == "theory":
        if period == 0:
            opt_per_ue, genie_mean = genie_throughput(
                drop.responses, drop.betas, powers[0], drop.codebook, cfg.budget.tx_snr, drop.residual)
        else:
            epochs = np.arange(w0, n) // period
            r_opt = np.log2(1.0 + cfg.budget.tx_snr * drop.betas[None, :] * powers[epochs]
                            * (drop.optimal_gains + drop.residual)[None, :])
            opt_per_ue = r_opt.mean(axis=0) / k
            genie_mean = float(opt_per_ue.sum())
        gap = optimality_gap(ThroughputVectors(per_ue, opt_per_ue))
    else:
        opt_per_ue = np.full(k, np.nan)
        genie_mean = gap = float("nan")

    summary = RunSummary(
        mode=cfg.mode, scheduler=cfg.scheduler, tc_slots=float(cfg.tc_slots[0]),
        ts_slots=int(cfg.ts_slots[0]), n_measured=n_w, mean_throughput=float(per_ue.sum()),
        per_ue_throughput=per_ue, optimal_per_ue=opt_per_ue, genie_mean=genie_mean,
        p_hat=p_hat, q_hat=q_hat, pmf=drop.pmf.probs.copy(), tv_p=tv_p, tv_q=tv_q,
        optimality_gap=gap, aligned_fraction=aligned_frac, misaligned_fraction=misaligned_frac,
        class_fractions=class_frac, final_ewma=out["ewma"].copy(),
    )
    if cfg.mode == "nr" and len(sel_dl):
        flags = out["flags"][w0:][dl]
        summary.bler = float(np.mean((flags & 2) > 0))
        summary.mean_mcs = float(np.mean(out["mcs_used"][w0:][dl]))
        summary.retx_fraction = float(np.mean((flags & 1) > 0))
    return summary
