"""Monte Carlo sweeps built on :func:`rispf.simulate.run_trajectory`.

Trials are the unit of parallelism. Trial ``i`` always runs with seed
``(cfg.seed, i)`` and results are collected in trial order, so output does
not depend on the number of workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analysis import BoundParams, lower_confidence_bound, mean_ci, required_tc_slots
from .config import SimConfig
from .simulate import run_trajectory, trial_seed

HORIZON_PER_TC = 20  # slots simulated per EWMA window
WARMUP_PER_TC = 5

HEATMAP_ANGLES_A = (15.0, 30.0)  # UE-1 positions; 30 deg is a beam direction
HEATMAP_ANGLES_B = (75.0, 60.0)  # UE-2 positions; 60 deg is a beam direction
HEATMAP_DISTANCES = (1.22, 1.52, 1.82)


def _one(args):
    cfg, seed = args
    return run_trajectory(cfg, seed)[1]


def run_trials(cfg: SimConfig, n_trials: int = None, workers: int = None):
    """Summaries of trials ``0 .. n_trials-1``, in trial order."""
    n_trials = cfg.n_trials if n_trials is None else n_trials
    workers = cfg.workers if workers is None else workers
    jobs = [(cfg, trial_seed(cfg.seed, i)) for i in range(n_trials)]
    if workers <= 1 or n_trials <= 1:
        return [_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_one, jobs, chunksize=max(1, n_trials // (4 * workers))))


def horizon_for(cfg: SimConfig, tc_slots: float):
    """``(n_slots, warmup_slots)`` long enough for EWMA transients to wash out."""
    n = max(cfg.n_slots, int(math.ceil(HORIZON_PER_TC * tc_slots)))
    warm = max(cfg.warmup_slots, int(math.ceil(WARMUP_PER_TC * tc_slots)))
    return n, min(warm, n // 2)


@dataclass(frozen=True)
class Table:
    """Column-oriented result table; ``rows`` align with ``header``."""
    header: tuple
    rows: list

    def column(self, name):
        i = self.header.index(name)
        return [r[i] for r in self.rows]

    def where(self, **match):
        idx = {self.header.index(k): v for k, v in match.items()}
        return [r for r in self.rows if all(r[i] == v for i, v in idx.items())]


def _stats(values):
    m, h = mean_ci(values)
    return m, h


# ---------------------------------------------------------------- theory sweep

FIG3_HEADER = ("ts_slots", "tc_slots", "scheduler", "n_trials", "mean_throughput", "ci95",
               "genie_mean", "gap_mean", "gap_median", "gap_q80", "tv_p_mean", "tv_q_mean")


def scenario_fig3(cfg: SimConfig, schedulers=("pf", "rr", "genie", "no-ris"), keep_trials=False):
    """Throughput and optimality gap over every (T_s, T_c, scheduler) combination.

    Returns a :class:`Table` with 95% confidence half widths across trials.
    With ``keep_trials`` the per-trial summaries are returned as well, keyed by
    ``(ts, tc, scheduler)``.
    """
    rows, per_trial = [], {}
    for ts in cfg.ts_slots:
        for tc in cfg.tc_slots:
            n, warm = horizon_for(cfg, tc)
            for sched in schedulers:
                c = cfg.single(mode="theory", scheduler=sched, tc_slots=(tc,), ts_slots=(ts,),
                               n_slots=n, warmup_slots=warm)
                res = run_trials(c)
                thr = [r.mean_throughput for r in res]
                gaps = np.array([r.optimality_gap for r in res])
                m, h = _stats(thr)
                rows.append((int(ts), float(tc), sched, len(res), m, h,
                             float(np.mean([r.genie_mean for r in res])), float(gaps.mean()),
                             float(np.median(gaps)), float(np.quantile(gaps, 0.8)),
                             float(np.nanmean([r.tv_p for r in res])) if sched in ("pf", "rr") else float("nan"),
                             float(np.mean([r.tv_q for r in res]))))
                if keep_trials:
                    per_trial[(int(ts), float(tc), sched)] = res
    table = Table(FIG3_HEADER, rows)
    return (table, per_trial) if keep_trials else table


BOUND_HEADER = ("ts_slots", "tc_slots", "n_runs", "gap_threshold", "gap_median", "gap_q80",
                "gap_ok_fraction", "tv_p_violation_rate", "tv_q_violation_rate")

BOUND_WARMUP_PER_TC = 10


def scenario_bound(cfg: SimConfig, bound: BoundParams = None, ts_list=(1, 10, 100), n_runs=500):
    """Empirical check of the EWMA-window bound over independent PF runs.

    For each switching interval the window is ``required_tc_slots``; each run
    discards ``10 * T_c`` warm-up slots and then measures the gap, the RIS
    state PMF and the scheduling frequencies over exactly ``T_c`` slots.
    Returns a :class:`Table` and the per-run summaries keyed by ``ts``.
    """
    bound = bound or BoundParams(L=cfg.n_states, K=cfg.k)
    rows, per_ts = [], {}
    for ts in ts_list:
        b = BoundParams(bound.eps1, bound.eps2, bound.eta1, bound.eta2, bound.L, bound.K, int(ts))
        tc = required_tc_slots(b)
        warm = BOUND_WARMUP_PER_TC * tc
        warm += (-warm) % int(ts)  # measurement window starts on a switching boundary
        c = cfg.single(mode="theory", scheduler="pf", tc_slots=(float(tc),), ts_slots=(int(ts),),
                       n_slots=warm + tc, warmup_slots=warm, n_trials=n_runs)
        res = run_trials(c)
        gaps = np.array([r.optimality_gap for r in res])
        rows.append((int(ts), tc, len(res), b.gap_threshold, float(np.median(gaps)),
                     float(np.quantile(gaps, 0.8)), float(np.mean(gaps <= b.gap_threshold)),
                     float(np.mean([r.tv_p > b.eps1 for r in res])),
                     float(np.mean([r.tv_q > b.eps2 for r in res]))))
        per_ts[int(ts)] = res
    return Table(BOUND_HEADER, rows), per_ts


# ---------------------------------------------------------------- NR sweep

TCTS_HEADER = ("tc_s", "ts_s", "tc_slots", "ts_slots", "n_trials", "throughput_mbps", "ci95",
               "bler", "mean_mcs")


def scenario_tcts(cfg: SimConfig, keep_trials=False):
    """PF throughput in NR mode over the ``tc_slots x ts_slots`` grid (Mbps)."""
    if cfg.mode != "nr":
        cfg = cfg.single(mode="nr")
    slot_s = cfg.slot_duration_s
    rows, per_trial = [], {}
    for tc in cfg.tc_slots:
        for ts in cfg.ts_slots:
            c = cfg.single(scheduler="pf", tc_slots=(tc,), ts_slots=(ts,))
            res = run_trials(c)
            m, h = _stats([r.mean_throughput for r in res])
            rows.append((float(tc) * slot_s, float(ts) * slot_s, float(tc), int(ts), len(res), m, h,
                         float(np.mean([r.bler for r in res])),
                         float(np.mean([r.mean_mcs for r in res]))))
            if keep_trials:
                per_trial[(float(tc), int(ts))] = res
    table = Table(TCTS_HEADER, rows)
    return (table, per_trial) if keep_trials else table


# ---------------------------------------------------------------- heatmap

HEATMAP_HEADER = ("angle_deg", "distance_m", "n_trials", "ris_on", "ris_on_ci95", "ris_off",
                  "ris_off_ci95", "gain", "gain_lcb95")


def heatmap_configs(angles_a=HEATMAP_ANGLES_A, angles_b=HEATMAP_ANGLES_B):
    """Two-UE angle configurations, labelled ``"ij"`` by the index into each angle list."""
    return {f"{i}{j}": (a, b) for i, a in enumerate(angles_a) for j, b in enumerate(angles_b)}


def scenario_heatmap(cfg: SimConfig, angles_a=HEATMAP_ANGLES_A, angles_b=HEATMAP_ANGLES_B,
                     distances=HEATMAP_DISTANCES):
    """RIS-on (PF over random states) vs RIS-off throughput per UE angle and distance.

    Both UEs sit at the same distance. A cell's value is the system
    throughput averaged over every angle configuration containing that UE
    angle. On and off runs share seeds, so the per-trial gain is a paired
    difference; ``gain_lcb95`` is its one-sided 95% lower bound.
    """
    configs = heatmap_configs(angles_a, angles_b)
    rows = []
    for dist in distances:
        results = {}
        for label, (a, b) in configs.items():
            for sched in ("pf", "no-ris"):
                c = cfg.single(scheduler=sched, ue_positions=(), ue_polar=((a, dist), (b, dist)))
                results[label, sched] = np.array([r.mean_throughput for r in run_trials(c)])
        for angle in list(angles_a) + list(angles_b):
            labels = [lab for lab, pair in configs.items() if angle in pair]
            on = np.mean([results[lab, "pf"] for lab in labels], axis=0)
            off = np.mean([results[lab, "no-ris"] for lab in labels], axis=0)
            m_on, h_on = _stats(on)
            m_off, h_off = _stats(off)
            diff = on - off
            lcb = lower_confidence_bound(diff) if len(diff) > 1 else float("nan")
            rows.append((float(angle), float(dist), len(on), m_on, h_on, m_off, h_off,
                         float(diff.mean()), lcb))
    return Table(HEATMAP_HEADER, rows)


# ---------------------------------------------------------------- single config

RUN_HEADER = ("trial", "scheduler", "tc_slots", "ts_slots", "mean_throughput", "genie_mean",
              "optimality_gap", "tv_p", "tv_q", "bler", "mean_mcs")


def scenario_run(cfg: SimConfig):
    """One row per trial of the first (T_c, T_s) pair."""
    res = run_trials(cfg.single(tc_slots=cfg.tc_slots[:1], ts_slots=cfg.ts_slots[:1]))
    rows = [(i, r.scheduler, r.tc_slots, r.ts_slots, r.mean_throughput, r.genie_mean,
             r.optimality_gap, r.tv_p, r.tv_q, r.bler, r.mean_mcs) for i, r in enumerate(res)]
    return Table(RUN_HEADER, rows), res
