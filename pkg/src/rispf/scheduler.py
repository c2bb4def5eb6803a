"""Per-slot UE selection and EWMA throughput bookkeeping.

These are the single-step reference operations. The multi-slot loops that
the simulator runs live in :mod:`rispf.kernels` and must agree with them.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EWMA_INIT = 1e-3  # bits/s/Hz; keeps the first PF metrics finite
SLOT_DURATION_S = 0.5e-3


@dataclass
class SchedulerState:
    ewma: np.ndarray
    tc_slots: float
    sched_counts: np.ndarray = None
    slot: int = 0

    def __post_init__(self):
        if not self.tc_slots > 1:
            raise ValueError(f"EWMA constant must exceed one slot, got {self.tc_slots}")
        self.ewma = np.asarray(self.ewma, dtype=float).copy()
        if self.sched_counts is None:
            self.sched_counts = np.zeros(self.ewma.size, dtype=np.int64)

    @classmethod
    def initial(cls, n_ues: int, tc_slots: float, init: float = EWMA_INIT) -> "SchedulerState":
        return cls(np.full(n_ues, init), tc_slots)

    @property
    def n_ues(self) -> int:
        return self.ewma.size


@dataclass(frozen=True)
class ScheduleDecision:
    selected_ue: int
    metric_values: np.ndarray = field(repr=False)
    is_retransmission: bool = False


def tc_seconds_to_slots(tc_s: float, slot_duration_s: float = SLOT_DURATION_S) -> float:
    return tc_s / slot_duration_s


def pf_metrics(rates, ewma) -> np.ndarray:
    return np.asarray(rates, dtype=float) / np.asarray(ewma, dtype=float)


def pf_select(rates, state: SchedulerState) -> ScheduleDecision:
    """Argmax of rate over average rate; lowest index wins ties (including all-zero rates)."""
    metrics = pf_metrics(rates, state.ewma)
    return ScheduleDecision(int(np.argmax(metrics)), metrics)


def forced_decision(ue: int, rates, state: SchedulerState) -> ScheduleDecision:
    """Retransmission slot: the pending UE is served regardless of its metric."""
    return ScheduleDecision(int(ue), pf_metrics(rates, state.ewma), is_retransmission=True)


def ewma_update(state: SchedulerState, decision: ScheduleDecision, rates) -> SchedulerState:
    """One EWMA step; the served UE (also on retransmissions) adds ``rate / tc``."""
    inv = 1.0 / state.tc_slots
    ewma = (1.0 - inv) * state.ewma
    k = decision.selected_ue
    ewma[k] += inv * float(np.asarray(rates)[k])
    counts = state.sched_counts.copy()
    counts[k] += 1
    return SchedulerState(ewma, state.tc_slots, counts, state.slot + 1)


def rr_select(slot: int, n_ues: int) -> int:
    if n_ues < 1:
        raise ValueError("round robin needs at least one UE")
    return slot % n_ues


def empirical_frequencies(state: SchedulerState) -> np.ndarray:
    if state.slot == 0:
        raise ValueError("no slots elapsed")
    return state.sched_counts / state.slot
