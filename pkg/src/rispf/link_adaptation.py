"""NR-style MCS table, BLER/RSRP driven MCS adaptation and HARQ."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources

import numpy as np

MCS_MIN = 3
MCS_MAX = 27
BLER_LOW = 0.05
BLER_HIGH = 0.15
BLER_SLOPE_PER_DB = 2.0
MAX_RETX = 3
FAST_ADAPT_STEP = 6

SLOTS_PER_BLER_WINDOW = 200  # 100 ms at 0.5 ms slots
RSRP_PERIOD_SLOTS = 160  # 80 ms
TDD_PERIOD_SLOTS = 10
TDD_DL_SLOTS = 6
SUBCARRIERS_PER_PRB = 12
NR_PRBS = 106
NR_PDSCH_SYMBOLS = 13
NR_DMRS_SYMBOLS = 1
NR_OVERHEAD = 0.14  # TS 38.306 FR1 downlink overhead factor
START_MCS = 9

NEW_TB = "new-TB"
RETRANSMIT = "retransmit"
DISCARD = "discard"


@dataclass(frozen=True)
class McsEntry:
    index: int
    modulation_order: int
    code_rate: float
    spectral_efficiency: float

    @property
    def snr_threshold_db(self) -> float:
        """SNR at which Shannon capacity equals this entry's spectral efficiency."""
        return 10.0 * math.log10(2.0 ** self.spectral_efficiency - 1.0)


class McsTable:
    def __init__(self, entries):
        self.entries = tuple(sorted(entries, key=lambda e: e.index))
        if [e.index for e in self.entries] != list(range(len(self.entries))):
            raise ValueError("MCS indices must be contiguous from 0")

    def __getitem__(self, index: int) -> McsEntry:
        return self.entries[index]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def spectral_efficiencies(self) -> np.ndarray:
        return np.array([e.spectral_efficiency for e in self.entries])

    @property
    def thresholds_db(self) -> np.ndarray:
        return np.array([e.snr_threshold_db for e in self.entries])

    @classmethod
    def from_text(cls, text: str) -> "McsTable":
        entries = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"MCS table line {lineno}: expected 4 columns, got {len(parts)}")
            idx, qm, rate1024, se = parts
            entries.append(McsEntry(int(idx), int(qm), int(rate1024) / 1024.0, float(se)))
        return cls(entries)

    @classmethod
    def from_file(cls, path) -> "McsTable":
        with open(path) as fh:
            return cls.from_text(fh.read())


@lru_cache(maxsize=1)
def default_table() -> McsTable:
    text = resources.files("rispf").joinpath("data/nr_pdsch_mcs_64qam.txt").read_text()
    return McsTable.from_text(text)


@dataclass(frozen=True)
class HarqState:
    pending: bool = False
    retries_used: int = 0
    mcs: int = -1


@dataclass(frozen=True)
class LinkState:
    current_mcs: int = START_MCS
    bler_window: tuple = ()  # True marks a failed TB
    harq: HarqState = HarqState()
    last_rsrp_dbm: float = float("nan")
    rsrp_age_slots: int = 0

    @property
    def bler(self) -> float:
        if not self.bler_window:
            return 0.0
        return sum(self.bler_window) / len(self.bler_window)


def clamp_mcs(index: int) -> int:
    return min(max(index, MCS_MIN), MCS_MAX)


def bler_probability(snr_db, mcs: McsEntry, slope: float = BLER_SLOPE_PER_DB):
    """Logistic BLER curve centred on the entry's Shannon threshold."""
    x = slope * (np.asarray(snr_db, dtype=float) - mcs.snr_threshold_db)
    # exp overflow for very low SNR saturates to BLER = 1
    with np.errstate(over="ignore"):
        out = 1.0 / (1.0 + np.exp(x))
    return float(out) if np.ndim(out) == 0 else out


def step_mcs_bler(current_mcs: int, bler: float) -> int:
    if bler < BLER_LOW:
        return clamp_mcs(current_mcs + 1)
    if bler > BLER_HIGH:
        return clamp_mcs(current_mcs - 1)
    return clamp_mcs(current_mcs)


def adapt_mcs_bler(state: LinkState) -> LinkState:
    if not state.bler_window:
        raise ValueError("BLER window is empty")
    return replace(state, current_mcs=step_mcs_bler(state.current_mcs, state.bler))


def nominal_mcs_from_rsrp(rsrp_dbm: float) -> int:
    if rsrp_dbm > -102.0:
        return 25
    if rsrp_dbm < -115.0:
        return 10
    return 15


def fast_adapt(current_mcs: int, nominal: int) -> int:
    if current_mcs - nominal > FAST_ADAPT_STEP:
        return clamp_mcs(current_mcs - FAST_ADAPT_STEP)
    if nominal - current_mcs > FAST_ADAPT_STEP:
        return clamp_mcs(current_mcs + FAST_ADAPT_STEP)
    return clamp_mcs(current_mcs)


def harq_step(state: LinkState, tb_success: bool):
    """Resolve one TB transmission. Returns ``(new_state, action)``.

    A failed TB is resent at the MCS it was first sent with, at most
    ``MAX_RETX`` times; the outcome is appended to the BLER window.
    """
    harq = state.harq
    mcs = harq.mcs if harq.pending else state.current_mcs
    window = state.bler_window + (not tb_success,)
    if tb_success:
        return replace(state, bler_window=window, harq=HarqState()), NEW_TB
    if harq.pending and harq.retries_used >= MAX_RETX:
        return replace(state, bler_window=window, harq=HarqState()), DISCARD
    retries = harq.retries_used + 1 if harq.pending else 1
    return replace(state, bler_window=window, harq=HarqState(True, retries, mcs)), RETRANSMIT


def slot_throughput_bits(mcs: McsEntry, n_prb: int, n_symbols: int,
                         dmrs_symbols: int = 0, overhead: float = 0.0) -> int:
    """Bits carried by one successful TB over the allocation.

    With the defaults this is ``n_prb * 12 * n_symbols * SE``; NR runs pass
    ``dmrs_symbols=NR_DMRS_SYMBOLS`` and ``overhead=NR_OVERHEAD``.
    """
    if n_prb < 1 or n_symbols < 1:
        raise ValueError("need at least one PRB and one symbol")
    data_symbols = n_symbols - dmrs_symbols
    if data_symbols < 0 or not 0.0 <= overhead < 1.0:
        raise ValueError("invalid DMRS/overhead accounting")
    return int(math.floor(n_prb * SUBCARRIERS_PER_PRB * data_symbols
                          * mcs.spectral_efficiency * (1.0 - overhead)))


def nr_tb_bits(mcs: McsEntry) -> int:
    return slot_throughput_bits(mcs, NR_PRBS, NR_PDSCH_SYMBOLS, NR_DMRS_SYMBOLS, NR_OVERHEAD)


def is_dl_slot(slot: int) -> bool:
    return slot % TDD_PERIOD_SLOTS < TDD_DL_SLOTS


def sustained_rate_mbps(bits_per_slot: int, slot_duration_s: float = 0.5e-3,
                        dl_fraction: float = TDD_DL_SLOTS / TDD_PERIOD_SLOTS) -> float:
    return bits_per_slot * dl_fraction / slot_duration_s / 1e6


def run_link_loop(snr_db: float, n_slots: int, rng: np.random.Generator,
                  start_mcs: int = START_MCS, table: McsTable = None,
                  window_slots: int = SLOTS_PER_BLER_WINDOW):
    """Single always-scheduled UE at a fixed SNR under BLER-driven adaptation.

    Every slot carries one TB (new or retransmitted). The BLER estimate is
    taken over the TBs of each ``window_slots`` window, after which the MCS
    steps and the window restarts.

    Returns ``(mcs_trace, failures)``: per-slot MCS used and TB failure flags.
    """
    table = table or default_table()
    state = LinkState(current_mcs=clamp_mcs(start_mcs))
    mcs_trace = np.empty(n_slots, dtype=np.int64)
    failures = np.empty(n_slots, dtype=bool)
    draws = rng.random(n_slots)
    for t in range(n_slots):
        if t and t % window_slots == 0 and state.bler_window:
            state = replace(adapt_mcs_bler(state), bler_window=())
        mcs = state.harq.mcs if state.harq.pending else state.current_mcs
        p_fail = bler_probability(snr_db, table[mcs])
        ok = draws[t] >= p_fail
        state, _ = harq_step(state, ok)
        mcs_trace[t] = mcs
        failures[t] = not ok
    return mcs_trace, failures
