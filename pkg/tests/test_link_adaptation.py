import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rispf.link_adaptation import (
    DISCARD, MAX_RETX, MCS_MAX, MCS_MIN, NEW_TB, NR_DMRS_SYMBOLS, NR_OVERHEAD, RETRANSMIT,
    HarqState, LinkState, McsEntry, McsTable, adapt_mcs_bler, bler_probability, clamp_mcs,
    default_table, fast_adapt, harq_step, is_dl_slot, nominal_mcs_from_rsrp, nr_tb_bits,
    run_link_loop, slot_throughput_bits, sustained_rate_mbps,
)

TABLE = default_table()


# -- table

def test_table_shape_and_known_rows():
    assert len(TABLE) == 29
    assert (TABLE[12].modulation_order, TABLE[12].code_rate * 1024) == (4, pytest.approx(434))
    assert (TABLE[22].modulation_order, TABLE[22].code_rate * 1024) == (6, pytest.approx(666))
    assert TABLE[0].spectral_efficiency == pytest.approx(0.2344)
    assert TABLE[28].spectral_efficiency == pytest.approx(5.5547)


def test_se_equals_order_times_rate():
    for e in TABLE:
        assert e.spectral_efficiency == pytest.approx(e.modulation_order * e.code_rate, abs=6e-5)


def test_se_monotone_except_modulation_switch():
    se = TABLE.spectral_efficiencies
    drops = [i for i in range(1, len(se)) if se[i] < se[i - 1]]
    # the standard table lists 2.5703 at index 16 and 2.5664 at 17 (16QAM -> 64QAM)
    assert drops == [17]
    assert se[17] == pytest.approx(se[16], abs=0.004)


def test_table_parse_errors():
    with pytest.raises(ValueError):
        McsTable.from_text("0 2 120\n")
    with pytest.raises(ValueError):
        McsTable.from_text("1 2 120 0.2344\n")


def test_threshold_inverts_shannon():
    for e in TABLE:
        assert math.log2(1 + 10 ** (e.snr_threshold_db / 10)) == pytest.approx(e.spectral_efficiency)


# -- BLER model

@pytest.mark.parametrize("i", [3, 12, 22, 27])
def test_bler_examples(i):
    e = TABLE[i]
    th = e.snr_threshold_db
    assert bler_probability(th, e) == pytest.approx(0.5)
    assert bler_probability(th + 10, e) < 0.01
    assert bler_probability(th - 10, e) > 0.99


def test_bler_extreme_snr_saturates():
    assert bler_probability(-1e4, TABLE[5]) == 1.0
    assert bler_probability(1e4, TABLE[5]) == 0.0


@given(st.floats(-30, 50), st.floats(-30, 50), st.integers(0, 28))
def test_bler_monotone_in_snr(a, b, i):
    lo, hi = sorted((a, b))
    assert bler_probability(hi, TABLE[i]) <= bler_probability(lo, TABLE[i])


# -- BLER stepping

def window(bler, n=100):
    fails = int(round(bler * n))
    return tuple([True] * fails + [False] * (n - fails))


@pytest.mark.parametrize("bler,want", [(0.0, 21), (0.30, 19), (0.10, 20)])
def test_adapt_examples(bler, want):
    assert adapt_mcs_bler(LinkState(current_mcs=20, bler_window=window(bler))).current_mcs == want


def test_adapt_clamps_to_operating_range():
    assert adapt_mcs_bler(LinkState(current_mcs=MCS_MAX, bler_window=window(0.0))).current_mcs == MCS_MAX
    assert adapt_mcs_bler(LinkState(current_mcs=MCS_MIN, bler_window=window(0.5))).current_mcs == MCS_MIN


def test_adapt_rejects_empty_window():
    with pytest.raises(ValueError):
        adapt_mcs_bler(LinkState())


# -- RSRP rules

@pytest.mark.parametrize("rsrp,want", [(-100, 25), (-120, 10), (-110, 15), (-102, 15), (-115, 15)])
def test_nominal_mcs(rsrp, want):
    assert nominal_mcs_from_rsrp(rsrp) == want


@pytest.mark.parametrize("cur,nom,want", [(25, 10, 19), (10, 25, 16), (15, 15, 15), (21, 15, 21)])
def test_fast_adapt_examples(cur, nom, want):
    assert fast_adapt(cur, nom) == want


@given(st.integers(MCS_MIN, MCS_MAX), st.sampled_from([10, 15, 25]))
def test_fast_adapt_bounded(cur, nom):
    new = fast_adapt(cur, nom)
    assert abs(new - cur) <= 6 and MCS_MIN <= new <= MCS_MAX


# -- HARQ

def test_harq_success_is_new_tb():
    s, action = harq_step(LinkState(), True)
    assert action == NEW_TB and not s.harq.pending


def test_harq_discards_after_three_retransmissions():
    s = LinkState(current_mcs=18)
    actions = []
    for _ in range(4):
        s, a = harq_step(s, False)
        actions.append(a)
    assert actions == [RETRANSMIT, RETRANSMIT, RETRANSMIT, DISCARD]
    assert not s.harq.pending and len(s.bler_window) == 4


def test_harq_retransmits_with_same_mcs():
    s = LinkState(current_mcs=18, harq=HarqState(True, 1, 14))
    s2, a = harq_step(s, False)
    assert a == RETRANSMIT and s2.harq.mcs == 14 and s2.harq.retries_used == 2


@given(st.lists(st.booleans(), max_size=60))
def test_harq_retry_count_bounded(outcomes):
    s = LinkState()
    for ok in outcomes:
        s, _ = harq_step(s, ok)
        assert 0 <= s.harq.retries_used <= MAX_RETX


# -- throughput

def test_slot_bits_trivial():
    e = McsEntry(0, 2, 0.5, 1.0)
    assert slot_throughput_bits(e, 1, 1) == 12


def test_slot_bits_validation():
    with pytest.raises(ValueError):
        slot_throughput_bits(TABLE[5], 0, 13)


@pytest.mark.parametrize("i,peak", [(12, 26.7), (22, 61.4)])
def test_peak_rates(i, peak):
    bits = slot_throughput_bits(TABLE[i], 106, 13, NR_DMRS_SYMBOLS, NR_OVERHEAD)
    assert bits == nr_tb_bits(TABLE[i])
    assert sustained_rate_mbps(bits) == pytest.approx(peak, rel=0.10)


def test_tdd_pattern():
    assert [is_dl_slot(t) for t in range(10)] == [True] * 6 + [False] * 4
    assert sum(is_dl_slot(t) for t in range(1000)) == 600


def test_clamp():
    assert clamp_mcs(0) == MCS_MIN and clamp_mcs(40) == MCS_MAX and clamp_mcs(12) == 12


# -- closed loop

def _goodput(snr_db, seed, n=20_000):
    mcs, fail = run_link_loop(snr_db, n, np.random.default_rng(seed))
    bits = np.array([nr_tb_bits(TABLE[m]) for m in range(len(TABLE))])
    return np.where(fail, 0, bits[mcs]).mean(), mcs, fail


@pytest.mark.parametrize("snr_db", [2.0, 6.0, 10.0, 14.0])
def test_loop_settles_inside_table_range(snr_db):
    # SNRs whose BLER-0.1 operating point lies between MCS 3 and MCS 27
    _, mcs, fail = _goodput(snr_db, 1)
    assert 0.03 <= fail[4000:].mean() <= 0.20


def test_throughput_nonincreasing_as_snr_drops():
    grid = [16.0, 12.0, 8.0, 4.0, 0.0]
    g = [_goodput(s, 3)[0] for s in grid]
    assert all(a >= b for a, b in zip(g, g[1:]))


def test_loop_deterministic():
    a = run_link_loop(9.0, 3000, np.random.default_rng(5))
    b = run_link_loop(9.0, 3000, np.random.default_rng(5))
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
