import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rispf.channel import (
    ArrayGeometry, LinkBudget, SteeringDirection, array_gains, cascaded_direction,
    cascaded_path_gain, db_to_linear, direction_between, draw_fading, effective_channel,
    path_loss_linear, spectral_efficiency, steering_vector,
)

cosines = st.floats(-1.0, 1.0, allow_nan=False)
small_geoms = st.builds(ArrayGeometry, st.integers(1, 8), st.integers(1, 8),
                        st.sampled_from([0.25, 0.5]))


# -- steering_vector

def test_steering_single_element_is_one():
    a = steering_vector(ArrayGeometry(1, 1), SteeringDirection(0.7, -0.3))
    np.testing.assert_array_equal(a, [1.0 + 0j])


def test_steering_broadside_all_ones():
    a = steering_vector(ArrayGeometry(4, 3), SteeringDirection(0.0, 0.0))
    np.testing.assert_allclose(a, np.ones(12))


def test_steering_hand_evaluated_entry():
    geom = ArrayGeometry(32, 32, 0.25)
    a = steering_vector(geom, SteeringDirection(0.5, 0.0))
    m, n = 2, 0
    assert a[m * geom.n_y + n] == pytest.approx(np.exp(1j * np.pi / 2))


def test_steering_kron_ordering():
    geom = ArrayGeometry(3, 2, 0.25)
    d = SteeringDirection(0.3, -0.6)
    a = steering_vector(geom, d)
    for m in range(3):
        for n in range(2):
            want = np.exp(1j * 2 * np.pi * 0.25 * (m * d.u + n * d.v))
            assert a[m * 2 + n] == pytest.approx(want)


@given(small_geoms, cosines, cosines)
def test_steering_unit_modulus(geom, u, v):
    a = steering_vector(geom, SteeringDirection(u, v))
    assert a.shape == (geom.n_elements,)
    assert np.max(np.abs(np.abs(a) - 1.0)) < 1e-12


@given(small_geoms, cosines, cosines, cosines, cosines)
def test_inner_product_bounded_by_n(geom, u1, v1, u2, v2):
    a = steering_vector(geom, SteeringDirection(u1, v1))
    b = steering_vector(geom, SteeringDirection(u2, v2))
    assert abs(np.vdot(a, b)) <= geom.n_elements + 1e-9
    assert abs(np.vdot(a, a)) == pytest.approx(geom.n_elements)


def test_geometry_validation():
    with pytest.raises(ValueError):
        ArrayGeometry(0, 4)
    with pytest.raises(ValueError):
        ArrayGeometry(4, 4, 0.0)
    assert ArrayGeometry.square(256).n_x == 16


# -- cascaded_direction

def test_cascaded_examples():
    assert cascaded_direction(SteeringDirection(0, 0), SteeringDirection(0.3, 0.1)) == SteeringDirection(0.3, 0.1)
    c = cascaded_direction(SteeringDirection(0.5, 0.2), SteeringDirection(-0.5, -0.2))
    assert (c.u, c.v) == pytest.approx((0.0, 0.0))
    c = cascaded_direction(SteeringDirection(0.6, 0), SteeringDirection(0.6, 0))
    assert (c.u, c.v) == pytest.approx((1.2, 0.0))


@given(cosines, cosines, cosines, cosines)
def test_cascaded_commutative_additive(u1, v1, u2, v2):
    a, b = SteeringDirection(u1, v1), SteeringDirection(u2, v2)
    assert cascaded_direction(a, b) == cascaded_direction(b, a)
    c = cascaded_direction(a, b)
    assert c.u == u1 + u2 and c.v == v1 + v2
    assert -2 <= c.u <= 2 and -2 <= c.v <= 2


def test_direction_between_planar():
    d = direction_between((0, 0), (1, 1))
    assert d.u == pytest.approx(math.sqrt(0.5)) and d.v == pytest.approx(math.sqrt(0.5))
    assert d.is_physical()


# -- path loss

def test_path_loss_examples():
    b = LinkBudget()
    assert path_loss_linear(1.0, 3.3, b) == pytest.approx(1e-3)
    assert path_loss_linear(10.0, 2.0, b) == pytest.approx(1e-5)
    assert path_loss_linear(100.0, 2.8, b) == pytest.approx(10 ** -8.6)


@pytest.mark.parametrize("d", [0.0, -1.0])
def test_path_loss_rejects_nonpositive(d):
    with pytest.raises(ValueError):
        path_loss_linear(d, 2.0, LinkBudget())


def test_cascaded_gain_is_product():
    b = LinkBudget()
    g = cascaded_path_gain((0, 0), (60, 20), (90, 0), b)
    d1, d2 = math.hypot(60, 20), math.hypot(30, 20)
    assert g == pytest.approx(path_loss_linear(d1, 2.0, b) * path_loss_linear(d2, 2.8, b))


def test_db_conversion():
    assert db_to_linear(110.0) == pytest.approx(1e11)
    assert LinkBudget().tx_snr == pytest.approx(1e11)


# -- effective channel / rate

def test_effective_channel_examples():
    geom = ArrayGeometry(4, 4)
    a = steering_vector(geom, SteeringDirection(0.2, 0.4))
    g = effective_channel(a, a, 1.0, 1.0)
    assert g.real == pytest.approx(16.0) and abs(g.imag) < 1e-12
    assert effective_channel(a, a, 1.0, 0.0) == 0
    assert effective_channel([1, 1], [1, -1], 1.0, 1.0) == 0


def test_effective_channel_conjugates_first_argument():
    phi = np.array([1j, 1.0])
    a = np.array([1.0, 1.0])
    assert effective_channel(phi, a, 4.0, 1.0) == pytest.approx(2.0 * (-1j + 1.0))


def test_effective_channel_length_mismatch():
    with pytest.raises(ValueError):
        effective_channel([1, 1], [1, 1, 1], 1.0, 1.0)


def test_spectral_efficiency_examples():
    b = LinkBudget(tx_snr_db=0.0)
    assert spectral_efficiency(0.0, b) == 0.0
    assert spectral_efficiency(1.0, b) == pytest.approx(1.0)
    assert spectral_efficiency(math.sqrt(255.0), b) == pytest.approx(8.0)


@given(st.floats(0, 1e3), st.floats(0, 1e3))
def test_spectral_efficiency_monotone(x, y):
    b = LinkBudget(tx_snr_db=10.0)
    lo, hi = sorted((x, y))
    assert spectral_efficiency(lo, b) <= spectral_efficiency(hi, b)


def test_fading_unit_variance():
    rng = np.random.default_rng(0)
    alpha = draw_fading(rng, 200_000)
    assert 0.99 <= np.mean(np.abs(alpha) ** 2) <= 1.01
    assert abs(np.mean(alpha)) < 0.01


def test_array_gains_matches_vdot():
    geom = ArrayGeometry(4, 2)
    cw = np.vstack([steering_vector(geom, SteeringDirection(u, 0.1)) for u in (0.0, 0.5)])
    resp = np.vstack([steering_vector(geom, SteeringDirection(0.5, 0.1)),
                      steering_vector(geom, SteeringDirection(-0.3, 0.0))])
    g = array_gains(cw, resp)
    for k in range(2):
        for l in range(2):
            assert g[k, l] == pytest.approx(abs(np.vdot(cw[l], resp[k])) ** 2)
    assert g[0, 1] == pytest.approx(64.0)
