"""Rayleigh channel, AWGN and keyed random streams."""

import numpy as np
import pytest

from metakbest.channel import (
    complex_noise, draw_frame, noise_variance, rng_stream, sample_channel, transmit,
)
from metakbest.errors import DimensionMismatch
from metakbest.modem import qam


def test_stream_is_reproducible():
    a = sample_channel(4, 4, rng_stream(7, 3, 1))
    b = sample_channel(4, 4, rng_stream(7, 3, 1))
    np.testing.assert_array_equal(a, b)


def test_streams_differ():
    a = sample_channel(4, 4, rng_stream(7, 3, 1))
    b = sample_channel(4, 4, rng_stream(7, 3, 2))
    assert not np.array_equal(a, b)


def test_channel_moments():
    H = np.concatenate([sample_channel(10, 10, rng_stream(1, i)).ravel() for i in range(1000)])
    assert 0.99 <= np.mean(np.abs(H) ** 2) <= 1.01
    assert abs(np.mean(H)) < 0.01
    # real and imaginary parts each carry half the power
    assert np.var(H.real) == pytest.approx(0.5, abs=0.01)


def test_channel_entries_uncorrelated():
    draws = np.array([sample_channel(2, 2, rng_stream(2, i)).ravel() for i in range(10**5)])
    C = np.abs(np.cov(draws.T))
    off = C[~np.eye(4, dtype=bool)]
    assert off.max() < 0.02


def test_dims_checked():
    with pytest.raises(DimensionMismatch):
        sample_channel(2, 3, rng_stream(0))


def test_noise_variance_formula():
    assert noise_variance(4, 6.02) == pytest.approx(1.0, abs=1e-3)
    assert noise_variance(1, 0.0) == 1.0


def test_noise_power_and_whiteness():
    n = complex_noise((10**5, 3), 0.7, rng_stream(5))
    assert 0.99 <= np.mean(np.abs(n[:, 0]) ** 2) / 0.7 <= 1.01
    C = np.cov(n.T) / 0.7
    assert np.abs(C[~np.eye(3, dtype=bool)]).max() < 0.02


def test_noiseless_hook():
    rng = rng_stream(0)
    H = sample_channel(3, 2, rng)
    x = np.array([1 + 1j, -1j])
    y, n0 = transmit(H, x, 10.0, rng, n0=0.0)
    np.testing.assert_array_equal(y, H @ x)
    assert n0 == 0.0


def test_transmit_reports_n0():
    rng = rng_stream(0)
    H = sample_channel(4, 4, rng)
    _, n0 = transmit(H, np.ones(4), 12.0, rng)
    assert n0 == pytest.approx(4 / 10**1.2)


def test_transmit_dims():
    with pytest.raises(DimensionMismatch):
        transmit(np.ones((3, 2)), np.ones(3), 10.0, rng_stream(0))


def test_frame_consistent():
    c = qam(16)
    f = draw_frame(4, 5, c, 15.0, rng_stream(3, 9))
    assert f.bits.shape == (16,)
    np.testing.assert_allclose(f.Q1 @ f.Rbar, f.H, atol=1e-12)
    g = draw_frame(4, 5, c, 15.0, rng_stream(3, 9))
    np.testing.assert_array_equal(f.y, g.y)
