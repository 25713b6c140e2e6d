"""Gray-labeled QAM, hard decisions and nearest-point enumeration."""

import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metakbest.errors import BadCount, LengthMismatch
from metakbest.modem import (
    demodulate_hard, gray_table_rows, hard_decision, modulate, nearest_points, qam,
)

ORDERS = [4, 16, 64]


@pytest.mark.parametrize("order", ORDERS)
def test_unit_energy(order):
    c = qam(order)
    assert np.mean(np.abs(c.points) ** 2) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("order", ORDERS)
def test_labels_bijective(order):
    c = qam(order)
    assert len({tuple(lab) for lab in c.labels}) == order


@pytest.mark.parametrize("order", ORDERS)
def test_gray_adjacency_exhaustive(order):
    c = qam(order)
    d = c.min_distance
    checked = 0
    for i, j in itertools.combinations(range(order), 2):
        if abs(abs(c.points[i] - c.points[j]) - d) < 1e-9:
            assert np.count_nonzero(c.labels[i] != c.labels[j]) == 1
            checked += 1
    m = int(np.sqrt(order))
    assert checked == 2 * m * (m - 1)


def test_documented_points():
    np.testing.assert_allclose(modulate([0, 0], qam(4)), [(1 + 1j) / np.sqrt(2)])
    np.testing.assert_allclose(modulate([0, 0, 0, 0], qam(16)), [(-3 - 3j) / np.sqrt(10)])


def test_16qam_axis_table():
    c = qam(16)
    # I from the first two bits: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
    for bits, level in [((0, 0), -3), ((0, 1), -1), ((1, 1), 1), ((1, 0), 3)]:
        x = modulate([*bits, 0, 0], c)[0]
        assert x.real * np.sqrt(10) == pytest.approx(level)
        assert x.imag * np.sqrt(10) == pytest.approx(-3)


def test_energy_of_random_symbols(rng):
    c = qam(16)
    bits = rng.integers(0, 2, 4 * 10**5)
    assert 0.98 <= np.mean(np.abs(modulate(bits, c)) ** 2) <= 1.02


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        modulate([0, 1, 1], qam(16))


def test_roundtrip_exhaustive_4qam():
    c = qam(4)
    for nt in (1, 2, 3):
        for bits in itertools.product([0, 1], repeat=2 * nt):
            np.testing.assert_array_equal(demodulate_hard(modulate(bits, c), c), bits)


@pytest.mark.parametrize("order", [16, 64])
def test_roundtrip_sampled(order, rng):
    c = qam(order)
    for _ in range(10**4 // 10):
        bits = rng.integers(0, 2, (10, 3 * c.bits_per_symbol))
        for row in bits:
            np.testing.assert_array_equal(demodulate_hard(modulate(row, c), c), row)


@given(st.lists(st.integers(0, 1), min_size=6, max_size=6 * 8).filter(lambda b: len(b) % 6 == 0))
def test_roundtrip_property_64qam(bits):
    c = qam(64)
    np.testing.assert_array_equal(demodulate_hard(modulate(bits, c), c), bits)


def test_small_noise_keeps_label(rng):
    c = qam(16)
    noise = 0.49 * c.min_distance * np.exp(2j * np.pi * rng.random(c.order))
    np.testing.assert_array_equal(hard_decision(c.points + noise, c), np.arange(c.order))


def test_midpoint_tie_goes_to_lower_index():
    c = qam(4)
    # points 0 (+1+1j) and 1 (+1-1j) are equidistant from +1
    assert hard_decision(np.array([1.0 / np.sqrt(2)]), c)[0] == 0
    # all four points are equidistant from the origin
    assert hard_decision(np.array([0j]), c)[0] == 0


class TestNearestPoints:
    def test_full_permutation(self):
        c = qam(16)
        assert sorted(nearest_points(0.3 - 0.1j, c, 16)) == list(range(16))

    def test_exact_point(self):
        c = qam(64)
        assert list(nearest_points(c.points[37], c, 1)) == [37]

    def test_inner_ring_of_16qam(self):
        c = qam(16)
        got = list(nearest_points(0j, c, 4))
        d = np.round(np.abs(c.points) ** 2, 12)
        brute = sorted(range(16), key=lambda i: (d[i], i))[:4]
        assert got == brute
        np.testing.assert_allclose(np.abs(c.points[got]), np.sqrt(2 / 10))

    @pytest.mark.parametrize("m", [0, 17])
    def test_bad_count(self, m):
        with pytest.raises(BadCount):
            nearest_points(0j, qam(16), m)


def test_gray_table_rows():
    rows = list(gray_table_rows(qam(4)))
    assert rows[0] == (0, "00", pytest.approx(1 / np.sqrt(2)), pytest.approx(1 / np.sqrt(2)))
    assert [r[1] for r in rows] == ["00", "01", "10", "11"]
