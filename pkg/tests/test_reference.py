"""Closed-form spectra, Bessel zeros, and the explicit bounds."""

import math

import numpy as np
import pytest

from specpart import reference as ref

# First ten Dirichlet eigenvalues of each domain as independently published
# (frozen at the printed precision).
TABLE = {
    "square": [19.739, 49.348, 49.348, 78.957, 98.696,
               98.696, 128.305, 128.305, 167.783, 167.783],
    "disk": [5.7831, 14.6819, 14.6819, 26.3746, 26.3746,
             30.4713, 40.7065, 40.7065, 49.2184, 49.2184],
    "triangle": [52.638, 122.822, 122.822, 210.552, 228.098,
                 228.098, 333.373, 333.373, 368.465, 368.465],
}


@pytest.mark.parametrize("domain", sorted(TABLE))
def test_spectrum_matches_published_table(domain):
    values = [e.value for e in ref.spectrum(domain, 10)]
    for got, printed in zip(values, TABLE[domain]):
        assert got == pytest.approx(printed, rel=1e-4)


def test_square_spectrum_formula():
    entries = ref.square_spectrum(6)
    assert entries[0].value == pytest.approx(2 * math.pi ** 2, abs=1e-12)
    assert entries[1].value == entries[2].value == pytest.approx(5 * math.pi ** 2)
    assert entries[4].value == entries[5].value == pytest.approx(10 * math.pi ** 2)
    assert entries[1].multiplicity == 2


def test_triangle_spectrum_formula():
    entries = ref.triangle_spectrum(4)
    assert entries[0].value == pytest.approx(16 * math.pi ** 2 / 3)
    # the (1,2) level is double
    assert entries[1].value == entries[2].value
    assert entries[1].multiplicity == 2
    assert entries[3].value == pytest.approx(16.0 / 9.0 * math.pi ** 2 * 12)


def test_disk_spectrum_multiplicities():
    entries = ref.disk_spectrum(6)
    assert entries[0].multiplicity == 1     # radial ground state
    assert entries[3].multiplicity == 2     # angular modes are double
    assert entries[4].multiplicity == 2
    assert entries[5].m == 0 and entries[5].n == 2


def test_disk_spectrum_against_brute_force():
    # oracle: enumerate j_{m,n}^2 over a generous index rectangle and sort
    brute = []
    for m in range(0, 21):
        for n in range(1, 21):
            value = ref.bessel_zero(float(m), n) ** 2
            brute.extend([value] * (1 if m == 0 else 2))
    brute.sort()
    got = [e.value for e in ref.disk_spectrum(30)]
    assert np.allclose(got, brute[:30], rtol=1e-12)


def test_bessel_half_order_closed_form():
    # J_{1/2}(x) = sqrt(2/(pi x)) sin x
    for x in (0.5, 1.0, 2.0, 10.0, 50.0):
        expected = math.sqrt(2.0 / (math.pi * x)) * math.sin(x)
        assert ref.bessel_j(0.5, x) == pytest.approx(expected, abs=1e-12)
    assert ref.bessel_j(0.5, 1.0) == pytest.approx(0.6713967, abs=1e-7)


def test_bessel_j_at_origin():
    assert ref.bessel_j(0.0, 0.0) == 1.0
    for nu in (0.5, 1.0, 3.7):
        assert ref.bessel_j(nu, 0.0) == 0.0


def test_bessel_j_range_checks():
    with pytest.raises(ValueError):
        ref.bessel_j(61.0, 1.0)
    with pytest.raises(ValueError):
        ref.bessel_j(1.0, 201.0)
    with pytest.raises(ValueError):
        ref.bessel_j(-0.5, 1.0)


def test_bessel_zero_half_order_is_n_pi():
    for n in range(1, 11):
        assert abs(ref.bessel_zero(0.5, n) - n * math.pi) < 1e-10


def test_bessel_zero_known_values():
    # 4 significant digits of the published 5.7831 (the print truncates)
    assert ref.bessel_zero(0.0, 1) ** 2 == pytest.approx(5.7831, abs=5e-4)
    assert ref.bessel_zero(1.5, 1) ** 2 == pytest.approx(20.19, abs=5e-3)
    assert ref.bessel_zero(0.0, 2) == pytest.approx(5.5200781103, abs=1e-9)


def test_bessel_zero_interlacing():
    for nu in (0.0, 0.5, 1.0, 2.5, 7.0, 20.0):
        for n in (1, 2, 3, 5):
            a = ref.bessel_zero(nu, n)
            b = ref.bessel_zero(nu + 1.0, n)
            c = ref.bessel_zero(nu, n + 1)
            assert a < b < c


def test_sector_lambda1():
    assert ref.sector_lambda1(math.pi) == pytest.approx(14.6819, abs=5e-4)
    assert ref.sector_lambda1(math.pi / 2) == pytest.approx(26.3746, abs=5e-4)
    assert ref.sector_lambda1(2 * math.pi) == pytest.approx(math.pi ** 2, abs=1e-9)


def test_sector_lambda1_decreasing_in_opening():
    openings = np.linspace(0.4, 2 * math.pi, 12)
    values = [ref.sector_lambda1(a) for a in openings]
    assert all(values[i] > values[i + 1] for i in range(len(values) - 1))


def test_bounds_square_k2_courant_sharp():
    b = ref.bounds("square", 2, math.inf)
    assert b.lower == pytest.approx(49.348, rel=1e-4)
    assert b.upper == pytest.approx(49.348, rel=1e-4)


def test_bounds_disk_k3():
    b = ref.bounds("disk", 3, math.inf)
    assert b.lower == pytest.approx(14.6819, rel=1e-4)
    assert b.upper == pytest.approx(20.19, rel=1e-3)
    assert b.upper_source == "sector"


def test_bounds_square_k4():
    b = ref.bounds("square", 4, math.inf)
    assert b.lower == pytest.approx(8 * math.pi ** 2, rel=1e-9)
    assert b.upper == pytest.approx(8 * math.pi ** 2, rel=1e-9)


@pytest.mark.parametrize("domain", ["square", "disk", "triangle"])
@pytest.mark.parametrize("p", [1.0, 2.0, 50.0, math.inf])
def test_bounds_ordering(domain, p):
    for k in range(1, 11):
        b = ref.bounds(domain, k, p)
        assert b.lower <= b.upper * (1 + 1e-12)


def test_lower_bound_is_power_mean():
    # p = 1 must reduce to the arithmetic mean of the spectrum
    values = [e.value for e in ref.spectrum("square", 5)]
    assert ref.lower_bound("square", 5, 1.0) == pytest.approx(np.mean(values))
    assert ref.lower_bound("square", 5, math.inf) == pytest.approx(values[-1])
