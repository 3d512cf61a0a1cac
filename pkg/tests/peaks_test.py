import math

import pytest
from numpy import full, linspace, log

from parastack import (
    GeneratorParams,
    Spectrum,
    ValidationError,
    find_peaks,
    generate_random_stack,
    localization_estimate,
    localization_length,
    microcavity,
    quarter_wave_stack,
    scan_peaks,
    transmission_spectrum,
    wavelength_to_omega,
)

from .conftest import HI, LO

OMEGA0 = wavelength_to_omega(1.0)


def lorentzian(omega, center, gamma, height=1.0):
    return height * gamma ** 2 / ((omega - center) ** 2 + gamma ** 2)


def test_lorentzian_width():
    omega = linspace(1.8, 2.0, 4001)
    peaks = find_peaks(omega, values=lorentzian(omega, 1.9, 0.002, 0.9))
    assert len(peaks) == 1
    peak = peaks[0]
    assert peak.omega_c == pytest.approx(1.9, abs=1e-9)
    assert peak.t_max == pytest.approx(0.9)
    assert peak.fwhm_omega == pytest.approx(0.004, rel=1e-3)
    assert peak.omega_lo < 1.9 < peak.omega_hi
    assert peak.fwhm_nm > 0
    assert peaks.dropped == 0


def test_floor_and_dropped():
    omega = linspace(1.8, 2.0, 4001)
    values = lorentzian(omega, 1.85, 0.001) + lorentzian(omega, 1.9, 0.001, 0.005)
    assert len(find_peaks(omega, floor_fraction=0.01, values=values)) == 1
    assert len(find_peaks(omega, floor_fraction=0.001, values=values)) == 2

    # Right half-maximum crossing beyond the grid
    values = lorentzian(omega, 1.85, 0.001) + lorentzian(omega, 1.9995, 0.002)
    peaks = find_peaks(omega, values=values)
    assert len(peaks) == 1
    assert peaks.dropped == 1


def test_find_peaks_on_spectrum():
    stack = microcavity(3)
    omega = linspace(0.95, 1.05, 2001) * OMEGA0
    peaks = find_peaks(transmission_spectrum(stack, omega))
    assert len(peaks) == 1
    assert peaks[0].t_max > 0.99


def test_scan_microcavity():
    stack = microcavity(3)
    band = (wavelength_to_omega(1.05), wavelength_to_omega(0.95))
    peaks = scan_peaks(stack, band)
    assert len(peaks) == 1
    peak = peaks[0]
    assert abs(peak.omega_c - OMEGA0) < peak.fwhm_omega / 4
    assert peak.t_max > 0.99
    assert peak.wavelength_um == pytest.approx(1.0, rel=1e-3)

    # The cavity peak moves to the blue at oblique incidence
    tilted = scan_peaks(stack, band, theta_ext=math.radians(15))
    assert len(tilted) == 1
    assert tilted[0].omega_c > peak.omega_c


def test_scan_narrow_peak():
    # High finesse: the peak is far narrower than the coarse scan step
    stack = microcavity(10)
    band = (wavelength_to_omega(1.05), wavelength_to_omega(0.95))
    peaks = scan_peaks(stack, band)
    assert len(peaks) == 1
    assert peaks[0].fwhm_omega < 2e-4 * OMEGA0
    assert abs(peaks[0].omega_c - OMEGA0) < peaks[0].fwhm_omega / 4


def test_scan_band():
    with pytest.raises(ValidationError):
        scan_peaks(microcavity(1), (2.0, 1.0))


def test_localization_estimate():
    loc = localization_estimate(full(50, 10.0), full(50, -2.0))
    assert loc.xi == 10
    assert loc.stderr == 0
    assert loc.count == 50

    log_t = [-2.0] * 49 + [-math.inf]
    loc = localization_estimate(full(50, 10.0), log_t)
    assert loc.xi == 10
    assert loc.excluded == 1
    assert loc.count == 49

    # Transparent on average
    loc = localization_estimate([10.0, 10.0], [0.1, -0.05])
    assert math.isinf(loc.xi)
    assert loc.dumps()["xi_um"] is None


def test_localization_length():
    with pytest.raises(ValidationError):
        localization_length([microcavity(1)] * 99)

    # Identical members: no spread
    stack = quarter_wave_stack(10, hi=HI, lo=LO)
    q = (HI.dispersion / LO.dispersion) ** 20
    expected = -2 * 5.0 / log(4 * q / (1 + q) ** 2)
    loc = localization_length([stack] * 100)
    assert loc.xi == pytest.approx(expected, rel=1e-9)
    assert loc.stderr == pytest.approx(0, abs=1e-9)


def test_heights_above_one():
    # Pair spectra and fluxes are not bounded by 1
    omega = linspace(1.8, 2.0, 4001)
    values = lorentzian(omega, 1.85, 0.001, 5.0) + lorentzian(omega, 1.95, 0.004, 10.0)
    peaks = find_peaks(omega, values=values)
    assert [p.t_max for p in peaks] == pytest.approx([5.0, 10.0], rel=1e-2)
    assert Spectrum(omega, values).fwhm() == pytest.approx(0.008, rel=1e-2)

    # Transmission data stays capped
    capped = find_peaks(omega, values=values, transmission=True)
    assert [p.t_max for p in capped] == [1.0, 1.0]


def test_localization_angles():
    # TE localization length of 250-layer random stacks at 0, 30 and 60 deg
    stacks = [generate_random_stack(GeneratorParams(n_elem=250, seed=k)) for k in range(100)]
    xi = [
        localization_length(stacks, theta_ext=math.radians(a), seed=1).xi for a in (0, 30, 60)
    ]
    assert 12 < xi[0] < 19
    assert 7 < xi[1] < 12.5
    assert 4.5 < xi[2] < 7.5
    assert xi[0] > xi[1] > xi[2]
