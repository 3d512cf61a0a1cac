import math

import pytest
from numpy import exp, linspace, sqrt

from parastack import (
    PhotonFlux,
    ValidationError,
    photon_flux,
    temporal_amplitude,
)


def gaussian(omega, center=2.0, sigma=0.01):
    return exp(-((omega - center) ** 2) / (2 * sigma ** 2))


def spectral_energy(tpa):
    "Frequency-weighted norm with plain rectangle quadrature"
    grid = tpa.grid
    weight = grid.omega_s[:, None] * grid.omega_i[None, :] / (grid.center_s * grid.center_i)
    return float((weight * tpa.intensity).sum() * grid.step_s * grid.step_i)


@pytest.mark.parametrize("pad", [1, 2])
def test_unitary(amplitude, pad):
    tpa = amplitude(lambda ws, wi: gaussian(ws + wi, 4.0, 0.004) * gaussian(ws - wi, 0, 0.03))
    temporal = temporal_amplitude(tpa, pad=pad)
    assert temporal.values.shape == (pad * 129, pad * 129)
    assert temporal.norm() == pytest.approx(spectral_energy(tpa), rel=1e-9)
    # The window does not depend on the padding
    window = temporal.step_s * len(temporal.t_s)
    assert window == pytest.approx(2 * math.pi / tpa.grid.step_s, rel=1e-12)


def test_gaussian_width(amplitude):
    sigma = 0.01
    tpa = amplitude(lambda ws, wi: gaussian(ws, sigma=sigma) * gaussian(wi, sigma=sigma))
    temporal = temporal_amplitude(tpa, pad=8)
    assert not temporal.flags

    flux = photon_flux(temporal)
    t, values = flux.t, flux.values
    mean = (t * values).sum() / values.sum()
    std = sqrt(((t - mean) ** 2 * values).sum() / values.sum())
    assert abs(mean) < 1
    assert std == pytest.approx(1 / (sigma * math.sqrt(2)), rel=1e-2)

    assert flux.total() == pytest.approx(temporal.omega_s0 * temporal.norm(), rel=1e-12)
    idler = photon_flux(temporal, field="idler")
    assert idler.total() == pytest.approx(temporal.omega_i0 * temporal.norm(), rel=1e-12)
    assert len(flux.maxima()) == 1


def test_aliasing(amplitude):
    # Spectrum narrower than a grid step: flat in time
    tpa = amplitude(lambda ws, wi: gaussian(ws, sigma=0.0005) * gaussian(wi, sigma=0.0005))
    temporal = temporal_amplitude(tpa)
    assert "aliasing" in temporal.flags


def test_sum_width(amplitude):
    # Narrow pump: long correlation along t_s + t_i
    narrow = amplitude(lambda ws, wi: gaussian(ws + wi, 4.0, 0.002) * gaussian(ws - wi, 0, 0.03))
    broad = amplitude(lambda ws, wi: gaussian(ws + wi, 4.0, 0.02) * gaussian(ws - wi, 0, 0.03))
    assert temporal_amplitude(broad, pad=2).sum_width() < temporal_amplitude(
        narrow, pad=2
    ).sum_width()


def test_flux_maxima():
    t = linspace(0, 400, 801)
    values = exp(-((t - 100) ** 2) / 50) + 0.5 * exp(-((t - 300) ** 2) / 50)
    flux = PhotonFlux(t, values)
    maxima = flux.maxima()
    assert [round(p.omega_c) for p in maxima] == [100, 300]
    assert len(flux.to_csv().splitlines()) == 802


def test_errors(amplitude):
    tpa = amplitude(lambda ws, wi: gaussian(ws) * gaussian(wi))
    with pytest.raises(ValidationError):
        temporal_amplitude(tpa, pad=0)
    temporal = temporal_amplitude(tpa)
    with pytest.raises(ValidationError):
        photon_flux(temporal, field="pump")
    with pytest.raises(ValidationError):
        photon_flux(temporal, units="J")
    assert photon_flux(temporal, units="eV").units == "eV"


def test_physical_scale(amplitude):
    tpa = amplitude(lambda ws, wi: gaussian(ws) * gaussian(wi))
    relative = temporal_amplitude(tpa)
    small = temporal_amplitude(tpa, physical=True, transverse_area=1e4)
    large = temporal_amplitude(tpa, physical=True, transverse_area=4e4)
    assert small.physical
    ratio = small.norm() / large.norm()
    assert ratio == pytest.approx(16, rel=1e-9)
    assert small.norm() != pytest.approx(relative.norm())


def test_two_peaks(amplitude):
    # Two frequency-swapped terms, one of them delayed by 1000 fs
    sigma = 0.004

    def state(ws, wi):
        delayed = gaussian(ws, 1.98, sigma) * gaussian(wi, 2.02, sigma) * exp(1j * ws * 1000)
        return delayed + gaussian(ws, 2.02, sigma) * gaussian(wi, 1.98, sigma)

    temporal = temporal_amplitude(amplitude(state), pad=4)
    maxima = photon_flux(temporal).maxima()
    assert [p.omega_c for p in maxima] == pytest.approx([0, 1000], abs=25)
    assert len(photon_flux(temporal, field="idler").maxima()) == 1


def test_window(amplitude):
    tpa = amplitude(lambda ws, wi: gaussian(ws, sigma=0.0015) * gaussian(wi, sigma=0.0015))
    short = temporal_amplitude(tpa)
    assert short.flags == {"coarse"}
    assert short.window[0] == pytest.approx(2 * math.pi / tpa.grid.step_s)

    longer = temporal_amplitude(tpa, window=20000)
    assert not longer.flags
    assert 20000 <= longer.window[0] < 20100
    assert 20000 <= longer.window[1] < 20100
    with pytest.raises(ValidationError):
        temporal_amplitude(tpa, window=0)
