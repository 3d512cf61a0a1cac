import math

import pytest
from numpy import arange, exp, linspace

from parastack import (
    FrequencyGrid,
    InterferencePattern,
    TwoPhotonAmplitude,
    ValidationError,
    dip_visibility,
    franson_rate,
    fringe_orientation,
    hom_rate,
    oscillation_period,
)


def gaussian(omega, center=2.0, sigma=0.01):
    return exp(-((omega - center) ** 2) / (2 * sigma ** 2))


def test_hom_dip(amplitude):
    tpa = amplitude(lambda ws, wi: gaussian(ws) * gaussian(wi))
    tau = linspace(-1000, 1000, 201)
    pattern = hom_rate(tpa, tau, check_window=True)
    assert pattern.rate[100] == pytest.approx(0, abs=1e-9)
    assert pattern.rate[0] == pytest.approx(1, abs=1e-9)
    assert dip_visibility(pattern) == pytest.approx(1, abs=1e-6)
    assert pattern.meta["window_deviation"] < 1e-3
    lines = pattern.to_csv().splitlines()
    assert lines[0] == "tau_fs,rate"
    assert len(lines) == 202


def test_hom_no_overlap(amplitude):
    # Signal and idler far apart, no exchange symmetry
    tpa = amplitude(lambda ws, wi: gaussian(ws, 1.97, 0.003) * gaussian(wi, 2.03, 0.003))
    pattern = hom_rate(tpa, linspace(-200, 200, 41))
    assert abs(pattern.rate - 1).max() < 1e-6


def test_hom_beating(amplitude):
    grid_args = dict(center=2.0, half_width=0.1, n_points=401)
    split = 0.1

    def state(ws, wi):
        a = gaussian(ws, 2 - split / 2, 0.005) * gaussian(wi, 2 + split / 2, 0.005)
        b = gaussian(ws, 2 + split / 2, 0.005) * gaussian(wi, 2 - split / 2, 0.005)
        return a + b

    tpa = amplitude(state, **grid_args)
    pattern = hom_rate(tpa, linspace(-300, 300, 1201))
    assert oscillation_period(pattern) == pytest.approx(2 * math.pi / split, rel=2e-2)


def test_hom_square_grid():
    grid = FrequencyGrid.uniform(2.0, 0.064, 64, center_i=2.1)
    tpa = TwoPhotonAmplitude(grid, [[1 + 0j] * 64] * 64, omega_p0=4.1)
    with pytest.raises(ValidationError):
        hom_rate(tpa, [0.0])

    grid = FrequencyGrid.uniform(2.0, 0.064, 64)
    zero = TwoPhotonAmplitude(grid, [[0j] * 64] * 64, omega_p0=4.0)
    with pytest.raises(ValidationError):
        hom_rate(zero, [0.0])
    with pytest.raises(ValidationError):
        franson_rate(zero, [0.0], [0.0])


def test_franson_limits(amplitude):
    tpa = amplitude(lambda ws, wi: gaussian(ws) * gaussian(wi))
    pattern = franson_rate(tpa, [0.0, 2000.0], [0.0, 2000.0])
    assert pattern.rate.shape == (2, 2)
    assert pattern.rate[0, 0] == pytest.approx(1, rel=1e-12)
    assert pattern.rate[1, 1] == pytest.approx(0.25, abs=1e-6)
    lines = pattern.to_csv().splitlines()
    assert lines[0] == "tau_s_fs,tau_i_fs,rate"
    assert len(lines) == 5


def test_fringe_orientation(amplitude):
    # Narrow sum frequency, broad difference: fringes along t_s + t_i = const
    tpa = amplitude(
        lambda ws, wi: gaussian(ws + wi, 4.0, 0.002) * gaussian(ws - wi, 0, 0.04)
    )
    tau = 400 + (arange(64) - 32) * 0.25
    pattern = franson_rate(tpa, tau, tau)
    assert fringe_orientation(pattern) == pytest.approx(135, abs=5)

    with pytest.raises(ValidationError):
        fringe_orientation(hom_rate(tpa, tau))


def test_oscillation_errors():
    pattern = InterferencePattern("hom", linspace(0, 10, 11), [1.0] * 11)
    with pytest.raises(ValidationError):
        oscillation_period(pattern)
