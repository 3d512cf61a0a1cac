import pytest
from numpy import allclose, exp, linspace, outer, sqrt

from parastack import (
    FrequencyGrid,
    NumericalError,
    PumpConfig,
    TwoPhotonAmplitude,
    ValidationError,
    auto_grid,
    cooperativity,
    entropy,
    hom_rate,
    leading_weight,
    microcavity,
    schmidt_decompose,
    two_photon_amplitude,
    wavelength_to_omega,
)


def gaussian(omega, center=2.0, sigma=0.01):
    return exp(-((omega - center) ** 2) / (2 * sigma ** 2))


def test_separable(amplitude):
    tpa = amplitude(lambda ws, wi: gaussian(ws) * gaussian(wi))
    res = schmidt_decompose(tpa)
    assert res.weights[0] == pytest.approx(1, abs=1e-12)
    assert res.cooperativity() == pytest.approx(1, abs=1e-9)
    assert res.entropy() == pytest.approx(0, abs=1e-9)
    assert leading_weight(tpa) == pytest.approx(1, abs=1e-12)
    assert res.norm == pytest.approx(tpa.norm(), rel=1e-9)


def test_two_modes():
    grid = FrequencyGrid.uniform(2.0, 0.064, 129)
    axis, weights = grid.omega_s, grid.weights_s

    def unit(values):
        return values / sqrt((weights * values ** 2).sum())

    # Even and odd functions of a symmetric grid are orthogonal
    even = unit(gaussian(axis))
    odd = unit((axis - 2.0) * gaussian(axis))
    values = 0.8 * outer(even, even) + 0.6 * outer(odd, odd)
    tpa = TwoPhotonAmplitude(grid, values, omega_p0=4.0)

    res = schmidt_decompose(tpa)
    assert res.weights[:2] == pytest.approx([0.64, 0.36], abs=1e-9)
    assert res.weights[2:].sum() == pytest.approx(0, abs=1e-9)
    assert res.norm == pytest.approx(1, rel=1e-9)
    assert res.cooperativity() == pytest.approx(1 / (0.64 ** 2 + 0.36 ** 2), rel=1e-8)
    assert allclose(res.reconstruct(), tpa.values, atol=1e-9)
    assert allclose(res.reconstruct(rank=1), 0.8 * outer(even, even), atol=1e-9)

    # Modes are orthonormal under the grid quadrature
    first, second = res.signal_modes[:2]
    assert (weights * abs(first) ** 2).sum() == pytest.approx(1, rel=1e-9)
    assert abs((weights * first.conj() * second).sum()) < 1e-9


def test_weight_lists():
    assert entropy([0.25] * 4) == pytest.approx(2)
    assert cooperativity([0.25] * 4) == pytest.approx(4)
    assert entropy([1.0]) == 0
    with pytest.raises(ValidationError):
        entropy([0.5, 0.6])
    with pytest.raises(ValidationError):
        cooperativity([1.5, -0.5])


def test_exports(amplitude):
    tpa = amplitude(lambda ws, wi: gaussian(ws, sigma=0.005) * gaussian(wi, sigma=0.02))
    res = schmidt_decompose(tpa)
    doc = res.dumps(max_modes=3)
    assert '"rank": 129' in doc
    lines = res.mode_csv(0).splitlines()
    assert lines[0] == "field,omega_rad_per_fs,re,im"
    assert len(lines) == 1 + 2 * 129
    with pytest.raises(ValidationError):
        res.mode_csv(129)


def test_zero_amplitude():
    grid = FrequencyGrid.uniform(2.0, 0.064, 64)
    tpa = TwoPhotonAmplitude(grid, [[0j] * 64] * 64, omega_p0=4.0)
    with pytest.raises(NumericalError):
        schmidt_decompose(tpa)
    assert leading_weight(tpa) == 0


def test_degenerate_microcavity():
    # Cavity line much narrower than the 250 fs pump: close to separable
    omega0 = wavelength_to_omega(1.0)
    stack = microcavity(10)
    pump = PumpConfig(omega_p0=2 * omega0)
    grid = auto_grid(stack, pump, n_points=128)
    tpa = two_photon_amplitude(stack, pump, grid=grid, normalization="paper")
    res = schmidt_decompose(tpa)
    assert res.weights[0] >= 0.99
    assert res.entropy() <= 0.01
    assert res.cooperativity() <= 1.01

    pattern = hom_rate(tpa, linspace(-5000, 5000, 101))
    assert pattern.rate.min() <= 0.01
    assert pattern.rate[50] == pytest.approx(0, abs=1e-6)
