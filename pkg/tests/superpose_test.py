import math

import pytest
from numpy import allclose, exp

from parastack import (
    EmissionGeometry,
    FrequencyGrid,
    PumpConfig,
    SuperpositionSpec,
    ValidationError,
    leading_weight,
    microcavity,
    schmidt_decompose,
    superpose_angular_range,
    superpose_pinholes,
    temporal_amplitude,
    two_photon_amplitude,
    wavelength_to_omega,
)

OMEGA0 = wavelength_to_omega(1.0)


def gaussian(omega, center=2.0, sigma=0.01):
    return exp(-((omega - center) ** 2) / (2 * sigma ** 2))


def test_single_pinhole(amplitude):
    tpa = amplitude(lambda ws, wi: gaussian(ws) * gaussian(wi))
    assert superpose_pinholes(tpa, SuperpositionSpec()) is tpa


def test_disjoint_copies(amplitude):
    sigma = 0.002
    tpa = amplitude(
        lambda ws, wi: gaussian(ws, sigma=sigma) * gaussian(wi, sigma=sigma)
    ).normalized("paper")
    spec = SuperpositionSpec(m=2, delta_omega=40 * tpa.grid.step_s)
    out = superpose_pinholes(tpa, spec)
    assert out.grid.shape == (129 + 40, 129 + 40)
    assert out.grid.omega_s[-1] == tpa.grid.omega_s[-1]
    assert out.normalization == "paper"
    assert out.check_normalization()
    assert out.meta["superposition"]["m"] == 2
    # Two orthogonal copies of a separable state
    assert schmidt_decompose(out).cooperativity() == pytest.approx(2, rel=1e-6)


def test_plain_sum(amplitude):
    tpa = amplitude(lambda ws, wi: gaussian(ws) * gaussian(wi))
    spec = SuperpositionSpec(m=3, delta_omega=5 * tpa.grid.step_s, phase_step=math.pi)
    out = superpose_pinholes(tpa, spec)
    assert out.normalization == "physical"
    # Copy n is φ shifted by n·Δω, the grid is extended by 10 samples
    assert out.grid.shape == (139, 139)
    values = tpa.values
    assert out.values[40, 40] == pytest.approx(
        values[30, 30] - values[35, 35] + values[40, 40], abs=1e-12
    )
    assert out.values[5, 5] == pytest.approx(values[5, 5] - values[0, 0], abs=1e-12)
    assert out.values[-1, -1] == pytest.approx(values[-1, -1], abs=1e-12)


def test_interpolated_shift(amplitude):
    tpa = amplitude(lambda ws, wi: gaussian(ws) * gaussian(wi))
    spec = SuperpositionSpec(m=2, delta_omega=2.5 * tpa.grid.step_s)
    out = superpose_pinholes(tpa, spec)
    assert out.grid.shape == (129 + 3, 129 + 3)
    # Far from the window edges the sum keeps most of both copies
    assert out.norm() > 3.5 * tpa.norm()


def test_sum_width(amplitude):
    tpa = amplitude(lambda ws, wi: gaussian(ws) * gaussian(wi))
    widths = []
    for m in (2, 8):
        out = superpose_pinholes(tpa, SuperpositionSpec(m=m, delta_omega=0.01))
        widths.append(temporal_amplitude(out, pad=2).sum_width())
    assert widths[1] < widths[0]


def test_spec_validation():
    with pytest.raises(ValidationError):
        SuperpositionSpec(m=0)
    with pytest.raises(ValidationError):
        SuperpositionSpec(m=2)
    with pytest.raises(ValidationError):
        SuperpositionSpec(mode="angular", theta_min=0.1)
    with pytest.raises(ValidationError):
        SuperpositionSpec(mode="angular", theta_min=0.1, theta_max=0.0)
    with pytest.raises(ValidationError):
        SuperpositionSpec(mode="angular", theta_min=0.0, theta_max=0.1, n_angles=8)
    with pytest.raises(ValidationError):
        SuperpositionSpec(mode="wedge")


def test_angular_range():
    stack = microcavity(4)
    pump = PumpConfig(omega_p0=2 * OMEGA0)
    grid = FrequencyGrid.uniform(OMEGA0, 0.05 * OMEGA0, 64)
    theta_max = math.radians(1)

    fitted = superpose_angular_range(
        stack, pump, SuperpositionSpec(mode="angular", theta_min=0.0, theta_max=theta_max), grid
    )
    plain = superpose_angular_range(
        stack,
        pump,
        SuperpositionSpec(mode="angular", theta_min=0.0, theta_max=theta_max, compensation=0.0),
        grid,
    )
    assert fitted.check_normalization()
    assert fitted.meta["superposition"]["n_angles"] == 32
    assert plain.meta["superposition"]["compensation"] == 0
    assert leading_weight(fitted) >= leading_weight(plain) - 1e-9

    with pytest.raises(ValidationError):
        superpose_angular_range(stack, pump, SuperpositionSpec(m=2, delta_omega=0.01), grid)


def test_angular_single_direction():
    stack = microcavity(4)
    pump = PumpConfig(omega_p0=2 * OMEGA0)
    grid = FrequencyGrid.uniform(OMEGA0, 0.05 * OMEGA0, 64)
    theta = math.radians(0.5)
    spec = SuperpositionSpec(mode="angular", theta_min=theta, theta_max=theta)
    single = superpose_angular_range(stack, pump, spec, grid)
    direct = two_photon_amplitude(
        stack, pump, EmissionGeometry(theta_s=theta), grid, normalization="paper"
    )
    assert allclose(single.values, direct.values)


def test_angular_range_entanglement():
    # Broadband pump: each direction alone is close to separable, the
    # resonance drifts with the angle and the sum gets entangled
    stack = microcavity(4)
    pump = PumpConfig(omega_p0=2 * OMEGA0, duration_fwhm=5)
    grid = FrequencyGrid.uniform(OMEGA0, 0.05 * OMEGA0, 64)
    results = []
    for degrees in (1, 10, 20):
        spec = SuperpositionSpec(
            mode="angular", theta_min=0.0, theta_max=math.radians(degrees), compensation=0.0
        )
        results.append(schmidt_decompose(superpose_angular_range(stack, pump, spec, grid)))
    for res in results:
        assert (res.weights[:-1] >= res.weights[1:]).all()
    for narrow, wide in zip(results, results[1:]):
        assert narrow.cooperativity() < wide.cooperativity()
        assert narrow.weights[0] > wide.weights[0]
