import math

import pytest
from numpy import abs as np_abs, allclose, linspace, sin

from parastack import (
    DomainError,
    GeneratorParams,
    LayerStack,
    Material,
    ValidationError,
    detection_mode,
    generate_random_stack,
    microcavity,
    quarter_wave_stack,
    solve_fields,
    transfer_matrix,
    transmission_spectrum,
    transmittance,
    wavelength_to_omega,
)

from .conftest import HI, LO

OMEGA0 = wavelength_to_omega(1.0)


def bragg_transmittance(n_pairs):
    q = (HI.dispersion / LO.dispersion) ** (2 * n_pairs)
    return 4 * q / (1 + q) ** 2


@pytest.mark.parametrize("n_pairs", [1, 3, 10])
def test_quarter_wave_center(n_pairs):
    stack = quarter_wave_stack(n_pairs, hi=HI, lo=LO)
    res = transmittance(stack, OMEGA0)
    assert res == pytest.approx(bragg_transmittance(n_pairs), rel=1e-9)


def test_deep_stop_band():
    # |t|² ~ 1e-11, from the right-incidence solution t = 1/m11
    stack = quarter_wave_stack(30, hi=HI, lo=LO)
    spec = transmission_spectrum(stack, [OMEGA0, 1.0001 * OMEGA0], direction="right")
    assert spec.T[0] == pytest.approx(bragg_transmittance(30), rel=1e-6)


def test_conservation():
    stack = generate_random_stack(GeneratorParams(n_elem=60, seed=3))
    omega = linspace(0.9, 1.1, 301) * OMEGA0
    for theta in (0.0, math.radians(30), math.radians(60)):
        left = transmission_spectrum(stack, omega, theta_ext=theta)
        right = transmission_spectrum(stack, omega, theta_ext=theta, direction="right")
        assert allclose(left.T + left.R, 1, atol=1e-10)
        assert allclose(right.T + right.R, 1, atol=1e-10)
        # Reciprocity
        assert allclose(left.T, right.T, rtol=1e-9, atol=1e-14)


def test_composition():
    first = quarter_wave_stack(2, hi=HI, lo=LO)
    second = microcavity(1, hi=HI, lo=LO)
    sin_theta = sin(math.radians(20))
    for omega in (0.95 * OMEGA0, OMEGA0, 1.07 * OMEGA0):
        both = transfer_matrix(first.concat(second), omega, sin_theta)
        product = transfer_matrix(second, omega, sin_theta) @ transfer_matrix(
            first, omega, sin_theta
        )
        assert both.shape == (2, 2)
        assert allclose(both, product, rtol=1e-10, atol=1e-12)


def test_unit_determinant():
    stack = generate_random_stack(GeneratorParams(n_elem=40, seed=11))
    omega = linspace(0.95, 1.05, 11) * OMEGA0
    (m00, m01), (m10, m11) = transfer_matrix(stack, omega, 0.3)
    assert allclose(m00 * m11 - m01 * m10, 1, atol=1e-9)


def test_field_map():
    stack = microcavity(3)
    omega = linspace(0.98, 1.02, 5) * OMEGA0
    fields = solve_fields(stack, omega)
    assert fields.forward.shape == (len(stack) + 2, 5)
    assert allclose(fields.forward[0], 1)
    assert allclose(fields.backward[-1], 0)
    assert allclose(fields.forward[-1], fields.t)
    assert allclose(fields.backward[0], fields.r)
    assert allclose(fields.T, transmittance(stack, omega))

    # The detection mode leaves the stack with a unit amplitude
    mode = detection_mode(stack, omega)
    assert allclose(mode.forward[-1], 1)
    assert allclose(mode.backward[0], 0, atol=1e-12)


def test_transparent_slab():
    slab = LayerStack([(Material("vacuum-like", 1.0, chi2=1.0), 20.0)])
    omega = linspace(1.8, 2.0, 7)
    assert allclose(transmittance(slab, omega, 0.5), 1)
    mode = detection_mode(slab, omega, sin_theta=0.5)
    assert allclose(np_abs(mode.layer_forward), 1)
    assert allclose(mode.layer_backward, 0)
    pump = solve_fields(slab, omega)
    assert allclose(pump.layer_forward, 1)


def test_errors():
    stack = microcavity(1)
    with pytest.raises(DomainError):
        transmittance(stack, OMEGA0, 1.0)
    with pytest.raises(ValidationError):
        solve_fields(stack, OMEGA0, direction="up")
    with pytest.raises(ValidationError):
        transmission_spectrum(stack, [OMEGA0, OMEGA0])


def test_spectrum_csv():
    spec = transmission_spectrum(microcavity(2), linspace(0.9, 1.1, 5) * OMEGA0)
    lines = spec.to_csv().splitlines()
    assert lines[0] == "omega_rad_per_fs,T,R,re_t,im_t"
    assert len(lines) == 6
    assert len(spec) == 5


def test_spectrum_df():
    pytest.importorskip("pandas")
    spec = transmission_spectrum(microcavity(2), linspace(0.9, 1.1, 5) * OMEGA0)
    df = spec.df()
    assert list(df.columns) == ["omega_rad_per_fs", "T", "R", "re_t", "im_t"]
    assert allclose(df["T"], spec.T)


def test_scaling():
    # Dispersionless layers: thicknesses × s and frequencies / s give the same t and r
    stack = microcavity(3, hi=HI, lo=LO)
    omega = linspace(0.8, 1.2, 41) * OMEGA0
    for theta in (0.0, 0.3):
        ref = transmission_spectrum(stack, omega, theta_ext=theta)
        for factor in (0.5, 2.5):
            res = transmission_spectrum(stack.scaled(factor), omega / factor, theta_ext=theta)
            assert allclose(res.t, ref.t, rtol=1e-9, atol=1e-12)
            assert allclose(res.r, ref.r, rtol=1e-9, atol=1e-12)
