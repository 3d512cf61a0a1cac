"""
Coherent superpositions of two-photon amplitudes.

Pinholes: M amplitudes taken from equidistant emission directions are
added with a constant phase step ϕ,

    Φ_M(ω_s, ω_i) = Σ_{n<M} exp(inϕ)·φ(ω_s + nΔω, ω_i + nΔω)

the shifted copies being resampled on a grid whose lower bounds are
extended by (M − 1)·Δω.

Angular range: amplitudes computed over a range of signal emission
angles are summed with a compensating phase linear in θ_s (as a
wedge-shaped prism would add), the slope being fitted to maximize the
weight of the first Schmidt mode.
"""
import math
from dataclasses import dataclass

from numpy import arange, asarray, exp, linspace, tensordot, zeros
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import minimize_scalar

from .amplitude import (
    EmissionGeometry,
    FrequencyGrid,
    _locate_peak,
    two_photon_amplitude,
)
from .schmidt import leading_weight
from .utils import NumericalError, ValidationError, logger

__all__ = [
    "SuperpositionSpec",
    "superpose_pinholes",
    "superpose_angular_range",
]

MIN_ANGLES = 32
COARSE_SCAN = 41


@dataclass(frozen=True)
class SuperpositionSpec:
    mode: str = "pinholes"  # or "angular"
    m: int = 1
    delta_omega: float = None  # rad/fs
    phase_step: float = 0.0  # rad
    theta_min: float = None  # rad
    theta_max: float = None
    n_angles: int = MIN_ANGLES
    compensation: float = None  # rad per rad of θ_s, fitted when None
    renormalize: bool = True

    def __post_init__(self):
        if self.mode == "pinholes":
            if self.m < 1:
                raise ValidationError("Pinhole count must be >= 1")
            if self.m > 1 and not (self.delta_omega or 0) > 0:
                raise ValidationError("Pinhole spacing delta_omega must be > 0")
        elif self.mode == "angular":
            if self.theta_min is None or self.theta_max is None:
                raise ValidationError("Angular range needs theta_min and theta_max")
            if self.theta_max < self.theta_min:
                raise ValidationError("theta_max must be >= theta_min")
            if self.n_angles < MIN_ANGLES:
                raise ValidationError(f"Angular range needs at least {MIN_ANGLES} angles")
        else:
            raise ValidationError(f'Unknown superposition mode "{self.mode}"')


def _extend(axis, extra):
    step = axis[1] - axis[0]
    return linspace(axis[0] - extra * step, axis[-1], len(axis) + extra)


def _shifted(values, grid, new_grid, shift, extra_s, extra_i):
    """
    Samples of `values` at (ω_s + shift, ω_i + shift) on `new_grid`,
    zero outside the original window
    """
    steps = shift / grid.step_s
    n_steps = int(round(steps))
    if abs(steps - n_steps) < 1e-9 and abs(shift / grid.step_i - n_steps) < 1e-9:
        # Whole number of samples: plain index shift
        out = zeros(new_grid.shape, dtype=complex)
        n_s, n_i = grid.shape
        row0 = extra_s - n_steps
        col0 = extra_i - n_steps
        rs, cs = max(row0, 0), max(col0, 0)
        re, ce = min(row0 + n_s, new_grid.shape[0]), min(col0 + n_i, new_grid.shape[1])
        if rs < re and cs < ce:
            out[rs:re, cs:ce] = values[rs - row0 : re - row0, cs - col0 : ce - col0]
        return out

    points = (new_grid.omega_s[:, None] + shift, new_grid.omega_i[None, :] + shift)
    axes = (grid.omega_s, grid.omega_i)
    real = RegularGridInterpolator(axes, values.real, bounds_error=False, fill_value=0.0)
    imag = RegularGridInterpolator(axes, values.imag, bounds_error=False, fill_value=0.0)
    return real(points) + 1j * imag(points)


def superpose_pinholes(tpa, spec):
    """
    Pinhole superposition of `tpa` following `spec` (M copies spaced
    by `spec.delta_omega` with phase step `spec.phase_step`). A
    "paper" amplitude is renormalized unless `spec.renormalize` is
    false; a "physical" one keeps the plain sum.
    """
    if spec.mode != "pinholes":
        raise ValidationError("Expected a pinhole superposition spec")
    if spec.m == 1:
        return tpa
    grid = tpa.grid
    reach = (spec.m - 1) * spec.delta_omega
    extra_s = int(math.ceil(reach / grid.step_s - 1e-9))
    extra_i = int(math.ceil(reach / grid.step_i - 1e-9))
    new_grid = FrequencyGrid(_extend(grid.omega_s, extra_s), _extend(grid.omega_i, extra_i))

    total = zeros(new_grid.shape, dtype=complex)
    for n in range(spec.m):
        copy = _shifted(tpa.values, grid, new_grid, n * spec.delta_omega, extra_s, extra_i)
        total += exp(1j * n * spec.phase_step) * copy

    meta = dict(tpa.meta)
    meta["superposition"] = {
        "mode": "pinholes",
        "m": spec.m,
        "delta_omega": spec.delta_omega,
        "phase_step": spec.phase_step,
    }
    out = tpa.with_values(total, grid=new_grid, meta=meta, normalization="physical")
    if tpa.normalization == "paper" and spec.renormalize:
        out = out.normalized("paper")
    elif tpa.normalization == "paper":
        out = out.with_values(total, normalization="paper")
    logger.debug("Superposed %s pinholes on %s", spec.m, new_grid)
    return out


def _track_peak(stack, omega, thetas):
    for theta in thetas:
        try:
            peak = _locate_peak(stack, omega, theta, rel_band=0.02)
        except NumericalError:
            raise NumericalError(
                f"Transmission peak lost at {math.degrees(theta):.4f} deg"
            )
        omega = peak.omega_c
    return omega


def _fit_compensation(stacked, offsets, grid, template):
    span = offsets[-1] - offsets[0]
    alpha_max = math.pi * (len(offsets) - 1) / span

    def weight(alpha):
        values = tensordot(exp(1j * alpha * offsets), stacked, axes=1)
        return leading_weight(template.with_values(values))

    coarse = linspace(-alpha_max, alpha_max, COARSE_SCAN)
    scores = [weight(alpha) for alpha in coarse]
    best = int(asarray(scores).argmax())
    step = coarse[1] - coarse[0]
    res = minimize_scalar(
        lambda a: -weight(a),
        bounds=(coarse[best] - step, coarse[best] + step),
        method="bounded",
    )
    alpha = float(res.x) if -res.fun >= scores[best] else float(coarse[best])
    logger.info("Angular compensation slope %.6g rad/rad", alpha)
    return alpha


def superpose_angular_range(stack, pump, spec, grid, normalization="paper"):
    """
    Sum of the amplitudes emitted over `[spec.theta_min,
    spec.theta_max]` (`spec.n_angles` directions, all on `grid`) with
    a phase linear in θ_s, exp(iα(θ_s − θ_c)). The slope α is
    `spec.compensation` or, when unset, the value maximizing the first
    Schmidt weight.
    """
    if spec.mode != "angular":
        raise ValidationError("Expected an angular-range superposition spec")
    if spec.theta_max == spec.theta_min:
        geometry = EmissionGeometry(theta_s=spec.theta_min)
        return two_photon_amplitude(stack, pump, geometry, grid, normalization)

    thetas = linspace(spec.theta_min, spec.theta_max, spec.n_angles)
    _track_peak(stack, grid.center_s, thetas)
    amplitudes = [
        two_photon_amplitude(stack, pump, EmissionGeometry(theta_s=t), grid)
        for t in thetas
    ]
    stacked = asarray([a.values for a in amplitudes])
    center = (spec.theta_min + spec.theta_max) / 2
    offsets = thetas - center
    template = amplitudes[len(amplitudes) // 2]

    alpha = spec.compensation
    if alpha is None:
        alpha = _fit_compensation(stacked, offsets, grid, template)
    # Sum over angles, each one weighted by its angular step
    d_theta = (spec.theta_max - spec.theta_min) / (spec.n_angles - 1)
    values = tensordot(exp(1j * alpha * offsets), stacked, axes=1) * d_theta
    meta = dict(template.meta)
    meta["geometry"] = dict(meta.get("geometry", {}))
    meta["superposition"] = {
        "mode": "angular",
        "theta_min_deg": math.degrees(spec.theta_min),
        "theta_max_deg": math.degrees(spec.theta_max),
        "n_angles": spec.n_angles,
        "compensation": alpha,
    }
    flags = set().union(*(a.flags for a in amplitudes))
    out = template.with_values(values, meta=meta, flags=flags)
    return out.normalized(normalization) if normalization == "paper" else out
