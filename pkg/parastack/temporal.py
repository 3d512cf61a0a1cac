"""
Temporal two-photon amplitude and photon fluxes.

The spectral amplitude is weighted by √(ω_s ω_i / ω_s⁰ ω_i⁰) and
transformed with the exp(−iωt) convention and a 1/2π prefactor, so that
the transform is unitary:

    ΣΣ |φ(t_s, t_i)|² Δt_s Δt_i = ΣΣ (ω_s ω_i/ω_s⁰ ω_i⁰)|φ(ω_s, ω_i)|² Δω_s Δω_i

The time window is 2π/Δω on each axis; zero padding (`pad`) only
refines the time step.
"""
import io
import math
from dataclasses import dataclass, field

from numpy import abs as np_abs, arange, exp, linspace, meshgrid, sqrt
from numpy.fft import fft2, fftshift
from scipy.interpolate import RegularGridInterpolator

from .amplitude import FrequencyGrid, _half_max_samples
from .peaks import find_peaks
from .utils import (
    C_SI,
    EPS0_SI,
    HBAR_EV_FS,
    HBAR_SI,
    ValidationError,
    fmt_float,
    logger,
)

__all__ = [
    "TemporalAmplitude",
    "PhotonFlux",
    "temporal_amplitude",
    "photon_flux",
]

# Fraction of the window (on each side) watched for aliasing
EDGE_FRACTION = 0.01
ALIASING_LEVEL = 1e-4
# The window must hold this many periods 2π/Δω of the narrowest
# spectral feature, i.e. its FWHM must span as many grid steps
MIN_FEATURE_SAMPLES = 4


@dataclass
class TemporalAmplitude:
    t_s: object  # fs
    t_i: object
    values: object
    omega_s0: float
    omega_i0: float
    physical: bool = False
    flags: set = field(default_factory=set)

    @property
    def step_s(self):
        return float(self.t_s[1] - self.t_s[0])

    @property
    def step_i(self):
        return float(self.t_i[1] - self.t_i[0])

    @property
    def intensity(self):
        return np_abs(self.values) ** 2

    @property
    def window(self):
        "Time window (fs) on the signal and idler axes"
        return (self.step_s * len(self.t_s), self.step_i * len(self.t_i))

    def norm(self):
        return float(self.intensity.sum() * self.step_s * self.step_i)

    def sum_width(self):
        "RMS width (fs) of the t_s + t_i distribution of |φ(t_s, t_i)|²"
        total = self.t_s[:, None] + self.t_i[None, :]
        weight = self.intensity
        mean = (total * weight).sum() / weight.sum()
        return float(sqrt((((total - mean) ** 2) * weight).sum() / weight.sum()))

    def to_csv(self, stride=1):
        buff = io.StringIO()
        buff.write("t_s_fs,t_i_fs,abs2\n")
        intensity = self.intensity
        for a in range(0, len(self.t_s), stride):
            for b in range(0, len(self.t_i), stride):
                buff.write(
                    f"{fmt_float(self.t_s[a])},{fmt_float(self.t_i[b])},"
                    f"{fmt_float(intensity[a, b])}\n"
                )
        return buff.getvalue()


def _time_axis(n, step_omega):
    step_t = 2 * math.pi / (n * step_omega)
    return (arange(n) - n // 2) * step_t


def _refined(tpa, window):
    "Linear resampling of `tpa` on frequency steps of at most 2π/`window`"
    grid = tpa.grid
    axes = []
    for axis in (grid.omega_s, grid.omega_i):
        span = axis[-1] - axis[0]
        n = max(len(axis), math.ceil(span * window / (2 * math.pi)) + 1)
        axes.append(linspace(axis[0], axis[-1], n))
    if tuple(len(a) for a in axes) == grid.shape:
        return tpa
    points = tuple(meshgrid(*axes, indexing="ij"))
    parts = [
        RegularGridInterpolator(
            (grid.omega_s, grid.omega_i), part, bounds_error=False, fill_value=0.0
        )(points)
        for part in (tpa.values.real, tpa.values.imag)
    ]
    logger.info(
        "Frequency grid resampled to %sx%s for a %.0f fs window", len(axes[0]), len(axes[1]), window
    )
    return tpa.with_values(parts[0] + 1j * parts[1], grid=FrequencyGrid(*axes))


def temporal_amplitude(tpa, pad=1, physical=False, transverse_area=None, window=None):
    """
    Fourier transform of `tpa` on a time grid of `pad` times more
    samples than the frequency grid. With `physical` the result is
    scaled to the two-photon temporal amplitude,
    ħ√(ω_s⁰ω_i⁰)/(4πε₀cB)·φ(t_s, t_i), in SI units.

    The time window is 2π/Δω. A longer `window` (fs) is obtained by
    resampling the spectral amplitude on a finer frequency grid.
    """
    if pad < 1:
        raise ValidationError("pad must be >= 1")
    if window is not None:
        if not window > 0:
            raise ValidationError("Time window must be > 0")
        tpa = _refined(tpa, window)
    grid = tpa.grid
    w_s0, w_i0 = grid.center_s, grid.center_i
    weight = sqrt(grid.omega_s[:, None] * grid.omega_i[None, :] / (w_s0 * w_i0))
    n_s, n_i = pad * grid.shape[0], pad * grid.shape[1]
    samples = tpa.values * weight * grid.step_s * grid.step_i / (2 * math.pi)
    spectrum = fftshift(fft2(samples, s=(n_s, n_i)))
    t_s = _time_axis(n_s, grid.step_s)
    t_i = _time_axis(n_i, grid.step_i)
    # fft2 counts frequencies from the first grid sample
    values = (
        spectrum
        * exp(-1j * grid.omega_s[0] * t_s)[:, None]
        * exp(-1j * grid.omega_i[0] * t_i)[None, :]
    )

    flags = set()
    spectral = tpa.intensity
    narrow = min(
        _half_max_samples(spectral.sum(axis=1)), _half_max_samples(spectral.sum(axis=0))
    )
    if 0 < narrow < MIN_FEATURE_SAMPLES:
        logger.warning(
            "Time window too short: the narrowest spectral feature spans %s grid steps",
            narrow,
        )
        flags.add("coarse")

    intensity = np_abs(values) ** 2
    edge_s = max(1, int(EDGE_FRACTION * n_s))
    edge_i = max(1, int(EDGE_FRACTION * n_i))
    edge = (
        intensity[:edge_s].sum() + intensity[-edge_s:].sum()
        + intensity[:, :edge_i].sum() + intensity[:, -edge_i:].sum()
    )
    total = intensity.sum()
    if total > 0 and edge / total > ALIASING_LEVEL:
        logger.warning("Temporal amplitude reaches the window edges (aliasing)")
        flags.add("aliasing")

    if physical:
        area = transverse_area
        if area is None:
            area = tpa.meta.get("geometry", {}).get("transverse_area_um2", math.pi * 500 ** 2)
        # ω in rad/s, B in m²
        prefactor = HBAR_SI * math.sqrt(w_s0 * w_i0) * 1e15 / (
            4 * math.pi * EPS0_SI * C_SI * area * 1e-12
        )
        values = values * prefactor
    return TemporalAmplitude(
        t_s=t_s,
        t_i=t_i,
        values=values,
        omega_s0=w_s0,
        omega_i0=w_i0,
        physical=physical,
        flags=flags,
    )


@dataclass
class PhotonFlux:
    t: object
    values: object
    field: str = "signal"
    units: str = "relative"

    def total(self):
        return float(self.values.sum() * (self.t[1] - self.t[0]))

    def maxima(self, floor_fraction=0.05):
        "Resolved local maxima above `floor_fraction` of the highest one"
        return find_peaks(self.t, floor_fraction=floor_fraction, values=self.values)

    def to_csv(self):
        buff = io.StringIO()
        buff.write("t_fs,flux\n")
        for t, v in zip(self.t, self.values):
            buff.write(f"{fmt_float(t)},{fmt_float(v)}\n")
        return buff.getvalue()


def photon_flux(temporal, field="signal", units="relative"):
    """
    N_m(t_m) = ħω_m⁰·Σ |φ(t_s, t_i)|² Δt over the other time axis.
    `units="relative"` takes ħ = 1, `units="eV"` gives eV.
    """
    if units not in ("relative", "eV"):
        raise ValidationError('Flux units are "relative" or "eV"')
    hbar = HBAR_EV_FS if units == "eV" else 1.0
    intensity = temporal.intensity
    if field == "signal":
        t = temporal.t_s
        values = hbar * temporal.omega_s0 * intensity.sum(axis=1) * temporal.step_i
    elif field == "idler":
        t = temporal.t_i
        values = hbar * temporal.omega_i0 * intensity.sum(axis=0) * temporal.step_s
    else:
        raise ValidationError(f'Unknown field "{field}" (signal or idler)')
    return PhotonFlux(t, values, field=field, units=units)
