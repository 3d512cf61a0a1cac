"""
Two-photon interferometers.

Hong-Ou-Mandel: the normalized coincidence rate is 1 − ρ̃(τ) with

    ρ̃(τ) = Re ΣΣ ω_s ω_i φ(ω_s, ω_i) φ*(ω_i, ω_s) exp(i(ω_i − ω_s)τ) / R(0, 0)

On a grid shared by both photons, ω_i − ω_s is a whole number of grid
steps, so the double sum reduces to a sum over the diagonals of the
weighted product matrix.

Franson: the rate combines the one-photon and two-photon terms of

    R(τ_s, τ_i) = ΣΣ ω_s ω_i |φ(ω_s, ω_i)|² exp(iω_sτ_s) exp(iω_iτ_i)

evaluated as matrix products.
"""
import io
import math
from dataclasses import dataclass, field

from numpy import (
    abs as np_abs,
    arange,
    arctan2,
    asarray,
    exp,
    outer,
    real,
    trace,
    unravel_index,
)
from numpy.fft import fft, fft2, fftfreq

from .utils import ValidationError, fmt_float, logger, trapezoid_weights

__all__ = [
    "InterferencePattern",
    "hom_rate",
    "franson_rate",
    "dip_visibility",
    "oscillation_period",
    "fringe_orientation",
]


@dataclass
class InterferencePattern:
    kind: str  # "hom" or "franson"
    tau: object  # HOM delays, or signal delays for Franson (fs)
    rate: object
    tau_i: object = None  # Franson idler delays
    meta: dict = field(default_factory=dict)

    def to_csv(self):
        buff = io.StringIO()
        if self.kind == "hom":
            buff.write("tau_fs,rate\n")
            for t, r in zip(self.tau, self.rate):
                buff.write(f"{fmt_float(t)},{fmt_float(r)}\n")
        else:
            buff.write("tau_s_fs,tau_i_fs,rate\n")
            for a, ts in enumerate(self.tau):
                for b, ti in enumerate(self.tau_i):
                    buff.write(f"{fmt_float(ts)},{fmt_float(ti)},{fmt_float(self.rate[a, b])}\n")
        return buff.getvalue()


def _hom(values, omega, weights, tau):
    n = len(omega)
    step = omega[1] - omega[0]
    w = outer(weights, weights) * outer(omega, omega)
    product = w * values * values.T.conj()
    norm = (w * np_abs(values) ** 2).sum()
    offsets = arange(-(n - 1), n)
    diagonals = asarray([trace(product, offset=int(d)) for d in offsets])
    phases = exp(1j * outer(tau, offsets * step))
    rho = real(phases @ diagonals) / norm
    return 1 - rho


def hom_rate(tpa, tau, check_window=False):
    """
    Normalized Hong-Ou-Mandel coincidence rate at delays `tau` (fs).
    The grid must be shared by signal and idler. With `check_window`
    the rate is also computed over the central half of the window and
    the largest deviation is stored in `meta["window_deviation"]`.
    """
    grid = tpa.grid
    if not grid.square:
        raise ValidationError(
            "Hong-Ou-Mandel rate needs a shared signal/idler axis, "
            "resample the amplitude on a square grid"
        )
    if tpa.is_zero():
        raise ValidationError("Hong-Ou-Mandel rate of an all-zero amplitude")
    tau = asarray(tau, dtype=float)
    omega = grid.omega_s
    rate = _hom(tpa.values, omega, grid.weights_s, tau)
    meta = {}
    if check_window:
        n = len(omega)
        inner = slice(n // 4, n - n // 4)
        half = tpa.values[inner, inner]
        sub = omega[inner]
        if (np_abs(half) > 0).any():
            other = _hom(half, sub, trapezoid_weights(sub), tau)
            meta["window_deviation"] = float(np_abs(other - rate).max())
            logger.info("HOM window deviation %.3e", meta["window_deviation"])
    return InterferencePattern("hom", tau, rate, meta=meta)


def franson_rate(tpa, tau_s, tau_i):
    """
    Normalized Franson coincidence rate on the `tau_s` × `tau_i`
    delay grid (fs).
    """
    grid = tpa.grid
    if tpa.is_zero():
        raise ValidationError("Franson rate of an all-zero amplitude")
    tau_s = asarray(tau_s, dtype=float)
    tau_i = asarray(tau_i, dtype=float)
    weight = grid.weights * outer(grid.omega_s, grid.omega_i)
    power = weight * tpa.intensity
    r00 = power.sum()
    e_s = exp(1j * outer(grid.omega_s, tau_s))  # (N_s, T_s)
    e_i = exp(1j * outer(grid.omega_i, tau_i))  # (N_i, T_i)
    left = e_s.T @ power  # (T_s, N_i)
    r_both = left @ e_i
    r_cross = left @ e_i.conj()
    r_s = e_s.T @ power.sum(axis=1)
    r_i = power.sum(axis=0) @ e_i
    total = 2 * r_s[:, None] + 2 * r_i[None, :] + r_both + r_cross
    rate = 0.25 + real(total) / (8 * r00)
    return InterferencePattern("franson", tau_s, rate, tau_i=tau_i)


def dip_visibility(pattern, edge_fraction=0.1):
    """
    HOM visibility (R∞ − R_min)/R∞, R∞ being the mean rate over the
    outermost `edge_fraction` of the delays
    """
    rate = asarray(pattern.rate)
    tau = asarray(pattern.tau)
    far = np_abs(tau) >= (1 - edge_fraction) * np_abs(tau).max()
    baseline = rate[far].mean()
    return float((baseline - rate.min()) / baseline)


def oscillation_period(pattern, oversample=32):
    """
    Period (fs) of the dominant oscillation of a HOM interferogram
    sampled on a uniform delay grid
    """
    tau = asarray(pattern.tau)
    signal = asarray(pattern.rate) - 1
    step = tau[1] - tau[0]
    n = oversample * len(tau)
    spectrum = np_abs(fft(signal, n=n))
    freqs = fftfreq(n, d=step)
    spectrum[0] = 0
    spectrum[freqs <= 0] = 0
    freq = freqs[spectrum.argmax()]
    if not freq > 0:
        raise ValidationError("No oscillation found in interferogram")
    return float(1 / freq)


def fringe_orientation(pattern):
    """
    Orientation (deg, in [0, 180)) of the fringe lines of a Franson
    pattern, from the dominant non-constant component of its 2D
    Fourier transform. The wave vector of that component is
    perpendicular to the fringes.
    """
    if pattern.kind != "franson":
        raise ValidationError("Fringe orientation needs a Franson pattern")
    rate = asarray(pattern.rate)
    spectrum = np_abs(fft2(rate - rate.mean()))
    spectrum[0, 0] = 0
    k_s = fftfreq(rate.shape[0], d=pattern.tau[1] - pattern.tau[0])
    k_i = fftfreq(rate.shape[1], d=pattern.tau_i[1] - pattern.tau_i[0])
    a, b = unravel_index(spectrum.argmax(), spectrum.shape)
    wave_angle = math.degrees(arctan2(k_i[b], k_s[a]))
    return (wave_angle + 90) % 180
