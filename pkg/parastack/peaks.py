"""
Transmission peaks and localization.

`find_peaks` works on a sampled spectrum; `scan_peaks` hunts the
peaks of a stack over a band when their widths span several orders of
magnitude: a coarse scan (one sixteenth of the mode spacing, itself
2/N_elem in fractional bandwidth) flags candidates, either local
maxima of |t|² or jumps of arg t larger than π/4 between two coarse
samples, then each candidate is zoomed on until its FWHM spans at
least 15 samples.
"""
import math
from dataclasses import dataclass

from numpy import (
    angle,
    argmax,
    asarray,
    concatenate,
    flatnonzero,
    isfinite,
    linspace,
    log,
    pi,
    sin,
)
from numpy.random import default_rng

from .transfer import TransmissionSpectrum, _chain, _wavevectors
from .utils import (
    ValidationError,
    logger,
    omega_to_wavelength,
    settings,
    wavelength_to_omega,
)

__all__ = [
    "Peak",
    "PeakList",
    "Localization",
    "find_peaks",
    "scan_peaks",
    "localization_estimate",
    "localization_length",
]

REFINE_POINTS = 129
REFINE_HALF_WIDTH = 4  # in FWHM


@dataclass(frozen=True)
class Peak:
    omega_c: float  # rad/fs
    fwhm_omega: float  # rad/fs
    fwhm_nm: float
    t_max: float
    omega_lo: float = None
    omega_hi: float = None

    @property
    def wavelength_um(self):
        return omega_to_wavelength(self.omega_c)

    def dumps(self):
        return {
            "omega_c": self.omega_c,
            "fwhm_omega": self.fwhm_omega,
            "fwhm_nm": self.fwhm_nm,
            "t_max": self.t_max,
        }


class PeakList(list):
    "List of `Peak` that also counts the peaks dropped on the way"

    def __init__(self, peaks=(), dropped=0):
        super().__init__(peaks)
        self.dropped = dropped


def _crossing(omega, values, level, start, step):
    """
    Walk from `start` in direction `step` until `values` drops below
    `level`, return the linearly interpolated crossing (or None)
    """
    pos = start
    while 0 <= pos + step < len(values):
        nxt = pos + step
        if values[nxt] < level:
            v0, v1 = values[pos], values[nxt]
            frac = (v0 - level) / (v0 - v1)
            return omega[pos] + frac * (omega[nxt] - omega[pos])
        pos = nxt
    return None


def find_peaks(spectrum, floor_fraction=0.01, values=None, transmission=None):
    """
    Local maxima of |t|² above `floor_fraction` times the global
    maximum, with their FWHM from linearly interpolated half-maximum
    crossings. Peaks whose crossings fall outside the grid are
    dropped and counted in `PeakList.dropped`.

    Heights are capped at 1 for transmission data only: a
    `TransmissionSpectrum`, or `values` with `transmission=True`.
    """
    if transmission is None:
        transmission = isinstance(spectrum, TransmissionSpectrum)
    if isinstance(spectrum, TransmissionSpectrum):
        omega, values = spectrum.omega, spectrum.T
    else:
        omega = asarray(spectrum, dtype=float)
        values = asarray(values, dtype=float)
    if len(values) < 3:
        return PeakList()
    top = values.max()
    if not top > 0:
        return PeakList()

    # Strict rise on the left, non-strict fall on the right (plateaus
    # count once)
    inner = values[1:-1]
    is_max = (inner > values[:-2]) & (inner >= values[2:])
    candidates = flatnonzero(is_max) + 1
    peaks = PeakList()
    for pos in candidates:
        t_max = values[pos]
        if t_max < floor_fraction * top:
            continue
        half = t_max / 2
        lo = _crossing(omega, values, half, pos, -1)
        hi = _crossing(omega, values, half, pos, 1)
        if lo is None or hi is None:
            peaks.dropped += 1
            continue
        fwhm = hi - lo
        fwhm_nm = 1000 * (omega_to_wavelength(lo) - omega_to_wavelength(hi))
        peaks.append(
            Peak(
                omega_c=float(omega[pos]),
                fwhm_omega=float(fwhm),
                fwhm_nm=float(fwhm_nm),
                t_max=float(min(t_max, 1.0) if transmission else t_max),
                omega_lo=float(lo),
                omega_hi=float(hi),
            )
        )
    return peaks


def _evaluate(stack, omega, sin_theta):
    kz, phase = _wavevectors(stack, omega, sin_theta)
    m00, m01, m10, m11 = _chain(kz, phase)
    return (m00 * m11 - m01 * m10) / m11


def _refine(stack, windows, sin_theta):
    """
    Zoom on every `(lo, hi)` window simultaneously (one vectorized
    evaluation per round) and return the refined peaks.
    """
    windows = [tuple(w) for w in windows]
    found = {}
    dropped = 0
    for _ in range(settings.peak_refine_max_iter):
        if not windows:
            break
        grids = [linspace(lo, hi, REFINE_POINTS) for lo, hi in windows]
        omega = concatenate(grids)
        t = _evaluate(stack, omega, sin_theta)
        values = abs(t) ** 2
        next_windows = []
        for pos, (grid, (lo, hi)) in enumerate(zip(grids, windows)):
            vals = values[pos * REFINE_POINTS : (pos + 1) * REFINE_POINTS]
            best = int(argmax(vals))
            step = grid[1] - grid[0]
            local = find_peaks(grid, floor_fraction=0, values=vals, transmission=True)
            peak = min(local, key=lambda p: abs(p.omega_c - grid[best]), default=None)
            if peak is None:
                if local.dropped:
                    # Maximum inside but half-max crossings outside: widen
                    width = hi - lo
                    next_windows.append(
                        (max(grid[best] - width, grid[best] / 2), grid[best] + width)
                    )
                # Otherwise monotonic window, nothing to refine
                continue
            if peak.fwhm_omega >= 15 * step:
                found[round(peak.omega_c, 12)] = peak
                continue
            half = REFINE_HALF_WIDTH * peak.fwhm_omega
            next_windows.append((peak.omega_c - half, peak.omega_c + half))
        windows = next_windows
    dropped += len(windows)
    return list(found.values()), dropped


def scan_peaks(stack, band, theta_ext=0.0, floor_fraction=0.01, n_elem=None):
    """
    Peaks of `stack` in `band = (omega_min, omega_max)` (rad/fs) at
    external angle `theta_ext`, refined adaptively.
    """
    omega_min, omega_max = band
    if not 0 < omega_min < omega_max:
        raise ValidationError("Band must satisfy 0 < omega_min < omega_max")
    n_elem = n_elem or stack.provenance.get("n_elem") or max(len(stack), 1)
    # Mode spacing is about 2/n_elem in fractional bandwidth
    step = (2 / n_elem) / 16 * (omega_min + omega_max) / 2
    count = max(int(math.ceil((omega_max - omega_min) / step)) + 1, 64)
    coarse = linspace(omega_min, omega_max, count)
    sin_theta = float(sin(theta_ext))
    t = _evaluate(stack, coarse, sin_theta)
    values = abs(t) ** 2
    phase_jump = abs(angle(t[1:] / t[:-1]))
    inner = values[1:-1]
    is_max = flatnonzero((inner > values[:-2]) & (inner >= values[2:])) + 1
    jumps = flatnonzero(phase_jump > pi / 4)

    spacing = coarse[1] - coarse[0]
    windows = [(coarse[p] - spacing, coarse[p] + spacing) for p in is_max]
    windows += [(coarse[p], coarse[p + 1]) for p in jumps]
    windows = [(max(lo, omega_min), min(hi, omega_max)) for lo, hi in windows]
    peaks, dropped = _refine(stack, windows, sin_theta)

    # Deduplicate: keep one peak per resonance
    peaks.sort(key=lambda p: p.omega_c)
    unique = []
    for peak in peaks:
        if unique and abs(peak.omega_c - unique[-1].omega_c) < max(
            peak.fwhm_omega, unique[-1].fwhm_omega
        ) / 2:
            if peak.t_max > unique[-1].t_max:
                unique[-1] = peak
            continue
        unique.append(peak)

    top = max((p.t_max for p in unique), default=0)
    result = PeakList(
        [p for p in unique if p.t_max >= floor_fraction * top], dropped=dropped
    )
    logger.debug(
        "Scan %s: %s candidates, %s peaks, %s dropped",
        stack, len(windows), len(result), dropped,
    )
    return result


@dataclass(frozen=True)
class Localization:
    xi: float  # μm, math.inf for transparent ensembles
    stderr: float
    count: int
    excluded: int
    mean_log_t: float

    def dumps(self):
        return {
            "xi_um": None if math.isinf(self.xi) else self.xi,
            "stderr_um": None if math.isinf(self.stderr) else self.stderr,
            "count": self.count,
            "excluded": self.excluded,
            "mean_log_t": self.mean_log_t,
        }


def _xi(lengths, log_t):
    mean_log = log_t.mean()
    if mean_log >= 0:
        return math.inf
    return float(-2 * lengths.mean() / mean_log)


def localization_estimate(lengths, log_t, seed=0):
    """
    ξ = −2⟨L_opt⟩/⟨ln T⟩ from per-structure samples, with a bootstrap
    standard error over structures.
    """
    lengths = asarray(lengths, dtype=float)
    log_t = asarray(log_t, dtype=float)
    keep = isfinite(log_t)
    excluded = int((~keep).sum())
    if excluded:
        logger.warning("%s structures with T = 0 excluded", excluded)
    lengths, log_t = lengths[keep], log_t[keep]
    if not len(log_t):
        return Localization(math.inf, math.inf, 0, excluded, 0.0)
    xi = _xi(lengths, log_t)
    if math.isinf(xi):
        return Localization(xi, math.inf, len(log_t), excluded, float(log_t.mean()))
    rng = default_rng(seed)
    samples = []
    for _ in range(settings.bootstrap_samples):
        pick = rng.integers(0, len(log_t), len(log_t))
        samples.append(_xi(lengths[pick], log_t[pick]))
    samples = asarray([s for s in samples if not math.isinf(s)])
    stderr = float(samples.std(ddof=1)) if len(samples) > 1 else math.inf
    return Localization(xi, stderr, len(log_t), excluded, float(log_t.mean()))


def localization_length(stacks, omega=None, theta_ext=0.0, seed=0):
    """
    Localization optical length (μm, projected on the normal) of an
    ensemble of stacks at `omega` (defaults to each stack's design
    wavelength) and external angle `theta_ext`.
    """
    stacks = list(stacks)
    if len(stacks) < 100:
        raise ValidationError("Localization length needs an ensemble of >= 100 stacks")
    sin_theta = float(sin(theta_ext))
    lengths, log_t = [], []
    for stack in stacks:
        w = omega if omega is not None else wavelength_to_omega(stack.lambda0)
        t = _evaluate(stack, asarray(w, dtype=float), sin_theta)
        with_t = abs(t) ** 2
        lengths.append(stack.optical_length(w, sin_theta))
        log_t.append(log(with_t) if with_t > 0 else -math.inf)
    return localization_estimate(lengths, log_t, seed=seed)
