"""
Two-photon spectral amplitude of a layered structure.

The amplitude is the first-order perturbation result for a pump wave
impinging at normal incidence from the input side, the signal photon
leaving the structure forward at external angle `theta_s` and its idler
twin at the angle fixed by transverse matching:

    sin θ_i = −(ω_s/ω_i)·sin θ_s

For every nonlinear layer the overlap of the pump internal amplitudes
with the (conjugated) signal and idler detection modes is summed over
the 8 forward/backward combinations, each one weighted by

    J(Δk) = ∫₀ᴸ exp(iΔk·z) dz = exp(iΔkL/2)·L·sinc(ΔkL/2)

``` python-console
>>> from parastack import *
>>> stack = microcavity(6)
>>> pump = PumpConfig(omega_p0=2 * wavelength_to_omega(1.0))
>>> tpa = two_photon_amplitude(stack, pump, EmissionGeometry())
>>> round(tpa.normalized("paper").norm() * 4 / pump.omega_p0 ** 2, 9)
1.0
```

Two normalizations are supported: "physical" keeps the absolute
values of the perturbation result (pump amplitude in V/μm, chi2 in
pm/V, lengths in μm) and "paper" rescales so that
4·ΣΣ|φ|²·Δω_s·Δω_i/ω_p0² = 1.
"""
import io
import json
import math
import struct
from dataclasses import dataclass, field, replace

from numpy import (
    abs as np_abs,
    arcsin,
    arctan2,
    asarray,
    broadcast_to,
    conj,
    exp,
    flatnonzero,
    frombuffer,
    hypot,
    isfinite,
    linspace,
    meshgrid,
    outer,
    sinc,
    sqrt,
    vstack,
    where,
    zeros,
)
from scipy.interpolate import RegularGridInterpolator

from .material import refractive_index
from .peaks import find_peaks, scan_peaks
from .transfer import detection_mode, solve_fields, transmittance
from .utils import (
    C_UM_FS,
    EPS0_SI,
    C_SI,
    HBAR_EV_FS,
    DomainError,
    NumericalError,
    Pool,
    ValidationError,
    chunky,
    fmt_float,
    hexdigest,
    logger,
    settings,
    trapezoid_weights,
)

try:
    from pandas import DataFrame
except ImportError:
    DataFrame = None

__all__ = [
    "PumpConfig",
    "EmissionGeometry",
    "FrequencyGrid",
    "TwoPhotonAmplitude",
    "Spectrum",
    "CorrelationArea",
    "two_photon_amplitude",
    "reference_amplitude",
    "auto_grid",
    "pair_number",
    "pair_rate_estimate",
    "signal_spectrum",
    "idler_spectrum",
    "relative_spectrum",
    "correlation_area",
]

MIN_POINTS = 64
NORMALIZATIONS = ("physical", "paper")
REFERENCE_FLOOR = 1e-30
HEADER = struct.Struct("<QQdddd")
# pm/V to μm/V
CHI2_SCALE = 1e-6


@dataclass(frozen=True)
class PumpConfig:
    """
    Gaussian pump pulse: central frequency `omega_p0` (rad/fs),
    intensity FWHM `duration_fwhm` (fs), peak field `amplitude` (V/μm)
    and 1/e² intensity diameter `beam_diameter` (μm, `math.inf` for a
    plane wave). The pump always impinges at normal incidence.
    """

    omega_p0: float
    duration_fwhm: float = 250.0
    amplitude: float = 1.0
    beam_diameter: float = math.inf

    def __post_init__(self):
        if not self.omega_p0 > 0:
            raise ValidationError("Pump omega_p0 must be > 0")
        if not self.duration_fwhm > 0:
            raise ValidationError("Pump duration_fwhm must be > 0")
        if not self.beam_diameter > 0:
            raise DomainError("Pump beam diameter must be > 0")

    @property
    def plane_wave(self):
        return math.isinf(self.beam_diameter)

    @property
    def spectral_sigma(self):
        "Standard deviation (rad/fs) of the pump spectral intensity"
        return math.sqrt(2 * math.log(2)) / self.duration_fwhm

    def envelope(self, omega):
        tau = self.duration_fwhm
        return exp(-((omega - self.omega_p0) ** 2) * tau ** 2 / (8 * math.log(2)))

    def dumps(self):
        return {
            "omega_p0": self.omega_p0,
            "duration_fwhm_fs": self.duration_fwhm,
            "amplitude_v_per_um": self.amplitude,
            "beam_diameter_um": None if self.plane_wave else self.beam_diameter,
        }


@dataclass(frozen=True)
class EmissionGeometry:
    theta_s: float = 0.0  # rad
    psi_s: float = 0.0
    transverse_area: float = math.pi * 500 ** 2  # μm²
    polarization: str = "TE"

    def __post_init__(self):
        if self.polarization != "TE":
            raise ValidationError("Only TE polarized fields are supported")
        if not abs(self.theta_s) < math.pi / 2:
            raise DomainError("Signal angle must be within (-90, 90) deg")
        if not self.transverse_area > 0:
            raise ValidationError("Transverse area must be > 0")

    @property
    def sin_s(self):
        return math.sin(self.theta_s)

    def idler_sin(self, omega_s, omega_i):
        "Transverse matching rule for the idler external angle"
        return -(omega_s / omega_i) * self.sin_s

    def dumps(self):
        return {
            "theta_s_deg": math.degrees(self.theta_s),
            "psi_s_deg": math.degrees(self.psi_s),
            "transverse_area_um2": self.transverse_area,
            "polarization": self.polarization,
        }


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    omega_s: object
    omega_i: object

    def __post_init__(self):
        for name in ("omega_s", "omega_i"):
            axis = asarray(getattr(self, name), dtype=float)
            if axis.ndim != 1 or len(axis) < MIN_POINTS:
                raise ValidationError(f"{name} grid needs at least {MIN_POINTS} points")
            step = axis[1:] - axis[:-1]
            if not (step > 0).all():
                raise ValidationError(f"{name} grid must be strictly increasing")
            if abs(step.max() - step.min()) > 1e-9 * abs(axis).max():
                raise ValidationError(f"{name} grid must be uniform")
            object.__setattr__(self, name, axis)

    @classmethod
    def uniform(cls, center_s, half_width_s, n_s=512, center_i=None, half_width_i=None, n_i=None):
        center_i = center_s if center_i is None else center_i
        half_width_i = half_width_s if half_width_i is None else half_width_i
        n_i = n_s if n_i is None else n_i
        return cls(
            linspace(center_s - half_width_s, center_s + half_width_s, n_s),
            linspace(center_i - half_width_i, center_i + half_width_i, n_i),
        )

    @property
    def shape(self):
        return (len(self.omega_s), len(self.omega_i))

    @property
    def step_s(self):
        return float(self.omega_s[1] - self.omega_s[0])

    @property
    def step_i(self):
        return float(self.omega_i[1] - self.omega_i[0])

    @property
    def center_s(self):
        return float(self.omega_s[0] + self.omega_s[-1]) / 2

    @property
    def center_i(self):
        return float(self.omega_i[0] + self.omega_i[-1]) / 2

    @property
    def weights_s(self):
        return trapezoid_weights(self.omega_s)

    @property
    def weights_i(self):
        return trapezoid_weights(self.omega_i)

    @property
    def weights(self):
        "2D quadrature weights"
        return outer(self.weights_s, self.weights_i)

    @property
    def square(self):
        "True when signal and idler share the same axis"
        return self.shape[0] == self.shape[1] and (
            np_abs(self.omega_s - self.omega_i).max() <= 1e-12 * self.omega_s.max()
        )

    def swapped(self):
        return FrequencyGrid(self.omega_i, self.omega_s)

    def __eq__(self, other):
        return (
            isinstance(other, FrequencyGrid)
            and self.shape == other.shape
            and (self.omega_s == other.omega_s).all()
            and (self.omega_i == other.omega_i).all()
        )

    def __repr__(self):
        return (
            f"<FrequencyGrid {self.shape[0]}x{self.shape[1]} "
            f"s={self.center_s:.6f} i={self.center_i:.6f}>"
        )


@dataclass(eq=False)
class TwoPhotonAmplitude:
    grid: FrequencyGrid
    values: object  # complex (N_s, N_i)
    omega_p0: float
    normalization: str = "physical"
    flags: set = field(default_factory=set)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise ValidationError(
                f"Amplitude shape {self.values.shape} does not match grid {self.grid.shape}"
            )
        if not isfinite(self.values).all():
            raise NumericalError("Two-photon amplitude contains non-finite values")
        if self.normalization not in NORMALIZATIONS:
            raise ValidationError(f'Unknown normalization "{self.normalization}"')

    @property
    def intensity(self):
        return np_abs(self.values) ** 2

    def norm(self):
        "ΣΣ |φ|² w_s w_i"
        return float((self.intensity * self.grid.weights).sum())

    def is_zero(self):
        return not np_abs(self.values).max() > 0

    def normalized(self, normalization="paper"):
        if normalization == self.normalization:
            return self
        if normalization != "paper":
            # Absolute scale can not be recovered
            raise ValidationError(
                f'Can not convert "{self.normalization}" amplitude to "{normalization}"'
            )
        if self.is_zero():
            logger.warning("Zero two-photon amplitude, normalization skipped")
            return replace(self, normalization="paper", flags=self.flags | {"zero"})
        scale = math.sqrt(self.omega_p0 ** 2 / (4 * self.norm()))
        return replace(self, values=self.values * scale, normalization="paper")

    def check_normalization(self, tol=1e-8):
        if self.normalization != "paper" or self.is_zero():
            return True
        return abs(4 * self.norm() / self.omega_p0 ** 2 - 1) <= tol

    def swapped(self):
        "Exchange signal and idler"
        return replace(self, grid=self.grid.swapped(), values=self.values.T.copy())

    def with_values(self, values, **kw):
        return replace(self, values=values, **kw)

    def dumps(self):
        "Binary export: little-endian header then row-major complex128"
        g = self.grid
        head = HEADER.pack(
            g.shape[0], g.shape[1],
            g.omega_s[0], g.omega_s[-1], g.omega_i[0], g.omega_i[-1],
        )
        return head + self.values.astype("<c16").tobytes()

    def sidecar(self):
        doc = {
            "normalization": self.normalization,
            "omega_p0": self.omega_p0,
            "flags": sorted(self.flags),
            "meta": self.meta,
            "digest": hexdigest(self.dumps()),
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, payload, sidecar):
        if len(payload) < HEADER.size:
            raise ValidationError("Truncated two-photon amplitude file")
        n_s, n_i, s_lo, s_hi, i_lo, i_hi = HEADER.unpack_from(payload)
        body = payload[HEADER.size :]
        if len(body) != n_s * n_i * 16:
            raise ValidationError("Two-photon amplitude file size does not match its header")
        if isinstance(sidecar, bytes):
            sidecar = sidecar.decode()
        doc = json.loads(sidecar)
        if doc.get("digest") and doc["digest"] != hexdigest(payload):
            raise ValidationError("Two-photon amplitude digest mismatch")
        grid = FrequencyGrid(linspace(s_lo, s_hi, n_s), linspace(i_lo, i_hi, n_i))
        values = frombuffer(body, dtype="<c16").reshape(n_s, n_i)
        return cls(
            grid,
            values.copy(),
            omega_p0=doc["omega_p0"],
            normalization=doc["normalization"],
            flags=set(doc.get("flags", [])),
            meta=doc.get("meta", {}),
        )

    def to_csv(self):
        buff = io.StringIO()
        buff.write("omega_s,omega_i,abs2\n")
        intensity = self.intensity
        for a, ws in enumerate(self.grid.omega_s):
            for b, wi in enumerate(self.grid.omega_i):
                buff.write(f"{fmt_float(ws)},{fmt_float(wi)},{fmt_float(intensity[a, b])}\n")
        return buff.getvalue()

    def df(self):
        if DataFrame is None:
            raise ModuleNotFoundError("No module named 'pandas'")
        return DataFrame(
            self.intensity, index=self.grid.omega_s, columns=self.grid.omega_i
        )

    def __repr__(self):
        return f"<TwoPhotonAmplitude {self.grid!r} {self.normalization}>"


def coupling_constant(pump, omega_s, omega_i):
    return pump.amplitude * sqrt(omega_s * omega_i) / (2 * C_UM_FS)


def _overlap(dk, length):
    "∫₀ᴸ exp(iΔk·z) dz, exact at Δk = 0"
    x = dk * length / 2
    return exp(1j * x) * length * sinc(x / math.pi)


def _check_band(stack, lo, hi):
    seen = set()
    for mat in stack.materials:
        if mat.dispersive and mat.id not in seen:
            seen.add(mat.id)
            refractive_index(mat, asarray([lo, hi]))


def _amplitude_rows(ctx, rows):
    stack, pump, geometry, grid, signal, idler_1d = ctx
    ws = grid.omega_s[rows]
    wi = grid.omega_i
    shape = (len(rows), len(wi))
    wp = ws[:, None] + wi[None, :]
    pump_map = solve_fields(stack, wp, sin_theta=0.0)

    mask = None
    if idler_1d is not None:
        i_fw, i_bw, i_kz = (
            idler_1d.forward[:, None, :],
            idler_1d.backward[:, None, :],
            idler_1d.kz[:, None, :],
        )
    else:
        sin_i = geometry.idler_sin(ws[:, None], wi[None, :])
        mask = np_abs(sin_i) < 1
        sin_i = where(mask, sin_i, 0.0)
        idler = detection_mode(stack, broadcast_to(wi, shape), sin_theta=sin_i)
        i_fw, i_bw, i_kz = idler.forward, idler.backward, idler.kz

    s_fw = signal.forward[:, rows][:, :, None]
    s_bw = signal.backward[:, rows][:, :, None]
    s_kz = signal.kz[:, rows][:, :, None]

    thk = stack.thicknesses
    chi2 = stack.chi2
    acc = zeros(shape, dtype=complex)
    for layer in flatnonzero(chi2 > 0):
        j = layer + 1
        pumps = ((1, pump_map.forward[j]), (-1, pump_map.backward[j]))
        signals = ((1, conj(s_fw[j])), (-1, conj(s_bw[j])))
        idlers = ((1, conj(i_fw[j])), (-1, conj(i_bw[j])))
        kp, ks, ki = pump_map.kz[j], s_kz[j], i_kz[j]
        total = 0
        for sp, ap in pumps:
            for ss, as_ in signals:
                for si, ai in idlers:
                    dk = sp * kp - ss * ks - si * ki
                    total = total + ap * as_ * ai * _overlap(dk, thk[layer])
        acc += chi2[layer] * CHI2_SCALE * total

    acc *= pump.envelope(wp) * coupling_constant(pump, ws[:, None], wi[None, :])
    if mask is not None:
        acc = where(mask, acc, 0)
    return acc


def _half_max_samples(values):
    top = values.max()
    if not top > 0:
        return 0
    return int((values >= top / 2).sum())


def two_photon_amplitude(stack, pump, geometry=None, grid=None, normalization="physical"):
    """
    Two-photon spectral amplitude of `stack` on `grid` (built by
    `auto_grid` when omitted, and refined once if it turns out too
    coarse).
    """
    geometry = geometry or EmissionGeometry()
    if normalization not in NORMALIZATIONS:
        raise ValidationError(f'Unknown normalization "{normalization}"')
    if grid is None:
        grid = auto_grid(stack, pump, geometry)
        tpa = two_photon_amplitude(stack, pump, geometry, grid, normalization)
        if "coarse" in tpa.flags:
            logger.info("Coarse grid flag, refining the window")
            finer = auto_grid(stack, pump, geometry, span_fwhm=4, n_points=2 * grid.shape[0])
            tpa = two_photon_amplitude(stack, pump, geometry, finer, normalization)
        return tpa

    if abs(grid.center_s + grid.center_i - pump.omega_p0) > 1e-6 * pump.omega_p0:
        raise ValidationError(
            "Pump central frequency must equal the sum of the grid central frequencies"
        )
    for axis in (grid.omega_s, grid.omega_i):
        _check_band(stack, axis[0], axis[-1])
    _check_band(stack, grid.omega_s[0] + grid.omega_i[0], grid.omega_s[-1] + grid.omega_i[-1])

    signal = detection_mode(stack, grid.omega_s, sin_theta=geometry.sin_s)
    idler_1d = None
    if geometry.sin_s == 0:
        idler_1d = detection_mode(stack, grid.omega_i, sin_theta=0.0)

    n_s, n_i = grid.shape
    per_row = n_i * (len(stack) + 2)
    rows_per_task = max(1, settings.chunk_size // per_row)
    ctx = (stack, pump, geometry, grid, signal, idler_1d)
    with Pool() as pool:
        for rows in chunky(range(n_s), rows_per_task):
            pool.submit(_amplitude_rows, ctx, rows)
    values = vstack(pool.results) if pool.results else zeros(grid.shape, dtype=complex)

    flags = set()
    marginal = (np_abs(values) ** 2 * grid.weights_i[None, :]).sum(axis=1)
    if 0 < _half_max_samples(marginal) < 4:
        logger.warning("Grid too coarse: signal spectrum FWHM spans less than 4 samples")
        flags.add("coarse")
    meta = {
        "stack_digest": stack.digest(),
        "pump": pump.dumps(),
        "geometry": geometry.dumps(),
    }
    tpa = TwoPhotonAmplitude(
        grid, values, omega_p0=pump.omega_p0, flags=flags, meta=meta
    )
    logger.debug("Two-photon amplitude computed on %s", grid)
    if normalization == "paper":
        tpa = tpa.normalized("paper")
    return tpa


def reference_amplitude(stack, pump, geometry=None, grid=None):
    """
    Amplitude of a homogeneous, perfectly phase-matched slab holding
    the same nonlinear material as `stack`: unit field amplitudes, no
    boundary reflections and Δk = 0 so every layer contributes
    chi2·thickness.
    """
    geometry = geometry or EmissionGeometry()
    grid = grid or auto_grid(stack, pump, geometry)
    strength = float((stack.chi2 * stack.thicknesses).sum()) * CHI2_SCALE
    ws = grid.omega_s[:, None]
    wi = grid.omega_i[None, :]
    values = pump.envelope(ws + wi) * coupling_constant(pump, ws, wi) * strength
    if geometry.sin_s:
        values = where(np_abs(geometry.idler_sin(ws, wi)) < 1, values, 0)
    meta = {"reference": True, "nonlinear_thickness_um": stack.nonlinear_thickness}
    return TwoPhotonAmplitude(
        grid, values + 0j, omega_p0=pump.omega_p0, meta=meta
    )


def _locate_peak(stack, omega, theta, rel_band=0.1):
    band = (omega * (1 - rel_band), omega * (1 + rel_band))
    peaks = scan_peaks(stack, band, theta_ext=theta, floor_fraction=0.5)
    if not peaks:
        raise NumericalError(
            f"No transmission peak around {omega:.6f} rad/fs at {math.degrees(theta):.3f} deg"
        )
    return min(peaks, key=lambda p: abs(p.omega_c - omega))


def auto_grid(stack, pump, geometry=None, n_points=512, span_fwhm=8, omega_s=None, square=None):
    """
    Window of `n_points` per axis around the signal transmission peak
    closest to `omega_s` (default ω_p0/2): the signal axis spans the
    peak center ± `span_fwhm` FWHM, the idler axis is centered on ω_p0
    minus the signal center with the same width.

    With `square` (the default at normal emission) both axes are
    centered on ω_p0/2 and widened to keep the peak window, so that
    signal and idler share the same axis.
    """
    geometry = geometry or EmissionGeometry()
    if square is None:
        square = geometry.sin_s == 0
    target = omega_s or pump.omega_p0 / 2
    peak = _locate_peak(stack, target, geometry.theta_s)
    half = span_fwhm * peak.fwhm_omega
    center_s = peak.omega_c
    if square:
        center_s = pump.omega_p0 / 2
        half += abs(peak.omega_c - center_s)
    center_i = pump.omega_p0 - center_s
    logger.info(
        "Signal peak at %.9f rad/fs, FWHM %.3e rad/fs", peak.omega_c, peak.fwhm_omega
    )
    return FrequencyGrid.uniform(center_s, half, n_points, center_i=center_i)


def pair_number(tpa):
    "Number of generated pairs, ΣΣ |φ|² Δω_s Δω_i"
    if tpa.normalization != "physical":
        raise ValidationError("Pair number needs a physically normalized amplitude")
    return tpa.norm()


def pair_rate_estimate(tpa, pump, average_power=0.1, repetition_rate=8e7):
    """
    Order-of-magnitude pair rate (pairs/s) for a pulsed pump of
    `average_power` (W) at `repetition_rate` (Hz). The pair number of
    `tpa` scales with the square of the pump peak field, which is
    derived from the pulse energy spread over the transverse area.
    """
    area = tpa.meta.get("geometry", {}).get("transverse_area_um2", math.pi * 500 ** 2)
    pulse_energy = average_power / repetition_rate
    duration = pump.duration_fwhm * 1e-15 * math.sqrt(math.pi / (4 * math.log(2)))
    field2 = 2 * pulse_energy / (EPS0_SI * C_SI * area * 1e-12 * duration)
    # V/m to V/μm
    field2 *= 1e-12
    scale = field2 / pump.amplitude ** 2
    return pair_number(tpa) * scale * repetition_rate


@dataclass
class Spectrum:
    omega: object
    values: object
    kind: str = "signal"
    units: str = "relative"
    flags: set = field(default_factory=set)

    def fwhm(self):
        "FWHM (rad/fs) of the highest peak"
        peaks = find_peaks(self.omega, floor_fraction=0.0, values=self.values)
        if not peaks:
            raise NumericalError("No resolved peak in spectrum")
        return max(peaks, key=lambda p: p.t_max).fwhm_omega

    def peak_omega(self):
        return float(self.omega[self.values.argmax()])

    def to_csv(self):
        buff = io.StringIO()
        buff.write("omega_rad_per_fs,value\n")
        for w, v in zip(self.omega, self.values):
            buff.write(f"{fmt_float(w)},{fmt_float(v)}\n")
        return buff.getvalue()


def _spectrum(tpa, axis, units):
    if units not in ("relative", "eV"):
        raise ValidationError('Spectrum units are "relative" or "eV"')
    hbar = HBAR_EV_FS if units == "eV" else 1.0
    grid = tpa.grid
    if axis == "signal":
        omega = grid.omega_s
        marginal = (tpa.intensity * grid.weights_i[None, :]).sum(axis=1)
    else:
        omega = grid.omega_i
        marginal = (tpa.intensity * grid.weights_s[:, None]).sum(axis=0)
    return Spectrum(omega, hbar * omega * marginal, kind=axis, units=units)


def signal_spectrum(tpa, units="relative"):
    "S_s(ω_s) = ħω_s·Σ |φ|² Δω_i"
    return _spectrum(tpa, "signal", units)


def idler_spectrum(tpa, units="relative"):
    return _spectrum(tpa, "idler", units)


def relative_spectrum(tpa, reference):
    """
    Pointwise ratio of the signal spectra of `tpa` and of its
    `reference` (see `reference_amplitude`). Points where the
    reference is below 1e-30 are set to zero and flagged.
    """
    if tpa.grid != reference.grid:
        raise ValidationError("Amplitude and reference must share the same grid")
    actual = signal_spectrum(tpa).values
    ref = signal_spectrum(reference).values
    low = ref < REFERENCE_FLOOR
    flags = set()
    if low.any():
        logger.warning("%s reference samples under the floor", int(low.sum()))
        flags.add("reference_floor")
    ratio = where(low, 0.0, actual / where(low, 1.0, ref))
    return Spectrum(tpa.grid.omega_s, ratio, kind="relative", units="ratio", flags=flags)


@dataclass(frozen=True)
class CorrelationArea:
    sigma_theta: float  # rad, radial
    sigma_psi: float  # rad, azimuthal
    beam_diameter: float
    omega_s: float
    omega_i: float

    def dumps(self):
        return {
            "sigma_theta_rad": self.sigma_theta,
            "sigma_psi_rad": self.sigma_psi,
            "beam_diameter_um": None if math.isinf(self.beam_diameter) else self.beam_diameter,
            "omega_s": self.omega_s,
            "omega_i": self.omega_i,
        }


def _weighted_std(values, weights):
    total = weights.sum()
    mean = (values * weights).sum() / total
    return float(sqrt((((values - mean) ** 2) * weights).sum() / total))


def correlation_area(stack, pump, geometry, omega_s=None, n_freq=32, n_q=33):
    """
    Spreads of the idler emission direction once the signal direction
    is fixed. Idler directions are weighted by the pump transverse
    angular spectrum (a Gaussian beam of diameter `pump.beam_diameter`,
    the transverse area of `geometry` bounding the plane-wave limit)
    and by the structure transmittance at the signal and idler
    frequencies and angles.
    """
    if geometry.sin_s == 0:
        raise ValidationError("Correlation area needs an oblique signal direction")
    w_beam = pump.beam_diameter / 2
    w_area = math.sqrt(geometry.transverse_area / math.pi)
    w_eff = 1 / math.sqrt(1 / w_beam ** 2 + 1 / w_area ** 2)

    sig_peak = _locate_peak(stack, omega_s or pump.omega_p0 / 2, geometry.theta_s)
    ws0 = sig_peak.omega_c
    wi_guess = pump.omega_p0 - ws0
    sin_i0 = abs(geometry.idler_sin(ws0, wi_guess))
    if sin_i0 >= 1:
        raise DomainError("Idler twin is evanescent for this signal direction")
    idl_peak = _locate_peak(stack, wi_guess, math.asin(sin_i0))
    wi0 = idl_peak.omega_c

    ws = linspace(ws0 - 3 * sig_peak.fwhm_omega, ws0 + 3 * sig_peak.fwhm_omega, n_freq)
    wi = linspace(wi0 - 4 * idl_peak.fwhm_omega, wi0 + 4 * idl_peak.fwhm_omega, 2 * n_freq)
    q_max = 4 / w_eff
    q = linspace(-q_max, q_max, n_q)
    qx, qy = meshgrid(q, q, indexing="ij")
    gauss = exp(-(qx ** 2 + qy ** 2) * w_eff ** 2 / 2)

    # Idler transmittance table over (ω_i, sin θ_i)
    kt_lo = ws.min() * abs(geometry.sin_s) / C_UM_FS - 1.5 * q_max
    kt_hi = ws.max() * abs(geometry.sin_s) / C_UM_FS + 1.5 * q_max
    sin_lo = max(0.0, kt_lo * C_UM_FS / wi.max())
    sin_hi = min(0.999999, kt_hi * C_UM_FS / wi.min())
    sin_axis = linspace(sin_lo, sin_hi, 4 * n_q)
    wgrid, sgrid = meshgrid(wi, sin_axis, indexing="ij")
    table = transmittance(stack, wgrid, sgrid)
    t_idler = RegularGridInterpolator(
        (wi, sin_axis), table, bounds_error=False, fill_value=0.0
    )
    t_signal = transmittance(stack, ws, geometry.sin_s)

    theta_ref = math.asin(sin_i0 * wi_guess / wi0)
    d_theta, d_psi, weight = [], [], []
    for pos, w_s in enumerate(ws):
        ks_t = w_s * abs(geometry.sin_s) / C_UM_FS
        # Idler transverse wavevector is q - k_s⊥ (k_s⊥ along x)
        kt = hypot(qx - ks_t, qy)
        psi = arctan2(qy, ks_t - qx)
        for w_i in wi:
            sin_i = kt * C_UM_FS / w_i
            ok = sin_i < sin_hi
            theta = arcsin(where(ok, sin_i, 0.0))
            env = pump.envelope(w_s + w_i) ** 2
            t_i = t_idler((broadcast_to(w_i, sin_i.shape), where(ok, sin_i, sin_hi)))
            wgt = t_signal[pos] * env * gauss * where(ok, t_i, 0.0)
            d_theta.append((theta - theta_ref).ravel())
            d_psi.append(psi.ravel())
            weight.append(wgt.ravel())
    d_theta = asarray(d_theta).ravel()
    d_psi = asarray(d_psi).ravel()
    weight = asarray(weight).ravel()
    if not weight.sum() > 0:
        raise NumericalError("Correlation area weights vanish")
    return CorrelationArea(
        sigma_theta=_weighted_std(d_theta, weight),
        sigma_psi=_weighted_std(d_psi, weight),
        beam_diameter=pump.beam_diameter,
        omega_s=ws0,
        omega_i=wi0,
    )
