"""
Oblique-incidence transfer matrices for TE waves.

In region `j` (0 is the input vacuum, 1..N the layers, N+1 the output
vacuum) the field reads

    E(z) = A⁺_j exp(i k_j (z − z_j)) + A⁻_j exp(−i k_j (z − z_j))

with `z_j` the left boundary of region `j` (the right surface of the
stack for the output vacuum) and k_j = (ω/c)·√(n_j² − sin²θ) where θ
is the external angle. Continuity of E and dE/dz at each boundary
gives the step matrices, and the stack matrix `M` maps `(A⁺_0, A⁻_0)`
to `(A⁺_{N+1}, A⁻_{N+1})`. Then t = det(M)/M₁₁ and r = −M₁₀/M₁₁ for
light coming from the left.

Every function is vectorized: `omega` and `sin_theta` may be arrays of
any (broadcastable) shape.

Internal amplitudes are propagated from the transmitted side toward
the incident side, the direction in which localized solutions grow,
so they stay accurate even when |t|² is tiny.
"""
import csv
import io
from dataclasses import dataclass, field

from numpy import (
    abs as np_abs,
    asarray,
    broadcast_arrays,
    empty,
    exp,
    imag,
    ones,
    real,
    sin,
    sqrt,
    zeros,
)

from .utils import C_UM_FS, DomainError, ValidationError, fmt_float

try:
    from pandas import DataFrame
except ImportError:
    DataFrame = None

__all__ = [
    "FieldMap",
    "TransmissionSpectrum",
    "solve_fields",
    "detection_mode",
    "transfer_matrix",
    "transmission_spectrum",
    "transmittance",
]


def _wavevectors(stack, omega, sin_theta, indices=None):
    """
    Return `(kz, phase)`: the z-component wavevector of every region
    (shape `(N + 2,) + shape`) and the phase accumulated across every
    region (zero for both vacuum regions).
    """
    omega, sin_theta = broadcast_arrays(
        asarray(omega, dtype=float), asarray(sin_theta, dtype=float)
    )
    sin2 = sin_theta ** 2
    if (sin2 >= 1).any():
        raise DomainError("Evanescent ambient wave: |sin θ_ext| must be < 1")
    if indices is None:
        indices = stack.indices(omega)
    else:
        indices = asarray(indices, dtype=float)
    shape = omega.shape
    n_layers = len(stack)
    k0 = omega / C_UM_FS
    kz = empty((n_layers + 2,) + shape, dtype=float)
    kz[0] = kz[-1] = k0 * sqrt(1 - sin2)
    if n_layers:
        idx = indices.reshape((n_layers,) + (1,) * len(shape)) if indices.ndim == 1 else indices
        kz[1:-1] = k0 * sqrt(idx ** 2 - sin2)
    phase = zeros(kz.shape, dtype=float)
    if n_layers:
        thk = stack.thicknesses.reshape((n_layers,) + (1,) * len(shape))
        phase[1:-1] = kz[1:-1] * thk
    return kz, phase


def _step(k_from, k_to, phi):
    """
    Step matrix from region `j` (start) to region `j + 1` (start):
    interface matrix times propagation across region `j`
    """
    eta = k_from / k_to
    a = (1 + eta) / 2
    b = (1 - eta) / 2
    ep = exp(1j * phi)
    em = exp(-1j * phi)
    return a * ep, b * em, b * ep, a * em


def _chain(kz, phase):
    m00 = ones(kz.shape[1:], dtype=complex)
    m01 = zeros(kz.shape[1:], dtype=complex)
    m10 = zeros(kz.shape[1:], dtype=complex)
    m11 = ones(kz.shape[1:], dtype=complex)
    for j in range(len(kz) - 1):
        s00, s01, s10, s11 = _step(kz[j], kz[j + 1], phase[j])
        m00, m01, m10, m11 = (
            s00 * m00 + s01 * m10,
            s00 * m01 + s01 * m11,
            s10 * m00 + s11 * m10,
            s10 * m01 + s11 * m11,
        )
    return m00, m01, m10, m11


def transfer_matrix(stack, omega, sin_theta=0.0, indices=None):
    """
    Stack matrix `[[m00, m01], [m10, m11]]` (each entry an array shaped
    like `omega`), mapping input-vacuum amplitudes to output-vacuum
    amplitudes. `indices` overrides the layer indices (frozen
    dispersion).
    """
    kz, phase = _wavevectors(stack, omega, sin_theta, indices)
    m00, m01, m10, m11 = _chain(kz, phase)
    return asarray([[m00, m01], [m10, m11]])


def transmittance(stack, omega, sin_theta=0.0, indices=None):
    "Intensity transmittance |t|² (equal vacuum media on both sides)"
    kz, phase = _wavevectors(stack, omega, sin_theta, indices)
    m00, m01, m10, m11 = _chain(kz, phase)
    return np_abs((m00 * m11 - m01 * m10) / m11) ** 2


@dataclass
class FieldMap:
    """
    Forward (`forward`) and backward (`backward`) amplitudes of every
    region, first and last rows being the vacuum half-spaces, at one
    or many `(omega, theta_ext)` points. Amplitudes are referenced to a
    unit incident wave.
    """

    omega: object
    theta_ext: object
    forward: object
    backward: object
    kz: object
    t: object
    r: object
    direction: str = "left"
    polarization: str = "TE"

    @property
    def layer_forward(self):
        return self.forward[1:-1]

    @property
    def layer_backward(self):
        return self.backward[1:-1]

    @property
    def layer_kz(self):
        return self.kz[1:-1]

    @property
    def T(self):
        return np_abs(self.t) ** 2

    @property
    def R(self):
        return np_abs(self.r) ** 2

    def time_reversed(self):
        """
        Complex-conjugated field: forward and backward waves swap
        roles. Applied to a right-incidence map it yields the mode with
        a unit outgoing wave on the output side.
        """
        return FieldMap(
            omega=self.omega,
            theta_ext=self.theta_ext,
            forward=self.backward.conj(),
            backward=self.forward.conj(),
            kz=self.kz,
            t=self.t.conj(),
            r=self.r.conj(),
            direction="outgoing",
            polarization=self.polarization,
        )


def solve_fields(stack, omega, theta_ext=0.0, direction="left", sin_theta=None, indices=None):
    """
    Internal field map for a unit plane wave incident from the left
    (`direction="left"`) or from the right (`direction="right"`).
    `sin_theta` may replace `theta_ext` for vectorized callers.
    """
    if sin_theta is None:
        sin_theta = _sin(theta_ext)
    kz, phase = _wavevectors(stack, omega, sin_theta, indices)
    m00, m01, m10, m11 = _chain(kz, phase)
    n_regions = len(kz)
    forward = empty(kz.shape, dtype=complex)
    backward = empty(kz.shape, dtype=complex)

    if direction == "left":
        t = (m00 * m11 - m01 * m10) / m11
        r = -m10 / m11
        # Start at the output side and walk back with inverse steps
        fw, bw = t, zeros(t.shape, dtype=complex)
        forward[-1], backward[-1] = fw, bw
        for j in range(n_regions - 2, -1, -1):
            # Inverse of the step j -> j+1
            eta = kz[j + 1] / kz[j]
            a = (1 + eta) / 2
            b = (1 - eta) / 2
            em = exp(-1j * phase[j])
            ep = exp(1j * phase[j])
            fw, bw = (a * fw + b * bw) * em, (b * fw + a * bw) * ep
            forward[j], backward[j] = fw, bw
        # Exact boundary values on the incident side
        forward[0] = 1.0
        backward[0] = r
    elif direction == "right":
        t = 1 / m11
        r = m01 / m11
        fw, bw = zeros(t.shape, dtype=complex), t
        forward[0], backward[0] = fw, bw
        for j in range(n_regions - 1):
            s00, s01, s10, s11 = _step(kz[j], kz[j + 1], phase[j])
            fw, bw = s00 * fw + s01 * bw, s10 * fw + s11 * bw
            forward[j + 1], backward[j + 1] = fw, bw
        forward[-1] = r
        backward[-1] = 1.0
    else:
        raise ValidationError(f'Unknown direction "{direction}" (left or right)')

    return FieldMap(
        omega=omega,
        theta_ext=theta_ext,
        forward=forward,
        backward=backward,
        kz=kz,
        t=t,
        r=r,
        direction=direction,
    )


def detection_mode(stack, omega, theta_ext=0.0, sin_theta=None):
    """
    Mode whose only outgoing wave leaves through the output side with
    unit amplitude (forward detection). It is the time-reversed
    right-incidence solution.
    """
    return solve_fields(
        stack, omega, theta_ext, direction="right", sin_theta=sin_theta
    ).time_reversed()


def _sin(theta):
    return sin(asarray(theta, dtype=float))


@dataclass
class TransmissionSpectrum:
    omega: object
    t: object
    r: object
    theta_ext: float = 0.0
    polarization: str = "TE"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        omega = asarray(self.omega, dtype=float)
        if omega.ndim != 1 or len(omega) < 2 or not (omega[1:] > omega[:-1]).all():
            raise ValidationError("Spectrum grid must be strictly increasing")
        self.omega = omega

    @property
    def T(self):
        return np_abs(self.t) ** 2

    @property
    def R(self):
        return np_abs(self.r) ** 2

    def to_csv(self):
        buff = io.StringIO()
        writer = csv.writer(buff, lineterminator="\n")
        writer.writerow(["omega_rad_per_fs", "T", "R", "re_t", "im_t"])
        for row in zip(self.omega, self.T, self.R, real(self.t), imag(self.t)):
            writer.writerow([fmt_float(v) for v in row])
        return buff.getvalue()

    def df(self):
        if DataFrame is None:
            raise ModuleNotFoundError("No module named 'pandas'")
        return DataFrame(
            {"omega_rad_per_fs": self.omega, "T": self.T, "R": self.R,
             "re_t": real(self.t), "im_t": imag(self.t)}
        )

    def __len__(self):
        return len(self.omega)


def transmission_spectrum(stack, omega_grid, theta_ext=0.0, direction="left"):
    """
    Batched `solve_fields` restricted to `t` and `r` on `omega_grid`.
    """
    omega = asarray(omega_grid, dtype=float)
    kz, phase = _wavevectors(stack, omega, _sin(theta_ext))
    m00, m01, m10, m11 = _chain(kz, phase)
    if direction == "left":
        t = (m00 * m11 - m01 * m10) / m11
        r = -m10 / m11
    elif direction == "right":
        t = 1 / m11
        r = m01 / m11
    else:
        raise ValidationError(f'Unknown direction "{direction}" (left or right)')
    return TransmissionSpectrum(omega=omega, t=t, r=r, theta_ext=theta_ext)
