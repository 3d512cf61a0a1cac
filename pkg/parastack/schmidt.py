"""
Schmidt decomposition of two-photon amplitudes.

The amplitude is sampled on a uniform grid, so the decomposition is the
singular value decomposition of √w_s·φ·√w_i (w being the trapezoidal
quadrature weights). Modes are divided back by √w so they are function
samples, orthonormal under the same quadrature:

    φ(ω_s, ω_i) = √norm · Σ λ_n f_s,n(ω_s) f_i,n(ω_i),   Σ λ_n² = 1

``` python-console
>>> res = schmidt_decompose(tpa)
>>> round(float(res.weights[0]), 3)
0.999
>>> round(entropy(res), 2), round(cooperativity(res), 2)
(0.01, 1.0)
```
"""
import io
import json
import math
from dataclasses import dataclass, field

from numpy import asarray, log2, sqrt
from scipy.linalg import svd, svdvals

from .utils import NumericalError, ValidationError, fmt_float

__all__ = [
    "SchmidtResult",
    "schmidt_decompose",
    "leading_weight",
    "entropy",
    "cooperativity",
]


@dataclass
class SchmidtResult:
    weights: object  # λ_n², descending
    signal_modes: object  # (rank, N_s)
    idler_modes: object  # (rank, N_i)
    omega_s: object
    omega_i: object
    norm: float = 1.0
    meta: dict = field(default_factory=dict)

    @property
    def amplitudes(self):
        "λ_n"
        return sqrt(self.weights)

    @property
    def rank(self):
        return len(self.weights)

    def entropy(self):
        return entropy(self)

    def cooperativity(self):
        return cooperativity(self)

    def reconstruct(self, rank=None):
        "Rebuild the amplitude from the first `rank` modes (all by default)"
        rank = rank or self.rank
        lam = self.amplitudes[:rank]
        modes_s = self.signal_modes[:rank] * lam[:, None]
        return math.sqrt(self.norm) * (modes_s.T @ self.idler_modes[:rank])

    def dumps(self, max_modes=32):
        doc = {
            "weights": [float(w) for w in self.weights[:max_modes]],
            "amplitudes": [float(a) for a in self.amplitudes[:max_modes]],
            "entropy_bits": self.entropy(),
            "cooperativity": self.cooperativity(),
            "rank": self.rank,
            "meta": self.meta,
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    def mode_csv(self, n):
        "CSV of the `n`-th signal and idler modes"
        if not 0 <= n < self.rank:
            raise ValidationError(f"Mode {n} out of range (rank {self.rank})")
        buff = io.StringIO()
        buff.write("field,omega_rad_per_fs,re,im\n")
        for name, axis, mode in (
            ("signal", self.omega_s, self.signal_modes[n]),
            ("idler", self.omega_i, self.idler_modes[n]),
        ):
            for w, v in zip(axis, mode):
                buff.write(f"{name},{fmt_float(w)},{fmt_float(v.real)},{fmt_float(v.imag)}\n")
        return buff.getvalue()


def _weighted_matrix(tpa):
    grid = tpa.grid
    sw = sqrt(grid.weights_s)
    iw = sqrt(grid.weights_i)
    return sw[:, None] * tpa.values * iw[None, :], sw, iw


def schmidt_decompose(tpa):
    if tpa.is_zero():
        raise NumericalError("Schmidt decomposition of an all-zero amplitude")
    matrix, sw, iw = _weighted_matrix(tpa)
    u, sigma, vh = svd(matrix, full_matrices=False)
    sigma2 = sigma ** 2
    total = sigma2.sum()
    return SchmidtResult(
        weights=sigma2 / total,
        signal_modes=(u / sw[:, None]).T,
        idler_modes=vh / iw[None, :],
        omega_s=tpa.grid.omega_s,
        omega_i=tpa.grid.omega_i,
        norm=float(total),
        meta={"normalization": tpa.normalization},
    )


def leading_weight(tpa):
    "λ₁², without computing the modes"
    matrix, _, _ = _weighted_matrix(tpa)
    sigma2 = svdvals(matrix) ** 2
    total = sigma2.sum()
    if not total > 0:
        return 0.0
    return float(sigma2[0] / total)


def _weights(schmidt):
    if isinstance(schmidt, SchmidtResult):
        return asarray(schmidt.weights, dtype=float)
    weights = asarray(schmidt, dtype=float)
    if (weights < 0).any() or abs(weights.sum() - 1) > 1e-8:
        raise ValidationError("Schmidt weights must be >= 0 and sum to 1")
    return weights


def entropy(schmidt):
    "Entanglement entropy in bits, S = −Σ λ² log₂ λ²"
    weights = _weights(schmidt)
    weights = weights[weights > 0]
    return float(max(-(weights * log2(weights)).sum(), 0.0))


def cooperativity(schmidt):
    "K = 1 / Σ λ⁴"
    weights = _weights(schmidt)
    return float(1 / (weights ** 2).sum())
