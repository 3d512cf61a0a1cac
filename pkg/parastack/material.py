"""
Dielectric materials and their dispersion.

Two kinds of dispersion are supported: a constant index and the
Sellmeier-type form

    n²(λ) = a + b / (λ² − c) − d·λ²      (λ in μm)

LiNbO₃ (ordinary wave) uses the handbook coefficients a = 4.9048,
b = 0.11768, c = 0.0475, d = 0.027169. The same formula is sometimes
printed with ω in units of 10¹⁴ rad/s and its terms regrouped; such a
typeset version is not dimensionally consistent and the λ form above
is the one implemented (it gives n(1 μm) ≈ 2.236).

``` python-console
>>> from parastack import get_material, refractive_index, wavelength_to_omega
>>> refractive_index(get_material("SiO2"), 2.0)
1.45
>>> round(float(refractive_index(get_material("LiNbO3"), wavelength_to_omega(1.0))), 3)
2.236
```
"""
from dataclasses import dataclass

from numpy import asarray, full, isscalar, ndim, sqrt

from .utils import DomainError, ValidationError, omega_to_wavelength

__all__ = [
    "Material",
    "Sellmeier",
    "MATERIALS",
    "BAND_UM",
    "get_material",
    "register_material",
    "refractive_index",
]

# Supported vacuum wavelength band (μm), down to 0.4 μm so that
# degenerate pairs near 1 μm can be pumped
BAND_UM = (0.4, 2.5)


@dataclass(frozen=True)
class Sellmeier:
    a: float
    b: float
    c: float
    d: float

    def index(self, lambda_um):
        lam2 = lambda_um ** 2
        return sqrt(self.a + self.b / (lam2 - self.c) - self.d * lam2)


@dataclass(frozen=True)
class Material:
    """
    A dielectric with either a constant index (a float) or a
    `Sellmeier` dispersion, and a scalar effective nonlinear
    coefficient `chi2` in pm/V (zero for linear materials).
    """

    id: str
    dispersion: object
    chi2: float = 0.0

    def __post_init__(self):
        if self.chi2 < 0:
            raise ValidationError(f"Material {self.id}: chi2 must be >= 0")
        if not isinstance(self.dispersion, Sellmeier) and self.dispersion < 1:
            raise DomainError(
                f"Material {self.id}: index {self.dispersion} < 1 is not supported"
            )

    @property
    def dispersive(self):
        return isinstance(self.dispersion, Sellmeier)

    def index_at_wavelength(self, lambda_um):
        if not self.dispersive:
            if isscalar(lambda_um):
                return self.dispersion
            return full(asarray(lambda_um).shape, float(self.dispersion))
        lam = asarray(lambda_um, dtype=float)
        lo, hi = BAND_UM
        # Small slack keeps band edges usable with rounded inputs
        if ((lam < lo * (1 - 1e-9)) | (lam > hi * (1 + 1e-9))).any():
            raise DomainError(
                f"Material {self.id}: wavelength outside supported band "
                f"{lo} μm <= λ <= {hi} μm"
            )
        n = self.dispersion.index(lam)
        if (n < 1).any():
            raise DomainError(f"Material {self.id}: index < 1 inside the band")
        return n if ndim(lambda_um) else float(n)

    def __repr__(self):
        return f"<Material {self.id}>"


def refractive_index(material, omega):
    """
    Index of `material` at angular frequency `omega` (rad/fs, scalar
    or array). Dispersive materials raise `DomainError` outside
    `BAND_UM`.
    """
    if ndim(omega):
        omega = asarray(omega, dtype=float)
    return material.index_at_wavelength(omega_to_wavelength(omega))


MATERIALS = {}


def register_material(material):
    MATERIALS[material.id] = material
    return material


def get_material(material_id):
    try:
        return MATERIALS[material_id]
    except KeyError:
        raise ValidationError(f'Unknown material "{material_id}"')


# d33 of LiNbO3 (handbook value), only affects absolute rates
LINBO3 = register_material(
    Material("LiNbO3", Sellmeier(4.9048, 0.11768, 0.0475, 0.027169), chi2=27.0)
)
SIO2 = register_material(Material("SiO2", 1.45))
