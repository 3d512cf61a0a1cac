"""
Random 1D layered structures.

A structure is built from `n_elem` elementary slots of optical
thickness λ0/4. Each slot is LiNbO₃ or SiO₂ with probability 1/2, runs
of equal material are merged into one physical layer and every
boundary between two materials is then shifted by a Gaussian amount of
optical length (standard deviation `jitter_sigma`). A shift into a
layer is converted to physical length with that layer's index at λ0.

``` python-console
>>> from parastack import GeneratorParams, generate_random_stack
>>> stack = generate_random_stack(GeneratorParams(n_elem=250, seed=7, jitter_sigma=0))
>>> round(stack.optical_length(), 9)
62.5
```

Stacks are immutable and serialize to JSON:

``` json
{"lambda0_um": 1.0, "seed": 7, "n_elem": 250, "jitter_sigma_um": 0.025,
 "resamples": 0, "layers": [{"material": "SiO2", "thickness_um": 0.172413793103}, ...]}
```
"""
import json
from dataclasses import dataclass, field

from numpy import asarray, cumsum, diff, flatnonzero, sqrt
from numpy.random import default_rng

from .material import LINBO3, SIO2, get_material, refractive_index
from .utils import ValidationError, hexdigest, logger, round_sig, wavelength_to_omega

__all__ = [
    "GeneratorParams",
    "LayerStack",
    "generate_random_stack",
    "quarter_wave_stack",
    "microcavity",
]


@dataclass(frozen=True)
class GeneratorParams:
    n_elem: int
    seed: int = 0
    lambda0: float = 1.0
    jitter_sigma: float = None  # defaults to lambda0 / 40
    materials: tuple = (LINBO3, SIO2)

    def __post_init__(self):
        if self.jitter_sigma is None:
            object.__setattr__(self, "jitter_sigma", self.lambda0 / 40)
        if self.n_elem < 1:
            raise ValidationError("n_elem must be >= 1")
        if self.lambda0 <= 0:
            raise ValidationError("lambda0 must be > 0")
        if self.jitter_sigma < 0:
            raise ValidationError("jitter_sigma must be >= 0")
        if self.jitter_sigma >= self.lambda0 / 8:
            raise ValidationError("jitter_sigma must be < lambda0 / 8")
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class LayerStack:
    """
    Ordered layers `(material, thickness_um)` between two vacuum
    half-spaces. `provenance` keeps what is needed to regenerate the
    stack (seed, generator parameters, resample count).
    """

    layers: tuple
    lambda0: float = 1.0
    provenance: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        layers = tuple((mat, float(thk)) for mat, thk in self.layers)
        object.__setattr__(self, "layers", layers)
        for pos, (mat, thk) in enumerate(layers):
            if not thk > 0:
                raise ValidationError(f"Layer {pos}: thickness must be > 0")
            if pos and layers[pos - 1][0] == mat:
                raise ValidationError(
                    f"Layers {pos - 1} and {pos} share the same material ({mat.id})"
                )

    def __len__(self):
        return len(self.layers)

    def __iter__(self):
        return iter(self.layers)

    @property
    def materials(self):
        return [mat for mat, _ in self.layers]

    @property
    def thicknesses(self):
        return asarray([thk for _, thk in self.layers], dtype=float)

    @property
    def chi2(self):
        return asarray([mat.chi2 for mat, _ in self.layers], dtype=float)

    @property
    def boundary_count(self):
        "Number of internal material boundaries"
        return max(len(self.layers) - 1, 0)

    @property
    def nonlinear_thickness(self):
        return float(sum(thk for mat, thk in self.layers if mat.chi2 > 0))

    def indices(self, omega):
        """
        Array of layer indices at `omega`, shape `(len(self),) + shape(omega)`
        """
        omega = asarray(omega, dtype=float)
        cache = {}
        rows = []
        for mat, _ in self.layers:
            if mat.id not in cache:
                cache[mat.id] = refractive_index(mat, omega) + 0 * omega
            rows.append(cache[mat.id])
        return asarray(rows, dtype=float).reshape((len(self.layers),) + omega.shape)

    def optical_length(self, omega=None, sin_theta=0.0):
        """
        Optical length projected on the stack normal, Σ √(n² − sin²θ)·d,
        at `omega` (defaults to the design wavelength).
        """
        if not self.layers:
            return 0.0
        if omega is None:
            omega = wavelength_to_omega(self.lambda0)
        n = self.indices(omega)
        n = n.reshape(len(self.layers), -1)[:, 0]
        return float((sqrt(n ** 2 - sin_theta ** 2) * self.thicknesses).sum())

    def concat(self, other):
        "Stack A⊕B: `self` on the input side, `other` behind it"
        return LayerStack(self.layers + other.layers, lambda0=self.lambda0)

    def scaled(self, factor):
        return LayerStack(
            [(mat, thk * factor) for mat, thk in self.layers], lambda0=self.lambda0
        )

    def dumps(self):
        prov = self.provenance
        doc = {
            "lambda0_um": round_sig(self.lambda0),
            "seed": prov.get("seed"),
            "n_elem": prov.get("n_elem"),
            "jitter_sigma_um": prov.get("jitter_sigma"),
            "resamples": prov.get("resamples"),
            "layers": [
                {"material": mat.id, "thickness_um": round_sig(thk)}
                for mat, thk in self.layers
            ],
        }
        return json.dumps(doc, indent=1) + "\n"

    @classmethod
    def loads(cls, payload):
        if isinstance(payload, bytes):
            payload = payload.decode()
        try:
            doc = json.loads(payload)
            layers = [
                (get_material(l["material"]), float(l["thickness_um"]))
                for l in doc["layers"]
            ]
            lambda0 = float(doc["lambda0_um"])
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ValidationError(f"Malformed stack document: {exc}")
        provenance = {
            "seed": doc.get("seed"),
            "n_elem": doc.get("n_elem"),
            "jitter_sigma": doc.get("jitter_sigma_um"),
            "resamples": doc.get("resamples"),
        }
        return cls(layers, lambda0=lambda0, provenance=provenance)

    def digest(self):
        return hexdigest(self.dumps())

    def __repr__(self):
        return f"<LayerStack {len(self.layers)} layers>"


def generate_random_stack(params):
    """
    Draw a random stack from `params`; deterministic for a fixed seed.
    """
    rng = default_rng(params.seed)
    mat_a, mat_b = params.materials
    omega0 = wavelength_to_omega(params.lambda0)
    n_a = float(refractive_index(mat_a, omega0))
    n_b = float(refractive_index(mat_b, omega0))

    slots = rng.integers(0, 2, params.n_elem)
    # Merge runs of equal material
    starts = flatnonzero(diff(slots)) + 1
    edges = [0, *starts.tolist(), params.n_elem]
    run_mats = [slots[s] for s in edges[:-1]]
    run_len = diff(edges)
    index = [n_a if m == 0 else n_b for m in run_mats]
    quarter = params.lambda0 / 4
    thickness = [k * quarter / n for k, n in zip(run_len, index)]

    # Shift every internal boundary by a gaussian optical length
    resamples = 0
    for pos in range(len(thickness) - 1):
        while True:
            shift = rng.normal(0.0, params.jitter_sigma) if params.jitter_sigma else 0.0
            if shift >= 0:
                # Boundary moves right, into layer pos + 1
                delta = shift / index[pos + 1]
            else:
                delta = shift / index[pos]
            left = thickness[pos] + delta
            right = thickness[pos + 1] - delta
            if left > 0 and right > 0:
                break
            resamples += 1
        thickness[pos] = left
        thickness[pos + 1] = right

    if resamples:
        logger.warning("Seed %s: %s boundary shifts resampled", params.seed, resamples)
    materials = [mat_a if m == 0 else mat_b for m in run_mats]
    provenance = {
        "seed": params.seed,
        "n_elem": params.n_elem,
        "jitter_sigma": round_sig(params.jitter_sigma),
        "resamples": resamples,
    }
    return LayerStack(
        list(zip(materials, thickness)), lambda0=params.lambda0, provenance=provenance
    )


def _quarter(material, lambda0):
    return (material, lambda0 / 4 / float(refractive_index(material, wavelength_to_omega(lambda0))))


def quarter_wave_stack(n_pairs, hi=LINBO3, lo=SIO2, lambda0=1.0):
    """
    Ideal periodic (H L)^n_pairs stack with quarter-wave layers at `lambda0`
    """
    pair = [_quarter(hi, lambda0), _quarter(lo, lambda0)]
    return LayerStack(pair * n_pairs, lambda0=lambda0)


def microcavity(mirror_pairs, hi=LINBO3, lo=SIO2, lambda0=1.0):
    """
    (H L)^m H [L L] H (L H)^m: two Bragg mirrors around a half-wave
    defect, which has a single transmission peak at `lambda0`.
    """
    h, l = _quarter(hi, lambda0), _quarter(lo, lambda0)
    half_wave = (lo, 2 * l[1])
    layers = [h, l] * mirror_pairs + [h, half_wave, h] + [l, h] * mirror_pairs
    return LayerStack(layers, lambda0=lambda0)
