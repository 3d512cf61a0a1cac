"""
Validation of run documents.

A `Schema` maps keys to compact type definitions:

    "float"    optional float
    "float*"   required float
    "int[]"    list of ints
    "float?"   float or null
    "u64"      unsigned 64-bit integer (seeds)

Nested sections are themselves schemas. Unknown keys are rejected
with their dotted path:

``` python-console
>>> from parastack.schema import Schema
>>> schema = Schema(pump=Schema(duration_fwhm="float*"))
>>> schema.validate({"pump": {"duration_fwhm": 250, "colour": "green"}})
Traceback (most recent call last):
 ...
parastack.utils.ValidationError: Unknown key "pump.colour"
```

`RunConfig` holds the validated document and builds the domain
objects of every command.
"""
import json
import math
import shlex

from .amplitude import EmissionGeometry, PumpConfig
from .ensemble import EnsembleConfig, SearchCriteria
from .material import get_material
from .stack import GeneratorParams
from .superpose import SuperpositionSpec
from .utils import ValidationError, wavelength_to_omega

__all__ = ["Schema", "SchemaField", "RunConfig"]


def _is_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


def _float(value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeError
    return float(value)


def _int(value):
    if not _is_int(value):
        raise TypeError
    return value


def _u64(value):
    if not _is_int(value) or not 0 <= value < 2 ** 64:
        raise TypeError
    return value


def _bool(value):
    if not isinstance(value, bool):
        raise TypeError
    return value


def _str(value):
    if not isinstance(value, str):
        raise TypeError
    return value


CASTS = {
    "float": _float,
    "int": _int,
    "u64": _u64,
    "bool": _bool,
    "str": _str,
}


class SchemaField:
    def __init__(self, name, kind, is_list=False, required=False, nullable=False):
        if kind not in CASTS:
            raise ValueError(f'Unknown type "{kind}" for "{name}"')
        self.name = name
        self.kind = kind
        self.is_list = is_list
        self.required = required
        self.nullable = nullable

    @classmethod
    def from_ui(cls, name, definition):
        parser = shlex.shlex(definition, posix=True, punctuation_chars="*?")
        parser.wordchars += "[]"
        kind, *tokens = parser
        is_list = kind.endswith("[]")
        if is_list:
            kind = kind[:-2]
        required = nullable = False
        for tk in tokens:
            if tk == "*":
                required = True
            elif tk == "?":
                nullable = True
            else:
                raise ValueError(f"Unexpected item: {tk}")
        return SchemaField(name, kind, is_list, required, nullable)

    def cast(self, value, path):
        if value is None:
            if self.nullable:
                return None
            raise ValidationError(f'Key "{path}" can not be null')
        cast = CASTS[self.kind]
        try:
            if self.is_list:
                if not isinstance(value, list):
                    raise TypeError
                return [cast(v) for v in value]
            return cast(value)
        except TypeError:
            expected = f"list of {self.kind}" if self.is_list else self.kind
            raise ValidationError(f'Key "{path}" expects {expected}, got {value!r}')

    def __repr__(self):
        suffix = "[]" if self.is_list else ""
        flags = ("*" if self.required else "") + ("?" if self.nullable else "")
        return f"<SchemaField {self.name} {self.kind}{suffix}{flags}>"


class Schema:
    def __init__(self, **fields):
        self.fields = {}
        for name, definition in fields.items():
            if isinstance(definition, str):
                definition = SchemaField.from_ui(name, definition)
            self.fields[name] = definition

    def __iter__(self):
        return iter(self.fields.keys())

    def __getitem__(self, name):
        return self.fields[name]

    def validate(self, doc, prefix=""):
        """
        Return a copy of `doc` with every value cast to its declared
        type; raise `ValidationError` on the first problem found.
        """
        if not isinstance(doc, dict):
            raise ValidationError(f'Section "{prefix or "."}" must be an object')
        for key in doc:
            if key not in self.fields:
                raise ValidationError(f'Unknown key "{prefix}{key}"')
        res = {}
        for name, definition in self.fields.items():
            path = prefix + name
            if name not in doc:
                if isinstance(definition, SchemaField) and definition.required:
                    raise ValidationError(f'Missing key "{path}"')
                continue
            value = doc[name]
            if isinstance(definition, Schema):
                res[name] = definition.validate(value, prefix=path + ".")
            else:
                res[name] = definition.cast(value, path)
        return res

    def __repr__(self):
        return "<Schema {}>".format(" ".join(self.fields))


RUN_SCHEMA = Schema(
    structure=Schema(
        file="str",
        n_elem="int",
        seed="u64",
        lambda0="float",
        jitter_sigma="float?",
        materials="str[]",
    ),
    pump=Schema(
        lambda_um="float",
        omega_p0="float",
        duration_fwhm="float",
        amplitude="float",
        beam_diameter="float?",
    ),
    geometry=Schema(
        theta_s_deg="float",
        psi_s_deg="float",
        transverse_area_um2="float",
    ),
    grid=Schema(
        n_points="int",
        span_fwhm="float",
        omega_s="float?",
        square="bool?",
    ),
    spectrum=Schema(
        lambda_min_um="float",
        lambda_max_um="float",
        n_points="int",
        theta_deg="float",
        floor_fraction="float",
    ),
    ensemble=Schema(
        master_seed="u64",
        count="int",
        n_elem="int[]",
        theta_deg="float[]",
        band_um="float[]",
        bins_nm="float[]",
        lambda0="float",
        jitter_sigma="float?",
        floor_fraction="float",
        workers="int?",
    ),
    search=Schema(
        mode="str",
        t_min="float",
        ratio="float",
        tolerance="float",
        pump_floor="float",
        theta_deg="float",
        budget="int",
    ),
    superpose=Schema(
        mode="str",
        m="int",
        delta_omega="float",
        phase_step="float",
        theta_min_deg="float",
        theta_max_deg="float",
        n_angles="int",
        compensation="float?",
    ),
    output="str?",
)


def _pick(section, overrides):
    "Merge a config section with cli overrides (None means unset)"
    res = dict(section)
    res.update({k: v for k, v in overrides.items() if v is not None})
    return res


class RunConfig:
    """
    A validated run document. Every builder accepts keyword overrides
    (typically cli flags) that take precedence over the document.
    """

    schema = RUN_SCHEMA

    def __init__(self, doc=None):
        self.doc = self.schema.validate(doc or {})

    @classmethod
    def loads(cls, payload):
        try:
            doc = json.loads(payload)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"Malformed config document: {exc}")
        return cls(doc)

    def section(self, name):
        return self.doc.get(name, {})

    @property
    def output(self):
        return self.doc.get("output")

    @property
    def structure_file(self):
        return self.section("structure").get("file")

    def generator_params(self, **overrides):
        opts = _pick(self.section("structure"), overrides)
        opts.pop("file", None)
        if "materials" in opts:
            opts["materials"] = tuple(get_material(m) for m in opts["materials"])
        if "n_elem" not in opts:
            raise ValidationError('Missing key "structure.n_elem"')
        return GeneratorParams(**opts)

    def pump(self, default_omega=None, **overrides):
        opts = _pick(self.section("pump"), overrides)
        lambda_um = opts.pop("lambda_um", None)
        if lambda_um is not None:
            if "omega_p0" in opts:
                raise ValidationError("Give either pump.lambda_um or pump.omega_p0")
            opts["omega_p0"] = wavelength_to_omega(lambda_um)
        if opts.get("beam_diameter", "unset") is None:
            opts["beam_diameter"] = math.inf
        opts.setdefault("omega_p0", default_omega)
        if opts["omega_p0"] is None:
            return None
        return PumpConfig(**opts)

    def geometry(self, **overrides):
        opts = _pick(self.section("geometry"), overrides)
        return EmissionGeometry(
            theta_s=math.radians(opts.get("theta_s_deg", 0.0)),
            psi_s=math.radians(opts.get("psi_s_deg", 0.0)),
            transverse_area=opts.get("transverse_area_um2", math.pi * 500 ** 2),
        )

    def grid_options(self, **overrides):
        return _pick(self.section("grid"), overrides)

    def spectrum_options(self, **overrides):
        opts = {
            "lambda_min_um": 0.9,
            "lambda_max_um": 1.1,
            "n_points": 4001,
            "theta_deg": 0.0,
            "floor_fraction": 0.01,
        }
        opts.update(_pick(self.section("spectrum"), overrides))
        if not 0 < opts["lambda_min_um"] < opts["lambda_max_um"]:
            raise ValidationError("spectrum: 0 < lambda_min_um < lambda_max_um expected")
        if opts["n_points"] < 2:
            raise ValidationError("spectrum: n_points must be >= 2")
        return opts

    def ensemble_config(self, **overrides):
        opts = _pick(self.section("ensemble"), overrides)
        if "theta_deg" in opts:
            opts["theta"] = tuple(math.radians(t) for t in opts.pop("theta_deg"))
        if "band_um" in opts and len(opts["band_um"]) != 2:
            raise ValidationError('Key "ensemble.band_um" expects [min, max]')
        return EnsembleConfig(**opts)

    def search_criteria(self, **overrides):
        opts = _pick(self.section("search"), overrides)
        opts.pop("budget", None)
        if "theta_deg" in opts:
            opts["theta"] = math.radians(opts.pop("theta_deg"))
        return SearchCriteria(**opts)

    def search_budget(self, default=10_000, **overrides):
        return _pick(self.section("search"), overrides).get("budget", default)

    def superposition_spec(self, **overrides):
        opts = _pick(self.section("superpose"), overrides)
        for key in ("theta_min", "theta_max"):
            deg = opts.pop(f"{key}_deg", None)
            if deg is not None:
                opts[key] = math.radians(deg)
        return SuperpositionSpec(**opts)

    def dumps(self):
        return json.dumps(self.doc, indent=1, sort_keys=True) + "\n"

    def __repr__(self):
        sections = ", ".join(k for k in self.doc)
        return f"<RunConfig {sections or 'empty'}>"
