"""
Seeded Monte Carlo campaigns over random structures.

Structure `k` of a campaign is fully determined by the master seed and
`k`: its seed is `derive_seed(master_seed, k)` and its element count is
`n_elem[k // count]`. Each structure gives one record (its peaks and
ln T per angle); reports only aggregate records sorted by index, so
the result does not depend on the thread count nor on how a campaign
is sharded:

``` python-console
>>> cfg = EnsembleConfig(master_seed=7, count=40)
>>> full = run_campaign(cfg)
>>> parts = [run_campaign(cfg, shard=(k, 4)) for k in range(4)]
>>> merge_reports(*parts).summary() == full.summary()
True
```

A campaign persisted in a POD looks like:

    config.json          # config document and its digest
    records-0-4.jsonl    # one JSON record per structure and shard
    aggregate.json       # histograms, medians and localization lengths
"""
import json
import math
from dataclasses import dataclass, field

from numpy import asarray, geomspace, histogram, median, searchsorted

from .material import get_material
from .peaks import localization_estimate, scan_peaks
from .stack import GeneratorParams, generate_random_stack
from .transfer import transmittance
from .utils import (
    DomainError,
    ParastackError,
    Pool,
    ValidationError,
    derive_seed,
    hexdigest,
    logger,
    round_sig,
    wavelength_to_omega,
)

__all__ = [
    "EnsembleConfig",
    "EnsembleReport",
    "SearchCriteria",
    "SearchResult",
    "run_campaign",
    "merge_reports",
    "search_structures",
    "match_peaks",
    "load_report",
]


def default_bins():
    "Log-spaced FWHM bins (nm) from 1e-3 to 10 nm"
    return tuple(float(b) for b in geomspace(1e-3, 10, 41))


@dataclass(frozen=True)
class EnsembleConfig:
    master_seed: int = 0
    count: int = 2000
    n_elem: tuple = (250,)
    theta: tuple = (0.0,)  # rad
    band_um: tuple = (0.9, 1.1)  # scanned wavelengths
    bins_nm: tuple = field(default_factory=default_bins)
    lambda0: float = 1.0
    jitter_sigma: float = None
    floor_fraction: float = 0.01
    materials: tuple = ("LiNbO3", "SiO2")
    workers: int = None

    def __post_init__(self):
        for name in ("n_elem", "theta", "band_um", "bins_nm", "materials"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.count < 1:
            raise ValidationError("Campaign count must be >= 1")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValidationError("master_seed must be a 64-bit unsigned integer")
        bins = self.bins_nm
        if len(bins) < 2 or any(b >= a for a, b in zip(bins[1:], bins)):
            raise ValidationError("Histogram bins must be strictly increasing")
        lo, hi = self.band_um
        if not 0 < lo < hi:
            raise ValidationError("Scan band must satisfy 0 < lambda_min < lambda_max")
        if not self.n_elem or not self.theta:
            raise ValidationError("n_elem and theta lists can not be empty")
        for theta in self.theta:
            if not 0 <= theta < math.pi / 2:
                raise ValidationError("Angles must be within [0, 90) deg")

    @property
    def total(self):
        return self.count * len(self.n_elem)

    @property
    def band(self):
        "Scan band as (omega_min, omega_max)"
        lo, hi = self.band_um
        return (wavelength_to_omega(hi), wavelength_to_omega(lo))

    def params(self, index, n_elem=None):
        if n_elem is None:
            n_elem = self.n_elem[index // self.count]
        return GeneratorParams(
            n_elem=n_elem,
            seed=derive_seed(self.master_seed, index),
            lambda0=self.lambda0,
            jitter_sigma=self.jitter_sigma,
            materials=tuple(get_material(m) for m in self.materials),
        )

    def dumps(self):
        doc = {
            "master_seed": self.master_seed,
            "count": self.count,
            "n_elem": list(self.n_elem),
            "theta_rad": list(self.theta),
            "band_um": list(self.band_um),
            "bins_nm": [round_sig(b) for b in self.bins_nm],
            "lambda0_um": self.lambda0,
            "jitter_sigma_um": self.jitter_sigma,
            "floor_fraction": self.floor_fraction,
            "materials": list(self.materials),
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, payload):
        doc = json.loads(payload)
        return cls(
            master_seed=doc["master_seed"],
            count=doc["count"],
            n_elem=doc["n_elem"],
            theta=doc["theta_rad"],
            band_um=doc["band_um"],
            bins_nm=doc["bins_nm"],
            lambda0=doc["lambda0_um"],
            jitter_sigma=doc["jitter_sigma_um"],
            floor_fraction=doc["floor_fraction"],
            materials=doc["materials"],
        )

    def digest(self):
        return hexdigest(self.dumps())

    def compatible(self, other):
        "Records of both campaigns describe the same structures and bins"
        keep = lambda c: (
            c.master_seed, c.count,
            c.n_elem, c.theta, c.band_um, tuple(round_sig(b) for b in c.bins_nm),
            c.lambda0, c.jitter_sigma, c.floor_fraction, c.materials,
        )
        return keep(self) == keep(other)


def _structure_record(config, index):
    params = config.params(index)
    record = {"index": index, "seed": params.seed, "n_elem": params.n_elem}
    try:
        stack = generate_random_stack(params)
        omega0 = wavelength_to_omega(config.lambda0)
        cells = []
        for theta in config.theta:
            sin_t = math.sin(theta)
            peaks = scan_peaks(
                stack, config.band, theta_ext=theta,
                floor_fraction=config.floor_fraction, n_elem=params.n_elem,
            )
            t0 = float(transmittance(stack, omega0, sin_t))
            cells.append(
                {
                    "theta": theta,
                    "peaks": [[p.fwhm_nm, p.t_max, p.omega_c] for p in peaks],
                    "dropped": peaks.dropped,
                    "log_t": math.log(t0) if t0 > 0 else None,
                    "optical_length": stack.optical_length(omega0, sin_t),
                }
            )
        record["cells"] = cells
        record["resamples"] = stack.provenance.get("resamples", 0)
    except (ParastackError, ArithmeticError, ValueError) as exc:
        logger.warning("Structure %s (seed %s) failed: %s", index, params.seed, exc)
        record["error"] = str(exc)
    logger.debug("Structure %s done", index)
    return record


@dataclass(frozen=True)
class HistogramCell:
    edges: tuple
    counts: tuple
    dropped: int  # unbracketed or out of range

    @property
    def total(self):
        return sum(self.counts)

    @property
    def probability(self):
        total = self.total
        return tuple(c / total if total else 0.0 for c in self.counts)


class EnsembleReport:
    def __init__(self, config, records=None):
        self.config = config
        self.records = dict(records or {})

    def __len__(self):
        return len(self.records)

    def __eq__(self, other):
        return (
            isinstance(other, EnsembleReport)
            and self.config.compatible(other.config)
            and self.records == other.records
        )

    def sorted_records(self):
        return [self.records[k] for k in sorted(self.records)]

    @property
    def failures(self):
        return [r for r in self.sorted_records() if "error" in r]

    def _cell(self, n_elem, theta):
        try:
            pos = self.config.theta.index(theta)
        except ValueError:
            raise ValidationError(f"Angle {theta} is not part of the campaign")
        for rec in self.sorted_records():
            if rec["n_elem"] == n_elem and "cells" in rec:
                yield rec["cells"][pos]

    def widths(self, n_elem, theta):
        return [p[0] for cell in self._cell(n_elem, theta) for p in cell["peaks"]]

    def histogram(self, n_elem, theta):
        edges = asarray(self.config.bins_nm)
        widths = asarray(self.widths(n_elem, theta), dtype=float)
        counts, _ = histogram(widths, bins=edges)
        outside = len(widths) - int(counts.sum())
        dropped = sum(c["dropped"] for c in self._cell(n_elem, theta)) + outside
        return HistogramCell(
            edges=tuple(self.config.bins_nm),
            counts=tuple(int(c) for c in counts),
            dropped=dropped,
        )

    def peak_count(self, n_elem, theta):
        "Every peak met during the scans, bracketed or not"
        return sum(
            len(c["peaks"]) + c["dropped"] for c in self._cell(n_elem, theta)
        )

    def median_fwhm(self, n_elem, theta):
        widths = self.widths(n_elem, theta)
        if not widths:
            return math.nan
        return float(median(widths))

    def localization(self, n_elem, theta):
        cells = list(self._cell(n_elem, theta))
        lengths = [c["optical_length"] for c in cells]
        log_t = [-math.inf if c["log_t"] is None else c["log_t"] for c in cells]
        return localization_estimate(lengths, log_t, seed=self.config.master_seed)

    def summary(self):
        cells = []
        for n_elem in self.config.n_elem:
            for theta in self.config.theta:
                hist = self.histogram(n_elem, theta)
                structures = sum(1 for _ in self._cell(n_elem, theta))
                med = self.median_fwhm(n_elem, theta)
                loc = self.localization(n_elem, theta) if structures else None
                cells.append(
                    {
                        "n_elem": n_elem,
                        "theta_deg": round_sig(math.degrees(theta)),
                        "structures": structures,
                        "peaks": self.peak_count(n_elem, theta),
                        "dropped": hist.dropped,
                        "median_fwhm_nm": None if math.isnan(med) else round_sig(med),
                        "localization": loc.dumps() if loc else None,
                        "histogram": [round_sig(p) for p in hist.probability],
                    }
                )
        return {
            "config_digest": self.config.digest(),
            "structures": len(self.records),
            "failures": len(self.failures),
            "bins_nm": [round_sig(b) for b in self.config.bins_nm],
            "cells": cells,
        }

    def dumps_records(self):
        return "".join(
            json.dumps(r, sort_keys=True) + "\n" for r in self.sorted_records()
        )

    def dumps_aggregate(self):
        return json.dumps(self.summary(), indent=1, sort_keys=True) + "\n"

    def merge(self, other):
        if not self.config.compatible(other.config):
            raise ValidationError("Can not merge reports of incompatible campaigns")
        records = dict(self.records)
        for key, rec in other.records.items():
            if key in records and records[key] != rec:
                raise ValidationError(f"Conflicting records for structure {key}")
            records[key] = rec
        return EnsembleReport(self.config, records)

    def save(self, pod, shard=(0, 1)):
        "Persist config, records (appended per shard) and aggregate"
        pod.write_text("config.json", json.dumps(
            {"config": json.loads(self.config.dumps()), "digest": self.config.digest()},
            indent=1, sort_keys=True,
        ) + "\n")
        k, n = shard
        name = f"records-{k}-{n}.jsonl"
        pod.rm(name, missing_ok=True)
        pod.append_text(name, self.dumps_records())
        pod.write_text("aggregate.json", self.dumps_aggregate())

    def __repr__(self):
        return f"<EnsembleReport {len(self.records)} records>"


def load_report(pod):
    "Rebuild a report from every record file found in `pod`"
    doc = json.loads(pod.read_text("config.json"))
    config = EnsembleConfig.loads(json.dumps(doc["config"]))
    if doc.get("digest") not in (None, config.digest()):
        raise ValidationError("Campaign config digest mismatch")
    records = {}
    for name in pod.ls():
        if not (name.startswith("records-") and name.endswith(".jsonl")):
            continue
        for line in pod.read_text(name).splitlines():
            if line.strip():
                rec = json.loads(line)
                records[rec["index"]] = rec
    return EnsembleReport(config, records)


def run_campaign(config, shard=(0, 1), pod=None):
    """
    Run structures `k ≡ shard[0] (mod shard[1])` of the campaign.
    Failing structures are recorded with their error and skipped.
    """
    k, n = shard
    if not 0 <= k < n:
        raise ValidationError("Shard must satisfy 0 <= k < n")
    indices = range(k, config.total, n)
    with Pool(max_threads=config.workers) as pool:
        for index in indices:
            pool.submit(_structure_record, config, index)
    report = EnsembleReport(config, {r["index"]: r for r in pool.results})
    logger.info(
        "Campaign shard %s/%s: %s structures, %s failures",
        k, n, len(report), len(report.failures),
    )
    if pod is not None:
        report.save(pod, shard=shard)
    return report


def merge_reports(*reports):
    if not reports:
        raise ValidationError("Nothing to merge")
    head, *tail = reports
    for other in tail:
        head = head.merge(other)
    return head


@dataclass(frozen=True)
class SearchCriteria:
    mode: str = "degenerate"  # or "two-peak"
    t_min: float = 0.9
    ratio: float = 4.0
    tolerance: float = 0.5  # relative, two-peak mode
    pump_floor: float = 0.1
    theta: float = 0.0

    def __post_init__(self):
        if self.mode not in ("degenerate", "two-peak"):
            raise ValidationError(f'Unknown search mode "{self.mode}"')
        if not self.t_min > 0:
            raise ValidationError("t_min must be > 0")
        if self.t_min > 1:
            logger.warning("t_min > 1 can not be met, the search will be empty")
        if self.ratio < 1:
            raise ValidationError("Bandwidth ratio must be >= 1")

    def dumps(self):
        return {
            "mode": self.mode,
            "t_min": self.t_min,
            "ratio": self.ratio,
            "tolerance": self.tolerance,
            "pump_floor": self.pump_floor,
            "theta_deg": math.degrees(self.theta),
        }


@dataclass
class SearchResult:
    matches: list  # (LayerStack, peaks) pairs
    tried: int
    criteria: SearchCriteria = None

    @property
    def rate(self):
        return len(self.matches) / self.tried if self.tried else 0.0

    def dumps(self):
        return {
            "tried": self.tried,
            "matched": len(self.matches),
            "rate": self.rate,
            "criteria": self.criteria.dumps() if self.criteria else None,
            "matches": [
                {
                    "seed": stack.provenance.get("seed"),
                    "digest": stack.digest(),
                    "peaks": [p.dumps() for p in peaks],
                }
                for stack, peaks in self.matches
            ],
        }


def _pump_transparent(stack, omega, floor):
    try:
        return float(transmittance(stack, omega)) >= floor
    except DomainError:
        return False


def match_peaks(stack, peaks, criteria):
    """
    Groups of `peaks` (single peaks, or pairs in two-peak mode) of
    `stack` meeting `criteria`
    """
    good = [p for p in peaks if p.t_max >= criteria.t_min]
    if criteria.mode == "degenerate":
        return [
            [p] for p in good
            if _pump_transparent(stack, 2 * p.omega_c, criteria.pump_floor)
        ]
    found = []
    lo = criteria.ratio * (1 - criteria.tolerance)
    hi = criteria.ratio * (1 + criteria.tolerance)
    for pos, first in enumerate(good):
        for second in good[pos + 1 :]:
            wide, narrow = sorted((first, second), key=lambda p: -p.fwhm_omega)
            ratio = wide.fwhm_omega / narrow.fwhm_omega
            if lo <= ratio <= hi and _pump_transparent(
                stack, first.omega_c + second.omega_c, criteria.pump_floor
            ):
                found.append([first, second])
    return found


def _search_one(config, criteria, index):
    # Searches stream past the campaign size, always at the first n_elem
    params = config.params(index, n_elem=config.n_elem[0])
    try:
        stack = generate_random_stack(params)
        peaks = scan_peaks(
            stack, config.band, theta_ext=criteria.theta,
            floor_fraction=config.floor_fraction, n_elem=params.n_elem,
        )
    except (ParastackError, ArithmeticError, ValueError) as exc:
        logger.warning("Structure %s (seed %s) failed: %s", index, params.seed, exc)
        return None
    matched = match_peaks(stack, peaks, criteria)
    if not matched:
        return None
    return stack, matched[0]


def search_structures(config, criteria, budget, batch=64):
    """
    Stream up to `budget` structures of the campaign `config` through
    peak analysis and keep those meeting `criteria`.
    """
    if budget < 1:
        raise ValidationError("Search budget must be >= 1")
    matches = []
    tried = 0
    for start in range(0, budget, batch):
        stop = min(start + batch, budget)
        with Pool(max_threads=config.workers) as pool:
            for index in range(start, stop):
                pool.submit(_search_one, config, criteria, index)
        tried = stop
        matches.extend(m for m in pool.results if m is not None)
    result = SearchResult(matches, tried, criteria)
    logger.info(
        "Search: %s matches out of %s structures (rate %.3g)",
        len(matches), tried, result.rate,
    )
    return result
