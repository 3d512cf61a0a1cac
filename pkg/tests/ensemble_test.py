import math
from dataclasses import replace

import pytest

from parastack import (
    EnsembleConfig,
    EnsembleReport,
    LayerStack,
    Material,
    Peak,
    SearchCriteria,
    ValidationError,
    derive_seed,
    load_report,
    match_peaks,
    merge_reports,
    run_campaign,
    search_structures,
)

CONFIG = EnsembleConfig(master_seed=11, count=4, n_elem=(30, 40), theta=(0.0, math.radians(20)))


def test_deterministic(threaded):
    report = run_campaign(CONFIG)
    assert len(report) == CONFIG.total == 8
    assert report == run_campaign(CONFIG)
    assert not report.failures

    records = report.sorted_records()
    assert [r["index"] for r in records] == list(range(8))
    assert [r["n_elem"] for r in records] == [30] * 4 + [40] * 4
    assert records[5]["seed"] == derive_seed(11, 5)
    assert len(records[0]["cells"]) == 2


def test_threads_and_shards(threaded):
    full = run_campaign(CONFIG)
    shards = [run_campaign(CONFIG, shard=(k, 3)) for k in range(3)]
    assert sorted(len(s) for s in shards) == [2, 3, 3]
    merged = merge_reports(*shards)
    assert merged == full
    assert merged.dumps_aggregate() == full.dumps_aggregate()
    assert merged.dumps_records() == full.dumps_records()
    # Merge order does not matter
    assert merge_reports(*reversed(shards)) == full
    # Empty report is neutral
    assert full.merge(EnsembleReport(CONFIG)) == full


def test_merge_errors():
    report = run_campaign(CONFIG, shard=(0, 4))
    other = EnsembleConfig(
        master_seed=11, count=4, n_elem=(30, 40), theta=CONFIG.theta, bins_nm=(0.01, 0.1, 1.0)
    )
    with pytest.raises(ValidationError):
        report.merge(EnsembleReport(other))
    with pytest.raises(ValidationError):
        merge_reports()
    with pytest.raises(ValidationError):
        run_campaign(CONFIG, shard=(4, 4))

    # Same structure index with another content
    records = {0: dict(report.records[0], seed=1)}
    with pytest.raises(ValidationError):
        report.merge(EnsembleReport(CONFIG, records))


def test_aggregates():
    report = run_campaign(CONFIG)
    for n_elem in CONFIG.n_elem:
        for theta in CONFIG.theta:
            hist = report.histogram(n_elem, theta)
            assert len(hist.counts) == len(CONFIG.bins_nm) - 1
            assert hist.total + hist.dropped == report.peak_count(n_elem, theta)
            probability = hist.probability
            if hist.total:
                assert sum(probability) == pytest.approx(1)
            widths = report.widths(n_elem, theta)
            if widths:
                assert min(widths) <= report.median_fwhm(n_elem, theta) <= max(widths)
            else:
                assert math.isnan(report.median_fwhm(n_elem, theta))
            loc = report.localization(n_elem, theta)
            assert loc.count + loc.excluded == CONFIG.count

    summary = report.summary()
    assert summary["structures"] == 8
    assert summary["failures"] == 0
    assert summary["config_digest"] == CONFIG.digest()
    assert len(summary["cells"]) == 4
    assert [c["structures"] for c in summary["cells"]] == [4, 4, 4, 4]

    with pytest.raises(ValidationError):
        report.histogram(30, 0.5)


def test_persistence(pod):
    shards = [run_campaign(CONFIG, shard=(k, 2), pod=pod) for k in range(2)]
    assert sorted(pod.ls()) == [
        "aggregate.json",
        "config.json",
        "records-0-2.jsonl",
        "records-1-2.jsonl",
    ]
    loaded = load_report(pod)
    assert loaded == merge_reports(*shards)
    assert EnsembleConfig.loads(CONFIG.dumps()).compatible(CONFIG)


def test_failures():
    # LiNbO3 dispersion is only known up to 2.5 μm
    config = EnsembleConfig(master_seed=1, count=3, n_elem=(30,), band_um=(2.4, 3.0))
    report = run_campaign(config)
    assert len(report.failures) == 3
    assert all("error" in r and "cells" not in r for r in report.sorted_records())
    assert report.summary()["failures"] == 3


def test_config_validation():
    with pytest.raises(ValidationError):
        EnsembleConfig(count=0)
    with pytest.raises(ValidationError):
        EnsembleConfig(master_seed=-1)
    with pytest.raises(ValidationError):
        EnsembleConfig(bins_nm=(1.0, 0.5))
    with pytest.raises(ValidationError):
        EnsembleConfig(band_um=(1.1, 0.9))
    with pytest.raises(ValidationError):
        EnsembleConfig(n_elem=())
    with pytest.raises(ValidationError):
        EnsembleConfig(theta=(math.pi / 2,))


def test_search():
    config = EnsembleConfig(master_seed=3, count=4, n_elem=(30,))
    # Beyond the campaign size
    result = search_structures(config, SearchCriteria(t_min=1.01), budget=6, batch=4)
    assert result.tried == 6
    assert result.matches == []
    assert result.rate == 0
    assert result.dumps()["criteria"]["t_min"] == 1.01

    with pytest.raises(ValidationError):
        search_structures(config, SearchCriteria(), budget=0)


def test_match_peaks():
    # Transparent at every pump frequency
    stack = LayerStack([(Material("V", 1.0), 1.0)])
    wide = Peak(omega_c=1.8, fwhm_omega=0.008, fwhm_nm=4.0, t_max=0.95)
    narrow = Peak(omega_c=1.9, fwhm_omega=0.002, fwhm_nm=1.0, t_max=0.99)
    faint = Peak(omega_c=2.0, fwhm_omega=0.004, fwhm_nm=2.0, t_max=0.5)
    peaks = [wide, narrow, faint]

    assert match_peaks(stack, peaks, SearchCriteria()) == [[wide], [narrow]]
    assert match_peaks(stack, peaks, SearchCriteria(mode="two-peak")) == [[wide, narrow]]
    assert match_peaks(stack, peaks, SearchCriteria(mode="two-peak", ratio=10)) == []
    assert match_peaks(stack, peaks, SearchCriteria(pump_floor=1.5)) == []


def test_criteria_validation():
    with pytest.raises(ValidationError):
        SearchCriteria(mode="three-peak")
    with pytest.raises(ValidationError):
        SearchCriteria(t_min=0)
    with pytest.raises(ValidationError):
        SearchCriteria(ratio=0.5)


def test_workers():
    # The records do not depend on the number of threads
    reports = [run_campaign(replace(CONFIG, workers=w)) for w in (1, 2, 8)]
    assert reports[0] == reports[1] == reports[2]
    assert reports[0].dumps_records() == reports[2].dumps_records()


def test_median_trends():
    # Longer structures and larger angles give narrower peaks
    by_length = run_campaign(EnsembleConfig(master_seed=5, count=6, n_elem=(250, 500, 750)))
    medians = [by_length.median_fwhm(n, 0.0) for n in (250, 500, 750)]
    assert medians[0] > medians[1] > medians[2]

    angles = tuple(math.radians(a) for a in (0, 30, 60))
    by_angle = run_campaign(EnsembleConfig(master_seed=5, count=6, n_elem=(250,), theta=angles))
    medians = [by_angle.median_fwhm(250, theta) for theta in angles]
    assert medians[0] > medians[1] > medians[2]
