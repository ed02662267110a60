from collections import Counter
from decimal import Decimal

import numpy as np
import pytest

from wavqrs.errors import OrderingError, ProcessingError, UndefinedSensitivityError
from wavqrs.evaluation import (
    EvalReport,
    EvalRow,
    evaluate_record,
    evaluate_records,
    match_beats,
    round_half_up,
    sensitivity,
    synth_ecg,
)
from wavqrs.qrs_detector import detect

from records import write_record

FS = 360.0


def _max_matching(det, ref, tol):
    """Kuhn's augmenting-path maximum bipartite matching."""
    owner = {}

    def augment(r, seen):
        for k, d in enumerate(det):
            if abs(d - ref[r]) <= tol and k not in seen:
                seen.add(k)
                if k not in owner or augment(owner[k], seen):
                    owner[k] = r
                    return True
        return False

    return sum(augment(r, set()) for r in range(len(ref)))


def test_identity():
    ref = [100, 500, 900]
    m = match_beats(ref, ref, FS)
    assert (m.tp, m.fn, m.fp) == (3, 0, 0)
    assert m.pairs == [(100, 100), (500, 500), (900, 900)]


def test_no_detections():
    m = match_beats([], [1, 2, 3, 4, 5], FS)
    assert (m.tp, m.fn, m.fp) == (0, 5, 0)
    assert m.sensitivity == 0.0


def test_tolerance_edge():
    tol = round(0.150 * FS)
    assert match_beats([1000 + tol], [1000], FS).tp == 1
    assert match_beats([1000 + tol + 1], [1000], FS).tp == 0


def test_nearest_chosen():
    m = match_beats([950, 990], [1000], FS)
    assert m.pairs == [(990, 1000)] and m.fp == 1


def test_unsorted_rejected():
    with pytest.raises(OrderingError):
        match_beats([5, 1], [1, 5], FS)
    with pytest.raises(OrderingError):
        match_beats([1, 5], [5, 1], FS)


@pytest.mark.parametrize("spacing", [20, 60, 150])
def test_matches_optimal_oracle(spacing):
    rng = np.random.default_rng(spacing)
    tol = round(0.150 * FS)
    for _ in range(300):
        n_ref = int(rng.integers(0, 50))
        n_det = int(rng.integers(0, 50))
        ref = np.sort(rng.integers(0, spacing * max(n_ref, 1) + 1, n_ref))
        det = np.sort(rng.integers(0, spacing * max(n_ref, 1) + 1, n_det))
        m = match_beats(det, ref, FS)
        assert m.tp == _max_matching(det.tolist(), ref.tolist(), tol)
        assert m.tp + m.fn == len(ref) and m.tp + m.fp == len(det)
        assert all(abs(d - r) <= tol for d, r in m.pairs)
        # One-to-one: no sample value is used more often than it occurs.
        for side, values in ((0, det), (1, ref)):
            used, available = Counter(p[side] for p in m.pairs), Counter(values.tolist())
            assert all(used[v] <= available[v] for v in used)


def test_sensitivity_values():
    assert sensitivity(1535, 0) == 100.0
    assert round_half_up(sensitivity(1535, 0)) == Decimal("100.00")
    assert round_half_up(sensitivity(1967, 60)) == Decimal("97.04")
    assert abs(round_half_up(sensitivity(1967, 60)) - Decimal("97.03")) <= Decimal("0.01")
    assert round_half_up(sensitivity(10936, 243)) == Decimal("97.83")


def test_sensitivity_errors_and_monotone():
    with pytest.raises(UndefinedSensitivityError):
        sensitivity(0, 0)
    with pytest.raises(ProcessingError):
        sensitivity(-1, 3)
    values = [sensitivity(tp, 100 - tp) for tp in range(101)]
    assert values == sorted(values)


def test_report_aggregate_from_counts():
    rows = [EvalRow("a", tb=10, tp=10, fn=0), EvalRow("b", tb=1000, tp=900, fn=100),
            EvalRow("c", error="missing")]
    report = EvalReport(rows)
    agg = report.aggregate
    assert (agg.tb, agg.tp, agg.fn) == (1010, 910, 100)
    assert agg.se == pytest.approx(100 * 910 / 1010)
    assert agg.se != pytest.approx((100 + 90) / 2)
    text = report.to_text()
    assert "warning: c: missing" in text and "150 ms" in text
    csv_lines = report.to_csv().splitlines()
    assert csv_lines[0] == "record,tb,tp,fn,fp,se_percent,error"
    assert csv_lines[-1].startswith("All,1010,910,100,")
    assert report.to_dict()["aggregate"]["se_percent"] == 90.1


def test_synth_examples():
    sig, centres = synth_ecg(fs=360, heart_rate_bpm=60, duration_s=10, seed=1)
    assert len(centres) == 10
    assert np.array_equal(np.diff(centres), np.full(9, 360))
    assert centres[0] == 180
    assert np.argmax(sig.samples[:360]) == 180
    again, _ = synth_ecg(fs=360, heart_rate_bpm=60, duration_s=10, seed=1)
    assert np.array_equal(sig.samples, again.samples)


@pytest.mark.parametrize("kwargs", [
    {"fs": 0}, {"heart_rate_bpm": -1}, {"qrs_width_s": 2.0, "heart_rate_bpm": 60},
    {"jitter_s": 0.5}, {"baseline_amplitude": -1},
])
def test_synth_errors(kwargs):
    with pytest.raises(ProcessingError):
        synth_ecg(**kwargs)


@pytest.mark.parametrize("bpm", [50, 75, 100])
def test_bpm_recovered(bpm):
    sig, _ = synth_ecg(heart_rate_bpm=bpm, duration_s=60, seed=bpm)
    assert abs(detect(sig).n_qrs - bpm) <= 1


def test_evaluate_synthetic_record(tmp_path):
    sig, centres = synth_ecg(duration_s=60, baseline_amplitude=3.0, seed=11)
    path = write_record(tmp_path, "syn", sig, centres)
    row = evaluate_record(path)
    assert row.record == "syn"
    assert (row.tb, row.tp, row.fn, row.fp) == (len(centres), len(centres), 0, 0)
    assert row.se == 100.0


def test_evaluate_records_with_missing(tmp_path):
    sig, centres = synth_ecg(duration_s=30, seed=12)
    good = write_record(tmp_path, "good", sig, centres)
    report = evaluate_records([good, tmp_path / "absent"], workers=2)
    assert [r.record for r in report.rows] == ["good", "absent"]
    assert report.rows[0].ok and not report.rows[1].ok
    assert report.aggregate.tb == len(centres)
    serial = evaluate_records([good, tmp_path / "absent"])
    assert [(r.tp, r.error) for r in serial.rows] == [(r.tp, r.error) for r in report.rows]


def test_missing_annotations(tmp_path):
    sig, centres = synth_ecg(duration_s=10, seed=13)
    path = write_record(tmp_path, "noann", sig, centres)
    (tmp_path / "noann.atr").unlink()
    with pytest.raises(FileNotFoundError):
        evaluate_record(path)
