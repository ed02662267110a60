import numpy as np
import pytest

from wavqrs.band_select import cross_correlation, select_band
from wavqrs.errors import ShapeError, UndefinedCorrelationError
from wavqrs.evaluation import synth_ecg
from wavqrs.wavelet_core import dwt, reconstruct_band

FS = 360.0


def _tone(freq, n=8192):
    return np.sin(2 * np.pi * freq * np.arange(n) / FS)


@pytest.mark.parametrize("x,y,expected", [
    ([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], 100.0),
    ([1.0, -2.0, 0.5], [-1.0, 2.0, -0.5], -100.0),
    ([1.0, 0.0], [0.0, 1.0], 0.0),
])
def test_cross_correlation_examples(x, y, expected):
    assert cross_correlation(x, y) == pytest.approx(expected, abs=1e-12)


def test_cross_correlation_bounded():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = rng.integers(1, 200)
        x, y = rng.standard_normal((2, n)) * rng.lognormal(0, 5, 2)[:, None]
        assert abs(cross_correlation(x, y)) <= 100.0


def test_cross_correlation_extreme_scales():
    x = np.array([1e-200, 2e-200])
    y = np.array([1e200, 2e200])
    assert cross_correlation(x, y) == pytest.approx(100.0)


def test_cross_correlation_errors():
    with pytest.raises(ShapeError):
        cross_correlation([1, 2], [1, 2, 3])
    with pytest.raises(ShapeError):
        cross_correlation([], [])
    with pytest.raises(UndefinedCorrelationError):
        cross_correlation([0, 0], [1, 2])


def test_physical_d4_tone_selects_level_4():
    best, scores = select_band(_tone(16.0))
    assert best == 4
    assert [s.level for s in scores] == list(range(1, 9))


def test_ten_hz_tone_selects_level_5():
    # 10 Hz lies in d5 (5.625-11.25 Hz) at fs 360.
    best, _ = select_band(_tone(10.0))
    assert best == 5


def test_band_fixed_point():
    rng = np.random.default_rng(1)
    x = reconstruct_band(dwt(rng.standard_normal(4096), 8), 3)
    best, scores = select_band(x)
    assert best == 3
    assert scores[2].score == pytest.approx(100.0, abs=1e-6)


@pytest.mark.parametrize("scale", [1e-6, 0.5, 3.0, 1e6])
def test_scale_invariance(scale):
    sig, _ = synth_ecg(duration_s=20, baseline_amplitude=1.0, seed=3)
    best, scores = select_band(sig)
    best_s, scores_s = select_band(sig.samples * scale)
    assert best_s == best
    assert np.allclose([s.score for s in scores_s], [s.score for s in scores], atol=1e-9)


def test_raw_reference_and_workers_agree():
    sig, _ = synth_ecg(duration_s=20, seed=4)
    serial = select_band(sig, reference="raw")
    parallel = select_band(sig, reference="raw", workers=4)
    assert serial == parallel
    with pytest.raises(ValueError):
        select_band(sig, reference="other")


def test_ties_go_to_lower_level():
    # Every band of an all-zero input scores 0, so the tie resolves to d1.
    best, scores = select_band(np.zeros(1024), reference="raw")
    assert best == 1
    assert all(s.score == 0.0 for s in scores)
