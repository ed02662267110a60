"""Zero-lag correlation scoring of reconstructed detail bands."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ShapeError, UndefinedCorrelationError
from .preprocess import DEFAULT_LEVELS, remove_baseline
from .wavelet_core import FilterBank, Signal, dwt, reconstruct_band


@dataclass(frozen=True)
class BandScore:
    level: int
    score: float


def cross_correlation(x, y) -> float:
    """Normalized zero-lag correlation of ``x`` and ``y`` in percent."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) == 0:
        raise ShapeError(f"need two equal-length non-empty sequences, got {x.shape} and {y.shape}")
    # Normalize first so the energy product cannot overflow or underflow.
    sx = np.max(np.abs(x))
    sy = np.max(np.abs(y))
    if sx == 0 or sy == 0:
        raise UndefinedCorrelationError("correlation is undefined for an all-zero sequence")
    x = x / sx
    y = y / sy
    c = 100.0 * np.dot(x, y) / np.sqrt(np.dot(x, x) * np.dot(y, y))
    return float(np.clip(c, -100.0, 100.0))


def select_band(x, levels: int = DEFAULT_LEVELS, bank: Union[str, FilterBank, None] = None,
                reference: str = "baseline-removed", workers: int | None = None):
    """Score every detail band against the ECG and return the best level.

    Each band ``d1..dJ`` is rebuilt alone at the original rate and compared
    with the reference signal: the baseline-removed input by default, or the
    input itself with ``reference="raw"``.  Ties go to the lower level.

    Returns ``(best_level, [BandScore, ...])`` with scores ordered by level.
    A band that reconstructs to all zeros scores 0.
    """
    samples = x.samples if isinstance(x, Signal) else np.asarray(x, dtype=float)
    decomposition = dwt(samples, levels, bank)
    if reference == "raw":
        ref = samples
    elif reference == "baseline-removed":
        ref = remove_baseline(samples, levels, decomposition.bank)
    else:
        raise ValueError(f"reference must be 'raw' or 'baseline-removed', got {reference!r}")

    def score(j):
        band = reconstruct_band(decomposition, j)
        if not np.any(band):
            return BandScore(j, 0.0)
        return BandScore(j, cross_correlation(ref, band))

    levels_range = range(1, levels + 1)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(score, levels_range))
    else:
        scores = [score(j) for j in levels_range]
    best = max(scores, key=lambda s: (s.score, -s.level))
    return best.level, scores
