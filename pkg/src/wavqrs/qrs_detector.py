"""Threshold-based R-peak detection on a single reconstructed detail band.

Pipeline: baseline removal, DWT, rebuild one detail band at the original
rate (``yc``), keep samples with ``|yc| >= ratio * max|yc|``, merge kept
indices closer than the minimum QRS gap into events, take the R peak as the
largest ``|ecg|`` around each event, then suppress peaks inside the
refractory period.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .band_select import select_band
from .errors import BandError, ConfigError, ProcessingError
from .preprocess import DEFAULT_LEVELS
from .wavelet_core import EXT_MODES, Signal, dwt, get_bank, reconstruct_band

log = logging.getLogger(__name__)

BAND_MODES = ("fixed", "auto")
REFRACTORY_POLICIES = ("larger", "earlier")
PEAK_REFERENCES = ("median", "zero")


@dataclass(frozen=True)
class DetectorConfig:
    threshold_ratio: float = 0.15
    min_qrs_gap_s: float = 0.100
    refractory_s: float = 0.200
    peak_search_pad_s: float = 0.050
    level: int = 4
    decomposition_levels: int = DEFAULT_LEVELS
    band_mode: str = "fixed"
    refractory_policy: str = "larger"
    wavelet: str = "db4"
    # Periodic wrap would carry end-of-record transients to sample 0.
    ext_mode: str = "symmetric"
    # Peak magnitude is measured from the search window's median by default,
    # so slow residual drift cannot promote a Q or S wave over the R wave.
    peak_reference: str = "median"

    def __post_init__(self):
        if not 0 < self.threshold_ratio < 1:
            raise ConfigError(f"threshold_ratio must be in (0, 1), got {self.threshold_ratio}")
        if not self.min_qrs_gap_s > 0:
            raise ConfigError(f"min_qrs_gap_s must be positive, got {self.min_qrs_gap_s}")
        if self.refractory_s < self.min_qrs_gap_s:
            raise ConfigError("refractory_s must be at least min_qrs_gap_s")
        if self.peak_search_pad_s < 0:
            raise ConfigError("peak_search_pad_s must be non-negative")
        if self.decomposition_levels < 1:
            raise ConfigError("decomposition_levels must be >= 1")
        if not 1 <= self.level <= self.decomposition_levels:
            raise ConfigError(
                f"level must be in 1..{self.decomposition_levels}, got {self.level}"
            )
        if self.band_mode not in BAND_MODES:
            raise ConfigError(f"band_mode must be one of {BAND_MODES}")
        if self.refractory_policy not in REFRACTORY_POLICIES:
            raise ConfigError(f"refractory_policy must be one of {REFRACTORY_POLICIES}")
        get_bank(self.wavelet)
        if self.ext_mode not in EXT_MODES:
            raise ConfigError(f"ext_mode must be one of {EXT_MODES}")
        if self.peak_reference not in PEAK_REFERENCES:
            raise ConfigError(f"peak_reference must be one of {PEAK_REFERENCES}")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class QrsEvent:
    start: int
    end: int
    r_peak: int
    peak_amplitude: float


@dataclass(frozen=True)
class DetectionResult:
    events: list
    yc: np.ndarray
    threshold: float
    fs: float
    config: DetectorConfig
    level: int
    degenerate: bool = False
    filtered: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def r_peaks(self) -> np.ndarray:
        return np.array([e.r_peak for e in self.events], dtype=np.int64)

    @property
    def n_qrs(self) -> int:
        return len(self.events)


def seconds_to_samples(seconds: float, fs: float) -> int:
    return int(round(seconds * fs))


def threshold_indices(yc, ratio: float = 0.15) -> tuple[np.ndarray, float]:
    """Indices where ``|yc|`` reaches ``ratio * max|yc|``, and that threshold.

    An all-zero ``yc`` gives no indices and a threshold of 0.
    """
    yc = np.asarray(yc, dtype=float)
    if yc.size == 0:
        raise ProcessingError("yc is empty")
    if not 0 < ratio < 1:
        raise ConfigError(f"ratio must be in (0, 1), got {ratio}")
    mag = np.abs(yc)
    peak = mag.max()
    if peak == 0:
        return np.array([], dtype=np.int64), 0.0
    th = ratio * peak
    return np.flatnonzero(mag >= th), float(th)


def group_events(indices, fs: float, min_gap_s: float = 0.100) -> list[tuple[int, int]]:
    """Merge ascending indices into ``(start, end)`` spans.

    Consecutive indices less than ``round(min_gap_s * fs)`` samples apart
    belong to the same span.
    """
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        return []
    if not fs > 0:
        raise ProcessingError("fs must be positive")
    gap = seconds_to_samples(min_gap_s, fs)
    breaks = np.flatnonzero(np.diff(idx) >= gap)
    starts = np.concatenate(([idx[0]], idx[breaks + 1]))
    ends = np.concatenate((idx[breaks], [idx[-1]]))
    return [(int(s), int(e)) for s, e in zip(starts, ends)]


def locate_r_peaks(spans, filtered, fs: float, pad_s: float = 0.050,
                   refractory_s: float = 0.200, policy: str = "larger",
                   reference: str = "zero") -> list[QrsEvent]:
    """Find the R peak of each span and apply the refractory rule.

    The peak is the argmax of ``|filtered - ref|`` over the span widened by
    ``pad_s`` on both sides, where ``ref`` is 0 (``reference="zero"``) or the
    median of that window (``reference="median"``).  Of two peaks closer
    than ``refractory_s``, the one with the larger magnitude survives
    (``policy="larger"``) or the earlier one (``policy="earlier"``).
    """
    filtered = filtered.samples if isinstance(filtered, Signal) else np.asarray(filtered, dtype=float)
    n = len(filtered)
    pad = seconds_to_samples(pad_s, fs)
    refractory = seconds_to_samples(refractory_s, fs)
    if policy not in REFRACTORY_POLICIES:
        raise ConfigError(f"policy must be one of {REFRACTORY_POLICIES}")
    if reference not in PEAK_REFERENCES:
        raise ConfigError(f"reference must be one of {PEAK_REFERENCES}")

    candidates = []
    for start, end in spans:
        if start < 0 or end >= n or end < start:
            raise BandError(f"span ({start}, {end}) outside signal of {n} samples")
        lo = max(start - pad, 0)
        hi = min(end + pad, n - 1)
        window = filtered[lo:hi + 1]
        level = np.median(window) if reference == "median" else 0.0
        offset = int(np.argmax(np.abs(window - level)))
        r = lo + offset
        candidates.append(QrsEvent(start, end, r, float(window[offset] - level)))
    candidates.sort(key=lambda e: e.r_peak)

    kept: list[QrsEvent] = []
    for event in candidates:
        if kept and event.r_peak - kept[-1].r_peak < refractory:
            if policy == "larger" and abs(event.peak_amplitude) > abs(kept[-1].peak_amplitude):
                kept[-1] = event
            continue
        kept.append(event)
    return kept


def detect(x: Signal, config: DetectorConfig | None = None) -> DetectionResult:
    """Run the full detector on ``x``.

    A flat input yields no events and ``degenerate=True`` rather than an
    error.
    """
    config = config or DetectorConfig()
    if not isinstance(x, Signal):
        raise ProcessingError("detect needs a Signal (samples plus sampling rate)")
    J = config.decomposition_levels
    bank = get_bank(config.wavelet)
    if len(x) < 2 ** J:
        raise ProcessingError(f"{len(x)} samples are too few for {J} decomposition levels")

    # One decomposition serves both the baseline-removed ECG and yc.
    decomposition = dwt(x.samples, J, bank, config.ext_mode)
    filtered = reconstruct_band(decomposition, "details")

    level = config.level
    if config.band_mode == "auto" and np.any(filtered):
        level, _ = select_band(x.samples, J, bank)
    yc = reconstruct_band(decomposition, level)

    indices, th = threshold_indices(yc, config.threshold_ratio)
    degenerate = th == 0.0
    if degenerate:
        log.warning("flat band d%d in %s: no threshold, no events", level, x.label or "signal")
        events = []
    else:
        spans = group_events(indices, x.fs, config.min_qrs_gap_s)
        events = locate_r_peaks(spans, filtered, x.fs, config.peak_search_pad_s,
                                config.refractory_s, config.refractory_policy,
                                config.peak_reference)
    return DetectionResult(
        events=events,
        yc=yc,
        threshold=th,
        fs=x.fs,
        config=config,
        level=level,
        degenerate=degenerate,
        filtered=filtered,
    )
