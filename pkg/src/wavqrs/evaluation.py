"""Beat-by-beat scoring of detections against reference annotations."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .errors import OrderingError, ProcessingError, UndefinedSensitivityError, WavqrsError
from .qrs_detector import DetectorConfig, detect, seconds_to_samples
from .wavelet_core import Signal
from .wfdb_io import beat_samples, load_record, read_annotations, record_files

log = logging.getLogger(__name__)

DEFAULT_TOLERANCE_S = 0.150


@dataclass(frozen=True)
class MatchResult:
    tp: int
    fn: int
    fp: int
    pairs: list
    tolerance_s: float

    @property
    def sensitivity(self) -> float:
        return sensitivity(self.tp, self.fn)


def _check_ascending(values: np.ndarray, what: str) -> None:
    if values.size > 1 and np.any(np.diff(values) < 0):
        raise OrderingError(f"{what} indices must be ascending")


def _max_matches(det: np.ndarray, used: np.ndarray, ref: np.ndarray, tol: int) -> int:
    # Earliest-available greedy: exact maximum for equal windows on sorted data.
    count = 0
    k = 0
    n = len(det)
    for r in ref:
        while k < n and (used[k] or det[k] < r - tol):
            k += 1
        if k < n and det[k] <= r + tol:
            count += 1
            k += 1
    return count


def match_beats(detected, reference, fs: float, tolerance_s: float = DEFAULT_TOLERANCE_S) -> MatchResult:
    """One-to-one matching of detections to references.

    A pair is allowed when the two indices are at most
    ``round(tolerance_s * fs)`` samples apart.  References are visited in
    order and each takes the nearest unmatched detection in its window (the
    earlier one on a distance tie), except that a choice which would lower
    the total number of matches is passed over.  TP is therefore always the
    maximum achievable; with well-separated beats this is plain
    nearest-neighbour matching.
    """
    det = np.asarray(detected, dtype=np.int64)
    ref = np.asarray(reference, dtype=np.int64)
    _check_ascending(det, "detected")
    _check_ascending(ref, "reference")
    tol = seconds_to_samples(tolerance_s, fs)

    used = np.zeros(len(det), dtype=bool)
    pairs = []
    for i, r in enumerate(ref):
        lo = np.searchsorted(det, r - tol, side="left")
        hi = np.searchsorted(det, r + tol, side="right")
        candidates = [k for k in range(lo, hi) if not used[k]]
        if not candidates:
            continue
        candidates.sort(key=lambda k: (abs(det[k] - r), det[k]))
        rest = ref[i + 1:]
        next_lo = rest[0] - tol if len(rest) else None
        target = None
        chosen = None
        for k in candidates:
            if next_lo is None or det[k] < next_lo:
                chosen = k  # no later reference can use it
                break
            if target is None:
                target = _max_matches(det, used, ref[i:], tol)
            used[k] = True
            feasible = 1 + _max_matches(det, used, rest, tol) == target
            used[k] = False
            if feasible:
                chosen = k
                break
        if chosen is not None:
            used[chosen] = True
            pairs.append((int(det[chosen]), int(r)))
    tp = len(pairs)
    return MatchResult(tp=tp, fn=len(ref) - tp, fp=len(det) - tp, pairs=pairs,
                       tolerance_s=tolerance_s)


def sensitivity(tp: int, fn: int) -> float:
    """``100 * TP / (TP + FN)``."""
    if tp < 0 or fn < 0:
        raise ProcessingError("counts must be non-negative")
    if tp + fn == 0:
        raise UndefinedSensitivityError("sensitivity is undefined with no reference beats")
    return 100.0 * tp / (tp + fn)


def round_half_up(value: float, places: int = 2) -> Decimal:
    return Decimal(repr(value)).quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)


@dataclass
class EvalRow:
    record: str
    tb: int = 0
    tp: int = 0
    fn: int = 0
    fp: int = 0
    n_detected: int = 0
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def se(self) -> Optional[float]:
        if not self.ok or self.tb == 0:
            return None
        return sensitivity(self.tp, self.fn)


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)
    tolerance_s: float = DEFAULT_TOLERANCE_S

    @property
    def scored(self) -> list:
        return [r for r in self.rows if r.ok]

    @property
    def aggregate(self) -> EvalRow:
        rows = self.scored
        return EvalRow(
            record="All",
            tb=sum(r.tb for r in rows),
            tp=sum(r.tp for r in rows),
            fn=sum(r.fn for r in rows),
            fp=sum(r.fp for r in rows),
            n_detected=sum(r.n_detected for r in rows),
        )

    def table_rows(self) -> list[list[str]]:
        out = []
        for row in [*self.rows, self.aggregate] if self.rows else []:
            if not row.ok:
                out.append([row.record, "-", "-", "-", "-", "-"])
                continue
            se = row.se
            out.append([row.record, str(row.tb), str(row.tp), str(row.fn), str(row.fp),
                        "-" if se is None else str(round_half_up(se))])
        return out

    def to_text(self) -> str:
        header = ["Record", "TB", "TP", "FN", "FP", "Se (%)"]
        rows = self.table_rows()
        widths = [max(len(header[i]), *(len(r[i]) for r in rows)) if rows else len(header[i])
                  for i in range(len(header))]
        lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
        lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows]
        for row in self.rows:
            if not row.ok:
                lines.append(f"warning: {row.record}: {row.error}")
        lines.append(f"match tolerance: +/-{self.tolerance_s * 1000:g} ms")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        lines = ["record,tb,tp,fn,fp,se_percent,error"]
        for row in [*self.rows, self.aggregate]:
            se = row.se
            se_text = "" if se is None else str(round_half_up(se))
            error = (row.error or "").replace(",", ";").replace("\n", " ")
            if row.ok:
                lines.append(f"{row.record},{row.tb},{row.tp},{row.fn},{row.fp},{se_text},")
            else:
                lines.append(f"{row.record},,,,,,{error}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        def as_dict(row):
            se = row.se
            return {"record": row.record, "tb": row.tb, "tp": row.tp, "fn": row.fn, "fp": row.fp,
                    "se_percent": None if se is None else float(round_half_up(se)),
                    "error": row.error}
        return {"rows": [as_dict(r) for r in self.rows], "aggregate": as_dict(self.aggregate),
                "tolerance_s": self.tolerance_s}


def evaluate_signal(signal: Signal, reference, config: DetectorConfig | None = None,
                    tolerance_s: float = DEFAULT_TOLERANCE_S, record: str = "") -> EvalRow:
    result = detect(signal, config)
    ref = np.asarray(reference, dtype=np.int64)
    match = match_beats(result.r_peaks, ref, signal.fs, tolerance_s)
    return EvalRow(record=record or signal.label, tb=len(ref), tp=match.tp, fn=match.fn,
                   fp=match.fp, n_detected=result.n_qrs)


def evaluate_record(record: Union[str, Path], config: DetectorConfig | None = None,
                    channel=None, tolerance_s: float = DEFAULT_TOLERANCE_S,
                    annotator: str = "atr") -> EvalRow:
    """Detect beats in one WFDB record and score them against its annotations."""
    files = record_files(record, annotator)
    name = Path(record).name.split(".")[0]
    if files.annotations is None:
        raise FileNotFoundError(f"no .{annotator} annotation file for record {record}")
    header, signal = load_record(files.header, channel)
    annotations = read_annotations(files.annotations, header.fs)
    return evaluate_signal(signal, beat_samples(annotations), config, tolerance_s, name)


def evaluate_records(records: Sequence, config: DetectorConfig | None = None, channel=None,
                     tolerance_s: float = DEFAULT_TOLERANCE_S, workers: int = 1) -> EvalReport:
    """Evaluate several records; failures become error rows, not exceptions."""

    def run(record):
        name = Path(record).name.split(".")[0]
        try:
            return evaluate_record(record, config, channel, tolerance_s)
        except (OSError, WavqrsError) as exc:
            log.warning("record %s skipped: %s", name, exc)
            return EvalRow(record=name, error=str(exc))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, records))
    else:
        rows = [run(r) for r in records]
    return EvalReport(rows=rows, tolerance_s=tolerance_s)


def _ricker(t: np.ndarray, sigma: float) -> np.ndarray:
    u = (t / sigma) ** 2
    return (1.0 - u) * np.exp(-u / 2.0)


def synth_ecg(fs: float = 360.0, heart_rate_bpm: float = 72.0, duration_s: float = 60.0,
              qrs_width_s: float = 0.08, baseline_amplitude: float = 0.0,
              baseline_hz: float = 0.3, jitter_s: float = 0.0, amplitude: float = 1.0,
              seed: int = 0) -> tuple[Signal, np.ndarray]:
    """Train of QRS-like pulses with known centres.

    Each beat is a negated second derivative of a Gaussian (a Ricker pulse)
    whose central lobe peaks at the beat centre; ``qrs_width_s`` spans
    ``±3`` standard deviations.  Beat ``k`` sits at ``period/2 + k*period``
    plus uniform jitter in ``±jitter_s``.  An optional sinusoidal baseline
    of ``baseline_amplitude`` (in units of the QRS amplitude) at
    ``baseline_hz`` is added.  Returns the signal and the beat centre
    indices.
    """
    for name, value in (("fs", fs), ("heart_rate_bpm", heart_rate_bpm),
                        ("duration_s", duration_s), ("qrs_width_s", qrs_width_s),
                        ("amplitude", amplitude)):
        if not value > 0:
            raise ProcessingError(f"{name} must be positive, got {value}")
    if baseline_amplitude < 0 or jitter_s < 0 or baseline_hz < 0:
        raise ProcessingError("baseline_amplitude, baseline_hz and jitter_s must be non-negative")
    period_s = 60.0 / heart_rate_bpm
    if qrs_width_s >= period_s:
        raise ProcessingError("qrs_width_s must be shorter than the beat period")
    if 2 * jitter_s >= period_s - qrs_width_s:
        raise ProcessingError("jitter_s too large for the beat period")

    rng = np.random.default_rng(seed)
    n = int(round(duration_s * fs))
    n_beats = int(np.floor(duration_s / period_s))
    centres_s = period_s / 2 + period_s * np.arange(n_beats)
    if jitter_s > 0:
        centres_s = centres_s + rng.uniform(-jitter_s, jitter_s, n_beats)
    centres = np.round(centres_s * fs).astype(np.int64)
    centres = centres[(centres >= 0) & (centres < n)]

    t = np.arange(n)
    x = np.zeros(n)
    sigma = qrs_width_s * fs / 6.0
    half = int(np.ceil(4 * sigma))
    kernel_t = np.arange(-half, half + 1)
    kernel = amplitude * _ricker(kernel_t, sigma)
    for c in centres:
        lo, hi = max(c - half, 0), min(c + half + 1, n)
        x[lo:hi] += kernel[lo - (c - half):hi - (c - half)]
    if baseline_amplitude > 0:
        x += baseline_amplitude * amplitude * np.sin(2 * np.pi * baseline_hz * t / fs)
    return Signal(x, fs=fs, label="synthetic"), centres
