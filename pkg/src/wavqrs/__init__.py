"""Wavelet-based QRS detection for single-lead ECG."""

__version__ = "0.1.0"

from .band_select import BandScore, cross_correlation, select_band
from .evaluation import (
    EvalReport,
    EvalRow,
    MatchResult,
    evaluate_record,
    evaluate_records,
    match_beats,
    sensitivity,
    synth_ecg,
)
from .preprocess import BandRange, band_frequencies, band_table, remove_baseline
from .qrs_detector import (
    DetectionResult,
    DetectorConfig,
    QrsEvent,
    detect,
    group_events,
    locate_r_peaks,
    threshold_indices,
)
from .wavelet_core import (
    Decomposition,
    FilterBank,
    Signal,
    dwt,
    dwt_step,
    idwt,
    make_db4,
    make_haar,
    qmf_highpass,
    reconstruct_band,
    synthesis_filters,
)
from .wfdb_io import Annotation, RecordHeader, read_annotations, read_csv, read_header, read_signal_212
