"""Two-channel orthogonal filter bank and the dyadic DWT built on it.

Filters are stored 0-based.  The quadrature-mirror relations are written
here with 1-based ``n = 1..L`` so they read the same as the textbook form::

    h1(n) = (-1)**n     * h0(L + 1 - n)      analysis high-pass
    g0(n) =               h0(L + 1 - n)      synthesis low-pass
    g1(n) = (-1)**(n-1) * h0(n)              synthesis high-pass

``g1`` is the time reverse of ``h1``.  The variant ``(-1)**(n-1) h0(L+1-n)``
that is sometimes printed for ``g1`` equals ``-h1`` and only reconstructs
for palindromic filters such as Haar; see ``tests/test_wavelet_core.py``.

Coefficient ``k`` of every band is centred on input sample ``2k + 1/2``
(relative to the level's input), the same phase PyWavelets uses for its
``periodization`` mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    BandError,
    CorruptDecompositionError,
    InvalidFilterError,
    LevelError,
    ProcessingError,
    TooShortError,
)

EXT_MODES = ("periodic", "symmetric")

# Daubechies scaling filter with 4 vanishing moments (8 taps), analysis
# orientation.  Often called "db4"; not the 4-tap filter sometimes named D4.
_DB4_H0 = (
    -0.010597401785069032,
    0.0328830116668852,
    0.030841381835560764,
    -0.18703481171909309,
    -0.027983769416859854,
    0.6308807679298589,
    0.7148465705529157,
    0.2303778133088965,
)


@dataclass(frozen=True)
class Signal:
    """Uniformly sampled single-channel waveform."""

    samples: np.ndarray
    fs: float
    label: str = ""
    f_max: float | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise ProcessingError("signal samples must be one-dimensional")
        if not self.fs > 0:
            raise ProcessingError(f"sampling rate must be positive, got {self.fs}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return len(self.samples)

    @property
    def content_bandwidth(self) -> float:
        """Configured highest frequency of interest, Nyquist if unset."""
        return self.f_max if self.f_max is not None else self.fs / 2.0

    def with_samples(self, samples) -> "Signal":
        return replace(self, samples=samples)


@dataclass(frozen=True)
class FilterBank:
    h0: np.ndarray
    h1: np.ndarray
    g0: np.ndarray
    g1: np.ndarray
    name: str = ""

    def __post_init__(self):
        lengths = set()
        for attr in ("h0", "h1", "g0", "g1"):
            arr = np.asarray(getattr(self, attr), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)
            lengths.add(len(arr))
        if len(lengths) != 1:
            raise InvalidFilterError("all four filters must have the same length")

    @property
    def length(self) -> int:
        return len(self.h0)

    @classmethod
    def from_lowpass(cls, h0: Sequence[float], name: str = "") -> "FilterBank":
        h0 = _check_filter(h0)
        g0, g1 = synthesis_filters(h0)
        return cls(h0=h0, h1=qmf_highpass(h0), g0=g0, g1=g1, name=name)


@dataclass(frozen=True)
class Decomposition:
    """Approximation at level J plus detail bands d1 (finest) .. dJ.

    ``pad_left`` and ``padded_length`` describe the extension applied before
    the periodic transform; they let :func:`idwt` return a signal aligned
    with, and as long as, the original input.
    """

    approx: np.ndarray
    details: tuple
    levels: int
    original_length: int
    bank: FilterBank
    ext_mode: str = "periodic"
    pad_left: int = 0
    padded_length: int = field(default=0)

    def __post_init__(self):
        approx = np.asarray(self.approx, dtype=float)
        approx.setflags(write=False)
        object.__setattr__(self, "approx", approx)
        details = []
        for d in self.details:
            d = np.asarray(d, dtype=float)
            d.setflags(write=False)
            details.append(d)
        object.__setattr__(self, "details", tuple(details))
        if self.padded_length == 0:
            object.__setattr__(self, "padded_length", self.original_length)

    def detail(self, j: int) -> np.ndarray:
        """Detail band ``d_j`` with 1-based ``j``."""
        if not 1 <= j <= self.levels:
            raise BandError(f"detail level {j} outside 1..{self.levels}")
        return self.details[j - 1]

    def bands(self) -> list:
        return [self.approx, *self.details]

    def map_bands(self, fn) -> "Decomposition":
        return replace(
            self,
            approx=fn("approx", self.approx),
            details=tuple(fn(j, d) for j, d in enumerate(self.details, start=1)),
        )

    def __add__(self, other: "Decomposition") -> "Decomposition":
        return self.map_bands(
            lambda key, band: band + (other.approx if key == "approx" else other.detail(key))
        )

    def __mul__(self, scale: float) -> "Decomposition":
        return self.map_bands(lambda _key, band: band * scale)

    __rmul__ = __mul__


def _check_filter(h0) -> np.ndarray:
    h0 = np.asarray(h0, dtype=float)
    if h0.ndim != 1 or len(h0) == 0:
        raise InvalidFilterError("filter must be a non-empty 1-D sequence")
    if len(h0) % 2:
        raise InvalidFilterError(f"filter length must be even, got {len(h0)}")
    return h0


def qmf_highpass(h0: Sequence[float]) -> np.ndarray:
    """Analysis high-pass ``h1(n) = (-1)**n h0(L+1-n)``, n = 1..L."""
    h0 = _check_filter(h0)
    n = np.arange(1, len(h0) + 1)
    return (-1.0) ** n * h0[::-1]


def synthesis_filters(h0: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Synthesis pair ``(g0, g1)`` for an orthonormal analysis low-pass.

    ``g0`` is ``h0`` reversed and ``g1`` is the analysis high-pass reversed,
    i.e. ``g1(n) = (-1)**(n-1) h0(n)``.
    """
    h0 = _check_filter(h0)
    n = np.arange(1, len(h0) + 1)
    return h0[::-1].copy(), (-1.0) ** (n - 1) * h0


def make_db4() -> FilterBank:
    return FilterBank.from_lowpass(_DB4_H0, name="db4")


def make_haar() -> FilterBank:
    s = 1.0 / math.sqrt(2.0)
    return FilterBank.from_lowpass([s, s], name="haar")


WAVELETS = {"db4": make_db4, "haar": make_haar}


def get_bank(name_or_bank: Union[str, FilterBank, None]) -> FilterBank:
    if name_or_bank is None:
        return make_db4()
    if isinstance(name_or_bank, FilterBank):
        return name_or_bank
    try:
        return WAVELETS[name_or_bank.lower()]()
    except KeyError:
        raise InvalidFilterError(
            f"unknown wavelet {name_or_bank!r}; choose from {sorted(WAVELETS)}"
        ) from None


def _as_array(x) -> np.ndarray:
    if isinstance(x, Signal):
        return x.samples
    return np.asarray(x, dtype=float)


def _circular_filter(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    # y[i] = sum_m taps[m] * x[(i - m) mod N]; taps longer than x wrap around.
    y = np.zeros_like(x)
    for m, c in enumerate(taps):
        y += c * np.roll(x, m)
    return y


def dwt_step(x, bank: FilterBank, ext_mode: str = "periodic") -> tuple[np.ndarray, np.ndarray]:
    """One analysis stage: filter with ``h0``/``h1`` and keep every other sample.

    The stage itself is periodic.  With ``ext_mode="symmetric"`` the input
    is first mirrored by ``L - 2`` samples at each end (``L`` the filter
    length) and the output covers the extended signal, so it is longer than
    ``len(x) / 2``; :func:`dwt` handles symmetric mode differently, by
    extending once at the top level.
    """
    x = _as_array(x)
    if len(x) < 2:
        raise TooShortError(f"need at least 2 samples, got {len(x)}")
    if ext_mode not in EXT_MODES:
        raise ProcessingError(f"unknown extension mode {ext_mode!r}")
    if ext_mode == "symmetric":
        pad = bank.length - 2
        x = np.pad(x, (pad, pad + (len(x) % 2)), mode="symmetric")
    elif len(x) % 2:
        x = np.pad(x, (0, 1), mode="symmetric")
    phase = bank.length // 2
    approx = np.roll(_circular_filter(x, bank.h0), -phase)[::2]
    detail = np.roll(_circular_filter(x, bank.h1), -phase)[::2]
    return approx, detail


def _synthesis_step(approx: np.ndarray, detail: np.ndarray, bank: FilterBank) -> np.ndarray:
    n = 2 * len(approx)
    up_a = np.zeros(n)
    up_a[::2] = approx
    up_d = np.zeros(n)
    up_d[::2] = detail
    y = _circular_filter(up_a, bank.g0) + _circular_filter(up_d, bank.g1)
    # Exact adjoint of the analysis phase.
    return np.roll(y, -(bank.length - 1 - bank.length // 2))


def max_level(n_samples: int) -> int:
    return int(math.floor(math.log2(n_samples))) if n_samples >= 1 else 0


def dwt(x, levels: int, bank: Union[str, FilterBank, None] = None,
        ext_mode: str = "periodic") -> Decomposition:
    """Multilevel forward DWT.

    Parameters
    ----------
    x : Signal or array_like
        Input samples.
    levels : int
        Number of decomposition levels ``J``, ``1 <= J <= floor(log2(len(x)))``.
    bank : FilterBank or str, optional
        Filter bank or wavelet name; db4 by default.
    ext_mode : {"periodic", "symmetric"}
        ``periodic`` treats the (padded) input as one period.  ``symmetric``
        mirrors the input at both ends before the periodic transform, which
        moves wrap-around artifacts away from the signal edges.

    Returns
    -------
    Decomposition
        Details are stored finest first.  When ``len(x)`` is not a multiple
        of ``2**J`` the input is mirrored on the right up to the next
        multiple; :func:`idwt` trims the padding again.
    """
    bank = get_bank(bank)
    x = _as_array(x)
    n = len(x)
    if n == 0:
        raise TooShortError("cannot transform an empty signal")
    if not isinstance(levels, (int, np.integer)) or not 1 <= levels <= max_level(n):
        raise LevelError(f"levels must be in 1..{max_level(n)} for {n} samples, got {levels}")
    if ext_mode not in EXT_MODES:
        raise ProcessingError(f"unknown extension mode {ext_mode!r}")

    block = 2 ** levels
    pad_left = 0
    if ext_mode == "symmetric":
        # Enough to cover the level-J filter support, rounded to whole blocks.
        support = (bank.length - 1) * (block - 1)
        pad_left = block * math.ceil(min(support, n) / block)
    total = pad_left + n
    pad_right = (-total) % block
    if ext_mode == "symmetric":
        pad_right += pad_left
    work = np.pad(x, (pad_left, pad_right), mode="symmetric") if (pad_left or pad_right) else x.copy()

    details = []
    approx = work
    for _ in range(levels):
        approx, detail = dwt_step(approx, bank, "periodic")
        details.append(detail)
    return Decomposition(
        approx=approx,
        details=tuple(details),
        levels=levels,
        original_length=n,
        bank=bank,
        ext_mode=ext_mode,
        pad_left=pad_left,
        padded_length=len(work),
    )


def idwt(d: Decomposition) -> np.ndarray:
    """Inverse of :func:`dwt`; returns ``original_length`` samples."""
    if len(d.details) != d.levels or d.levels < 1:
        raise CorruptDecompositionError(
            f"expected {d.levels} detail bands, found {len(d.details)}"
        )
    if d.padded_length % (2 ** d.levels):
        raise CorruptDecompositionError("padded length is not a multiple of 2**levels")
    expected = d.padded_length
    for j, detail in enumerate(d.details, start=1):
        expected //= 2
        if len(detail) != expected:
            raise CorruptDecompositionError(
                f"detail d{j} has {len(detail)} coefficients, expected {expected}"
            )
    if len(d.approx) != expected:
        raise CorruptDecompositionError(
            f"approximation has {len(d.approx)} coefficients, expected {expected}"
        )

    x = np.asarray(d.approx, dtype=float)
    for detail in reversed(d.details):
        x = _synthesis_step(x, detail, d.bank)
    return x[d.pad_left:d.pad_left + d.original_length].copy()


BandSelector = Union[str, int, Iterable]


def _normalize_selector(band: BandSelector, levels: int) -> tuple[bool, set]:
    """Return (keep_approx, set of kept detail levels)."""
    if isinstance(band, str):
        key = band.lower()
        if key in ("approx", "a", "c"):
            return True, set()
        if key in ("details", "all-details", "detail-set"):
            return False, set(range(1, levels + 1))
        if key.startswith("d") and key[1:].isdigit():
            band = int(key[1:])
        else:
            raise BandError(f"unknown band selector {band!r}")
    if isinstance(band, (int, np.integer)):
        band = [int(band)]
    keep_approx = False
    kept = set()
    for item in band:
        if isinstance(item, str) and item.lower() in ("approx", "a", "c"):
            keep_approx = True
            continue
        if isinstance(item, str):
            item = int(item.lower().lstrip("d"))
        if not 1 <= item <= levels:
            raise BandError(f"detail level {item} outside 1..{levels}")
        kept.add(int(item))
    return keep_approx, kept


def reconstruct_band(d: Decomposition, band: BandSelector) -> np.ndarray:
    """Reconstruct at the original rate using only the selected bands.

    ``band`` is ``"approx"``, ``"details"`` (every detail band), a detail
    level ``j`` (int or ``"d4"``), or an iterable mixing those.
    """
    keep_approx, kept = _normalize_selector(band, d.levels)
    masked = d.map_bands(
        lambda key, coeffs: coeffs if (keep_approx if key == "approx" else key in kept)
        else np.zeros_like(coeffs)
    )
    return idwt(masked)
