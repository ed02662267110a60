"""Baseline-wander removal and dyadic band bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_DOWN, Decimal
from typing import Union

import numpy as np

from .errors import LevelError, ProcessingError
from .wavelet_core import FilterBank, Signal, dwt, max_level, reconstruct_band

DEFAULT_LEVELS = 8
# Quoted content bandwidth for MIT-BIH recordings; the filters themselves
# split fs/2, not this value.
MITBIH_F_MAX = 130.0


@dataclass(frozen=True)
class BandRange:
    level: Union[int, str]
    lo: float
    hi: float

    @property
    def name(self) -> str:
        return self.level if isinstance(self.level, str) else f"d{self.level}"


def band_frequencies(level: Union[int, str], f_max: float, levels: int | None = None) -> BandRange:
    """Ideal frequency range of a DWT band.

    ``level`` is a detail index ``j >= 1`` or ``"approx"``; for the
    approximation the decomposition depth ``levels`` is required (an
    approximation label such as ``"C8"`` or ``"A8"`` also carries it).
    """
    if not f_max > 0:
        raise ProcessingError(f"f_max must be positive, got {f_max}")
    if isinstance(level, str):
        key = level.strip().lower()
        if key in ("approx", "a", "c"):
            if levels is None:
                raise ProcessingError("approximation band needs the decomposition depth")
            depth = levels
        elif key[:1] in ("a", "c") and key[1:].isdigit():
            depth = int(key[1:])
        elif key[:1] == "d" and key[1:].isdigit():
            return band_frequencies(int(key[1:]), f_max)
        else:
            raise ProcessingError(f"unknown band {level!r}")
        if depth < 1:
            raise ProcessingError(f"decomposition depth must be >= 1, got {depth}")
        return BandRange(level=f"C{depth}", lo=0.0, hi=f_max / 2 ** depth)
    if level < 1:
        raise ProcessingError(f"detail level must be >= 1, got {level}")
    return BandRange(level=int(level), lo=f_max / 2 ** level, hi=f_max / 2 ** (level - 1))


def band_table(levels: int, f_max: float) -> list[BandRange]:
    """Rows d1..dJ followed by the level-J approximation."""
    rows = [band_frequencies(j, f_max) for j in range(1, levels + 1)]
    rows.append(band_frequencies("approx", f_max, levels=levels))
    return rows


def format_hz(value: float, decimals: int = 3) -> str:
    """Truncate (not round) to ``decimals`` places and drop trailing zeros.

    This is how the usual printed band table shows 130/2**7 = 1.015625 as
    ``1.015``.
    """
    q = Decimal(repr(float(value))).quantize(Decimal(1).scaleb(-decimals), rounding=ROUND_DOWN)
    text = format(q, "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text


def remove_baseline(x, levels: int = DEFAULT_LEVELS, bank: Union[str, FilterBank, None] = None,
                    ext_mode: str = "periodic"):
    """Drop the level-``levels`` approximation and rebuild from the details.

    Acts as a high-pass with ideal cutoff ``fs / 2**(levels + 1)``.  Returns
    a :class:`Signal` when given one, otherwise an array of the same length.
    """
    samples = x.samples if isinstance(x, Signal) else np.asarray(x, dtype=float)
    if len(samples) < 2 ** levels:
        raise LevelError(
            f"{len(samples)} samples are too few for {levels} levels "
            f"(need at least {2 ** levels}, max level {max_level(len(samples))})"
        )
    filtered = reconstruct_band(dwt(samples, levels, bank, ext_mode), "details")
    if isinstance(x, Signal):
        return x.with_samples(filtered)
    return filtered
