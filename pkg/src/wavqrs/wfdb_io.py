"""Readers for WFDB records: ``.hea`` headers, format-212 ``.dat`` signals,
MIT-format annotation files, and one-column CSV signals.

Only what the MIT-BIH Arrhythmia Database needs is supported: single-segment
records whose signals are all stored in format 212.  The encoders exist to
build test fixtures.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import (
    ChannelError,
    EmptySignalError,
    ParseError,
    TruncationError,
    UnsupportedFormatError,
)
from .wavelet_core import Signal

PathLike = Union[str, os.PathLike]

DEFAULT_GAIN = 200.0
# Format-212 code for a missing sample.
INVALID_212 = -2048

# MIT annotation pseudo-codes.
SKIP, NUM, SUB, CHN, AUX = 59, 60, 61, 62, 63

# Annotation codes counted as beats: N L R a V F J A S E j / Q B ? e n f r.
BEAT_CODES = frozenset({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 25, 30, 34, 35, 38, 41})

ANNOTATION_SYMBOLS = {
    0: " ", 1: "N", 2: "L", 3: "R", 4: "a", 5: "V", 6: "F", 7: "J", 8: "A", 9: "S",
    10: "E", 11: "j", 12: "/", 13: "Q", 14: "~", 16: "|", 18: "s", 19: "T", 20: "*",
    21: "D", 22: '"', 23: "=", 24: "p", 25: "B", 26: "^", 27: "t", 28: "+", 29: "u",
    30: "?", 31: "!", 32: "[", 33: "]", 34: "e", 35: "n", 36: "@", 37: "x", 38: "f",
    39: "(", 40: ")", 41: "r",
}


@dataclass
class SignalSpec:
    file_name: str
    fmt: int
    gain: float = DEFAULT_GAIN
    baseline: int = 0
    units: str = "mV"
    adc_resolution: int = 12
    adc_zero: int = 0
    initial_value: Optional[int] = None
    checksum: Optional[int] = None
    block_size: int = 0
    description: str = ""
    byte_offset: int = 0
    gain_text: str = ""


@dataclass
class RecordHeader:
    name: str
    n_signals: int
    fs: float
    n_samples: Optional[int]
    signals: list = field(default_factory=list)
    comments: list = field(default_factory=list)

    def channel_index(self, channel: Union[int, str, None] = None) -> int:
        """Resolve a channel by index or lead name; default MLII, else 0."""
        if channel is None:
            for i, spec in enumerate(self.signals):
                if spec.description.strip().upper() == "MLII":
                    return i
            return 0
        if isinstance(channel, str) and not channel.lstrip("-").isdigit():
            for i, spec in enumerate(self.signals):
                if spec.description.strip() == channel:
                    return i
            raise ChannelError(f"no lead named {channel!r} in record {self.name}")
        index = int(channel)
        if not 0 <= index < self.n_signals:
            raise ChannelError(f"channel {index} outside 0..{self.n_signals - 1}")
        return index


@dataclass(frozen=True)
class Annotation:
    sample: int
    type_code: int
    is_beat: bool
    aux: Optional[str] = None
    subtype: int = 0
    chan: int = 0
    num: int = 0

    @property
    def symbol(self) -> str:
        return ANNOTATION_SYMBOLS.get(self.type_code, "?")


_RECORD_LINE = re.compile(
    r"^(?P<name>[^\s/]+)(?:/(?P<nseg>\d+))?\s+(?P<nsig>\d+)"
    r"(?:\s+(?P<fs>[0-9.eE+-]+)(?:/[0-9.eE+-]+)?(?:\([0-9.eE+-]+\))?"
    r"(?:\s+(?P<nsamp>\d+))?)?"
)
_FORMAT_FIELD = re.compile(r"^(?P<fmt>\d+)(?:x\d+)?(?::\d+)?(?:\+(?P<offset>\d+))?$")
_GAIN_FIELD = re.compile(r"^(?P<gain>[0-9.eE+-]+)(?:\((?P<baseline>-?\d+)\))?(?:/(?P<units>\S+))?$")


def _parse_signal_line(line: str, lineno: int, path) -> SignalSpec:
    tokens = line.split()
    if len(tokens) < 2:
        raise ParseError("signal line needs at least a file name and a format", path=path, line=lineno)
    fmt_match = _FORMAT_FIELD.match(tokens[1])
    if not fmt_match:
        raise ParseError(f"bad format field {tokens[1]!r}", path=path, line=lineno)
    spec = SignalSpec(
        file_name=tokens[0],
        fmt=int(fmt_match["fmt"]),
        byte_offset=int(fmt_match["offset"] or 0),
    )
    baseline = None
    try:
        if len(tokens) > 2:
            gain_match = _GAIN_FIELD.match(tokens[2])
            if not gain_match:
                raise ParseError(f"bad gain field {tokens[2]!r}", path=path, line=lineno)
            spec.gain_text = tokens[2]
            spec.gain = float(gain_match["gain"]) or DEFAULT_GAIN
            if gain_match["baseline"] is not None:
                baseline = int(gain_match["baseline"])
            if gain_match["units"]:
                spec.units = gain_match["units"]
        if len(tokens) > 3:
            spec.adc_resolution = int(tokens[3])
        if len(tokens) > 4:
            spec.adc_zero = int(tokens[4])
        if len(tokens) > 5:
            spec.initial_value = int(tokens[5])
        if len(tokens) > 6:
            spec.checksum = int(tokens[6])
        if len(tokens) > 7:
            spec.block_size = int(tokens[7])
    except ValueError as exc:
        raise ParseError(f"non-numeric field: {exc}", path=path, line=lineno) from None
    if len(tokens) > 8:
        spec.description = " ".join(tokens[8:])
    spec.baseline = spec.adc_zero if baseline is None else baseline
    return spec


def parse_header(text: str, path=None) -> RecordHeader:
    """Parse header text; see :func:`read_header`."""
    header = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if header is not None:
                header.comments.append(line[1:].strip())
            continue
        if header is None:
            m = _RECORD_LINE.match(line)
            if not m:
                raise ParseError("malformed record line", path=path, line=lineno)
            if m["nseg"]:
                raise UnsupportedFormatError("multi-segment records are not supported", path=path, line=lineno)
            fs = float(m["fs"]) if m["fs"] else 250.0
            if not fs > 0:
                raise ParseError(f"sampling frequency must be positive, got {fs}", path=path, line=lineno)
            header = RecordHeader(
                name=m["name"],
                n_signals=int(m["nsig"]),
                fs=fs,
                n_samples=int(m["nsamp"]) if m["nsamp"] else None,
            )
            if header.n_signals < 1:
                raise ParseError("record has no signals", path=path, line=lineno)
            continue
        if len(header.signals) < header.n_signals:
            header.signals.append(_parse_signal_line(line, lineno, path))
        # Lines past the declared signals (e.g. info strings) are ignored.
    if header is None:
        raise ParseError("no record line found", path=path, line=1)
    if len(header.signals) != header.n_signals:
        raise ParseError(
            f"header declares {header.n_signals} signals but describes {len(header.signals)}",
            path=path,
        )
    for spec in header.signals:
        if spec.fmt != 212:
            raise UnsupportedFormatError(f"signal format {spec.fmt} is not supported (only 212)", path=path)
    return header


def read_header(path: PathLike) -> RecordHeader:
    """Parse a WFDB ``.hea`` file.

    Only format 212 is accepted; anything else raises
    :class:`UnsupportedFormatError`.  Comment lines are kept in
    ``comments``.
    """
    path = Path(path)
    with open(path, encoding="latin-1") as f:
        return parse_header(f.read(), path=path)


def _fmt_number(value: float) -> str:
    return repr(int(value)) if float(value).is_integer() else repr(float(value))


def format_header(header: RecordHeader) -> str:
    """Serialize a header back to WFDB text."""
    first = [header.name, str(header.n_signals), _fmt_number(header.fs)]
    if header.n_samples is not None:
        first.append(str(header.n_samples))
    lines = [" ".join(first)]
    for spec in header.signals:
        fmt = f"{spec.fmt}" + (f"+{spec.byte_offset}" if spec.byte_offset else "")
        gain = _fmt_number(spec.gain)
        if spec.baseline != spec.adc_zero:
            gain += f"({spec.baseline})"
        if spec.units != "mV":
            gain += f"/{spec.units}"
        fields = [spec.file_name, fmt, gain, str(spec.adc_resolution), str(spec.adc_zero),
                  str(spec.initial_value if spec.initial_value is not None else 0),
                  str(spec.checksum if spec.checksum is not None else 0),
                  str(spec.block_size)]
        if spec.description:
            fields.append(spec.description)
        lines.append(" ".join(fields))
    lines.extend(f"# {c}" for c in header.comments)
    return "\n".join(lines) + "\n"


def decode_212(data: bytes, n_values: Optional[int] = None) -> np.ndarray:
    """Unpack format-212 bytes into signed 12-bit sample values.

    Every 3 bytes carry two samples: the first is byte 0 plus the low nibble
    of byte 1 as its top 4 bits, the second is byte 2 plus the high nibble of
    byte 1.  Values are in storage order (channels interleaved).
    """
    raw = np.frombuffer(data, dtype=np.uint8)
    available = (len(raw) // 3) * 2 + (1 if len(raw) % 3 >= 2 else 0)
    if n_values is None:
        n_values = available
    if n_values > available:
        needed = 3 * (n_values // 2) + (2 if n_values % 2 else 0)
        raise TruncationError(f"need {needed} bytes for {n_values} samples, file has {len(raw)}",
                              offset=len(raw))
    n_frames = (n_values + 1) // 2
    buf = np.zeros(3 * n_frames, dtype=np.int32)
    usable = min(len(raw), 3 * n_frames)
    buf[:usable] = raw[:usable]
    b = buf.reshape(-1, 3)
    out = np.empty(2 * n_frames, dtype=np.int32)
    out[0::2] = b[:, 0] | ((b[:, 1] & 0x0F) << 8)
    out[1::2] = b[:, 2] | ((b[:, 1] & 0xF0) << 4)
    out[out >= 2048] -= 4096
    return out[:n_values]


def encode_212(values) -> bytes:
    """Pack signed 12-bit values into format-212 bytes (for fixtures)."""
    v = np.asarray(values, dtype=np.int64)
    if v.size and (v.min() < -2048 or v.max() > 2047):
        raise ValueError("format 212 holds values in -2048..2047")
    odd = len(v) % 2
    if odd:
        v = np.append(v, 0)
    u = (v & 0xFFF).reshape(-1, 2)
    out = np.empty((len(u), 3), dtype=np.uint8)
    out[:, 0] = u[:, 0] & 0xFF
    out[:, 1] = ((u[:, 0] >> 8) & 0x0F) | ((u[:, 1] >> 4) & 0xF0)
    out[:, 2] = u[:, 1] & 0xFF
    data = out.tobytes()
    return data[:-1] if odd else data


def adu_to_physical(adu, gain: float, baseline: int) -> np.ndarray:
    return (np.asarray(adu, dtype=float) - baseline) / gain


def physical_to_adu(values, gain: float, baseline: int) -> np.ndarray:
    return np.round(np.asarray(values, dtype=float) * gain + baseline).astype(np.int64)


def read_adu_212(path: PathLike, header: RecordHeader) -> np.ndarray:
    """All channels in raw ADC units, shape ``(n_samples, n_signals)``."""
    path = Path(path)
    offset = header.signals[0].byte_offset
    with open(path, "rb") as f:
        f.seek(offset)
        data = f.read()
    n_sig = header.n_signals
    if header.n_samples is None:
        n_values = ((len(data) // 3) * 2 + (1 if len(data) % 3 >= 2 else 0)) // n_sig * n_sig
    else:
        n_values = header.n_samples * n_sig
    try:
        flat = decode_212(data, n_values)
    except TruncationError as exc:
        raise TruncationError(f"signal file is truncated ({exc})", path=path,
                              offset=offset + len(data)) from None
    return flat.reshape(-1, n_sig)


def read_signal_212(path: PathLike, header: RecordHeader, channel: Union[int, str, None] = None,
                    invalid: str = "nan") -> Signal:
    """Read one channel of a format-212 file, converted to physical units.

    Samples stored as -2048 are missing.  ``invalid="nan"`` returns them as
    NaN, as the WFDB tools do; ``invalid="interpolate"`` fills them linearly
    from the neighbouring valid samples so the result can be filtered.
    """
    if invalid not in ("nan", "interpolate"):
        raise ValueError("invalid must be 'nan' or 'interpolate'")
    index = header.channel_index(channel)
    adu = read_adu_212(path, header)[:, index]
    spec = header.signals[index]
    values = adu_to_physical(adu, spec.gain, spec.baseline)
    missing = adu == INVALID_212
    if missing.any():
        if invalid == "nan":
            values[missing] = np.nan
        elif missing.all():
            values[:] = 0.0
        else:
            good = np.flatnonzero(~missing)
            values[missing] = np.interp(np.flatnonzero(missing), good, values[good])
    return Signal(values, fs=header.fs, label=f"{header.name}:{spec.description or index}")


def _read_annotation_words(data: bytes):
    # A trailing odd byte cannot hold a word.
    return np.frombuffer(data[:len(data) - len(data) % 2], dtype="<u2")


def read_annotations(path: PathLike, fs: Optional[float] = None) -> list[Annotation]:
    """Decode an MIT-format annotation file.

    ``fs`` is accepted for symmetry with the signal readers; annotation times
    are returned in samples regardless.
    """
    path = Path(path)
    with open(path, "rb") as f:
        data = f.read()
    return parse_annotations(data, path=path)


def parse_annotations(data: bytes, path=None) -> list[Annotation]:
    words = _read_annotation_words(data)
    annotations: list[dict] = []
    t = 0
    pending_skip = 0
    chan = num = 0
    i = 0
    n = len(words)
    while i < n:
        word = int(words[i])
        code = word >> 10
        value = word & 0x3FF
        offset = 2 * i
        i += 1
        if word == 0:
            break
        if code == SKIP:
            if i + 2 > n:
                raise TruncationError("SKIP without its 4-byte interval", path=path, offset=offset)
            hi, lo = int(words[i]), int(words[i + 1])
            interval = (hi << 16) | lo
            if interval >= 1 << 31:
                interval -= 1 << 32
            pending_skip += interval
            i += 2
        elif code == NUM:
            if not annotations:
                raise ParseError("NUM before any annotation", path=path, offset=offset)
            num = value if value < 512 else value - 1024
            annotations[-1]["num"] = num
        elif code == SUB:
            if not annotations:
                raise ParseError("SUB before any annotation", path=path, offset=offset)
            annotations[-1]["subtype"] = value if value < 512 else value - 1024
        elif code == CHN:
            if not annotations:
                raise ParseError("CHN before any annotation", path=path, offset=offset)
            chan = value
            annotations[-1]["chan"] = chan
        elif code == AUX:
            end = 2 * i + value
            if end > len(data):
                raise TruncationError(f"AUX payload of {value} bytes runs past end of file",
                                      path=path, offset=offset)
            if not annotations:
                raise ParseError("AUX before any annotation", path=path, offset=offset)
            annotations[-1]["aux"] = data[2 * i:end].split(b"\0", 1)[0].decode("latin-1")
            i += (value + 1) // 2
        elif code > 49:
            raise ParseError(f"reserved annotation code {code}", path=path, offset=offset)
        else:
            t += pending_skip + value
            pending_skip = 0
            if t < 0:
                raise ParseError(f"negative annotation time {t}", path=path, offset=offset)
            if annotations and t < annotations[-1]["sample"]:
                raise ParseError(f"annotation time {t} goes backwards", path=path, offset=offset)
            # chan and num persist from the previous annotation unless changed.
            annotations.append({"sample": t, "type_code": code, "chan": chan, "num": num,
                                "subtype": 0, "aux": None})
    out = []
    for a in annotations:
        out.append(Annotation(sample=a["sample"], type_code=a["type_code"],
                              is_beat=a["type_code"] in BEAT_CODES, aux=a["aux"],
                              subtype=a["subtype"], chan=a["chan"], num=a["num"]))
    return out


def encode_annotations(annotations) -> bytes:
    """MIT-format bytes for ``annotations`` (for fixtures).

    Items are :class:`Annotation` objects or ``(sample, type_code)`` /
    ``(sample, type_code, aux)`` tuples, in non-decreasing sample order.
    """
    out = bytearray()

    def put(word):
        out.extend(int(word).to_bytes(2, "little"))

    prev = 0
    chan = num = 0
    for item in annotations:
        if isinstance(item, Annotation):
            sample, code, aux = item.sample, item.type_code, item.aux
            sub, ch, nm = item.subtype, item.chan, item.num
        else:
            sample, code = item[0], item[1]
            aux = item[2] if len(item) > 2 else None
            sub, ch, nm = 0, chan, num
        delta = sample - prev
        if delta < 0:
            raise ValueError("annotations must be in non-decreasing sample order")
        if delta > 1023:
            put(SKIP << 10)
            put((delta >> 16) & 0xFFFF)
            put(delta & 0xFFFF)
            delta = 0
        put((code << 10) | delta)
        if sub:
            put((SUB << 10) | (sub & 0x3FF))
        if ch != chan:
            put((CHN << 10) | (ch & 0x3FF))
            chan = ch
        if nm != num:
            put((NUM << 10) | (nm & 0x3FF))
            num = nm
        if aux:
            payload = aux.encode("latin-1")
            put((AUX << 10) | len(payload))
            out.extend(payload)
            if len(payload) % 2:
                out.append(0)
        prev = sample
    put(0)
    return bytes(out)


def beat_samples(annotations) -> np.ndarray:
    return np.array([a.sample for a in annotations if a.is_beat], dtype=np.int64)


def read_csv(path: PathLike, fs: float, label: str = "") -> Signal:
    """One float per line; a non-numeric first line is taken as a header."""
    path = Path(path)
    values = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            text = line.strip()
            if not text:
                continue
            first_field = text.split(",")[-1].strip()
            try:
                value = float(first_field)
            except ValueError:
                if lineno == 1 and not values:
                    continue
                raise ParseError(f"not a number: {text!r}", path=path, line=lineno) from None
            if not math.isfinite(value):
                raise ParseError(f"non-finite value {text!r}", path=path, line=lineno)
            values.append(value)
    if not values:
        raise EmptySignalError("no samples", path=path)
    return Signal(np.array(values), fs=fs, label=label or path.stem)


def write_csv(path: PathLike, samples, header: Optional[str] = None) -> None:
    """Write one sample per line with round-trip precision."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        if header:
            f.write(header + "\n")
        for v in np.asarray(samples, dtype=float):
            f.write(repr(float(v)) + "\n")


@dataclass
class RecordFiles:
    header: Path
    signal: Path
    annotations: Optional[Path]


def record_files(record: PathLike, annotator: str = "atr") -> RecordFiles:
    """Locate the ``.hea``/``.dat``/annotation files for a record path."""
    base = Path(record)
    if base.suffix in (".hea", ".dat", f".{annotator}"):
        base = base.with_suffix("")
    hea = base.with_suffix(".hea")
    ann = base.with_suffix(f".{annotator}")
    return RecordFiles(header=hea, signal=base.with_suffix(".dat"),
                       annotations=ann if ann.exists() else None)


def load_record(record: PathLike, channel: Union[int, str, None] = None,
                invalid: str = "interpolate") -> tuple[RecordHeader, Signal]:
    files = record_files(record)
    header = read_header(files.header)
    spec = header.signals[header.channel_index(channel)]
    dat = files.header.parent / spec.file_name
    return header, read_signal_212(dat, header, channel, invalid=invalid)
