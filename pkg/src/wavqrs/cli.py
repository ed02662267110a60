"""Command-line frontend: ``wavqrs <subcommand>``.

Exit codes: 0 success, 2 usage error, 3 I/O error, 4 parse error,
5 processing error, 6 every record failed in ``eval``.
"""

from __future__ import annotations

import functools
import json
import logging
import os
import sys
import tempfile
from dataclasses import fields
from pathlib import Path

import click

from . import __version__
from .band_select import select_band
from .errors import ChannelError, ConfigError, ParseError, ProcessingError
from .evaluation import DEFAULT_TOLERANCE_S, evaluate_records
from .preprocess import DEFAULT_LEVELS, MITBIH_F_MAX, band_table, format_hz, remove_baseline
from .qrs_detector import DetectorConfig, detect
from .wavelet_core import WAVELETS, dwt, reconstruct_band
from .wfdb_io import load_record, read_csv

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_PARSE = 4
EXIT_PROCESSING = 5
EXIT_ALL_FAILED = 6

DATA_ENV = "WAVQRS_DATA"

log = logging.getLogger("wavqrs")


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.exceptions.Exit:
            raise
        except click.UsageError:
            raise
        except ParseError as exc:
            _fail(str(exc), EXIT_PARSE)
        except OSError as exc:
            name = exc.filename or ""
            _fail(f"{name}: {exc.strerror or exc}" if name else str(exc), EXIT_IO)
        except (ProcessingError, ChannelError) as exc:
            _fail(str(exc), EXIT_PROCESSING)
    return wrapper


def write_atomic(path: Path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _series_csv(values, fs: float) -> str:
    lines = ["time_s,value"]
    lines += [f"{i / fs:.6f},{float(v)!r}" for i, v in enumerate(values)]
    return "\n".join(lines) + "\n"


def _gnuplot(csv_name: str, title: str) -> str:
    return (
        "set datafile separator ','\n"
        f"set title '{title}'\n"
        "set xlabel 'time (s)'\n"
        f"plot '{csv_name}' using 1:2 every ::1 with lines title '{title}'\n"
    )


def resolve_record(path: str) -> Path:
    p = Path(path)
    candidates = [p]
    data_dir = os.environ.get(DATA_ENV)
    if data_dir and not p.is_absolute():
        candidates.append(Path(data_dir) / p)
    for c in candidates:
        base = c.with_suffix("") if c.suffix in (".hea", ".dat", ".atr") else c
        if base.with_suffix(".hea").exists():
            return base
    return p


def load_input(path: str, fs, channel):
    """A CSV file (needs ``fs``) or a WFDB record path."""
    p = Path(path)
    if p.suffix.lower() in (".csv", ".txt"):
        if fs is None:
            raise click.UsageError("--fs is required for CSV input")
        return read_csv(p, fs)
    base = resolve_record(path)
    if not base.with_suffix(".hea").exists():
        raise FileNotFoundError(2, "no such record or file", str(path))
    _, signal = load_record(base, channel)
    if fs is not None and fs != signal.fs:
        raise click.UsageError(f"--fs {fs} conflicts with the header's {signal.fs} Hz")
    return signal


def _channel(value):
    if value is None:
        return None
    return int(value) if value.lstrip("-").isdigit() else value


def _load_config_file(path):
    if not path:
        return {}
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ParseError("config file must hold a JSON object", path=path)
    return data


def build_config(config_file, **flags) -> tuple[DetectorConfig, dict]:
    """Merge flags over the config file over defaults.

    Returns the detector config and the remaining run options (channel,
    tolerance, fs).
    """
    merged = _load_config_file(config_file)
    merged.update({k: v for k, v in flags.items() if v is not None})
    if "levels" in merged:
        merged["decomposition_levels"] = merged.pop("levels")
    names = {f.name for f in fields(DetectorConfig)}
    run_keys = {"channel", "tolerance_ms", "fs"}
    unknown = set(merged) - names - run_keys
    if unknown:
        raise click.UsageError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    try:
        config = DetectorConfig(**{k: v for k, v in merged.items() if k in names})
    except (TypeError, ConfigError) as exc:
        raise click.UsageError(str(exc)) from None
    run = {k: merged.get(k) for k in run_keys}
    if run["tolerance_ms"] is None:
        run["tolerance_ms"] = DEFAULT_TOLERANCE_S * 1000
    return config, run


fs_option = click.option("--fs", type=float, default=None, help="Sampling rate in Hz (CSV input).")
channel_option = click.option("--channel", default=None,
                              help="Channel index or lead name (default: MLII, else 0).")
levels_option = click.option("--levels", type=int, default=None,
                             help=f"Decomposition levels (default {DEFAULT_LEVELS}).")
wavelet_option = click.option("--wavelet", type=click.Choice(sorted(WAVELETS)), default=None,
                              help="Wavelet filter bank (default db4).")
out_option = click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=Path("."),
                          show_default=True, help="Output directory.")
format_option = click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
                             show_default=True, help="Format of tabular output.")


@click.group(epilog="Exit codes: 0 ok, 2 usage, 3 I/O, 4 parse, 5 processing, "
                    "6 all records failed (eval).")
@click.version_option(__version__)
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose):
    """Wavelet QRS detection toolkit."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")


@main.command()
@click.option("--levels", type=int, default=DEFAULT_LEVELS, show_default=True)
@click.option("--f-max", type=float, default=MITBIH_F_MAX, show_default=True,
              help="Content bandwidth used for the first pair of columns.")
@click.option("--fs", type=float, default=360.0, show_default=True,
              help="Sampling rate; the second pair of columns uses fs/2.")
@format_option
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Write the table to this file instead of stdout.")
@handle_errors
def bands(levels, f_max, fs, fmt, out):
    """Print the ideal frequency range of each DWT band."""
    text = _bands_text(levels, f_max, fs, fmt)
    if out:
        write_atomic(out, text)
    else:
        click.echo(text, nl=False)


def _bands_text(levels, f_max, fs, fmt) -> str:
    configured = band_table(levels, f_max)
    nyquist = band_table(levels, fs / 2.0)
    if fmt == "json":
        rows = [{"band": a.name, "lo_hz": a.lo, "hi_hz": a.hi,
                 "lo_hz_nyquist": b.lo, "hi_hz_nyquist": b.hi}
                for a, b in zip(configured, nyquist)]
        return json.dumps({"f_max": f_max, "fs": fs, "bands": rows}, indent=2) + "\n"
    lines = [f"band,lo_hz(f_max={format_hz(f_max)}),hi_hz(f_max={format_hz(f_max)}),"
             f"lo_hz(fs/2={format_hz(fs / 2)}),hi_hz(fs/2={format_hz(fs / 2)})"]
    for a, b in zip(configured, nyquist):
        lines.append(f"{a.name},{format_hz(a.lo)},{format_hz(a.hi)},{format_hz(b.lo)},{format_hz(b.hi)}")
    return "\n".join(lines) + "\n"


@main.command()
@click.argument("input_path", metavar="INPUT")
@fs_option
@channel_option
@levels_option
@wavelet_option
@click.option("--f-max", type=float, default=MITBIH_F_MAX, show_default=True)
@click.option("--gnuplot", is_flag=True, help="Also write a gnuplot script per band.")
@out_option
@handle_errors
def decompose(input_path, fs, channel, levels, wavelet, f_max, gnuplot, out):
    """Write every band, rebuilt at the original rate, plus a band table."""
    signal = load_input(input_path, fs, _channel(channel))
    levels = levels or DEFAULT_LEVELS
    d = dwt(signal.samples, levels, wavelet or "db4")
    stem = Path(input_path).stem
    names = [f"d{j}" for j in range(1, levels + 1)] + [f"C{levels}"]
    selectors = list(range(1, levels + 1)) + ["approx"]
    for name, selector in zip(names, selectors):
        csv_path = out / f"{stem}_{name}.csv"
        write_atomic(csv_path, _series_csv(reconstruct_band(d, selector), signal.fs))
        if gnuplot:
            write_atomic(out / f"{stem}_{name}.gp", _gnuplot(csv_path.name, f"{stem} {name}"))
    write_atomic(out / f"{stem}_bands.csv", _bands_text(levels, f_max, signal.fs, "csv"))
    click.echo(f"wrote {len(names)} band files and {stem}_bands.csv to {out}")


@main.command(name="filter")
@click.argument("input_path", metavar="INPUT")
@fs_option
@channel_option
@levels_option
@wavelet_option
@click.option("--gnuplot", is_flag=True, help="Also write a gnuplot script.")
@out_option
@handle_errors
def filter_cmd(input_path, fs, channel, levels, wavelet, gnuplot, out):
    """Remove baseline wander by dropping the approximation band."""
    signal = load_input(input_path, fs, _channel(channel))
    filtered = remove_baseline(signal, levels or DEFAULT_LEVELS, wavelet or "db4")
    stem = Path(input_path).stem
    csv_path = out / f"{stem}_filtered.csv"
    write_atomic(csv_path, _series_csv(filtered.samples, signal.fs))
    if gnuplot:
        write_atomic(out / f"{stem}_filtered.gp", _gnuplot(csv_path.name, f"{stem} filtered"))
    click.echo(f"wrote {csv_path}")


@main.command()
@click.argument("input_path", metavar="INPUT")
@fs_option
@channel_option
@levels_option
@wavelet_option
@click.option("--reference", type=click.Choice(["baseline-removed", "raw"]),
              default="baseline-removed", show_default=True,
              help="Signal each band is correlated with.")
@format_option
@out_option
@handle_errors
def xcorr(input_path, fs, channel, levels, wavelet, reference, fmt, out):
    """Score each detail band by its correlation with the ECG."""
    signal = load_input(input_path, fs, _channel(channel))
    best, scores = select_band(signal, levels or DEFAULT_LEVELS, wavelet or "db4", reference)
    stem = Path(input_path).stem
    if fmt == "json":
        text = json.dumps({"best_level": best, "reference": reference,
                           "scores": [{"level": s.level, "percent": s.score} for s in scores]},
                          indent=2) + "\n"
    else:
        text = "level,percent\n" + "".join(f"{s.level},{s.score:.2f}\n" for s in scores)
    path = out / f"{stem}_xcorr.{fmt}"
    write_atomic(path, text)
    for s in scores:
        click.echo(f"d{s.level}: {s.score:6.2f} %")
    click.echo(f"best band: d{best}")


def _detector_options(fn):
    for option in reversed([
        click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
                     default=None, help="JSON file of defaults; flags override it."),
        click.option("--threshold-ratio", type=float, default=None,
                     help="Threshold as a fraction of max|yc| (default 0.15)."),
        click.option("--level", type=int, default=None, help="Detail level used for yc (default 4)."),
        click.option("--band-mode", type=click.Choice(["fixed", "auto"]), default=None,
                     help="fixed: use --level; auto: best-correlated band."),
        click.option("--refractory-policy", type=click.Choice(["larger", "earlier"]), default=None,
                     help="Which of two peaks inside the refractory period survives."),
    ]):
        fn = option(fn)
    return fn


@main.command(name="detect")
@click.argument("input_path", metavar="INPUT")
@fs_option
@channel_option
@levels_option
@wavelet_option
@_detector_options
@format_option
@out_option
@handle_errors
def detect_cmd(input_path, fs, channel, levels, wavelet, config_file, threshold_ratio, level,
               band_mode, refractory_policy, fmt, out):
    """Detect R peaks; writes an event table and a JSON summary."""
    config, run = build_config(config_file, levels=levels, wavelet=wavelet,
                               threshold_ratio=threshold_ratio, level=level, band_mode=band_mode,
                               refractory_policy=refractory_policy, channel=channel, fs=fs)
    signal = load_input(input_path, run["fs"], _channel(run["channel"]))
    result = detect(signal, config)
    stem = Path(input_path).stem
    rows = [(e.r_peak, e.r_peak / signal.fs, float(result.filtered[e.r_peak])) for e in result.events]
    if fmt == "json":
        events_text = json.dumps([{"sample_index": i, "time_s": round(t, 6), "amplitude": a}
                                  for i, t, a in rows], indent=2) + "\n"
    else:
        events_text = "sample_index,time_s,amplitude\n" + "".join(
            f"{i},{t:.6f},{a!r}\n" for i, t, a in rows)
    summary = {
        "input": str(input_path),
        "fs": signal.fs,
        "n_samples": len(signal),
        "n_qrs": result.n_qrs,
        "threshold": result.threshold,
        "level": result.level,
        "degenerate": result.degenerate,
        "warning": "flat detection band: threshold is zero, no events" if result.degenerate else None,
        "config": config.as_dict(),
    }
    write_atomic(out / f"{stem}_events.{fmt}", events_text)
    write_atomic(out / f"{stem}_summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if result.degenerate:
        click.echo("warning: flat detection band, no events", err=True)
    click.echo(f"{result.n_qrs} QRS complexes detected (threshold {result.threshold:.6g})")


@main.command(name="eval")
@click.argument("records", nargs=-1)
@channel_option
@levels_option
@wavelet_option
@_detector_options
@click.option("--tolerance-ms", type=float, default=None,
              help=f"Match window half-width (default {DEFAULT_TOLERANCE_S * 1000:g} ms).")
@click.option("--jobs", type=int, default=1, show_default=True, help="Records evaluated in parallel.")
@format_option
@out_option
@handle_errors
def eval_cmd(records, channel, levels, wavelet, config_file, threshold_ratio, level, band_mode,
             refractory_policy, tolerance_ms, jobs, fmt, out):
    """Score detections against reference beat annotations.

    RECORDS are WFDB record paths or names; relative names are also looked
    up in $WAVQRS_DATA.
    """
    if not records:
        raise click.UsageError("give at least one record")
    config, run = build_config(config_file, levels=levels, wavelet=wavelet,
                               threshold_ratio=threshold_ratio, level=level, band_mode=band_mode,
                               refractory_policy=refractory_policy, channel=channel,
                               tolerance_ms=tolerance_ms)
    paths = [resolve_record(r) for r in records]
    report = evaluate_records(paths, config, _channel(run["channel"]),
                              run["tolerance_ms"] / 1000.0, workers=jobs)
    if fmt == "json":
        payload = report.to_dict()
        payload["config"] = config.as_dict()
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        text = report.to_csv()
    write_atomic(out / f"eval_report.{fmt}", text)
    write_atomic(out / "eval_report.txt", report.to_text())
    click.echo(report.to_text(), nl=False)
    if not report.scored:
        _fail("no record could be evaluated", EXIT_ALL_FAILED)


if __name__ == "__main__":
    main()
