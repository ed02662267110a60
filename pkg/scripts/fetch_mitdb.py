#!/usr/bin/env python3
"""Download MIT-BIH Arrhythmia Database records from PhysioNet.

    python scripts/fetch_mitdb.py [--dest tests/data/mitdb] [RECORD ...]

Defaults to records 106, 117, 119, 203 and 210.  Point ``WAVQRS_DATA`` at
the destination to let the CLI and the acceptance suite find them.
"""

import argparse
import sys
import urllib.request
from pathlib import Path

BASE_URL = "https://physionet.org/files/mitdb/1.0.0/"
DEFAULT_RECORDS = ["106", "117", "119", "203", "210"]


def fetch(record: str, dest: Path, base_url: str) -> None:
    for ext in ("hea", "dat", "atr"):
        target = dest / f"{record}.{ext}"
        if target.exists() and target.stat().st_size > 0:
            continue
        url = f"{base_url}{record}.{ext}"
        print(f"downloading {url}")
        tmp = target.with_suffix(target.suffix + ".part")
        with urllib.request.urlopen(url, timeout=60) as resp, open(tmp, "wb") as f:
            f.write(resp.read())
        tmp.replace(target)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("records", nargs="*", default=DEFAULT_RECORDS)
    parser.add_argument("--dest", type=Path, default=Path(__file__).resolve().parents[1] / "tests" / "data" / "mitdb")
    parser.add_argument("--base-url", default=BASE_URL)
    args = parser.parse_args(argv)
    args.dest.mkdir(parents=True, exist_ok=True)
    failed = []
    for record in args.records:
        try:
            fetch(record, args.dest, args.base_url)
        except OSError as exc:
            print(f"{record}: {exc}", file=sys.stderr)
            failed.append(record)
    if failed:
        print(f"failed: {' '.join(failed)}", file=sys.stderr)
        return 1
    print(f"records in {args.dest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
