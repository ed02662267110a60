"""Regenerate the golden WFDB fixtures in tests/fixtures/.

Needs the reference ``wfdb`` package (not a runtime dependency).  The
record and annotation files are written by wfdb's own writers, and the
values wfdb's readers decode from them are frozen into ``golden.json``.
"""

import json
from pathlib import Path

import numpy as np
import wfdb

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(212)
    n = 601  # odd, so the final frame is complete but sample count per channel is odd
    ch0 = rng.integers(-2048, 2048, n)
    ch1 = rng.integers(-2048, 2048, n)
    ch0[:4] = [-2048, 2047, 0, -1]
    ch1[:4] = [1, -1, 2047, -2048]
    d_signal = np.column_stack([ch0, ch1]).astype(np.int32)
    wfdb.wrsamp("fx212", fs=360, units=["mV", "mV"], sig_name=["MLII", "V5"],
                d_signal=d_signal, fmt=["212", "212"], adc_gain=[200.0, 200.0],
                baseline=[1024, 1024], write_dir=str(OUT))
    rec = wfdb.rdrecord(str(OUT / "fx212"), physical=False)
    phys = wfdb.rdrecord(str(OUT / "fx212"))

    samples = np.array([5, 77, 370, 371, 1500, 1500, 70000, 70400, 200000, 200300])
    symbols = ["N", "V", "+", "N", "A", "~", "N", "F", "/", "Q"]
    aux = ["", "", "(VT", "", "", "", "", "", "", "end note!"]
    subtype = [0, 0, 0, 0, 0, 1, 0, 0, 0, 0]
    chan = [0, 0, 0, 0, 1, 1, 0, 0, 0, 0]
    num = [0, 0, 0, 0, 0, 0, 3, 3, 0, 0]
    wfdb.wrann("fx212", "atr", samples, symbol=symbols, subtype=np.array(subtype),
               chan=np.array(chan), num=np.array(num), aux_note=aux, write_dir=str(OUT))
    ann = wfdb.rdann(str(OUT / "fx212"), "atr")

    golden = {
        "record": {
            "fs": rec.fs, "n_sig": rec.n_sig, "sig_len": rec.sig_len,
            "sig_name": rec.sig_name, "adc_gain": rec.adc_gain, "baseline": rec.baseline,
            "adu": rec.d_signal.T.tolist(),
            "physical_first10": phys.p_signal[:10].T.tolist(),
        },
        "annotations": {
            "sample": ann.sample.tolist(),
            "symbol": ann.symbol,
            "aux_note": ann.aux_note,
            "subtype": ann.subtype.tolist(),
            "chan": ann.chan.tolist(),
            "num": ann.num.tolist(),
        },
    }
    (OUT / "golden.json").write_text(json.dumps(golden, indent=1) + "\n")
    print("wrote", sorted(p.name for p in OUT.iterdir()))


if __name__ == "__main__":
    main()
