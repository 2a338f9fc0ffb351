#!/usr/bin/env python3
"""Convert WESAD subject pickles into ppgopt CSV files and a manifest.

    python3 tools/wesad_to_csv.py /data/WESAD /data/wesad_csv

Per subject and condition (baseline, stress, amusement, meditation) the first
contiguous labelled run is cut from the synchronised chest and wrist streams:

    <out>/<subject>/<task>/BVP.csv   E4 layout, 64 Hz wrist PPG
    <out>/<subject>/<task>/ACC.csv   E4 layout, 32 Hz, raw 1/64 g counts
    <out>/<subject>/<task>/ECG.csv   time_ms,value at 700 Hz (chest)

All files share one clock: seconds since the start of the subject's recording.
"""

import argparse
import json
import pickle
from pathlib import Path

import numpy as np

LABEL_FS = 700.0
TASKS = {1: "baseline", 2: "stress", 3: "amusement", 4: "meditation"}


def first_run(labels, value):
    idx = np.flatnonzero(labels == value)
    if idx.size == 0:
        return None
    breaks = np.flatnonzero(np.diff(idx) > 1)
    end = idx[breaks[0]] + 1 if breaks.size else idx[-1] + 1
    return int(idx[0]), int(end)


def write_e4(path, start_s, fs, rows):
    cols = rows.shape[1]
    with open(path, "w") as f:
        f.write(",".join([f"{start_s:.6f}"] * cols) + "\n")
        f.write(",".join([f"{fs:.6f}"] * cols) + "\n")
        np.savetxt(f, rows, fmt="%.6g" if cols == 1 else "%d", delimiter=",")


def convert_subject(pkl, out_dir):
    with open(pkl, "rb") as f:
        data = pickle.load(f, encoding="latin1")
    subject = str(data.get("subject", pkl.stem))
    labels = np.asarray(data["label"]).ravel()
    ecg = np.asarray(data["signal"]["chest"]["ECG"]).ravel()
    bvp = np.asarray(data["signal"]["wrist"]["BVP"]).reshape(-1, 1)
    acc = np.asarray(data["signal"]["wrist"]["ACC"]).reshape(-1, 3)

    entries = []
    for value, task in TASKS.items():
        run = first_run(labels, value)
        if run is None:
            continue
        t0, t1 = run[0] / LABEL_FS, run[1] / LABEL_FS
        d = out_dir / subject / task
        d.mkdir(parents=True, exist_ok=True)

        b0, b1 = int(np.ceil(t0 * 64)), int(np.floor(t1 * 64))
        a0, a1 = int(np.ceil(t0 * 32)), int(np.floor(t1 * 32))
        write_e4(d / "BVP.csv", b0 / 64.0, 64.0, bvp[b0:b1])
        write_e4(d / "ACC.csv", a0 / 32.0, 32.0, acc[a0:a1])

        seg = ecg[run[0]:run[1]]
        t_ms = (run[0] + np.arange(seg.size)) * (1000.0 / LABEL_FS)
        np.savetxt(d / "ECG.csv", np.column_stack([t_ms, seg]), fmt=["%.4f", "%.6g"],
                   delimiter=",", header="time_ms,value", comments="")

        rel = Path(subject) / task
        entries.append({"participant": subject, "task": task, "ppg": str(rel / "BVP.csv"),
                        "ecg": str(rel / "ECG.csv"), "acc": str(rel / "ACC.csv"),
                        "ecg_fs": LABEL_FS, "acc_units_per_g": 64.0})
    return entries


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("wesad_dir", type=Path, help="folder holding S2/S2.pkl ... S17/S17.pkl")
    ap.add_argument("out_dir", type=Path)
    args = ap.parse_args()

    pickles = sorted(args.wesad_dir.glob("S*/S*.pkl"), key=lambda p: int(p.stem[1:]))
    if not pickles:
        ap.error(f"no S*/S*.pkl under {args.wesad_dir}")
    args.out_dir.mkdir(parents=True, exist_ok=True)
    recordings = []
    for p in pickles:
        recordings += convert_subject(p, args.out_dir)
        print(f"{p.stem}: done")
    manifest = args.out_dir / "manifest.json"
    manifest.write_text(json.dumps({"recordings": recordings}, indent=2) + "\n")
    print(f"{len(recordings)} recordings, manifest {manifest}")


if __name__ == "__main__":
    main()
