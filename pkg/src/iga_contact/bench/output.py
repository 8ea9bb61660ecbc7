"""Writers for benchmark results: field samples, CSV tables and the solve trace.

All files are deterministic functions of the run (no timestamps), so a run
reproduces its outputs byte for byte.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict

import numpy as np

from ..solver import SolveTrace

FMT = "%.15g"


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FMT % float(v)
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def write_fields(path, samples):
    """Reference coordinates, displacement and Cauchy stress per sample point."""
    header = ["body", "xi", "eta", "X", "Y", "ux", "uy", "sigma_xx", "sigma_yy", "sigma_xy"]
    rows = []
    for f in samples:
        for k in range(f.X.shape[0]):
            s = f.sigma[k]
            rows.append((f.body, f.xi[k], f.eta[k], f.X[k, 0], f.X[k, 1], f.u[k, 0], f.u[k, 1],
                         s[0, 0], s[1, 1], s[0, 1]))
    return write_csv(path, header, rows)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(FMT % obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path, data):
    with open(path, "w") as fh:
        json.dump(_plain(data), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_trace(path, trace: SolveTrace):
    return write_json(path, {"success": trace.success, "message": trace.message,
                             "steps": [asdict(s) for s in trace.steps]})


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path
