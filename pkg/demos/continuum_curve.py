"""Curve of initial conditions for the continuum model, written by the CLI.

At high energy the curve drifts toward the free curve, but slowly: the gap
between the two closes like lambda / (2 sqrt(E)).
"""
import sys
import tempfile
from pathlib import Path

import numpy as np

from tracespec.cli import run

out = Path(tempfile.mkdtemp(prefix="curve-"))
for lo, hi in ((51.0, 6000.0), (6e4, 8e4)):
    name = f"curve_{int(lo)}.csv"
    if run(["continuum-curve", "--lambda", "50", "--emin", str(lo), "--emax", str(hi),
            "--points", "4000", "--out", name, "--svg", name.replace(".csv", ".svg"),
            "--outdir", str(out)]) != 0:
        sys.exit("continuum-curve failed")
    dist = np.loadtxt(out / name, delimiter=",", skiprows=1)[:, 5]
    print(f"E in ({lo:g}, {hi:g}): distance to free curve max {dist.max():.4f}, "
          f"median {np.median(dist):.4f}, 50/(2 sqrt E) = {50 / (2 * np.sqrt(hi)):.4f}")
print(f"CSV and SVG written to {out}")
