"""Add two spectra and decide whether the sum contains intervals.

A thick pair sums to an interval, a thin pair stays Cantor, and a pair that
is thick at one end and thin at the other gives both.
"""
from tracespec.sumset import ScanGrid, classify_pair, scan_grid
from tracespec.trace import Discrete

for p, q in ((1.0, 0.0), (1.0, 24.0)):
    m = Discrete(p, q)
    print(f"{m!r} + itself -> {classify_pair(m, m, 8).verdict}")

res = scan_grid(ScanGrid(p_range=(-30.0, -10.0), q_range=(10.0, 30.0), p_steps=11, q_steps=11, k=8))
print(f"scan: {len(res.candidates)} candidates out of {len(res.rows)} grid points")
best = res.candidates[0].model
rep = classify_pair(best, best, 8)
print(f"best {best!r}: {rep.verdict} (stable across k, k+1: {rep.stable})")
