"""Follow a few energies through the trace map and watch them stay or escape.

Energies in the spectrum keep a bounded orbit forever.  A point of a level-12
band survives well past level 12, a point in a wide gap is certified to escape
within a few steps, and a point far outside escapes at once.
"""
import numpy as np

from tracespec.bands import compute_bands
from tracespec.trace import Discrete, escape_level, fricke_vogt, initial_condition, orbit

model = Discrete(1.0, 2.0)
cover = compute_bands(model, 12)
iv = cover.intervals
inside = float(iv[len(iv) // 2].mean())
widest = int(np.argmax(iv[1:, 0] - iv[:-1, 1]))
gap_mid = float(0.5 * (iv[widest, 1] + iv[widest + 1, 0]))

print(f"model {model!r}, invariant at E=0: {float(fricke_vogt(initial_condition(model, 0.0))):.4f}")
for label, E in (("band centre", inside), ("gap centre", gap_mid), ("far outside", 10.0)):
    xs = orbit(initial_condition(model, E), 12)
    print(f"{label:12s} E={E:+.6f}  escape step {escape_level(initial_condition(model, E), 60)}  "
          f"|x_k| for k<=6: {np.array2string(np.abs(xs[:7]), precision=2)}")
