"""Density of states of one operator and of the sum of two.

In the free case the integrated density of states follows the arcsine law.
At large coupling the convolved measure sits on the thin part of the sum.
"""
import numpy as np

from tracespec.bands import compute_bands
from tracespec.dos import ac_sc_evidence, arcsine_ids, convolve, dos_from_bands, ids, sum_cover_sequence
from tracespec.trace import Discrete

free = dos_from_bands(compute_bands(Discrete(1.0, 0.0), 10))
E = np.linspace(-2, 2, 2001)
print(f"free IDS vs arcsine law: max gap {np.max(np.abs(ids(free, E) - arcsine_ids(E))):.4f}")

levels = [compute_bands(Discrete(1.0, 24.0), k) for k in range(8, 12)]
mu = dos_from_bands(levels[0])
conv = convolve(mu, mu, 1024)
ev = ac_sc_evidence(conv, sum_cover_sequence(levels, levels))
print(f"large coupling: total mass {conv.total:.12f}, mass on thin part {ev.mass_on_thin:.3f}")
