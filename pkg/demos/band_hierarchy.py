"""Periodic approximants shrink onto a Cantor spectrum.

Level k has F_k bands; their total length decays geometrically and the
box dimension read off from several levels settles below one.
"""
from tracespec.bands import box_dimension, compute_bands, thickness
from tracespec.trace import Discrete

model = Discrete(1.0, 4.0)
covers = [compute_bands(model, k) for k in range(6, 15)]
for k, bs in zip(range(6, 15), covers):
    print(f"k={k:2d}  bands {len(bs):4d}  total length {bs.lengths.sum():.3e}")
print(f"thickness of the level-14 cover: {thickness(covers[-1]).tau:.3f}")
print(f"box dimension over levels 6..14: {box_dimension(covers).value:.3f}")
