"""Trace-map spectral analysis of Fibonacci Jacobi and continuum operators."""
__version__ = "0.1.0"

from .trace import (
    Continuum, Discrete, TorusPoint, TracePoint, escape_level, fricke_vogt,
    initial_condition, invariant_of_energy, torus_embed, torus_map, trace_map,
    trace_map_inverse,
)

