"""Fibonacci trace map, its Fricke-Vogt invariant and the curves of initial
conditions for the discrete Jacobi model and the continuum model.

Every function here is a pure numpy expression, so scalars and arrays of any
broadcastable shape are accepted wherever a coordinate or an energy is.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

__all__ = [
    "TracePoint", "TorusPoint", "Discrete", "Continuum", "ModelParams",
    "OrbitEscape", "trace_map", "trace_map_inverse", "fricke_vogt",
    "initial_condition", "invariant_of_energy", "escape_level", "escape_levels",
    "orbit", "torus_map", "torus_embed", "cos_sqrt", "sinc_sqrt",
    "continuum_block2_half_trace", "free_curve_distance", "PERIOD6_ORBIT",
]

# below this |u| the cos/sinc-of-square-root helpers switch to Taylor series
SERIES_CUTOFF = 1e-4


class OrbitEscape(ArithmeticError):
    """Raised when a trace-map step overflows to non-finite values."""


class TracePoint(NamedTuple):
    x: np.ndarray | float
    y: np.ndarray | float
    z: np.ndarray | float

    def asarray(self) -> np.ndarray:
        return np.stack(np.broadcast_arrays(*map(np.asarray, self)))


@dataclass(frozen=True)
class Discrete:
    """Jacobi parameters: off-diagonal ``p`` (nonzero) and diagonal ``q``."""

    p: float
    q: float

    def __post_init__(self):
        if not np.isfinite(self.p) or not np.isfinite(self.q):
            raise ValueError("Discrete parameters must be finite")
        if self.p == 0:
            raise ValueError("Discrete model requires p != 0")

    @property
    def kind(self) -> str:
        return "discrete"

    @property
    def norm_bound(self) -> float:
        return 2.0 * max(abs(self.p), 1.0) + abs(self.q)


@dataclass(frozen=True)
class Continuum:
    """Piecewise constant potential taking the values 0 and ``lam`` on unit cells."""

    lam: float

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ValueError("Continuum model requires lam > 0")

    @property
    def kind(self) -> str:
        return "continuum"


ModelParams = Union[Discrete, Continuum]


@dataclass(frozen=True)
class TorusPoint:
    theta: np.ndarray | float
    phi: np.ndarray | float

    def __post_init__(self):
        object.__setattr__(self, "theta", np.mod(self.theta, 1.0))
        object.__setattr__(self, "phi", np.mod(self.phi, 1.0))


# period-6 orbit of (0, 0, -1); every point lies on the Cayley cubic I = 0
PERIOD6_ORBIT = np.array([
    (0.0, 0.0, -1.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0),
    (0.0, 0.0, 1.0), (-1.0, 0.0, 0.0), (0.0, -1.0, 0.0),
])


def _step(x, y, z):
    return 2.0 * x * y - z, x, y


def trace_map(pt: TracePoint) -> TracePoint:
    """f(x, y, z) = (2xy - z, x, y).

    Raises OrbitEscape if any output coordinate is not finite.
    """
    x, y, z = pt
    with np.errstate(over="ignore", invalid="ignore"):
        out = _step(x, y, z)
    if not np.all(np.isfinite(out[0])):
        raise OrbitEscape("trace map overflowed")
    return TracePoint(*out)


def trace_map_inverse(pt: TracePoint) -> TracePoint:
    x, y, z = pt
    with np.errstate(over="ignore", invalid="ignore"):
        nz = 2.0 * y * z - x
    if not np.all(np.isfinite(nz)):
        raise OrbitEscape("inverse trace map overflowed")
    return TracePoint(y, z, nz)


def fricke_vogt(pt: TracePoint):
    x, y, z = pt
    return x * x + y * y + z * z - 2.0 * x * y * z - 1.0


def cos_sqrt(u):
    """cos(sqrt(u)) continued analytically to u < 0 (where it is cosh(sqrt(-u)))."""
    u = np.asarray(u, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        out = np.where(u >= 0, np.cos(np.sqrt(np.abs(u))), np.cosh(np.sqrt(np.abs(u))))
    small = np.abs(u) < SERIES_CUTOFF
    if np.any(small):
        us = u[small] if u.ndim else u
        series = 1.0 - us / 2.0 + us * us / 24.0 - us ** 3 / 720.0
        if u.ndim:
            out[small] = series
        else:
            out = series
    return out[()] if np.ndim(out) == 0 else out


def sinc_sqrt(u):
    """sin(sqrt(u)) / sqrt(u), entire in u; equal to 1 at u = 0."""
    u = np.asarray(u, dtype=float)
    r = np.sqrt(np.abs(u))
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        out = np.where(u >= 0, np.sin(r) / r, np.sinh(r) / r)
    small = np.abs(u) < SERIES_CUTOFF
    if np.any(small):
        us = u[small] if u.ndim else u
        series = 1.0 - us / 6.0 + us * us / 120.0 - us ** 3 / 5040.0
        if u.ndim:
            out[small] = series
        else:
            out = series
    return out[()] if np.ndim(out) == 0 else out


def initial_condition(model: ModelParams, E) -> TracePoint:
    """Starting triple (x_1, x_0, x_-1) whose forward orbit encodes the spectrum.

    Discrete: ((E - q) / 2p, E / 2, (1 + p^2) / 2p).  Block 1 is the letter
    carrying (p, q), block 0 the free letter.

    Continuum: x_1 = cos sqrt(E) (free cell), x_0 = cos sqrt(E - lam) and
    x_-1 = x_1 x_0 + (E - lam/2) sinc(E) sinc(E - lam), all written through
    entire functions of E so that E = 0 and E = lam need no special casing.
    """
    E = np.asarray(E, dtype=float)
    if isinstance(model, Discrete):
        p, q = model.p, model.q
        x = (E - q) / (2.0 * p)
        y = E / 2.0
        z = np.full_like(E, (1.0 + p * p) / (2.0 * p))
        return TracePoint(x, y, z[()] if z.ndim == 0 else z)
    if isinstance(model, Continuum):
        lam = model.lam
        c0, c1 = cos_sqrt(E), cos_sqrt(E - lam)
        s0, s1 = sinc_sqrt(E), sinc_sqrt(E - lam)
        z = c0 * c1 + (E - 0.5 * lam) * s0 * s1
        return TracePoint(c0, c1, z)
    raise TypeError(f"unknown model {model!r}")


def continuum_block2_half_trace(lam: float, E):
    """Half-trace of the two-cell block: cos cos - (E - lam/2) sinc sinc.

    This is the closed-form curve usually quoted for the continuum model; it
    is the second iterate x_2 = 2 x_1 x_0 - x_-1 of :func:`initial_condition`.
    """
    E = np.asarray(E, dtype=float)
    return (cos_sqrt(E) * cos_sqrt(E - lam)
            - (E - 0.5 * lam) * sinc_sqrt(E) * sinc_sqrt(E - lam))


def free_curve_distance(pts):
    """Euclidean distance from points (..., 3) to the curve {(c, c, 2c^2 - 1) : c real}.

    That curve is the two-cell form (x_1, x_0, x_2) of the zero-coupling
    continuum curve.  The nearest c solves 8c^3 + (2 - 4(z + 1))c - (x + y) = 0;
    all real roots are tried.
    """
    p = np.asarray(pts, dtype=float)
    x, y, z = p[..., 0].ravel(), p[..., 1].ravel(), p[..., 2].ravel()
    n = x.size
    # companion matrices of c^3 + a c + b
    a = (2.0 - 4.0 * (z + 1.0)) / 8.0
    b = -(x + y) / 8.0
    C = np.zeros((n, 3, 3))
    C[:, 1, 0] = C[:, 2, 1] = 1.0
    C[:, 0, 1] = -a
    C[:, 0, 2] = -b
    roots = np.linalg.eigvals(C)
    c = np.where(np.abs(roots.imag) < 1e-9 * (1.0 + np.abs(roots.real)), roots.real, np.nan)
    d2 = (x[:, None] - c) ** 2 + (y[:, None] - c) ** 2 + (z[:, None] - 2 * c * c + 1.0) ** 2
    return np.sqrt(np.nanmin(d2, axis=1)).reshape(p.shape[:-1])


def invariant_of_energy(model: ModelParams, E):
    E = np.asarray(E, dtype=float)
    if isinstance(model, Discrete):
        p, q = model.p, model.q
        a = p * p - 1.0
        return (q * a * E + q * q + a * a) / (4.0 * p * p)
    if isinstance(model, Continuum):
        lam = model.lam
        s = sinc_sqrt(E) * sinc_sqrt(E - lam)
        return 0.25 * lam * lam * s * s
    raise TypeError(f"unknown model {model!r}")


def orbit(pt: TracePoint, n: int) -> np.ndarray:
    """First coordinates x_1, ..., x_{n+1} of the forward orbit (inf/nan allowed)."""
    x, y, z = (np.asarray(c, dtype=float) for c in pt)
    out = [x]
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n):
            x, y, z = _step(x, y, z)
            out.append(x)
    return np.array(out)


def escape_levels(pt: TracePoint, max_level: int) -> np.ndarray:
    """Vectorised :func:`escape_level`; -1 marks "no certificate found".

    Certificate at level k: |x_k| > 1, |x_{k+1}| > 1 and |x_k x_{k+1}| > |x_{k-1}|,
    which forces |x_{n+1}| > |x_n x_{n-1}| for every later n.  A non-finite
    value at level k also counts as escape at k.
    """
    if max_level < 2:
        raise ValueError("max_level must be >= 2")
    x1, x0, xm = (np.asarray(c, dtype=float) for c in pt)
    x1, x0, xm = np.broadcast_arrays(x1, x0, xm)
    level = np.full(x1.shape, -1, dtype=int)
    # (prev, cur, nxt) = (x_{k-1}, x_k, x_{k+1}) starting at k = 0
    prev, cur, nxt = xm.copy(), x0.copy(), x1.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(0, max_level):
            undecided = level < 0
            bad = ~(np.isfinite(cur) & np.isfinite(nxt))
            cert = (np.abs(cur) > 1) & (np.abs(nxt) > 1) & (np.abs(cur * nxt) > np.abs(prev))
            hit = undecided & (bad | cert)
            level[hit] = k
            if np.all(level >= 0):
                break
            prev, cur, nxt = cur, nxt, 2.0 * nxt * cur - prev
    return level


def escape_level(pt: TracePoint, max_level: int) -> int | None:
    """First level at which the orbit of ``pt`` is certified to be unbounded."""
    lv = int(escape_levels(TracePoint(*(float(c) for c in pt)), max_level))
    return None if lv < 0 else lv


def torus_map(t: TorusPoint) -> TorusPoint:
    return TorusPoint(t.theta + t.phi, t.theta)


def torus_embed(t: TorusPoint) -> TracePoint:
    two_pi = 2.0 * np.pi
    return TracePoint(np.cos(two_pi * (t.theta + t.phi)),
                      np.cos(two_pi * t.theta), np.cos(two_pi * t.phi))
