"""Density-of-states measures on band covers and their convolutions."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bands import TOUCH_TOL, BandSet, DimensionEstimate, _merge, from_intervals
from .sumset import IntervalUnion, minkowski_sum

__all__ = [
    "BandMeasure", "dos_from_bands", "ids", "ConvolutionDensity", "convolve",
    "local_measure_dimension", "AcScEvidence", "ac_sc_evidence", "sum_cover_sequence",
    "arcsine_ids", "torus_pushforward_check", "measure_from_intervals",
]


@dataclass(frozen=True)
class BandMeasure:
    """Probability measure that is uniform on each band.

    ``intervals`` are the unmerged bands, so touching bands keep their own
    weights.  A band of zero length carries an atom.
    """

    intervals: np.ndarray
    weights: np.ndarray
    merged: bool = False
    level: int | None = None

    def __post_init__(self):
        iv = np.asarray(self.intervals, float).reshape(-1, 2)
        w = np.asarray(self.weights, float)
        if len(iv) != len(w) or len(iv) == 0:
            raise ValueError("need one weight per band and at least one band")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        if np.any(iv[:, 1] < iv[:, 0]):
            raise ValueError("band with hi < lo")
        object.__setattr__(self, "intervals", iv)
        object.__setattr__(self, "weights", w)

    @property
    def lengths(self) -> np.ndarray:
        return self.intervals[:, 1] - self.intervals[:, 0]

    @property
    def density(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.where(self.lengths > 0, self.weights / self.lengths, np.inf)

    @property
    def support(self) -> tuple[float, float]:
        return float(self.intervals[:, 0].min()), float(self.intervals[:, 1].max())

    def aggregated(self, tol: float = TOUCH_TOL) -> tuple[np.ndarray, np.ndarray]:
        """Bands closer than ``tol`` merged, with their weights summed."""
        order = np.argsort(self.intervals[:, 0], kind="stable")
        merged, counts = _merge(self.intervals[order], tol)
        bounds = np.concatenate([[0], np.cumsum(counts)])
        w = self.weights[order]
        return merged, np.array([w[a:b].sum() for a, b in zip(bounds[:-1], bounds[1:])])

    def mass_in(self, lo, hi) -> np.ndarray:
        """Mass of [lo, hi] (vectorised over lo, hi)."""
        lo, hi = np.broadcast_arrays(np.asarray(lo, float), np.asarray(hi, float))
        a, b = self.intervals[:, 0], self.intervals[:, 1]
        ov = np.clip(np.minimum(hi[..., None], b) - np.maximum(lo[..., None], a), 0.0, None)
        L = b - a
        frac = np.where(L > 0, ov / np.where(L > 0, L, 1.0),
                        ((a >= lo[..., None]) & (a <= hi[..., None])).astype(float))
        return frac @ self.weights


def dos_from_bands(bs: BandSet) -> BandMeasure:
    """Equal weight per band of the approximant, uniform inside each band.

    The unmerged bands are used when available; otherwise each merged
    interval gets weight proportional to the number of bands it absorbed
    and the measure is flagged as merged.
    """
    raw = bs.raw if bs.raw is not None and len(bs.raw) == int(np.sum(bs.counts)) else None
    if raw is not None:
        w = np.full(len(raw), 1.0 / len(raw))
        return BandMeasure(raw, _renorm(w), False, bs.level)
    w = np.asarray(bs.counts, float)
    return BandMeasure(bs.intervals, _renorm(w / w.sum()), bool(np.any(bs.counts > 1)), bs.level)


def _renorm(w: np.ndarray) -> np.ndarray:
    # the last weight absorbs rounding so that the total is 1 to within one ulp
    w = w.copy()
    w[-1] = 1.0 - w[:-1].sum()
    return w


def ids(m: BandMeasure, E) -> np.ndarray | float:
    """Integrated density of states: mass of (-inf, E]."""
    E = np.asarray(E, float)
    a, b = m.intervals[:, 0], m.intervals[:, 1]
    L = b - a
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(L > 0, np.clip((E[..., None] - a) / np.where(L > 0, L, 1.0), 0.0, 1.0),
                        (E[..., None] >= a).astype(float))
    out = np.clip(frac @ m.weights, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def arcsine_ids(E) -> np.ndarray:
    """IDS of the free discrete Laplacian, (1/pi) arccos(-E/2) on [-2, 2]."""
    E = np.clip(np.asarray(E, float), -2.0, 2.0)
    return np.arccos(-E / 2.0) / np.pi


# ---------------------------------------------------------------- convolution

@dataclass
class ConvolutionDensity:
    """Per-cell masses of a measure on a uniform grid."""

    lo: float
    hi: float
    mass: np.ndarray
    sources: tuple | None = field(default=None, repr=False)

    @property
    def cells(self) -> int:
        return len(self.mass)

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.cells

    @property
    def edges(self) -> np.ndarray:
        return self.lo + self.width * np.arange(self.cells + 1)

    @property
    def density(self) -> np.ndarray:
        return self.mass / self.width

    @property
    def total(self) -> float:
        return float(np.sum(self.mass))

    def mass_in(self, lo, hi) -> np.ndarray:
        lo, hi = np.broadcast_arrays(np.asarray(lo, float), np.asarray(hi, float))
        e = self.edges
        ov = np.clip(np.minimum(hi[..., None], e[1:]) - np.maximum(lo[..., None], e[:-1]), 0.0, None)
        return (ov / self.width) @ self.mass

    def exact_mass_in(self, lo, hi) -> np.ndarray:
        """Mass of [lo, hi] from the source measures, without binning error."""
        if self.sources is None:
            return self.mass_in(lo, hi)
        m1, m2 = self.sources
        a0, u, v, w = _pairs(m1, m2)
        lo, hi = np.broadcast_arrays(np.asarray(lo, float), np.asarray(hi, float))
        out = np.zeros(lo.shape)
        step = max(1, 2_000_000 // max(1, len(w)))
        flat_lo, flat_hi, flat_out = lo.ravel(), hi.ravel(), out.reshape(-1)
        for s in range(0, len(flat_lo), step):
            L = flat_lo[s:s + step, None]
            H = flat_hi[s:s + step, None]
            # closed interval: the left CDF is taken just below lo so atoms at lo count
            F = _pair_cdf(H - a0, u, v) - _pair_cdf(np.nextafter(L - a0, -np.inf), u, v)
            flat_out[s:s + step] = F @ w
        return out

    def density_at(self, x: float) -> float:
        i = int(np.clip(np.floor((x - self.lo) / self.width), 0, self.cells - 1))
        return float(self.density[i])


def _pair_cdf(s, u, v):
    """CDF at s of U[0,u] + U[0,v], elementwise, for 0 <= u <= v (either may be 0)."""
    s, u, v = np.broadcast_arrays(*(np.asarray(t, float) for t in (s, u, v)))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # ratios rather than products, so subnormal lengths do not underflow
        r = u + v - s
        trap = np.where(s <= u, 0.5 * (s / u) * (s / v),
                        np.where(s <= v, (s - u / 2) / v, 1.0 - 0.5 * (r / u) * (r / v)))
        lin = s / v
    out = np.where(u > 0, trap, np.where(v > 0, lin, 1.0))
    out = np.where(s < 0, 0.0, out)
    return np.clip(np.where(s >= u + v, 1.0, out), 0.0, 1.0)


def _key(m: BandMeasure) -> tuple:
    return (m.intervals.tobytes(), m.weights.tobytes())


def _pairs(m1: BandMeasure, m2: BandMeasure):
    """Left end, shorter length, longer length and weight of every band pair."""
    a0 = (m1.intervals[:, None, 0] + m2.intervals[None, :, 0]).ravel()
    L1, L2 = m1.lengths[:, None], m2.lengths[None, :]
    u = np.minimum(L1, L2).ravel()
    v = np.maximum(L1, L2).ravel()
    w = (m1.weights[:, None] * m2.weights[None, :]).ravel()
    keep = w > 0
    return a0[keep], u[keep], v[keep], w[keep]


def convolve(m1: BandMeasure, m2: BandMeasure, cells: int = 4096,
             chunk: int = 1_000_000) -> ConvolutionDensity:
    """Law of X + Y for independent X ~ m1, Y ~ m2, binned on ``cells`` cells.

    Each band pair contributes a trapezoid whose CDF is piecewise quadratic;
    cell masses are exact CDF differences, so the total mass telescopes to 1.
    Inputs are put in a canonical order first, so the result does not depend
    on argument order.
    """
    if cells < 16:
        raise ValueError("cells must be >= 16")
    if _key(m2) < _key(m1):
        m1, m2 = m2, m1
    lo = m1.support[0] + m2.support[0]
    hi = m1.support[1] + m2.support[1]
    if hi <= lo:
        hi = lo + 1e-12 * max(1.0, abs(lo))
    h = (hi - lo) / cells
    a0, u, v, w = _pairs(m1, m2)
    first = np.clip(np.floor((a0 - lo) / h).astype(np.int64), 0, cells - 1)
    last = np.clip(np.floor((a0 + u + v - lo) / h).astype(np.int64), 0, cells - 1)
    mass = np.zeros(cells)
    span = last - first + 1
    # fixed pair order, fixed per-cell accumulation order: deterministic output
    starts = np.concatenate([[0], np.cumsum(span)])
    pos = 0
    while pos < len(span):
        end = int(np.searchsorted(starts, starts[pos] + chunk, side="right")) - 1
        end = max(end, pos + 1)
        sl = slice(pos, end)
        n = span[sl]
        pair = np.repeat(np.arange(pos, end), n)
        cell = first[pair] + (np.arange(n.sum()) - np.repeat(starts[sl] - starts[pos], n))
        left = lo + cell * h
        up, vp, ap = u[pair], v[pair], a0[pair]
        # the first and last cell of a pair take everything beyond them
        Fl = np.where(cell == first[pair], 0.0, _pair_cdf(left - ap, up, vp))
        Fr = np.where(cell == last[pair], 1.0, _pair_cdf(left + h - ap, up, vp))
        F = Fr - Fl
        np.add.at(mass, cell, w[pair] * F)
        pos = end
    return ConvolutionDensity(lo, hi, mass, (m1, m2))


# ------------------------------------------------------------------ dimension

def local_measure_dimension(m, x: float, radii) -> DimensionEstimate:
    """Slope of log mass(B_r(x)) against log r.

    Radii giving an empty ball are dropped from the fit and the estimate is
    flagged as degenerate.
    """
    r = np.sort(np.asarray(radii, float))
    if len(r) < 3 or np.any(r <= 0):
        raise ValueError("need at least three positive radii")
    if np.log10(r[-1] / r[0]) < 2.0 - 1e-12:
        raise ValueError("radii must span at least two decades")
    mass = np.asarray(m.mass_in(x - r, x + r), float)
    ok = mass > 0
    degenerate = not bool(np.all(ok))
    if ok.sum() < 2:
        return DimensionEstimate(0.0, float("nan"), r, mass, True, (x - r[-1], x + r[-1]), 0.0)
    X, Y = np.log(r[ok]), np.log(mass[ok])
    A = np.stack([X, np.ones_like(X)], 1)
    coef, *_ = np.linalg.lstsq(A, Y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - Y) ** 2)))
    slope = float(coef[0])
    return DimensionEstimate(min(max(slope, 0.0), 1.0), resid, r, mass, degenerate,
                             (x - r[-1], x + r[-1]), slope)


# -------------------------------------------------------------------- ac / sc

@dataclass
class AcScEvidence:
    mass_on_thin: float
    density_bounded_mass: float
    windows: list
    thresholds: dict

    def to_dict(self) -> dict:
        return {"mass_on_thin": self.mass_on_thin,
                "density_bounded_mass": self.density_bounded_mass,
                "windows": self.windows, "thresholds": self.thresholds}


def sum_cover_sequence(levels1, levels2, tol: float = 1e-8) -> list[IntervalUnion]:
    """Covers of A + B from consecutive-level band sets of A and of B.

    Entry j is (s1_j U s1_{j+1}) + (s2_j U s2_{j+1}), so the list is one
    shorter than the inputs.
    """
    if len(levels1) != len(levels2) or len(levels1) < 2:
        raise ValueError("need matching lists of at least two levels")
    out = []
    for j in range(len(levels1) - 1):
        c1 = np.concatenate([levels1[j].intervals, levels1[j + 1].intervals])
        c2 = np.concatenate([levels2[j].intervals, levels2[j + 1].intervals])
        out.append(minkowski_sum(c1, c2, tol))
    return out


def ac_sc_evidence(conv: ConvolutionDensity, sum_covers, decay_ratio: float = 0.8,
                   density_tol: float = 0.05) -> AcScEvidence:
    """Split the mass of ``conv`` into thin and density-bounded parts.

    Windows are the components of the coarsest cover.  A window is thin when
    the length of the cover inside it shrinks geometrically: the mean
    per-level ratio (first to last cover) is at most ``decay_ratio``.  One
    step alone can stall, since consecutive covers share a level.  A non-thin
    window counts as density-bounded when its maximal density changes by less than ``density_tol`` (relative) after the
    convolution grid is doubled.
    """
    covers = [IntervalUnion.of(c) for c in sum_covers]
    if len(covers) < 3:
        raise ValueError("need covers at three or more levels")
    fine = None
    if conv.sources is not None:
        fine = convolve(*conv.sources, cells=2 * conv.cells)
    windows, thin_mass, bounded_mass = [], 0.0, 0.0
    for lo, hi in covers[0].intervals:
        lengths = [float(c.measure_in(lo, hi)) for c in covers]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = [b / a if a > 0 else 0.0 for a, b in zip(lengths[:-1], lengths[1:])]
        steps = len(lengths) - 1
        mean_ratio = (lengths[-1] / lengths[0]) ** (1.0 / steps) if lengths[0] > 0 else 0.0
        thin = mean_ratio <= decay_ratio
        mass = float(conv.exact_mass_in(lo, hi))
        stable = False
        if not thin and fine is not None and mass > 0:
            d0 = _max_density(conv, lo, hi)
            d1 = _max_density(fine, lo, hi)
            stable = bool(np.isfinite(d0) and d0 > 0 and abs(d1 - d0) <= density_tol * d0)
        if thin:
            thin_mass += mass
        elif stable:
            bounded_mass += mass
        windows.append({"lo": float(lo), "hi": float(hi), "mass": mass,
                        "cover_lengths": [float(x) for x in lengths],
                        "ratios": [float(r) for r in ratios],
                        "mean_ratio": float(mean_ratio), "thin": thin,
                        "density_stable": stable})
    return AcScEvidence(float(min(thin_mass, 1.0)), float(min(bounded_mass, 1.0)), windows,
                        {"decay_ratio": decay_ratio, "density_tol": density_tol})


def _max_density(conv: ConvolutionDensity, lo: float, hi: float) -> float:
    e = conv.edges
    inside = (e[1:] > lo) & (e[:-1] < hi)
    return float(conv.density[inside].max()) if np.any(inside) else float("nan")


# ----------------------------------------------------------------- pushforward

def torus_pushforward_check(samples: int, seed: int = 0, reference=None) -> float:
    """Kolmogorov-Smirnov distance between the law of 2 cos(2 pi theta),
    theta uniform on [0, 1), and a reference IDS.

    ``reference`` is a callable CDF or a :class:`BandMeasure`; by default the
    exact arcsine law is used.
    """
    if samples < 1000:
        raise ValueError("samples must be >= 1000")
    rng = np.random.default_rng(seed)
    E = np.sort(2.0 * np.cos(2.0 * np.pi * rng.random(samples)))
    if reference is None:
        F = arcsine_ids(E)
    elif isinstance(reference, BandMeasure):
        F = ids(reference, E)
    else:
        F = np.asarray(reference(E), float)
    n = len(E)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def measure_from_intervals(intervals, weights=None) -> BandMeasure:
    """BandMeasure on explicit intervals; equal weights unless given."""
    bs = from_intervals(intervals)
    raw = bs.raw
    if weights is None:
        w = np.full(len(raw), 1.0 / len(raw))
    else:
        iv = np.asarray(intervals, float).reshape(-1, 2)
        order = np.argsort(iv[:, 0], kind="stable")
        w = np.asarray(weights, float)[order]
    return BandMeasure(raw, _renorm(w))
