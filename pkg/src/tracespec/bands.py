"""Band covers of periodic approximants, gaps, Newhouse thickness and box dimension."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .oracle import (
    MAX_PERIOD, continuum_piece, discrete_monodromy, fibonacci_block,
    periodic_spectrum, site_matrices,
)
from .precise import band_edges_mp, log10_condition
from .trace import Continuum, Discrete, ModelParams, cos_sqrt, sinc_sqrt

__all__ = [
    "BandError", "Band", "BandSet", "Gap", "CoverCheck", "compute_bands", "continuum_band_edges",
    "continuum_discriminant", "dirichlet_count", "gaps", "ThicknessReport",
    "thickness", "local_thickness", "snap_window", "DimensionEstimate", "box_dimension",
    "covering_check", "middle_thirds", "from_intervals", "TOUCH_TOL",
    "WindowStat", "thickness_window", "dimension_window",
]

# adjacent bands closer than this are treated as touching and merged
TOUCH_TOL = 1e-9
# continuum edges come from bisection to a few ulps, and genuine gaps at
# strong coupling can be far below 1e-9, so the continuum uses a relative test
CONTINUUM_TOUCH_REL = 1e-12
# above this log10 condition number continuum edges switch to multiprecision
PRECISE_THRESHOLD = 10.0


class BandError(RuntimeError):
    """A band edge could not be bracketed or failed its discriminant check."""


@dataclass(frozen=True)
class Band:
    lo: float
    hi: float

    @property
    def length(self) -> float:
        return self.hi - self.lo


@dataclass
class BandSet:
    """Sorted, disjoint bands of one approximant.

    ``counts`` records how many raw bands were merged into each entry, ``raw``
    keeps the unmerged (lo, hi) pairs, and ``touching`` flags merged entries.
    """

    level: int
    intervals: np.ndarray
    counts: np.ndarray
    raw: np.ndarray
    model: ModelParams | None = None
    window: tuple[float, float] | None = None
    meta: dict = field(default_factory=dict)
    exact: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return (Band(float(a), float(b)) for a, b in self.intervals)

    @property
    def lo(self) -> float:
        return float(self.intervals[0, 0])

    @property
    def hi(self) -> float:
        return float(self.intervals[-1, 1])

    @property
    def touching(self) -> np.ndarray:
        return self.counts > 1

    @property
    def lengths(self) -> np.ndarray:
        return self.intervals[:, 1] - self.intervals[:, 0]

    def restrict(self, lo: float, hi: float) -> "BandSet":
        """Bands clipped to [lo, hi]."""
        iv = np.clip(self.intervals, lo, hi)
        keep = iv[:, 1] > iv[:, 0]
        keep |= (self.intervals[:, 0] >= lo) & (self.intervals[:, 1] <= hi)
        raw = np.clip(self.raw, lo, hi)
        rk = (raw[:, 1] > raw[:, 0]) | ((self.raw[:, 0] >= lo) & (self.raw[:, 1] <= hi))
        exact = None
        if self.exact is not None:
            exact = np.array([[max(a, lo), min(b, hi)] for a, b in self.exact[keep]],
                             dtype=object).reshape(-1, 2)
        return BandSet(self.level, iv[keep], self.counts[keep], raw[rk], self.model,
                       (lo, hi), dict(self.meta), exact)


def _merge(raw: np.ndarray, tol: float, rel: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    raw = raw[np.argsort(raw[:, 0], kind="stable")]
    out, counts = [list(raw[0])], [1]
    for a, b in raw[1:]:
        if a - out[-1][1] <= tol + rel * max(1.0, abs(a)):
            out[-1][1] = max(out[-1][1], b)
            counts[-1] += 1
        else:
            out.append([a, b])
            counts.append(1)
    return np.array(out, dtype=float), np.array(counts, dtype=int)


def from_intervals(intervals, level: int = 0, tol: float = 0.0) -> BandSet:
    raw = np.asarray(intervals, dtype=float).reshape(-1, 2)
    if len(raw) == 0:
        raise ValueError("empty band list")
    merged, counts = _merge(raw, tol)
    return BandSet(level, merged, counts, raw[np.argsort(raw[:, 0], kind="stable")])


# ---------------------------------------------------------------- discrete

def _discrete_bands(model: Discrete, k: int) -> BandSet:
    per = periodic_spectrum(model, k, 0.0).eigenvalues
    anti = periodic_spectrum(model, k, np.pi).eigenvalues
    ev = np.sort(np.concatenate([per, anti]))
    raw = ev.reshape(-1, 2)
    mids = raw.mean(axis=1)
    disc = discrete_monodromy(model, mids, k).half_trace
    # forward error of the F_k-fold product: eps * F_k * prod ||S_n||
    word = fibonacci_block(k)
    m0, m1 = site_matrices(model, mids)
    lognorm = np.zeros_like(mids)
    for m, cnt in ((m0, np.sum(word == 0)), (m1, np.sum(word == 1))):
        lognorm += cnt * np.log(np.linalg.norm(m, ord=2, axis=(-2, -1)))
    with np.errstate(over="ignore"):
        slack = 1e-6 + np.finfo(float).eps * len(word) * np.exp(lognorm)
    bad = np.abs(disc) > 1.0 + slack
    if np.any(bad):
        i = int(np.argmax(bad))
        raise BandError(f"band labelling failed on [{raw[i, 0]!r}, {raw[i, 1]!r}] "
                        f"(half-trace {disc[i]!r} at the midpoint)")
    merged, counts = _merge(raw, TOUCH_TOL)
    return BandSet(k, merged, counts, raw, model)


# --------------------------------------------------------------- continuum

def continuum_discriminant(lam: float, k: int, E) -> np.ndarray:
    """Half-trace of the level-k transfer matrix, accumulated cell by cell with
    rescaling; saturates to +-inf instead of overflowing to nan."""
    E = np.atleast_1d(np.asarray(E, dtype=float))
    word = fibonacci_block(k)
    pieces = {0: continuum_piece(E - lam), 1: continuum_piece(E)}
    M = np.broadcast_to(np.eye(2), E.shape + (2, 2)).copy()
    log_scale = np.zeros(E.shape)
    for letter in word:
        M = pieces[int(letter)] @ M
        s = np.abs(M).max(axis=(-2, -1))
        big = s > 1e100
        if np.any(big):
            M[big] /= s[big, None, None]
            log_scale[big] += np.log(s[big])
    tr = 0.5 * (M[..., 0, 0] + M[..., 1, 1])
    with np.errstate(over="ignore", invalid="ignore"):
        out = tr * np.exp(log_scale)
    out = np.where(np.isnan(out), 0.0, out)
    return out


def dirichlet_count(lam: float, k: int, E) -> np.ndarray:
    """Zeros in (0, L] of the solution with psi(0) = 0, psi'(0) = 1 on one period.

    Free pieces are counted with the Pruefer angle, barrier pieces by a sign
    change (at most one zero fits in a piece where E <= V).
    """
    E = np.atleast_1d(np.asarray(E, dtype=float))
    word = fibonacci_block(k)
    psi, dpsi = np.zeros(E.shape), np.ones(E.shape)
    count = np.zeros(E.shape, dtype=np.int64)
    cache = {}
    for v in (0.0, lam):
        u = E - v
        pos = u > 0
        kk = np.sqrt(np.where(pos, u, 0.0))
        cache[v] = (u, pos, kk, cos_sqrt(u), sinc_sqrt(u))
    for letter in word:
        u, pos, kk, c, s = cache[0.0 if letter == 1 else lam]
        new_psi = c * psi + s * dpsi
        new_dpsi = -u * s * psi + c * dpsi
        phi0 = np.arctan2(kk * psi, dpsi)
        osc = np.floor((phi0 + kk) / np.pi) - np.floor(phi0 / np.pi)
        sign_change = ((psi * new_psi < 0) | ((new_psi == 0) & (psi != 0))).astype(float)
        count += np.where(pos, osc, sign_change).astype(np.int64)
        norm = np.maximum(np.abs(new_psi), np.abs(new_dpsi))
        psi, dpsi = new_psi / norm, new_dpsi / norm
    return count


def _edge_predicates(lam, k, E, j, right: bool):
    n = dirichlet_count(lam, k, E)
    d = continuum_discriminant(lam, k, E)
    sgn = np.where(j % 2 == 0, 1.0, -1.0)
    inside = (sgn * d < -1.0) if right else (sgn * d <= 1.0)
    return (n > j) | ((n == j) & inside)


def _bisect(lam, k, j, lo, hi, right, max_iter=200):
    lo, hi = lo.copy(), hi.copy()
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        active = (mid > lo) & (mid < hi)
        if not np.any(active):
            break
        past = _edge_predicates(lam, k, mid, j, right)
        hi = np.where(active & past, mid, hi)
        lo = np.where(active & ~past, mid, lo)
    return hi


def continuum_band_edges(lam: float, k: int, e_lo: float, e_hi: float,
                         max_bands: int | None = None) -> np.ndarray:
    """Edges of the level-k continuum bands meeting [e_lo, e_hi], clipped to it.

    Band j is the set where |Delta| <= 1 and the Dirichlet count equals j.
    Both edge predicates are monotone in E, so each edge is found by plain
    bisection and no thin band can be skipped.
    """
    if e_hi <= e_lo:
        raise ValueError("empty energy range")
    ends = np.array([e_lo, e_hi])
    n_lo, n_hi = dirichlet_count(lam, k, ends)
    js = np.arange(n_lo, n_hi + 1)
    if max_bands is not None:
        js = js[:max_bands]
    lo0, hi0 = np.full(len(js), e_lo, float), np.full(len(js), e_hi, float)
    started_lo = _edge_predicates(lam, k, lo0, js, right=False)
    started_hi = _edge_predicates(lam, k, hi0, js, right=False)
    left = np.where(started_lo, e_lo, _bisect(lam, k, js, lo0, hi0, right=False))
    ended_hi = _edge_predicates(lam, k, hi0, js, right=True)
    ended_lo = _edge_predicates(lam, k, lo0, js, right=True)
    right_e = np.where(ended_hi, _bisect(lam, k, js, lo0, hi0, right=True), e_hi)
    keep = started_hi & ~ended_lo
    edges = np.stack([left, right_e], axis=1)[keep]
    if len(edges):
        mids = edges.mean(axis=1)
        d = continuum_discriminant(lam, k, mids)
        cond = np.array([log10_condition(lam, k, m) for m in mids])
        with np.errstate(over="ignore"):
            slack = 1e-6 + np.finfo(float).eps * 10.0 ** cond
        bad = np.abs(d) > 1.0 + slack
        if np.any(bad):
            i = int(np.argmax(bad))
            raise BandError(f"discriminant {d[i]!r} outside [-1, 1] inside "
                            f"[{edges[i, 0]!r}, {edges[i, 1]!r}]")
    return edges


def _continuum_bands(model: Continuum, k: int, window, precise=None) -> BandSet:
    if window is None:
        raise ValueError("continuum bands need an energy window")
    e_lo, e_hi = map(float, window)
    if precise is None:
        precise = log10_condition(model.lam, k, [e_lo, e_hi]) > PRECISE_THRESHOLD
    if precise:
        exact = band_edges_mp(model.lam, k, e_lo, e_hi)
        if not exact:
            raise BandError(f"no bands in [{e_lo}, {e_hi}] at level {k}")
        ex = np.array(exact, dtype=object)
        raw = np.array([[float(a), float(b)] for a, b in exact])
        return BandSet(k, raw.copy(), np.ones(len(raw), dtype=int), raw, model,
                       (e_lo, e_hi), exact=ex)
    raw = continuum_band_edges(model.lam, k, e_lo, e_hi)
    if len(raw) == 0:
        raise BandError(f"no bands in [{e_lo}, {e_hi}] at level {k}")
    merged, counts = _merge(raw, 0.0, CONTINUUM_TOUCH_REL)
    return BandSet(k, merged, counts, raw, model, (e_lo, e_hi))


def compute_bands(model: ModelParams, k: int, window=None, precise: bool | None = None) -> BandSet:
    """Spectrum of the level-k periodic approximant as a union of bands.

    Discrete bands come from the periodic and antiperiodic eigenvalues; a
    window, if given, only clips the result.  Continuum bands need a window;
    when the transfer matrices are too ill-conditioned for double precision
    (or ``precise`` is set) the edges are computed in multiprecision and kept
    in ``BandSet.exact``.
    """
    if k < 1:
        raise ValueError("level must be >= 1")
    if isinstance(model, Discrete):
        if len(fibonacci_block(k)) > MAX_PERIOD:
            raise ValueError(f"level {k} exceeds the dense period limit {MAX_PERIOD}")
        bs = _discrete_bands(model, k)
        if window is not None:
            bs = bs.restrict(*window)
        return bs
    if isinstance(model, Continuum):
        return _continuum_bands(model, k, window, precise)
    raise TypeError(f"unknown model {model!r}")


@dataclass(frozen=True)
class Gap:
    """Open gap (lo, hi) between bands ``left`` and ``left + 1``."""

    lo: float
    hi: float
    left: int
    right: int

    @property
    def length(self) -> float:
        return self.hi - self.lo


def gaps(bs) -> list[Gap]:
    iv = bs.intervals if isinstance(bs, BandSet) else np.asarray(bs, float).reshape(-1, 2)
    return [Gap(float(iv[i, 1]), float(iv[i + 1, 0]), i, i + 1) for i in range(len(iv) - 1)]


# --------------------------------------------------------------- thickness

@dataclass
class ThicknessReport:
    """Newhouse thickness of a finite band union.

    ``ratios[i]`` is min(left bridge, right bridge) / length of gap i, in
    positional order; ``tau`` is their minimum (inf for a single band).
    """

    tau: float
    ratios: np.ndarray
    gap_lengths: np.ndarray
    bridges: np.ndarray
    argmin: int | None
    truncated: np.ndarray
    window: tuple[float, float] | None = None


def _bridges(iv: np.ndarray):
    """For each gap, distances from its ends to the nearest larger gap on each side.

    Gaps are ranked by decreasing length with ties broken left to right, which
    is the order in which an ordered presentation removes them.  The two
    boolean arrays mark bridges that run all the way to the set's extremes.
    """
    g_lo, g_hi = iv[:-1, 1], iv[1:, 0]
    glen = g_hi - g_lo
    n = len(glen)
    rank = np.empty(n, dtype=int)
    rank[np.lexsort((np.arange(n), -glen))] = np.arange(n)
    left_end = np.full(n, iv[0, 0])
    right_end = np.full(n, iv[-1, 1])
    to_left, to_right = np.ones(n, bool), np.ones(n, bool)
    stack: list[int] = []
    for i in range(n):
        while stack and rank[stack[-1]] > rank[i]:
            stack.pop()
        if stack:
            left_end[i], to_left[i] = g_hi[stack[-1]], False
        stack.append(i)
    stack = []
    for i in range(n - 1, -1, -1):
        while stack and rank[stack[-1]] > rank[i]:
            stack.pop()
        if stack:
            right_end[i], to_right[i] = g_lo[stack[-1]], False
        stack.append(i)
    return glen, g_lo - left_end, right_end - g_hi, to_left, to_right


def thickness(bs) -> ThicknessReport:
    iv = bs.intervals if isinstance(bs, BandSet) else np.asarray(bs, float).reshape(-1, 2)
    if len(iv) < 2:
        return ThicknessReport(np.inf, np.empty(0), np.empty(0), np.empty((0, 2)), None,
                               np.empty(0, dtype=bool))
    glen, bl, br, _, _ = _bridges(iv)
    ratios = np.minimum(bl, br) / glen
    i = int(np.argmin(ratios))
    return ThicknessReport(float(ratios[i]), ratios, glen, np.stack([bl, br], 1), i,
                           np.zeros(len(glen), dtype=bool))


def snap_window(bs, window, anchor: float | None = None) -> tuple[float, float]:
    """Shrink ``window`` so that its interior sides end at gap edges.

    On each side of ``anchor`` that lies strictly inside the hull of the set,
    the cut is placed at the largest gap meeting that half of the window.
    Every gap kept inside is then no larger than the cut gap, so its
    bridges are the same as in the full set.
    """
    iv = bs.intervals if isinstance(bs, BandSet) else np.asarray(bs, float).reshape(-1, 2)
    lo, hi = map(float, window)
    a = 0.5 * (lo + hi) if anchor is None else float(anchor)
    g_lo, g_hi = iv[:-1, 1], iv[1:, 0]
    glen = g_hi - g_lo
    new_lo, new_hi = lo, hi
    if hi < iv[-1, 1]:
        right = (g_lo >= a) & (g_lo <= hi)
        if np.any(right):
            new_hi = float(g_lo[np.argmax(np.where(right, glen, -1.0))])
    if lo > iv[0, 0]:
        left = (g_hi <= a) & (g_hi >= lo)
        if np.any(left):
            new_lo = float(g_hi[np.argmax(np.where(left, glen, -1.0))])
    return new_lo, new_hi


def local_thickness(bs, window, anchor: float | None = None, snap: bool = True) -> ThicknessReport:
    """Thickness of the part of the set inside ``window``.

    With ``snap`` the window is first cut at gap edges (see :func:`snap_window`).
    Any remaining side where the window boundary splits the set is handled by
    clipping; a bridge that reaches such a boundary is flagged in
    ``truncated``, since the bridge in the full set can only be longer.
    """
    lo, hi = map(float, window)
    src = bs if isinstance(bs, BandSet) else from_intervals(bs)
    if snap:
        lo, hi = snap_window(src, (lo, hi), anchor)
    clipped = src.restrict(lo, hi)
    if len(clipped) == 0:
        raise ValueError("window contains no bands")
    rep = thickness(clipped)
    if rep.argmin is not None:
        _, _, _, to_left, to_right = _bridges(clipped.intervals)
        cut_left = np.any((src.intervals[:, 0] < lo) & (src.intervals[:, 1] > lo))
        cut_right = np.any((src.intervals[:, 0] < hi) & (src.intervals[:, 1] > hi))
        rep.truncated = (to_left & cut_left) | (to_right & cut_right)
    rep.window = (lo, hi)
    return rep


# --------------------------------------------------------------- dimension

@dataclass
class DimensionEstimate:
    """Box-counting slope clamped to [0, 1]; ``raw_value`` is the unclamped fit."""

    value: float
    residual: float
    scales: np.ndarray
    counts: np.ndarray
    degenerate: bool
    window: tuple[float, float] | None = None
    raw_value: float = float("nan")


def _cell_count(iv, eps) -> int:
    # an edge within a relative 1e-9 of a grid line counts as on it, which
    # absorbs the rounding in edge / eps for edges far from the origin
    if isinstance(eps, float):
        lo, hi = iv[:, 0] / eps, iv[:, 1] / eps
        first = np.floor(lo + 1e-9 * np.maximum(1.0, np.abs(lo)))
        last = np.ceil(hi - 1e-9 * np.maximum(1.0, np.abs(hi))) - 1.0
        last = np.maximum(last, first)
        pairs = zip(first.astype(np.int64).tolist(), last.astype(np.int64).tolist())
    else:
        # multiprecision endpoints: the same rule in exact arithmetic
        rel = mpmath.mpf(10) ** -9
        pairs = []
        for a, b in iv:
            x, y = a / eps, b / eps
            f = int(mpmath.floor(x + rel * max(1, abs(x))))
            g = max(int(mpmath.ceil(y - rel * max(1, abs(y)))) - 1, f)
            pairs.append((f, g))
    cells = set()
    for f, g in pairs:
        cells.update(range(f, g + 1))
    return len(cells)


def box_dimension(sets, window=None, dyadic_levels: int = 12) -> DimensionEstimate:
    """Box-counting slope over a sequence of covers (e.g. successive approximants).

    Each cover contributes one point (eps_k, N_k) where eps_k is its longest
    interval inside the window.  If the covers give fewer than two distinct
    scales, dyadic scales on the finest cover are used instead and the result
    is flagged as degenerate.  Covers carrying multiprecision edges are
    counted exactly.
    """
    covers = []
    for s in sets:
        bs = s if isinstance(s, BandSet) else from_intervals(s)
        if window is not None:
            bs = bs.restrict(*window)
        if len(bs) == 0:
            raise ValueError("a cover has no bands in the window")
        covers.append(bs)
    if len(covers) < 3:
        raise ValueError("box dimension needs at least three covers")
    use_exact = any(c.exact is not None for c in covers)
    if use_exact:
        ivs = [c.exact if c.exact is not None else
               np.array([[mpmath.mpf(a), mpmath.mpf(b)] for a, b in c.intervals], dtype=object)
               for c in covers]
    else:
        ivs = [c.intervals for c in covers]
    eps, counts = [], []
    for iv in ivs:
        e = max(b - a for a, b in iv)
        if e > 0:
            eps.append(e)
            counts.append(_cell_count(iv, e if use_exact else float(e)))
    # scales closer than 1% are the same scale
    logs = sorted(float(mpmath.log(e)) if use_exact else float(np.log(e)) for e in eps)
    degenerate = not logs or logs[-1] - logs[0] < np.log(1.01)
    if degenerate:
        iv = ivs[-1]
        span = iv[-1][1] - iv[0][0]
        if span <= 0:
            return DimensionEstimate(0.0, 0.0, np.array([]), np.array([]), True, window, 0.0)
        eps = [span * 2.0 ** -j for j in range(1, dyadic_levels + 1)]
        counts = [_cell_count(iv, e if use_exact else float(e)) for e in eps]
    x = -np.array([float(mpmath.log(e)) if use_exact else np.log(e) for e in eps])
    y = np.log(np.array(counts, dtype=float))
    A = np.stack([x, np.ones_like(x)], 1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    slope = float(coef[0])
    return DimensionEstimate(min(max(slope, 0.0), 1.0), resid,
                             np.array([float(e) for e in eps]), np.array(counts),
                             degenerate, None if window is None else tuple(window), slope)


# ---------------------------------------------------------------- coverage

@dataclass
class CoverCheck:
    ok: bool
    violations: list

    def __bool__(self) -> bool:
        return self.ok


def covering_check(bs_k: BandSet, bs_next: BandSet, bs_next2: BandSet,
                   tol: float = 1e-8) -> CoverCheck:
    """Check that every level-(k+2) band lies in the union of levels k and k+1
    dilated by ``tol``; violating bands are listed."""
    models = {repr(b.model) for b in (bs_k, bs_next, bs_next2)}
    if len(models) > 1:
        raise ValueError("band sets belong to different models")
    if bs_next.level != bs_k.level + 1 or bs_next2.level != bs_k.level + 2:
        raise ValueError("band sets are not consecutive levels")
    cover = np.concatenate([bs_k.intervals, bs_next.intervals])
    merged, _ = _merge(cover, 2.0 * tol)
    bad = []
    for a, b in bs_next2.intervals:
        i = np.searchsorted(merged[:, 0], a + tol, side="right") - 1
        if i < 0 or merged[i, 1] + tol < b or merged[i, 0] - tol > a:
            bad.append((float(a), float(b)))
    return CoverCheck(not bad, bad)


def middle_thirds(level: int) -> BandSet:
    """Level-n middle-thirds Cantor cover with exactly rounded endpoints."""
    ivs = [(Fraction(0), Fraction(1))]
    for _ in range(level):
        nxt = []
        for a, b in ivs:
            t = (b - a) / 3
            nxt += [(a, a + t), (b - t, b)]
        ivs = nxt
    return from_intervals([(float(a), float(b)) for a, b in ivs], level=level)


# ------------------------------------------------------------ end windows

@dataclass
class WindowStat:
    """Statistic evaluated on a window, with the per-level values behind it."""

    window: tuple[float, float]
    value: float
    per_level: list
    stable: bool
    level_windows: list | None = None


def _extreme(bs: BandSet, end: str) -> float:
    if end not in ("lo", "hi"):
        raise ValueError("end must be 'lo' or 'hi'")
    return bs.lo if end == "lo" else bs.hi


def _end_interval(e: float, w: float, end: str) -> tuple[float, float]:
    return (e - 1e-12 * max(1.0, abs(e)), e + w) if end == "lo" else \
        (e - w, e + 1e-12 * max(1.0, abs(e)))


def thickness_window(covers, end: str, w0: float, rel_tol: float = 0.25,
                     min_gaps: int = 2, max_halvings: int = 40) -> WindowStat:
    """Local thickness at a spectral extreme.

    The window at the extreme is halved for as long as the level-k piece
    still has ``min_gaps`` gaps; the smallest window on which the first two
    covers agree to ``rel_tol`` is reported, with the smaller of the two
    values.  If no window gives agreement the last one tried is returned
    with ``stable`` False.  A window without gaps (a solid interval at the
    extreme) has infinite thickness.
    """
    a, b = covers[0], covers[1]
    w = float(w0)
    best = last = None
    for _ in range(max_halvings):
        vals = []
        for bs in (a, b):
            e = _extreme(bs, end)
            rep = local_thickness(bs, _end_interval(e, w, end), anchor=e)
            vals.append((rep.tau, len(rep.ratios), rep.window))
        (ta, na, wa), (tb, nb, wb) = vals
        if na < min_gaps or nb < min_gaps:
            break
        last = WindowStat(wa, float(min(ta, tb)), [ta, tb], False, [wa, wb])
        if np.isfinite(ta) and np.isfinite(tb) and abs(ta - tb) <= rel_tol * max(ta, tb):
            last.stable = True
            best = last
        w *= 0.5
    if best is not None:
        return best
    if last is not None:
        return last
    # the first window is already too sparse: report it as it is
    (ta, na, wa), (tb, nb, wb) = vals
    both = np.isinf(ta) and np.isinf(tb)
    agree = both or (np.isfinite(ta) and np.isfinite(tb) and abs(ta - tb) <= rel_tol * max(ta, tb))
    return WindowStat(wa, float(min(ta, tb)), [ta, tb], bool(agree), [wa, wb])


def dimension_window(covers, end: str, w0: float, abs_tol: float = 0.05,
                     min_bands: int = 3, max_halvings: int = 30) -> WindowStat:
    """Box dimension near a spectral extreme from ``covers`` (>= 4 consecutive
    levels): the estimate from the first three levels must agree with the
    estimate from the last three."""
    if len(covers) < 4:
        raise ValueError("need at least four consecutive levels")
    w = float(w0)
    last = None
    e = _extreme(covers[-1], end)
    for _ in range(max_halvings):
        win = _end_interval(e, w, end)
        counts = [len(bs.restrict(*win)) for bs in covers]
        # coarse levels near a thin extreme hold only a band or two; the
        # finest level decides whether the window still resolves anything
        if min(counts) < 1 or counts[-1] < min_bands:
            break
        last = _two_fits(covers, win)
        d1, d2 = last.per_level
        if abs(d1.value - d2.value) <= abs_tol and not (d1.degenerate or d2.degenerate):
            last.stable = True
            return last
        w *= 0.5
    if last is None:
        last = _two_fits(covers, _end_interval(e, w0, end))
    return last


def _two_fits(covers, win) -> WindowStat:
    d1 = box_dimension(covers[:3], win)
    d2 = box_dimension(covers[-3:], win)
    return WindowStat(win, max(d1.value, d2.value), [d1, d2], False)
