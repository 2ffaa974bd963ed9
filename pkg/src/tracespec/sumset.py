"""Sums of spectra: Minkowski sums of band covers, Gap-Lemma and dimension
certificates, the interval/Cantor regime classifier and the parameter scanner."""
from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .bands import (
    BandSet, DimensionEstimate, ThicknessReport, compute_bands, dimension_window,
    local_thickness, thickness, thickness_window,
)
from .trace import (
    PERIOD6_ORBIT, Continuum, Discrete, ModelParams, initial_condition, invariant_of_energy,
)

log = logging.getLogger(__name__)

__all__ = [
    "IntervalUnion", "minkowski_sum", "gap_lemma_certificate", "dimension_sum_bound",
    "RegimeThresholds", "RegimeReport", "classify_pair", "ScanGrid", "ScanRow",
    "ScanResult", "scan_grid", "continuum_mixed_check", "orbit_distance",
    "near_orbit_energy", "fixed_point_distance",
]


class IntervalUnion:
    """Sorted union of closed intervals, merged when overlapping or touching.

    ``tol`` additionally closes holes of length <= tol.
    """

    __slots__ = ("intervals",)

    def __init__(self, intervals, tol: float = 0.0):
        iv = np.asarray(intervals, dtype=float).reshape(-1, 2)
        if len(iv) and np.any(iv[:, 1] < iv[:, 0]):
            raise ValueError("interval with hi < lo")
        self.intervals = _normalize(iv, tol)

    @classmethod
    def of(cls, obj, tol: float = 0.0) -> "IntervalUnion":
        if isinstance(obj, IntervalUnion):
            return obj if tol == 0 else cls(obj.intervals, tol)
        if isinstance(obj, BandSet):
            return cls(obj.intervals, tol)
        return cls(obj, tol)

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(map(tuple, self.intervals))

    def __repr__(self) -> str:
        if len(self) <= 4:
            body = ", ".join(f"[{a:.6g}, {b:.6g}]" for a, b in self.intervals)
        else:
            body = f"{len(self)} intervals in [{self.lo:.6g}, {self.hi:.6g}]"
        return f"IntervalUnion({body})"

    def __eq__(self, other) -> bool:
        return isinstance(other, IntervalUnion) and np.array_equal(self.intervals, other.intervals)

    @property
    def lo(self) -> float:
        return float(self.intervals[0, 0])

    @property
    def hi(self) -> float:
        return float(self.intervals[-1, 1])

    @property
    def measure(self) -> float:
        return float(np.sum(self.intervals[:, 1] - self.intervals[:, 0]))

    @property
    def hull_length(self) -> float:
        return self.hi - self.lo

    def gap_lengths(self) -> np.ndarray:
        return self.intervals[1:, 0] - self.intervals[:-1, 1]

    def clip(self, lo: float, hi: float) -> "IntervalUnion":
        iv = np.clip(self.intervals, lo, hi)
        keep = (iv[:, 1] > iv[:, 0]) | ((self.intervals[:, 0] >= lo) & (self.intervals[:, 1] <= hi))
        return IntervalUnion(iv[keep])

    def intersect(self, other: "IntervalUnion") -> "IntervalUnion":
        a, b = self.intervals, other.intervals
        if len(a) == 0 or len(b) == 0:
            return IntervalUnion([])
        # b-intervals meeting each a-interval form a contiguous index range
        j0 = np.searchsorted(b[:, 1], a[:, 0], side="left")
        j1 = np.searchsorted(b[:, 0], a[:, 1], side="right")
        n = np.maximum(j1 - j0, 0)
        i = np.repeat(np.arange(len(a)), n)
        j = np.repeat(j0, n) + (np.arange(n.sum()) - np.repeat(np.cumsum(n) - n, n))
        lo = np.maximum(a[i, 0], b[j, 0])
        hi = np.minimum(a[i, 1], b[j, 1])
        return IntervalUnion(np.stack([lo, hi], 1)[lo <= hi])

    def measure_in(self, lo, hi):
        """Length of the union inside [lo, hi] (vectorised)."""
        iv = self.intervals
        lo, hi = np.broadcast_arrays(np.asarray(lo, float), np.asarray(hi, float))
        if len(iv) == 0:
            return np.zeros(lo.shape)
        cum = np.concatenate([[0.0], np.cumsum(iv[:, 1] - iv[:, 0])])

        def upto(x):
            # length of the union inside (-inf, x]
            k = np.searchsorted(iv[:, 0], x, side="right")
            part = np.where(k > 0, np.clip(x - iv[np.maximum(k - 1, 0), 0], 0.0,
                                           iv[np.maximum(k - 1, 0), 1] - iv[np.maximum(k - 1, 0), 0]),
                            0.0)
            return cum[np.maximum(k - 1, 0)] * (k > 0) + part

        return np.maximum(upto(hi) - upto(lo), 0.0)

    def contains(self, lo: float, hi: float) -> bool:
        k = np.searchsorted(self.intervals[:, 0], lo, side="right") - 1
        return k >= 0 and self.intervals[k, 1] >= hi

    def longest(self) -> tuple[float, float]:
        lens = self.intervals[:, 1] - self.intervals[:, 0]
        k = int(np.argmax(lens))
        return float(self.intervals[k, 0]), float(self.intervals[k, 1])


def _normalize(iv: np.ndarray, tol: float) -> np.ndarray:
    if len(iv) == 0:
        return iv.reshape(0, 2)
    iv = iv[np.lexsort((iv[:, 1], iv[:, 0]))]
    # running maximum of right ends; a new component starts where the next
    # left end exceeds every right end seen so far
    run_hi = np.maximum.accumulate(iv[:, 1])
    starts = np.concatenate([[True], iv[1:, 0] - run_hi[:-1] > tol])
    idx = np.flatnonzero(starts)
    ends = np.concatenate([idx[1:] - 1, [len(iv) - 1]])
    return np.stack([iv[idx, 0], run_hi[ends]], axis=1)


def minkowski_sum(a, b, tol: float = 0.0) -> IntervalUnion:
    """{x + y : x in a, y in b} as a normalised union.

    Endpoints are plain float sums of input endpoints; pairs are processed in
    chunks so that large covers stay within memory.
    """
    A, B = IntervalUnion.of(a).intervals, IntervalUnion.of(b).intervals
    if len(A) == 0 or len(B) == 0:
        raise ValueError("minkowski_sum needs nonempty inputs")
    if len(A) < len(B):
        A, B = B, A
    parts = []
    chunk = max(1, 2_000_000 // len(B))
    for s in range(0, len(A), chunk):
        blk = A[s:s + chunk]
        lo = (blk[:, None, 0] + B[None, :, 0]).ravel()
        hi = (blk[:, None, 1] + B[None, :, 1]).ravel()
        parts.append(_normalize(np.stack([lo, hi], 1), tol))
    return IntervalUnion(np.concatenate(parts), tol)


def gap_lemma_certificate(a_report: ThicknessReport, b_report: ThicknessReport, a, b) -> bool:
    """Sufficient condition for a + b to be the single interval [min a + min b, max a + max b].

    Requires tau(a) * tau(b) > 1 (strict) and that each set's hull is at
    least as long as the largest gap of the other, which is the form of the
    linking hypothesis that is invariant under translating one set.
    """
    A, B = IntervalUnion.of(a), IntervalUnion.of(b)
    if len(A) == 0 or len(B) == 0:
        return False
    ta, tb = a_report.tau, b_report.tau
    with np.errstate(invalid="ignore", over="ignore"):
        prod = ta * tb
    if not (prod > 1.0):
        return False
    ga = A.gap_lengths().max(initial=0.0)
    gb = B.gap_lengths().max(initial=0.0)
    return A.hull_length >= gb and B.hull_length >= ga


def _value(d) -> float:
    return float(d.value if isinstance(d, DimensionEstimate) else d)


def dimension_sum_bound(d_box_a, d_haus_b) -> float:
    """min(dim_B a + dim_H b, 1); a value below 1 means the sum has zero length."""
    va, vb = _value(d_box_a), _value(d_haus_b)
    if not (0.0 <= va <= 1.0 and 0.0 <= vb <= 1.0):
        raise ValueError("dimension estimates must lie in [0, 1]")
    return min(va + vb, 1.0)


# ------------------------------------------------------------ classification

@dataclass(frozen=True)
class RegimeThresholds:
    """Tunable constants of the classifier."""

    hole_tol: float = 1e-8          # holes below this are ignored in sum covers
    stability_tol: float = 1e-8     # agreement of evidence windows across levels
    cantor_bound: float = 0.95      # dimension_sum_bound threshold for Cantor evidence
    window_frac: float = 1.0 / 16   # initial end-window width as a fraction of the spread
    thick_rel_tol: float = 0.25     # level-to-level agreement of local thickness
    dim_abs_tol: float = 0.05       # level-to-level agreement of local dimension
    min_interval: float = 1e-6      # shortest accepted interval evidence, relative to spread


@dataclass
class RegimeReport:
    models: tuple
    level: int
    verdict: str
    interval_evidence: dict | None = None
    cantor_evidence: dict | None = None
    stable: bool | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict == "mixed" and (self.interval_evidence is None or self.cantor_evidence is None):
            raise ValueError("a mixed verdict needs both evidence records")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["models"] = [_model_dict(m) for m in self.models]
        return _jsonable(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _model_dict(m) -> dict:
    if isinstance(m, Discrete):
        return {"kind": "discrete", "p": m.p, "q": m.q}
    if isinstance(m, Continuum):
        return {"kind": "continuum", "lambda": m.lam}
    return {"repr": repr(m)}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        if np.isfinite(v):
            return float(f"{v:.17g}")
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def _cover(levels: dict, j: int) -> IntervalUnion:
    # the spectrum lies in sigma_j U sigma_{j+1}
    return IntervalUnion(np.concatenate([levels[j].intervals, levels[j + 1].intervals]))


def _end_value(bs: BandSet, end: str) -> float:
    return bs.lo if end == "lo" else bs.hi


def _interval_side(levels1, levels2, k, end, th: RegimeThresholds) -> dict | None:
    spread = max(levels1[k].hi - levels1[k].lo, levels2[k].hi - levels2[k].lo)
    w0 = th.window_frac * spread
    tw1 = thickness_window([levels1[k], levels1[k + 1]], end, w0, th.thick_rel_tol)
    tw2 = thickness_window([levels2[k], levels2[k + 1]], end, w0, th.thick_rel_tol)
    if not (tw1.stable and tw2.stable):
        return None
    certs = []
    for i, j in enumerate((k, k + 1)):
        a = levels1[j].restrict(*tw1.level_windows[i])
        b = levels2[j].restrict(*tw2.level_windows[i])
        certs.append(gap_lemma_certificate(thickness(a), thickness(b), a, b))
    if not all(certs):
        return None
    sums = []
    for j in (k, k + 1, k + 2):
        c1 = _cover(levels1, j).clip(*tw1.window)
        c2 = _cover(levels2, j).clip(*tw2.window)
        sums.append(minkowski_sum(c1, c2, th.hole_tol))
    common = sums[0]
    for s in sums[1:]:
        common = common.intersect(s)
    if len(common) == 0:
        return None
    lo, hi = common.longest()
    if hi - lo < th.min_interval * spread:
        return None
    return {
        "end": end, "window": [lo, hi], "levels": [k, k + 1, k + 2],
        "local_windows": [list(tw1.window), list(tw2.window)],
        "tau": [tw1.value, tw2.value], "tau_stable": [tw1.stable, tw2.stable],
    }


def _cantor_side(levels1, levels2, k, end, th: RegimeThresholds) -> dict | None:
    spread = max(levels1[k].hi - levels1[k].lo, levels2[k].hi - levels2[k].lo)
    w0 = th.window_frac * spread
    covers1 = [levels1[j] for j in range(k, k + 4)]
    covers2 = [levels2[j] for j in range(k, k + 4)]
    dw1 = dimension_window(covers1, end, w0, th.dim_abs_tol)
    dw2 = dimension_window(covers2, end, w0, th.dim_abs_tol)
    bound = dimension_sum_bound(dw1.value, dw2.value)
    lengths, n_gaps = [], []
    for j in (k, k + 1, k + 2):
        s = minkowski_sum(_cover(levels1, j).clip(*dw1.window),
                          _cover(levels2, j).clip(*dw2.window), th.hole_tol)
        lengths.append(s.measure)
        n_gaps.append(len(s) - 1)
    persistent = all(g > 0 for g in n_gaps)
    if not (bound < th.cantor_bound and persistent):
        return None
    return {
        "end": end, "window": [dw1.window[0] + dw2.window[0], dw1.window[1] + dw2.window[1]],
        "levels": [k, k + 1, k + 2], "dimension": [dw1.value, dw2.value],
        "dimension_sum_bound": bound, "sum_cover_length": lengths, "sum_cover_gaps": n_gaps,
        "dim_stable": [dw1.stable, dw2.stable],
    }


def _verdict(interval, cantor) -> str:
    if interval and cantor:
        return "mixed"
    if interval:
        return "interval-only"
    if cantor:
        return "cantor-only"
    return "undetermined"


def _classify_discrete(m1: Discrete, m2: Discrete, k: int, th: RegimeThresholds):
    levels1 = {j: compute_bands(m1, j) for j in range(k, k + 4)}
    levels2 = levels1 if m2 == m1 else {j: compute_bands(m2, j) for j in range(k, k + 4)}
    interval = cantor = None
    for end in ("lo", "hi"):
        interval = interval or _interval_side(levels1, levels2, k, end, th)
        cantor = cantor or _cantor_side(levels1, levels2, k, end, th)
    ends = {f"V_{e}": [float(invariant_of_energy(m, _end_value(lv[k + 3], e))) for m, lv in
                       ((m1, levels1), (m2, levels2))] for e in ("lo", "hi")}
    return interval, cantor, ends


def classify_pair(m1: ModelParams, m2: ModelParams, k: int,
                  thresholds: RegimeThresholds | None = None,
                  e_max: float = 1e5) -> RegimeReport:
    """Classify the sum of two spectra as interval, Cantor or mixed near its ends.

    Evidence is computed at levels k..k+3 and again at k+1..k+4; if the two
    verdicts differ the result is downgraded to ``undetermined``.
    """
    th = thresholds or RegimeThresholds()
    if isinstance(m1, Continuum) and isinstance(m2, Continuum):
        return continuum_mixed_check(m1.lam, m2.lam, k, e_max, thresholds=th)
    if not (isinstance(m1, Discrete) and isinstance(m2, Discrete)):
        raise TypeError("classify_pair needs two discrete or two continuum models")
    i0, c0, ends = _classify_discrete(m1, m2, k, th)
    i1, c1, _ = _classify_discrete(m1, m2, k + 1, th)
    v0, v1 = _verdict(i0, c0), _verdict(i1, c1)
    stable = v0 == v1
    verdict = v0 if stable else "undetermined"
    return RegimeReport((m1, m2), k, verdict, i0 if stable or verdict != "mixed" else None,
                        c0, stable, {"verdict_next_level": v1, **ends})


# ------------------------------------------------------------------- scanner

@dataclass(frozen=True)
class ScanGrid:
    """Rectangular parameter grid.

    Discrete grids use ``p_range``/``q_range``; a continuum grid sets
    ``lam_range`` instead.  Step counts are the number of grid points.
    """

    p_range: tuple[float, float] | None = (-30.0, -10.0)
    q_range: tuple[float, float] | None = (10.0, 30.0)
    p_steps: int = 11
    q_steps: int = 11
    k: int = 8
    lam_range: tuple[float, float] | None = None
    lam_steps: int = 1
    window_frac: float = 1.0 / 16
    workers: int = 1

    def __post_init__(self):
        if min(self.p_steps, self.q_steps, self.lam_steps) < 1:
            raise ValueError("step counts must be >= 1")
        if self.lam_range is None:
            lo, hi = self.p_range
            if lo <= 0 <= hi:
                raise ValueError("p range must exclude 0")

    def points(self) -> list:
        if self.lam_range is not None:
            return [Continuum(float(l)) for l in np.linspace(*self.lam_range, self.lam_steps)]
        ps = np.linspace(*self.p_range, self.p_steps)
        qs = np.linspace(*self.q_range, self.q_steps)
        return [Discrete(float(p), float(q)) for p in ps for q in qs]


@dataclass
class ScanRow:
    model: ModelParams
    v_min: float
    v_max: float
    tau_local: float
    dim_local: float
    candidate: bool
    margin: float
    small_end: str


@dataclass
class ScanResult:
    rows: list
    failures: list

    @property
    def candidates(self) -> list:
        return sorted((r for r in self.rows if r.candidate), key=lambda r: -r.margin)


def _scan_discrete(m: Discrete, grid: ScanGrid) -> ScanRow:
    k = grid.k
    levels = [compute_bands(m, j) for j in range(k, k + 4)]
    lo, hi = levels[0].lo, levels[0].hi
    v_lo, v_hi = float(invariant_of_energy(m, lo)), float(invariant_of_energy(m, hi))
    small, large = ("lo", "hi") if v_lo <= v_hi else ("hi", "lo")
    w0 = grid.window_frac * (hi - lo)
    tw = thickness_window(levels[:2], small, w0)
    dw = dimension_window(levels, large, w0)
    tau, dim = tw.value, dw.value
    cand = bool(tw.stable and tau > 1.0 and dim < 0.5 and v_lo != v_hi)
    margin = float(min(tau - 1.0, 1.0 - 2.0 * dim)) if np.isfinite(tau) else float(1.0 - 2.0 * dim)
    return ScanRow(m, min(v_lo, v_hi), max(v_lo, v_hi), tau, dim, cand, margin, small)


def _scan_continuum(m: Continuum, grid: ScanGrid) -> ScanRow:
    rep = continuum_mixed_check(m.lam, m.lam, grid.k, 1e5)
    hi_e = rep.details.get("high_energy", [{}])[0]
    bot = rep.details.get("bottom", [{}])[0]
    tau = float(hi_e.get("tau", np.nan))
    dim = float(bot.get("dimension", np.nan))
    cand = bool(tau > 1.0 and dim < 0.5)
    return ScanRow(m, float(hi_e.get("V", np.nan)), float(bot.get("V", np.nan)), tau, dim, cand,
                   float(min(tau - 1.0, 1.0 - 2.0 * dim)), "high-energy")


def _scan_point(args):
    m, grid = args
    try:
        row = _scan_continuum(m, grid) if isinstance(m, Continuum) else _scan_discrete(m, grid)
        return row, None
    except Exception as exc:  # a failing grid point must not abort the scan
        return None, (m, f"{type(exc).__name__}: {exc}")


def scan_grid(grid: ScanGrid) -> ScanResult:
    """Evaluate every grid point; rows come back in grid order for any worker count."""
    jobs = [(m, grid) for m in grid.points()]
    if grid.workers > 1:
        with ProcessPoolExecutor(grid.workers) as ex:
            results = list(ex.map(_scan_point, jobs))
    else:
        results = [_scan_point(j) for j in jobs]
    rows, failures = [], []
    for row, fail in results:
        if fail is not None:
            log.warning("scan point %r skipped: %s", fail[0], fail[1])
            failures.append(fail)
        else:
            rows.append(row)
    return ScanResult(rows, failures)


# ------------------------------------------------------------ continuum pair

def orbit_distance(pts) -> np.ndarray:
    """Euclidean distance from each point (..., 3) to the period-6 orbit of (0, 0, -1)."""
    pts = np.asarray(pts, dtype=float)
    d = np.linalg.norm(pts[..., None, :] - PERIOD6_ORBIT, axis=-1)
    return d.min(axis=-1)


def near_orbit_energy(lam: float, e_min: float, e_max: float, delta: float,
                      samples_per_unit_sqrt: int = 64) -> list[tuple[float, float]]:
    """Energies in [e_min, e_max] where the initial triple passes within
    ``delta`` of the period-6 orbit, as (E, distance) pairs sorted by distance.

    Each close approach is located on a grid uniform in sqrt(E) (the curve
    oscillates on that scale) and refined by bounded minimisation.
    """
    model = Continuum(lam)

    def dist(E):
        return float(orbit_distance(np.stack(initial_condition(model, E), -1)))

    r0, r1 = np.sqrt(max(e_min, 0.0)), np.sqrt(e_max)
    r = np.linspace(r0, r1, int((r1 - r0) * samples_per_unit_sqrt) + 2)
    E = r * r
    d = orbit_distance(np.stack(initial_condition(model, E), -1))
    close = np.flatnonzero(d < 2.0 * delta)
    if len(close) == 0:
        return []
    # one refinement per run of consecutive close samples
    runs = np.split(close, np.flatnonzero(np.diff(close) > 1) + 1)
    found = []
    for run in runs:
        lo, hi = E[max(run[0] - 1, 0)], E[min(run[-1] + 1, len(E) - 1)]
        res = minimize_scalar(dist, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-10 * max(1.0, hi)})
        if res.fun < delta:
            found.append((float(res.x), float(res.fun)))
    return sorted(found, key=lambda t: t[1])


def fixed_point_distance(lam: float, e_lo: float, e_hi: float, samples: int = 2001) -> float:
    """Smallest sampled distance from the initial triple to (1, 1, 1) on [e_lo, e_hi].

    Local dimension is full wherever the curve meets that fixed point, so
    thickness windows must stay away from it.
    """
    E = np.linspace(e_lo, e_hi, samples)
    pts = np.stack(initial_condition(Continuum(lam), E), -1)
    return float(np.min(np.linalg.norm(pts - 1.0, axis=-1)))


def _bottom_stats(lam: float, k: int, width: float, th: RegimeThresholds) -> dict:
    model = Continuum(lam)
    window = (0.0, min(lam, 4.0) + width)
    covers = [compute_bands(model, j, window) for j in range(k, k + 4)]
    e0 = covers[-1].lo
    dw = dimension_window(covers, "lo", width, th.dim_abs_tol)
    return {"E0": e0, "window": list(dw.window), "dimension": dw.value, "stable": dw.stable,
            "V": float(invariant_of_energy(model, e0)), "covers": covers}


def _high_energy_stats(lam: float, k: int, e_max: float, delta: float,
                       th: RegimeThresholds) -> dict | None:
    model = Continuum(lam)
    found = near_orbit_energy(lam, lam + 1.0, e_max, delta)
    skipped = []
    for e_star, dist in found:
        # about a dozen level-k bands on either side of e_star
        h = 12.0 * 2.0 * np.pi * np.sqrt(e_star) / len_block(k)
        if fixed_point_distance(lam, e_star - h, e_star + h) > delta:
            break
        skipped.append(e_star)
    else:
        return None
    levels = [compute_bands(model, j, (e_star - h, e_star + h)) for j in (k, k + 1)]
    vals = []
    hw = h
    rep = None
    for _ in range(30):
        reps = [local_thickness(bs, (e_star - hw, e_star + hw), anchor=e_star) for bs in levels]
        taus = [r.tau for r in reps]
        if all(len(r.ratios) >= 1 for r in reps) and all(np.isfinite(taus)):
            rep = reps
            vals = taus
            if abs(taus[0] - taus[1]) <= th.thick_rel_tol * max(taus):
                break
        hw *= 0.5
    if rep is None:
        return {"E": e_star, "distance": dist, "tau": float("nan"), "window": None,
                "V": float(invariant_of_energy(model, e_star)), "levels": levels,
                "skipped_near_fixed_point": skipped}
    return {"E": e_star, "distance": dist, "tau": float(min(vals)),
            "per_level": [float(t) for t in vals], "window": list(rep[0].window),
            "V": float(invariant_of_energy(model, e_star)), "levels": levels,
            "skipped_near_fixed_point": skipped}


def len_block(k: int) -> int:
    from .oracle import fibonacci_number
    return fibonacci_number(k)


def continuum_mixed_check(l1: float, l2: float, k: int, e_max: float = 1e5,
                          delta: float = 0.1, bottom_width: float = 1.0,
                          thresholds: RegimeThresholds | None = None,
                          high_k: int | None = None) -> RegimeReport:
    """Bottom-of-spectrum and high-energy evidence for a pair of continuum couplings.

    Bottom: box dimension of each spectrum just above its ground state, combined
    through :func:`dimension_sum_bound`.  High energy: the first energy below
    ``e_max`` where the initial triple passes within ``delta`` of the period-6
    orbit, the local thickness of the bands around it, and the Gap-Lemma
    certificate on the pair of local pieces.

    The bottom uses levels k..k+3 (multiprecision at strong coupling); the
    high-energy window uses levels ``high_k`` and ``high_k + 1``, by default
    k + 3, where floating point suffices.
    """
    if not (l1 > 0 and l2 > 0):
        raise ValueError("couplings must be positive")
    th = thresholds or RegimeThresholds()
    lams = (float(l1), float(l2))
    hk = k + 3 if high_k is None else int(high_k)
    bottom_of = {l: _bottom_stats(l, k, bottom_width, th) for l in set(lams)}
    high_of = {l: _high_energy_stats(l, hk, e_max, delta, th) for l in set(lams)}
    bottoms = [bottom_of[l] for l in lams]
    highs = [high_of[l] for l in lams]
    details = {
        "bottom": [{x: v for x, v in b.items() if x != "covers"} for b in bottoms],
        "high_energy": [None if h is None else {x: v for x, v in h.items() if x != "levels"}
                        for h in highs],
    }
    cantor = None
    bound = dimension_sum_bound(bottoms[0]["dimension"], bottoms[1]["dimension"])
    details["bottom_dimension_sum_bound"] = bound
    if bound < th.cantor_bound:
        cantor = {"end": "bottom", "window": [bottoms[0]["window"][0] + bottoms[1]["window"][0],
                                              bottoms[0]["window"][1] + bottoms[1]["window"][1]],
                  "dimension": [bottoms[0]["dimension"], bottoms[1]["dimension"]],
                  "dimension_sum_bound": bound}
    interval = None
    if any(h is None for h in highs):
        missing = [l for l, h in zip(lams, highs) if h is None]
        details["high_energy_error"] = (f"no energy below {e_max} within {delta} of the "
                                        f"period-6 orbit for lambda = {missing}")
    elif all(h["window"] is not None for h in highs):
        a = highs[0]["levels"][0].restrict(*highs[0]["window"])
        b = highs[1]["levels"][0].restrict(*highs[1]["window"])
        cert = gap_lemma_certificate(thickness(a), thickness(b), a, b)
        details["gap_lemma"] = cert
        if cert:
            s = minkowski_sum(a, b, th.hole_tol)
            interval = {"end": "high-energy", "window": list(s.longest()),
                        "tau": [highs[0]["tau"], highs[1]["tau"]],
                        "energies": [highs[0]["E"], highs[1]["E"]]}
    return RegimeReport(tuple(Continuum(l) for l in lams), k, _verdict(interval, cantor),
                        interval, cantor, None, details)
