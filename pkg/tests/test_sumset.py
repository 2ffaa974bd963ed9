import json

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from tracespec.bands import compute_bands, middle_thirds, thickness
from tracespec.sumset import (
    IntervalUnion, RegimeReport, ScanGrid, classify_pair, dimension_sum_bound,
    fixed_point_distance, gap_lemma_certificate, minkowski_sum, near_orbit_energy,
    orbit_distance, scan_grid,
)
from tracespec.trace import PERIOD6_ORBIT, Continuum, Discrete, initial_condition, invariant_of_energy


def layout(pairs, start=0.0):
    x, out = start, []
    for band, gap in pairs:
        out.append([x, x + band])
        x += band + gap
    return np.array(out)


unions = st.lists(st.tuples(st.floats(0.0, 1.0), st.floats(0.01, 1.0)),
                  min_size=1, max_size=8).map(layout)
shifted = st.tuples(unions, st.floats(-10, 10)).map(lambda t: t[0] + t[1])


def test_interval_union_normalizes():
    u = IntervalUnion([[2, 3], [0, 1], [0.5, 1.5], [1.5, 1.7], [4, 4]])
    assert u.intervals.tolist() == [[0, 1.7], [2, 3], [4, 4]]
    assert u.measure == pytest.approx(2.7)
    assert IntervalUnion([[0, 1], [1.05, 2]], tol=0.1).intervals.tolist() == [[0, 2]]
    with pytest.raises(ValueError):
        IntervalUnion([[1, 0]])


def test_interval_union_set_operations():
    a = IntervalUnion([[0, 2], [3, 5]])
    b = IntervalUnion([[1, 4]])
    assert a.intersect(b).intervals.tolist() == [[1, 2], [3, 4]]
    assert a.contains(3.5, 4.5) and not a.contains(1.5, 3.5)
    assert a.clip(1, 4).intervals.tolist() == [[1, 2], [3, 4]]
    assert a.longest() == (0.0, 2.0)


def test_minkowski_examples():
    assert minkowski_sum([[0, 1]], [[2, 3]]).intervals.tolist() == [[2, 4]]
    assert minkowski_sum([[0, 1]], [[0, 0]]).intervals.tolist() == [[0, 1]]
    for n in range(1, 11):
        # scaled by 3^n every endpoint is an integer, so float sums are exact
        c = np.rint(middle_thirds(n).intervals * 3 ** n)
        assert minkowski_sum(c, c).intervals.tolist() == [[0.0, 2.0 * 3 ** n]]
        # unscaled endpoints carry rounding, which leaves ulp-sized holes
        c = middle_thirds(n)
        assert minkowski_sum(c, c, tol=1e-15).intervals.tolist() == [[0.0, 2.0]]
    with pytest.raises(ValueError):
        minkowski_sum(IntervalUnion([]), [[0, 1]])


def test_minkowski_matches_brute_force(rng):
    a = layout(rng.uniform(0.01, 0.3, (30, 2)))
    b = layout(rng.uniform(0.01, 0.3, (20, 2)), start=5.0)
    brute = IntervalUnion(np.array([[x[0] + y[0], x[1] + y[1]] for x in a for y in b]))
    assert minkowski_sum(a, b) == brute


@given(a=shifted, b=shifted)
def test_minkowski_commutes(a, b):
    assert minkowski_sum(a, b) == minkowski_sum(b, a)


@given(a=shifted, b=shifted, c=shifted)
def test_minkowski_associative(a, b, c):
    left = minkowski_sum(minkowski_sum(a, b), c).intervals
    right = minkowski_sum(a, minkowski_sum(b, c)).intervals
    assert left.shape == right.shape or np.allclose(left[[0, -1]], right[[0, -1]])
    assert np.allclose(left[0, 0], right[0, 0]) and np.allclose(left[-1, 1], right[-1, 1])


@given(a=shifted, b=shifted)
def test_minkowski_extremes(a, b):
    s = minkowski_sum(a, b)
    assert s.lo == a[0, 0] + b[0, 0] and s.hi == a[-1, 1] + b[-1, 1]


@given(a=shifted, b=shifted, extra=st.tuples(st.floats(-10, 10), st.floats(0, 2)))
def test_minkowski_monotone(a, b, extra):
    bigger = np.vstack([a, [[extra[0], extra[0] + extra[1]]]])
    small, big = minkowski_sum(a, b), minkowski_sum(bigger, b)
    assert all(big.contains(lo, hi) for lo, hi in small)


def test_gap_lemma_examples():
    a = IntervalUnion([[0, 0.4], [0.6, 1.0]])
    rep = thickness(a.intervals)
    assert rep.tau == pytest.approx(2.0)
    assert gap_lemma_certificate(rep, rep, a, a)
    assert minkowski_sum(a, a).intervals.tolist() == [[0.0, 2.0]]
    # one set fits inside the other's gap
    far = IntervalUnion([[0, 0.1], [10, 10.1]])
    tiny = IntervalUnion([[0, 0.02], [0.03, 0.05]])
    assert not gap_lemma_certificate(thickness(far.intervals), thickness(tiny.intervals), far, tiny)
    c = middle_thirds(6)
    assert not gap_lemma_certificate(thickness(c), thickness(c), c, c)


thick = st.lists(st.tuples(st.floats(0.05, 1.0), st.floats(0.001, 0.2)),
                 min_size=1, max_size=8).map(layout)


@given(a=st.one_of(thick, unions), b=st.one_of(thick, unions), shift=st.floats(-1, 1))
def test_gap_lemma_certificate_implies_interval(a, b, shift):
    b = b + shift
    ra, rb = thickness(a), thickness(b)
    assume(gap_lemma_certificate(ra, rb, a, b))
    s = minkowski_sum(a, b)
    assert len(s) == 1
    assert s.lo == a[0, 0] + b[0, 0] and s.hi == a[-1, 1] + b[-1, 1]


def test_dimension_sum_bound_examples():
    assert dimension_sum_bound(0.3, 0.4) == pytest.approx(0.7)
    assert dimension_sum_bound(0.8, 0.8) == 1.0
    from tracespec.bands import box_dimension
    d = box_dimension([middle_thirds(n) for n in range(4, 12)])
    assert dimension_sum_bound(d, d) == 1.0
    with pytest.raises(ValueError):
        dimension_sum_bound(1.2, 0.0)


def test_mixed_report_needs_both_records():
    with pytest.raises(ValueError):
        RegimeReport((Discrete(1, 0), Discrete(1, 0)), 5, "mixed", {"window": [0, 1]}, None)


def test_classify_free_pair_is_interval_only():
    rep = classify_pair(Discrete(1.0, 0.0), Discrete(1.0, 0.0), 8)
    assert rep.verdict == "interval-only" and rep.stable
    lo, hi = rep.interval_evidence["window"]
    assert -4 - 1e-9 <= lo < hi <= 4 + 1e-9
    json.loads(rep.to_json())


@pytest.mark.parametrize("q", [24.0, 30.0])
def test_classify_large_coupling_is_cantor_only(q):
    rep = classify_pair(Discrete(1.0, q), Discrete(1.0, q), 8)
    assert rep.verdict == "cantor-only"
    assert rep.cantor_evidence["dimension_sum_bound"] < 0.95


def test_classify_scanner_pair_is_mixed():
    m = Discrete(-10.0, 24.0)
    rep = classify_pair(m, m, 8)
    assert rep.verdict == "mixed" and rep.stable
    d = rep.to_dict()
    assert d["interval_evidence"] and d["cantor_evidence"]


def test_classify_rejects_mixed_model_kinds():
    with pytest.raises(TypeError):
        classify_pair(Discrete(1.0, 0.0), Continuum(1.0), 5)


def test_scan_grid_validation():
    with pytest.raises(ValueError):
        ScanGrid(p_range=(-1.0, 1.0))
    with pytest.raises(ValueError):
        ScanGrid(p_steps=0)


def test_scan_free_point_has_no_candidate():
    res = scan_grid(ScanGrid(p_range=(1.0, 1.0), q_range=(0.0, 0.0), p_steps=1, q_steps=1, k=8))
    assert len(res.rows) == 1 and res.candidates == []


def test_scan_reports_invariant_at_extremes():
    res = scan_grid(ScanGrid(p_range=(-12.0, -10.0), q_range=(22.0, 24.0), p_steps=2, q_steps=2))
    for row in res.rows:
        bs = compute_bands(row.model, 8)
        v = sorted(float(invariant_of_energy(row.model, e)) for e in (bs.lo, bs.hi))
        assert abs(row.v_min - v[0]) < 1e-10 and abs(row.v_max - v[1]) < 1e-10
    assert res.candidates
    margins = [r.margin for r in res.candidates]
    assert margins == sorted(margins, reverse=True)


def test_scan_is_independent_of_worker_count():
    g1 = ScanGrid(p_range=(-12.0, -10.0), q_range=(20.0, 24.0), p_steps=2, q_steps=3)
    g2 = ScanGrid(p_range=(-12.0, -10.0), q_range=(20.0, 24.0), p_steps=2, q_steps=3, workers=2)
    r1, r2 = scan_grid(g1), scan_grid(g2)
    assert [(r.model, r.tau_local, r.dim_local) for r in r1.rows] == \
        [(r.model, r.tau_local, r.dim_local) for r in r2.rows]


def test_orbit_distance_is_zero_on_the_orbit():
    assert np.all(orbit_distance(PERIOD6_ORBIT) == 0.0)
    assert orbit_distance(np.array([1.0, 1.0, 1.0])) == pytest.approx(np.sqrt(2.0))


def test_near_orbit_energies_are_close_and_sorted():
    found = near_orbit_energy(1.0, 2.0, 5000.0, 0.1)
    assert found
    dists = [d for _, d in found]
    assert dists == sorted(dists) and dists[0] < 0.1
    E, d = found[0]
    assert orbit_distance(np.stack(initial_condition(Continuum(1.0), E))) == pytest.approx(d)


def test_accumulation_point_is_detected_as_the_fixed_point():
    lam = 12 * np.pi ** 2
    E = 16 * np.pi ** 2
    assert fixed_point_distance(lam, E - 1.0, E + 1.0) < 1e-9
    assert fixed_point_distance(lam, E + 50.0, E + 60.0) > 0.1


def _brute_intersect(a, b):
    out = [(max(x[0], y[0]), min(x[1], y[1])) for x in a for y in b if max(x[0], y[0]) <= min(x[1], y[1])]
    return IntervalUnion(np.array(out).reshape(-1, 2))


@given(a=shifted, b=shifted)
def test_intersect_matches_pairwise(a, b):
    A, B = IntervalUnion(a), IntervalUnion(b)
    assert A.intersect(B) == _brute_intersect(A.intervals, B.intervals)
    assert A.intersect(B) == B.intersect(A)


@given(a=shifted, lo=st.floats(-12, 12), w=st.floats(0, 10))
def test_measure_in_matches_clipping(a, lo, w):
    A = IntervalUnion(a)
    hi = lo + w
    expected = sum(max(0.0, min(y, hi) - max(x, lo)) for x, y in A.intervals)
    assert float(A.measure_in(lo, hi)) == pytest.approx(expected, abs=1e-12)
