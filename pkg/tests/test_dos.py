import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from tracespec.bands import compute_bands, middle_thirds
from tracespec.dos import (
    BandMeasure, ac_sc_evidence, arcsine_ids, convolve, dos_from_bands, ids,
    local_measure_dimension, measure_from_intervals, sum_cover_sequence, torus_pushforward_check,
)
from tracespec.oracle import fibonacci_number
from tracespec.sumset import minkowski_sum
from tracespec.trace import Discrete


def free(k=10):
    return dos_from_bands(compute_bands(Discrete(1.0, 0.0), k))


def test_band_measure_validation():
    with pytest.raises(ValueError):
        BandMeasure([[0, 1]], [0.5])
    with pytest.raises(ValueError):
        BandMeasure([[0, 1], [2, 3]], [1.0])
    with pytest.raises(ValueError):
        BandMeasure([[1, 0]], [1.0])


def test_equal_weights_per_band():
    m = dos_from_bands(compute_bands(Discrete(1.0, 2.0), 8))
    assert len(m.weights) == 34
    assert np.allclose(m.weights, 1 / 34, rtol=0, atol=1e-15)
    assert abs(m.weights.sum() - 1) < 1e-12 and not m.merged


def test_free_measure_aggregates_to_one_interval():
    iv, w = free().aggregated()
    assert len(iv) == 1 and w[0] == pytest.approx(1.0, abs=1e-12)
    assert ids(free(), 0.0) == pytest.approx(0.5, abs=1e-12)


def test_ids_limits_and_free_law():
    m = free()
    assert ids(m, -10.0) == 0.0 and ids(m, 10.0) == 1.0
    E = np.linspace(-2, 2, 4001)
    assert np.max(np.abs(ids(m, E) - arcsine_ids(E))) < 0.02


@pytest.mark.parametrize("pq", [(1.0, 2.0), (2.0, 1.0), (1.0, 0.5)])
def test_ids_converges_along_approximants(pq):
    k = 7
    a = dos_from_bands(compute_bands(Discrete(*pq), k))
    b = dos_from_bands(compute_bands(Discrete(*pq), k + 3))
    lo, hi = min(a.support[0], b.support[0]), max(a.support[1], b.support[1])
    E = np.linspace(lo - 0.1, hi + 0.1, 20001)
    assert np.max(np.abs(ids(a, E) - ids(b, E))) < 2.0 / fibonacci_number(k)


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=50))
def test_ids_is_monotone(xs):
    m = dos_from_bands(compute_bands(Discrete(1.0, 2.0), 7))
    xs = np.sort(xs)
    v = ids(m, xs)
    assert np.all(np.diff(v) >= 0) and np.all((0 <= v) & (v <= 1))


def test_uniform_convolution_is_triangular():
    u = measure_from_intervals([[0.0, 1.0]])
    c = convolve(u, u, cells=1000)
    assert (c.lo, c.hi) == (0.0, 2.0)
    assert abs(c.total - 1) < 1e-12
    assert c.density_at(1.0) == pytest.approx(1.0, abs=2e-3)
    x = 0.5 * (c.edges[1:] + c.edges[:-1])
    assert np.max(np.abs(c.density - np.minimum(x, 2 - x))) < 2e-3


def test_point_mass_convolution_translates():
    m = dos_from_bands(compute_bands(Discrete(1.0, 2.0), 6))
    pt = measure_from_intervals([[3.0, 3.0 + 1e-9]])
    c = convolve(m, pt, cells=4096)
    assert c.lo == pytest.approx(m.support[0] + 3.0) and c.hi == pytest.approx(m.support[1] + 3.0 + 1e-9)
    E = np.linspace(c.lo, c.hi, 200)
    cdf = np.array([c.exact_mass_in(c.lo - 1, e) for e in E])
    assert np.max(np.abs(cdf - ids(m, E - 3.0))) < 1e-6


def test_free_convolution_matches_quadrature():
    m = free(8)
    c = convolve(m, m, cells=4096)
    assert abs(c.total - 1) < 1e-10
    assert c.lo == pytest.approx(-4.0, abs=1e-6) and c.hi == pytest.approx(4.0, abs=1e-6)
    assert np.allclose(c.mass, c.mass[::-1], atol=1e-12)
    # central cell: outer integral by quadrature over each band, inner mass exact
    i = c.cells // 2
    a, b = c.edges[i], c.edges[i + 1]
    total = 0.0
    for (lo, hi), dens in zip(m.intervals, m.density):
        f = lambda x: dens * float(m.mass_in(a - x, b - x))
        brk = [x for x in np.concatenate([a - m.intervals.ravel(), b - m.intervals.ravel()])
               if lo < x < hi]
        total += integrate.quad(f, lo, hi, points=brk or None, limit=200)[0]
    assert c.density[i] == pytest.approx(total / (b - a), abs=1e-3)


def test_convolution_is_order_independent_bitwise():
    a = dos_from_bands(compute_bands(Discrete(1.0, 2.0), 7))
    b = dos_from_bands(compute_bands(Discrete(2.0, 1.0), 6))
    assert convolve(a, b, 1024).mass.tobytes() == convolve(b, a, 1024).mass.tobytes()


def test_convolution_support_matches_minkowski_sum():
    a = dos_from_bands(compute_bands(Discrete(1.0, 3.0), 6))
    b = dos_from_bands(compute_bands(Discrete(1.0, 2.0), 5))
    c = convolve(a, b, 2048)
    s = minkowski_sum(a.intervals, b.intervals)
    assert abs(c.lo - s.lo) <= c.width and abs(c.hi - s.hi) <= c.width
    # cells with mass must meet the sum, give or take one cell
    occupied = c.edges[:-1][c.mass > 0]
    for x in occupied:
        assert len(s.clip(x - c.width, x + 2 * c.width)) > 0


def test_convolve_rejects_tiny_grids():
    u = measure_from_intervals([[0.0, 1.0]])
    with pytest.raises(ValueError):
        convolve(u, u, cells=8)


@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0.001, 1), st.floats(0.01, 1)),
                min_size=1, max_size=10),
       st.lists(st.tuples(st.floats(0, 1), st.floats(0.001, 1), st.floats(0.01, 1)),
                min_size=1, max_size=10))
def test_convolution_conserves_mass(sa, sb):
    def build(layout):
        x, iv, w = 0.0, [], []
        for band, gap, wt in layout:
            iv.append([x, x + band])
            w.append(wt)
            x += band + gap
        w = np.array(w)
        return measure_from_intervals(iv, w / w.sum())
    c = convolve(build(sa), build(sb), cells=64)
    assert abs(c.total - 1) < 1e-10 and np.all(c.mass >= -1e-15)


def test_local_dimension_examples():
    u = measure_from_intervals([[0.0, 1.0]])
    assert local_measure_dimension(u, 0.5, np.logspace(-4, -1, 7)).value == pytest.approx(1.0, abs=0.02)
    c = middle_thirds(12)
    m = measure_from_intervals(c.intervals)
    d = local_measure_dimension(m, 0.0, np.logspace(-4, -1, 13))
    assert d.value == pytest.approx(np.log(2) / np.log(3), abs=0.05)
    atom = measure_from_intervals([[0.3, 0.3 + 1e-12], [5.0, 6.0]], [0.99, 0.01])
    assert local_measure_dimension(atom, 0.3, np.logspace(-6, -3, 5)).value < 0.05


def test_local_dimension_input_checks():
    u = measure_from_intervals([[0.0, 1.0]])
    with pytest.raises(ValueError):
        local_measure_dimension(u, 0.5, [1e-3, 1e-2])
    with pytest.raises(ValueError):
        local_measure_dimension(u, 0.5, [1e-3, 2e-3, 5e-3])
    far = local_measure_dimension(u, 5.0, np.logspace(-3, 0, 4))
    assert far.degenerate


def test_ac_sc_free_pair_is_density_bounded():
    levels = [compute_bands(Discrete(1.0, 0.0), k) for k in range(8, 12)]
    m = dos_from_bands(levels[0])
    ev = ac_sc_evidence(convolve(m, m, 4096), sum_cover_sequence(levels, levels))
    assert ev.mass_on_thin == pytest.approx(0.0, abs=1e-12)
    assert ev.density_bounded_mass == pytest.approx(1.0, abs=1e-9)


def test_ac_sc_large_coupling_pair_is_thin():
    levels = [compute_bands(Discrete(1.0, 24.0), k) for k in range(8, 12)]
    m = dos_from_bands(levels[0])
    ev = ac_sc_evidence(convolve(m, m, 1024), sum_cover_sequence(levels, levels))
    assert ev.mass_on_thin > 0.5
    assert 0 <= ev.density_bounded_mass <= 1
    lo = [w["lo"] for w in ev.windows]
    hi = [w["hi"] for w in ev.windows]
    assert all(h < l for h, l in zip(hi[:-1], lo[1:]))


def test_ac_sc_needs_three_covers():
    levels = [compute_bands(Discrete(1.0, 2.0), k) for k in (6, 7)]
    m = dos_from_bands(levels[0])
    with pytest.raises(ValueError):
        ac_sc_evidence(convolve(m, m, 64), sum_cover_sequence(levels, levels))


def test_torus_pushforward():
    assert torus_pushforward_check(100_000) < 0.01
    assert torus_pushforward_check(1000) < 0.05
    assert torus_pushforward_check(100_000, reference=free(10)) < 0.02
    with pytest.raises(ValueError):
        torus_pushforward_check(10)
    rng = np.random.default_rng(0)
    E = 2 * np.cos(2 * np.pi * rng.random(10_000))
    assert np.all(np.abs(E) <= 2)
