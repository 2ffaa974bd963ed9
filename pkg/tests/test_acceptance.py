"""Acceptance criteria 1-13, one test each.

Every test records a single PASS/FAIL line (shown in the terminal summary)
and then asserts it.  Tolerances are the ones fixed for each criterion.
"""
import time

import numpy as np
import pytest

from tracespec.bands import box_dimension, compute_bands, covering_check, middle_thirds, thickness
from tracespec.cli import run
from tracespec.dos import (
    ac_sc_evidence, arcsine_ids, convolve, dos_from_bands, ids, local_measure_dimension,
    measure_from_intervals, sum_cover_sequence, torus_pushforward_check,
)
from tracespec.oracle import fibonacci_number, ground_state_rayleigh, half_trace_sequence, periodic_spectrum
from tracespec.sumset import ScanGrid, classify_pair, continuum_mixed_check, gap_lemma_certificate, minkowski_sum, scan_grid
from tracespec.trace import (
    PERIOD6_ORBIT, Continuum, Discrete, TorusPoint, TracePoint, fricke_vogt, initial_condition,
    invariant_of_energy, orbit, torus_embed, torus_map, trace_map, trace_map_inverse,
)


def test_c01_fricke_vogt_invariance(criterion):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    pts = TracePoint(*rng.uniform(-5, 5, (3, 1_000_000)))
    i0 = fricke_vogt(pts)
    scale = np.maximum(1.0, np.abs(i0))
    drift = max(np.max(np.abs(fricke_vogt(trace_map(pts)) - i0) / scale),
                np.max(np.abs(fricke_vogt(trace_map_inverse(pts)) - i0) / scale))
    dt = time.perf_counter() - t0
    assert criterion(1, drift < 1e-12 and dt < 5, f"max relative drift {drift:.2e} (< 1e-12), {dt:.2f} s")


def test_c02_invariant_along_the_line(criterion):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    n = 10_000
    p = rng.uniform(0.2, 3.0, n) * rng.choice([-1.0, 1.0], n)
    q = rng.uniform(-3, 3, n)
    E = rng.uniform(-6, 6, n)
    # vectorised per-sample models: the formulas only use p, q elementwise
    worst = 0.0
    for pi, qi, ei in zip(p, q, E):
        m = Discrete(pi, qi)
        v = float(invariant_of_energy(m, ei))
        worst = max(worst, abs(float(fricke_vogt(initial_condition(m, ei))) - v) / max(1.0, abs(v)))
    Es = np.linspace(-5, 5, 101)
    const_q = all(np.all(invariant_of_energy(Discrete(1.0, qq), Es) == qq * qq / 4) for qq in q[:50])
    const_p = all(np.all(invariant_of_energy(Discrete(pp, 0.0), Es) == (pp * pp - 1) ** 2 / (4 * pp * pp))
                  for pp in p[:50])
    dt = time.perf_counter() - t0
    ok = worst < 1e-12 and const_q and const_p and dt < 1.0
    assert criterion(2, ok, f"max relative error {worst:.2e}; p=1 constant {const_q}; "
                            f"q=0 constant {const_p}; {dt:.2f} s")


def test_c03_oracle_equivalence(criterion):
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(200):
        if i % 2 == 0:
            model = Discrete(rng.uniform(0.3, 3.0) * rng.choice([-1.0, 1.0]), rng.uniform(-3, 3))
            E = rng.uniform(-4, 4)
        else:
            model = Continuum(rng.uniform(0.1, 30.0))
            E = rng.uniform(-5, 80)
        direct = half_trace_sequence(model, E, 15)
        iterated = orbit(initial_condition(model, E), 14)
        ok = np.isfinite(direct)
        err = np.abs(direct[ok] - iterated[ok]) / np.maximum(1.0, np.abs(direct[ok]))
        worst = max(worst, float(err.max(initial=0.0)))
    dt = time.perf_counter() - t0
    assert criterion(3, worst < 1e-9 and dt < 10, f"max relative error {worst:.2e} through k=15, {dt:.2f} s")


def test_c04_semiconjugacy(criterion):
    rng = np.random.default_rng(4)
    t = TorusPoint(rng.random(10_000), rng.random(10_000))
    res = float(np.max(np.abs(np.stack(trace_map(torus_embed(t))) - np.stack(torus_embed(torus_map(t))))))
    on = float(np.max(np.abs(fricke_vogt(torus_embed(t)))))
    assert criterion(4, res < 1e-12 and on < 1e-12, f"residual {res:.2e}, max |I| on image {on:.2e}")


def test_c05_period_six_orbit(criterion):
    pt = TracePoint(0.0, 0.0, -1.0)
    seen = []
    for _ in range(6):
        pt = trace_map(pt)
        seen.append(tuple(pt))
    exact = seen[-1] == (0.0, 0.0, -1.0) and np.array_equal(np.array(seen[:-1]), PERIOD6_ORBIT[1:])
    assert criterion(5, exact, f"f^6(0,0,-1) = {seen[-1]} exactly; orbit {seen}")


def test_c06_free_case(criterion):
    bs = compute_bands(Discrete(1.0, 0.0), 10)
    haus = max(abs(bs.lo + 2), abs(bs.hi - 2)) if len(bs) == 1 else np.inf
    E = np.linspace(-2, 2, 8001)
    ids_err = float(np.max(np.abs(ids(dos_from_bands(bs), E) - arcsine_ids(E))))
    ks = torus_pushforward_check(100_000)
    ok = haus < 1e-6 and ids_err < 0.02 and ks < 0.01
    assert criterion(6, ok, f"Hausdorff {haus:.1e} (< 1e-6), IDS {ids_err:.4f} (< 0.02), "
                            f"KS {ks:.4f} (< 0.01)")


def test_c07_band_combinatorics(criterion):
    m = Discrete(1.0, 2.0)
    counts, interleaved, covered = [], True, True
    covers = {k: compute_bands(m, k) for k in range(6, 11)}
    for k in range(6, 11):
        per = periodic_spectrum(m, k, 0.0).eigenvalues
        anti = periodic_spectrum(m, k, np.pi).eigenvalues
        lo, hi = np.minimum(per, anti), np.maximum(per, anti)
        interleaved &= bool(np.all(hi[:-1] < lo[1:]))
        counts.append(len(covers[k]) == fibonacci_number(k) and not covers[k].touching.any())
    for k in range(6, 9):
        covered &= bool(covering_check(covers[k], covers[k + 1], covers[k + 2]))
    ok = all(counts) and interleaved and covered
    assert criterion(7, ok, f"F_k bands k=6..10 {all(counts)}; gaps open {interleaved}; covering {covered}")


def test_c08_fractal_estimators(criterion):
    # scaled by 3^n the endpoints are integers, so bridge/gap ratios are exact
    taus = [thickness(np.rint(middle_thirds(n).intervals * 3 ** n)).tau for n in range(1, 11)]
    tau_ok = all(t == 1.0 for t in taus)
    raw = max(abs(thickness(middle_thirds(n)).tau - 1) for n in range(1, 11))
    d = box_dimension([middle_thirds(n) for n in range(4, 13)]).value
    target = np.log(2) / np.log(3)
    ld = local_measure_dimension(measure_from_intervals(middle_thirds(12).intervals), 0.0,
                                 np.logspace(-4, -1, 13)).value
    ok = tau_ok and abs(d - target) < 0.02 and abs(ld - target) < 0.05
    assert criterion(8, ok, f"thickness {sorted(set(taus))} on integer endpoints (exactly 1), "
                            f"{raw:.0e} off with float endpoints; box dim {d:.4f} (0.6309 +- 0.02); "
                            f"local dim {ld:.4f} (+- 0.05)")


def _tau2_cantor(level):
    # each interval keeps its outer 2/5 pieces; endpoints scaled by 5^level are integers
    ivs = [(0, 5 ** level)]
    for _ in range(level):
        nxt = []
        for a, b in ivs:
            t = (b - a) // 5
            nxt += [(a, a + 2 * t), (b - 2 * t, b)]
        ivs = nxt
    return np.array(ivs, dtype=float)


def test_c09_gap_lemma_constructive(criterion):
    tau2_ok, thirds_ok = True, True
    for n in range(1, 11):
        a = _tau2_cantor(n)
        rep = thickness(a)
        cert = gap_lemma_certificate(rep, rep, a, a)
        s = minkowski_sum(a, a)
        tau2_ok &= bool(rep.tau == pytest.approx(2.0) and cert and len(s) == 1
                        and s.intervals.tolist() == [[0.0, 2.0 * 5 ** n]])
        # middle thirds scaled by 3^n: integer endpoints, exact sums
        c = np.rint(middle_thirds(n).intervals * 3 ** n)
        rc = thickness(c)
        thirds_ok &= bool(not gap_lemma_certificate(rc, rc, c, c)
                          and minkowski_sum(c, c).intervals.tolist() == [[0.0, 2.0 * 3 ** n]])
    assert criterion(9, tau2_ok and thirds_ok,
                     f"tau=2 pair certified with single-interval sum at levels 1..10: {tau2_ok}; "
                     f"middle-thirds not certified, sum still the full interval: {thirds_ok}")


def test_c10_mixed_regime_scan(criterion):
    t0 = time.perf_counter()
    res = scan_grid(ScanGrid(p_range=(-30.0, -10.0), q_range=(10.0, 30.0), p_steps=11, q_steps=11, k=8))
    cands = res.candidates
    verdict, stable = None, False
    if cands:
        m = cands[0].model
        rep = classify_pair(m, m, 8)
        verdict, stable = rep.verdict, rep.stable
    dt = time.perf_counter() - t0
    best = f"{cands[0].model!r} tau {cands[0].tau_local:.3f} dim {cands[0].dim_local:.3f}" if cands else "none"
    ok = bool(cands) and verdict == "mixed" and stable and dt < 600
    assert criterion(10, ok, f"{len(cands)} candidates of {len(res.rows)}; best {best}; "
                             f"classify_pair {verdict} (stable {stable}); {dt:.1f} s")


@pytest.mark.slow
def test_c11_continuum_checks(criterion):
    lam = 12 * np.pi ** 2
    pt = np.array(initial_condition(Continuum(lam), 16 * np.pi ** 2))
    fixed = float(np.max(np.abs(pt - 1.0)))
    rq = [ground_state_rayleigh(l) for l in (1.0, 10.0, 100.0)]
    bounds = [continuum_mixed_check(l, l, 5).details["bottom_dimension_sum_bound"] for l in (16.0, 64.0, 256.0)]
    decreasing = all(a > b for a, b in zip(bounds, bounds[1:]))
    taus = []
    for l in (1.0, 50.0):
        rep = continuum_mixed_check(l, l, 5, e_max=1e5)
        h = rep.details["high_energy"][0]
        taus.append(float("nan") if h is None else h["tau"])
    ok = fixed < 1e-9 and all(r < 3 for r in rq) and decreasing and all(t > 1 for t in taus)
    assert criterion(11, ok, f"|l(16 pi^2) - (1,1,1)| {fixed:.1e}; Rayleigh {rq[0]:.4f} (< 3); "
                             f"bottom bounds {[round(b, 3) for b in bounds]} decreasing {decreasing}; "
                             f"high-energy tau {[round(t, 1) for t in taus]} (> 1)")


def test_c12_dos_convolution(criterion):
    from scipy import integrate
    masses = []
    free = compute_bands(Discrete(1.0, 0.0), 8)
    mf = dos_from_bands(free)
    cf = convolve(mf, mf, 4096)
    masses.append(cf.total)
    i = cf.cells // 2
    a, b = cf.edges[i], cf.edges[i + 1]
    total = 0.0
    for (lo, hi), dens in zip(mf.intervals, mf.density):
        brk = [x for x in np.concatenate([a - mf.intervals.ravel(), b - mf.intervals.ravel()]) if lo < x < hi]
        total += integrate.quad(lambda x: dens * float(mf.mass_in(a - x, b - x)), lo, hi,
                                points=brk or None, limit=200)[0]
    spot_err = abs(cf.density[i] - total / (b - a))
    levels = [compute_bands(Discrete(1.0, 24.0), k) for k in range(8, 12)]
    ml = dos_from_bands(levels[0])
    cl = convolve(ml, ml, 1024)
    masses.append(cl.total)
    ev = ac_sc_evidence(cl, sum_cover_sequence(levels, levels))
    mixed = dos_from_bands(compute_bands(Discrete(1.0, 2.0), 8))
    masses.append(convolve(mixed, ml, 2048).total)
    mass_err = max(abs(x - 1) for x in masses)
    ok = mass_err < 1e-10 and spot_err < 1e-3 and ev.mass_on_thin > 0.5
    assert criterion(12, ok, f"mass error {mass_err:.1e} (< 1e-10); free*free density at 0 off by "
                             f"{spot_err:.1e} (< 1e-3); large-coupling thin mass {ev.mass_on_thin:.3f} (> 0.5)")


def _closed_form_z(lam, E):
    a, b = np.sqrt(E.astype(complex)), np.sqrt((E - lam).astype(complex))
    return (np.cos(a) * np.cos(b) - 0.5 * (a / b + b / a) * np.sin(a) * np.sin(b)).real


def test_c13_curve_reproduction(criterion, tmp_path):
    stats = {}
    for name, lo, hi in (("low", 51.0, 6000.0), ("high", 6e4, 8e4)):
        assert run(["continuum-curve", "--lambda", "50", "--emin", str(lo), "--emax", str(hi),
                    "--points", "20000", "--out", f"{name}.csv", "--svg", f"{name}.svg",
                    "--outdir", str(tmp_path)]) == 0
        data = np.loadtxt(tmp_path / f"{name}.csv", delimiter=",", skiprows=1)
        E, z, dist = data[:, 0], data[:, 3], data[:, 5]
        z_err = float(np.max(np.abs(z - _closed_form_z(50.0, E))))
        stats[name] = (z_err, float(dist.max()), float(np.median(dist)))
    z_err = max(s[0] for s in stats.values())
    far = stats["high"][1]
    ok = z_err < 1e-9 and far < 0.05
    assert criterion(13, ok, f"z vs closed form {z_err:.1e} (< 1e-9); distance to the free curve on "
                             f"(6e4, 8e4): max {far:.4f}, median {stats['high'][2]:.4f} (< 0.05); "
                             f"on (51, 6000): max {stats['low'][1]:.3f}")
