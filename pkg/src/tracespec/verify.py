"""Quick invariant suite behind ``tracespec verify``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .oracle import half_trace_sequence
from .trace import (
    PERIOD6_ORBIT, Continuum, Discrete, TorusPoint, TracePoint, fricke_vogt,
    initial_condition, invariant_of_energy, orbit, torus_embed, torus_map, trace_map,
    trace_map_inverse,
)

__all__ = ["CheckResult", "run_checks"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str


def _result(name, value, tol, what) -> CheckResult:
    ok = bool(np.isfinite(value) and value < tol)
    return CheckResult(name, ok, float(value), tol, f"{what} = {value:.3g} (< {tol:g})")


def _invariance(rng, n) -> float:
    pts = TracePoint(*rng.uniform(-5, 5, (3, n)))
    i0 = fricke_vogt(pts)
    scale = np.maximum(1.0, np.abs(i0))
    fwd = np.abs(fricke_vogt(trace_map(pts)) - i0) / scale
    bwd = np.abs(fricke_vogt(trace_map_inverse(pts)) - i0) / scale
    return float(max(fwd.max(), bwd.max()))


def _line_invariant(rng, n) -> float:
    p = rng.uniform(0.2, 3.0, n) * rng.choice([-1.0, 1.0], n)
    q = rng.uniform(-3.0, 3.0, n)
    E = rng.uniform(-6.0, 6.0, n)
    worst = 0.0
    for pi, qi, ei in zip(p, q, E):
        m = Discrete(pi, qi)
        v = float(invariant_of_energy(m, ei))
        worst = max(worst, abs(float(fricke_vogt(initial_condition(m, ei))) - v) / max(1.0, abs(v)))
    return worst


def _oracle_equivalence(rng, n, k_max=15) -> float:
    worst = 0.0
    for i in range(n):
        if i % 2 == 0:
            model = Discrete(rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0]), rng.uniform(-2, 2))
            E = rng.uniform(-3.0, 3.0)
        else:
            model = Continuum(rng.uniform(0.5, 20.0))
            E = rng.uniform(0.0, 60.0)
        direct = half_trace_sequence(model, E, k_max)
        x = orbit(initial_condition(model, E), k_max - 1)
        ok = np.isfinite(direct) & np.isfinite(x)
        if not np.any(ok):
            continue
        err = np.abs(direct[ok] - x[ok]) / np.maximum(1.0, np.abs(direct[ok]))
        worst = max(worst, float(err.max()))
    return worst


def _semiconjugacy(rng, n) -> tuple[float, float]:
    t = TorusPoint(rng.random(n), rng.random(n))
    lhs = np.stack(trace_map(torus_embed(t)))
    rhs = np.stack(torus_embed(torus_map(t)))
    return float(np.abs(lhs - rhs).max()), float(np.abs(fricke_vogt(torus_embed(t))).max())


def _period6() -> float:
    pt = TracePoint(*PERIOD6_ORBIT[0])
    err = 0.0
    for j in range(1, 7):
        pt = trace_map(pt)
        err = max(err, float(np.max(np.abs(np.array(pt) - PERIOD6_ORBIT[j % 6]))))
    return err


def run_checks(samples: int = 10_000, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    semi, on_cubic = _semiconjugacy(rng, samples)
    return [
        _result("trace-map invariance", _invariance(rng, samples), 1e-12, "max relative drift"),
        _result("line invariant", _line_invariant(rng, min(samples, 2000)), 1e-12,
                "max relative error"),
        _result("oracle equivalence (k <= 15)", _oracle_equivalence(rng, 200), 1e-9,
                "max relative error"),
        _result("semiconjugacy", semi, 1e-12, "max residual"),
        _result("torus image on I = 0", on_cubic, 1e-12, "max |I|"),
        CheckResult("period-6 orbit", _period6() == 0.0, _period6(), 0.0,
                    f"max deviation = {_period6():g} (exact)"),
    ]
