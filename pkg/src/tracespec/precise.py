"""Multiprecision continuum band edges for strongly coupled, high-level covers.

The level-k transfer matrix has condition number roughly exp(sqrt(lam - E) *
number of barrier cells), so at strong coupling band widths and small gaps
drop far below double precision.  This module repeats the oscillation-count
bisection of :mod:`tracespec.bands` in mpmath, at a working precision chosen
from that condition number.
"""
from __future__ import annotations

import math

import mpmath
import numpy as np

from .oracle import fibonacci_block

__all__ = ["log10_condition", "working_digits", "band_edges_mp"]


def log10_condition(lam: float, k: int, E) -> float:
    """log10 estimate of the level-k transfer-matrix condition number.

    Counts exponential growth sqrt(V - E) through every classically
    forbidden cell, plus the basis change between psi and psi' scales.
    Maximised over the energies in ``E``.
    """
    E = np.atleast_1d(np.asarray(E, dtype=float))
    word = fibonacci_block(k)
    n0, n1 = int(np.sum(word == 0)), int(np.sum(word == 1))
    growth = n0 * np.sqrt(np.maximum(lam - E, 0.0)) + n1 * np.sqrt(np.maximum(-E, 0.0))
    basis = np.log10(np.maximum.reduce([np.ones_like(E), np.abs(E), np.abs(E - lam)]))
    return float(np.max(growth / np.log(10.0) + basis + np.log10(len(word))))


def working_digits(lam: float, k: int, e_lo: float, e_hi: float) -> int:
    # digits for positions at the width scale plus digits lost in the product
    return int(2 * max(0.0, log10_condition(lam, k, [e_lo, e_hi])) + 30)


class _Evaluator:
    def __init__(self, lam, k):
        self.lam = mpmath.mpf(lam)
        self.word = [int(c) for c in fibonacci_block(k)]

    @staticmethod
    def _piece(u):
        if u > 0:
            r = mpmath.sqrt(u)
            return mpmath.cos(r), mpmath.sin(r) / r, r
        if u < 0:
            r = mpmath.sqrt(-u)
            return mpmath.cosh(r), mpmath.sinh(r) / r, None
        return mpmath.mpf(1), mpmath.mpf(1), None

    def __call__(self, E):
        """(Dirichlet count, discriminant) at energy E."""
        pieces = {1: (E, self._piece(E)), 0: (E - self.lam, self._piece(E - self.lam))}
        psi, dpsi = mpmath.mpf(0), mpmath.mpf(1)
        a, b, c, d = mpmath.mpf(1), mpmath.mpf(0), mpmath.mpf(0), mpmath.mpf(1)
        count = 0
        pi = mpmath.pi
        for letter in self.word:
            u, (cs, sn, r) = pieces[letter]
            m21 = -u * sn
            new_psi = cs * psi + sn * dpsi
            new_dpsi = m21 * psi + cs * dpsi
            if r is not None:
                phi0 = mpmath.atan2(r * psi, dpsi)
                count += int(mpmath.floor((phi0 + r) / pi) - mpmath.floor(phi0 / pi))
            elif psi * new_psi < 0 or (new_psi == 0 and psi != 0):
                count += 1
            psi, dpsi = new_psi, new_dpsi
            a, b, c, d = cs * a + sn * c, cs * b + sn * d, m21 * a + cs * c, m21 * b + cs * d
        return count, (a + d) / 2


def band_edges_mp(lam: float, k: int, e_lo: float, e_hi: float, dps: int | None = None,
                  max_bands: int | None = None) -> list[tuple]:
    """Band edges (as mpf pairs) of the level-k continuum approximant in [e_lo, e_hi]."""
    if dps is None:
        dps = working_digits(lam, k, e_lo, e_hi)
    with mpmath.workdps(dps):
        ev = _Evaluator(lam, k)
        lo, hi = mpmath.mpf(e_lo), mpmath.mpf(e_hi)
        cache = {}

        def state(E):
            key = E
            if key not in cache:
                cache[key] = ev(E)
            return cache[key]

        def past(E, j, right):
            n, dlt = state(E)
            s = 1 if j % 2 == 0 else -1
            inside = (s * dlt < -1) if right else (s * dlt <= 1)
            return n > j or (n == j and inside)

        # stop once the bracket is below the resolution the precision supports
        resolution = mpmath.mpf(10) ** (-(dps // 2 + 5)) * max(1, abs(hi))
        max_iter = int(math.log2(float((hi - lo) / resolution))) + 8

        def bisect(j, right):
            a, b = lo, hi
            for _ in range(max_iter):
                if b - a <= resolution:
                    break
                m = (a + b) / 2
                if past(m, j, right):
                    b = m
                else:
                    a = m
            return b

        n_lo, n_hi = state(lo)[0], state(hi)[0]
        out = []
        for j in range(n_lo, n_hi + 1):
            if max_bands is not None and len(out) >= max_bands:
                break
            if not past(hi, j, False) or past(lo, j, True):
                continue
            left = lo if past(lo, j, False) else bisect(j, False)
            right = bisect(j, True) if past(hi, j, True) else hi
            mid = (left + right) / 2
            dm = ev(mid)[1]
            if abs(dm) > 1 + mpmath.mpf(10) ** -6:
                from .bands import BandError
                raise BandError(f"discriminant {mpmath.nstr(dm, 8)} outside [-1, 1] inside "
                                f"[{mpmath.nstr(left, 20)}, {mpmath.nstr(right, 20)}]")
            out.append((+left, +right))
    return out
