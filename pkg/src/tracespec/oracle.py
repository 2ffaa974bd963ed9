"""Operator-side reference computations.

Sturmian coding, Jacobi coefficients, block transfer matrices and exact
eigenvalues of periodic approximants.  Everything here is computed from the
operator directly and never through the trace map, so it can serve as an
independent check on trace-map results.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg
from scipy.integrate import simpson

from .trace import Continuum, Discrete, ModelParams, cos_sqrt, sinc_sqrt

__all__ = [
    "ALPHA", "MAX_PERIOD", "fibonacci_number", "SturmianWord", "sturmian_word",
    "fibonacci_block", "JacobiCoefficients", "jacobi_coefficients",
    "Monodromy", "site_matrices", "discrete_monodromy", "continuum_piece",
    "continuum_monodromy", "half_trace_sequence", "PeriodicSpectrum",
    "periodic_spectrum", "rayleigh_quotient", "smoothed_tent",
    "ground_state_rayleigh", "ground_state_estimate",
]

ALPHA = (np.sqrt(5.0) - 1.0) / 2.0
# largest period handed to the dense eigensolver
MAX_PERIOD = 2584


@lru_cache(maxsize=None)
def _fib_table() -> tuple[int, ...]:
    out = [1, 1]
    while out[-1] < 2 ** 63 - 1:
        out.append(out[-1] + out[-2])
    return tuple(out[:-1])


def fibonacci_number(k: int) -> int:
    """F_0 = F_1 = 1, F_{k+1} = F_k + F_{k-1}; restricted to values below 2**63."""
    k = int(k)
    if k < 0:
        raise ValueError("k must be non-negative")
    table = _fib_table()
    if k >= len(table):
        raise OverflowError(f"F_{k} does not fit in a signed 64-bit integer")
    return table[k]


@dataclass(frozen=True)
class SturmianWord:
    theta: float
    n_from: int
    entries: np.ndarray

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n_from, self.n_from + len(self.entries))

    def __str__(self) -> str:
        return "".join(map(str, self.entries.tolist()))

    def __len__(self) -> int:
        return len(self.entries)


def sturmian_word(theta: float, n_from: int, n_to: int) -> SturmianWord:
    """Letters chi_[1-a, 1)(n a + theta mod 1) for n_from <= n <= n_to.

    Evaluated as floor((n+1)a + theta) - floor(n a + theta), which is the same
    indicator but avoids comparing a reduced fractional part with 1 - a.
    """
    if n_to < n_from:
        raise ValueError("empty index range")
    n = np.arange(n_from, n_to + 1, dtype=float)
    w = np.floor((n + 1.0) * ALPHA + theta) - np.floor(n * ALPHA + theta)
    return SturmianWord(float(theta), int(n_from), w.astype(np.int8))


@lru_cache(maxsize=64)
def _block(k: int) -> tuple[int, ...]:
    if k == 0:
        return (0,)
    if k == 1:
        return (1,)
    return _block(k - 1) + _block(k - 2)


def fibonacci_block(k: int) -> np.ndarray:
    """w_0 = 0, w_1 = 1, w_{k+1} = w_k w_{k-1}; length F_k for k >= 1."""
    if k < 0:
        raise ValueError("k must be non-negative")
    return np.array(_block(int(k)), dtype=np.int8)


@dataclass(frozen=True)
class JacobiCoefficients:
    p: np.ndarray
    q: np.ndarray


def jacobi_coefficients(model: Discrete, word) -> JacobiCoefficients:
    w = np.asarray(getattr(word, "entries", word), dtype=float)
    return JacobiCoefficients(p=(model.p - 1.0) * w + 1.0, q=model.q * w)


@dataclass(frozen=True)
class Monodromy:
    """Unimodular 2x2 transfer matrix (stacked over energies if E was an array)."""

    matrix: np.ndarray
    normalized: bool = True

    @property
    def half_trace(self):
        return 0.5 * (self.matrix[..., 0, 0] + self.matrix[..., 1, 1])

    @property
    def det(self):
        return np.linalg.det(self.matrix)


def _mat(a, b, c, d) -> np.ndarray:
    a, b, c, d = np.broadcast_arrays(a, b, c, d)
    return np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2)


def site_matrices(model: Discrete, E):
    """One-site matrices for the letters 0 and 1.

    Acting on (p_n phi_n, phi_{n-1}) these are [[(E - q_n)/p_n, -p_n], [1/p_n, 0]];
    each depends on one letter only and has determinant exactly 1.
    """
    E = np.asarray(E, dtype=float)
    one, zero = np.ones_like(E), np.zeros_like(E)
    m0 = _mat(E, -one, one, zero)
    p, q = model.p, model.q
    m1 = _mat((E - q) / p, -p * one, one / p, zero)
    return m0, m1


def continuum_piece(u) -> np.ndarray:
    """Unit-length propagator of -psi'' = u psi acting on (psi, psi')."""
    u = np.asarray(u, dtype=float)
    c, s = cos_sqrt(u), sinc_sqrt(u)
    return _mat(c, s, -u * s, c)


def _block_products(m0: np.ndarray, m1: np.ndarray, k: int) -> list[np.ndarray]:
    # the transfer matrix of w_{k+1} = w_k w_{k-1} is M(w_{k-1}) @ M(w_k)
    blocks = [m0, m1]
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(2, k + 1):
            blocks.append(blocks[-2] @ blocks[-1])
    return blocks


def discrete_monodromy(model: Discrete, E, k: int) -> Monodromy:
    m0, m1 = site_matrices(model, E)
    return Monodromy(_block_products(m0, m1, k)[k])


def continuum_monodromy(lam: float, E, k: int) -> Monodromy:
    """Transfer matrix over the level-k block; the letter 0 carries potential lam."""
    E = np.asarray(E, dtype=float)
    m0, m1 = continuum_piece(E - lam), continuum_piece(E)
    return Monodromy(_block_products(m0, m1, k)[k])


def half_trace_sequence(model: ModelParams, E, k_max: int) -> np.ndarray:
    """Half-traces x_1, ..., x_{k_max} of the block transfer matrices.

    Output has shape (k_max,) + shape(E).
    """
    E = np.asarray(E, dtype=float)
    if isinstance(model, Discrete):
        m0, m1 = site_matrices(model, E)
    elif isinstance(model, Continuum):
        m0, m1 = continuum_piece(E - model.lam), continuum_piece(E)
    else:
        raise TypeError(f"unknown model {model!r}")
    blocks = _block_products(m0, m1, k_max)
    with np.errstate(over="ignore", invalid="ignore"):
        return np.array([0.5 * (b[..., 0, 0] + b[..., 1, 1]) for b in blocks[1:k_max + 1]])


@dataclass(frozen=True)
class PeriodicSpectrum:
    model: Discrete
    k: int
    phase: float
    eigenvalues: np.ndarray


def bloch_matrix(model: Discrete, k: int, phase: float) -> np.ndarray:
    """Hermitian F_k x F_k matrix of the level-k periodic operator with Bloch phase.

    The wrap-around bond carries p_1 e^{i phase}; phase 0 is periodic and pi
    antiperiodic.
    """
    word = fibonacci_block(k)
    n = len(word)
    if n > MAX_PERIOD:
        raise ValueError(f"period {n} exceeds the dense limit {MAX_PERIOD}")
    co = jacobi_coefficients(model, word)
    H = np.zeros((n, n), dtype=complex)
    H[np.arange(n), np.arange(n)] = co.q
    tw = np.exp(1j * phase)
    for i in range(n):
        j = (i + 1) % n
        hop = co.p[j] * (tw if j == 0 else 1.0)
        H[i, j] += np.conj(hop)
        H[j, i] += hop
    if np.allclose(H.imag, 0.0):
        return H.real
    return H


def periodic_spectrum(model: Discrete, k: int, phase: float = 0.0) -> PeriodicSpectrum:
    H = bloch_matrix(model, k, phase)
    ev = scipy.linalg.eigvalsh(H)
    if len(ev) != H.shape[0] or not np.all(np.isfinite(ev)):
        raise np.linalg.LinAlgError("eigensolver returned an incomplete spectrum")
    return PeriodicSpectrum(model, int(k), float(phase), np.sort(ev))


def rayleigh_quotient(phi, dphi, lo: float, hi: float, panels: int = 10_000) -> float:
    """||phi'||^2 / ||phi||^2 on [lo, hi] by composite Simpson."""
    x = np.linspace(lo, hi, 2 * (panels // 2) + 1)
    num = simpson(np.asarray(dphi(x)) ** 2, x=x)
    den = simpson(np.asarray(phi(x)) ** 2, x=x)
    return float(num / den)


def smoothed_tent(half_width: float = 1.0, smoothing: float = 0.5):
    """Tent 1 - |x|/w with the apex replaced by the even quartic matching it to C^2."""
    w, h = half_width, smoothing * half_width
    c4 = 1.0 / (8.0 * h ** 3 * w)
    c2 = -3.0 / (4.0 * h * w)
    c0 = 1.0 - 3.0 * h / (8.0 * w)

    def phi(x):
        ax = np.abs(x)
        return np.where(ax < h, c0 + c2 * x * x + c4 * x ** 4, np.clip(1.0 - ax / w, 0.0, None))

    def dphi(x):
        ax = np.abs(x)
        outer = np.where(ax < w, -np.sign(x) / w, 0.0)
        return np.where(ax < h, 2.0 * c2 * x + 4.0 * c4 * x ** 3, outer)

    return phi, dphi


def _free_pair_position(search: int = 64) -> int:
    word = sturmian_word(0.0, 1, search)
    s = str(word)
    i = s.find("11")
    if i < 0:
        raise RuntimeError("no pair of consecutive free cells in the search window")
    return word.n_from + i


def ground_state_rayleigh(lam: float) -> float:
    """Variational upper bound for the bottom of the continuum spectrum.

    A quartic-smoothed tent is placed on two consecutive free cells of the
    Sturmian potential (where V vanishes), so the bound does not depend on lam.
    """
    n = _free_pair_position()
    word = sturmian_word(0.0, n, n + 1)
    if not np.all(word.entries == 1):
        raise RuntimeError("bump support does not sit on free cells")
    phi, dphi = smoothed_tent(1.0)
    centre = n + 1.0
    return rayleigh_quotient(lambda x: phi(x - centre), lambda x: dphi(x - centre),
                             centre - 1.0, centre + 1.0)


def ground_state_estimate(lam: float, k: int) -> float:
    """Lowest energy of the level-k periodic continuum approximant."""
    if lam < 0:
        raise ValueError("lam must be non-negative")
    if lam == 0:
        return 0.0
    from .bands import continuum_band_edges
    edges = continuum_band_edges(lam, k, 0.0, lam + 20.0, max_bands=1)
    return float(edges[0, 0])
