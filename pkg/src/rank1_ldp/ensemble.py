"""Deformed GOE/GUE sampling and a dense Hermitian eigensolver.

``X = W + theta e1 e1^T`` where ``W`` has density proportional to
``exp(-(N/2) tr W^2)`` over real symmetric (beta=1) or Hermitian (beta=2)
matrices, so the bulk follows the semicircle law on ``[-sqrt(2 beta), sqrt(2 beta)]``.

Eigenvalues come from Householder reduction to a real symmetric tridiagonal
matrix followed by the implicit QL iteration with Wilkinson-type shifts. Both
kernels are compiled with numba and release the GIL, so replicas can run on a
thread pool.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

__all__ = [
    "EnsembleConfig",
    "EigenSample",
    "replica_rng",
    "sample_deformed",
    "tridiagonalize",
    "tridiagonal_eigenvalues",
    "eigenvalues",
    "sample_spectra",
    "top_eigenvalue_stream",
]

MAX_QL_ITERATIONS = 50


@dataclass(frozen=True)
class EnsembleConfig:
    n: int
    beta: int
    theta: float
    seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"matrix size must be an integer >= 2, got {self.n!r}")
        if self.beta not in (1, 2):
            raise ValueError(f"beta must be 1 or 2, got {self.beta!r}")
        if not self.theta >= 0 or not math.isfinite(self.theta):
            raise ValueError(f"theta must be finite and >= 0, got {self.theta!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class EigenSample:
    eigenvalues: np.ndarray

    @property
    def top(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def second(self) -> float:
        return float(self.eigenvalues[-2])


def replica_rng(seed: int, replica: int) -> np.random.Generator:
    """Counter-based (Philox) stream for one replica, keyed by ``(seed, replica)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(replica,))))


def _gaussian_wigner(n: int, beta: int, rng: np.random.Generator) -> np.ndarray:
    scale = 1.0 / math.sqrt(n)
    g = rng.standard_normal((n, n))
    if beta == 1:
        w = 0.5 * (g + g.T)
    else:
        h = rng.standard_normal((n, n))
        a = g + 1j * h
        w = 0.5 * (a + a.conj().T)
    w *= scale
    return w


def sample_deformed(config: EnsembleConfig, replica: int = 0) -> np.ndarray:
    """Draw ``W + theta e1 e1^T`` for the given replica index.

    Diagonal entries of ``W`` are N(0, 1/N); off-diagonal entries (real and
    imaginary parts separately when beta=2) are N(0, 1/(2N)).
    """
    rng = replica_rng(config.seed, replica)
    x = _gaussian_wigner(config.n, config.beta, rng)
    x[0, 0] += config.theta
    return x


@numba.njit(cache=True, nogil=True)
def _householder_tridiag(a):
    # a is overwritten; only its lower triangle is read or written
    n = a.shape[0]
    d = np.empty(n)
    e = np.zeros(n)
    v = np.empty(n, dtype=a.dtype)
    p = np.empty(n, dtype=a.dtype)
    for k in range(n - 2):
        lo = k + 1
        norm2 = 0.0
        for i in range(lo, n):
            norm2 += abs(a[i, k]) ** 2
        norm = math.sqrt(norm2)
        if norm == 0.0:
            e[k] = 0.0
            continue
        x0 = a[lo, k]
        ax0 = abs(x0)
        phase = x0 / ax0 if ax0 > 0.0 else x0 * 0.0 + 1.0
        alpha = -phase * norm
        v[lo] = x0 - alpha
        for i in range(lo + 1, n):
            v[i] = a[i, k]
        vn2 = abs(v[lo]) ** 2 + norm2 - ax0 * ax0
        vn = math.sqrt(vn2)
        for i in range(lo, n):
            v[i] = v[i] / vn
        e[k] = norm
        # p = A22 v using the lower triangle only
        for i in range(lo, n):
            p[i] = 0.0
        for i in range(lo, n):
            s = a[i, i] * v[i]
            vi = v[i]
            for j in range(lo, i):
                aij = a[i, j]
                s += aij * v[j]
                p[j] += np.conj(aij) * vi
            p[i] += s
        kk = 0.0
        for i in range(lo, n):
            kk += (np.conj(v[i]) * p[i]).real
        for i in range(lo, n):
            p[i] = 2.0 * (p[i] - kk * v[i])
        # A22 -= v p^* + p v^*
        for i in range(lo, n):
            vi = v[i]
            pi = p[i]
            for j in range(lo, i + 1):
                a[i, j] -= vi * np.conj(p[j]) + pi * np.conj(v[j])
    if n >= 2:
        e[n - 2] = abs(a[n - 1, n - 2])
    for i in range(n):
        d[i] = a[i, i].real
    return d, e


@numba.njit(cache=True, nogil=True)
def _tql_implicit(d, e):
    # d: diagonal, e[i]: coupling between i and i+1, e[n-1] = 0. Returns status.
    n = d.shape[0]
    eps = 2.220446049250313e-16
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > MAX_QL_ITERATIONS:
                return l + 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return 0


def tridiagonalize(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Householder reduction of a symmetric/Hermitian matrix.

    Returns the diagonal ``d`` and the moduli of the off-diagonal ``e``
    (length ``n - 1``) of a real tridiagonal matrix with the same spectrum; a
    diagonal unitary similarity makes the complex off-diagonal real.
    """
    a = np.array(matrix, dtype=np.complex128 if np.iscomplexobj(matrix) else np.float64, order="C")
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    d, e = _householder_tridiag(a)
    return d, e[:-1].copy()


def tridiagonal_eigenvalues(d: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Eigenvalues (ascending) of the symmetric tridiagonal matrix ``(d, e)``."""
    d = np.array(d, dtype=float)
    ee = np.zeros(d.size)
    ee[:-1] = e
    status = _tql_implicit(d, ee)
    if status:
        raise RuntimeError(f"QL iteration did not converge for eigenvalue {status - 1} "
                           f"within {MAX_QL_ITERATIONS} sweeps")
    d.sort()
    return d


def eigenvalues(matrix: np.ndarray) -> EigenSample:
    """Full spectrum of a symmetric or Hermitian matrix, sorted ascending."""
    d, e = tridiagonalize(matrix)
    return EigenSample(tridiagonal_eigenvalues(d, e))


def _replica_spectrum(config: EnsembleConfig, replica: int) -> np.ndarray:
    return eigenvalues(sample_deformed(config, replica)).eigenvalues


def _map(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


def sample_spectra(config: EnsembleConfig, replicas: int, threads: int = 1) -> list[EigenSample]:
    if replicas < 1:
        raise ValueError("need at least one replica")
    return _map(lambda r: EigenSample(_replica_spectrum(config, r)), range(replicas), threads)


def top_eigenvalue_stream(config: EnsembleConfig, replicas: int, threads: int = 1) -> np.ndarray:
    """Top eigenvalue of ``replicas`` independent draws, in replica order.

    Replica ``r`` always uses the stream keyed by ``(config.seed, r)``, so the
    output does not depend on ``threads`` or scheduling.
    """
    if replicas < 1:
        raise ValueError("need at least one replica")
    tops = _map(lambda r: _replica_spectrum(config, r)[-1], range(replicas), threads)
    return np.asarray(tops, dtype=float)
