"""Rank-one spherical integrals.

Three evaluators of ``(1/N) log I_N(theta, B)`` where ``I_N`` averages
``exp(N theta (U B U*)_11)`` over Haar orthogonal (beta=1) or unitary (beta=2)
``U``:

* :func:`mc_oracle` samples the first column of ``U`` directly,
* :func:`log_spherical_finite_n` is the finite-N saddle-point asymptotic,
* :func:`i_limit` is the large-N limit given a limiting measure and top eigenvalue.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .measures import (
    SemicircleLaw,
    SpectralMeasure,
    g_inverse_numeric,
    hilbert_transform,
    semicircle_expect,
    semicircle_hilbert,
)

__all__ = [
    "SphericalParams",
    "FixedPointSolution",
    "solve_fixed_point",
    "log_spherical_finite_n",
    "mc_oracle",
    "i_limit",
    "limit_branch",
    "i_limit_branch_value",
    "shifted_root",
]

RESIDUAL_TOL = 1e-12
EXPONENT_BOUND = 50.0
DEFAULT_BLOCK = 10_000


@dataclass(frozen=True)
class SphericalParams:
    theta: float
    beta: int = 1

    def __post_init__(self):
        if not self.theta > 0 or not math.isfinite(self.theta):
            raise ValueError(f"theta must be positive and finite, got {self.theta!r}")
        if self.beta not in (1, 2):
            raise ValueError(f"beta must be 1 or 2, got {self.beta!r}")

    @property
    def c(self) -> float:
        """``beta / (2 theta)``, the offset between the root and its shifted form."""
        return self.beta / (2.0 * self.theta)


@dataclass(frozen=True)
class FixedPointSolution:
    v: float
    w: float
    residual: float
    iterations: int


def _as_spectrum(eigs) -> np.ndarray:
    lam = np.sort(np.asarray(eigs, dtype=float).ravel())
    if lam.size == 0:
        raise ValueError("empty spectrum")
    if not np.all(np.isfinite(lam)):
        raise ValueError("spectrum contains non-finite values")
    return lam


def _solve_gap(gaps: np.ndarray, c: float) -> tuple[float, float, int]:
    """Solve ``(c/N) sum 1/(s + gaps_i) = 1`` for ``s = w - lambda_1`` in ``(0, c]``.

    ``gaps = lambda_1 - lambda_i >= 0``. The left side decreases from +inf at
    s=0 and is <= c/s, so ``s = c`` closes the bracket.
    """
    n = gaps.size

    def resid(s):
        return float(np.sum(c / (n * (s + gaps)))) - 1.0

    lo, hi = 0.0, c
    if not np.any(gaps):
        return c, 0.0, 0
    r_hi = resid(hi)
    if r_hi >= 0.0:
        return hi, r_hi, 0
    s = 0.5 * c
    best_s, best_r = hi, r_hi
    it = 0
    for it in range(1, 300):
        r = resid(s)
        if abs(r) < abs(best_r):
            best_s, best_r = s, r
        if r == 0.0:
            break
        if r > 0:
            lo = s
        else:
            hi = s
        d = s + gaps
        dr = -float(np.sum(c / (n * d * d)))
        step = s - r / dr
        if abs(step - s) <= 2 * np.finfo(float).eps * s and lo < step < hi:
            break
        s = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 2 * np.finfo(float).eps * hi:
            break
    return best_s, best_r, it


def solve_fixed_point(eigs: Sequence[float], p: SphericalParams) -> FixedPointSolution:
    """Root of ``(beta/(2 theta)) (1/N) sum_i 1/(v + beta/(2 theta) - lambda_i) = 1``.

    The unknown is parametrised by its distance to the top eigenvalue, so a
    constant spectrum returns ``v = lambda_1`` without rounding and shifting the
    spectrum shifts ``v`` exactly. Newton steps inside a shrinking bracket;
    raises ``ArithmeticError`` if the residual cannot be brought below ``1e-12``.
    """
    lam = _as_spectrum(eigs)
    top = lam[-1]
    c = p.c
    s, r, its = _solve_gap(top - lam, c)
    if abs(r) > RESIDUAL_TOL:
        raise ArithmeticError(f"fixed point residual {r!r} above {RESIDUAL_TOL}")
    v = top - (c - s)
    return FixedPointSolution(v=float(v), w=float(top + s), residual=float(r), iterations=its)


def log_spherical_finite_n(eigs: Sequence[float], p: SphericalParams) -> float:
    """``theta v - (beta/(2N)) sum log(1 + (2 theta/beta)(v - lambda_i))``."""
    lam = _as_spectrum(eigs)
    top = lam[-1]
    c = p.c
    s, r, _ = _solve_gap(top - lam, c)
    if abs(r) > RESIDUAL_TOL:
        raise ArithmeticError(f"fixed point residual {r!r} above {RESIDUAL_TOL}")
    v = top - (c - s)
    # 1 + (v - lambda_i)/c == (s + gap_i)/c
    logs = np.log((s + (top - lam)) / c)
    return float(p.theta * v - 0.5 * p.beta * float(np.mean(logs)))


# ---------------------------------------------------------------------------
# Monte Carlo oracle


def _block_stats(lam: np.ndarray, p: SphericalParams, count: int, seed: int, block: int):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))
    n = lam.size
    g = rng.standard_normal((count, n))
    g *= g
    if p.beta == 2:
        h = rng.standard_normal((count, n))
        g += h * h
    expo = (n * p.theta) * (g @ lam) / g.sum(axis=1)
    m = float(expo.max())
    return m, math.fsum(np.exp(expo - m)), count


def _log_mean(stats) -> float:
    m = max(s[0] for s in stats)
    total = math.fsum(s[1] * math.exp(s[0] - m) for s in stats)
    count = sum(s[2] for s in stats)
    return m + math.log(total) - math.log(count)


def mc_oracle(eigs: Sequence[float], p: SphericalParams, samples: int, seed: int,
              *, block_size: int = DEFAULT_BLOCK, threads: int = 1) -> tuple[float, float]:
    """Monte Carlo estimate of ``(1/N) log I_N`` and its jackknife standard error.

    The first column of a Haar matrix is a normalised Gaussian vector, so
    ``(U B U*)_11 = sum_i lambda_i u_i`` with ``u_i = g_i^2 / |g|^2`` (``|g_i|^2``
    of complex Gaussians when beta=2). Samples are drawn in blocks with seeds
    derived from ``(seed, block index)`` and merged by log-sum-exp in block
    order, so the result does not depend on ``threads``. The standard error is
    a delete-one-block jackknife.
    """
    lam = _as_spectrum(eigs)
    if samples < 1000:
        raise ValueError(f"need at least 1000 samples, got {samples}")
    n = lam.size
    bound = n * p.theta * float(np.max(np.abs(lam)))
    if bound > EXPONENT_BOUND:
        raise ValueError(
            f"exponent bound N*theta*max|lambda| = {bound:.4g} exceeds {EXPONENT_BOUND:g}")
    bs = min(block_size, math.ceil(samples / 10))
    counts = [bs] * (samples // bs)
    if samples % bs:
        counts.append(samples % bs)
    jobs = [(lam, p, cnt, seed, k) for k, cnt in enumerate(counts)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            stats = list(ex.map(lambda a: _block_stats(*a), jobs))
    else:
        stats = [_block_stats(*a) for a in jobs]

    mean_log = _log_mean(stats) / n
    nb = len(stats)
    loo = np.array([_log_mean(stats[:k] + stats[k + 1:]) / n for k in range(nb)])
    se = math.sqrt((nb - 1) / nb * float(np.sum((loo - loo.mean()) ** 2)))
    return mean_log, se


# ---------------------------------------------------------------------------
# large-N limit

Measure = Union[SpectralMeasure, SemicircleLaw]


def _hilbert_at(mu: Measure, x: float) -> float:
    if x < mu.max:
        raise ValueError(f"x={x!r} lies left of the support edge {mu.max!r}")
    if x == mu.max:
        if isinstance(mu, SemicircleLaw):
            return math.sqrt(2.0 / mu.beta)
        return math.inf
    if isinstance(mu, SemicircleLaw):
        return semicircle_hilbert(mu.beta, x)
    return hilbert_transform(mu, x)


def limit_branch(mu: Measure, x: float, p: SphericalParams) -> int:
    """1 when ``H_mu(x) >= 2 theta / beta`` (root from the R-transform), else 2."""
    return 1 if _hilbert_at(mu, x) >= 2.0 * p.theta / p.beta else 2


def shifted_root(mu: Measure, x: float, p: SphericalParams, branch: int) -> float:
    """``w = v + beta/(2 theta)`` for the requested branch."""
    if branch == 2:
        return x
    if isinstance(mu, SemicircleLaw):
        # G(2 theta / beta) for the semicircle law
        return p.theta + p.c
    return g_inverse_numeric(mu, 2.0 * p.theta / p.beta)


def _expect_log_shift(mu: Measure, w: float) -> float:
    """``int log(w - lambda) d mu(lambda)`` for ``w >= max supp mu``."""
    if isinstance(mu, SemicircleLaw):
        if w <= mu.edge:
            return semicircle_expect(mu.beta, lambda y: 1.0, log_singularity_at_edge=True)
        return semicircle_expect(mu.beta, lambda y: math.log(w - y))
    d = w - mu.locations
    if np.any(d <= 0):
        raise ValueError("log term undefined: shifted root sits on an atom")
    return float(np.dot(mu.weights, np.log(d)))


def i_limit_branch_value(mu: Measure, x: float, p: SphericalParams, branch: int) -> float:
    """Evaluate the limit formula on a prescribed branch (1 or 2)."""
    if branch not in (1, 2):
        raise ValueError("branch must be 1 or 2")
    if x < mu.max:
        raise ValueError(f"x={x!r} lies left of the support edge {mu.max!r}")
    w = shifted_root(mu, x, p, branch)
    v = w - p.c
    # 1 + (2 theta/beta)(v - lambda) == (2 theta/beta)(w - lambda)
    log_term = math.log(2.0 * p.theta / p.beta) + _expect_log_shift(mu, w)
    return p.theta * v - 0.5 * p.beta * log_term


def i_limit(mu: Measure, x: float, p: SphericalParams) -> float:
    """Limit of ``(1/N) log I_N`` for spectra with limiting measure ``mu`` and top ``x``.

    ``v = R_mu(2 theta/beta)`` when ``H_mu(x) >= 2 theta/beta``, otherwise
    ``v = x - beta/(2 theta)``; the log term is integrated against ``mu``
    (quadrature for the semicircle law, a finite sum for discrete measures).
    """
    return i_limit_branch_value(mu, x, p, limit_branch(mu, x, p))
