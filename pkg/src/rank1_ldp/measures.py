"""Finite spectral measures, the semicircle law and their transforms.

Everything here is immutable and pure. Discrete measures are stored as sorted
numpy arrays of atom locations and weights; the semicircle law is described by
its single parameter ``beta`` and exposes closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy import integrate

__all__ = [
    "SpectralMeasure",
    "SemicircleLaw",
    "hilbert_transform",
    "g_inverse_numeric",
    "log_potential",
    "semicircle_hilbert",
    "semicircle_g",
    "semicircle_r",
    "semicircle_log_potential",
    "semicircle_expect",
    "semicircle_quantiles",
    "dudley_distance",
    "wasserstein1",
    "read_spectrum",
    "read_spectrum_values",
    "write_spectrum",
]

MERGE_RTOL = 1e-12
WEIGHT_ATOL = 1e-12
QUAD_TOL = 1e-12


class SpectralMeasure:
    """Probability measure with finitely many atoms.

    Atoms closer than ``MERGE_RTOL`` (relative) are merged by adding their
    weights, and zero-weight atoms are dropped, so ``locations`` is strictly
    increasing and every atom carries positive mass. Arrays are read-only.
    """

    __slots__ = ("locations", "weights")

    def __init__(self, locations: Iterable[float], weights: Iterable[float] | None = None):
        loc = np.asarray(list(locations) if not isinstance(locations, np.ndarray) else locations,
                         dtype=float).ravel()
        if loc.size == 0:
            raise ValueError("a spectral measure needs at least one atom")
        if not np.all(np.isfinite(loc)):
            raise ValueError("atom locations must be finite")
        if weights is None:
            w = np.full(loc.size, 1.0 / loc.size)
        else:
            w = np.asarray(list(weights) if not isinstance(weights, np.ndarray) else weights,
                           dtype=float).ravel()
            if w.shape != loc.shape:
                raise ValueError("locations and weights differ in length")
            if np.any(w < 0) or not np.all(np.isfinite(w)):
                raise ValueError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > WEIGHT_ATOL:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        order = np.argsort(loc, kind="stable")
        loc, w = loc[order], w[order]
        loc, w = _merge_atoms(loc, w)
        keep = w > 0
        loc, w = loc[keep], w[keep]
        loc.setflags(write=False)
        w.setflags(write=False)
        self.locations = loc
        self.weights = w

    @classmethod
    def empirical(cls, values: Iterable[float]) -> "SpectralMeasure":
        """Uniform measure on ``values`` (repeated values get repeated mass)."""
        return cls(np.asarray(values, dtype=float))

    @property
    def min(self) -> float:
        return float(self.locations[0])

    @property
    def max(self) -> float:
        return float(self.locations[-1])

    def __len__(self) -> int:
        return self.locations.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpectralMeasure):
            return NotImplemented
        return (np.array_equal(self.locations, other.locations)
                and np.array_equal(self.weights, other.weights))

    def __hash__(self) -> int:
        return hash((self.locations.tobytes(), self.weights.tobytes()))

    def __repr__(self) -> str:
        return f"SpectralMeasure(<{len(self)} atoms on [{self.min:.6g}, {self.max:.6g}]>)"


def _merge_atoms(loc: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if loc.size < 2:
        return loc.copy(), w.copy()
    scale = np.maximum(1.0, np.maximum(np.abs(loc[1:]), np.abs(loc[:-1])))
    new_group = np.diff(loc) > MERGE_RTOL * scale
    group = np.concatenate(([0], np.cumsum(new_group)))
    merged_w = np.bincount(group, weights=w)
    first = np.concatenate(([True], new_group))
    return loc[first].copy(), merged_w


@dataclass(frozen=True)
class SemicircleLaw:
    """Semicircle law with density ``sqrt(2*beta - t**2) / (beta*pi)``."""

    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta!r}")

    @property
    def edge(self) -> float:
        return math.sqrt(2.0 * self.beta)

    @property
    def min(self) -> float:
        return -self.edge

    @property
    def max(self) -> float:
        return self.edge

    def density(self, t):
        t = np.asarray(t, dtype=float)
        inside = np.clip(2.0 * self.beta - t * t, 0.0, None)
        return np.sqrt(inside) / (self.beta * math.pi)

    def cdf(self, t):
        r = self.edge
        s = np.clip(np.asarray(t, dtype=float) / r, -1.0, 1.0)
        return 0.5 + (s * np.sqrt(1.0 - s * s) + np.arcsin(s)) / math.pi


# ---------------------------------------------------------------------------
# discrete transforms


def hilbert_transform(mu: SpectralMeasure, z: float) -> float:
    """``sum_i w_i / (z - lambda_i)`` for ``z`` outside the convex hull of the atoms."""
    if mu.min <= z <= mu.max:
        raise ValueError(
            f"Hilbert transform undefined at z={z!r}: inside support hull [{mu.min!r}, {mu.max!r}]")
    return float(np.dot(mu.weights, 1.0 / (z - mu.locations)))


def _hilbert_derivative(mu: SpectralMeasure, z: float) -> float:
    d = z - mu.locations
    return float(-np.dot(mu.weights, 1.0 / (d * d)))


def g_inverse_numeric(mu: SpectralMeasure, w: float) -> float:
    """Functional inverse of the Hilbert transform to the right of the support.

    Returns ``z > max(supp mu)`` with ``H_mu(z) = w``. Since ``H_mu(z) <= 1/(z - max)``,
    ``max + 1/w`` already brackets the root from the right; the bracket is then
    shrunk by bisection, with Newton steps taken whenever they stay inside it.
    """
    if not w > 0:
        raise ValueError(f"functional inverse needs w > 0, got {w!r}")
    top = mu.max
    lo, hi = top, top + 1.0 / w
    tol = 1e-12 * max(1.0, w)
    z = hi
    for _ in range(400):
        h = hilbert_transform(mu, z) - w
        if abs(h) <= tol:
            return z
        if h > 0:
            lo = z
        else:
            hi = z
        dh = _hilbert_derivative(mu, z)
        step = z - h / dh
        z = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(hi)):
            break
    return z


def log_potential(mu: SpectralMeasure, x: float) -> float:
    """``sum_i w_i log|x - lambda_i|``."""
    d = np.abs(x - mu.locations)
    if np.any(d == 0.0):
        raise ValueError(f"log potential is -inf at x={x!r}, which is an atom")
    return float(np.dot(mu.weights, np.log(d)))


# ---------------------------------------------------------------------------
# semicircle closed forms


def _check_beta(beta: float) -> None:
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta!r}")


def semicircle_hilbert(beta: float, x: float) -> float:
    """``(x - sqrt(x^2 - 2 beta)) / beta`` strictly right of the edge ``sqrt(2 beta)``.

    The value tends to ``sqrt(2/beta)`` at the edge; callers needing it there
    use that limit directly.
    """
    _check_beta(beta)
    edge = math.sqrt(2.0 * beta)
    if not x > edge:
        raise ValueError(f"semicircle Hilbert transform needs x > {edge!r}, got {x!r}")
    # (x - s)/beta rewritten as 2/(x + s) to avoid cancellation for large x
    return 2.0 / (x + math.sqrt(x * x - 2.0 * beta))


def semicircle_g(beta: float, w: float) -> float:
    """Inverse of :func:`semicircle_hilbert`: ``(beta/2) w + 1/w``."""
    _check_beta(beta)
    if not w > 0:
        raise ValueError(f"semicircle G needs w > 0, got {w!r}")
    return 0.5 * beta * w + 1.0 / w


def semicircle_r(beta: float, w: float) -> float:
    """R-transform of the semicircle law, ``(beta/2) w`` (entire)."""
    _check_beta(beta)
    return 0.5 * beta * w


def semicircle_log_potential(beta: float, x: float) -> float:
    """``int log|x - y| d sigma_beta(y)`` for ``x`` at or right of the edge.

    Closed form obtained by rescaling the unit-variance law on ``[-2, 2]``.
    """
    _check_beta(beta)
    s = math.sqrt(0.5 * beta)
    u = x / s
    if u < 2.0:
        raise ValueError(f"closed form valid only for x >= {2 * s!r}, got {x!r}")
    root = math.sqrt(u * u - 4.0)
    return math.log(s) + 0.25 * u * u - 0.5 - 0.25 * u * root + math.log(0.5 * (u + root))


def semicircle_expect(beta: float, f, *, log_singularity_at_edge: bool = False,
                      tol: float = QUAD_TOL) -> float:
    """``int f d sigma_beta`` by adaptive Gauss-Kronrod quadrature.

    The square-root endpoint behaviour of the density is absorbed in an
    algebraic weight. With ``log_singularity_at_edge`` the integral computed is
    ``int f(y) log(edge - y) d sigma_beta(y)`` with the log handled exactly by the
    weight, for integrands that blow up logarithmically at the right edge.
    """
    _check_beta(beta)
    r = math.sqrt(2.0 * beta)
    c = 1.0 / (beta * math.pi)
    weight = "alg-logb" if log_singularity_at_edge else "alg"
    val, _ = integrate.quad(lambda y: c * f(y), -r, r, weight=weight, wvar=(0.5, 0.5),
                            epsabs=tol, epsrel=tol, limit=200)
    return float(val)


def semicircle_quantiles(beta: float, m: int) -> np.ndarray:
    """Atoms at the ``(k - 1/2)/m`` quantiles of ``sigma_beta``, k = 1..m."""
    if m < 1:
        raise ValueError("need at least one atom")
    law = SemicircleLaw(beta)
    probs = (np.arange(1, m + 1) - 0.5) / m
    lo = np.full(m, -law.edge)
    hi = np.full(m, law.edge)
    # 60 halvings take the bracket below 1e-17 * edge
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        below = law.cdf(mid) < probs
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Dudley (bounded-Lipschitz) distance


def dudley_distance(mu: SpectralMeasure, nu: SpectralMeasure) -> float:
    """Exact bounded-Lipschitz distance between two finite measures.

    Maximises ``sum_i c_i f_i`` over the merged support, where ``c`` is the
    signed mass difference, subject to ``|f_i| <= 1`` and
    ``|f_{i+1} - f_i| <= x_{i+1} - x_i``. The path structure allows an exact
    dynamic programme: the best partial value as a function of the current
    ``f`` is concave and piecewise linear, and each step is a window maximum
    (shift the ascending part left and the descending part right by the gap)
    followed by clipping to ``[-1, 1]`` and adding a linear term.
    """
    x = np.union1d(mu.locations, nu.locations)
    c = np.zeros(x.size)
    c[np.searchsorted(x, mu.locations)] += mu.weights
    c[np.searchsorted(x, nu.locations)] -= nu.weights

    # both signs give the same value in exact arithmetic; taking the max makes
    # the result exactly symmetric in floating point too
    best = max(_dudley_dp(x, c), _dudley_dp(x, -c))
    return float(min(2.0, max(0.0, best)))


def _dudley_dp(x: np.ndarray, c: np.ndarray) -> float:
    xs = np.array([-1.0, 1.0])
    vals = np.array([-c[0], c[0]])
    for i in range(1, x.size):
        gap = x[i] - x[i - 1]
        k = int(np.argmax(vals))
        xs = np.concatenate((xs[:k + 1] - gap, xs[k:] + gap))
        vals = np.concatenate((vals[:k + 1], vals[k:]))
        xs, vals = _clip_pl(xs, vals)
        vals = vals + c[i] * xs
    return float(vals.max())


def _clip_pl(xs: np.ndarray, vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    inside = (xs > -1.0) & (xs < 1.0)
    ends = np.interp([-1.0, 1.0], xs, vals)
    new_xs = np.concatenate(([-1.0], xs[inside], [1.0]))
    new_vals = np.concatenate(([ends[0]], vals[inside], [ends[1]]))
    # drop zero-length pieces so np.interp stays well defined
    keep = np.concatenate(([True], np.diff(new_xs) > 0))
    return new_xs[keep], new_vals[keep]


def wasserstein1(mu: SpectralMeasure, nu: SpectralMeasure) -> float:
    """W1 on the line, as the integral of ``|F_mu - F_nu|``."""
    x = np.union1d(mu.locations, nu.locations)
    fm = np.cumsum(np.bincount(np.searchsorted(x, mu.locations), mu.weights, x.size))
    fn = np.cumsum(np.bincount(np.searchsorted(x, nu.locations), nu.weights, x.size))
    return float(np.sum(np.abs(fm - fn)[:-1] * np.diff(x)))


# ---------------------------------------------------------------------------
# text I/O


def read_spectrum_values(path: str | Path) -> tuple[np.ndarray, np.ndarray | None]:
    """Raw ``(locations, weights)`` from a spectrum file, in file order.

    Lines hold ``location [weight]``; ``#`` starts a comment. Weights are given
    on every line or on none (``None`` is returned then).
    """
    locs: list[float] = []
    weights: list[float] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) > 2:
                raise ValueError(f"{path}:{lineno}: expected 'location [weight]'")
            locs.append(float(parts[0]))
            if len(parts) == 2:
                weights.append(float(parts[1]))
    if not locs:
        raise ValueError(f"{path}: no atoms")
    if weights and len(weights) != len(locs):
        raise ValueError(f"{path}: weights given on some lines but not all")
    return np.asarray(locs), (np.asarray(weights) if weights else None)


def read_spectrum(path: str | Path) -> SpectralMeasure:
    """Spectral measure from a spectrum file; given weights are renormalised."""
    locs, weights = read_spectrum_values(path)
    if weights is None:
        return SpectralMeasure(locs)
    return SpectralMeasure(locs, weights / math.fsum(weights))


def write_spectrum(path: str | Path, mu: SpectralMeasure) -> None:
    with open(path, "w") as fh:
        fh.write("# location weight\n")
        for x, w in zip(mu.locations, mu.weights):
            fh.write(f"{float(x)!r} {float(w)!r}\n")

