"""Desk-scale experiments comparing simulation with the asymptotic theory.

Each ``run_*`` function returns an :class:`ExperimentReport` whose rows pair an
empirical statistic with a theoretical value. Per-cell random streams are keyed
by ``(seed, cell index)`` and rows are emitted in a fixed order, so outputs are
reproducible for any thread count.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy import optimize

from .ensemble import EnsembleConfig, top_eigenvalue_stream
from .measures import SpectralMeasure, dudley_distance, semicircle_quantiles
from .ratefn import RateParams, as_limit, j_integral, rate_K
from .spherical import SphericalParams, i_limit, log_spherical_finite_n, mc_oracle

__all__ = [
    "ExperimentReport",
    "SlopeEstimate",
    "InfeasibleExperiment",
    "COLUMNS",
    "cell_seed",
    "limit_for",
    "rate_for",
    "threshold_for_rate",
    "wilson_interval",
    "run_as_limit",
    "run_ldp_slope",
    "slope_report",
    "run_spherical_consistency",
    "spherical_gap",
    "run_continuity",
]

AS_LIMIT_TOL = 0.1
SLOPE_REL_TOL = 0.2
SPHERICAL_ABS_TOL = 0.05
SPHERICAL_SE_FACTOR = 4.0
CONTINUITY_TIE_TOL = 1e-3
MIN_EXCEEDANCES = 5

COLUMNS: dict[str, list[str]] = {
    "aslimit": ["beta", "theta", "n", "replicas", "empirical", "std_err", "theory",
                "abs_error", "tolerance", "passed"],
    "ldpslope": ["row", "n", "replicas", "exceedances", "p_hat", "wilson_lo", "wilson_hi",
                 "empirical", "std_err", "theory", "tolerance", "passed"],
    "sphconsist": ["beta", "theta", "n", "samples", "empirical", "std_err", "theory",
                   "gap", "tolerance", "passed"],
    "continuity": ["delta", "jitter", "dudley", "dudley_budget", "empirical", "theory",
                   "tolerance", "passed"],
}


class InfeasibleExperiment(ValueError):
    """Raised when an experiment cannot meet its own preconditions."""


def cell_seed(seed: int, cell: int) -> int:
    """64-bit child seed for cell ``cell`` of a run seeded with ``seed``."""
    lo, hi = np.random.SeedSequence(seed, spawn_key=(cell,)).generate_state(2, np.uint32)
    return int(lo) | (int(hi) << 32)


def limit_for(beta: int, theta: float) -> float:
    """Almost-sure limit of the top eigenvalue, including the undeformed case."""
    if theta == 0:
        return math.sqrt(2.0 * beta)
    return as_limit(RateParams(beta, theta))


def rate_for(beta: int, theta: float, x: float) -> float:
    """``K`` at ``x``; for ``theta == 0`` the undeformed rate ``J``."""
    if theta == 0:
        return math.inf if x < math.sqrt(2.0 * beta) else j_integral(beta, x)
    return rate_K(RateParams(beta, theta), x)


def threshold_for_rate(beta: int, theta: float, k: float) -> float:
    """The ``x`` above the a.s. limit with rate ``k`` (rate is increasing there)."""
    if not k > 0:
        raise ValueError("target rate must be positive")
    lo = limit_for(beta, theta)
    hi = lo + 1.0
    while rate_for(beta, theta, hi) < k:
        hi = lo + 2.0 * (hi - lo)
    return optimize.brentq(lambda x: rate_for(beta, theta, x) - k, lo, hi, xtol=1e-14, rtol=1e-14)


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if trials <= 0:
        raise ValueError("need at least one trial")
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    # the endpoints are exactly 0 and 1 at the extremes; avoid rounding residue
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


# ---------------------------------------------------------------------------
# reports


@dataclass
class ExperimentReport:
    name: str
    params: dict[str, Any]
    rows: list[dict[str, Any]]
    elapsed_ms: float = 0.0
    extras: dict[str, Any] = field(default_factory=dict)

    @property
    def pass_count(self) -> int:
        return sum(1 for r in self.rows if r.get("passed") is True)

    @property
    def fail_count(self) -> int:
        return sum(1 for r in self.rows if r.get("passed") is False)

    @property
    def all_passed(self) -> bool:
        return self.fail_count == 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = COLUMNS[self.name]
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for r in self.rows:
            writer.writerow([_fmt(r.get(c)) for c in cols])
        return buf.getvalue()

    def summary(self, *, include_timing: bool = True) -> str:
        lines = [f"experiment={self.name}"]
        lines += [f"param.{k}={_fmt(v)}" for k, v in self.params.items()]
        lines += [f"{k}={_fmt(v)}" for k, v in self.extras.items()]
        lines += [f"pass_count={self.pass_count}", f"fail_count={self.fail_count}"]
        if include_timing:
            lines.append(f"elapsed_ms={self.elapsed_ms:.0f}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        return cls(**json.loads(text))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt(x) for x in v)
    return str(v)


# ---------------------------------------------------------------------------
# almost-sure limit sweep


def run_as_limit(beta: int, theta_grid: Sequence[float], n_grid: Sequence[int], replicas: int,
                 seed: int, *, tolerance: float = AS_LIMIT_TOL, threads: int = 1) -> ExperimentReport:
    """Mean top eigenvalue per ``(theta, N)`` against the a.s. limit."""
    if not theta_grid or not n_grid:
        raise ValueError("theta and N grids must be non-empty")
    start = time.perf_counter()
    rows = []
    cell = 0
    for theta in theta_grid:
        theory = limit_for(beta, float(theta))
        for n in n_grid:
            cfg = EnsembleConfig(int(n), beta, float(theta), cell_seed(seed, cell))
            tops = top_eigenvalue_stream(cfg, replicas, threads)
            mean = float(np.mean(tops))
            se = float(np.std(tops, ddof=1) / math.sqrt(replicas)) if replicas > 1 else math.nan
            err = abs(mean - theory)
            rows.append(dict(beta=beta, theta=float(theta), n=int(n), replicas=replicas,
                             empirical=mean, std_err=se, theory=theory, abs_error=err,
                             tolerance=tolerance, passed=bool(err <= tolerance)))
            cell += 1
    params = dict(beta=beta, theta_grid=[float(t) for t in theta_grid],
                  n_grid=[int(n) for n in n_grid], replicas=replicas, seed=seed)
    return ExperimentReport("aslimit", params, rows, (time.perf_counter() - start) * 1e3)


# ---------------------------------------------------------------------------
# large-deviation slope


@dataclass
class SlopeEstimate:
    beta: int
    theta: float
    x_threshold: float
    rate_theory: float
    rate_label: str
    ns: list[int]
    replicas: int
    exceedances: list[int]
    p_hat: list[float]
    wilson: list[tuple[float, float]]
    in_regression: list[bool]
    slope: float
    slope_se: float
    intercept: float
    p_hat_at_limit: list[float]

    @property
    def relative_error(self) -> float:
        return abs(self.slope - self.rate_theory) / self.rate_theory

    @property
    def passed(self) -> bool:
        return bool(math.isfinite(self.slope) and self.relative_error <= SLOPE_REL_TOL)


def run_ldp_slope(beta: int, theta: float, x_threshold: float, n_grid: Sequence[int],
                  replicas: int, seed: int, *, threads: int = 1) -> SlopeEstimate:
    """Regress ``-log P(top >= x)`` on ``N`` and compare the slope with ``K(x)``.

    Only cells with at least five exceedances enter the unweighted least-squares
    fit. The slope error propagates the binomial variance of each ``-log p_hat``.
    The threshold must make ``exp(-N K)`` observable with the given replica
    count at the largest ``N``; otherwise :class:`InfeasibleExperiment` is raised.
    """
    if not n_grid:
        raise ValueError("N grid must be non-empty")
    k = rate_for(beta, theta, x_threshold)
    if not k > 0 or math.isinf(k):
        raise InfeasibleExperiment(f"rate at x={x_threshold!r} is {k!r}; need 0 < K < inf")
    n_max = max(n_grid)
    if k * n_max > math.log(replicas / 10.0):
        need = math.ceil(10.0 * math.exp(k * n_max))
        raise InfeasibleExperiment(
            f"K(x)*N_max = {k * n_max:.4g} exceeds log(replicas/10) = {math.log(replicas / 10):.4g}; "
            f"at least {need} replicas are required")
    x_star = limit_for(beta, theta)
    ns = [int(n) for n in n_grid]
    exc, phat, wil, at_lim = [], [], [], []
    for cell, n in enumerate(ns):
        cfg = EnsembleConfig(n, beta, float(theta), cell_seed(seed, cell))
        tops = top_eigenvalue_stream(cfg, replicas, threads)
        e = int(np.count_nonzero(tops >= x_threshold))
        exc.append(e)
        phat.append(e / replicas)
        wil.append(wilson_interval(e, replicas))
        at_lim.append(float(np.count_nonzero(tops >= x_star)) / replicas)
    use = [e >= MIN_EXCEEDANCES for e in exc]
    xs = np.array([n for n, u in zip(ns, use) if u], dtype=float)
    ys = np.array([-math.log(p) for p, u in zip(phat, use) if u])
    ps = np.array([p for p, u in zip(phat, use) if u])
    if xs.size >= 2:
        dx = xs - xs.mean()
        sxx = float(np.dot(dx, dx))
        slope = float(np.dot(dx, ys - ys.mean()) / sxx)
        intercept = float(ys.mean() - slope * xs.mean())
        var_y = (1.0 - ps) / (replicas * ps)
        slope_se = math.sqrt(float(np.sum((dx / sxx) ** 2 * var_y)))
    else:
        slope = intercept = slope_se = math.nan
    return SlopeEstimate(beta=beta, theta=float(theta), x_threshold=float(x_threshold),
                         rate_theory=k, rate_label="deformed" if theta > 0 else "undeformed",
                         ns=ns, replicas=replicas, exceedances=exc, p_hat=phat, wilson=wil,
                         in_regression=use, slope=slope, slope_se=slope_se,
                         intercept=intercept, p_hat_at_limit=at_lim)


def slope_report(est: SlopeEstimate, seed: int, elapsed_ms: float = 0.0) -> ExperimentReport:
    rows = []
    for n, e, p, (lo, hi), u, pl in zip(est.ns, est.exceedances, est.p_hat, est.wilson,
                                          est.in_regression, est.p_hat_at_limit):
        rows.append(dict(row="tail", n=n, replicas=est.replicas, exceedances=e, p_hat=p,
                         wilson_lo=lo, wilson_hi=hi,
                         empirical=(-math.log(p) / n) if p > 0 else math.inf,
                         theory=est.rate_theory))
        rows.append(dict(row="at_limit", n=n, replicas=est.replicas, p_hat=pl,
                         empirical=pl, theory=0.5))
    rows.append(dict(row="slope", empirical=est.slope, std_err=est.slope_se,
                     theory=est.rate_theory, tolerance=SLOPE_REL_TOL, passed=est.passed))
    params = dict(beta=est.beta, theta=est.theta, x_threshold=est.x_threshold,
                  n_grid=est.ns, replicas=est.replicas, seed=seed)
    extras = dict(rate_label=est.rate_label, slope=est.slope, slope_se=est.slope_se,
                  rate_theory=est.rate_theory,
                  relative_error=est.relative_error if math.isfinite(est.slope) else math.nan)
    return ExperimentReport("ldpslope", params, rows, elapsed_ms, extras)


# ---------------------------------------------------------------------------
# spherical integral consistency


def spherical_gap(eigs: Sequence[float], p: SphericalParams, samples: int, seed: int,
                  threads: int = 1) -> tuple[float, float, float]:
    """``(finite-N asymptotic, oracle mean, oracle std err)`` for one spectrum."""
    finite = log_spherical_finite_n(eigs, p)
    mean, se = mc_oracle(eigs, p, samples, seed, threads=threads)
    return finite, mean, se


def run_spherical_consistency(beta: int, theta: float, n_grid: Sequence[int], samples: int,
                              seed: int, *, threads: int = 1) -> ExperimentReport:
    """Finite-N asymptotic against the Monte Carlo oracle on random spectra.

    The spectrum for each ``N`` is uniform on ``[-1, 1]``. A pass needs
    ``gap <= max(0.05, 4 std_err)``; the sign of the gap's trend in ``N`` is
    reported as ``gap_trend_slope`` but not gated on.
    """
    start = time.perf_counter()
    p = SphericalParams(theta=theta, beta=beta)
    rows = []
    for cell, n in enumerate(n_grid):
        s = cell_seed(seed, cell)
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(s)))
        eigs = np.sort(rng.uniform(-1.0, 1.0, int(n)))
        finite, mean, se = spherical_gap(eigs, p, samples, s, threads)
        gap = abs(finite - mean)
        tol = max(SPHERICAL_ABS_TOL, SPHERICAL_SE_FACTOR * se)
        rows.append(dict(beta=beta, theta=theta, n=int(n), samples=samples, empirical=mean,
                         std_err=se, theory=finite, gap=gap, tolerance=tol,
                         passed=bool(gap <= tol)))
    extras = {}
    if len(rows) >= 2:
        ns = np.array([r["n"] for r in rows], dtype=float)
        gaps = np.array([r["gap"] for r in rows])
        extras["gap_trend_slope"] = float(np.polyfit(ns, gaps, 1)[0])
    params = dict(beta=beta, theta=theta, n_grid=[int(n) for n in n_grid], samples=samples,
                  seed=seed)
    return ExperimentReport("sphconsist", params, rows, (time.perf_counter() - start) * 1e3,
                            extras)


# ---------------------------------------------------------------------------
# continuity in the spectrum


def run_continuity(beta: int, theta: float, n: int, delta_grid: Sequence[float], seed: int,
                   *, kappa: float = 0.25, top_offset: float = 0.5,
                   jitter: float | None = None) -> ExperimentReport:
    """Sensitivity of ``(1/N) log I_N`` to a small bulk change plus a top shift ``delta``.

    ``B`` has the ``N - 1`` quantile atoms of the semicircle law as bulk and
    top eigenvalue ``sqrt(2 beta) + top_offset``. ``B'`` jitters the bulk by a
    centred uniform perturbation, shrunk until the Dudley distance between the
    bulk measures is within ``N^-kappa``, and moves the top by ``delta``. The
    same jitter is reused for every ``delta``. Rows come in decreasing
    ``delta``; each must not exceed the previous one by more than ``1e-3``.
    The theory column is the same difference computed with the large-N limit.
    """
    if not 0 < kappa < 0.5:
        raise ValueError("kappa must lie in (0, 1/2)")
    if n < 3:
        raise ValueError("need N >= 3")
    start = time.perf_counter()
    p = SphericalParams(theta=theta, beta=beta)
    bulk = semicircle_quantiles(beta, n - 1)
    top = math.sqrt(2.0 * beta) + top_offset
    budget = n ** (-kappa)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    noise = rng.uniform(-1.0, 1.0, n - 1)
    noise -= noise.mean()
    eps = 0.5 * budget if jitter is None else jitter
    base = SpectralMeasure(bulk)
    for _ in range(30):
        moved = np.minimum(bulk + eps * noise, top - 1e-9)
        dist = dudley_distance(base, SpectralMeasure(moved))
        if dist <= budget:
            break
        eps *= 0.5
    else:
        raise InfeasibleExperiment("could not bring the jittered bulk within the Dudley budget")
    moved_measure = SpectralMeasure(moved)

    f_ref = log_spherical_finite_n(np.append(bulk, top), p)
    lim_ref = i_limit(base, top, p)
    rows = []
    prev = math.inf
    for delta in sorted((float(d) for d in delta_grid), reverse=True):
        f = log_spherical_finite_n(np.append(moved, top + delta), p)
        lim = i_limit(moved_measure, top + delta, p)
        diff = abs(f - f_ref)
        ok = bool(dist <= budget and diff <= prev + CONTINUITY_TIE_TOL)
        rows.append(dict(delta=delta, jitter=eps, dudley=dist, dudley_budget=budget,
                         empirical=diff, theory=abs(lim - lim_ref),
                         tolerance=CONTINUITY_TIE_TOL, passed=ok))
        prev = diff
    if len(rows) >= 2 and rows[-1]["empirical"] > rows[0]["empirical"]:
        rows[-1]["passed"] = False
    params = dict(beta=beta, theta=theta, n=n, delta_grid=[r["delta"] for r in rows],
                  kappa=kappa, top_offset=top_offset, seed=seed)
    return ExperimentReport("continuity", params, rows, (time.perf_counter() - start) * 1e3)
