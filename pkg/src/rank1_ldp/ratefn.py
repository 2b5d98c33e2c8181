"""Rate functions for the top eigenvalue of a rank-one deformed GOE/GUE."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

from .measures import SemicircleLaw, SpectralMeasure, log_potential, semicircle_log_potential
from .spherical import SphericalParams, i_limit, limit_branch

__all__ = [
    "RateParams",
    "RateProfile",
    "theta_c",
    "as_limit",
    "j_integral",
    "phi",
    "rate_F",
    "rate_F_phi_form",
    "rate_K",
    "rate_branch",
    "normalization_log_ratio",
    "rate_profile",
]

FORM_AGREEMENT_TOL = 1e-10


def theta_c(beta: float) -> float:
    """Critical spike strength ``sqrt(beta/2)``."""
    return math.sqrt(0.5 * beta)


@dataclass(frozen=True)
class RateParams:
    beta: int
    theta: float

    def __post_init__(self):
        if self.beta not in (1, 2):
            raise ValueError(f"beta must be 1 or 2, got {self.beta!r}")
        if not self.theta > 0 or not math.isfinite(self.theta):
            raise ValueError(f"theta must be positive and finite, got {self.theta!r}")

    @property
    def edge(self) -> float:
        return math.sqrt(2.0 * self.beta)

    @property
    def theta_c(self) -> float:
        return theta_c(self.beta)

    @property
    def x_b(self) -> float:
        """``theta + beta/(2 theta)``; never below the edge, equal to it at ``theta_c``."""
        return self.theta + self.beta / (2.0 * self.theta)

    @property
    def supercritical(self) -> bool:
        return self.theta > self.theta_c

    def spherical(self) -> SphericalParams:
        return SphericalParams(theta=self.theta, beta=self.beta)


def as_limit(params: RateParams) -> float:
    """Almost-sure limit of the top eigenvalue: the edge, or ``x_b`` past ``theta_c``."""
    return params.x_b if params.supercritical else params.edge


def j_integral(beta: float, x: float) -> float:
    """``int_{sqrt(2 beta)}^x sqrt(z^2 - 2 beta) dz`` in closed form."""
    edge = math.sqrt(2.0 * beta)
    if x < edge:
        raise ValueError(f"J needs x >= {edge!r}, got {x!r}")
    root = math.sqrt(x * x - 2.0 * beta)
    return 0.5 * x * root - beta * math.log((x + root) / edge)


def phi(beta: float, x: float, mu: Union[SemicircleLaw, SpectralMeasure, None] = None) -> float:
    """``beta int log|x - y| d mu(y) - x^2/2``; ``mu`` defaults to the semicircle law."""
    if mu is None:
        mu = SemicircleLaw(beta)
    if isinstance(mu, SemicircleLaw):
        pot = semicircle_log_potential(mu.beta, x)
    else:
        pot = log_potential(mu, x)
    return beta * pot - 0.5 * x * x


def _log_constant(beta: float) -> float:
    return -0.5 * beta + 0.5 * beta * math.log(0.5 * beta)


def rate_F_phi_form(params: RateParams, x: float) -> float:
    """Rate function written with the logarithmic potential of the semicircle law."""
    if x < params.edge:
        return math.inf
    law = SemicircleLaw(params.beta)
    return (_log_constant(params.beta) - phi(params.beta, x, law)
            - i_limit(law, x, params.spherical()))


def rate_F(params: RateParams, x: float) -> float:
    """Rate function of the top eigenvalue under the unnormalised deformed law.

    ``+inf`` below the edge, ``J(x) - I(x, theta)`` above it. The potential form
    is evaluated alongside and must agree to ``1e-10``.
    """
    if x < params.edge:
        return math.inf
    law = SemicircleLaw(params.beta)
    limit = i_limit(law, x, params.spherical())
    val = j_integral(params.beta, x) - limit
    other = _log_constant(params.beta) - phi(params.beta, x, law) - limit
    if abs(val - other) > FORM_AGREEMENT_TOL * max(1.0, abs(val)):
        raise ArithmeticError(f"rate function forms disagree at x={x!r}: {val!r} vs {other!r}")
    return val


def normalization_log_ratio(params: RateParams) -> float:
    """``inf_x F(x)``: ``-theta^2/2`` up to ``theta_c``, ``F(x_b)`` beyond it."""
    if params.supercritical:
        return rate_F(params, params.x_b)
    return -0.5 * params.theta ** 2


def rate_K(params: RateParams, x: float) -> float:
    """Good rate function ``K = F - inf F`` (``+inf`` below the edge)."""
    f = rate_F(params, x)
    if math.isinf(f):
        return f
    return f - normalization_log_ratio(params)


def rate_branch(params: RateParams, x: float) -> int:
    """Which root formula the limit uses at ``x`` (1 or 2); 0 below the edge."""
    if x < params.edge:
        return 0
    return limit_branch(SemicircleLaw(params.beta), x, params.spherical())


@dataclass(frozen=True)
class RateProfile:
    params: RateParams
    x_star: float
    inf_F: float
    F: Callable[[float], float]
    K: Callable[[float], float]


def rate_profile(params: RateParams) -> RateProfile:
    inf_f = normalization_log_ratio(params)

    def K(x: float) -> float:
        f = rate_F(params, x)
        return f if math.isinf(f) else f - inf_f

    return RateProfile(params=params, x_star=as_limit(params), inf_F=inf_f,
                       F=lambda x: rate_F(params, x), K=K)
