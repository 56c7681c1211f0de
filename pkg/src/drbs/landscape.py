"""Lognormal competitive landscape: distribution of the minimum winning price."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

SQRT2 = math.sqrt(2.0)
LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class LognormalLandscape:
    """Minimum winning price X with log X ~ N(mu, sigma^2).

    Only ``cdf`` and ``pdf`` (plus their logs) are used by the solver, so
    any log-concave family exposing the same methods can stand in.
    """

    mu: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")
        if not math.isfinite(self.mu):
            raise ValueError(f"mu must be finite, got {self.mu}")

    def z(self, x: float) -> float:
        return (math.log(x) - self.mu) / self.sigma

    def cdf(self, x: float) -> float:
        if x < 0.0:
            raise ValueError(f"cdf needs x >= 0, got {x}")
        if x == 0.0:
            return 0.0
        return 0.5 * math.erfc(-self.z(x) / SQRT2)

    def pdf(self, x: float) -> float:
        if not x > 0.0:
            raise ValueError(f"pdf needs x > 0, got {x}")
        return math.exp(self.log_pdf(x))

    def log_pdf(self, x: float) -> float:
        z = self.z(x)
        return -0.5 * z * z - LOG_SQRT_2PI - math.log(x) - math.log(self.sigma)

    def log_cdf(self, x: float) -> float:
        """log F(x); -inf where F underflows."""
        if x == 0.0:
            return -math.inf
        z = self.z(x)
        if z > -30.0:
            return math.log(0.5 * math.erfc(-z / SQRT2))
        return float(special.log_ndtr(z))

    def surplus_ratio(self, v_bar: float, b: float) -> float:
        """L(b) = F(b) / ((v_bar - b) f(b)) for 0 < b < v_bar.

        Returns 0 at b = 0 (the limit for lognormal) and +inf at b >= v_bar.
        """
        if b <= 0.0:
            return 0.0
        if b >= v_bar:
            return math.inf
        log_ratio = self.log_cdf(b) - self.log_pdf(b) - math.log(v_bar - b)
        return math.exp(log_ratio) if log_ratio < 709.0 else math.inf


# Array versions used by the batched solver and the replay harness.


def cdf_array(mu, sigma, x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        z = (np.log(x) - mu) / sigma
    return special.ndtr(z)


def surplus_ratio_array(mu, sigma, v_bar, b):
    """Vectorised L(b); 0 where b <= 0, +inf where b >= v_bar."""
    b = np.asarray(b, dtype=float)
    v_bar = np.asarray(v_bar, dtype=float)
    mu, sigma = np.asarray(mu, dtype=float), np.asarray(sigma, dtype=float)
    inside = (b > 0.0) & (b < v_bar)
    bb = np.where(inside, b, 1.0)
    gap = np.where(inside, v_bar - b, 1.0)
    z = (np.log(bb) - mu) / sigma
    log_f = -0.5 * z * z - LOG_SQRT_2PI - np.log(bb) - np.log(sigma)
    with np.errstate(over="ignore"):
        out = np.exp(special.log_ndtr(z) - log_f - np.log(gap))
    out = np.where(inside, out, 0.0)
    return np.where(b >= v_bar, np.inf, out)
