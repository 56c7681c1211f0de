"""h(x) = (x - 1)/log x, its inverse, and the lower real branch of Lambert W.

Both inverses reduce to one scalar equation. Writing w = -(1 + tau) for
W_{-1}(z), the defining identity w e^w = z becomes

    tau - log1p(tau) = q,    q = -log(-z) - 1 >= 0,

and for h^{-1}(y) = -y W_{-1}(-e^{-1/y}/y) the same equation appears with
q = 1/y + log y - 1 = l(y)^2. Solving in tau avoids forming z near the branch
point -1/e, where 1 + e z cancels catastrophically. The seed
tau0 = sqrt(2) l + (2/3) l^2 is both the two-term branch-point series and the
j_{2/3} lower bound on h^{-1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_MAX_ITER = 100
_SERIES_CUTOFF = 1e-2
_STEP_RTOL = 1e-9  # cubic convergence: the step after this is below 1 ulp


@dataclass(frozen=True)
class HInvResult:
    value: float
    lower_bound: float
    upper_bound: float
    iterations: int


def h(x: float) -> float:
    """(x - 1)/log x, extended continuously by h(0) = 0 and h(1) = 1."""
    if x < 0.0:
        raise ValueError(f"h needs x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    if math.isinf(x):
        return math.inf
    return (x - 1.0) / math.log(x)


def _x_minus_log1p(t: float) -> float:
    """t - log1p(t) without cancellation for small t."""
    if abs(t) < _SERIES_CUTOFF:
        # sum_{n>=2} (-1)^n t^n / n
        acc, term = 0.0, t
        for n in range(2, 14):
            term *= -t
            acc -= term / n
        return acc
    return t - math.log1p(t)


def l_squared(y: float) -> float:
    """1/y + log y - 1, accurate near y = 1."""
    s = y - 1.0
    if abs(s) < _SERIES_CUTOFF:
        # log1p(s) - s/(1+s) = sum_{n>=2} (-1)^n (n-1)/n s^n
        acc, power = 0.0, -s
        for n in range(2, 16):
            power *= -s
            acc += (n - 1) / n * power
        return acc
    return 1.0 / y + math.log(y) - 1.0


def j_bound(y: float, c: float) -> float:
    """j_c(y) = y (1 + sqrt(2) l + c l^2); brackets h^{-1}(y) for c in {2/3, 1}."""
    l2 = l_squared(y)
    l = math.sqrt(max(l2, 0.0))
    return y * (1.0 + math.sqrt(2.0) * l + c * l2)


def _solve_tau(q: float) -> tuple[float, int]:
    """Root tau >= 0 of tau - log1p(tau) = q, by Halley iteration."""
    if q <= 0.0:
        return 0.0, 0
    l = math.sqrt(q)
    tau = math.sqrt(2.0) * l + (2.0 / 3.0) * q
    for it in range(1, _MAX_ITER + 1):
        phi = _x_minus_log1p(tau) - q
        d1 = tau / (1.0 + tau)
        d2 = 1.0 / ((1.0 + tau) * (1.0 + tau))
        newton = phi / d1
        step = newton / (1.0 - 0.5 * newton * d2 / d1)
        new = tau - step
        if new <= 0.0:
            new = 0.5 * tau
        if abs(new - tau) <= _STEP_RTOL * new or phi == 0.0:
            return new, it
        tau = new
    return tau, _MAX_ITER


def lambert_w_m1(z: float) -> float:
    """Lower real branch W_{-1}(z) for -1/e <= z < 0 (result <= -1)."""
    if not (-1.0 / math.e - 1e-15 <= z < 0.0):
        raise ValueError(f"W_-1 is real only on [-1/e, 0), got {z}")
    d = 1.0 + math.e * z
    if d < 0.5:
        q = -math.log1p(-d) if d > 0.0 else 0.0
    else:
        q = -math.log(-z) - 1.0
    tau, _ = _solve_tau(q)
    return -(1.0 + tau)


def h_inv_minus_one(y: float) -> tuple[float, int]:
    """(h^{-1}(y) - 1, iterations); keeps precision when the inverse is near 1."""
    if y < 1.0:
        raise ValueError(f"h_inv needs y >= 1, got {y}")
    if y == 1.0:
        return 0.0, 0
    if math.isinf(y):
        return math.inf, 0
    tau, it = _solve_tau(l_squared(y))
    return (y - 1.0) + y * tau, it


def h_inv(y: float) -> HInvResult:
    """Inverse of h on [1, inf) with the j_{2/3} / j_1 bracket."""
    x, it = h_inv_minus_one(y)
    if y == 1.0:
        return HInvResult(1.0, 1.0, 1.0, 0)
    return HInvResult(1.0 + x, j_bound(y, 2.0 / 3.0), j_bound(y, 1.0), it)


# ---------------------------------------------------------------------------
# vectorised variants


def _x_minus_log1p_array(t):
    small = np.abs(t) < _SERIES_CUTOFF
    ts = np.where(small, t, 0.0)
    acc = np.zeros_like(ts)
    term = ts.copy()
    for n in range(2, 14):
        term = -term * ts
        acc = acc - term / n
    with np.errstate(invalid="ignore"):
        direct = t - np.log1p(t)
    return np.where(small, acc, direct)


def l_squared_array(y):
    y = np.asarray(y, dtype=float)
    s = y - 1.0
    small = np.abs(s) < _SERIES_CUTOFF
    ss = np.where(small, s, 0.0)
    acc = np.zeros_like(ss)
    power = ss.copy()
    for n in range(2, 16):
        power = power * ss
        acc = acc + ((-1) ** n) * (n - 1) / n * power
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = 1.0 / y + np.log(y) - 1.0
    return np.where(small, acc, direct)


def _solve_tau_array(q):
    q = np.asarray(q, dtype=float)
    tau = np.zeros_like(q)
    idx = np.flatnonzero(q > 0.0)
    qq = q[idx]
    t = math.sqrt(2.0) * np.sqrt(qq) + (2.0 / 3.0) * qq
    for _ in range(_MAX_ITER):
        if idx.size == 0:
            break
        phi = _x_minus_log1p_array(t) - qq
        d1 = t / (1.0 + t)
        d2 = 1.0 / ((1.0 + t) * (1.0 + t))
        newton = phi / d1
        new = t - newton / (1.0 - 0.5 * newton * d2 / d1)
        new = np.where(new <= 0.0, 0.5 * t, new)
        done = (np.abs(new - t) <= _STEP_RTOL * new) | (phi == 0.0)
        tau[idx] = new
        keep = ~done
        idx, qq, t = idx[keep], qq[keep], new[keep]
    return tau


def h_inv_minus_one_array(y):
    """Vectorised h^{-1}(y) - 1 for y >= 1 (inf maps to inf)."""
    y = np.asarray(y, dtype=float)
    finite = np.isfinite(y)
    yy = np.where(finite, y, 2.0)
    x = (yy - 1.0) + yy * _solve_tau_array(l_squared_array(yy))
    return np.where(finite, x, np.inf)
