"""Inner minimisation: the landscape adversary's worst-case win probability.

Two independent routes to min over the KL ball of P_Q(X <= b):

* the convex dual, max over lam <= 0 of lam * [delta + log(1 + F (e^{1/lam} - 1))],
  searched in s = log(eta) = -1/lam by golden section;
* the primal reduction: the payoff is an indicator, so the adversary only
  moves mass between {X <= b} and {X > b} and the answer is the smallest q
  with binary KL(q || F) <= delta.

``grid_max_min`` brute-forces the outer maximisation on a uniform bid grid
and is the verification oracle for the bisection solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .landscape import LognormalLandscape, cdf_array
from .solver import RobustnessRadii, ValueModel, inverse_kl_lower, radius_cap, worst_case_value

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
DUAL_TOL = 1e-10
_S_CAP = 1e4


@dataclass(frozen=True)
class WorstCaseWin:
    prob: float
    eta: float
    nominal: float


def _dual_objective(s: float, f_b: float, delta: float) -> float:
    return -(delta + math.log1p(f_b * math.expm1(-s))) / s


def _golden_max(fun, lo: float, hi: float, tol: float) -> float:
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = fun(c), fun(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = fun(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = fun(d)
    return c if fc >= fd else d


def dual_win_prob(f_b: float, delta_x: float) -> tuple[float, float]:
    """(worst-case win probability, optimal eta) for nominal win probability f_b."""
    if delta_x == 0.0:
        return f_b, 1.0
    if f_b <= 0.0 or delta_x >= radius_cap(f_b):
        return 0.0, math.inf
    if f_b >= 1.0:  # KL(q || 1) is infinite for q < 1
        return 1.0, 1.0

    def obj(s):
        return _dual_objective(s, f_b, delta_x)

    s_hi = 1.0
    while s_hi < _S_CAP and obj(2.0 * s_hi) > obj(s_hi):
        s_hi *= 2.0
    s_star = _golden_max(obj, 0.0, 2.0 * s_hi, DUAL_TOL)
    return max(obj(s_star), 0.0), math.exp(s_star)


def worst_case_win_prob(
    landscape: LognormalLandscape, b: float, delta_x: float
) -> WorstCaseWin:
    """Worst-case P(X <= b) over the landscape KL ball, via the dual."""
    if b < 0.0 or delta_x < 0.0:
        raise ValueError(f"need b >= 0 and delta_x >= 0, got {b}, {delta_x}")
    f_b = landscape.cdf(b)
    prob, eta = dual_win_prob(f_b, delta_x)
    return WorstCaseWin(prob=min(prob, f_b), eta=eta, nominal=f_b)


def worst_case_win_prob_kl(f_b: float, delta_x: float) -> float:
    """Primal route: smallest q <= f_b with binary KL(q || f_b) <= delta_x."""
    if f_b <= 0.0:
        return 0.0
    return inverse_kl_lower(delta_x, f_b)


def dual_win_prob_array(f_b, delta_x: float):
    """Vectorised ``dual_win_prob`` (probability only) over an array of F(b)."""
    f_b = np.asarray(f_b, dtype=float)
    if delta_x == 0.0:
        return f_b.copy()
    with np.errstate(divide="ignore"):
        feasible = (f_b > 0.0) & (f_b < 1.0) & (delta_x < -np.log1p(-f_b))
    f = np.where(feasible, f_b, 0.5)

    def obj(s):
        return -(delta_x + np.log1p(f * np.expm1(-s))) / s

    s_hi = np.ones_like(f)
    grow = np.ones(f.shape, dtype=bool)
    while grow.any():
        grow &= (s_hi < _S_CAP) & (obj(2.0 * s_hi) > obj(s_hi))
        s_hi = np.where(grow, 2.0 * s_hi, s_hi)

    lo = np.zeros_like(f)
    hi = 2.0 * s_hi
    n_iter = int(math.ceil(math.log(DUAL_TOL / hi.max()) / math.log(INV_PHI))) + 1
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = obj(c), obj(d)
    for _ in range(max(n_iter, 0)):
        left = fc >= fd
        lo, hi = np.where(left, lo, c), np.where(left, d, hi)
        c_new = np.where(left, hi - INV_PHI * (hi - lo), d)
        d_new = np.where(left, c, lo + INV_PHI * (hi - lo))
        moved = np.where(left, c_new, d_new)
        f_moved = obj(moved)
        fc, fd = np.where(left, f_moved, fd), np.where(left, fc, f_moved)
        c, d = c_new, d_new
    best = np.maximum(fc, fd)
    out = np.where(feasible, np.clip(best, 0.0, f_b), 0.0)
    return np.where(f_b >= 1.0, 1.0, out)


def grid_max_min(
    landscape: LognormalLandscape,
    vm: ValueModel,
    radii: RobustnessRadii,
    n_grid: int = 20_000,
) -> tuple[float, float]:
    """Brute-force (bid, worst-case surplus) over a uniform grid on [0, v_bar]."""
    if n_grid < 100:
        raise ValueError(f"n_grid must be at least 100, got {n_grid}")
    v_bar = worst_case_value(vm, radii.delta_v)
    if v_bar <= 0.0:
        return 0.0, 0.0
    grid = np.linspace(0.0, v_bar, n_grid)
    prob = dual_win_prob_array(cdf_array(landscape.mu, landscape.sigma, grid), radii.delta_x)
    objective = (v_bar - grid) * prob
    k = int(np.argmax(objective))
    return float(grid[k]), float(objective[k])
