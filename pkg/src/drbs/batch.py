"""Vectorised bid solver for replay and calibration.

Mirrors ``solver.drbs_bid`` element-wise (same brackets, stopping rules and
no-bid rules) but evaluates a whole table of requests per bisection step.
Work is split into fixed-size chunks so results are bit-identical for any
thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .landscape import cdf_array, surplus_ratio_array
from .solver import BID_RTOL, MAX_BISECT, P_RTOL
from .special import h_inv_minus_one_array

CHUNK = 4096


def kl_bernoulli_array(p, p_ref):
    p, p_ref = np.asarray(p, dtype=float), np.asarray(p_ref, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        near = p > 0.5 * p_ref
        head = np.where(near, p * np.log1p((p - p_ref) / p_ref), p * (np.log(p) - np.log(p_ref)))
        head = np.where(p > 0.0, head, 0.0)
        tail = np.where(p < 1.0, (1.0 - p) * np.log1p((p_ref - p) / (1.0 - p_ref)), 0.0)
    return np.maximum(head + tail, 0.0)


def inverse_kl_lower_array(delta, p_ref):
    delta = np.broadcast_to(np.asarray(delta, dtype=float), np.shape(p_ref))
    p_ref = np.asarray(p_ref, dtype=float)
    r0 = -np.log1p(-p_ref)
    lo = np.zeros_like(p_ref)
    hi = p_ref.copy()
    active = (delta > 0.0) & (delta < r0)
    active &= hi - lo > P_RTOL * p_ref
    while active.any():
        mid = 0.5 * (lo + hi)
        above = kl_bernoulli_array(mid, p_ref) > delta
        lo = np.where(active & above, mid, lo)
        hi = np.where(active & ~above, mid, hi)
        active &= hi - lo > P_RTOL * p_ref
    out = 0.5 * (lo + hi)
    out = np.where(delta <= 0.0, p_ref, out)
    return np.where(delta >= r0, 0.0, out)


def g_array(mu, sigma, v_bar, b):
    """Vectorised g(b), zero where L(b) < 1."""
    ratio = surplus_ratio_array(mu, sigma, v_bar, b)
    ok = ratio >= 1.0
    x = h_inv_minus_one_array(np.where(ok, ratio, 1.0))
    f_b = cdf_array(mu, sigma, b)
    s = 1.0 - f_b
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        log_eta = np.log1p(x)
        g = log_eta - np.log1p(x * s) - f_b * log_eta / (1.0 + x * s)
        g = np.where(np.isinf(x), -np.log1p(-f_b), g)
    return np.where(ok, g, 0.0)


def _solve_chunk(mu, sigma, reward, prob, floor, ceiling, dx, dv):
    v_bar = np.where(dv == 0.0, reward * prob, reward * inverse_kl_lower_array(dv, prob))
    f_vbar = cdf_array(mu, sigma, np.maximum(v_bar, 0.0))
    with np.errstate(divide="ignore"):
        bidding = (v_bar > 0.0) & (v_bar > floor) & (dx < -np.log1p(-f_vbar))

    lo = np.zeros_like(v_bar)
    hi = np.where(bidding, v_bar, 0.0)
    active = bidding & (hi - lo > BID_RTOL * v_bar)
    for _ in range(MAX_BISECT):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        mid = 0.5 * (lo[idx] + hi[idx])
        ratio = surplus_ratio_array(mu[idx], sigma[idx], v_bar[idx], mid)
        right = ratio < 1.0
        robust = dx[idx] > 0.0
        if robust.any():
            g = g_array(mu[idx], sigma[idx], v_bar[idx], mid)
            right = np.where(robust, g < dx[idx], right)
        lo[idx] = np.where(right, mid, lo[idx])
        hi[idx] = np.where(right, hi[idx], mid)
        active[idx] = hi[idx] - lo[idx] > BID_RTOL * v_bar[idx]
    b = 0.5 * (lo + hi)
    bid = np.where(bidding, np.clip(b, floor, ceiling), 0.0)
    return bid, v_bar


def solve_bids(
    mu,
    sigma,
    click_reward,
    click_prob,
    floor,
    ceiling,
    delta_x=0.0,
    delta_v=0.0,
    value_scale: float = 1.0,
    threads: int = 1,
):
    """Robust bids for a table of requests; returns (bids, v_bars).

    ``delta_x``/``delta_v`` may be scalars or per-request arrays.
    ``value_scale`` multiplies every click reward (uniform value change).
    """
    mu = np.asarray(mu, dtype=float)
    n = mu.shape[0]
    cols = [
        mu,
        np.asarray(sigma, dtype=float),
        np.asarray(click_reward, dtype=float) * value_scale,
        np.asarray(click_prob, dtype=float),
        np.asarray(floor, dtype=float),
        np.asarray(ceiling, dtype=float),
        np.broadcast_to(np.asarray(delta_x, dtype=float), (n,)),
        np.broadcast_to(np.asarray(delta_v, dtype=float), (n,)),
    ]
    bids = np.empty(n)
    v_bars = np.empty(n)
    starts = range(0, n, CHUNK)

    def run(start):
        sl = slice(start, min(start + CHUNK, n))
        bids[sl], v_bars[sl] = _solve_chunk(*(c[sl] for c in cols))

    if threads > 1 and n > CHUNK:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, starts))
    else:
        for s in starts:
            run(s)
    return bids, v_bars
