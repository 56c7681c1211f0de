"""Baseline and distributionally robust bid shading for one bid request.

The robust bid maximises (v_bar - b) * min_Q P_Q(X <= b): the value adversary
collapses to the worst-case value v_bar, and the landscape adversary's effect
is captured by g(b), which is increasing on the bracket where L(b) >= 1. The
bid is the root of g(b) = delta_x, found by bisection on [0, v_bar] with g
taken as 0 wherever L(b) < 1.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

from .landscape import LognormalLandscape
from .special import h_inv_minus_one

BID_RTOL = 1e-9
MAX_BISECT = 200
P_RTOL = 1e-14

CLAMP_NONE = "none"
CLAMP_FLOOR = "floor"
CLAMP_CEILING = "ceiling"

REASON_OK = "ok"
REASON_ZERO_VALUE = "worst-case value zero"
REASON_BELOW_FLOOR = "worst-case value below floor"
REASON_RADIUS_TOO_LARGE = "landscape radius too large"


@dataclass(frozen=True)
class ValueModel:
    """Scaled-Bernoulli value: a click pays ``click_reward`` w.p. ``click_prob``."""

    click_reward: float
    click_prob: float
    value: Optional[float] = None

    def __post_init__(self):
        if not self.click_reward > 0.0:
            raise ValueError(f"click_reward must be positive, got {self.click_reward}")
        if not 0.0 < self.click_prob < 1.0:
            raise ValueError(f"click_prob must lie in (0, 1), got {self.click_prob}")
        v = self.click_reward * self.click_prob
        if self.value is None:
            object.__setattr__(self, "value", v)
        elif abs(self.value - v) > 1e-12 * v:
            raise ValueError(f"value {self.value} != click_reward * click_prob = {v}")


@dataclass(frozen=True)
class RobustnessRadii:
    delta_x: float = 0.0
    delta_v: float = 0.0

    def __post_init__(self):
        if not (self.delta_x >= 0.0 and self.delta_v >= 0.0):
            raise ValueError(f"radii must be nonnegative, got {self}")

    @property
    def is_baseline(self) -> bool:
        return self.delta_x == 0.0 and self.delta_v == 0.0


@dataclass(frozen=True)
class BidDecision:
    bid: float
    v_bar: float
    eta_star: Optional[float]
    assumption1_ok: bool
    assumption3_ok: bool
    clamped: str = CLAMP_NONE
    iterations: int = 0
    unclamped_bid: float = 0.0
    reason: str = REASON_OK

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "BidDecision":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


def radius_cap(f: float) -> float:
    """-log(1 - f): the KL radius at which a win probability f can be driven to 0."""
    return math.inf if f >= 1.0 else -math.log1p(-f)


def kl_bernoulli(p: float, p_ref: float) -> float:
    """KL divergence between Bernoulli(p) and Bernoulli(p_ref), in nats."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if not 0.0 <= p_ref < 1.0:
        raise ValueError(f"p_ref must lie in [0, 1), got {p_ref}")
    if p_ref == 0.0:
        return 0.0 if p == 0.0 else math.inf
    if p == 0.0:
        head = 0.0
    elif p > 0.5 * p_ref:
        head = p * math.log1p((p - p_ref) / p_ref)
    else:
        head = p * (math.log(p) - math.log(p_ref))
    tail = (1.0 - p) * math.log1p((p_ref - p) / (1.0 - p_ref)) if p < 1.0 else 0.0
    return max(head + tail, 0.0)  # rounding can dip below zero at p ~ p_ref


def inverse_kl_lower(delta: float, p_ref: float) -> float:
    """Smallest p in [0, p_ref] with kl_bernoulli(p, p_ref) <= delta."""
    if delta <= 0.0:
        return p_ref
    if delta >= -math.log1p(-p_ref):
        return 0.0
    lo, hi = 0.0, p_ref
    while hi - lo > P_RTOL * p_ref:
        mid = 0.5 * (lo + hi)
        if kl_bernoulli(mid, p_ref) > delta:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def worst_case_value(vm: ValueModel, delta_v: float) -> float:
    """Smallest expected value over the KL ball of radius delta_v around the click model."""
    if delta_v == 0.0:
        return vm.value
    return vm.click_reward * inverse_kl_lower(delta_v, vm.click_prob)


def _clamp(b: float, floor: float, ceiling: float) -> tuple[float, str]:
    if b < floor:
        return floor, CLAMP_FLOOR
    if b > ceiling:
        return ceiling, CLAMP_CEILING
    return b, CLAMP_NONE


def _bisect(landscape: LognormalLandscape, v_bar: float, delta_x: float):
    """Root of g(b) = delta_x (or L(b) = 1 when delta_x == 0) on [0, v_bar]."""
    lo, hi = 0.0, v_bar
    it = 0
    while hi - lo > BID_RTOL * v_bar and it < MAX_BISECT:
        mid = 0.5 * (lo + hi)
        if delta_x == 0.0:
            right = landscape.surplus_ratio(v_bar, mid) < 1.0
        else:
            right = drbs_g(landscape, v_bar, mid) < delta_x
        if right:
            lo = mid
        else:
            hi = mid
        it += 1
    return 0.5 * (lo + hi), it


def baseline_bid(
    landscape: LognormalLandscape,
    value: float,
    floor: float = 0.0,
    ceiling: float = math.inf,
) -> BidDecision:
    """Maximiser of (value - b) F(b), clamped to [floor, ceiling]."""
    if value <= 0.0 or value <= floor:
        reason = REASON_ZERO_VALUE if value <= 0.0 else REASON_BELOW_FLOOR
        return BidDecision(0.0, max(value, 0.0), None, True, True, reason=reason)
    b, it = _bisect(landscape, value, 0.0)
    bid, clamp = _clamp(b, floor, ceiling)
    f_v = landscape.cdf(value)
    return BidDecision(
        bid=bid,
        v_bar=value,
        eta_star=1.0,
        assumption1_ok=f_v > 0.0,
        assumption3_ok=f_v < 0.5,
        clamped=clamp,
        iterations=it,
        unclamped_bid=b,
    )


def drbs_g(landscape: LognormalLandscape, v_bar: float, b: float) -> float:
    """g(b); zero to the left of the baseline point where L(b) < 1."""
    ratio = landscape.surplus_ratio(v_bar, b)
    if ratio < 1.0:
        return 0.0
    f_b = landscape.cdf(b)
    x, _ = h_inv_minus_one(ratio)  # eta - 1
    if math.isinf(x):
        return radius_cap(f_b)
    s = 1.0 - f_b
    log_eta = math.log1p(x)
    return log_eta - math.log1p(x * s) - f_b * log_eta / (1.0 + x * s)


def drbs_bid(
    landscape: LognormalLandscape,
    vm: ValueModel,
    radii: RobustnessRadii,
    floor: float = 0.0,
    ceiling: float = math.inf,
) -> BidDecision:
    v_bar = worst_case_value(vm, radii.delta_v)
    if v_bar <= 0.0:
        return BidDecision(0.0, 0.0, None, False, True, reason=REASON_ZERO_VALUE)
    f_vbar = landscape.cdf(v_bar)
    a3 = f_vbar < 0.5
    if v_bar <= floor:
        return BidDecision(0.0, v_bar, None, True, a3, reason=REASON_BELOW_FLOOR)
    if not radii.delta_x < radius_cap(f_vbar):
        return BidDecision(0.0, v_bar, None, False, a3, reason=REASON_RADIUS_TOO_LARGE)

    b, it = _bisect(landscape, v_bar, radii.delta_x)
    x, _ = h_inv_minus_one(max(landscape.surplus_ratio(v_bar, b), 1.0))
    bid, clamp = _clamp(b, floor, ceiling)
    return BidDecision(
        bid=bid,
        v_bar=v_bar,
        eta_star=1.0 + x,
        assumption1_ok=True,
        assumption3_ok=a3,
        clamped=clamp,
        iterations=it,
        unclamped_bid=b,
    )
