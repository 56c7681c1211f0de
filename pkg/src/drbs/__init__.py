"""Distributionally robust bid shading for first-price auctions."""

__version__ = "0.1.0"

from .landscape import LognormalLandscape
from .solver import (
    BidDecision,
    RobustnessRadii,
    ValueModel,
    baseline_bid,
    drbs_bid,
    drbs_g,
    kl_bernoulli,
    worst_case_value,
)
from .special import HInvResult, h, h_inv, lambert_w_m1
from .adversary import WorstCaseWin, grid_max_min, worst_case_win_prob, worst_case_win_prob_kl

__all__ = [
    "BidDecision",
    "HInvResult",
    "LognormalLandscape",
    "RobustnessRadii",
    "ValueModel",
    "WorstCaseWin",
    "baseline_bid",
    "drbs_bid",
    "drbs_g",
    "grid_max_min",
    "h",
    "h_inv",
    "kl_bernoulli",
    "lambert_w_m1",
    "worst_case_value",
    "worst_case_win_prob",
    "worst_case_win_prob_kl",
]
