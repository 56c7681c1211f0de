"""Offline evaluation: dataset I/O, synthetic logs, replay, spend equating, calibration."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np
from scipy import special as sps

from .batch import solve_bids
from .solver import RobustnessRadii

log = logging.getLogger(__name__)

FIELDS = (
    "line_id",
    "floor",
    "ceiling",
    "mu",
    "sigma",
    "click_prob",
    "click_reward",
    "value",
    "min_win_price",
)
VALUE_RTOL = 1e-9
SPEND_RTOL = 1e-3
SPEND_AIM = 1e-4  # equating target; wins are discrete so leave headroom under SPEND_RTOL
SCALE_BRACKET = (1e-3, 1e3)
DEFAULT_DELTA_X_GRID = tuple([0.0] + list(np.logspace(-4, 0, 25)))


class DatasetError(ValueError):
    pass


class SpendEquateError(RuntimeError):
    pass


@dataclass(frozen=True)
class BidRequest:
    line_id: str
    floor: float
    ceiling: float
    mu: float
    sigma: float
    click_prob: float
    click_reward: float
    value: float
    min_win_price: float

    def __post_init__(self):
        problems = self.problems()
        if problems:
            name, msg = problems[0]
            raise DatasetError(f"{name}: {msg}")

    def problems(self) -> list[tuple[str, str]]:
        out = []
        if not 0.0 <= self.floor <= self.ceiling:
            out.append(("floor", f"need 0 <= floor <= ceiling, got {self.floor}, {self.ceiling}"))
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            out.append(("sigma", f"must be positive, got {self.sigma}"))
        if not math.isfinite(self.mu):
            out.append(("mu", f"must be finite, got {self.mu}"))
        if not 0.0 < self.click_prob < 1.0:
            out.append(("click_prob", f"must lie in (0, 1), got {self.click_prob}"))
        if not self.click_reward > 0.0:
            out.append(("click_reward", f"must be positive, got {self.click_reward}"))
        v = self.click_prob * self.click_reward
        if not abs(self.value - v) <= VALUE_RTOL * abs(v):
            out.append(("value", f"{self.value} != click_prob * click_reward = {v}"))
        if not self.min_win_price > 0.0:
            out.append(("min_win_price", f"must be positive, got {self.min_win_price}"))
        return out


@dataclass
class RequestTable:
    """Column view of a list of requests, used by the vectorised paths."""

    line_id: np.ndarray
    floor: np.ndarray
    ceiling: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    click_prob: np.ndarray
    click_reward: np.ndarray
    value: np.ndarray
    min_win_price: np.ndarray

    def __len__(self) -> int:
        return len(self.mu)

    @classmethod
    def from_requests(cls, requests: Sequence[BidRequest]) -> "RequestTable":
        cols = {}
        for name in FIELDS:
            vals = [getattr(r, name) for r in requests]
            cols[name] = np.array(vals, dtype=object if name == "line_id" else float)
        cols["line_id"] = cols["line_id"].astype(str) if len(requests) else np.array([], dtype=str)
        return cls(**cols)

    def take(self, idx) -> "RequestTable":
        return RequestTable(**{f.name: getattr(self, f.name)[idx] for f in fields(self)})

    def to_requests(self) -> list[BidRequest]:
        return [
            BidRequest(str(self.line_id[i]), *(float(getattr(self, n)[i]) for n in FIELDS[1:]))
            for i in range(len(self))
        ]

    def lines(self) -> tuple[np.ndarray, np.ndarray]:
        """Sorted unique line ids and each request's index into them."""
        return np.unique(self.line_id, return_inverse=True)


Requests = Union[Sequence[BidRequest], RequestTable]
RadiiSpec = Union[RobustnessRadii, Mapping[str, RobustnessRadii]]


def as_table(requests: Requests) -> RequestTable:
    if isinstance(requests, RequestTable):
        return requests
    return RequestTable.from_requests(list(requests))


# ---------------------------------------------------------------------------
# I/O


def load_dataset(path) -> list[BidRequest]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in FIELDS if c not in header]
        if missing:
            raise DatasetError(f"{path}: missing column(s) {', '.join(missing)}")
        out = []
        for row_no, row in enumerate(reader, start=2):
            vals = {"line_id": row["line_id"]}
            for name in FIELDS[1:]:
                cell = row[name]
                try:
                    vals[name] = float(cell)
                except (TypeError, ValueError):
                    raise DatasetError(f"row {row_no}, field {name}: not a number: {cell!r}") from None
            try:
                out.append(BidRequest(**vals))
            except DatasetError as err:
                raise DatasetError(f"row {row_no}, field {err}") from None
    return out


def write_dataset(path, requests: Requests) -> None:
    table = as_table(requests)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIELDS)
        cols = [getattr(table, n) for n in FIELDS]
        for i in range(len(table)):
            w.writerow([str(cols[0][i])] + [repr(float(c[i])) for c in cols[1:]])


# ---------------------------------------------------------------------------
# synthetic logs


@dataclass
class SynthConfig:
    """Synthetic log generator settings.

    True landscapes and click probabilities are drawn per request; the stored
    ``mu``/``sigma``/``click_prob`` columns are noisy estimates of them, while
    ``min_win_price`` is sampled from the true landscape.
    """

    n_lines: int = 50
    requests_per_line: int = 2000
    line_mu_range: tuple[float, float] = (-1.0, 1.0)
    line_sigma_range: tuple[float, float] = (0.4, 0.9)
    request_mu_spread: float = 0.3
    line_click_prob_range: tuple[float, float] = (0.005, 0.05)
    request_click_logit_sd: float = 0.8
    # value / exp(line mu) for a request at the line's typical click prob
    value_to_price_range: tuple[float, float] = (0.5, 2.0)
    mu_noise: float = 0.3
    mu_bias: float = -0.1
    log_sigma_noise: float = 0.2
    log_sigma_bias: float = -0.2
    click_logit_noise: float = 0.3
    floor_fraction: float = 0.1
    ceiling_fraction: float = 10.0

    def validate(self) -> None:
        if self.n_lines < 1 or self.requests_per_line < 1:
            raise ValueError("need at least one line and one request per line")
        for name in ("line_mu_range", "line_sigma_range", "line_click_prob_range", "value_to_price_range"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"{name}: lower end exceeds upper end")
        if not self.line_sigma_range[0] > 0.0:
            raise ValueError("line_sigma_range must be positive")
        lo, hi = self.line_click_prob_range
        if not 0.0 < lo <= hi < 1.0:
            raise ValueError("line_click_prob_range must lie in (0, 1)")
        if not self.value_to_price_range[0] > 0.0:
            raise ValueError("value_to_price_range must be positive")
        for name in ("request_mu_spread", "request_click_logit_sd", "mu_noise", "log_sigma_noise", "click_logit_noise"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")
        if not 0.0 <= self.floor_fraction <= self.ceiling_fraction:
            raise ValueError("need 0 <= floor_fraction <= ceiling_fraction")

    @classmethod
    def from_dict(cls, d: Mapping) -> "SynthConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown SynthConfig keys: {sorted(unknown)}")
        kw = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
        return cls(**kw)


def generate_synthetic(config: SynthConfig, seed: int) -> RequestTable:
    config.validate()
    rng = np.random.default_rng(seed)
    n_l, n_r = config.n_lines, config.requests_per_line
    n = n_l * n_r

    line_mu = rng.uniform(*config.line_mu_range, n_l)
    line_sigma = rng.uniform(*config.line_sigma_range, n_l)
    line_p = np.exp(rng.uniform(*np.log(config.line_click_prob_range), n_l))
    line_reward = rng.uniform(*config.value_to_price_range, n_l) * np.exp(line_mu) / line_p

    li = np.repeat(np.arange(n_l), n_r)
    true_mu = line_mu[li] + config.request_mu_spread * rng.standard_normal(n)
    true_sigma = line_sigma[li] * np.exp(0.1 * rng.standard_normal(n))
    true_logit = sps.logit(line_p[li]) + config.request_click_logit_sd * rng.standard_normal(n)

    mu = true_mu + config.mu_bias + config.mu_noise * rng.standard_normal(n)
    sigma = true_sigma * np.exp(config.log_sigma_bias + config.log_sigma_noise * rng.standard_normal(n))
    click_prob = sps.expit(true_logit + config.click_logit_noise * rng.standard_normal(n))
    click_prob = np.clip(click_prob, 1e-12, 1.0 - 1e-12)
    x = np.exp(true_mu + true_sigma * rng.standard_normal(n))

    width = len(str(n_l - 1))
    ids = np.array([f"L{k:0{width}d}" for k in range(n_l)])
    reward = line_reward[li]
    price = np.exp(line_mu[li])
    return RequestTable(
        line_id=ids[li],
        floor=config.floor_fraction * price,
        ceiling=config.ceiling_fraction * price,
        mu=mu,
        sigma=sigma,
        click_prob=click_prob,
        click_reward=reward,
        value=click_prob * reward,
        min_win_price=x,
    )


def split(requests: Requests, train_fraction: float = 0.25, seed: int = 0):
    """Seeded request-level random split into (train, test)."""
    if not 0.0 <= train_fraction <= 1.0:
        raise ValueError(f"train_fraction must lie in [0, 1], got {train_fraction}")
    table = as_table(requests)
    n = len(table)
    perm = np.random.default_rng(seed).permutation(n)
    mask = np.zeros(n, dtype=bool)
    mask[perm[: int(round(train_fraction * n))]] = True
    return table.take(np.flatnonzero(mask)), table.take(np.flatnonzero(~mask))


# ---------------------------------------------------------------------------
# replay


@dataclass(frozen=True)
class LineResult:
    line_id: str
    spend: float
    value_collected: float
    wins: int
    r: Optional[float]  # None when nothing was won


def _radii_arrays(table: RequestTable, radii: RadiiSpec):
    if isinstance(radii, RobustnessRadii):
        return radii.delta_x, radii.delta_v
    dx = np.array([radii[l].delta_x if l in radii else 0.0 for l in table.line_id], dtype=float)
    dv = np.array([radii[l].delta_v if l in radii else 0.0 for l in table.line_id], dtype=float)
    return dx, dv


def compute_bids(table: RequestTable, radii: RadiiSpec, value_scale: float = 1.0, threads: int = 1):
    dx, dv = _radii_arrays(table, radii)
    bids, _ = solve_bids(
        table.mu,
        table.sigma,
        table.click_reward,
        table.click_prob,
        table.floor,
        table.ceiling,
        dx,
        dv,
        value_scale=value_scale,
        threads=threads,
    )
    return bids


def wins_of(table: RequestTable, bids: np.ndarray) -> np.ndarray:
    return (bids > 0.0) & (table.min_win_price <= bids)


def aggregate(table: RequestTable, bids: np.ndarray) -> list[LineResult]:
    won = wins_of(table, bids)
    ids, inv = table.lines()
    k = len(ids)
    spend = np.bincount(inv, weights=np.where(won, bids, 0.0), minlength=k)
    value = np.bincount(inv, weights=np.where(won, table.value, 0.0), minlength=k)
    n_wins = np.bincount(inv, weights=won.astype(float), minlength=k)
    return [
        LineResult(
            line_id=str(ids[j]),
            spend=float(spend[j]),
            value_collected=float(value[j]),
            wins=int(n_wins[j]),
            r=float(value[j] / spend[j]) if spend[j] > 0.0 else None,
        )
        for j in range(k)
    ]


def replay(
    requests: Requests,
    radii: RadiiSpec = RobustnessRadii(),
    value_scale: float = 1.0,
    threads: int = 1,
) -> list[LineResult]:
    """Per-line spend and collected (unscaled) value when bidding with ``radii``."""
    if not value_scale > 0.0:
        raise ValueError(f"value_scale must be positive, got {value_scale}")
    table = as_table(requests)
    return aggregate(table, compute_bids(table, radii, value_scale, threads))


def realized_spend(table: RequestTable, bids: np.ndarray) -> float:
    return float(np.sum(np.where(wins_of(table, bids), bids, 0.0)))


def spend_equate(
    requests: Requests,
    radii: RadiiSpec,
    target_spend: float,
    threads: int = 1,
    max_iter: int = 100,
) -> float:
    """Uniform value multiplier making realised spend match ``target_spend``."""
    if not target_spend > 0.0:
        raise ValueError(f"target_spend must be positive, got {target_spend}")
    table = as_table(requests)

    def gap(scale):
        return realized_spend(table, compute_bids(table, radii, scale, threads)) / target_spend - 1.0

    g1 = gap(1.0)
    if abs(g1) <= SPEND_AIM:
        return 1.0
    lo, hi = (SCALE_BRACKET[0], 1.0) if g1 > 0 else (1.0, SCALE_BRACKET[1])
    g_lo = gap(lo) if g1 > 0 else g1
    g_hi = g1 if g1 > 0 else gap(hi)
    if g_lo > SPEND_RTOL or g_hi < -SPEND_RTOL:
        lo_spend = (1 + g_lo) * target_spend
        hi_spend = (1 + g_hi) * target_spend
        raise SpendEquateError(
            f"target spend {target_spend:.6g} outside achievable range "
            f"[{lo_spend:.6g}, {hi_spend:.6g}] for scales {SCALE_BRACKET}"
        )
    best = min(((abs(g_lo), lo), (abs(g_hi), hi)))
    for _ in range(max_iter):
        mid = math.sqrt(lo * hi)
        g = gap(mid)
        best = min(best, (abs(g), mid))
        if abs(g) <= SPEND_AIM:
            return mid
        if g < 0:
            lo = mid
        else:
            hi = mid
        if hi / lo - 1.0 < 1e-12:
            break
    if best[0] > SPEND_RTOL:
        log.warning("spend equating stopped at relative gap %.3g", best[0])
    return best[1]


# ---------------------------------------------------------------------------
# calibration


def training_surplus(table: RequestTable, delta_x: float, threads: int = 1) -> float:
    bids = compute_bids(table, RobustnessRadii(delta_x, 0.0), threads=threads)
    won = wins_of(table, bids)
    return float(np.sum(np.where(won, table.value - bids, 0.0)))


def calibrate_delta_x(
    train_requests: Requests,
    delta_grid: Sequence[float] = DEFAULT_DELTA_X_GRID,
    refine: bool = True,
    threads: int = 1,
    trace: Optional[list] = None,
) -> float:
    """Grid value of delta_x maximising training surplus at delta_v = 0.

    Ties go to the smaller radius. With ``refine`` the winner is compared to
    the geometric midpoints towards its grid neighbours. Evaluated
    (delta_x, surplus) pairs are appended to ``trace`` if given.
    """
    grid = sorted(set(float(d) for d in delta_grid))
    if not grid or grid[0] < 0.0:
        raise ValueError("delta_grid must be nonempty and nonnegative")
    table = as_table(train_requests)
    seen: dict[float, float] = {}

    def surplus(d):
        if d not in seen:
            seen[d] = training_surplus(table, d, threads)
            if trace is not None:
                trace.append((d, seen[d]))
        return seen[d]

    def argmax(cands):
        best = max(surplus(d) for d in cands)
        return min(d for d in cands if surplus(d) == best)

    best = argmax(grid)
    if refine and len(grid) > 1:
        k = grid.index(best)
        cands = [best]
        for j in (k - 1, k + 1):
            if 0 <= j < len(grid):
                a, b = sorted((grid[j], best))
                cands.append(math.sqrt(a * b) if a > 0.0 else 0.5 * b)
        best = argmax(sorted(cands))
    return best


@dataclass(frozen=True)
class DeltaVCalibration:
    delta_v: float
    spend_gap: float  # relative gap of total bids against the baseline
    at_edge: bool  # True when the bracket edge could not cut spend enough


def total_bids(table: RequestTable, radii: RobustnessRadii, threads: int = 1) -> float:
    return float(np.sum(compute_bids(table, radii, threads=threads)))


def calibrate_delta_v(
    train_requests: Requests,
    delta_x: float,
    threads: int = 1,
    max_iter: int = 200,
    trace: Optional[list] = None,
) -> DeltaVCalibration:
    """delta_v equating the sum of all bids with the baseline's on the training set."""
    table = as_table(train_requests)
    target = total_bids(table, RobustnessRadii(), threads)
    if not target > 0.0:
        raise ValueError("baseline places no bids on the training set")
    if delta_x == 0.0:
        return DeltaVCalibration(0.0, 0.0, False)

    def gap(dv):
        g = total_bids(table, RobustnessRadii(delta_x, dv), threads) / target - 1.0
        if trace is not None:
            trace.append((dv, g))
        return g

    g0 = gap(0.0)
    if g0 <= SPEND_RTOL:
        return DeltaVCalibration(0.0, g0, False)
    edge = -math.log1p(-float(np.min(table.click_prob)))
    edge = edge * (1.0 - 1e-9)
    g_edge = gap(edge)
    if g_edge > SPEND_RTOL:
        log.warning("delta_v bracket edge %.3g leaves spend gap %.3g", edge, g_edge)
        return DeltaVCalibration(edge, g_edge, True)

    lo, hi = 0.0, edge
    best = (abs(g_edge), edge, g_edge)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        g = gap(mid)
        best = min(best, (abs(g), mid, g))
        if abs(g) <= SPEND_RTOL:
            break
        if g > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * edge:
            break
    return DeltaVCalibration(best[1], best[2], False)


@dataclass
class Calibration:
    mode: str
    radii: RadiiSpec
    surplus_curve: list = field(default_factory=list)
    spend_curve: list = field(default_factory=list)
    at_edge: bool = False

    def to_json(self) -> dict:
        if isinstance(self.radii, RobustnessRadii):
            radii = asdict(self.radii)
        else:
            radii = {k: asdict(v) for k, v in sorted(self.radii.items())}
        return {"mode": self.mode, "radii": radii, "at_edge": self.at_edge}

    @staticmethod
    def radii_from_json(d: Mapping) -> RadiiSpec:
        if d["mode"] == "universal":
            return RobustnessRadii(**d["radii"])
        return {k: RobustnessRadii(**v) for k, v in d["radii"].items()}


def calibrate(
    train_requests: Requests,
    mode: str = "universal",
    delta_grid: Sequence[float] = DEFAULT_DELTA_X_GRID,
    threads: int = 1,
) -> Calibration:
    """Choose delta_x by training surplus, then delta_v by spend matching."""
    table = as_table(train_requests)
    if mode == "universal":
        sc, vc = [], []
        dx = calibrate_delta_x(table, delta_grid, threads=threads, trace=sc)
        dv = calibrate_delta_v(table, dx, threads=threads, trace=vc)
        return Calibration(mode, RobustnessRadii(dx, dv.delta_v), sorted(sc), sorted(vc), dv.at_edge)
    if mode != "per_line":
        raise ValueError(f"unknown mode {mode!r}")

    ids, inv = table.lines()
    radii: dict[str, RobustnessRadii] = {}
    at_edge = False
    for j, lid in enumerate(ids):
        sub = table.take(np.flatnonzero(inv == j))
        dx = calibrate_delta_x(sub, delta_grid, threads=threads)
        dv = calibrate_delta_v(sub, dx, threads=threads) if dx > 0 else DeltaVCalibration(0.0, 0.0, False)
        pair = RobustnessRadii(dx, dv.delta_v)
        # drop lines that do not improve on the training set
        base = aggregate(sub, compute_bids(sub, RobustnessRadii(), threads=threads))[0]
        robust = aggregate(sub, compute_bids(sub, pair, threads=threads))[0]
        gain = delta_r(robust.r, base.r)
        if gain is None or gain <= 0.0:
            pair = RobustnessRadii()
        else:
            at_edge |= dv.at_edge
        radii[str(lid)] = pair
    return Calibration(mode, radii, at_edge=at_edge)


# ---------------------------------------------------------------------------
# comparison


def delta_r(r_drbs: Optional[float], r_base: Optional[float]) -> Optional[float]:
    """Percentage improvement of R, or None when either side won nothing."""
    if r_drbs is None or r_base is None:
        return None
    return (r_drbs / r_base - 1.0) * 100.0


@dataclass(frozen=True)
class LineComparison:
    line_id: str
    drbs: LineResult
    baseline: LineResult
    delta_r: Optional[float]
    spend_weight: float


@dataclass(frozen=True)
class ExchangeStats:
    """Wins only one policy gets; avg v/b uses that policy's winning bid."""

    n_lost: int
    avg_vb_lost: Optional[float]
    n_gained: int
    avg_vb_gained: Optional[float]


@dataclass
class ReplayReport:
    per_line: list[LineComparison]
    delta_r_weighted: float
    spend_scale: float
    spend_gap: float
    exchange: ExchangeStats
    mode: str
    radii: dict
    outcomes: dict = field(repr=False, default_factory=dict)

    def summary(self) -> dict:
        return {
            "mode": self.mode,
            "radii": self.radii,
            "delta_r_weighted_pct": self.delta_r_weighted,
            "spend_scale": self.spend_scale,
            "spend_gap": self.spend_gap,
            "spend_baseline": sum(c.baseline.spend for c in self.per_line),
            "spend_drbs": sum(c.drbs.spend for c in self.per_line),
            "exchange": asdict(self.exchange),
            "n_lines": len(self.per_line),
        }


def exchange_stats(value, bids_base, bids_drbs, won_base, won_drbs) -> ExchangeStats:
    lost = won_base & ~won_drbs
    gained = won_drbs & ~won_base

    def avg(mask, bids):
        return float(np.mean(value[mask] / bids[mask])) if mask.any() else None

    return ExchangeStats(
        n_lost=int(lost.sum()),
        avg_vb_lost=avg(lost, bids_base),
        n_gained=int(gained.sum()),
        avg_vb_gained=avg(gained, bids_drbs),
    )


def compare(
    test_requests: Requests,
    radii: RadiiSpec,
    mode: str = "universal",
    threads: int = 1,
) -> ReplayReport:
    """Baseline vs spend-equated robust policy on the test requests."""
    if mode == "universal" and not isinstance(radii, RobustnessRadii):
        raise ValueError("universal mode takes a single RobustnessRadii")
    if mode == "per_line" and isinstance(radii, RobustnessRadii):
        raise ValueError("per_line mode takes a mapping line_id -> RobustnessRadii")
    if mode not in ("universal", "per_line"):
        raise ValueError(f"unknown mode {mode!r}")
    table = as_table(test_requests)

    bids_base = compute_bids(table, RobustnessRadii(), threads=threads)
    target = realized_spend(table, bids_base)
    scale = spend_equate(table, radii, target, threads) if target > 0.0 else 1.0
    bids_drbs = compute_bids(table, radii, scale, threads)

    base_lines = aggregate(table, bids_base)
    drbs_lines = aggregate(table, bids_drbs)
    per_line = []
    for b, d in zip(base_lines, drbs_lines):
        dr = delta_r(d.r, b.r)
        weight = 0.5 * (b.spend + d.spend) if dr is not None else 0.0
        per_line.append(LineComparison(b.line_id, d, b, dr, weight))
    total_w = sum(c.spend_weight for c in per_line)
    weighted = sum(c.spend_weight * c.delta_r for c in per_line if c.delta_r is not None)
    weighted = weighted / total_w if total_w > 0 else 0.0

    spend_d = realized_spend(table, bids_drbs)
    won_b, won_d = wins_of(table, bids_base), wins_of(table, bids_drbs)
    if isinstance(radii, RobustnessRadii):
        radii_json = asdict(radii)
    else:
        radii_json = {k: asdict(v) for k, v in sorted(radii.items())}
    return ReplayReport(
        per_line=per_line,
        delta_r_weighted=weighted,
        spend_scale=scale,
        spend_gap=(spend_d / target - 1.0) if target > 0 else 0.0,
        exchange=exchange_stats(table.value, bids_base, bids_drbs, won_b, won_d),
        mode=mode,
        radii=radii_json,
        outcomes={
            "line_id": table.line_id,
            "value": table.value,
            "min_win_price": table.min_win_price,
            "bid_baseline": bids_base,
            "bid_drbs": bids_drbs,
            "won_baseline": won_b,
            "won_drbs": won_d,
        },
    )


# ---------------------------------------------------------------------------
# report files

REPORT_COLUMNS = ("line_id", "spend_weight", "R_baseline", "R_drbs", "delta_r_pct")


def _fmt(x):
    return "" if x is None else repr(float(x))


def write_report(report: ReplayReport, out_dir) -> dict[str, Path]:
    """Per-line CSV, summary JSON and (v, b, winner) scatter CSV."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": out / "report.csv",
        "summary": out / "summary.json",
        "scatter": out / "scatter.csv",
    }
    total = sum(c.spend_weight for c in report.per_line) or 1.0
    with open(paths["report"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for c in report.per_line:
            w.writerow([c.line_id, _fmt(c.spend_weight / total), _fmt(c.baseline.r), _fmt(c.drbs.r), _fmt(c.delta_r)])
    with open(paths["summary"], "w", encoding="utf-8") as fh:
        json.dump(report.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_scatter(report.outcomes, paths["scatter"])
    return paths


def write_scatter(outcomes: Mapping, path) -> None:
    """Wins of either policy as (line_id, v, b, winner); b is the winner's bid."""
    won_b, won_d = outcomes["won_baseline"], outcomes["won_drbs"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("line_id", "v", "b", "winner"))
        for i in np.flatnonzero(won_b | won_d):
            if won_b[i] and won_d[i]:
                winner, b = "both", outcomes["bid_drbs"][i]
            elif won_d[i]:
                winner, b = "drbs", outcomes["bid_drbs"][i]
            else:
                winner, b = "baseline", outcomes["bid_baseline"][i]
            w.writerow((outcomes["line_id"][i], repr(float(outcomes["value"][i])), repr(float(b)), winner))


def read_report(path) -> list[dict]:
    """Parse ``report.csv`` back into dicts (empty cells become None)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: (v if k == "line_id" else (float(v) if v != "" else None)) for k, v in r.items()} for r in rows]
