import dataclasses
import math

import numpy as np
import pytest
from scipy import stats

from drbs import LognormalLandscape, RobustnessRadii, ValueModel, drbs_bid
from drbs.experiment import (
    FIELDS,
    BidRequest,
    Calibration,
    DatasetError,
    RequestTable,
    SpendEquateError,
    SynthConfig,
    aggregate,
    as_table,
    calibrate,
    calibrate_delta_v,
    calibrate_delta_x,
    compare,
    compute_bids,
    load_dataset,
    realized_spend,
    replay,
    spend_equate,
    split,
    total_bids,
    training_surplus,
    write_dataset,
    write_report,
    read_report,
)

HEADER = ",".join(FIELDS)
ROW = "L0,0.1,10,0.0,0.5,0.5,4.0,2.0,1.3"
CLEAN = dict(mu_noise=0.0, mu_bias=0.0, log_sigma_noise=0.0, log_sigma_bias=0.0, click_logit_noise=0.0)


@pytest.fixture(scope="module")
def small():
    return generate(SynthConfig(n_lines=4, requests_per_line=500), seed=3)


def generate(config, seed):
    from drbs.experiment import generate_synthetic

    return generate_synthetic(config, seed)


def req(value_reward, prob, x, line="L0", floor=0.0, ceiling=100.0, mu=0.0, sigma=0.5):
    return BidRequest(line, floor, ceiling, mu, sigma, prob, value_reward, prob * value_reward, x)


# --- loading -----------------------------------------------------------------


def test_header_only_file(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text(HEADER + "\n")
    assert load_dataset(p) == []


def test_bad_value_names_field_and_row(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text(HEADER + "\n" + ROW + "\n" + ROW.replace(",2.0,", ",2.5,") + "\n")
    with pytest.raises(DatasetError, match=r"row 3.*value"):
        load_dataset(p)


def test_missing_column(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text(HEADER.replace(",sigma", "") + "\n")
    with pytest.raises(DatasetError, match="sigma"):
        load_dataset(p)


def test_non_numeric_cell(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text(HEADER + "\n" + ROW.replace("0.5,0.5", "abc,0.5") + "\n")
    with pytest.raises(DatasetError, match=r"row 2, field sigma"):
        load_dataset(p)


@pytest.mark.parametrize("bad", ["L0,5,1,0,0.5,0.5,4,2,1", "L0,0,1,0,-0.5,0.5,4,2,1", "L0,0,1,0,0.5,0.5,4,2,0"])
def test_invariant_violations(tmp_path, bad):
    p = tmp_path / "a.csv"
    p.write_text(HEADER + "\n" + bad + "\n")
    with pytest.raises(DatasetError, match="row 2"):
        load_dataset(p)


def test_round_trip(tmp_path):
    rows = [req(4.0, 0.5, 1.3), req(1 / 3, 0.1 + 1e-12, 0.7, line="L1")]
    p = tmp_path / "a.csv"
    write_dataset(p, rows)
    assert load_dataset(p) == rows


# --- synthetic -----------------------------------------------------------------


def test_zero_noise_stores_truth():
    cfg = SynthConfig(n_lines=3, requests_per_line=50, **CLEAN)
    noisy = SynthConfig(n_lines=3, requests_per_line=50)
    a, b = generate(cfg, 1), generate(noisy, 1)
    # the same seed draws the same truth; the noisy run adds estimation error on top
    assert np.array_equal(a.min_win_price, b.min_win_price)
    assert not np.allclose(a.mu, b.mu)
    z = (np.log(a.min_win_price) - a.mu) / a.sigma
    assert abs(np.mean(z)) < 0.2 and abs(np.std(z) - 1) < 0.15


def test_same_seed_identical_bytes(tmp_path):
    cfg = SynthConfig(n_lines=3, requests_per_line=40)
    write_dataset(tmp_path / "a.csv", generate(cfg, 9))
    write_dataset(tmp_path / "b.csv", generate(cfg, 9))
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    write_dataset(tmp_path / "c.csv", generate(cfg, 10))
    assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "c.csv").read_bytes()


def test_min_win_price_follows_true_landscape():
    t = generate(SynthConfig(n_lines=2, requests_per_line=10_000, **CLEAN), 4)
    ids, inv = t.lines()
    for j in range(len(ids)):
        m = inv == j
        u = stats.norm.cdf((np.log(t.min_win_price[m]) - t.mu[m]) / t.sigma[m])
        assert stats.kstest(u, "uniform").statistic < 0.02


def test_rows_satisfy_invariants():
    t = generate(SynthConfig(n_lines=3, requests_per_line=100), 2)
    reqs = t.to_requests()
    assert all(not r.problems() for r in reqs)
    assert len({r.line_id for r in reqs}) == 3


@pytest.mark.parametrize(
    "kw", [dict(n_lines=0), dict(line_sigma_range=(0.0, 1.0)), dict(mu_noise=-1.0), dict(line_click_prob_range=(0.1, 1.0))]
)
def test_invalid_config(kw):
    with pytest.raises(ValueError):
        generate(SynthConfig(**kw), 0)


def test_config_from_dict():
    cfg = SynthConfig.from_dict({"n_lines": 2, "line_mu_range": [0, 1]})
    assert cfg.line_mu_range == (0, 1)
    with pytest.raises(ValueError):
        SynthConfig.from_dict({"n_line": 2})


def test_split_partitions(small):
    train, test = split(small, 0.25, seed=1)
    assert len(train) == 500 and len(test) == 1500
    both = np.sort(np.concatenate([train.min_win_price, test.min_win_price]))
    assert np.array_equal(both, np.sort(small.min_win_price))


# --- replay ----------------------------------------------------------------------


def test_hand_example():
    t = as_table([req(4.0, 0.5, 0.5), req(6.0, 0.5, 2.5)])  # v = (2, 3)
    (line,) = aggregate(t, np.array([1.0, 2.0]))
    assert (line.spend, line.value_collected, line.wins, line.r) == (1.0, 2.0, 1, 2.0)


def test_all_lose():
    t = as_table([req(4.0, 0.5, 5.0), req(6.0, 0.5, 5.0)])
    (line,) = aggregate(t, np.array([1.0, 2.0]))
    assert line.spend == 0.0 and line.wins == 0 and line.r is None


def test_matches_scalar_reference(small):
    radii = RobustnessRadii(0.05, 1e-4)
    for scale in (1.0, 1.7):
        got = {l.line_id: l for l in replay(small, radii, value_scale=scale)}
        spend, value = {}, {}
        for r in small.to_requests():
            vm = ValueModel(r.click_reward * scale, r.click_prob)
            b = drbs_bid(LognormalLandscape(r.mu, r.sigma), vm, radii, r.floor, r.ceiling).bid
            win = b > 0 and r.min_win_price <= b
            spend[r.line_id] = spend.get(r.line_id, 0.0) + (b if win else 0.0)
            value[r.line_id] = value.get(r.line_id, 0.0) + (r.value if win else 0.0)
        for lid in spend:
            assert got[lid].spend == pytest.approx(spend[lid], rel=1e-10)
            assert got[lid].value_collected == pytest.approx(value[lid], rel=1e-10)


def test_accounting_identity(small):
    for line in replay(small, RobustnessRadii(0.02, 0.0)):
        if line.spend > 0:
            assert abs(line.value_collected / line.spend - line.r) <= 1e-12 * line.r


def test_replay_rejects_bad_scale(small):
    with pytest.raises(ValueError):
        replay(small, value_scale=0.0)


def test_thread_count_does_not_change_bids():
    t = generate(SynthConfig(n_lines=5, requests_per_line=2000), 5)
    radii = RobustnessRadii(0.03, 1e-5)
    assert np.array_equal(compute_bids(t, radii, threads=1), compute_bids(t, radii, threads=4))


# --- spend equating -----------------------------------------------------------------


def test_spend_equate_fixed_point(small):
    radii = RobustnessRadii(0.05, 0.0)
    own = realized_spend(small, compute_bids(small, radii))
    assert spend_equate(small, radii, own) == 1.0


def test_doubling_values_weakly_raises_spend(small):
    radii = RobustnessRadii(0.05, 1e-4)
    s1 = realized_spend(small, compute_bids(small, radii, 1.0))
    s2 = realized_spend(small, compute_bids(small, radii, 2.0))
    assert s2 >= s1


def test_spend_equate_hits_target(small):
    radii = RobustnessRadii(0.05, 0.0)
    target = realized_spend(small, compute_bids(small, RobustnessRadii()))
    scale = spend_equate(small, radii, target)
    got = realized_spend(small, compute_bids(small, radii, scale))
    assert abs(got / target - 1) <= 1e-3
    assert scale < 1.0


def test_spend_equate_unreachable(small):
    with pytest.raises(SpendEquateError, match="achievable"):
        spend_equate(small, RobustnessRadii(), 1e12)
    with pytest.raises(ValueError):
        spend_equate(small, RobustnessRadii(), 0.0)


# --- calibration ---------------------------------------------------------------------


def test_grid_zero_gives_zero(small):
    assert calibrate_delta_x(small, [0.0]) == 0.0


def test_delta_x_is_argmax(small):
    grid = [0.0, 1e-3, 1e-2, 0.05, 0.2, 1.0]
    trace = []
    best = calibrate_delta_x(small, grid, refine=False, trace=trace)
    curve = dict(trace)
    assert set(curve) == set(grid)
    assert all(curve[best] >= s for s in curve.values())
    assert all(curve[d] < curve[best] for d in grid if d < best)


def test_refinement_never_worse(small):
    grid = [0.0, 1e-3, 1e-2, 0.05, 0.2, 1.0]
    coarse = calibrate_delta_x(small, grid, refine=False)
    fine = calibrate_delta_x(small, grid, refine=True)
    assert training_surplus(small, fine) >= training_surplus(small, coarse)


def test_delta_v_zero_for_zero_delta_x(small):
    assert calibrate_delta_v(small, 0.0).delta_v == 0.0


def test_delta_v_matches_spend(small):
    trace = []
    res = calibrate_delta_v(small, 0.05, trace=trace)
    assert not res.at_edge and res.delta_v > 0
    base = total_bids(small, RobustnessRadii())
    got = total_bids(small, RobustnessRadii(0.05, res.delta_v))
    assert abs(got / base - 1) <= 1e-3
    # robust landscape raises total bids; the value radius brings them back down
    assert total_bids(small, RobustnessRadii(0.05, 0.0)) >= base
    gaps = [g for _, g in sorted(trace)]
    assert all(b <= a + 1e-15 for a, b in zip(gaps, gaps[1:]))


def test_calibration_json_round_trip(small):
    cal = calibrate(small, "universal", [0.0, 0.01, 0.1])
    assert Calibration.radii_from_json(cal.to_json()) == cal.radii
    with pytest.raises(ValueError):
        calibrate(small, "per_campaign")


def test_per_line_drops_losing_lines(small):
    cal = calibrate(small, "per_line", [0.0, 0.01, 0.1])
    assert set(cal.radii) == {str(x) for x in np.unique(small.line_id)}
    ids, inv = small.lines()
    for j, lid in enumerate(ids):
        pair = cal.radii[str(lid)]
        if pair.is_baseline:
            continue
        sub = small.take(np.flatnonzero(inv == j))
        (base,) = aggregate(sub, compute_bids(sub, RobustnessRadii()))
        (rob,) = aggregate(sub, compute_bids(sub, pair))
        assert rob.r > base.r
    assert Calibration.radii_from_json(cal.to_json()) == cal.radii


# --- comparison ------------------------------------------------------------------------


def test_zero_radii_gives_zero_delta_r(small):
    rep = compare(small, RobustnessRadii())
    assert rep.delta_r_weighted == 0.0
    assert rep.spend_scale == 1.0
    assert rep.exchange.n_lost == rep.exchange.n_gained == 0


def test_report_invariants(small):
    rep = compare(small, RobustnessRadii(0.05, 1e-4))
    assert abs(rep.spend_gap) <= 1e-3
    num = sum(c.spend_weight * c.delta_r for c in rep.per_line if c.delta_r is not None)
    den = sum(c.spend_weight for c in rep.per_line)
    assert rep.delta_r_weighted == pytest.approx(num / den, rel=1e-12)
    for c in rep.per_line:
        assert c.spend_weight == pytest.approx(0.5 * (c.drbs.spend + c.baseline.spend))

    o = rep.outcomes
    wb, wd = o["won_baseline"], o["won_drbs"]
    sym = wb ^ wd
    assert rep.exchange.n_lost + rep.exchange.n_gained == int(sym.sum())
    assert rep.exchange.n_lost == int((wb & ~wd).sum())
    assert not ((wb & ~wd) & (wd & ~wb)).any()


def test_per_line_mode_requires_mapping(small):
    with pytest.raises(ValueError):
        compare(small, RobustnessRadii(), mode="per_line")
    with pytest.raises(ValueError):
        compare(small, {"L0": RobustnessRadii()}, mode="universal")
    ids = np.unique(small.line_id)
    rep = compare(small, {str(l): RobustnessRadii() for l in ids}, mode="per_line")
    assert rep.delta_r_weighted == 0.0


def test_compare_deterministic_across_threads():
    t = generate(SynthConfig(n_lines=3, requests_per_line=3000), 8)
    radii = RobustnessRadii(0.04, 1e-5)
    a, b = compare(t, radii, threads=1), compare(t, radii, threads=3)
    assert a.summary() == b.summary()


def test_report_files(small, tmp_path):
    rep = compare(small, RobustnessRadii(0.05, 1e-4))
    paths = write_report(rep, tmp_path / "out")
    rows = read_report(paths["report"])
    assert [r["line_id"] for r in rows] == [c.line_id for c in rep.per_line]
    assert sum(r["spend_weight"] for r in rows) == pytest.approx(1.0)
    for r, c in zip(rows, rep.per_line):
        assert r["delta_r_pct"] == c.delta_r
    n_scatter = len(paths["scatter"].read_text().splitlines()) - 1
    assert n_scatter == int((rep.outcomes["won_baseline"] | rep.outcomes["won_drbs"]).sum())
