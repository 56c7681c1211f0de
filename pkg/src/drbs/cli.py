"""Command-line front end: ``drbs {solve,simulate,calibrate,replay,report}``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
from collections import defaultdict
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .experiment import (
    FIELDS,
    BidRequest,
    Calibration,
    DatasetError,
    SynthConfig,
    as_table,
    calibrate,
    compare,
    generate_synthetic,
    load_dataset,
    read_report,
    split,
    write_dataset,
    write_report,
    DEFAULT_DELTA_X_GRID,
)
from .landscape import LognormalLandscape
from .solver import RobustnessRadii, ValueModel, drbs_bid

log = logging.getLogger("drbs")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers


def parse_grid(spec: str) -> list[float]:
    """``0,0.01,0.1`` or ``log:START:STOP:N`` (optionally prefixed ``0+``)."""
    spec = spec.strip()
    out: list[float] = []
    if spec.startswith("0+"):
        out.append(0.0)
        spec = spec[2:]
    if spec.startswith("log:"):
        try:
            _, a, b, n = spec.split(":")
            out += list(np.logspace(math.log10(float(a)), math.log10(float(b)), int(n)))
        except ValueError:
            raise UsageError(f"bad grid spec {spec!r}; expected log:START:STOP:N") from None
    else:
        try:
            out += [float(t) for t in spec.split(",") if t.strip()]
        except ValueError:
            raise UsageError(f"bad grid spec {spec!r}") from None
    if not out or min(out) < 0:
        raise UsageError("grid must be nonempty and nonnegative")
    return out


def config_hash(args: argparse.Namespace) -> str:
    skip = {"func", "threads", "output", "input", "radii"}
    payload = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def write_manifest(path: Path, args: argparse.Namespace, extra: dict | None = None) -> None:
    manifest = {
        "command": args.command,
        "seed": getattr(args, "seed", None),
        "config_hash": config_hash(args),
        "library_version": __version__,
    }
    if extra:
        manifest.update(extra)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _require_file(path) -> Path:
    if path is None:
        raise UsageError("--input is required")
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"input file not found: {p}")
    return p


def _require_output(path) -> Path:
    if path is None:
        raise UsageError("--output is required")
    return Path(path)


def _load_radii(args) -> tuple[object, str]:
    if args.radii:
        d = json.loads(_require_file(args.radii).read_text(encoding="utf-8"))
        return Calibration.radii_from_json(d), d["mode"]
    if args.delta_x is None or args.delta_v is None:
        raise UsageError("replay needs --radii or both --delta-x and --delta-v")
    return RobustnessRadii(args.delta_x, args.delta_v), "universal"


# ---------------------------------------------------------------------------
# commands


def cmd_solve(args) -> int:
    fields_given = {n: getattr(args, n) for n in FIELDS if getattr(args, n) is not None}
    if fields_given:
        req = dict(fields_given)
        radii = {"delta_x": args.delta_x, "delta_v": args.delta_v}
    else:
        try:
            req = json.load(sys.stdin)
        except json.JSONDecodeError as err:
            raise UsageError(f"could not parse JSON request on stdin: {err}") from None
        if not isinstance(req, dict):
            raise UsageError("stdin JSON must be an object")
        radii = {
            "delta_x": req.pop("delta_x", args.delta_x),
            "delta_v": req.pop("delta_v", args.delta_v),
        }
    missing = [n for n in FIELDS if n not in req] + [k for k, v in radii.items() if v is None]
    if missing:
        raise UsageError(f"missing field(s): {', '.join(missing)}")
    try:
        request = BidRequest(str(req["line_id"]), *(float(req[n]) for n in FIELDS[1:]))
        rr = RobustnessRadii(float(radii["delta_x"]), float(radii["delta_v"]))
    except (TypeError, ValueError) as err:
        raise UsageError(str(err)) from None

    decision = drbs_bid(
        LognormalLandscape(request.mu, request.sigma),
        ValueModel(request.click_reward, request.click_prob, request.value),
        rr,
        request.floor,
        request.ceiling,
    )
    out = decision.to_dict()
    out["baseline"] = rr.is_baseline
    out["delta_x"], out["delta_v"] = rr.delta_x, rr.delta_v
    out["line_id"] = request.line_id
    json.dump(out, sys.stdout, sort_keys=True, allow_nan=False, default=_json_default)
    sys.stdout.write("\n")
    return 0


def _json_default(x):
    if isinstance(x, float) and math.isinf(x):
        return None
    raise TypeError(repr(x))


def cmd_simulate(args) -> int:
    out = _require_output(args.output)
    cfg = {}
    if args.config:
        cfg = json.loads(_require_file(args.config).read_text(encoding="utf-8"))
    if args.lines is not None:
        cfg["n_lines"] = args.lines
    if args.requests_per_line is not None:
        cfg["requests_per_line"] = args.requests_per_line
    try:
        config = SynthConfig.from_dict(cfg)
        table = generate_synthetic(config, args.seed)
    except (TypeError, ValueError) as err:
        raise UsageError(f"invalid config: {err}") from None
    out.parent.mkdir(parents=True, exist_ok=True)
    write_dataset(out, table)
    write_manifest(out.with_suffix(".manifest.json"), args, {"config": asdict(config), "n_requests": len(table)})
    print(f"wrote {len(table)} requests to {out}")
    return 0


def _read_split(args, part: str):
    requests = load_dataset(_require_file(args.input))
    if not requests:
        raise UsageError("input dataset is empty")
    train, test = split(as_table(requests), args.split, args.seed)
    return train if part == "train" else test


def _write_curve(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) for x in row])


def cmd_calibrate(args) -> int:
    out = _require_output(args.output)
    grid = parse_grid(args.grid) if args.grid else list(DEFAULT_DELTA_X_GRID)
    train = _read_split(args, "train")
    if len(train) == 0:
        raise UsageError("training split is empty; increase --split")
    cal = calibrate(train, args.mode, grid, threads=args.threads)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(cal.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    stem = out.with_suffix("")
    if cal.surplus_curve:
        _write_curve(Path(f"{stem}.surplus_curve.csv"), ("delta_x", "train_surplus"), cal.surplus_curve)
    if cal.spend_curve:
        _write_curve(Path(f"{stem}.spend_curve.csv"), ("delta_v", "spend_gap"), cal.spend_curve)
    write_manifest(Path(f"{stem}.manifest.json"), args, {"n_train": len(train)})
    print(json.dumps(cal.to_json(), sort_keys=True))
    return 0


def cmd_replay(args) -> int:
    out = _require_output(args.output)
    radii, mode = _load_radii(args)
    if args.mode and args.radii is None and args.mode != mode:
        raise UsageError("--mode per_line needs a per-line --radii file")
    test = _read_split(args, "test")
    if len(test) == 0:
        raise UsageError("test split is empty; decrease --split")
    report = compare(test, radii, mode, threads=args.threads)
    write_report(report, out)
    write_manifest(out / "manifest.json", args, {"n_test": len(test)})
    print(json.dumps(report.summary(), sort_keys=True))
    return 0


def cmd_report(args) -> int:
    src = Path(args.input) if args.input else None
    if src is None or not (src / "report.csv").is_file():
        raise UsageError("--input must be a replay output directory containing report.csv")
    out = Path(args.output) if args.output else src
    out.mkdir(parents=True, exist_ok=True)
    rows = read_report(src / "report.csv")
    summary = json.loads((src / "summary.json").read_text(encoding="utf-8"))
    rows.sort(key=lambda r: (-(r["spend_weight"] or 0.0), r["line_id"]))

    with open(out / "delta_r_table.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("line_id", "spend_weight", "delta_r_pct"))
        for r in rows:
            w.writerow((r["line_id"], repr(r["spend_weight"] or 0.0), "" if r["delta_r_pct"] is None else repr(r["delta_r_pct"])))
        w.writerow(("overall", "1.0", repr(summary["delta_r_weighted_pct"])))

    per_line = defaultdict(list)
    scatter = src / "scatter.csv"
    if scatter.is_file():
        with open(scatter, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                per_line[row["line_id"]].append(row)
    sdir = out / "scatter"
    sdir.mkdir(exist_ok=True)
    for lid, pts in sorted(per_line.items()):
        with open(sdir / f"{lid}.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("v", "b", "winner"))
            for p in pts:
                w.writerow((p["v"], p["b"], p["winner"]))

    top = rows[: args.top]
    print(f"{'line':>10} {'weight':>8} {'dR%':>8}")
    for r in top:
        dr = "   n/a" if r["delta_r_pct"] is None else f"{r['delta_r_pct']:8.3f}"
        print(f"{r['line_id']:>10} {100 * (r['spend_weight'] or 0):7.2f}% {dr}")
    print(f"{'overall':>10} {'':>8} {summary['delta_r_weighted_pct']:8.3f}")
    ex = summary["exchange"]
    print(
        f"exchange: lost {ex['n_lost']} wins (avg v/b {ex['avg_vb_lost']}), "
        f"gained {ex['n_gained']} wins (avg v/b {ex['avg_vb_gained']})"
    )
    write_manifest(out / "report_manifest.json", args)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="drbs", description="Distributionally robust bid shading toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, radii=True):
        sp.add_argument("--input")
        sp.add_argument("--output")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        if radii:
            sp.add_argument("--delta-x", type=float)
            sp.add_argument("--delta-v", type=float)

    s = sub.add_parser("solve", help="solve one bid request (flags or JSON on stdin)")
    for name in FIELDS:
        s.add_argument("--" + name.replace("_", "-"), dest=name, type=str if name == "line_id" else float)
    s.add_argument("--delta-x", type=float)
    s.add_argument("--delta-v", type=float)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("simulate", help="write a synthetic dataset CSV")
    common(s, radii=False)
    s.add_argument("--config", help="JSON file with SynthConfig overrides")
    s.add_argument("--lines", type=int)
    s.add_argument("--requests-per-line", type=int)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("calibrate", help="choose radii on the training split")
    common(s, radii=False)
    s.add_argument("--split", type=float, default=0.25, help="training fraction")
    s.add_argument("--mode", choices=("universal", "per_line"), default="universal")
    s.add_argument("--grid", help="delta_x candidates: 'a,b,c' or 'log:1e-4:1:25' (prefix '0+' adds zero)")
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("replay", help="compare baseline and robust policies on the test split")
    common(s)
    s.add_argument("--radii", help="radii JSON written by calibrate")
    s.add_argument("--split", type=float, default=0.25, help="training fraction (test is the rest)")
    s.add_argument("--mode", choices=("universal", "per_line"))
    s.set_defaults(func=cmd_replay)

    s = sub.add_parser("report", help="delta-R table and per-line scatter CSVs from a replay")
    s.add_argument("--input")
    s.add_argument("--output")
    s.add_argument("--top", type=int, default=5)
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) is not None and getattr(args, "threads", 1) < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (UsageError, DatasetError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
