"""Recompute the threshold report and decay fits of a run directory from its
series.csv and config.toml, independently of the Rust code, and compare with
report.toml.

    python python/recompute_report.py RUN_DIR [--tol 1e-9]
"""

import argparse
import csv
import math
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib


def read_series(path):
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    return {k: [float(r[k]) for r in rows] for k in rows[0]}


def fit_decay(t, err):
    n = len(err)
    if n < 10 or not err[0] > 0:
        return None
    e0 = err[0]
    tail_start = t[-1] - 0.1 * (t[-1] - t[0])
    tail = sorted(e for ti, e in zip(t, err) if ti >= tail_start)
    floor = max(1e-12 * e0, tail[len(tail) // 2])
    start = next((i for i in range(n) if 10 * floor < err[i] < 0.1 * e0), None)
    if start is None:
        return None
    end = next((i for i in range(start, n) if err[i] <= 10 * floor), n)
    if end - start < 10:
        return None
    xs = t[start:end]
    ys = [math.log(e) for e in err[start:end]]
    m = len(xs)
    mx, my = sum(xs) / m, sum(ys) / m
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    slope = sxy / sxx
    b = my - slope * mx
    ss_res = sum((y - b - slope * x) ** 2 for x, y in zip(xs, ys))
    return {
        "rate": -slope,
        "r_squared": 1 - ss_res / syy if syy > 0 else 0.0,
        "decades": math.log10(err[start] / err[end - 1]),
        "floor": floor,
    }


def thresholds(s, cfg, c0, constant):
    dim = cfg["grid"]["dim"]
    alpha = cfg["phys"]["alpha"]
    mu = cfg["phys"].get("mu", 0.0)
    nu = cfg["phys"]["nu"]
    h = 1.0 / cfg["interpolant"]["param"]
    th = 1 - dim / (4 * alpha)
    sig1 = max(s["u_V"] + s["v_V"])
    siga = max(s["u_Valpha"] + s["v_Valpha"])
    return {
        "theta": th,
        "h": h,
        "h_condition_lhs": mu * h * h * c0,
        "mu_l2_required": 2 * constant * max(s["u_V"]) ** (1 / th),
        "mu_valpha_required": constant
        * (4 * siga ** (2 / th) + sig1 ** (1 / th) + 2 * sig1 ** (2 / th) + max(s["u_Valpha1"])),
        "sigma0": max(s["u_l2"] + s["v_l2"]),
        "sigma1": sig1,
        "sigma_alpha": siga,
        "sigma_alpha_plus_1": max(s["u_Valpha1"]),
    }


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("run_dir", type=Path)
    ap.add_argument("--tol", type=float, default=1e-9)
    args = ap.parse_args()

    cfg = tomllib.loads((args.run_dir / "config.toml").read_text())
    report = tomllib.loads((args.run_dir / "report.toml").read_text())
    series = read_series(args.run_dir / "series.csv")
    bad = []

    thr = report.get("threshold")
    if thr is not None:
        mine = thresholds(series, cfg, thr["c0"], thr["constant"])
        for key, value in mine.items():
            if not close(value, thr[key], args.tol):
                bad.append(f"threshold.{key}: recomputed {value!r} vs report {thr[key]!r}")

    for track, col in (("decay_l2", "l2_err"), ("decay_valpha", "valpha_err")):
        fit = fit_decay(series["t"], series[col])
        rep = report[track]
        if fit is None:
            if rep["found"]:
                bad.append(f"{track}: report has a fit, recomputation finds none")
            continue
        if not rep["found"]:
            bad.append(f"{track}: recomputation finds a fit, report has none")
            continue
        for key, value in fit.items():
            if not close(value, rep[key], args.tol):
                bad.append(f"{track}.{key}: recomputed {value!r} vs report {rep[key]!r}")

    for line in bad:
        print("MISMATCH", line)
    print("report matches" if not bad else f"{len(bad)} mismatch(es)")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
