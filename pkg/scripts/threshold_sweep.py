#!/usr/bin/env python3
"""Localize the two phase transitions of random presentations.

Phase 1 sweeps the binomial model over a density grid and brackets
where the freeness fraction falls through one half. Phase 2 sweeps the
positive model over an inclusion-probability grid at a relaxed slack
fraction and brackets where fixed-point certificates take over; the
verdict histogram printed per point shows the free, splitting, and
fixed-point regimes succeeding each other.

Writes one CSV per phase into --out and prints threshold estimates
with Wilson 95% half-widths. Run with --quick for a fast smoke pass.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from randgroup.errors import NoCrossingError, NonMonotoneTrendError
from randgroup.experiments import (SweepConfig, estimate_threshold, sweep)


def report_threshold(result, statistic, direction, label):
    try:
        est = estimate_threshold(result, statistic, level=0.5,
                                 direction=direction)
    except (NoCrossingError, NonMonotoneTrendError) as exc:
        print(f"  {label}: no clean crossing ({exc})")
        return
    print(f"  {label}: {statistic} crosses 1/2 at {est.crossing:.4g} "
          f"between {est.grid_lo:.4g} ({est.frac_lo:.2f} "
          f"+/- {est.ci_halfwidth_lo:.2f}) and {est.grid_hi:.4g} "
          f"({est.frac_hi:.2f} +/- {est.ci_halfwidth_hi:.2f})")


def print_histograms(result):
    for point, summ in zip(result.points, result.summaries):
        hist = " ".join(f"{k}={v}" for k, v in
                        sorted(summ.verdict_histogram.items()))
        print(f"    p={point.p:.3g}: {hist}")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=60,
                    help="generators for the freeness sweep (default 60)")
    ap.add_argument("--trials", type=int, default=30)
    ap.add_argument("--seed", type=int, default=20260822)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", default="sweep_out")
    ap.add_argument("--quick", action="store_true",
                    help="smaller m and fewer trials")
    args = ap.parse_args()

    m = 24 if args.quick else args.m
    trials = max(6, args.trials // 3) if args.quick else args.trials
    os.makedirs(args.out, exist_ok=True)

    print(f"phase 1: binomial model, m={m}, ell=3, {trials} trials/point")
    cfg = SweepConfig(
        ms=(m,), ell=3, model="binomial",
        grid=(0.05, 0.10, 0.15, 0.20, 0.25, 0.30),
        grid_kind="density", trials=trials, master_seed=args.seed,
        analyses=frozenset({"abelianization"}))
    free_csv = os.path.join(args.out, "free_transition.csv")
    result = sweep(cfg, workers=args.workers, csv_path=free_csv)
    print_histograms(result)
    report_threshold(result, "frac_free", "decreasing", "freeness")
    report_threshold(result, "frac_surjZ", "decreasing", "surjects onto Z")
    print(f"  wrote {free_csv}")

    m2 = 6 if args.quick else 8
    print(f"\nphase 2: positive model, m={m2}, ell=3, slack 1/3, "
          f"{trials} trials/point")
    cfg = SweepConfig(
        ms=(m2,), ell=3, model="positive",
        grid=(0.001, 0.005, 0.02, 0.1, 0.3, 0.5, 0.7),
        grid_kind="p", trials=trials, master_seed=args.seed + 1,
        eps=Fraction(1, 3),
        analyses=frozenset({"abelianization", "fa"}))
    fa_csv = os.path.join(args.out, "fa_transition.csv")
    result = sweep(cfg, workers=args.workers, csv_path=fa_csv)
    print_histograms(result)
    report_threshold(result, "frac_free", "decreasing", "freeness")
    report_threshold(result, "frac_FA", "increasing", "fixed point")
    print(f"  wrote {fa_csv}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
