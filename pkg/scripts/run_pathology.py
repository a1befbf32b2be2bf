#!/usr/bin/env python3
"""The creeping-atom pathology, measured.

The sequence -1/2, -1/3, -1/4, ... drives every CDF-level statistic to 0
against the unit mass at 0 while never sampling the point itself, so the
atom frequency and the interval-class supremum stay put forever.  Prints
the diagnostic table and the flag.
"""
import argparse

from stableseq.generators import gen_harmonic_approach
from stableseq.measures import DistributionModel, stability_diagnostic
from stableseq.regression import RegressionModel, SignedMeasureModel


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=100_000)
    args = ap.parse_args()
    pm = DistributionModel.point_mass(0.0)
    target = SignedMeasureModel(pm, RegressionModel.constant(0.0))
    checkpoints = sorted({c for c in (10, 100, 1000, 10_000, args.n) if c <= args.n})
    rep = stability_diagnostic(gen_harmonic_approach(args.n), pm, target, checkpoints)
    print(f"{'n':>8s}  {'interval-sup':>12s}  {'cramer':>10s}  {'levy':>10s}  {'atom-dev':>8s}")
    for c in rep.checkpoints:
        print(
            f"{c.n:>8d}  {c.interval_discrepancy:>12.4f}  {c.cdf_cramer:>10.6f}  "
            f"{c.cdf_levy:>10.6f}  {c.atom_deviations[0.0]:>8.4f}"
        )
    print(f"flag: {rep.flag} -- {rep.flag_reason}")


if __name__ == "__main__":
    main()
