#!/usr/bin/env python3
"""Uncertainty-principle norms over an h-ladder; writes the fup CSV."""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from conformal_gap.harness import emit_report, make_config, run_experiment


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--K1", default="cantor3")
    ap.add_argument("--K2", default="cantor3")
    ap.add_argument("--h-ladder", default="0.037,0.0123,0.0041,0.0014")
    ap.add_argument("--grid-per-h", type=int, default=16)
    ap.add_argument("--out", default="fup.csv")
    args = ap.parse_args()
    cfg = make_config(
        {
            "experiment": "fup",
            "K1": args.K1,
            "K2": args.K2,
            "h_ladder": [float(x) for x in args.h_ladder.split(",")],
            "grid_per_h": args.grid_per_h,
        }
    )
    bundle = run_experiment(cfg)
    emit_report(bundle, "csv", args.out)
    print(f"beta_fit = {bundle.summary['beta_fit']}")
    return 0 if bundle.all_pass else 1


if __name__ == "__main__":
    sys.exit(main())
