#!/usr/bin/env python3
"""Norm-decay sweep over (r, b) for a chosen system; writes the gap CSV."""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from conformal_gap.harness import emit_report, make_config, run_experiment


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ifs", default="gauss23")
    ap.add_argument("--b", default="50,100,200")
    ap.add_argument("--r", default="0")
    ap.add_argument("--n", type=int, default=30)
    ap.add_argument("--grid", type=int, default=4096)
    ap.add_argument("--out", default="gap.csv")
    args = ap.parse_args()
    cfg = make_config(
        {
            "experiment": "spectral-gap",
            "ifs": args.ifs,
            "b": [float(x) for x in args.b.split(",")],
            "r": [float(x) for x in args.r.split(",")],
            "n": args.n,
            "grid": args.grid,
        }
    )
    bundle = run_experiment(cfg)
    emit_report(bundle, "csv", args.out)
    for key, value in sorted(bundle.summary.items()):
        print(f"{key} = {value}")
    return 0 if bundle.all_pass else 1


if __name__ == "__main__":
    sys.exit(main())
