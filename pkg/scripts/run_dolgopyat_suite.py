#!/usr/bin/env python3
"""Damped-operator property suite (cone stability, L2 contraction,
modulus domination) over seeded random cone functions."""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from conformal_gap.harness import emit_report, make_config, run_experiment


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ifs", default="gauss23")
    ap.add_argument("--b", type=float, default=100.0)
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--seed", type=int, default=20)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    cfg = make_config(
        {
            "experiment": "dolgopyat",
            "ifs": args.ifs,
            "b": args.b,
            "samples": args.samples,
            "seed": args.seed,
        }
    )
    bundle = run_experiment(cfg)
    if args.out:
        emit_report(bundle, "csv", args.out)
    for key in sorted(bundle.verdicts):
        print(f"{key}: {'pass' if bundle.verdicts[key] else 'fail'}")
    print(f"max_l2_ratio = {bundle.summary['max_l2_ratio']}")
    return 0 if bundle.all_pass else 1


if __name__ == "__main__":
    sys.exit(main())
