#!/usr/bin/env python3
"""Windowed-sup Fourier decay fit for a chosen system; writes decay CSV."""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from conformal_gap.harness import emit_report, make_config, run_experiment


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ifs", default="gauss23")
    ap.add_argument("--tol", default="auto")
    ap.add_argument("--xi-min", type=float, default=10.0)
    ap.add_argument("--xi-max", type=float, default=1e4)
    ap.add_argument("--windows", type=int, default=10)
    ap.add_argument("--out", default="decay.csv")
    args = ap.parse_args()
    tol = 0.0 if args.tol == "auto" else float(args.tol)
    cfg = make_config(
        {
            "experiment": "fourier",
            "ifs": args.ifs,
            "tol": tol,
            "xi_min": args.xi_min,
            "xi_max": args.xi_max,
            "windows": args.windows,
        }
    )
    bundle = run_experiment(cfg)
    emit_report(bundle, "csv", args.out)
    print(f"alpha_fit = {bundle.summary['alpha_fit']}")
    return 0 if bundle.all_pass else 1


if __name__ == "__main__":
    sys.exit(main())
