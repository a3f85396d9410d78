"""conformal-gap: command-line front end over the experiment harness.

Exit code 0 iff every verdict of the executed experiment passes.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConformalGapError
from .harness import emit_report, make_config, parse_config, run_experiment


def _floats(text: str):
    return [float(t) for t in text.split(",") if t]


def _ints(text: str):
    return [int(t) for t in text.split(",") if t]


def _ifs_arg(text: str):
    if text.strip().startswith("{"):
        return json.loads(text)
    return text


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conformal-gap", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("uni-check", parents=[common], help="branch-pair nonlinearity margins")
    p.add_argument("--ifs", type=_ifs_arg, default="gauss23")
    p.add_argument("--word-a", type=_ints, default=[0])
    p.add_argument("--word-b", type=_ints, default=[1])
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--grid", type=int, default=512)

    p = sub.add_parser("partition", parents=[common], help="sub-IFS partition construction")
    p.add_argument("--ifs", type=_ifs_arg, default="dyadic")
    p.add_argument("--N", type=int, default=0, help="block length; 0 searches for the smallest")

    p = sub.add_parser("spectral-gap", parents=[common], help="norm decay of the complex transfer operator")
    p.add_argument("--ifs", type=_ifs_arg, default="gauss23")
    p.add_argument("--b", type=_floats, default=[50.0, 100.0, 200.0])
    p.add_argument("--r", type=_floats, default=[0.0])
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--grid", type=int, default=4096)

    p = sub.add_parser("disintegration", parents=[common], help="operator regrouping residual")
    p.add_argument("--ifs", type=_ifs_arg, default="figure1")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--s-r", type=float, default=0.01, dest="s_r")
    p.add_argument("--s-b", type=float, default=50.0, dest="s_b")
    p.add_argument("--grid", type=int, default=1025)

    p = sub.add_parser("dolgopyat", parents=[common], help="damped-operator property suite")
    p.add_argument("--ifs", type=_ifs_arg, default="gauss23")
    p.add_argument("--b", type=float, default=100.0)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--grid", type=int, default=2049)
    p.add_argument("--eps-prime", type=float, default=0.1, dest="eps_prime")

    p = sub.add_parser("measure", parents=[common], help="self-conformal measure atoms")
    p.add_argument("--ifs", type=_ifs_arg, default="figure1")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--frostman", action="store_true")
    p.add_argument("--h-min", type=float, default=0.0, dest="h_min")
    p.add_argument("--h-max", type=float, default=0.25, dest="h_max")

    p = sub.add_parser("fourier", parents=[common], help="empirical Fourier decay")
    p.add_argument("--ifs", type=_ifs_arg, default="gauss23")
    p.add_argument("--tol", default="auto", help="'auto' or a cylinder diameter")
    p.add_argument("--xi-min", type=float, default=10.0, dest="xi_min")
    p.add_argument("--xi-max", type=float, default=1e4, dest="xi_max")
    p.add_argument("--windows", type=int, default=10)

    p = sub.add_parser("nonconc", parents=[common], help="pair non-concentration statistics")
    p.add_argument("--ifs", type=_ifs_arg, default="gauss23")
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--eps0", type=float, default=0.25)
    p.add_argument("--eps1", type=float, default=1.0)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--blocks", type=int, default=12)
    p.add_argument("--sigmas", type=int, default=8)

    p = sub.add_parser("fup", parents=[common], help="uncertainty-principle operator norms")
    p.add_argument("--K1", type=_ifs_arg, default="cantor3")
    p.add_argument("--K2", type=_ifs_arg, default="cantor3")
    p.add_argument("--h-ladder", type=_floats, default=[3**-3, 3**-4, 3**-5, 3**-6], dest="h_ladder")
    p.add_argument("--grid-per-h", type=int, default=16, dest="grid_per_h")

    p = sub.add_parser("stochasticity", parents=[common], help="L_0 fixes constants")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--grid", type=int, default=1024)

    sub.add_parser("formulas", parents=[common], help="closed-form regression values")

    p = sub.add_parser("suite", parents=[common], help="run a list of experiments")
    p.add_argument("--experiments", type=lambda t: t.split(","), default=["stochasticity", "formulas"])

    p = sub.add_parser("run", parents=[common], help="run a JSON/TOML config document")
    p.add_argument("config_path")
    return ap


_SKIP_KEYS = {"command", "seed", "threads", "out", "format", "config_path"}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            with open(args.config_path) as fh:
                cfg = parse_config(fh.read())
        else:
            doc = {"experiment": args.command}
            for key, value in vars(args).items():
                if key in _SKIP_KEYS or value is None:
                    continue
                if key == "tol" and value == "auto":
                    value = 0.0
                elif key == "tol" and isinstance(value, str):
                    value = float(value)
                doc[key] = value
            if args.seed is not None:
                doc["seed"] = args.seed
            if args.out is not None:
                doc["out"] = args.out
            doc["format"] = args.format
            cfg = make_config(doc)
        bundle = run_experiment(cfg, threads=args.threads)
        text = emit_report(bundle, cfg.format, cfg.out)
        if cfg.out is None:
            sys.stdout.write(text)
        else:
            for key in sorted(bundle.verdicts):
                print(f"{key}: {'pass' if bundle.verdicts[key] else 'fail'}")
        return 0 if bundle.all_pass else 1
    except ConformalGapError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
