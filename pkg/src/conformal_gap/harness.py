"""Experiment orchestration: validated configs, named experiments,
deterministic result bundles, and stable CSV/JSON emission.

Every experiment is a pure function of (config, seed, library version);
rerunning with the same config yields byte-identical CSV payloads (wallclock
lives only in the bundle object, never in the CSV).
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .errors import ConformalGapError, IoError, ParseError, ValidationError
from .fourier import (
    block_length_for_frequency,
    decay_fit,
    nonconcentration_count,
    regular_words,
    sigma_window,
    sum_product_params,
    zeta_table,
)
from .fup import fup_exponent, fup_norm, schur_bound, set_intervals, theorem_beta, thicken
from .grids import GridFunction
from .maps import builtin_ifs, resolve_ifs, uni_margin
from .measures import (
    doubling_constant,
    frostman_exponents,
    lyapunov_entropy,
    measure_refine,
    random_measure,
)
from .partition import auto_partition, build_partition, verify_partition
from .transfer import (
    ComplexExponent,
    apply_transfer,
    cone_check,
    default_dolgopyat_config,
    dolgopyat_apply,
    dolgopyat_select_J,
    apply_sub_transfer,
    iterate_norms,
    sample_cone_pair,
)
from .words import word

BUILTIN_NAMES = ("figure1", "dyadic", "gauss23", "cantor3")

_DEFAULTS: Dict[str, Dict] = {
    "stochasticity": {"n": 20, "grid": 1024},
    "uni-check": {"ifs": "gauss23", "word_a": [0], "word_b": [1], "delta": 0.0, "grid": 512},
    "partition": {"ifs": "dyadic", "N": 0},  # N = 0 means search for the smallest
    "spectral-gap": {"ifs": "gauss23", "b": [50.0, 100.0, 200.0], "r": [0.0], "n": 30, "grid": 4096},
    "disintegration": {"ifs": "figure1", "n": 3, "s_r": 0.01, "s_b": 50.0, "grid": 1025},
    "dolgopyat": {"ifs": "gauss23", "b": 100.0, "samples": 100, "grid": 2049, "eps_prime": 0.1},
    "measure": {"ifs": "figure1", "tol": 1e-4, "frostman": False, "h_min": 0.0, "h_max": 0.25},
    "fourier": {"ifs": "gauss23", "tol": 0.0, "xi_min": 10.0, "xi_max": 1e4, "windows": 10},
    "nonconc": {"ifs": "gauss23", "n": 12, "eps": 0.25, "eps0": 0.25, "eps1": 1.0, "k": 2, "blocks": 12, "sigmas": 8},
    "fup": {"K1": "cantor3", "K2": "cantor3", "h_ladder": [3**-3, 3**-4, 3**-5, 3**-6], "grid_per_h": 16},
    "formulas": {},
    "suite": {"experiments": ["stochasticity", "formulas"]},
}

_NEEDS_SEED = {"dolgopyat", "nonconc"}
_COMMON_KEYS = {"experiment", "seed", "out", "format", "threads"}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    knobs: Dict
    seed: Optional[int] = None
    out: Optional[str] = None
    format: str = "csv"

    def knob(self, key: str):
        return self.knobs[key]


def make_config(doc: Dict) -> ExperimentConfig:
    """Validate a raw mapping into an ExperimentConfig (strict keys)."""
    if "experiment" not in doc:
        raise ValidationError("experiment", "missing")
    name = doc["experiment"]
    if name not in _DEFAULTS:
        raise ValidationError("experiment", f"unknown experiment {name!r}")
    defaults = _DEFAULTS[name]
    for key in doc:
        if key not in defaults and key not in _COMMON_KEYS:
            raise ValidationError(key, "unknown key")
    knobs = dict(defaults)
    for key, value in doc.items():
        if key in defaults:
            knobs[key] = value
    if "ifs" in knobs and isinstance(knobs["ifs"], dict):
        probs = knobs["ifs"].get("probs", [])
        if abs(sum(float(p) for p in probs) - 1.0) > 1e-12:
            raise ValidationError("probs", f"sum to {sum(probs)}, not 1")
    seed = doc.get("seed")
    if seed is None and name in _NEEDS_SEED:
        raise ValidationError("seed", f"mandatory for stochastic experiment {name!r}")
    fmt = doc.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ValidationError("format", fmt)
    return ExperimentConfig(
        experiment=name,
        knobs=knobs,
        seed=None if seed is None else int(seed),
        out=doc.get("out"),
        format=fmt,
    )


def parse_config(text: str) -> ExperimentConfig:
    """Parse a JSON (or TOML, where the interpreter ships tomllib)
    experiment document."""
    doc = None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as json_err:
        try:
            import tomllib  # py >= 3.11
        except ImportError:
            raise ParseError(
                f"not valid JSON (line {json_err.lineno}, col {json_err.colno}) "
                "and TOML support needs Python >= 3.11"
            ) from json_err
        try:
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as toml_err:
            raise ParseError(f"neither JSON nor TOML: {toml_err}") from json_err
    if not isinstance(doc, dict):
        raise ParseError("config document must be a mapping")
    return make_config(doc)


@dataclass
class ResultBundle:
    config: Dict
    rows: List[Dict]
    summary: Dict
    verdicts: Dict[str, bool]
    wallclock: float = 0.0
    version: str = __version__

    @property
    def all_pass(self) -> bool:
        return all(self.verdicts.values())

    def to_json_dict(self) -> Dict:
        return {
            "config": self.config,
            "rows": self.rows,
            "summary": self.summary,
            "verdicts": self.verdicts,
            "version": self.version,
        }


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, (list, tuple)):
        return ";".join(_fmt(x) for x in v)
    return str(v)


def emit_report(bundle: ResultBundle, fmt: str = "csv", path: Optional[str] = None) -> str:
    """Stable-order report: flat CSV (rows, then one summary row and verdict
    lines) or a losslessly round-tripping JSON document."""
    if fmt == "json":
        text = json.dumps(bundle.to_json_dict(), sort_keys=True, indent=2, default=_fmt) + "\n"
    elif fmt == "csv":
        lines = []
        columns: List[str] = []
        for row in bundle.rows:
            for key in row:
                if key not in columns:
                    columns.append(key)
        if columns:
            lines.append(",".join(columns))
            for row in bundle.rows:
                lines.append(",".join(_fmt(row.get(c, "")) for c in columns))
        for key in sorted(bundle.summary):
            lines.append(f"# summary,{key},{_fmt(bundle.summary[key])}")
        for key in sorted(bundle.verdicts):
            lines.append(f"# verdict,{key},{'pass' if bundle.verdicts[key] else 'fail'}")
        text = "\n".join(lines) + "\n"
    else:
        raise ValidationError("format", fmt)
    if path is not None:
        try:
            with open(path, "w") as fh:
                fh.write(text)
        except OSError as e:
            raise IoError(str(e)) from e
    return text


# ---------------------------------------------------------------------------
# experiment bodies


def _partition_for(ifs, n_knob: int):
    if n_knob and n_knob > 0:
        a1 = word([0] * n_knob)
        a2 = word([ifs.n_letters - 1] * n_knob)
        return n_knob, build_partition(ifs, n_knob, (a1, a2))
    return auto_partition(ifs)


def _run_stochasticity(cfg: ExperimentConfig) -> Tuple[List[Dict], Dict, Dict]:
    rows = []
    worst = 0.0
    for name in BUILTIN_NAMES:
        ifs = builtin_ifs(name)
        f = GridFunction.constant(1.0, cfg.knob("grid"))
        dev = 0.0
        for _ in range(cfg.knob("n")):
            f = apply_transfer(ifs, ComplexExponent(0.0, 0.0), f)
            dev = max(dev, float(np.max(np.abs(f.values - 1.0))))
        rows.append({"ifs": name, "n": cfg.knob("n"), "max_deviation": dev})
        worst = max(worst, dev)
    return rows, {"worst_deviation": worst}, {"stochasticity": worst <= 1e-10}


def _run_uni_check(cfg: ExperimentConfig):
    ifs = resolve_ifs(cfg.knob("ifs"))
    wa, wb = word(cfg.knob("word_a")), word(cfg.knob("word_b"))
    lo, hi = uni_margin(ifs, wa, wb, cfg.knob("delta"), cfg.knob("grid"))
    rows = [{"word_a": list(wa), "word_b": list(wb), "min_margin": lo, "max_margin": hi}]
    return rows, {"min_margin": lo, "max_margin": hi}, {"uni_positive": lo > 0}


def _run_partition(cfg: ExperimentConfig):
    ifs = resolve_ifs(cfg.knob("ifs"))
    n, part = _partition_for(ifs, cfg.knob("N"))
    report = verify_partition(ifs, part)
    rows = [
        {
            "group": i,
            "words": [list(w) for w in part.omega_words(i)],
            "weight": part.group_weights[i],
        }
        for i in range(part.n_groups)
    ]
    summary = {
        "N": n,
        "n_groups": part.n_groups,
        "worst_group_margin": report.worst_group_margin,
        "alpha_margin": report.alpha_margin,
        "partition_json": json.dumps(part.to_json_dict(), sort_keys=True),
    }
    return rows, summary, {"partition_valid": report.all_pass}


def _run_spectral_gap(cfg: ExperimentConfig):
    ifs = resolve_ifs(cfg.knob("ifs"))
    rows = []
    rhos = {}
    for r in cfg.knob("r"):
        for b in cfg.knob("b"):
            rep = iterate_norms(
                ifs,
                ComplexExponent(float(r), float(b)),
                GridFunction.constant(1.0, cfg.knob("grid")),
                cfg.knob("n"),
            )
            rho = rep.fitted_rho
            rhos[(float(r), float(b))] = rho
            for n_i, nrm in enumerate(rep.norms_by_n[0]):
                rows.append({"b": float(b), "r": float(r), "n": n_i, "b_norm": nrm, "fitted_rho": rho})
    summary = {f"rho_r{r}_b{b}": v for (r, b), v in sorted(rhos.items())}
    return rows, summary, {"contracting": all(v < 1.0 + 1e-9 for v in rhos.values())}


def _run_disintegration(cfg: ExperimentConfig):
    from .transfer import disintegration_residual

    ifs = resolve_ifs(cfg.knob("ifs"))
    _, part = _partition_for(ifs, 0)
    resid = disintegration_residual(
        ifs,
        part,
        ComplexExponent(cfg.knob("s_r"), cfg.knob("s_b")),
        GridFunction.constant(1.0, cfg.knob("grid")),
        cfg.knob("n"),
    )
    rows = [{"n_blocks": cfg.knob("n"), "relative_residual": resid}]
    return rows, {"relative_residual": resid}, {"disintegration": resid <= 1e-9}


def _run_dolgopyat(cfg: ExperimentConfig):
    ifs = resolve_ifs(cfg.knob("ifs"))
    _, part = _partition_for(ifs, 0)
    b = float(cfg.knob("b"))
    dcfg, cover = default_dolgopyat_config(ifs, part, b, eps_prime=cfg.knob("eps_prime"))
    s = ComplexExponent(0.0, b)
    mu_w = random_measure(ifs, part, (), 1e-12)
    mu_up = random_measure(ifs, part, (0,) * dcfg.block_N, 1e-12)
    rng = np.random.default_rng(cfg.seed)
    n_ok_cone = n_ok_l2 = n_ok_dom = 0
    max_ratio = 0.0
    samples = cfg.knob("samples")
    for _ in range(samples):
        H, f = sample_cone_pair(rng, cfg.knob("grid"), dcfg.cone_A, b)
        sel = dolgopyat_select_J(ifs, part, cover, dcfg, s, f, H)
        out = dolgopyat_apply(ifs, part, cover, sel, dcfg, s, H)
        if cone_check(out, dcfg.cone_A, b):
            n_ok_cone += 1
        vals, _ = out.eval_at(mu_w.positions)
        num = float(np.sum(mu_w.masses * np.abs(vals) ** 2))
        hv, _ = H.eval_at(mu_up.positions)
        den = float(np.sum(mu_up.masses * np.abs(hv) ** 2))
        ratio = num / den
        max_ratio = max(max_ratio, ratio)
        if ratio < 1.0:
            n_ok_l2 += 1
        g = f
        for _ in range(dcfg.block_N):
            g = apply_sub_transfer(ifs, part, 0, s, g)
        if np.all(np.abs(g.values) <= out.values.real * (1 + 1e-9) + 1e-12):
            n_ok_dom += 1
    rows = [
        {
            "samples": samples,
            "cone_ok": n_ok_cone,
            "l2_ok": n_ok_l2,
            "domination_ok": n_ok_dom,
            "max_l2_ratio": max_ratio,
        }
    ]
    verdicts = {
        "cone_stability": n_ok_cone == samples,
        "l2_contraction": n_ok_l2 == samples,
        "domination": n_ok_dom == samples,
    }
    return rows, {"max_l2_ratio": max_ratio, "theta": dcfg.theta, "block_N": dcfg.block_N}, verdicts


def _run_measure(cfg: ExperimentConfig):
    ifs = resolve_ifs(cfg.knob("ifs"))
    m = measure_refine(ifs, cfg.knob("tol"))
    rows = [{"position": float(p), "mass": float(w)} for p, w in zip(m.positions, m.masses)]
    summary = {"atoms": m.n_atoms, "resolution": m.resolution}
    verdicts = {"mass_normalized": abs(m.total_mass() - 1.0) <= 1e-10}
    if cfg.knob("frostman"):
        h_min = cfg.knob("h_min") or 2.5 * m.resolution
        rep = frostman_exponents(m, h_min, cfg.knob("h_max"))
        summary.update(
            {
                "delta_minus": rep.delta_minus,
                "delta_plus": rep.delta_plus,
                "c_minus": rep.c_minus,
                "c_plus": rep.c_plus,
            }
        )
        verdicts["frostman_positive"] = rep.delta_plus > 0
    return rows, summary, verdicts


def _run_fourier(cfg: ExperimentConfig):
    ifs = resolve_ifs(cfg.knob("ifs"))
    tol = cfg.knob("tol")
    if not tol:
        tol = 0.01 / cfg.knob("xi_max")
    m = measure_refine(ifs, tol)
    fit = decay_fit(m, cfg.knob("xi_min"), cfg.knob("xi_max"), cfg.knob("windows"))
    rows = [
        {"xi_window": x, "sup_modulus": s}
        for x, s in zip(fit.xi_ladder, fit.sup_moduli)
    ]
    summary = {"alpha_fit": fit.alpha_fit, "fit_residual": fit.fit_residual, "atoms": m.n_atoms}
    return rows, summary, {"polynomial_decay": fit.alpha_fit > 0.0}


def _run_nonconc(cfg: ExperimentConfig):
    ifs = resolve_ifs(cfg.knob("ifs"))
    n, eps, eps0, eps1 = (cfg.knob(k) for k in ("n", "eps", "eps0", "eps1"))
    k = cfg.knob("k")
    erg = lyapunov_entropy(ifs, 200, 400, seed=cfg.seed)
    reg = regular_words(ifs, erg, n, eps, eps0)
    params = sum_product_params(k, eps, eps0, eps1, 0.0, n)
    sig_lo, sig_hi = sigma_window(params)
    sigmas = np.geomspace(sig_lo, sig_hi, cfg.knob("sigmas"))
    rng = np.random.default_rng(cfg.seed)
    rows = []
    n_pass = n_total = 0
    for _ in range(cfg.knob("blocks")):
        blocks = [reg.words[rng.integers(0, len(reg.words))] for _ in range(k + 1)]
        for j in range(1, k + 1):
            tab = zeta_table(ifs, blocks[j - 1], blocks[j], reg, erg)
            for sig in sigmas:
                frac = nonconcentration_count(tab, float(sig))
                bound = float(sig) ** (eps0 / 4.0)
                ok = frac <= bound
                n_pass += ok
                n_total += 1
                rows.append(
                    {
                        "j": j,
                        "sigma": float(sig),
                        "pair_fraction": frac,
                        "bound": bound,
                        "ok": ok,
                    }
                )
    rate = n_pass / max(n_total, 1)
    return (
        rows,
        {"pass_rate": rate, "n_regular": len(reg.words), "sigma_lo": sig_lo, "sigma_hi": sig_hi},
        {"nonconcentration": rate >= 0.95},
    )


def _run_fup(cfg: ExperimentConfig):
    res = fup_exponent(
        cfg.knob("K1"), cfg.knob("K2"), cfg.knob("h_ladder"), cfg.knob("grid_per_h")
    )
    rows = [
        {"h": h, "norm": v, "doubling_delta": d, "beta_fit": ""}
        for h, v, d in zip(res.h_ladder, res.norms, res.doubling_deltas)
    ]
    rows.append({"h": "", "norm": "", "doubling_delta": "", "beta_fit": res.beta_fit})
    verdicts = {
        "norms_contractive": all(v <= 1.0 + 1e-6 for v in res.norms),
        "beta_positive": res.beta_fit > 0,
    }
    return rows, {"beta_fit": res.beta_fit}, verdicts


def _run_formulas(cfg: ExperimentConfig):
    beta = theorem_beta(0.3, 0.3, 0.2)
    schur = schur_bound(0.2, 0.6, 1e-4)
    n_rule = block_length_for_frequency(1, math.log(2.0), 0.1, math.exp(10.0))
    rows = [
        {"name": "theorem_beta(0.3,0.3,0.2)", "value": beta.value},
        {"name": "schur_bound(0.2,0.6,1e-4)", "value": schur},
        {"name": "block_length(k=1,lam=log2,eps0=0.1,xi=e^10)", "value": float(n_rule)},
    ]
    verdicts = {
        "theorem_beta": beta.value == 0.25,
        "schur_bound": abs(schur - 0.46121) <= 1e-5,
        "block_length": n_rule == 21,
    }
    return rows, {}, verdicts


_RUNNERS = {
    "stochasticity": _run_stochasticity,
    "uni-check": _run_uni_check,
    "partition": _run_partition,
    "spectral-gap": _run_spectral_gap,
    "disintegration": _run_disintegration,
    "dolgopyat": _run_dolgopyat,
    "measure": _run_measure,
    "fourier": _run_fourier,
    "nonconc": _run_nonconc,
    "fup": _run_fup,
    "formulas": _run_formulas,
}


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ResultBundle:
    """Execute one named experiment (or a suite of them)."""
    start = time.perf_counter()
    echo = {"experiment": cfg.experiment, "seed": cfg.seed, **cfg.knobs}
    if cfg.experiment == "suite":
        names = cfg.knob("experiments")
        subcfgs = [
            make_config({"experiment": n, "seed": cfg.seed if n in _NEEDS_SEED else None})
            for n in names
        ]
        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            bundles = list(pool.map(run_experiment, subcfgs))
        rows: List[Dict] = []
        verdicts: Dict[str, bool] = {}
        summary: Dict = {}
        for name, sub in zip(names, bundles):
            for key, ok in sub.verdicts.items():
                verdicts[f"{name}.{key}"] = ok
            for key, val in sub.summary.items():
                summary[f"{name}.{key}"] = val
            rows.append({"experiment": name, "pass": sub.all_pass})
        return ResultBundle(echo, rows, summary, verdicts, time.perf_counter() - start)
    runner = _RUNNERS[cfg.experiment]
    try:
        rows, summary, verdicts = runner(cfg)
    except ConformalGapError as e:
        raise type(e)(f"[{cfg.experiment}] {e}") from e
    return ResultBundle(echo, rows, summary, verdicts, time.perf_counter() - start)
