#!/usr/bin/env python3
"""Produce the golden regression values (explicitly labeled bootstrap run).

Writes tests/golden/goldens.json.  Rerun only to re-baseline after a
reviewed change; the test suite compares against the frozen copy.
"""

import json
import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from conformal_gap.fourier import decay_fit, fourier_transform
from conformal_gap.fup import fup_exponent
from conformal_gap.grids import GridFunction
from conformal_gap.maps import builtin_ifs
from conformal_gap.measures import doubling_constant, lyapunov_entropy, measure_refine
from conformal_gap.partition import auto_partition
from conformal_gap.transfer import ComplexExponent, iterate_norms


def main(out_path: str) -> None:
    golden = {}

    g23 = builtin_ifs("gauss23")
    for b in (50.0, 100.0, 200.0):
        rep = iterate_norms(g23, ComplexExponent(0.0, b), GridFunction.constant(1.0, 4096), 30)
        golden[f"gauss23_rho_b{int(b)}"] = rep.fitted_rho

    m_g = measure_refine(g23, 1e-6)
    fit = decay_fit(m_g, 10.0, 1e4, 10)
    golden["gauss23_decay_alpha"] = fit.alpha_fit

    erg = lyapunov_entropy(g23, 200, 400, seed=1)
    golden["gauss23_lyapunov"] = erg.lyapunov
    golden["gauss23_lyapunov_se"] = erg.standard_error

    m_c = measure_refine(builtin_ifs("cantor3"), 3.0**-8)
    golden["cantor3_doubling"] = doubling_constant(m_c, [3.0**-6, 3.0**-5, 3.0**-4])
    m_c_fine = measure_refine(builtin_ifs("cantor3"), 3e-6)
    golden["cantor3_mu_hat_1"] = abs(fourier_transform(m_c_fine, 1.0))

    fup = fup_exponent("cantor3", "cantor3", [3.0**-k for k in (3, 4, 5, 6)], 16)
    golden["cantor3_fup_beta"] = fup.beta_fit
    golden["cantor3_fup_norms"] = list(fup.norms)

    n_fig, _ = auto_partition(builtin_ifs("figure1"))
    golden["figure1_partition_N"] = n_fig

    path = pathlib.Path(out_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(golden, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path}")
    for key in sorted(golden):
        print(f"  {key}: {golden[key]}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/golden/goldens.json")
