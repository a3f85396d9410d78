"""Desk-scale numerics for overlapping nonlinear contraction systems:
transfer-operator norm decay, interval-exchange partitions, self-conformal
measures, empirical Fourier decay, and fractal uncertainty principles."""

__version__ = "0.1.0"

from .errors import ConformalGapError
from .grids import GridFunction, b_norm
from .maps import (
    AffineMap,
    ComposedMap,
    ConstantsReport,
    Ifs,
    MoebiusMap,
    attractor_cover,
    builtin_ifs,
    compose_word,
    contraction_bounds,
    eval_map,
    ifs_from_description,
    resolve_ifs,
    uni_margin,
)
from .measures import (
    DiscreteMeasure,
    ErgodicReport,
    FrostmanReport,
    doubling_constant,
    frostman_exponents,
    lyapunov_entropy,
    measure_refine,
    random_measure,
)
from .partition import (
    IntervalCover,
    PartitionResult,
    auto_partition,
    build_partition,
    build_uni_pair,
    find_disjoint_pair,
    interval_cover,
    verify_partition,
)
from .fourier import (
    DecayFit,
    RegularWordSet,
    SumProductParams,
    block_length_for_frequency,
    decay_fit,
    exp_sum,
    fourier_transform,
    nonconcentration_count,
    regular_words,
    sum_product_params,
    zeta_values,
)
from .fup import (
    FupResult,
    ThickenedSet,
    fup_exponent,
    fup_norm,
    kernel_check,
    schur_bound,
    theorem_beta,
    thicken,
)
from .transfer import (
    ComplexExponent,
    DolgopyatConfig,
    SpectralGapReport,
    apply_sub_transfer,
    apply_transfer,
    classify_word,
    cone_check,
    default_dolgopyat_config,
    disintegration_residual,
    dolgopyat_apply,
    dolgopyat_select_J,
    iterate_norms,
    sample_cone_pair,
)
from .words import Word, concat, interleave, repeat, word
