"""Complex transfer operators, their sub-operators, and damped variants.

The central objects: L_s f = sum_a p_a |phi_a'|^s f(phi_a .), its restriction
to a partition group with conditional weights, the operator disintegration
over group-words, and the randomly damped operators N_s^J = L_{r,w*}^N(chi_J .)
whose cone stability, L2 contraction and modulus domination carry the
spectral-gap mechanism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    BudgetExceeded,
    DensityFailed,
    DomainError,
    InvalidIndex,
    Overflow,
    PreconditionViolated,
    TooShort,
)
from .grids import GridFunction, b_norm, c1_norm
from .maps import Ifs, compose_word, image_interval, inverse_at
from .partition import IntervalCover, PartitionResult, interval_cover
from .words import all_words, repeat


@dataclass(frozen=True)
class ComplexExponent:
    """s = r + ib."""

    r: float
    b: float

    @property
    def s(self) -> complex:
        return complex(self.r, self.b)


def _apply_weighted(pairs, s: complex, f: GridFunction) -> GridFunction:
    """sum over (map, weight) of  w |phi'|^s (f o phi), with the exact
    derivative channel  w |phi'|^s [ s (phi''/phi') f(phi .) + f'(phi .) phi' ]."""
    xs = f.nodes
    vals = np.zeros(f.grid_size, dtype=complex)
    ders = np.zeros(f.grid_size, dtype=complex)
    for phi, p in pairs:
        v, d1, d2 = phi.evaluate(xs)
        fv, fd = f.eval_at(v)
        weight = p * np.exp(s * np.log(np.abs(d1)))
        vals += weight * fv
        ders += weight * (s * (d2 / d1) * fv + fd * d1)
    return GridFunction(vals, ders)


def apply_transfer(ifs: Ifs, s: ComplexExponent, f: GridFunction) -> GridFunction:
    """One application of L_s for the full alphabet."""
    return _apply_weighted(zip(ifs.maps, ifs.probs), s.s, f)


def apply_block_transfer(ifs: Ifs, block_length: int, s: ComplexExponent, f: GridFunction) -> GridFunction:
    """L_s for the depth-N block system {phi_w : w in A^N} with weights p_w."""
    pairs = [
        (compose_word(ifs, w), ifs.word_prob(w))
        for w in all_words(ifs.n_letters, block_length)
    ]
    return _apply_weighted(pairs, s.s, f)


def apply_sub_transfer(
    ifs: Ifs,
    partn: PartitionResult,
    group_index: int,
    s: ComplexExponent,
    f: GridFunction,
) -> GridFunction:
    """L_{s,w} over one partition group with its conditional weights."""
    words = partn.omega_words(group_index)
    pairs = [(compose_word(ifs, w), partn.conditional_probs[w]) for w in words]
    return _apply_weighted(pairs, s.s, f)


# ---------------------------------------------------------------------------
# norm decay


@dataclass(frozen=True)
class SpectralGapReport:
    b_values: Tuple[float, ...]
    r: float
    norms_by_n: Tuple[Tuple[float, ...], ...]
    fitted_rho: float
    fitted_prefactor_exponent: float


def _norm_for(f: GridFunction, b: float) -> float:
    return b_norm(f, b) if b != 0 else c1_norm(f)


def fit_decay_rate(norms: Sequence[float]) -> float:
    """exp(slope) of log-norms against n over the tail half of the iterates."""
    n = len(norms)
    start = n // 2
    ns = np.arange(start, n)
    logs = np.log(np.maximum(np.asarray(norms[start:], dtype=float), 1e-300))
    slope = np.polyfit(ns, logs, 1)[0]
    return float(np.exp(slope))


def iterate_norms(
    ifs: Ifs, s: ComplexExponent, f0: GridFunction, n_max: int
) -> SpectralGapReport:
    """Track ||L_s^n f0||_b for n = 0..n_max and fit the decay rate."""
    if n_max < 5:
        raise DomainError("need n_max >= 5")
    norms = [_norm_for(f0, s.b)]
    f = f0
    for _ in range(n_max):
        f = apply_transfer(ifs, s, f)
        norms.append(_norm_for(f, s.b))
        if norms[-1] > 1e12:
            raise Overflow(f"norm {norms[-1]:.3e}; |r| likely too large")
    return SpectralGapReport(
        b_values=(s.b,),
        r=s.r,
        norms_by_n=(tuple(norms),),
        fitted_rho=fit_decay_rate(norms),
        fitted_prefactor_exponent=math.nan,
    )


def spectral_gap_sweep(
    ifs: Ifs, r: float, b_values: Sequence[float], n_max: int, grid_size: int = 4096
) -> SpectralGapReport:
    """iterate_norms across several b, plus a |b|-prefactor exponent fit."""
    rows = []
    rhos = []
    peaks = []
    for b in b_values:
        rep = iterate_norms(ifs, ComplexExponent(r, b), GridFunction.constant(1.0, grid_size), n_max)
        rows.append(rep.norms_by_n[0])
        rhos.append(rep.fitted_rho)
        norms = np.asarray(rep.norms_by_n[0])
        ns = np.arange(norms.size)
        peaks.append(float(np.max(norms / np.maximum(rep.fitted_rho, 1e-12) ** ns)))
    if len(b_values) >= 2 and all(b != 0 for b in b_values):
        exponent = float(
            np.polyfit(np.log(np.abs(np.asarray(b_values, dtype=float))), np.log(peaks), 1)[0]
        )
    else:
        exponent = math.nan
    return SpectralGapReport(
        b_values=tuple(float(b) for b in b_values),
        r=r,
        norms_by_n=tuple(rows),
        fitted_rho=float(rhos[-1]) if len(rhos) == 1 else float(np.max(rhos)),
        fitted_prefactor_exponent=exponent,
    )


# ---------------------------------------------------------------------------
# disintegration over group-words


def disintegration_residual(
    ifs: Ifs,
    partn: PartitionResult,
    s: ComplexExponent,
    f: GridFunction,
    n: int,
    budget: int = 30_000,
) -> float:
    """Relative sup-distance between (block L_s)^n f and the weighted sum of
    per-group-word compositions  sum_w q_w L_{s,w_n} o ... o L_{s,w_1} f."""
    n_omega = partn.n_groups
    if n_omega**n > budget:
        raise BudgetExceeded(f"|Omega|^n = {n_omega**n} exceeds budget {budget}")
    lhs = f
    for _ in range(n):
        lhs = apply_block_transfer(ifs, partn.block_length_N, s, lhs)

    total = np.zeros(f.grid_size, dtype=complex)
    total_d = np.zeros(f.grid_size, dtype=complex)

    def descend(g: GridFunction, weight: float, depth: int):
        nonlocal total, total_d
        if depth == n:
            total = total + weight * g.values
            total_d = total_d + weight * g.derivatives
            return
        for idx in range(n_omega):
            descend(
                apply_sub_transfer(ifs, partn, idx, s, g),
                weight * partn.group_weights[idx],
                depth + 1,
            )

    descend(f, 1.0, 0)
    scale = max(float(np.max(np.abs(lhs.values))), 1e-300)
    return float(np.max(np.abs(lhs.values - total))) / scale


# ---------------------------------------------------------------------------
# good words


@dataclass(frozen=True)
class GoodWordRecord:
    good: bool
    count: int
    threshold: float
    blocks_checked: int


def classify_word(
    w_string: Sequence[int], partn: PartitionResult, n_blocks: int
) -> GoodWordRecord:
    """Good if at least (q_*)^N n / (5N) of the first floor(n/2N) N-runs are
    all-w*; q_* is the special pair's weight and N = n_blocks."""
    w = tuple(int(i) for i in w_string)
    n = len(w)
    big_n = int(n_blocks)
    if n < 2 * big_n:
        raise TooShort(f"need length >= {2 * big_n}, got {n}")
    runs = n // (2 * big_n)
    count = 0
    for i in range(runs):
        seg = w[i * big_n : (i + 1) * big_n]
        if all(x == 0 for x in seg):
            count += 1
    q_star = partn.group_weights[0]
    threshold = (q_star**big_n) * n / (5.0 * big_n)
    return GoodWordRecord(count >= threshold, count, threshold, runs)


# ---------------------------------------------------------------------------
# damped (random Dolgopyat) operators


@dataclass(frozen=True)
class DolgopyatConfig:
    cone_A: float
    theta: float
    eps_prime: float
    block_N: int
    cutoff_smoothing: float = 1.0

    def __post_init__(self):
        if not self.cone_A > 1:
            raise DomainError("cone_A must exceed 1")
        if not 0 <= self.theta < 0.5:
            raise DomainError("theta must lie in [0, 1/2)")
        if self.eps_prime <= 0:
            raise DomainError("eps_prime must be positive")
        if self.block_N < 1:
            raise DomainError("block_N must be >= 1")


def _pair_maps(ifs: Ifs, partn: PartitionResult, block_n: int):
    a1, a2 = partn.w_star
    return (
        compose_word(ifs, repeat(a1, block_n)),
        compose_word(ifs, repeat(a2, block_n)),
    )


def default_dolgopyat_config(
    ifs: Ifs,
    partn: PartitionResult,
    b: float,
    w_string: Sequence[int] = (),
    eps_prime: float = 0.1,
) -> Tuple[DolgopyatConfig, IntervalCover]:
    """Measured defaults: block_N the smallest with gamma^-N < 1/4 for the
    special sub-IFS, theta = min(eps', 0.1)/2, cone_A = 2 C0 + 4 A3 + 1 with
    C0 the distortion slope bound and A3 read off the realized cutoffs."""
    xs = np.linspace(0.0, 1.0, 257)
    sup_slope = max(
        float(np.max(np.abs(compose_word(ifs, w).evaluate(xs)[1]))) for w in partn.w_star
    )
    gamma_sub = 1.0 / sup_slope
    if gamma_sub <= 1.0:
        raise DomainError("special pair is not contracting")
    block_n = max(1, math.ceil(math.log(4.0) / math.log(gamma_sub)))
    theta = min(eps_prime, 0.1) / 2.0

    cover = interval_cover(ifs, partn, w_string, eps_prime / abs(b))
    m1, m2 = _pair_maps(ifs, partn, block_n)
    c0 = 0.0
    for m in (m1, m2):
        _, d1, d2 = m.evaluate(xs)
        c0 = max(c0, float(np.max(np.abs(d2 / d1))))
    a3 = 0.0
    for (lo, hi), hull in zip(cover.intervals, cover.hulls):
        if hull is None:
            continue
        margin = min(hull[0] - lo, hi - hull[1])
        a3 = max(a3, 1.5 / margin * eps_prime / abs(b))
    cfg = DolgopyatConfig(
        cone_A=2 * c0 + 4 * a3 + 1.0,
        theta=theta,
        eps_prime=eps_prime,
        block_N=block_n,
    )
    return cfg, cover


def admissible_indices(cover: IntervalCover) -> FrozenSet[Tuple[int, int]]:
    """J_s: branch index 1 or 2 crossed with the hit interval indices."""
    return frozenset((i, j) for i in (1, 2) for j in cover.hit_indices())


def _smoothstep(t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t), 6.0 * t * (1.0 - t)


def _cutoff_on_interval(
    xs: np.ndarray, box, hull, smoothing: float
) -> Tuple[np.ndarray, np.ndarray]:
    """C1 bump: 1 on the hull, 0 outside the box, smoothstep ramps between."""
    lo, hi = box
    k_lo, k_hi = hull
    ramp_lo = max((k_lo - lo) * smoothing, 1e-300)
    ramp_hi = max((hi - k_hi) * smoothing, 1e-300)
    val = np.ones_like(xs)
    der = np.zeros_like(xs)
    left = xs < k_lo
    sval, sder = _smoothstep((xs[left] - (k_lo - ramp_lo)) / ramp_lo)
    val[left] = sval
    der[left] = sder / ramp_lo
    right = xs > k_hi
    sval, sder = _smoothstep(((k_hi + ramp_hi) - xs[right]) / ramp_hi)
    val[right] = sval
    der[right] = -sder / ramp_hi
    outside = (xs < lo) | (xs > hi)
    val[outside] = 0.0
    der[outside] = 0.0
    return val, der


def damping_weight(
    ifs: Ifs,
    partn: PartitionResult,
    cover: IntervalCover,
    J,
    cfg: DolgopyatConfig,
    ys: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """chi_J on the grid: 1 - theta*chi_j(phi_{alpha_i^N}^{-1} y) on each
    Z_j^i = phi_{alpha_i^N}(V_j) with (i,j) damped, and 1 elsewhere."""
    indices = getattr(J, "indices", J)
    allowed = admissible_indices(cover)
    for ij in indices:
        if tuple(ij) not in allowed:
            raise InvalidIndex(f"{ij} outside the admissible index set")
    maps = _pair_maps(ifs, partn, cfg.block_N)
    val = np.ones_like(ys)
    der = np.zeros_like(ys)
    for i, j in indices:
        m = maps[i - 1]
        z_lo, z_hi = image_interval(m, cover.intervals[j])
        mask = (ys >= z_lo) & (ys <= z_hi)
        if not np.any(mask):
            continue
        x, dx = inverse_at(m, ys[mask])
        cval, cder = _cutoff_on_interval(
            x, cover.intervals[j], cover.hulls[j], cfg.cutoff_smoothing
        )
        val[mask] = val[mask] - cfg.theta * cval
        der[mask] = der[mask] - cfg.theta * cder * dx
    return val, der


def dolgopyat_apply(
    ifs: Ifs,
    partn: PartitionResult,
    cover: IntervalCover,
    J,
    cfg: DolgopyatConfig,
    s: ComplexExponent,
    f: GridFunction,
) -> GridFunction:
    """N_s^J f = L_{r,w*}^N (chi_J f); the damping acts once, the real
    sub-operator is applied block_N times."""
    cval, cder = damping_weight(ifs, partn, cover, J, cfg, f.nodes)
    g = GridFunction(cval * f.values, cder * f.values + cval * f.derivatives)
    real_s = ComplexExponent(s.r, 0.0)
    for _ in range(cfg.block_N):
        g = apply_sub_transfer(ifs, partn, 0, real_s, g)
    return g


def cone_check(f: GridFunction, cone_a: float, b: float) -> bool:
    """Membership in C_{A|b|}: positive values with |f'| <= A|b| f."""
    v = f.values
    if np.max(np.abs(v.imag)) > 1e-9 * max(np.max(np.abs(v.real)), 1e-300):
        return False
    re = v.real
    if np.any(re <= 0):
        return False
    bound = cone_a * abs(b) * re
    return bool(np.all(np.abs(f.derivatives) <= bound * (1 + 1e-12) + 1e-300))


@dataclass(frozen=True)
class SelectionResult:
    indices: FrozenSet[Tuple[int, int]]
    dense: bool
    theta_max: Dict[Tuple[int, int], float]
    dichotomy_ok: Dict[Tuple[int, int], bool]
    triangle_stats: Dict[int, Tuple[float, float]]

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, item) -> bool:
        return tuple(item) in self.indices


def dolgopyat_select_J(
    ifs: Ifs,
    partn: PartitionResult,
    cover: IntervalCover,
    cfg: DolgopyatConfig,
    s: ComplexExponent,
    f: GridFunction,
    H: GridFunction,
    samples_per_interval: int = 17,
) -> SelectionResult:
    """Damping set via the oscillation statistics Theta_1, Theta_2.

    Theta_i compares |z_1 + z_2| (complex exponent s upstairs) against the
    branch-i-damped positive envelope (real exponent r downstairs); (i,j) is
    selected when Theta_i <= 1 throughout V_j.  Raises unless the selected
    set is dense (every hit interval has a selected neighbour within two
    indices): outside the nonlinear regime no dense set exists.
    """
    if not cone_check(H, cfg.cone_A, s.b):
        raise PreconditionViolated("H is not in the cone C_{A|b|}")
    hv, hd = H.values.real, H.derivatives
    if np.any(np.abs(f.values) > hv * (1 + 1e-9) + 1e-300):
        raise PreconditionViolated("|f| <= H fails on the grid")
    if np.any(np.abs(f.derivatives) > cfg.cone_A * abs(s.b) * hv * (1 + 1e-9) + 1e-300):
        raise PreconditionViolated("|f'| <= A|b|H fails on the grid")

    m1, m2 = _pair_maps(ifs, partn, cfg.block_N)
    hit = cover.hit_indices()
    one_minus = 1.0 - 2.0 * cfg.theta
    indices = set()
    theta_max: Dict[Tuple[int, int], float] = {}
    dichotomy: Dict[Tuple[int, int], bool] = {}
    triangle: Dict[int, Tuple[float, float]] = {}
    for j in hit:
        lo, hi = cover.intervals[j]
        xs = np.linspace(lo, hi, samples_per_interval)
        zs = []
        us = []
        for m in (m1, m2):
            v, d1, _ = m.evaluate(xs)
            fv, _ = f.eval_at(v)
            hvv, _ = H.eval_at(v)
            zs.append(np.exp(s.s * np.log(np.abs(d1))) * fv)
            us.append(np.exp(s.r * np.log(np.abs(d1))) * hvv.real)
            ratio = np.abs(fv) / np.maximum(hvv.real, 1e-300)
            i_branch = 1 if m is m1 else 2
            dichotomy[(i_branch, j)] = bool(
                np.all(ratio <= 0.75 + 1e-9) or np.all(ratio >= 0.25 - 1e-9)
            )
        num = np.abs(zs[0] + zs[1])
        theta1 = num / (one_minus * us[0] + us[1])
        theta2 = num / (us[0] + one_minus * us[1])
        theta_max[(1, j)] = float(np.max(theta1))
        theta_max[(2, j)] = float(np.max(theta2))
        if theta_max[(1, j)] <= 1.0:
            indices.add((1, j))
        if theta_max[(2, j)] <= 1.0:
            indices.add((2, j))
        with np.errstate(divide="ignore", invalid="ignore"):
            mods = np.abs(zs[0]) / np.maximum(np.abs(zs[1]), 1e-300)
            big_l = float(np.max(np.maximum(mods, 1.0 / np.maximum(mods, 1e-300))))
        ang = np.angle(zs[0]) - np.angle(zs[1])
        eps_angle = float(np.min(np.abs((ang + np.pi) % (2 * np.pi) - np.pi)))
        triangle[j] = (big_l, eps_angle)

    dense = True
    selected_js = {j for _, j in indices}
    for j in hit:
        if not any(abs(j2 - j) <= 2 for j2 in selected_js):
            dense = False
            break
    if not dense:
        from .maps import uni_margin

        lo_m, hi_m = uni_margin(ifs, partn.w_star[0], partn.w_star[1])
        raise DensityFailed(
            f"selected set not dense (pair margin [{lo_m:.3g}, {hi_m:.3g}]); "
            "parameters outside the damping regime"
        )
    return SelectionResult(
        indices=frozenset(indices),
        dense=dense,
        theta_max=theta_max,
        dichotomy_ok=dichotomy,
        triangle_stats=triangle,
    )


# ---------------------------------------------------------------------------
# seeded cone samples for the property suite


def _trig_poly(rng: np.random.Generator, xs: np.ndarray, modes: int, target_slope: float):
    ks = np.arange(1, modes + 1)
    a = rng.standard_normal(modes) / ks
    b = rng.standard_normal(modes) / ks
    val = np.zeros_like(xs)
    der = np.zeros_like(xs)
    for k, ak, bk in zip(ks, a, b):
        val += ak * np.cos(2 * np.pi * k * xs) + bk * np.sin(2 * np.pi * k * xs)
        der += 2 * np.pi * k * (-ak * np.sin(2 * np.pi * k * xs) + bk * np.cos(2 * np.pi * k * xs))
    peak = max(float(np.max(np.abs(der))), 1e-300)
    scale = target_slope / peak
    return val * scale, der * scale


def sample_cone_pair(
    rng: np.random.Generator,
    grid_size: int,
    cone_a: float,
    b: float,
    modes: int = 6,
    envelope_ratio_range: Tuple[float, float] = (0.3, 0.7),
) -> Tuple[GridFunction, GridFunction]:
    """(H, f): H = exp(g) in the cone, f = c H e^{i psi} with c < 3/4.

    The modulus ratio stays below the 3/4 dichotomy constant, the regime in
    which a dense damping set exists for every phase; envelope-touching
    aligned-phase inputs are the documented failure mode of the selection.
    """
    xs = np.linspace(0.0, 1.0, grid_size)
    slope_h = min(0.4 * cone_a * abs(b), 40.0)
    g, gd = _trig_poly(rng, xs, modes, slope_h)
    g = g - g.max()
    hv = np.exp(g)
    H = GridFunction(hv.astype(complex), (gd * hv).astype(complex))
    slope_psi = min(0.3 * cone_a * abs(b), 30.0)
    psi, psid = _trig_poly(rng, xs, modes, slope_psi)
    c = rng.uniform(*envelope_ratio_range)
    fv = c * hv * np.exp(1j * psi)
    fd = c * np.exp(1j * psi) * (gd * hv + 1j * psid * hv)
    return H, GridFunction(fv, fd)
