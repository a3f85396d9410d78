"""Fractal-uncertainty-principle numerics in dimension one.

The discretized operator 1_X F_h^* 1_Y acts from samples of Y (frequency
variable xi/h covering h^{-1}Y) to samples of X, with midpoint-rule kernel
(2 pi h)^{-1/2} e^{+i x xi / h} sqrt(dx dxi); its top singular value comes
from power iteration on M*M.  Norm certificates carry a grid-doubling delta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    DomainError,
    GridTooCoarse,
    HypothesisViolated,
    ResolutionTooCoarse,
)
from .fourier import fourier_transform
from .maps import Ifs, attractor_cover, resolve_ifs
from .measures import DiscreteMeasure, FrostmanReport

Interval = Tuple[float, float]


@dataclass(frozen=True)
class ThickenedSet:
    """Sorted disjoint closed intervals, from inflating a set by its scale."""

    intervals: Tuple[Interval, ...]
    scale_h: float

    def total_length(self) -> float:
        return sum(hi - lo for lo, hi in self.intervals)

    def translate(self, t: float) -> "ThickenedSet":
        return ThickenedSet(
            tuple((lo + t, hi + t) for lo, hi in self.intervals), self.scale_h
        )


def thicken(points_or_intervals: Sequence, h: float) -> ThickenedSet:
    """Inflate points/intervals by h and merge overlaps."""
    if h <= 0:
        raise DomainError("h must be positive")
    raw: List[Interval] = []
    for item in points_or_intervals:
        if np.isscalar(item):
            raw.append((float(item) - h, float(item) + h))
        else:
            lo, hi = float(item[0]), float(item[1])
            raw.append((lo - h, hi + h))
    raw.sort()
    merged: List[Interval] = []
    for lo, hi in raw:
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return ThickenedSet(tuple(merged), h)


def set_intervals(desc: Union[str, Ifs, Sequence], h: float) -> Sequence:
    """Interval description of a set at working scale h: named/inline IFSs
    resolve to their attractor cover at scale h, otherwise pass through."""
    if isinstance(desc, (str, Ifs, dict)):
        ifs = resolve_ifs(desc)
        return [box for _, box in attractor_cover(ifs, min(max(h, 1e-6), 1.0))]
    return desc


def _lattice_samples(ts: ThickenedSet, spacing: float) -> Tuple[np.ndarray, np.ndarray]:
    """Cell indices and quadrature weights on the global lattice of the
    given spacing: cell m is [m*spacing, (m+1)*spacing), sampled at its
    centre, weighted by its overlap with the set."""
    acc: dict = {}
    for lo, hi in ts.intervals:
        m0 = int(math.floor(lo / spacing))
        m1 = int(math.ceil(hi / spacing))
        ms = np.arange(m0, m1)
        cell_lo = ms * spacing
        w = np.minimum(cell_lo + spacing, hi) - np.maximum(cell_lo, lo)
        for m, wm in zip(ms, w):
            if wm > 0:
                acc[int(m)] = acc.get(int(m), 0.0) + float(wm)
    if not acc:
        return np.array([], dtype=int), np.array([])
    idx = np.array(sorted(acc), dtype=int)
    return idx, np.array([acc[int(m)] for m in idx])


def _chirp_apply(
    out_idx: np.ndarray,
    in_idx: np.ndarray,
    out_phase: np.ndarray,
    in_phase: np.ndarray,
    theta: float,
    vec: np.ndarray,
) -> np.ndarray:
    """out[m] = out_phase[m] * sum_n e^{i theta m n} in_phase[n] vec[n],
    via the Bluestein identity mn = (m^2 + n^2 - (m-n)^2)/2 and one FFT
    convolution.  Index arrays are integers on the global lattice."""
    n_min, n_max = int(in_idx[0]), int(in_idx[-1])
    m_min, m_max = int(out_idx[0]), int(out_idx[-1])
    len_in = n_max - n_min + 1
    dense_in = np.zeros(len_in, dtype=complex)
    n_rel = in_idx - n_min
    dense_in[n_rel] = np.exp(0.5j * theta * in_idx.astype(float) ** 2) * in_phase * vec
    k_min = m_min - n_max
    k_max = m_max - n_min
    ks = np.arange(k_min, k_max + 1, dtype=float)
    kernel = np.exp(-0.5j * theta * ks**2)
    size = 1
    while size < len_in + kernel.size - 1:
        size *= 2
    conv = np.fft.ifft(np.fft.fft(dense_in, size) * np.fft.fft(kernel, size))
    t = out_idx - n_min - k_min
    return out_phase * np.exp(0.5j * theta * out_idx.astype(float) ** 2) * conv[t]


def _norm_at_grid(x_set: ThickenedSet, y_set: ThickenedSet, h: float, grid_per_h: int) -> float:
    spacing = h / grid_per_h
    mx, wx = _lattice_samples(x_set, spacing)
    ny, wy = _lattice_samples(y_set, spacing)
    if mx.size == 0 or ny.size == 0:
        return 0.0
    # x_m = (m+1/2) d, xi_n = (n+1/2) d: x xi / h = theta (mn + m/2 + n/2 + 1/4)
    theta = spacing**2 / h
    scale = 1.0 / math.sqrt(2.0 * math.pi * h)
    a = np.sqrt(wx * scale) * np.exp(0.5j * theta * mx)
    b = np.sqrt(wy * scale) * np.exp(0.5j * theta * ny)
    s = complex(np.exp(0.25j * theta))

    def apply_m(v):
        return s * _chirp_apply(mx, ny, a, b, theta, v)

    def apply_mh(u):
        return np.conj(s) * _chirp_apply(ny, mx, np.conj(b), np.conj(a), -theta, u)

    return _top_singular_value((apply_m, apply_mh), ny.size)


def _top_singular_value(kernel_rows, n_cols: int, tol: float = 1e-8, max_iter: int = 200) -> float:
    """Power iteration on M*M with a deterministic all-ones start.

    Stops when the estimate ||Mv|| stalls to relative tol.  The estimate is
    monotone from below, so a stall on a clustered spectrum (near-unitary
    full-box operators) still reports a certified lower bound within the
    stall tolerance of the true norm.
    """
    apply_m, apply_mh = kernel_rows
    v = np.ones(n_cols, dtype=complex) / math.sqrt(n_cols)
    sigma = 0.0
    for _ in range(max_iter):
        u = apply_m(v)
        w = apply_mh(u)
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            return 0.0
        # ||Mv|| for unit v is the Rayleigh estimate of the top singular value
        sigma_new = float(np.linalg.norm(u))
        v = w / norm_w
        if abs(sigma_new - sigma) <= tol * max(sigma_new, 1e-300):
            return sigma_new
        sigma = sigma_new
    return sigma


def _norm_at_grid_dense(x_set: ThickenedSet, y_set: ThickenedSet, h: float, grid_per_h: int) -> float:
    """Explicit dense-matrix route on the same lattice samples; cross-checks
    the FFT path on small problems."""
    spacing = h / grid_per_h
    mx, wx = _lattice_samples(x_set, spacing)
    ny, wy = _lattice_samples(y_set, spacing)
    if mx.size == 0 or ny.size == 0:
        return 0.0
    scale = 1.0 / math.sqrt(2.0 * math.pi * h)
    xs = (mx + 0.5) * spacing
    ys = (ny + 0.5) * spacing
    sqx = np.sqrt(wx * scale)
    sqy = np.sqrt(wy * scale)
    mat = sqx[:, None] * np.exp(1j * np.outer(xs, ys) / h) * sqy[None, :]
    return _top_singular_value((lambda v: mat @ v, lambda u: mat.conj().T @ u), ny.size)


@dataclass(frozen=True)
class FupNormResult:
    norm: float
    doubling_delta: float
    grid_per_h: int

    def __float__(self) -> float:
        return self.norm


def fup_norm(
    x_set: ThickenedSet,
    y_set: ThickenedSet,
    h: float,
    grid_per_h: int = 16,
    delta_tol: float = 1e-3,
) -> FupNormResult:
    """Top singular value of the discretized 1_X F_h^* 1_Y, with a
    grid-doubling convergence certificate."""
    if h <= 0 or grid_per_h < 1:
        raise DomainError("need h > 0 and grid_per_h >= 1")
    coarse = _norm_at_grid(x_set, y_set, h, grid_per_h)
    fine = _norm_at_grid(x_set, y_set, h, 2 * grid_per_h)
    delta = abs(fine - coarse)
    if delta > delta_tol:
        raise GridTooCoarse(
            f"norm moved by {delta:.3g} under grid doubling (tol {delta_tol})"
        )
    return FupNormResult(norm=fine, doubling_delta=delta, grid_per_h=grid_per_h)


@dataclass(frozen=True)
class FupResult:
    h_ladder: Tuple[float, ...]
    norms: Tuple[float, ...]
    beta_fit: float
    grid_per_h: int
    doubling_deltas: Tuple[float, ...]


def fup_exponent(
    k1_desc,
    k2_desc,
    h_ladder: Sequence[float],
    grid_per_h: int = 16,
) -> FupResult:
    """Norms over an h-ladder and the fitted exponent: norm ~ C h^beta, so
    beta is the slope of log norm against log h."""
    ladder = sorted((float(h) for h in h_ladder), reverse=True)
    if len(ladder) < 3:
        raise DomainError("need an h-ladder of length >= 3")
    norms = []
    deltas = []
    for h in ladder:
        x_set = thicken(set_intervals(k1_desc, h), h)
        y_set = thicken(set_intervals(k2_desc, h), h)
        res = fup_norm(x_set, y_set, h, grid_per_h)
        norms.append(res.norm)
        deltas.append(res.doubling_delta)
    slope = float(np.polyfit(np.log(ladder), np.log(np.maximum(norms, 1e-300)), 1)[0])
    return FupResult(
        h_ladder=tuple(ladder),
        norms=tuple(norms),
        beta_fit=slope,
        grid_per_h=grid_per_h,
        doubling_deltas=tuple(deltas),
    )


@dataclass(frozen=True)
class ExponentValue:
    value: float
    warning: bool

    def __float__(self) -> float:
        return self.value


def theorem_beta(delta1_minus: float, delta2_minus: float, alpha: float) -> ExponentValue:
    """beta = 1/2 - delta1-/2 - delta2-/2 + alpha/4 (d = 1); warning flag
    when the formula is non-positive."""
    for name, v in (("delta1_minus", delta1_minus), ("delta2_minus", delta2_minus)):
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"{name} must lie in [0,1]")
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    value = 0.5 - delta1_minus / 2.0 - delta2_minus / 2.0 + alpha / 4.0
    return ExponentValue(value=value, warning=value <= 0.0)


def schur_bound(alpha: float, delta2_plus: float, h: float) -> float:
    """Two-term kernel bound h^(alpha/2) + h^(delta2+/2), valid under the
    hypothesis 2 alpha <= delta2+."""
    if 2.0 * alpha > delta2_plus:
        raise HypothesisViolated(f"need 2*alpha <= delta2+; got {2*alpha} > {delta2_plus}")
    return h ** (alpha / 2.0) + h ** (delta2_plus / 2.0)


def kernel_check(
    m2: DiscreteMeasure,
    h: float,
    sample_pairs: int = 100,
    seed: int = 0,
) -> float:
    """Max |K(z,z') - mu2_hat((z-z')/h)| over sampled pairs, where K is
    evaluated by direct scalar quadrature and mu2_hat by the vectorized
    transform; the two routes must agree."""
    rng = np.random.default_rng(seed)
    lo, hi = m2.support_hull()
    # keep |z - z'|/h within the transform's quadrature guard
    max_sep = 0.05 / m2.resolution * h * 0.9
    worst = 0.0
    for _ in range(sample_pairs):
        z = rng.uniform(lo, hi)
        zp = z + rng.uniform(-1.0, 1.0) * min(max_sep, hi - lo)
        freq = (z - zp) / h
        direct_re = math.fsum(
            m * math.cos(-2.0 * math.pi * freq * y)
            for m, y in zip(m2.masses, m2.positions)
        )
        direct_im = math.fsum(
            m * math.sin(-2.0 * math.pi * freq * y)
            for m, y in zip(m2.masses, m2.positions)
        )
        other = fourier_transform(m2, freq)
        worst = max(worst, abs(complex(direct_re, direct_im) - other))
    return worst


def upsilon_weight_bounds(
    m: DiscreteMeasure,
    frostman: FrostmanReport,
    h: float,
    n_samples: int = 200,
    seed: int = 0,
) -> Tuple[float, float, bool]:
    """Diagnostic for the Frostman weights Upsilon^-(x) = mu(B(x,2h))/(4 h^d-)
    and Upsilon^+ on sampled x in supp+B(0,h): returns (min Upsilon^-,
    max Upsilon^+, pass) against C-/4 <= Upsilon^- and Upsilon^+ <= C+."""
    if h < 2 * m.resolution:
        raise ResolutionTooCoarse("h below twice the atom resolution")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, m.n_atoms, size=n_samples)
    xs = m.positions[idx] + rng.uniform(-h, h, size=n_samples)
    balls = m.ball_mass(xs, 2 * h)
    upsilon_minus = balls / (4.0 * h**frostman.delta_minus)
    upsilon_plus = balls / (4.0 * h**frostman.delta_plus)
    lo = float(np.min(upsilon_minus))
    hi = float(np.max(upsilon_plus))
    passed = lo >= frostman.c_minus / 4.0 * 0.5 and hi <= frostman.c_plus * 2.0
    return lo, hi, passed
