"""Atomic approximations of self-conformal and restricted random measures.

Refinement splits cylinders until their image diameter drops below a
tolerance and places one atom per cylinder at the image midpoint (O(diam^2)
quadrature error for Lipschitz integrands after mass-weighted summation).
Overlapping cylinders are never merged: the measure is a pushforward sum and
any binning would be arbitrary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

import numpy as np

from .errors import BudgetExceeded, DomainError, ScaleBelowResolution
from .maps import Ifs, matrix_compose, matrix_image
from .partition import PartitionResult, block_choices

_MASS_FLOOR = 1e-250


@dataclass
class DiscreteMeasure:
    """Sorted atoms (position, mass) with the generating resolution."""

    positions: np.ndarray
    masses: np.ndarray
    resolution: float
    provenance: str = ""
    _cum: np.ndarray = field(init=False, repr=False, default=None)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        mas = np.asarray(self.masses, dtype=float)
        if pos.shape != mas.shape or pos.ndim != 1 or pos.size == 0:
            raise DomainError("positions and masses must be matching 1-d arrays")
        if np.any(mas <= 0):
            raise DomainError("masses must be positive")
        if abs(mas.sum() - 1.0) > 1e-10:
            raise DomainError(f"masses sum to {mas.sum()}, not 1")
        if self.resolution <= 0:
            raise DomainError("resolution must be positive")
        order = np.argsort(pos, kind="stable")
        self.positions = pos[order]
        self.masses = mas[order]
        self._cum = np.concatenate(([0.0], np.cumsum(self.masses)))

    @property
    def n_atoms(self) -> int:
        return self.positions.size

    def total_mass(self) -> float:
        return float(self.masses.sum())

    def interval_mass(self, lo, hi) -> np.ndarray:
        """Mass of closed intervals [lo, hi]; boundary atoms count fully."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        left = np.searchsorted(self.positions, lo, side="left")
        right = np.searchsorted(self.positions, hi, side="right")
        return self._cum[right] - self._cum[left]

    def ball_mass(self, centers, radius: float) -> np.ndarray:
        c = np.asarray(centers, dtype=float)
        return self.interval_mass(c - radius, c + radius)

    def integrate(self, fn: Callable[[np.ndarray], np.ndarray]) -> complex:
        return complex(np.sum(self.masses * fn(self.positions)))

    def support_hull(self) -> Tuple[float, float]:
        return float(self.positions[0]), float(self.positions[-1])


def measure_refine(ifs: Ifs, diameter_tol: float, atom_budget: int = 2_000_000) -> DiscreteMeasure:
    """Self-conformal measure of the IFS: split cylinders until their image
    diameter is below tol, one midpoint atom of mass p_w per leaf."""
    if not 0.0 < diameter_tol < 1.0:
        raise DomainError("diameter_tol must lie in (0, 1)")
    positions: List[float] = []
    masses: List[float] = []
    stack = [(np.eye(2), (0.0, 1.0), 1.0, 0)]
    n_emitted = 0
    while stack:
        mat, (lo, hi), mass, depth = stack.pop()
        if mass < _MASS_FLOOR:
            # parabolic spines shrink harmonically while masses halve;
            # branches below the floor carry no representable weight
            continue
        if hi - lo < diameter_tol and depth > 0:
            positions.append(0.5 * (lo + hi))
            masses.append(mass)
            n_emitted += 1
            if n_emitted > atom_budget:
                raise BudgetExceeded(f"atom budget {atom_budget} exceeded")
            continue
        for a in reversed(range(ifs.n_letters)):
            child = matrix_compose(mat, ifs.maps[a])
            stack.append((child, matrix_image(child), mass * ifs.probs[a], depth + 1))
    return DiscreteMeasure(
        np.array(positions), np.array(masses), diameter_tol, provenance=f"ifs:{ifs.name}"
    )


def random_measure(
    ifs: Ifs,
    partn: PartitionResult,
    w_string: Sequence[int],
    diameter_tol: float,
    atom_budget: int = 2_000_000,
) -> DiscreteMeasure:
    """mu_w: blocks drawn from the named groups with conditional weights,
    then from the special pair with weight 1/2 each; empty w_string gives the
    special measure mu_* itself."""
    if not 0.0 < diameter_tol < 1.0:
        raise DomainError("diameter_tol must lie in (0, 1)")
    w_string = tuple(int(i) for i in w_string)
    for i in w_string:
        partn.omega_words(i)
    positions: List[float] = []
    masses: List[float] = []
    stack = [(np.eye(2), (0.0, 1.0), 1.0, 0)]
    n_emitted = 0
    while stack:
        mat, (lo, hi), mass, pos = stack.pop()
        if mass < _MASS_FLOOR:
            continue
        if hi - lo < diameter_tol and pos > 0:
            positions.append(0.5 * (lo + hi))
            masses.append(mass)
            n_emitted += 1
            if n_emitted > atom_budget:
                raise BudgetExceeded(f"atom budget {atom_budget} exceeded")
            continue
        for blk in reversed(block_choices(partn, w_string, pos)):
            child = mat
            for a in blk:
                child = matrix_compose(child, ifs.maps[a])
            p_blk = partn.conditional_probs[blk] if pos < len(w_string) else 0.5
            stack.append((child, matrix_image(child), mass * p_blk, pos + 1))
    return DiscreteMeasure(
        np.array(positions),
        np.array(masses),
        diameter_tol,
        provenance=f"random:{ifs.name}:{list(w_string)}",
    )


def pushforward(ifs: Ifs, m: DiscreteMeasure) -> DiscreteMeasure:
    """One self-conformality step: sum_a p_a (phi_a)_* m."""
    pos: List[np.ndarray] = []
    mas: List[np.ndarray] = []
    worst_slope = 0.0
    for phi, p in zip(ifs.maps, ifs.probs):
        v, d1, _ = phi.evaluate(m.positions)
        pos.append(v)
        mas.append(p * m.masses)
        worst_slope = max(worst_slope, float(np.max(np.abs(d1))))
    return DiscreteMeasure(
        np.concatenate(pos),
        np.concatenate(mas),
        m.resolution * worst_slope,
        provenance=m.provenance + "+push",
    )


@dataclass(frozen=True)
class FrostmanReport:
    delta_minus: float
    delta_plus: float
    c_minus: float
    c_plus: float
    scale_range: Tuple[float, float]
    fit_residual: float
    flagged: bool


def frostman_exponents(
    m: DiscreteMeasure,
    h_min: float,
    h_max: float,
    n_scales: int = 16,
    n_centers: int = 400,
) -> FrostmanReport:
    """Two-sided ball-mass exponents from log-log envelope fits.

    delta_plus/c_plus fit sup_x mu(B(x,r)) over sampled support centers,
    delta_minus/c_minus fit the inf; the top and bottom 10% of scales are
    excluded to dampen boundary effects.
    """
    if h_min < 2 * m.resolution:
        raise ScaleBelowResolution(
            f"h_min {h_min} below twice the resolution {m.resolution}"
        )
    if not (0 < h_min < h_max):
        raise DomainError("need 0 < h_min < h_max")
    step = max(1, m.n_atoms // n_centers)
    centers = m.positions[::step]
    radii = np.geomspace(h_min, h_max, n_scales)
    sup_mass = np.empty(n_scales)
    inf_mass = np.empty(n_scales)
    for k, r in enumerate(radii):
        masses = m.ball_mass(centers, r)
        # sub-representable atoms cancel to exactly 0 in the cumulative sums;
        # such centers carry no measurable mass and drop out of the envelopes
        masses = masses[masses > 0]
        sup_mass[k] = masses.max()
        inf_mass[k] = masses.min()
    trim = max(1, n_scales // 10)
    sl = slice(trim, n_scales - trim)
    logs_r = np.log(radii[sl])
    up = np.polyfit(logs_r, np.log(sup_mass[sl]), 1)
    lo = np.polyfit(logs_r, np.log(inf_mass[sl]), 1)
    resid = max(
        float(np.max(np.abs(np.polyval(up, logs_r) - np.log(sup_mass[sl])))),
        float(np.max(np.abs(np.polyval(lo, logs_r) - np.log(inf_mass[sl])))),
    )
    delta_plus, c_plus = float(up[0]), float(np.exp(up[1]))
    delta_minus, c_minus = float(lo[0]), float(np.exp(lo[1]))
    return FrostmanReport(
        delta_minus=delta_minus,
        delta_plus=delta_plus,
        c_minus=c_minus,
        c_plus=c_plus,
        scale_range=(h_min, h_max),
        fit_residual=resid,
        flagged=delta_plus > delta_minus + 0.05,
    )


def doubling_constant(m: DiscreteMeasure, scale_ladder: Sequence[float]) -> float:
    """sup over supported centers and scales of mu(B(x,2R))/mu(B(x,R))."""
    worst = 1.0
    for r in scale_ladder:
        if r < 2 * m.resolution:
            raise ScaleBelowResolution(f"scale {r} below twice the resolution")
        small = m.ball_mass(m.positions, r)
        big = m.ball_mass(m.positions, 2 * r)
        worst = max(worst, float(np.max(big / small)))
    return worst


@dataclass(frozen=True)
class ErgodicReport:
    lyapunov: float
    entropy: float
    dimension_ratio: float
    standard_error: float

    def __post_init__(self):
        if self.lyapunov <= 0:
            raise DomainError("Lyapunov exponent must be positive")
        if self.entropy < -1e-12:
            raise DomainError("entropy must be nonnegative")


def lyapunov_entropy(
    ifs: Ifs, n_samples: int = 200, orbit_length: int = 400, seed: int = 0
) -> ErgodicReport:
    """Monte-Carlo Birkhoff averages of tau(a) = -log|phi_{a_1}'(pi(sigma a))|.

    The projection point of each shifted sequence comes from the backward
    orbit x_k = phi_{a_{k+1}}(x_{k+1}); a burn-in tail absorbs the anchor.
    The entropy is the closed form -sum p log p, no sampling.
    """
    if orbit_length < 50:
        raise DomainError("orbit_length must be >= 50")
    rng = np.random.default_rng(seed)
    entropy = -sum(p * math.log(p) for p in ifs.probs)
    burn = 50
    letters_all = rng.choice(
        ifs.n_letters, size=(n_samples, orbit_length), p=np.asarray(ifs.probs)
    )
    # backward orbit per sample: x_k = phi_{a_{k+1}}(x_{k+1}); vectorized over
    # samples, one masked map application per letter and step
    xs = np.full((n_samples, orbit_length + 1), 0.5)
    for k in range(orbit_length - 1, -1, -1):
        col = letters_all[:, k]
        for a in range(ifs.n_letters):
            mask = col == a
            if np.any(mask):
                xs[mask, k] = ifs.maps[a].evaluate(xs[mask, k + 1])[0]
    taus = np.empty((n_samples, orbit_length - burn))
    for k in range(orbit_length - burn):
        col = letters_all[:, k]
        for a in range(ifs.n_letters):
            mask = col == a
            if np.any(mask):
                _, d1, _ = ifs.maps[a].evaluate(xs[mask, k + 1])
                taus[mask, k] = -np.log(np.abs(d1))
    means = taus.mean(axis=1)
    lam = float(np.mean(means))
    se = float(np.std(means, ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    return ErgodicReport(
        lyapunov=lam,
        entropy=entropy,
        dimension_ratio=entropy / lam,
        standard_error=se,
    )
