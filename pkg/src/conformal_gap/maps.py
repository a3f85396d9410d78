"""C2 contraction systems on [0,1] with exact value/derivative arithmetic.

Map families are restricted to affine and Moebius leaves plus their
compositions.  Both families have closed-form first and second derivatives,
and a composition of such leaves is again a Moebius map (2x2 matrix product),
which gives exact inverses for free.  Derivatives of compositions are always
evaluated leaf-by-leaf with the chain rule, never by finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .errors import BudgetExceeded, DomainError, NotContracting
from .words import Word, all_words, check_word

_SLACK = 1e-12

Interval = Tuple[float, float]


def _check_domain(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < -_SLACK) or np.any(x > 1.0 + _SLACK):
        raise DomainError(f"argument outside [0,1]: range [{x.min()}, {x.max()}]")
    return x


@dataclass(frozen=True)
class AffineMap:
    """x -> slope*x + offset."""

    slope: float
    offset: float
    kind = "affine"

    def __post_init__(self):
        if self.slope == 0.0:
            raise DomainError("affine map needs nonzero slope")
        lo, hi = sorted((self.offset, self.slope + self.offset))
        if lo < -_SLACK or hi > 1.0 + _SLACK:
            raise DomainError(f"affine map leaves [0,1]: image [{lo}, {hi}]")

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        v = self.slope * x + self.offset
        d1 = np.full_like(v, self.slope)
        return v, d1, np.zeros_like(v)

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.slope, self.offset], [0.0, 1.0]])


@dataclass(frozen=True)
class MoebiusMap:
    """x -> (a*x + b) / (c*x + d), pole-free and nonsingular on [0,1]."""

    a: float
    b: float
    c: float
    d: float
    kind = "moebius"

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if det == 0.0:
            raise DomainError("moebius map is singular (ad - bc = 0)")
        d0, d1 = self.d, self.c + self.d
        if d0 == 0.0 or d1 == 0.0 or (d0 > 0) != (d1 > 0):
            raise DomainError("moebius map has a pole in [0,1]")
        v0 = self.b / d0
        v1 = (self.a + self.b) / d1
        lo, hi = sorted((v0, v1))
        if lo < -_SLACK or hi > 1.0 + _SLACK:
            raise DomainError(f"moebius map leaves [0,1]: image [{lo}, {hi}]")

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        den = self.c * x + self.d
        det = self.a * self.d - self.b * self.c
        v = (self.a * x + self.b) / den
        d1 = det / den**2
        d2 = -2.0 * self.c * det / den**3
        return v, d1, d2

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])


@dataclass(frozen=True)
class ComposedMap:
    """Composition leaf[0] o leaf[1] o ... o leaf[-1], chain rule throughout."""

    leaves: Tuple[object, ...]
    kind = "composed"

    def __post_init__(self):
        flat: List[object] = []
        for m in self.leaves:
            if isinstance(m, ComposedMap):
                flat.extend(m.leaves)
            else:
                flat.append(m)
        if not flat:
            raise DomainError("composed map needs at least one leaf")
        object.__setattr__(self, "leaves", tuple(flat))

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        v = x
        d1 = np.ones_like(v)
        d2 = np.zeros_like(v)
        # innermost leaf acts first; h = f o g gives h'' = f''*g'^2 + f'*g''
        for m in reversed(self.leaves):
            mv, m1, m2 = m.evaluate(v)
            d2 = m2 * d1**2 + m1 * d2
            d1 = m1 * d1
            v = mv
        return v, d1, d2

    def as_matrix(self) -> np.ndarray:
        out = np.eye(2)
        for m in self.leaves:
            out = out @ m.as_matrix()
            out = out / np.abs(out).max()
        return out


ContractionMap = (AffineMap, MoebiusMap, ComposedMap)


def identity_map() -> AffineMap:
    return AffineMap(1.0, 0.0)


def eval_map(m, x):
    """(phi(x), phi'(x), phi''(x)) with a [0,1] domain check (1e-12 slack)."""
    return m.evaluate(_check_domain(x))


def inverse_at(m, y):
    """Exact inverse value and its derivative at y, via the Moebius matrix."""
    (a, b), (c, d) = m.as_matrix()
    y = np.asarray(y, dtype=float)
    den = a - c * y
    x = (d * y - b) / den
    det = a * d - b * c
    dx = det / den**2
    return x, dx


def image_interval(m, box: Interval = (0.0, 1.0)) -> Interval:
    """Closed image of an interval; maps here are monotone (phi' never 0)."""
    v0, _, _ = m.evaluate(np.asarray(box[0], dtype=float))
    v1, _, _ = m.evaluate(np.asarray(box[1], dtype=float))
    return (float(min(v0, v1)), float(max(v0, v1)))


def matrix_apply(mat: np.ndarray, x: float) -> float:
    """Moebius action of a 2x2 matrix on a point."""
    (a, b), (c, d) = mat
    return (a * x + b) / (c * x + d)


def matrix_image(mat: np.ndarray, box: Interval = (0.0, 1.0)) -> Interval:
    v0 = matrix_apply(mat, box[0])
    v1 = matrix_apply(mat, box[1])
    return (min(v0, v1), max(v0, v1))


def matrix_compose(mat: np.ndarray, m) -> np.ndarray:
    """Matrix of (mat o m), normalized to keep entries O(1).

    Tree walkers extend compositions one map at a time; the 2x2 product is
    the exact Moebius matrix of the composition, so cylinder image hulls
    cost O(1) per node regardless of word length.
    """
    out = mat @ m.as_matrix()
    return out / np.abs(out).max()


def log_deriv_slope(m, x):
    """d/dx log|phi'(x)| = phi''(x)/phi'(x)."""
    _, d1, d2 = m.evaluate(np.asarray(x, dtype=float))
    return d2 / d1


@dataclass(frozen=True)
class Ifs:
    """Finite family of contraction maps with a probability vector."""

    maps: Tuple[object, ...]
    probs: Tuple[float, ...]
    name: str = ""

    def __post_init__(self):
        if len(self.maps) < 2:
            raise DomainError("need at least 2 maps")
        if len(self.probs) != len(self.maps):
            raise DomainError("probs length must match maps")
        if any(p <= 0 for p in self.probs):
            raise DomainError("probs must be strictly positive")
        if abs(sum(self.probs) - 1.0) > 1e-12:
            raise DomainError(f"probs sum to {sum(self.probs)}, not 1")
        fps = [_fixed_point(m) for m in self.maps]
        if max(fps) - min(fps) < 1e-9:
            raise DomainError("attractor is a singleton (all fixed points agree)")

    @property
    def n_letters(self) -> int:
        return len(self.maps)

    def compose(self, w: Sequence[int]):
        return compose_word(self, w)

    def word_prob(self, w: Sequence[int]) -> float:
        p = 1.0
        for a in w:
            p *= self.probs[a]
        return p

    def word_image(self, w: Sequence[int]) -> Interval:
        return image_interval(self.compose(w))


def _fixed_point(m, iters: int = 200) -> float:
    x = 0.5
    for _ in range(iters):
        x = float(m.evaluate(np.asarray(x))[0])
    return x


def compose_word(ifs: Ifs, w: Sequence[int]):
    """phi_w = phi_{w_1} o ... o phi_{w_n}; the empty word is the identity."""
    w = check_word(w, ifs.n_letters)
    if len(w) == 0:
        return identity_map()
    if len(w) == 1:
        return ifs.maps[w[0]]
    return ComposedMap(tuple(ifs.maps[a] for a in w))


@dataclass(frozen=True)
class ConstantsReport:
    gamma_est: float
    gamma1_est: float
    distortion_B: float
    uni_min: float
    uni_max: float
    depth_used: int

    def __post_init__(self):
        if not (1.0 < self.gamma_est <= self.gamma1_est * (1 + 1e-12)):
            raise NotContracting(
                f"need 1 < gamma <= gamma1, got ({self.gamma_est}, {self.gamma1_est})"
            )
        if self.distortion_B < 1.0 - 1e-12:
            raise DomainError("distortion constant below 1")
        if self.uni_min > self.uni_max + 1e-15:
            raise DomainError("uni_min exceeds uni_max")


def _refined_grid_extrema(fn, n0: int, tol: float = 1e-8, max_doublings: int = 6):
    """(inf, sup) of fn over [0,1], doubling a uniform grid until stable."""
    n = max(int(n0), 8)
    xs = np.linspace(0.0, 1.0, n + 1)
    vals = fn(xs)
    lo, hi = float(np.min(vals)), float(np.max(vals))
    for _ in range(max_doublings):
        n *= 2
        xs = np.linspace(0.0, 1.0, n + 1)
        vals = fn(xs)
        lo2, hi2 = float(np.min(vals)), float(np.max(vals))
        if abs(lo2 - lo) < tol and abs(hi2 - hi) < tol:
            return lo2, hi2
        lo, hi = lo2, hi2
    return lo, hi


def contraction_bounds(ifs: Ifs, depth: int, grid_points: int = 256) -> ConstantsReport:
    """Estimate gamma, gamma_1, the distortion constant and the best UNI margin.

    gamma_est = (sup over depth-words and x of |phi_w'|)^(-1/depth), gamma1_est
    the analogue with inf; distortion_B = max over single letters of
    sup|phi'|/inf|phi'|.  The UNI fields report min/max over a full-interval
    grid of |phi_a''/phi_a' - phi_b''/phi_b'| for the word pair of this depth
    whose minimum margin is largest.
    """
    if depth < 1:
        raise DomainError("depth must be >= 1")
    sup_all, inf_all = 0.0, math.inf
    words = list(all_words(ifs.n_letters, depth))
    xs = np.linspace(0.0, 1.0, max(grid_points, 8) + 1)
    slopes = []
    for w in words:
        m = compose_word(ifs, w)
        lo, hi = _refined_grid_extrema(lambda t, m=m: np.abs(m.evaluate(t)[1]), grid_points)
        sup_all = max(sup_all, hi)
        inf_all = min(inf_all, lo)
        slopes.append(log_deriv_slope(m, xs))
    if sup_all >= 1.0:
        raise NotContracting(f"sup |phi_w'| = {sup_all} >= 1 at depth {depth}")
    gamma_est = sup_all ** (-1.0 / depth)
    gamma1_est = inf_all ** (-1.0 / depth)

    dist = 1.0
    for m in ifs.maps:
        lo, hi = _refined_grid_extrema(lambda t, m=m: np.abs(m.evaluate(t)[1]), grid_points)
        dist = max(dist, hi / lo)

    uni_min, uni_max = 0.0, 0.0
    slopes_arr = np.array(slopes)
    for i in range(len(words)):
        diff = np.abs(slopes_arr[i + 1 :] - slopes_arr[i])
        if diff.size == 0:
            continue
        mins = diff.min(axis=1)
        j = int(np.argmax(mins))
        if mins[j] > uni_min:
            uni_min = float(mins[j])
            uni_max = float(diff[j].max())
    return ConstantsReport(gamma_est, gamma1_est, dist, uni_min, uni_max, depth)


def uni_margin(
    ifs: Ifs,
    word_a: Sequence[int],
    word_b: Sequence[int],
    neighborhood_delta: float = 0.0,
    grid_points: int = 512,
) -> Tuple[float, float]:
    """(inf, sup) of |phi_a''/phi_a' - phi_b''/phi_b'| near the attractor.

    neighborhood_delta == 0 evaluates on a full-interval grid over [0,1]
    (the conservative superset of every attractor neighborhood); for
    delta > 0 the neighborhood is realized as the union of delta-cutoff
    image intervals inflated by delta.
    """
    wa = check_word(word_a, ifs.n_letters)
    wb = check_word(word_b, ifs.n_letters)
    if len(wa) != len(wb):
        raise DomainError(f"word lengths differ: {len(wa)} vs {len(wb)}")
    ma = compose_word(ifs, wa) if wa else identity_map()
    mb = compose_word(ifs, wb) if wb else identity_map()

    def margin(xs: np.ndarray) -> np.ndarray:
        return np.abs(log_deriv_slope(ma, xs) - log_deriv_slope(mb, xs))

    if neighborhood_delta == 0.0:
        lo, hi = _refined_grid_extrema(margin, grid_points)
        return lo, hi
    pieces = []
    for _, (lo_i, hi_i) in attractor_cover(ifs, neighborhood_delta):
        pieces.append((max(0.0, lo_i - neighborhood_delta), min(1.0, hi_i + neighborhood_delta)))
    lo, hi = math.inf, 0.0
    for a0, b0 in _merge_intervals(pieces):
        n = max(8, int(grid_points * (b0 - a0)) + 2)
        vals = margin(np.linspace(a0, b0, n))
        lo = min(lo, float(vals.min()))
        hi = max(hi, float(vals.max()))
    return lo, hi


def _merge_intervals(pieces: Iterable[Interval]) -> List[Interval]:
    out: List[Interval] = []
    for lo, hi in sorted(pieces):
        if out and lo <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def attractor_cover(
    ifs: Ifs, epsilon: float, node_budget: int = 200_000
) -> List[Tuple[Word, Interval]]:
    """All epsilon-cutoff words with their image intervals.

    A cutoff word is a shortest prefix whose image has diameter < epsilon
    while the one-shorter prefix still has diameter >= epsilon.  The returned
    intervals cover the attractor; order is depth-first lexicographic.
    """
    if not (0.0 < epsilon <= 1.0):
        raise DomainError("epsilon must lie in (0, 1]")
    out: List[Tuple[Word, Interval]] = []
    visited = 0
    stack = [((), np.eye(2), (0.0, 1.0))]
    while stack:
        w, mat, box = stack.pop()
        visited += 1
        if visited > node_budget:
            raise BudgetExceeded(f"cutoff tree exceeded {node_budget} nodes")
        if box[1] - box[0] < epsilon and len(w) > 0:
            out.append((w, box))
            continue
        for a in reversed(range(ifs.n_letters)):
            child = matrix_compose(mat, ifs.maps[a])
            stack.append((w + (a,), child, matrix_image(child)))
    return out


# ---------------------------------------------------------------------------
# builtin systems and descriptions

def _map_from_description(d: dict):
    kind = d.get("kind")
    if kind == "affine":
        return AffineMap(float(d["slope"]), float(d["offset"]))
    if kind == "moebius":
        return MoebiusMap(float(d["a"]), float(d["b"]), float(d["c"]), float(d["d"]))
    raise DomainError(f"unknown map kind {kind!r}")


def ifs_from_description(desc: dict, name: str = "") -> Ifs:
    maps = tuple(_map_from_description(d) for d in desc["maps"])
    probs = tuple(float(p) for p in desc["probs"])
    return Ifs(maps, probs, name=name or desc.get("name", "inline"))


def builtin_ifs(name: str) -> Ifs:
    """Named systems: figure1, dyadic, gauss23, cantor3."""
    if name == "figure1":
        # {x/(x+1), (x+1/2)/(x+3/2)}: overlapping nonlinear pair
        return Ifs(
            (MoebiusMap(1, 0, 1, 1), MoebiusMap(1, 0.5, 1, 1.5)),
            (0.5, 0.5),
            name="figure1",
        )
    if name == "dyadic":
        return Ifs((AffineMap(0.5, 0.0), AffineMap(0.5, 0.5)), (0.5, 0.5), name="dyadic")
    if name == "gauss23":
        # {1/(2+x), 1/(3+x)}: Gauss-map branches, images touch at 1/3
        return Ifs(
            (MoebiusMap(0, 1, 1, 2), MoebiusMap(0, 1, 1, 3)), (0.5, 0.5), name="gauss23"
        )
    if name == "cantor3":
        return Ifs(
            (AffineMap(1 / 3, 0.0), AffineMap(1 / 3, 2 / 3)), (0.5, 0.5), name="cantor3"
        )
    raise DomainError(f"unknown builtin IFS {name!r}")


def resolve_ifs(spec) -> Ifs:
    """Builtin name or inline description dict."""
    if isinstance(spec, str):
        return builtin_ifs(spec)
    if isinstance(spec, dict):
        return ifs_from_description(spec)
    if isinstance(spec, Ifs):
        return spec
    raise DomainError(f"cannot interpret IFS spec {spec!r}")
