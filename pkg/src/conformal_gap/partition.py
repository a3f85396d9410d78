"""Sub-IFS partition with a special nonlinear pair, and interval covers.

The partition splits the depth-N words of an overlapping IFS into a special
pair w* = {alpha_1, alpha_2} (disjoint images, positive nonlinearity margin,
equal probabilities) and groups of 2-3 words with pairwise disjoint images.
The interval cover machinery tiles [0,1] with closed intervals adapted to the
Cantor sets generated by a group-word and the special pair; the damped
transfer operators are built on top of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    BudgetExceeded,
    DegenerateCover,
    DomainError,
    NotFound,
    SeparationFailed,
    TooFewWords,
    UniFailed,
    UnknownGroup,
)
from .maps import (
    Ifs,
    Interval,
    matrix_compose,
    matrix_image,
    uni_margin,
)
from .words import Word, all_words, check_word, concat, repeat

# ---------------------------------------------------------------------------
# special pair construction


def find_disjoint_pair(ifs: Ifs, max_depth: int = 8) -> Tuple[Word, Word]:
    """First equal-length word pair with strictly disjoint closed image
    intervals: breadth-first over the length, first word ascending and
    second word descending (widest-gap candidates first)."""
    for depth in range(1, max_depth + 1):
        words = list(all_words(ifs.n_letters, depth))
        boxes = [ifs.word_image(w) for w in words]
        for i in range(len(words)):
            for j in range(len(words) - 1, i, -1):
                if boxes[i][1] < boxes[j][0] or boxes[j][1] < boxes[i][0]:
                    return words[i], words[j]
    raise NotFound(f"no disjoint equal-length pair up to depth {max_depth}")


def build_uni_pair(
    ifs: Ifs,
    uni_words: Tuple[Word, Word],
    sep_words: Tuple[Word, Word],
    margin_floor: float = 1e-9,
    powers: int = 4,
) -> Tuple[Word, Word]:
    """alpha_1 = d.b.c.a and alpha_2 = c.a.d.b from a nonlinearity witness
    pair (a, b) and a separation witness pair (c, d).

    Verifies disjointness of the two images and that the margin of
    (alpha_1^l, alpha_2^l) stays strictly positive for l = 1..powers.
    """
    a, b = (check_word(w, ifs.n_letters) for w in uni_words)
    c, d = (check_word(w, ifs.n_letters) for w in sep_words)
    if len(a) != len(b) or len(c) != len(d):
        raise DomainError("witness pairs must have equal lengths")
    alpha1 = concat(d, b, c, a)
    alpha2 = concat(c, a, d, b)
    box1, box2 = ifs.word_image(alpha1), ifs.word_image(alpha2)
    if not (box1[1] < box2[0] or box2[1] < box1[0]):
        raise SeparationFailed(f"images of {alpha1} and {alpha2} intersect")
    for level in range(1, powers + 1):
        lo, hi = uni_margin(ifs, repeat(alpha1, level), repeat(alpha2, level))
        if lo <= margin_floor:
            raise UniFailed(f"margin {lo} at power l={level} not positive")
    return alpha1, alpha2


# ---------------------------------------------------------------------------
# the partition itself


@dataclass(frozen=True)
class PartitionResult:
    """Omega = {w*} + groups; `group_weights[i]` is q of Omega's i-th element
    (index 0 is w*), and `conditional_probs[a]` is p_{a,w} within a's group."""

    block_length_N: int
    w_star: Tuple[Word, Word]
    groups: Tuple[Tuple[Word, ...], ...]
    group_weights: Tuple[float, ...]
    conditional_probs: Dict[Word, float]
    separation_margins: Tuple[float, ...]

    @property
    def n_groups(self) -> int:
        return 1 + len(self.groups)

    def omega_words(self, index: int) -> Tuple[Word, ...]:
        if index == 0:
            return self.w_star
        if 1 <= index <= len(self.groups):
            return self.groups[index - 1]
        raise UnknownGroup(f"group index {index} outside 0..{len(self.groups)}")

    def to_json_dict(self) -> dict:
        return {
            "block_length_N": self.block_length_N,
            "w_star": [list(w) for w in self.w_star],
            "groups": [[list(w) for w in g] for g in self.groups],
            "group_weights": list(self.group_weights),
            "conditional_probs": [
                {"word": list(w), "p": p} for w, p in sorted(self.conditional_probs.items())
            ],
            "separation_margins": list(self.separation_margins),
        }


def _gap(b1: Interval, b2: Interval) -> float:
    """Signed gap between closed intervals; > 0 means strictly disjoint."""
    return max(b1[0], b2[0]) - min(b1[1], b2[1])


def _group_margin(boxes: Sequence[Interval]) -> float:
    worst = math.inf
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            worst = min(worst, _gap(boxes[i], boxes[j]))
    return worst


def _stabbing_number(lefts: np.ndarray, diameter: float) -> int:
    """Max number of intervals [l_i, l_i + diameter] containing one point.

    The maximum is attained at a left endpoint; closed-interval convention.
    """
    lo = np.searchsorted(lefts, lefts - diameter, side="left")
    hi = np.searchsorted(lefts, lefts, side="right")
    return int(np.max(hi - lo))


def build_partition(
    ifs: Ifs, block_length_N: int, alpha_pair: Tuple[Word, Word]
) -> PartitionResult:
    """Partition the depth-N words around the special pair.

    The remaining words are enumerated by the left endpoints of their images;
    T_N is the smallest integer such that every point meets at most T_N - 1 of
    the image intervals once each is extended rightward to the maximal image
    diameter (this gives the guarantee that indices T_N apart have disjoint
    images).  Words are grouped in pairs {a_k, a_{k+T_N}} block by block, and
    the at most 2 T_N leftover words are absorbed into designated pairs.
    """
    alpha1 = check_word(alpha_pair[0], ifs.n_letters)
    alpha2 = check_word(alpha_pair[1], ifs.n_letters)
    if len(alpha1) != block_length_N or len(alpha2) != block_length_N:
        raise DomainError("alpha words must have length N")
    if alpha1 == alpha2:
        raise DomainError("alpha words must differ")
    p1, p2 = ifs.word_prob(alpha1), ifs.word_prob(alpha2)
    if abs(p1 - p2) > 1e-12 * max(p1, p2):
        raise DomainError(f"p_alpha1 = {p1} != p_alpha2 = {p2}")
    abox1, abox2 = ifs.word_image(alpha1), ifs.word_image(alpha2)
    if _gap(abox1, abox2) <= 0:
        raise SeparationFailed("alpha images are not strictly disjoint")

    rem = [w for w in all_words(ifs.n_letters, block_length_N) if w not in (alpha1, alpha2)]
    boxes = {w: ifs.word_image(w) for w in rem}
    rem.sort(key=lambda w: (boxes[w][0], w))
    n_rem = len(rem)
    if n_rem == 0:
        raise TooFewWords("no words besides the alpha pair")

    diam = max(b[1] - b[0] for b in boxes.values())
    lefts = np.array([boxes[w][0] for w in rem])
    t_n = _stabbing_number(lefts, diam) + 1

    n_blocks = n_rem // (2 * t_n)
    if n_blocks < 1:
        raise TooFewWords(
            f"{n_rem} words cannot host pairing with T_N = {t_n} (need >= {2 * t_n})"
        )
    pairs: List[List[Word]] = []
    for j in range(n_blocks):
        for k in range(t_n):
            i0 = k + 2 * j * t_n
            pairs.append([rem[i0], rem[i0 + t_n]])

    leftovers = rem[2 * t_n * n_blocks :]
    designated = min(2, n_blocks) * t_n
    used = [False] * len(pairs)
    for w in leftovers:
        placed = False
        for idx in range(designated):
            if used[idx]:
                continue
            if all(_gap(boxes[w], boxes[v]) > 0 for v in pairs[idx]):
                pairs[idx].append(w)
                used[idx] = True
                placed = True
                break
        if not placed:
            if all(used[:designated]):
                raise TooFewWords(
                    f"{len(leftovers)} leftovers exceed the {designated} designated pairs"
                )
            raise SeparationFailed(f"leftover word {w} overlaps every designated pair")

    groups = tuple(tuple(g) for g in pairs)
    margins = tuple(_group_margin([boxes[w] for w in g]) for g in groups)
    bad = [i for i, m in enumerate(margins) if m <= 0]
    if bad:
        raise SeparationFailed(f"group {bad[0]} has overlapping images (margin {margins[bad[0]]})")

    q_star = p1 + p2
    weights = [q_star] + [sum(ifs.word_prob(w) for w in g) for g in groups]
    conditional: Dict[Word, float] = {alpha1: 0.5, alpha2: 0.5}
    for g, q in zip(groups, weights[1:]):
        for w in g:
            conditional[w] = ifs.word_prob(w) / q
    result = PartitionResult(
        block_length_N=block_length_N,
        w_star=(alpha1, alpha2),
        groups=groups,
        group_weights=tuple(weights),
        conditional_probs=conditional,
        separation_margins=margins,
    )
    report = verify_partition(ifs, result)
    if not report.all_pass:
        raise SeparationFailed(f"self-check failed: {report.failures()}")
    return result


def auto_partition(
    ifs: Ifs, n_min: int = 2, n_max: int = 14, max_words: int = 20000
) -> Tuple[int, PartitionResult]:
    """Smallest block length N admitting a partition, searching candidate
    alpha pairs (constant words first, then disjoint-image pairs)."""
    for n in range(n_min, n_max + 1):
        if ifs.n_letters**n > max_words:
            break
        for pair in _alpha_candidates(ifs, n):
            try:
                return n, build_partition(ifs, n, pair)
            except (TooFewWords, SeparationFailed, UniFailed, DomainError):
                continue
    raise NotFound(f"no feasible partition for N in [{n_min}, {n_max}]")


def _alpha_candidates(ifs: Ifs, n: int, limit: int = 40):
    """Disjoint-image, equal-probability pairs at depth n, constant words first."""
    cands = []
    const = [tuple([a] * n) for a in range(ifs.n_letters)]
    words = const + [w for w in all_words(ifs.n_letters, n) if w not in const]
    boxes = {w: ifs.word_image(w) for w in words}
    for i in range(len(words)):
        for j in range(i + 1, len(words)):
            wi, wj = words[i], words[j]
            if abs(ifs.word_prob(wi) - ifs.word_prob(wj)) > 1e-12:
                continue
            if _gap(boxes[wi], boxes[wj]) > 0:
                cands.append((wi, wj))
                if len(cands) >= limit:
                    return cands
    return cands


@dataclass(frozen=True)
class PartitionCheck:
    union_ok: bool
    sizes_ok: bool
    groups_disjoint_ok: bool
    w_star_ok: bool
    worst_group_margin: float
    alpha_margin: float
    weight_sum_error: float
    conditional_sum_error: float
    uni_margins: Tuple[Tuple[float, float], ...]

    @property
    def all_pass(self) -> bool:
        return self.union_ok and self.sizes_ok and self.groups_disjoint_ok and self.w_star_ok

    def failures(self) -> List[str]:
        out = []
        if not self.union_ok:
            out.append("union")
        if not self.sizes_ok:
            out.append("sizes")
        if not self.groups_disjoint_ok:
            out.append("group-disjointness")
        if not self.w_star_ok:
            out.append("w-star")
        return out


def verify_partition(ifs: Ifs, p: PartitionResult) -> PartitionCheck:
    """Re-check the partition properties; report-valued, never raises.

    Checks the disjoint-union, group-size, in-group separation and w*
    properties (disjoint alpha images, equal probabilities, conditional
    weights).  The nonlinearity margins of (alpha_1^l, alpha_2^l) are
    reported for l = 1..4 but do not gate the verdict: affine systems
    legitimately carry zero margin and are rejected earlier, by
    build_uni_pair.
    """
    n = p.block_length_N
    expected = set(all_words(ifs.n_letters, n))
    seen: List[Word] = list(p.w_star)
    for g in p.groups:
        seen.extend(g)
    union_ok = len(seen) == len(set(seen)) == len(expected) and set(seen) == expected

    sizes_ok = all(len(g) in (2, 3) for g in p.groups)

    worst = math.inf
    for g in p.groups:
        worst = min(worst, _group_margin([ifs.word_image(w) for w in g]))
    groups_disjoint_ok = worst > 0

    alpha_margin = _gap(ifs.word_image(p.w_star[0]), ifs.word_image(p.w_star[1]))
    p1, p2 = (ifs.word_prob(w) for w in p.w_star)
    cond_star_ok = (
        abs(p.conditional_probs.get(p.w_star[0], 0.0) - 0.5) < 1e-12
        and abs(p.conditional_probs.get(p.w_star[1], 0.0) - 0.5) < 1e-12
    )
    w_star_ok = alpha_margin > 0 and abs(p1 - p2) <= 1e-12 * max(p1, p2) and cond_star_ok

    weight_sum_error = abs(sum(p.group_weights) - 1.0)
    cond_err = 0.0
    for idx in range(p.n_groups):
        words_ = p.omega_words(idx)
        cond_err = max(
            cond_err, abs(sum(p.conditional_probs[w] for w in words_) - 1.0)
        )

    margins = []
    for level in range(1, 5):
        try:
            margins.append(
                uni_margin(ifs, repeat(p.w_star[0], level), repeat(p.w_star[1], level))
            )
        except DomainError:
            margins.append((math.nan, math.nan))
    return PartitionCheck(
        union_ok=union_ok,
        sizes_ok=sizes_ok,
        groups_disjoint_ok=groups_disjoint_ok,
        w_star_ok=w_star_ok,
        worst_group_margin=worst,
        alpha_margin=alpha_margin,
        weight_sum_error=weight_sum_error,
        conditional_sum_error=cond_err,
        uni_margins=tuple(margins),
    )


# ---------------------------------------------------------------------------
# restricted block trees (shared by interval covers and random measures)


def block_choices(partition: PartitionResult, w_string: Sequence[int], pos: int):
    """Admissible N-blocks at block position `pos`: the group named by
    w_string while it lasts, then the special pair forever."""
    if pos < len(w_string):
        return partition.omega_words(w_string[pos])
    return partition.w_star


def cutoff_cylinders(
    ifs: Ifs,
    partition: PartitionResult,
    w_string: Sequence[int],
    epsilon: float,
    node_budget: int = 100_000,
) -> List[Tuple[Tuple[Word, ...], Interval]]:
    """Epsilon-cutoff block words of the w-restricted tree with image hulls.

    A cutoff is the shortest block prefix whose image diameter drops below
    epsilon while its parent's is still >= epsilon.
    """
    out: List[Tuple[Tuple[Word, ...], Interval]] = []
    visited = 0
    stack = [((), np.eye(2), (0.0, 1.0))]
    while stack:
        blocks, mat, box = stack.pop()
        visited += 1
        if visited > node_budget:
            raise BudgetExceeded(f"restricted tree exceeded {node_budget} nodes")
        if box[1] - box[0] < epsilon and len(blocks) > 0:
            out.append((blocks, box))
            continue
        for blk in reversed(block_choices(partition, w_string, len(blocks))):
            child = mat
            for a in blk:
                child = matrix_compose(child, ifs.maps[a])
            stack.append((blocks + (blk,), child, matrix_image(child)))
    out.sort(key=lambda item: item[1][0])
    return out


# ---------------------------------------------------------------------------
# interval covers (the tree structure behind the damped operators)


@dataclass(frozen=True)
class IntervalCover:
    """Ordered tiling V_1..V_q of [0,1] adapted to the restricted Cantor set.

    hit_flags marks intervals meeting the set; `hulls[j]` is the hull of the
    set's part inside a hit V_j (None for gap fillers).  The separation
    constants are realized values: eps*A1_prime <= |V_j| <= eps*A1 and every
    hit interval keeps its boundary at distance >= A2*|V_j| from the set.
    """

    intervals: Tuple[Interval, ...]
    hit_flags: Tuple[bool, ...]
    hulls: Tuple[Optional[Interval], ...]
    a1_prime: float
    a1: float
    a2: float
    epsilon: float
    w_string: Tuple[int, ...]
    support_hulls: Tuple[Interval, ...]

    @property
    def q(self) -> int:
        return len(self.intervals)

    def hit_indices(self) -> List[int]:
        return [j for j, h in enumerate(self.hit_flags) if h]


def _split_gap(lo: float, hi: float, epsilon: float) -> List[Interval]:
    width = hi - lo
    if width <= 1e-12:
        return []
    pieces = max(1, int(round(width / epsilon)))
    edges = np.linspace(lo, hi, pieces + 1)
    return [(float(edges[i]), float(edges[i + 1])) for i in range(pieces)]


def interval_cover(
    ifs: Ifs,
    partition: PartitionResult,
    w_string: Sequence[int],
    epsilon: float,
    node_budget: int = 100_000,
) -> IntervalCover:
    """Closed-interval tiling of [0,1] around the restricted Cantor set K_w.

    Each epsilon-cutoff cylinder contributes one run of >= 4 consecutive hit
    intervals (one per two-block child), with shared endpoints at gap
    midpoints; the space between runs and the domain edges is tiled by
    non-hit fillers of length about epsilon.
    """
    w_string = tuple(int(i) for i in w_string)
    for i in w_string:
        partition.omega_words(i)  # raises UnknownGroup on bad index
    parents = cutoff_cylinders(ifs, partition, w_string, epsilon, node_budget)
    hull_lo = min(b[0] for _, b in parents)
    hull_hi = max(b[1] for _, b in parents)
    if len(parents) < 2 or epsilon >= (hull_hi - hull_lo):
        raise DegenerateCover(
            f"{len(parents)} cutoff cylinder(s) at eps={epsilon}, hull diameter "
            f"{hull_hi - hull_lo}: single-cylinder regime"
        )

    families: List[List[Interval]] = []
    for blocks, _ in parents:
        mat = np.eye(2)
        for a in concat(*blocks):
            mat = matrix_compose(mat, ifs.maps[a])
        kids = []
        for b1 in block_choices(partition, w_string, len(blocks)):
            for b2 in block_choices(partition, w_string, len(blocks) + 1):
                child = mat
                for a in concat(b1, b2):
                    child = matrix_compose(child, ifs.maps[a])
                kids.append(matrix_image(child))
        kids.sort()
        for a, b in zip(kids, kids[1:]):
            if a[1] >= b[0]:
                raise SeparationFailed(f"child hulls overlap inside cylinder {blocks}")
        families.append(kids)
    families.sort(key=lambda kids: kids[0][0])
    for f1, f2 in zip(families, families[1:]):
        if f1[-1][1] >= f2[0][0]:
            raise SeparationFailed("cutoff cylinders are not separated")

    intervals: List[Interval] = []
    hit_flags: List[bool] = []
    hulls: List[Optional[Interval]] = []
    cursor = 0.0
    for fam_idx, kids in enumerate(families):
        # domain edges are unconstrained: V intervals may overhang [0,1]
        left_gap = (
            kids[0][0] - families[fam_idx - 1][-1][1] if fam_idx else math.inf
        )
        right_gap = (
            families[fam_idx + 1][0][0] - kids[-1][1]
            if fam_idx + 1 < len(families)
            else math.inf
        )
        internal = min(b[0] - a[1] for a, b in zip(kids, kids[1:]))
        pad = min(internal / 2.0, left_gap / 3.0, right_gap / 3.0, epsilon / 2.0)
        if pad <= 0:
            raise SeparationFailed("no room to pad a cylinder's intervals")
        bounds = [kids[0][0] - pad]
        for a, b in zip(kids, kids[1:]):
            bounds.append(0.5 * (a[1] + b[0]))
        bounds.append(kids[-1][1] + pad)
        for piece in _split_gap(cursor, bounds[0], epsilon):
            intervals.append(piece)
            hit_flags.append(False)
            hulls.append(None)
        for i, hull in enumerate(kids):
            intervals.append((bounds[i], bounds[i + 1]))
            hit_flags.append(True)
            hulls.append(hull)
        cursor = bounds[-1]
    for piece in _split_gap(cursor, 1.0, epsilon):
        intervals.append(piece)
        hit_flags.append(False)
        hulls.append(None)

    support = [h for h in hulls if h is not None]
    sup_lo = np.array([h[0] for h in support])
    sup_hi = np.array([h[1] for h in support])

    def dist_to_set(x: float) -> float:
        inside = np.any((sup_lo <= x) & (x <= sup_hi))
        if inside:
            return 0.0
        return float(np.minimum(np.abs(sup_lo - x), np.abs(sup_hi - x)).min())

    lengths = [b - a for a, b in intervals]
    a2 = math.inf
    for (a, b), hit in zip(intervals, hit_flags):
        if not hit:
            continue
        a2 = min(a2, min(dist_to_set(a), dist_to_set(b)) / (b - a))
    return IntervalCover(
        intervals=tuple(intervals),
        hit_flags=tuple(hit_flags),
        hulls=tuple(hulls),
        a1_prime=min(lengths) / epsilon,
        a1=max(lengths) / epsilon,
        a2=a2,
        epsilon=epsilon,
        w_string=w_string,
        support_hulls=tuple(support),
    )
