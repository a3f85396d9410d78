"""Empirical Fourier transforms, decay fits, and the sum-product pipeline.

The decay side: mu_hat(xi) = sum of mass * exp(-2 pi i xi x) over atoms, with
a quadrature guard |xi| * resolution <= 0.05, and windowed-sup log-log fits
of the decay exponent (mu_hat oscillates, so pointwise fits are meaningless).
The sum-product side: regular words with Birkhoff windows, the normalized
derivative functionals zeta_j, their pair non-concentration statistics, and
the exponential sums they control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from .errors import BudgetExceeded, DomainError, ResolutionTooCoarse
from .maps import Ifs
from .measures import DiscreteMeasure, ErgodicReport
from .words import Word, check_word, concat, interleave  # noqa: F401  (interleave is part of the public word toolkit)

_GUARD = 0.05


def fourier_transform(m: DiscreteMeasure, xi: float) -> complex:
    """mu_hat(xi) = integral of exp(-2 pi i xi x) d mu(x), atom quadrature."""
    if abs(xi) * m.resolution > _GUARD:
        raise ResolutionTooCoarse(
            f"|xi|*resolution = {abs(xi) * m.resolution:.3g} > {_GUARD}; "
            f"refine to tol <= {_GUARD / max(abs(xi), 1e-300):.3g}"
        )
    return complex(np.sum(m.masses * np.exp(-2j * np.pi * xi * m.positions)))


def fourier_moduli(m: DiscreteMeasure, xis: np.ndarray) -> np.ndarray:
    """|mu_hat| over a frequency array (guarded at the largest |xi|)."""
    xis = np.asarray(xis, dtype=float)
    top = float(np.max(np.abs(xis))) if xis.size else 0.0
    if top * m.resolution > _GUARD:
        raise ResolutionTooCoarse(
            f"|xi|*resolution = {top * m.resolution:.3g} > {_GUARD}; "
            f"refine to tol <= {_GUARD / max(top, 1e-300):.3g}"
        )
    out = np.empty(xis.size)
    for i, xi in enumerate(xis):
        out[i] = abs(np.sum(m.masses * np.exp(-2j * np.pi * xi * m.positions)))
    return out


@dataclass(frozen=True)
class DecayFit:
    xi_ladder: Tuple[float, ...]
    sup_moduli: Tuple[float, ...]
    alpha_fit: float
    fit_residual: float


def decay_fit(
    m: DiscreteMeasure,
    xi_min: float,
    xi_max: float,
    windows: int,
    samples_per_window: int = 65,
) -> DecayFit:
    """-alpha as the log-log slope of windowed sups of |mu_hat|.

    [xi_min, xi_max] splits into geometric windows; the sup over a dense
    frequency grid inside each window tracks the decay envelope.  An odd
    sample count puts a grid point exactly on each window's geometric
    centre, so ladders aligned with arithmetic peaks (e.g. 3^k for the
    middle-thirds measure) sample the peaks themselves.
    """
    if not (0 < xi_min < xi_max) or windows < 2:
        raise DomainError("need 0 < xi_min < xi_max and >= 2 windows")
    edges = np.geomspace(xi_min, xi_max, windows + 1)
    centers = np.sqrt(edges[:-1] * edges[1:])
    sups = np.empty(windows)
    for k in range(windows):
        grid = np.geomspace(edges[k], edges[k + 1], samples_per_window)
        sups[k] = float(np.max(fourier_moduli(m, grid)))
    coeff = np.polyfit(np.log(centers), np.log(sups), 1)
    resid = float(np.max(np.abs(np.polyval(coeff, np.log(centers)) - np.log(sups))))
    return DecayFit(
        xi_ladder=tuple(float(c) for c in centers),
        sup_moduli=tuple(float(s) for s in sups),
        alpha_fit=-float(coeff[0]),
        fit_residual=resid,
    )


# ---------------------------------------------------------------------------
# regular words


@dataclass(frozen=True)
class RegularWordSet:
    n: int
    eps: float
    eps0: float
    words: Tuple[Word, ...]
    lambda_ref: float
    entropy_ref: float

    def __len__(self) -> int:
        return len(self.words)


def _suffix_state(ifs: Ifs, letters: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Backward pass over a (words x n) letter array.

    Returns per position j the suffix image interval midpoints m_j (the
    midpoint of the image of phi_{a_{j+1} ... a_n}) and the per-letter
    tau_j = -log|phi'_{a_j}(m_j)| surrogate values.
    """
    n_words, n = letters.shape
    lo = np.zeros(n_words)
    hi = np.ones(n_words)
    mids = np.empty((n_words, n + 1))
    mids[:, n] = 0.5
    # suffix intervals shrink backward; midpoints feed the tau surrogate
    lo_cur, hi_cur = lo, hi
    lo_all = np.empty((n_words, n + 1))
    hi_all = np.empty((n_words, n + 1))
    lo_all[:, n], hi_all[:, n] = 0.0, 1.0
    for j in range(n - 1, -1, -1):
        col = letters[:, j]
        new_lo = np.empty(n_words)
        new_hi = np.empty(n_words)
        for a in range(ifs.n_letters):
            mask = col == a
            if not np.any(mask):
                continue
            v0, _, _ = ifs.maps[a].evaluate(lo_all[mask, j + 1])
            v1, _, _ = ifs.maps[a].evaluate(hi_all[mask, j + 1])
            new_lo[mask] = np.minimum(v0, v1)
            new_hi[mask] = np.maximum(v0, v1)
        lo_all[:, j], hi_all[:, j] = new_lo, new_hi
    mids = 0.5 * (lo_all + hi_all)
    taus = np.empty((n_words, n))
    for j in range(n):
        col = letters[:, j]
        for a in range(ifs.n_letters):
            mask = col == a
            if not np.any(mask):
                continue
            _, d1, _ = ifs.maps[a].evaluate(mids[mask, j + 1])
            taus[mask, j] = -np.log(np.abs(d1))
    return mids, taus


def regular_words(
    ifs: Ifs,
    report: ErgodicReport,
    n: int,
    eps: float,
    eps0: float,
    word_budget: int = 2_000_000,
) -> RegularWordSet:
    """Length-n words whose Birkhoff averages of tau and -log p stay within
    eps of the Lyapunov exponent and entropy along every prefix of length
    floor(eps0*n)..n; tau is evaluated at suffix-cylinder midpoints."""
    if ifs.n_letters**n > word_budget:
        raise BudgetExceeded(f"{ifs.n_letters}**{n} words exceed budget {word_budget}")
    letters = np.array(
        np.meshgrid(*[range(ifs.n_letters)] * n, indexing="ij")
    ).reshape(n, -1).T
    _, taus = _suffix_state(ifs, letters)
    psis = -np.log(np.asarray(ifs.probs))[letters]
    s_tau = np.cumsum(taus, axis=1)
    s_psi = np.cumsum(psis, axis=1)
    l_start = max(1, int(math.floor(eps0 * n)))
    ls = np.arange(1, n + 1)
    ok = np.ones(letters.shape[0], dtype=bool)
    for l in range(l_start, n + 1):
        ok &= np.abs(s_tau[:, l - 1] / l - report.lyapunov) < eps
        ok &= np.abs(s_psi[:, l - 1] / l - report.entropy) < eps
    del ls
    words = tuple(tuple(int(a) for a in row) for row in letters[ok])
    return RegularWordSet(
        n=n,
        eps=eps,
        eps0=eps0,
        words=words,
        lambda_ref=report.lyapunov,
        entropy_ref=report.entropy,
    )


# ---------------------------------------------------------------------------
# zeta functionals


def word_derivative_at(ifs: Ifs, letters: np.ndarray, x0: np.ndarray):
    """(phi_w(x0), phi_w'(x0)) for a batch of words (rows of letters)."""
    v = np.broadcast_to(np.asarray(x0, dtype=float), (letters.shape[0],)).copy()
    d = np.ones(letters.shape[0])
    for j in range(letters.shape[1] - 1, -1, -1):
        col = letters[:, j]
        for a in range(ifs.n_letters):
            mask = col == a
            if not np.any(mask):
                continue
            mv, md, _ = ifs.maps[a].evaluate(v[mask])
            d[mask] *= md
            v[mask] = mv
    return v, d


def zeta_values(
    ifs: Ifs,
    a_blocks: Sequence[Word],
    b_word: Word,
    report: ErgodicReport,
) -> List[float]:
    """zeta_j(b) = e^{2 lambda n} |phi'_{a_{j-1} b}(x_{a_j})| for j = 1..k,
    with x_{a_j} the centre of the image interval of a_j."""
    n = len(b_word)
    if any(len(a) != n for a in a_blocks):
        raise DomainError("all blocks must share the b-word's length")
    out = []
    for j in range(1, len(a_blocks)):
        lo, hi = ifs.word_image(a_blocks[j])
        x_center = 0.5 * (lo + hi)
        w = concat(a_blocks[j - 1], b_word)
        letters = np.array([w])
        _, d = word_derivative_at(ifs, letters, np.asarray([x_center]))
        out.append(float(np.exp(2 * report.lyapunov * n) * np.abs(d[0])))
    return out


def zeta_table(
    ifs: Ifs,
    a_prev: Word,
    a_cur: Word,
    regular: RegularWordSet,
    report: ErgodicReport,
) -> np.ndarray:
    """zeta_j over every regular b at once (one batched derivative pass)."""
    lo, hi = ifs.word_image(a_cur)
    x_center = 0.5 * (lo + hi)
    n_b = len(regular.words)
    letters = np.array([concat(a_prev, b) for b in regular.words])
    _, d = word_derivative_at(ifs, letters, np.full(n_b, x_center))
    return np.exp(2 * report.lyapunov * regular.n) * np.abs(d)


def nonconcentration_count(zeta_tab: Union[Dict[Word, float], np.ndarray], sigma: float) -> float:
    """Fraction of ordered pairs (b, c), diagonal included, with
    |zeta(b) - zeta(c)| <= sigma; exact via sort and binary search."""
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    vals = np.sort(np.asarray(list(zeta_tab.values()) if isinstance(zeta_tab, dict) else zeta_tab, dtype=float))
    if vals.size == 0:
        raise DomainError("empty zeta table")
    lo = np.searchsorted(vals, vals - sigma, side="left")
    hi = np.searchsorted(vals, vals + sigma, side="right")
    return float(np.sum(hi - lo)) / vals.size**2


@dataclass(frozen=True)
class ExpSumResult:
    value: float
    standard_error: float
    exact: bool

    def __float__(self) -> float:
        return self.value


def exp_sum(
    zeta_tables: Sequence[Union[Dict[Word, float], np.ndarray]],
    eta: float,
    seed: int = 0,
    sample_budget: int = 200_000,
) -> ExpSumResult:
    """|N^{-k} sum over tuples of exp(2 pi i eta zeta_1(b_1)...zeta_k(b_k))|.

    Exact for k <= 2; Monte-Carlo with a reported standard error above.
    """
    tables = [
        np.asarray(list(t.values()) if isinstance(t, dict) else t, dtype=float)
        for t in zeta_tables
    ]
    if any(t.size == 0 for t in tables):
        raise DomainError("empty zeta table")
    k = len(tables)
    if k == 1:
        s = np.mean(np.exp(2j * np.pi * eta * tables[0]))
        return ExpSumResult(float(np.abs(s)), 0.0, True)
    if k == 2:
        acc = 0.0 + 0.0j
        for z1 in tables[0]:
            acc += np.sum(np.exp(2j * np.pi * eta * z1 * tables[1]))
        s = acc / (tables[0].size * tables[1].size)
        return ExpSumResult(float(np.abs(s)), 0.0, True)
    rng = np.random.default_rng(seed)
    prod = np.ones(sample_budget)
    for t in tables:
        prod *= rng.choice(t, size=sample_budget)
    terms = np.exp(2j * np.pi * eta * prod)
    mean = terms.mean()
    se = float(
        math.sqrt(terms.real.var(ddof=1) + terms.imag.var(ddof=1)) / math.sqrt(sample_budget)
    )
    return ExpSumResult(float(np.abs(mean)), se, False)


# ---------------------------------------------------------------------------
# parameter bookkeeping


def block_length_for_frequency(k: int, lam: float, eps0: float, xi: float) -> int:
    """n = floor(((2k+1) lambda + eps0) log|xi|), the word length matched to
    a target frequency."""
    if abs(xi) <= 1.0:
        raise DomainError("need |xi| > 1")
    return int(math.floor(((2 * k + 1) * lam + eps0) * math.log(abs(xi))))


@dataclass(frozen=True)
class SumProductParams:
    k: int
    eps: float
    eps0: float
    eps1: float
    eps2: float
    R: float
    n: int
    eta_window: Tuple[float, float]


def sum_product_params(
    k: int, eps: float, eps0: float, eps1: float, eps2: float, n: int
) -> SumProductParams:
    """R = e^{eps n} and the eta window [e^{eps0 n/2}, e^{(eps0+eps) n}]."""
    return SumProductParams(
        k=k,
        eps=eps,
        eps0=eps0,
        eps1=eps1,
        eps2=eps2,
        R=math.exp(eps * n),
        n=n,
        eta_window=(math.exp(eps0 * n / 2.0), math.exp((eps0 + eps) * n)),
    )


def sigma_window(params: SumProductParams) -> Tuple[float, float]:
    """The non-concentration scales checked against sigma^(eps0/4)."""
    n, e0, e1 = params.n, params.eps0, params.eps1
    return (
        math.exp(-e0 * (n - math.floor(e0 * n))),
        math.exp(-e0 * e1 * n / 2.0),
    )
