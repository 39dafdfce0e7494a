"""Group comparison layer: one-way ANOVA, Tukey HSD, significance letters.

The studentized range distribution is evaluated by direct numerical
integration (no table lookup): the range CDF of k standard normals is an
adaptive Gauss-Legendre integral, nested inside a second adaptive integral
over the chi distribution of the pooled standard deviation. Critical
values come from root-finding on that CDF and are verified against
published range tables in the test suite. P-values for the ANOVA F
statistic are reported as threshold bands (p < 0.05 / 0.01 / 0.001), the
tail mass being computed by adaptive quadrature of the F density.

Unequal group sizes use the Tukey-Kramer standard error. Letters follow
the insert-and-absorb construction, with 'a' assigned to the group with
the highest mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import ndtr

P_BANDS = (0.001, 0.01, 0.05)


@dataclass(frozen=True)
class GroupSample:
    group_name: str
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return sum(self.values) / len(self.values)


class GroupStats(NamedTuple):
    mean: float
    population_std: float
    sample_std: float
    n: int


def group_summary(sample: GroupSample) -> GroupStats:
    """Mean plus both std conventions; sample_std is NaN when n < 2."""
    n = sample.n
    if n == 0:
        raise ValueError(f"group {sample.group_name!r} is empty")
    mean = sample.mean
    ss = sum((v - mean) ** 2 for v in sample.values)
    pop = math.sqrt(ss / n)
    samp = math.sqrt(ss / (n - 1)) if n > 1 else math.nan
    return GroupStats(mean=mean, population_std=pop, sample_std=samp, n=n)


@dataclass(frozen=True)
class AnovaResult:
    f_stat: float
    df_between: int
    df_within: int
    ms_between: float
    ms_within: float
    p_below: float | None
    degenerate: bool


@dataclass(frozen=True)
class PairwiseComparison:
    group_a: str
    group_b: str
    mean_difference: float
    q_statistic: float
    significant_at_005: bool
    significant_at_0001: bool
    p_below: float | None


@dataclass(frozen=True)
class TukeyOutcome:
    pairwise: tuple[PairwiseComparison, ...]
    letters: dict[str, str]
    letters_alpha: float
    anova_f: float
    anova_p_below: float | None
    degenerate: bool


def _check_groups(groups: list[GroupSample]) -> None:
    if len(groups) < 2:
        raise ValueError(f"need at least 2 groups, got {len(groups)}")
    names = [g.group_name for g in groups]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate group names in {names}")
    for g in groups:
        if g.n < 2:
            raise ValueError(f"group {g.group_name!r} needs n >= 2, has {g.n}")


def _log_f_density(x: float, d1: int, d2: int) -> float:
    return (
        0.5 * d1 * (math.log(d1) - math.log(d2))
        + (0.5 * d1 - 1.0) * math.log(x)
        - 0.5 * (d1 + d2) * math.log1p(d1 * x / d2)
        - (math.lgamma(0.5 * d1) + math.lgamma(0.5 * d2) - math.lgamma(0.5 * (d1 + d2)))
    )


def f_tail_probability(f_stat: float, df_between: int, df_within: int) -> float:
    """P(F > f_stat), by adaptive quadrature of the F density.

    The tail integral over [f, inf) is mapped onto (0, 1] via x = f/u so
    QUADPACK sees a finite interval with at worst an integrable endpoint.
    """
    if f_stat <= 0.0:
        return 1.0
    if math.isinf(f_stat):
        return 0.0

    def substituted(u: float) -> float:
        x = f_stat / u
        return math.exp(_log_f_density(x, df_between, df_within)) * f_stat / (u * u)

    tail, _ = quad(substituted, 0.0, 1.0, epsabs=1e-300, epsrel=1e-10, limit=200)
    return min(max(tail, 0.0), 1.0)


def _band_below(p: float) -> float | None:
    for band in P_BANDS:
        if p < band:
            return band
    return None


def one_way_anova(groups: list[GroupSample]) -> AnovaResult:
    """Textbook sum-of-squares decomposition.

    Zero within-group variance is degenerate: F is +inf when any means
    differ (reported as clearing every significance band) and NaN when all
    values are identical.
    """
    _check_groups(groups)
    k = len(groups)
    n_total = sum(g.n for g in groups)
    grand = sum(sum(g.values) for g in groups) / n_total
    ss_between = sum(g.n * (g.mean - grand) ** 2 for g in groups)
    ss_within = sum(sum((v - g.mean) ** 2 for v in g.values) for g in groups)
    df_between = k - 1
    df_within = n_total - k
    ms_between = ss_between / df_between
    ms_within = ss_within / df_within
    if ms_within == 0.0:
        f_stat = math.inf if ms_between > 0.0 else math.nan
        p_below = P_BANDS[0] if ms_between > 0.0 else None
        return AnovaResult(f_stat, df_between, df_within, ms_between, ms_within, p_below, True)
    f_stat = ms_between / ms_within
    p_below = _band_below(f_tail_probability(f_stat, df_between, df_within))
    return AnovaResult(f_stat, df_between, df_within, ms_between, ms_within, p_below, False)


# -- studentized range distribution ------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)
_NORM_SCALE = 1.0 / math.sqrt(2.0 * math.pi)
_W_CHUNK = 2048


def _panel_points(a: float, b: float, panels: int) -> tuple[np.ndarray, np.ndarray]:
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    wts = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return pts, wts


def _normal_range_cdf_fixed(w: np.ndarray, k: int, panels: int) -> np.ndarray:
    """P(range of k iid standard normals <= w), elementwise, fixed rule."""
    u, wu = _panel_points(-9.0, 9.0, panels)
    phi_w = wu * _NORM_SCALE * np.exp(-0.5 * u * u)
    cdf_u = ndtr(u)
    out = np.zeros_like(w, dtype=np.float64)
    pos = w > 0.0
    wp = w[pos]
    chunks = []
    for start in range(0, wp.size, _W_CHUNK):
        block = wp[start : start + _W_CHUNK]
        span = cdf_u[:, None] - ndtr(u[:, None] - block[None, :])
        np.clip(span, 0.0, 1.0, out=span)
        chunks.append(k * (phi_w @ span ** (k - 1)))
    if chunks:
        out[pos] = np.clip(np.concatenate(chunks), 0.0, 1.0)
    return out


def _normal_range_cdf(w: np.ndarray, k: int, tol: float = 1e-9) -> np.ndarray:
    prev = _normal_range_cdf_fixed(w, k, 24)
    panels = 48
    while panels <= 192:
        cur = _normal_range_cdf_fixed(w, k, panels)
        if np.max(np.abs(cur - prev)) <= tol:
            return cur
        prev = cur
        panels *= 2
    return prev


def _log_scaled_chi_density(s: np.ndarray, df: int) -> np.ndarray:
    # density of chi_df / sqrt(df), evaluated in log space
    half = 0.5 * df
    return (
        half * math.log(df)
        - (half - 1.0) * math.log(2.0)
        - math.lgamma(half)
        + (df - 1.0) * np.log(s)
        - half * s * s
    )


def studentized_range_cdf(q: float, k: int, df: int, tol: float = 1e-6) -> float:
    """P(Q <= q) for the studentized range of k groups with df error dof.

    Nested adaptive quadrature: the normal-range CDF (inner integral) is
    averaged over the scaled-chi density of the pooled standard deviation
    (outer integral), each rule refined until successive estimates agree
    within the requested absolute tolerance.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if df < 1:
        raise ValueError("df must be >= 1")
    if q <= 0.0:
        return 0.0

    spread = 9.0 * math.sqrt(2.0 / df)
    lo, hi = max(0.0, 1.0 - spread), 1.0 + spread

    def estimate(panels: int) -> float:
        s, ws = _panel_points(lo, hi, panels)
        keep = s > 0.0
        s, ws = s[keep], ws[keep]
        density = np.exp(_log_scaled_chi_density(s, df))
        inner = _normal_range_cdf(q * s, k, tol=tol * 1e-3)
        return float(np.sum(ws * density * inner))

    prev = estimate(16)
    panels = 32
    while panels <= 512:
        cur = estimate(panels)
        if abs(cur - prev) <= 0.2 * tol:
            return min(max(cur, 0.0), 1.0)
        prev = cur
        panels *= 2
    return min(max(prev, 0.0), 1.0)


_Q_CRIT_CACHE: dict[tuple[int, int, float], float] = {}


def q_critical(k: int, df: int, alpha: float) -> float:
    """Upper critical value q with P(Q > q) = alpha, by CDF inversion."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    key = (k, df, alpha)
    if key not in _Q_CRIT_CACHE:
        target = 1.0 - alpha
        hi = 4.0
        while studentized_range_cdf(hi, k, df) < target:
            hi *= 2.0
            if hi > 1e4:
                raise ArithmeticError("failed to bracket studentized range quantile")
        _Q_CRIT_CACHE[key] = brentq(
            lambda q: studentized_range_cdf(q, k, df) - target, 1e-6, hi, xtol=1e-7
        )
    return _Q_CRIT_CACHE[key]


# -- Tukey HSD and compact letter display -------------------------------------


def _letter_symbol(index: int) -> str:
    if index < 26:
        return chr(ord("a") + index)
    return chr(ord("a") + index // 26 - 1) + chr(ord("a") + index % 26)


def compact_letter_display(
    names_by_desc_mean: list[str], significant: set[tuple[str, str]]
) -> dict[str, str]:
    """Insert-and-absorb letter assignment.

    Groups sharing a letter are exactly the pairs not flagged significant;
    'a' goes to the set containing the highest-mean group.
    """
    index = {name: i for i, name in enumerate(names_by_desc_mean)}
    columns: list[set[str]] = [set(names_by_desc_mean)]
    pairs = sorted(significant, key=lambda p: (index[p[0]], index[p[1]]))
    for a, b in pairs:
        next_cols: list[set[str]] = []
        for col in columns:
            if a in col and b in col:
                next_cols.append(col - {b})
                next_cols.append(col - {a})
            else:
                next_cols.append(col)
        # absorb: drop strict subsets and duplicates
        kept: list[set[str]] = []
        for col in next_cols:
            if any(col < other for other in next_cols) or col in kept:
                continue
            kept.append(col)
        columns = kept
    columns.sort(key=lambda col: tuple(sorted(index[n] for n in col)))
    letters = {name: "" for name in names_by_desc_mean}
    for i, col in enumerate(columns):
        symbol = _letter_symbol(i)
        for name in col:
            letters[name] += symbol
    return {name: "".join(sorted(s)) for name, s in letters.items()}


def tukey_hsd(groups: list[GroupSample], letters_alpha: float = 0.05) -> TukeyOutcome:
    """All pairwise Tukey(-Kramer) comparisons plus significance letters.

    q_ij = |mean_i - mean_j| / sqrt(MS_within / 2 * (1/n_i + 1/n_j)),
    compared against the studentized range critical value at each alpha.
    Letters are governed by letters_alpha (default 0.05, the convention
    used for letter displays).
    """
    if not 0.0 < letters_alpha < 0.5:
        raise ValueError(f"letters_alpha must be in (0, 0.5), got {letters_alpha}")
    anova = one_way_anova(groups)
    k = len(groups)
    df = anova.df_within
    crit: dict[float, float] = {}
    for alpha in set(P_BANDS) | {letters_alpha}:
        crit[alpha] = q_critical(k, df, alpha)

    def q_of(gi: GroupSample, gj: GroupSample) -> float:
        diff = abs(gi.mean - gj.mean)
        se = math.sqrt(anova.ms_within / 2.0 * (1.0 / gi.n + 1.0 / gj.n))
        if se == 0.0:
            return math.inf if diff > 0.0 else 0.0
        return diff / se

    pairwise = []
    letter_pairs: set[tuple[str, str]] = set()
    for i in range(k):
        for j in range(i + 1, k):
            gi, gj = groups[i], groups[j]
            q = q_of(gi, gj)
            pair_band = None
            for band in P_BANDS:
                if q > crit[band]:
                    pair_band = band
                    break
            pairwise.append(
                PairwiseComparison(
                    group_a=gi.group_name,
                    group_b=gj.group_name,
                    mean_difference=gi.mean - gj.mean,
                    q_statistic=q,
                    significant_at_005=q > crit[0.05],
                    significant_at_0001=q > crit[0.001],
                    p_below=pair_band,
                )
            )
            if q > crit[letters_alpha]:
                letter_pairs.add((gi.group_name, gj.group_name))

    order = sorted(range(k), key=lambda i: (-groups[i].mean, i))
    names_desc = [groups[i].group_name for i in order]
    letters = compact_letter_display(names_desc, letter_pairs)
    return TukeyOutcome(
        pairwise=tuple(pairwise),
        letters=letters,
        letters_alpha=letters_alpha,
        anova_f=anova.f_stat,
        anova_p_below=anova.p_below,
        degenerate=anova.degenerate,
    )
