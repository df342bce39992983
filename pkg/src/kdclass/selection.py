"""Class-specific relevant-variable identification from bandwidth matrices.

Input is an (n, d) matrix of per-query final bandwidths for one class, one
row per query point, one column per variable. Relevant variables end up with
systematically small column means. The procedure:

1. one-way ANOVA across the d columns; if the equal-means hypothesis is not
   rejected at level alpha, nothing is relevant;
2. otherwise sort the column means ascending and find the largest position m
   whose mean is significantly below ALL later ones under the Tukey
   honestly-significant-difference criterion; since the means are sorted,
   that reduces to the gap between positions m and m+1;
3. declare relevant every variable whose mean is at or below the cut mean,
   which keeps tie groups intact.

A within-column mean square of zero (the shrinking loop froze every query at
identical bandwidths) is a degeneracy signal: the result is flagged and the
relevant set is empty rather than dividing by zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .statdist import f_upper_quantile, studentized_range_upper_quantile

__all__ = ["SelectionResult", "anova_equal_means", "tukey_cut", "select_relevant"]


@dataclass
class SelectionResult:
    """Outcome of one selection run.

    ``relevant``/``complement`` are 0-based column indices. ``cut_mean`` is
    the largest column mean still declared relevant (None when nothing is).
    """

    relevant: list[int]
    complement: list[int]
    means: np.ndarray
    f_stat: float
    anova_rejected: bool
    cut_mean: float | None
    degenerate: bool
    alpha: float


def _validate_matrix(bandwidths) -> np.ndarray:
    bw = np.asarray(bandwidths, dtype=np.float64)
    if bw.ndim != 2:
        raise ValueError("bandwidth matrix must be 2-d (queries by variables)")
    n, d = bw.shape
    if n < 2:
        raise ValueError("need at least 2 bandwidth rows")
    if d < 2:
        raise ValueError("need at least 2 variables to compare")
    if not np.isfinite(bw).all() or np.any(bw <= 0.0):
        raise ValueError("bandwidths must be finite and strictly positive")
    return bw


def _mean_squares(bw: np.ndarray) -> tuple[np.ndarray, float, float]:
    n, d = bw.shape
    means = bw.mean(axis=0)
    grand = bw.mean()
    ms_between = n * float(np.sum((means - grand) ** 2)) / (d - 1)
    ms_within = float(np.sum((bw - means[None, :]) ** 2)) / (n * d - d)
    return means, ms_between, ms_within


def anova_equal_means(bandwidths, alpha: float = 0.05):
    """One-way ANOVA across bandwidth columns.

    Returns ``(f_stat, rejected)``; a zero within-column mean square gives
    ``(inf, False)`` so callers treat it as degenerate, never as evidence.
    """
    bw = _validate_matrix(bandwidths)
    n, d = bw.shape
    _, ms_between, ms_within = _mean_squares(bw)
    if ms_within == 0.0:
        return math.inf, False
    f_stat = ms_between / ms_within
    crit = f_upper_quantile(alpha, d - 1, n * d - d)
    return f_stat, f_stat > crit


def tukey_cut(bandwidths, alpha: float = 0.05) -> int | None:
    """Position of the honestly-significant gap in the sorted column means.

    Returns the largest 1-based position m (in ascending-mean order) whose
    mean sits significantly below every later one, or None when no gap
    qualifies. Must only be called when the ANOVA rejected; calling it
    otherwise is a contract violation.
    """
    bw = _validate_matrix(bandwidths)
    f_stat, rejected = anova_equal_means(bw, alpha)
    if not rejected:
        raise ValueError("gap cut requires a rejected equal-means hypothesis")
    means, _, ms_within = _mean_squares(bw)
    return _cut_position(means, ms_within, bw.shape[0], alpha)


def _cut_position(means: np.ndarray, ms_within: float, n: int, alpha: float) -> int | None:
    d = means.shape[0]
    crit = studentized_range_upper_quantile(alpha, d, n * d - d) / math.sqrt(2.0)
    denom = math.sqrt(ms_within * 2.0 / n)
    sorted_means = np.sort(means)
    # sorted ascending, so "significant vs all later" reduces to the adjacent gap
    cut = None
    for m in range(d - 1):
        if (sorted_means[m + 1] - sorted_means[m]) / denom > crit:
            cut = m + 1
    return cut


def select_relevant(bandwidths, alpha: float = 0.05) -> SelectionResult:
    """Identify the relevant variables for one class.

    Parameters
    ----------
    bandwidths : array of shape (n, d)
        Final bandwidth vectors for n query points of a single class.
    alpha : float
        Significance level shared by the ANOVA and the gap criterion.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie strictly between 0 and 1, got {alpha}")
    bw = _validate_matrix(bandwidths)
    n, d = bw.shape
    means, ms_between, ms_within = _mean_squares(bw)

    if ms_within == 0.0:
        return SelectionResult(
            relevant=[], complement=list(range(d)), means=means,
            f_stat=math.inf, anova_rejected=False, cut_mean=None,
            degenerate=True, alpha=alpha,
        )

    f_stat = ms_between / ms_within
    rejected = f_stat > f_upper_quantile(alpha, d - 1, n * d - d)
    cut_mean = None
    relevant: list[int] = []
    if rejected:
        cut = _cut_position(means, ms_within, n, alpha)
        if cut is not None:
            cut_mean = float(np.sort(means)[cut - 1])
            relevant = [j for j in range(d) if means[j] <= cut_mean]
    complement = [j for j in range(d) if j not in set(relevant)]
    return SelectionResult(
        relevant=relevant, complement=complement, means=means,
        f_stat=f_stat, anova_rejected=rejected, cut_mean=cut_mean,
        degenerate=False, alpha=alpha,
    )
