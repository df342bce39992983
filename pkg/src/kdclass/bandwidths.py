"""Per-query adaptive bandwidths by greedy coordinate-wise shrinking.

Starting from a common oversmoothed bandwidth ``h0 = c0 / log log n``, each
coordinate's bandwidth is multiplied by ``gamma`` while the derivative of the
density estimate with respect to that bandwidth stays large relative to its
sampling noise; coordinates whose derivative falls below the threshold
``sqrt(2 log(n log n))`` times its standard deviation are frozen. Irrelevant
coordinates therefore keep bandwidths near ``h0`` while informative ones
shrink, and the final bandwidth vector doubles as a relevance signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend

__all__ = [
    "ShrinkParams",
    "LocalBandwidths",
    "initial_bandwidth",
    "local_bandwidths",
    "bandwidth_matrix",
]


@dataclass(frozen=True)
class ShrinkParams:
    """Tuning constants for the shrinking loop.

    Attributes
    ----------
    c0 : float
        Scale of the initial bandwidth ``h0 = c0 / log log n``.
    gamma : float
        Multiplicative shrink factor, in (0, 1).
    h_min : float or None
        Hard floor; a shrink that would cross it deactivates the coordinate
        instead. ``None`` means ``h0 * gamma**100``.
    max_steps : int
        Cap on shrinks per coordinate; reaching it deactivates.
    raw_variance : bool
        Threshold against the spread of the individual derivative terms
        instead of the spread of their mean.
    """

    c0: float = 10.0
    gamma: float = 0.9
    h_min: float | None = None
    max_steps: int = 200
    raw_variance: bool = False

    def __post_init__(self) -> None:
        if not (self.c0 > 0 and math.isfinite(self.c0)):
            raise ValueError("c0 must be positive and finite")
        if not (0.0 < self.gamma < 1.0):
            raise ValueError("gamma must lie strictly between 0 and 1")
        if self.h_min is not None and not (self.h_min > 0 and math.isfinite(self.h_min)):
            raise ValueError("h_min must be positive and finite when given")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


@dataclass
class LocalBandwidths:
    """Result of one shrinking run.

    ``h[j] == h0 * gamma**steps[j]`` holds exactly, so ``steps`` records the
    full shrink history.
    """

    h: np.ndarray
    steps: np.ndarray
    h0: float
    log_density: float

    @property
    def density(self) -> float:
        return math.exp(self.log_density)


def initial_bandwidth(n_y: int, c0: float = 10.0) -> float:
    """Oversmoothed starting bandwidth ``c0 / log log n_y``.

    Requires ``n_y >= 16`` so the double log is safely positive.
    """
    if n_y < 16:
        raise ValueError(f"need at least 16 samples for a stable start, got {n_y}")
    if not (c0 > 0 and math.isfinite(c0)):
        raise ValueError("c0 must be positive and finite")
    return c0 / math.log(math.log(n_y))


def local_bandwidths(x, samples, params: ShrinkParams | None = None) -> LocalBandwidths:
    """Run the shrinking loop for one query point against one class sample.

    Parameters
    ----------
    x : array of shape (d,)
        Query point.
    samples : array of shape (n, d)
        Training points of a single class, n >= 16.
    params : ShrinkParams, optional

    Returns
    -------
    LocalBandwidths
        Final bandwidths, shrink counts, the starting bandwidth, and the log
        density estimate at the final bandwidths.
    """
    if params is None:
        params = ShrinkParams()
    x = np.asarray(x, dtype=np.float64).ravel()
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[0] < 2:
        raise ValueError("samples must be an (n, d) matrix with n >= 2")
    n, d = samples.shape
    if x.shape[0] != d:
        raise ValueError(f"query has length {x.shape[0]}, samples have d={d}")
    if not np.isfinite(x).all() or not np.isfinite(samples).all():
        raise ValueError("query and samples must be finite")

    h0 = initial_bandwidth(n, params.c0)
    cn = math.log(n)
    thresh_mult = math.sqrt(2.0 * math.log(n * cn))
    h_min = params.h_min if params.h_min is not None else h0 * math.pow(params.gamma, 100)

    dx2t = np.ascontiguousarray(((x[None, :] - samples) ** 2).T)
    h, steps, log_density = _backend.local_shrink(
        dx2t, h0, params.gamma, h_min, params.max_steps, thresh_mult,
        params.raw_variance,
    )
    return LocalBandwidths(h=h, steps=steps, h0=h0, log_density=log_density)


def bandwidth_matrix(queries, samples, params: ShrinkParams | None = None):
    """Run the shrinking loop for each query row.

    Returns ``(H, log_densities, steps)`` with ``H`` of shape (m, d): one
    bandwidth vector per query.
    """
    queries = np.asarray(queries, dtype=np.float64)
    if queries.ndim != 2:
        raise ValueError("queries must be an (m, d) matrix")
    m, d = queries.shape
    H = np.empty((m, d), dtype=np.float64)
    steps = np.empty((m, d), dtype=np.int64)
    log_densities = np.empty(m, dtype=np.float64)
    for i in range(m):
        res = local_bandwidths(queries[i], samples, params)
        H[i] = res.h
        steps[i] = res.steps
        log_densities[i] = res.log_density
    return H, log_densities, steps
