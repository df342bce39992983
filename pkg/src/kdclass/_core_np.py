"""Numpy fallback for the compiled bandwidth-shrinking loop.

Mirrors ``_core.pyx`` operation for operation (same incremental updates,
same cutoff rule, same guards) so the two backends agree to float reduction
order. Used when the extension is not built or when ``KDCLASS_BACKEND``
forces it.
"""

from __future__ import annotations

import math

import numpy as np

_NEG_CUTOFF = -45.0
_LOG_2PI = 1.8378770664093453


def backend_name() -> str:
    return "numpy"


def local_shrink(dx2t, h0, gamma, h_min, max_steps, thresh_mult, raw_variance):
    """Greedy per-coordinate bandwidth shrinking for a single query.

    Returns ``(h, steps, log_density)``; see the compiled twin for the
    contract.
    """
    dx2t = np.asarray(dx2t, dtype=np.float64)
    d, n = dx2t.shape
    if d < 1 or n < 2:
        raise ValueError("need at least 2 samples and 1 coordinate")

    h = np.full(d, h0, dtype=np.float64)
    steps = np.zeros(d, dtype=np.int64)
    inv_h2 = np.full(d, 1.0 / (h0 * h0), dtype=np.float64)

    L = np.zeros(n, dtype=np.float64)
    inv0 = 1.0 / (h0 * h0)
    for j in range(d):
        L -= 0.5 * dx2t[j] * inv0

    active = list(range(d))
    while active:
        survivors = []
        for j in active:
            hj = float(h[j])
            hj2 = hj * hj
            inv_h3 = 1.0 / (hj2 * hj)

            m = float(L.max())
            z = L - m
            g = (dx2t[j] - hj2) * inv_h3
            t = np.where(z < _NEG_CUTOFF, 0.0, g * np.exp(z))
            mean = float(t.sum()) / n
            var = float(((t - mean) ** 2).sum()) / (n - 1)
            if not raw_variance:
                var /= n

            keep = False
            if abs(mean) > thresh_mult * math.sqrt(var):
                if steps[j] + 1 <= max_steps:
                    h_new = h0 * math.pow(gamma, int(steps[j]) + 1)
                    if h_new >= h_min:
                        steps[j] += 1
                        h[j] = h_new
                        inv_new = 1.0 / (h_new * h_new)
                        L -= 0.5 * dx2t[j] * (inv_new - inv_h2[j])
                        inv_h2[j] = inv_new
                        keep = True
            if keep:
                survivors.append(j)
        active = survivors

    m = float(L.max())
    logden = m + math.log(float(np.exp(L - m).sum())) - math.log(n) - 0.5 * d * _LOG_2PI
    logden -= float(np.log(h).sum())
    return h, steps, float(logden)
