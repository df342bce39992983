"""Two-stage per-class training-size planning.

The error contribution of class y scales like B_y / A_y with
``A_y = n_y**((2+r)/(4+r))`` (r the class's relevant-variable count) and
``B_y`` a curvature-plus-roughness functional of the class density restricted
to its relevant coordinates. The total error budget is spent best when A is
proportional to B, so the planner solves ``n_y = (lam * B_y)**((4+r)/(2+r))``
for the scale ``lam`` making the sizes exhaust the budget, then rounds to
integers by largest remainder so the total is exact.

B is estimated by Monte Carlo over the class's own samples: with draws from
the estimated density, averaging ``g(x)/f(x)`` estimates ``integral g``, so

    B = (nu/2) * mean_i |sum_j k_j^2 f_jj(x_i)| / f(x_i)
        + kappa(r) * (prod_j k_j)**(-1/2) * mean_i f(x_i)**(-1/2),

with the per-coordinate scale constants ``k_j = h_j * n_y**(1/(4+r))`` read
off the estimated bandwidths. Samples where the density underflows to zero
are excluded and counted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bandwidths import ShrinkParams, bandwidth_matrix
from .classify import FitModel, fit
from .data import LabeledDataset
from .density import KernelConstants, kernel_constants
from .selection import SelectionResult, select_relevant

__all__ = [
    "ClassAllocation",
    "SizePlan",
    "estimate_b",
    "plan_sizes",
    "two_stage",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class ClassAllocation:
    """Planner state for one class."""

    label: str
    n_current: int
    n_planned: int
    a_value: float
    b_value: float | None
    r_hat: int
    k_hat: list[float]
    excluded_samples: int
    uniform_share: bool  # True when r_hat = 0 forced a budget-share fallback
    shortfall: int = 0


@dataclass
class SizePlan:
    """Planned per-class sizes under a total budget and error target."""

    classes: list[ClassAllocation]
    lam: float
    epsilon: float
    n_total: int
    feasible: bool

    @property
    def sizes(self) -> list[int]:
        return [c.n_planned for c in self.classes]

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "kdclass-size-plan",
            "epsilon": self.epsilon,
            "n_total": self.n_total,
            "lambda": self.lam,
            "feasible": self.feasible,
            "classes": [
                {
                    "label": c.label,
                    "n_current": c.n_current,
                    "n_planned": c.n_planned,
                    "A": c.a_value,
                    "B": c.b_value,
                    "r_hat": c.r_hat,
                    "k_hat": c.k_hat,
                    "excluded_samples": c.excluded_samples,
                    "uniform_share": c.uniform_share,
                    "shortfall": c.shortfall,
                }
                for c in self.classes
            ],
        }


def _restricted_terms(samples: np.ndarray, cols: list[int], h: np.ndarray):
    """Mean density, curvature ratio, and inverse-sqrt mean at the samples.

    Evaluates the class density restricted to ``cols`` with bandwidths ``h``
    at every class sample. Returns per-sample ``(log_f, ratio)`` where
    ``ratio[i][j]`` is ``f_jj(x_i) / f(x_i)``; the max-shifted scale cancels
    in the ratio, so it never under- or overflows.
    """
    S = np.ascontiguousarray(samples[:, cols])
    n, r = S.shape
    u = (S[:, None, :] - S[None, :, :]) / h[None, None, :]
    logs = -0.5 * np.sum(u * u, axis=2) - float(np.sum(np.log(h))) - 0.5 * r * _LOG_2PI
    m = logs.max(axis=1)
    p = np.exp(logs - m[:, None])
    mean_p = p.mean(axis=1)
    log_f = m + np.log(mean_p)  # log of (1/n) sum_k contributions
    # g[i, k, j] = (u_ikj^2 - 1) / h_j^2, curvature weight of sample k at point i
    g = (u * u - 1.0) / h[None, None, :] / h[None, None, :]
    ratio = (g * p[:, :, None]).mean(axis=1) / mean_p[:, None]
    return log_f, ratio


def estimate_b(
    samples,
    relevant: list[int],
    h_bar,
    n_y: int | None = None,
    constants: KernelConstants | None = None,
):
    """Estimate the allocation numerator B for one class.

    Parameters
    ----------
    samples : array of shape (n, d)
        The class's training rows (also the Monte Carlo draws).
    relevant : list of int
        0-based relevant column indices, non-empty.
    h_bar : array of length d (or len(relevant))
        Mean estimated bandwidths; only the relevant entries are used.
    n_y : int, optional
        Class size for the bandwidth-to-scale conversion; defaults to
        ``len(samples)``.
    constants : KernelConstants, optional

    Returns
    -------
    (b_value, k_hat, excluded) : float, list of float, int
        The estimate, the per-coordinate scale constants, and how many
        samples were dropped because the density underflowed.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[0] < 2:
        raise ValueError("samples must be an (n, d) matrix with n >= 2")
    if not relevant:
        raise ValueError("need at least one relevant coordinate to plan")
    cols = sorted(set(int(j) for j in relevant))
    if any(not 0 <= j < samples.shape[1] for j in cols):
        raise ValueError("relevant column index out of range")
    h_bar = np.asarray(h_bar, dtype=np.float64).ravel()
    if h_bar.shape[0] == samples.shape[1]:
        h = h_bar[cols]
    elif h_bar.shape[0] == len(cols):
        h = h_bar.copy()
    else:
        raise ValueError("h_bar must cover all columns or exactly the relevant ones")
    if np.any(h <= 0) or not np.isfinite(h).all():
        raise ValueError("bandwidths must be finite and strictly positive")
    if constants is None:
        constants = kernel_constants()
    if n_y is None:
        n_y = samples.shape[0]

    r = len(cols)
    k_hat = h * float(n_y) ** (1.0 / (4.0 + r))

    log_f, ratio = _restricted_terms(samples, cols, h)
    f = np.exp(log_f)
    keep = f > 0.0
    excluded = int(np.sum(~keep))
    if not np.any(keep):
        raise ValueError("density underflowed at every sample; cannot estimate B")

    curv = np.abs(ratio[keep] @ (k_hat * k_hat))
    term1 = 0.5 * constants.second_moment * float(np.mean(curv))
    inv_sqrt_f = np.exp(-0.5 * log_f[keep])
    term2 = (
        constants.roughness_power(r)
        * float(np.prod(k_hat)) ** -0.5
        * float(np.mean(inv_sqrt_f))
    )
    return term1 + term2, [float(k) for k in k_hat], excluded


def _size_exponent(r: int) -> float:
    return (4.0 + r) / (2.0 + r)


def _largest_remainder(raw: np.ndarray, total: int) -> list[int]:
    floors = np.floor(raw).astype(int)
    floors = np.maximum(floors, 0)
    short = total - int(floors.sum())
    if short < 0:
        # degenerate oversupply from clamping; trim from the largest entries
        order = np.argsort(-floors, kind="stable")
        for idx in order:
            if short == 0:
                break
            take = min(-short, floors[idx])
            floors[idx] -= take
            short += take
        return [int(v) for v in floors]
    remainders = raw - np.floor(raw)
    order = np.argsort(-remainders, kind="stable")  # ties break to lower index
    out = floors.copy()
    for idx in order[:short]:
        out[idx] += 1
    return [int(v) for v in out]


def plan_sizes(
    model: FitModel,
    selections: list[SelectionResult],
    epsilon: float,
    n_total: int,
    constants: KernelConstants | None = None,
) -> SizePlan:
    """Solve the proportional allocation for a fitted pilot.

    ``selections`` must align with ``model.groups``. Classes with an empty
    relevant set cannot enter the proportional solve; they are planned at the
    uniform share of the budget and flagged.
    """
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ValueError("epsilon must be positive and finite")
    if len(selections) != len(model.groups):
        raise ValueError("need one selection result per class")
    current_total = sum(model.class_sizes)
    if n_total < current_total:
        raise ValueError(
            f"budget {n_total} is below the current total {current_total}"
        )
    if constants is None:
        constants = kernel_constants()

    c = len(model.groups)
    labels = model.labels
    sizes_now = model.class_sizes
    r_hats, b_vals, k_hats, excluded = [], [], [], []
    for group, sel in zip(model.groups, selections):
        r = len(sel.relevant)
        r_hats.append(r)
        if r == 0:
            b_vals.append(None)
            k_hats.append([])
            excluded.append(0)
            continue
        b, k_hat, exc = estimate_b(
            group.samples, sel.relevant, sel.means, group.samples.shape[0], constants
        )
        b_vals.append(b)
        k_hats.append(k_hat)
        excluded.append(exc)

    solve_idx = [i for i in range(c) if r_hats[i] >= 1]
    uniform_idx = [i for i in range(c) if r_hats[i] == 0]
    raw = np.zeros(c, dtype=np.float64)
    share = n_total / c
    for i in uniform_idx:
        raw[i] = share
    budget = n_total - share * len(uniform_idx)
    lam = 0.0
    if solve_idx:
        b_arr = np.array([b_vals[i] for i in solve_idx], dtype=np.float64)
        expo = np.array([_size_exponent(r_hats[i]) for i in solve_idx])

        def total(lam_val: float) -> float:
            return float(np.sum((lam_val * b_arr) ** expo))

        lo, hi = 0.0, 1.0
        while total(hi) < budget:
            hi *= 2.0
            if hi > 1e30:
                raise RuntimeError("allocation scale failed to bracket the budget")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if total(mid) < budget:
                lo = mid
            else:
                hi = mid
        lam = 0.5 * (lo + hi)
        raw[solve_idx] = (lam * b_arr) ** expo

    sizes = _largest_remainder(raw, n_total)
    # feasibility: budgeted error at the solution, A evaluated at the raw sizes
    ab = 0.0
    for i in solve_idx:
        ab += float(raw[i]) ** (1.0 / _size_exponent(r_hats[i])) * b_vals[i]
    feasible = bool(ab <= n_total * epsilon)

    classes = []
    for i in range(c):
        a_val = float(sizes_now[i]) ** (1.0 / _size_exponent(r_hats[i]))
        classes.append(
            ClassAllocation(
                label=labels[i],
                n_current=sizes_now[i],
                n_planned=sizes[i],
                a_value=a_val,
                b_value=b_vals[i],
                r_hat=r_hats[i],
                k_hat=k_hats[i],
                excluded_samples=excluded[i],
                uniform_share=(r_hats[i] == 0),
            )
        )
    return SizePlan(classes=classes, lam=lam, epsilon=epsilon, n_total=n_total, feasible=feasible)


def two_stage(
    pilot: LabeledDataset,
    epsilon: float,
    n_total: int,
    sampler: Callable[[str, int], np.ndarray],
    params: ShrinkParams | None = None,
    alpha: float = 0.05,
    min_pilot: int = 30,
) -> tuple[SizePlan, FitModel]:
    """Estimation step on the pilot, then resampling to the planned sizes.

    The pilot needs a workable size per class (default 30). ``sampler`` is
    called as ``sampler(label, count)`` for every class needing more rows and
    may return fewer than requested; the shortfall is recorded on the plan.
    Returns the plan and the refit model on the augmented data.
    """
    model = fit(pilot, params)
    for group in model.groups:
        if group.samples.shape[0] < min_pilot:
            raise ValueError(
                f"class {group.label!r} pilot has {group.samples.shape[0]} rows; "
                f"need at least {min_pilot}"
            )
    selections = []
    for group in model.groups:
        H, _, _ = bandwidth_matrix(group.samples, group.samples, model.params)
        selections.append(select_relevant(H, alpha))

    plan = plan_sizes(model, selections, epsilon, n_total)

    X_parts = [pilot.X]
    labels = list(pilot.labels)
    for alloc, group in zip(plan.classes, model.groups):
        need = max(0, alloc.n_planned - alloc.n_current)
        if need == 0:
            continue
        extra = np.asarray(sampler(alloc.label, need), dtype=np.float64)
        if extra.ndim != 2 or extra.shape[1] != model.d:
            raise ValueError(
                f"sampler for class {alloc.label!r} returned shape {extra.shape}, "
                f"expected (m, {model.d})"
            )
        if extra.shape[0] > need:
            extra = extra[:need]
        if not np.isfinite(extra).all():
            raise ValueError(f"sampler for class {alloc.label!r} returned non-finite rows")
        alloc.shortfall = need - extra.shape[0]
        if extra.shape[0]:
            X_parts.append(extra)
            labels.extend([alloc.label] * extra.shape[0])
    augmented = LabeledDataset(np.vstack(X_parts), labels)
    refit = fit(augmented, model.params, model.uniform_priors)
    return plan, refit
