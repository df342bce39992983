"""Per-class training-size planning."""

import math

import numpy as np
import pytest

import kdclass.planning as planning
from kdclass.classify import fit
from kdclass.data import LabeledDataset
from kdclass.density import kernel_constants, log_class_density, second_partial
from kdclass.planning import (
    _largest_remainder,
    _size_exponent,
    estimate_b,
    plan_sizes,
    two_stage,
)
from kdclass.selection import SelectionResult


def _selection(relevant, means, d):
    relevant = sorted(relevant)
    return SelectionResult(
        relevant=relevant,
        complement=[j for j in range(d) if j not in relevant],
        means=np.asarray(means, dtype=np.float64),
        f_stat=100.0,
        anova_rejected=True,
        cut_mean=max((means[j] for j in relevant), default=None),
        degenerate=False,
        alpha=0.05,
    )


def _reference_b(samples, cols, h, n_y):
    """Rebuild the estimate term by term from the public density API."""
    kc = kernel_constants()
    S = samples[:, cols]
    r = len(cols)
    k_hat = h * n_y ** (1.0 / (4.0 + r))
    curv, inv_sqrt = [], []
    for x in S:
        log_f = log_class_density(x, S, h)
        f = math.exp(log_f)
        total = sum(
            k_hat[a] ** 2 * second_partial(x, S, h, a) for a in range(r)
        )
        curv.append(abs(total) / f)
        inv_sqrt.append(f ** -0.5)
    term1 = 0.5 * kc.second_moment * float(np.mean(curv))
    term2 = kc.roughness_power(r) * float(np.prod(k_hat)) ** -0.5 * float(
        np.mean(inv_sqrt)
    )
    return term1, term2


class TestEstimateB:
    def test_matches_public_density_api(self):
        rng = np.random.default_rng(40)
        samples = np.column_stack([
            rng.normal(0.0, 1.0, 25),
            rng.normal(2.0, 0.5, 25),
            rng.uniform(0, 1, 25),
        ])
        h = np.array([0.4, 0.2])
        b, k_hat, excluded = estimate_b(samples, [0, 1], np.array([0.4, 0.2, 9.9]))
        term1, term2 = _reference_b(samples, [0, 1], h, 25)
        assert b == pytest.approx(term1 + term2, rel=1e-12)
        assert excluded == 0
        expect_k = h * 25 ** (1.0 / 6.0)
        np.testing.assert_allclose(k_hat, expect_k, rtol=1e-15)

    def test_full_and_restricted_h_agree(self):
        rng = np.random.default_rng(41)
        samples = rng.normal(0.0, 1.0, (30, 4))
        full = np.array([0.3, 9.0, 0.5, 9.0])
        b1, k1, _ = estimate_b(samples, [0, 2], full)
        b2, k2, _ = estimate_b(samples, [0, 2], np.array([0.3, 0.5]))
        assert b1 == b2
        assert k1 == k2

    def test_quadrature_oracle_one_dim(self):
        """On a large normal sample the method approximates the quadrature
        value of the same functional of the estimated density."""
        rng = np.random.default_rng(2024)
        samples = rng.normal(0.0, 1.0, (2000, 1))
        h = np.array([0.25])
        n = 2000
        b, k_hat, excluded = estimate_b(samples, [0], h)
        assert excluded == 0

        grid = np.linspace(-6.0, 6.0, 4001)
        f = np.empty_like(grid)
        fpp = np.empty_like(grid)
        for i, g in enumerate(grid):
            x = np.array([g])
            f[i] = math.exp(log_class_density(x, samples, h))
            fpp[i] = second_partial(x, samples, h, 0)
        kc = kernel_constants()
        k = float(k_hat[0])
        term1 = 0.5 * kc.second_moment * np.trapezoid(np.abs(k * k * fpp), grid)
        term2 = kc.roughness_power(1) * k ** -0.5 * np.trapezoid(np.sqrt(f), grid)
        assert b == pytest.approx(term1 + term2, rel=0.05)

    def test_flat_density_is_roughness_dominated(self):
        """On an even grid with a narrow kernel the curvature term vanishes
        and the estimate collapses to the roughness term."""
        samples = np.linspace(0.0, 1.0, 1000)[:, None]
        h = np.array([0.01])
        b, k_hat, _ = estimate_b(samples, [0], h)
        kc = kernel_constants()
        # reference roughness term: f is ~1 on [0, 1], so mean f^-1/2 is ~1
        S = samples[np.abs(samples[:, 0] - 0.5) < 0.4]
        inv = [math.exp(-0.5 * log_class_density(x, samples, h)) for x in S]
        term2_ref = kc.roughness_power(1) * float(k_hat[0]) ** -0.5 * float(np.mean(inv))
        assert b >= term2_ref * 0.999
        assert b == pytest.approx(term2_ref, rel=0.05)

    def test_identical_samples_identical_b(self):
        rng = np.random.default_rng(44)
        samples = rng.normal(0.5, 0.1, (40, 3))
        h = np.array([0.1, 0.2, 0.3])
        a = estimate_b(samples, [0, 1], h)
        b = estimate_b(samples.copy(), [0, 1], h.copy())
        assert a[0] == b[0]

    def test_total_underflow_rejected(self):
        rng = np.random.default_rng(45)
        samples = rng.normal(0.0, 1.0, (10, 3))
        with pytest.raises(ValueError, match="underflow"):
            estimate_b(samples, [0, 1, 2], np.full(3, 1e160))

    def test_validation(self):
        samples = np.random.default_rng(0).normal(0, 1, (10, 3))
        with pytest.raises(ValueError):
            estimate_b(samples[0], [0], np.array([0.1]))
        with pytest.raises(ValueError):
            estimate_b(samples, [], np.array([0.1, 0.1, 0.1]))
        with pytest.raises(ValueError):
            estimate_b(samples, [3], np.full(3, 0.1))
        with pytest.raises(ValueError):
            estimate_b(samples, [0, 1], np.full(4, 0.1))
        with pytest.raises(ValueError):
            estimate_b(samples, [0], np.array([0.0, 0.1, 0.1]))


class TestLargestRemainder:
    def test_ties_break_to_lower_index(self):
        assert _largest_remainder(np.array([1.5, 2.5, 3.0]), 8) == [2, 3, 3]

    def test_exact_total(self):
        rng = np.random.default_rng(46)
        for _ in range(20):
            raw = rng.uniform(0, 50, 5)
            total = int(round(raw.sum())) + rng.integers(-2, 3)
            total = max(total, 0)
            out = _largest_remainder(raw, total)
            assert sum(out) == total
            assert all(v >= 0 for v in out)

    def test_oversupply_trims_largest(self):
        assert _largest_remainder(np.array([5.2, 4.3]), 7) == [3, 4]


class TestSizeExponent:
    def test_values(self):
        assert _size_exponent(1) == pytest.approx(5.0 / 3.0, rel=1e-15)
        assert _size_exponent(2) == 1.5
        assert _size_exponent(4) == pytest.approx(4.0 / 3.0, rel=1e-15)


def _pilot_model(seed=50, n=100, d=4, shift=0.0):
    rng = np.random.default_rng(seed)
    block = lambda loc: np.column_stack(
        [rng.normal(loc, 0.05, n), rng.normal(loc, 0.1, n)]
        + [rng.uniform(0, 1, n) for _ in range(d - 2)]
    )
    X = np.vstack([block(0.4), block(0.6 + shift)])
    return fit(LabeledDataset(X, ["a"] * n + ["b"] * n))


class TestPlanSizes:
    def test_symmetric_classes_split_evenly(self):
        rng = np.random.default_rng(52)
        block = np.column_stack(
            [rng.normal(0.5, 0.05, 50), rng.uniform(0, 1, 50)]
        )
        X = np.vstack([block, block])
        model = fit(LabeledDataset(X, ["a"] * 50 + ["b"] * 50))
        sel = _selection([0], [0.05, 3.0], 2)
        plan = plan_sizes(model, [sel, sel], epsilon=0.1, n_total=300)
        assert plan.sizes == [150, 150]
        a, b = plan.classes
        assert a.b_value == b.b_value
        assert a.a_value == b.a_value

    def test_budget_exhausted_and_proportional(self):
        model = _pilot_model()
        sels = [
            _selection([0, 1], [0.3, 0.4, 5.0, 5.0], 4),
            _selection([0, 1], [0.2, 0.5, 5.0, 5.0], 4),
        ]
        budget = 1000
        plan = plan_sizes(model, sels, epsilon=0.05, n_total=budget)
        assert sum(plan.sizes) == budget
        raw = [
            (plan.lam * c.b_value) ** _size_exponent(c.r_hat) for c in plan.classes
        ]
        assert abs(sum(raw) - budget) <= 1e-6 * budget
        assert plan.sizes == _largest_remainder(np.array(raw), budget)
        # A at the current size: both classes hold 100 rows with r = 2
        for c in plan.classes:
            assert c.a_value == 100.0 ** (2.0 / 3.0)

    def test_equal_b_favors_fewer_relevant_coordinates(self, monkeypatch):
        """With matched B the class converging faster (smaller r) absorbs
        more of the budget, because its size enters the error at a stronger
        exponent."""
        monkeypatch.setattr(
            planning, "estimate_b",
            lambda samples, relevant, h_bar, n_y=None, constants=None: (
                1.0, [1.0] * len(relevant), 0
            ),
        )
        model = _pilot_model()
        sels = [
            _selection([0], [0.3, 5.0, 5.0, 5.0], 4),
            _selection([0, 1, 2, 3], [0.3, 0.3, 0.3, 0.3], 4),
        ]
        plan = plan_sizes(model, sels, epsilon=0.05, n_total=600)
        assert plan.classes[0].r_hat == 1
        assert plan.classes[1].r_hat == 4
        assert plan.sizes[0] > plan.sizes[1]

    def test_larger_b_gets_more(self, monkeypatch):
        values = iter([2.0, 1.0])
        monkeypatch.setattr(
            planning, "estimate_b",
            lambda samples, relevant, h_bar, n_y=None, constants=None: (
                next(values), [1.0] * len(relevant), 0
            ),
        )
        model = _pilot_model()
        sel = _selection([0, 1], [0.3, 0.4, 5.0, 5.0], 4)
        plan = plan_sizes(model, [sel, sel], epsilon=0.05, n_total=500)
        assert plan.sizes[0] > plan.sizes[1]
        assert plan.classes[0].b_value == 2.0

    def test_empty_selection_takes_uniform_share(self):
        model = _pilot_model()
        sels = [
            _selection([0, 1], [0.3, 0.4, 5.0, 5.0], 4),
            _selection([], [5.0, 5.0, 5.0, 5.0], 4),
        ]
        plan = plan_sizes(model, sels, epsilon=0.05, n_total=400)
        assert sum(plan.sizes) == 400
        second = plan.classes[1]
        assert second.uniform_share
        assert second.r_hat == 0
        assert second.b_value is None
        assert second.n_planned == 200
        assert not plan.classes[0].uniform_share

    def test_plan_serialization(self):
        model = _pilot_model()
        sel = _selection([0, 1], [0.3, 0.4, 5.0, 5.0], 4)
        plan = plan_sizes(model, [sel, sel], epsilon=0.05, n_total=300)
        doc = plan.to_dict()
        assert doc["kind"] == "kdclass-size-plan"
        assert doc["n_total"] == 300
        assert [c["n_planned"] for c in doc["classes"]] == plan.sizes

    def test_validation(self):
        model = _pilot_model()
        sel = _selection([0, 1], [0.3, 0.4, 5.0, 5.0], 4)
        with pytest.raises(ValueError):
            plan_sizes(model, [sel, sel], epsilon=0.0, n_total=300)
        with pytest.raises(ValueError):
            plan_sizes(model, [sel], epsilon=0.1, n_total=300)
        with pytest.raises(ValueError):
            plan_sizes(model, [sel, sel], epsilon=0.1, n_total=150)


def _symmetric_pilot(n=50, d=5):
    rng = np.random.default_rng(60)
    block = np.column_stack(
        [rng.normal(0.5, 0.02, n), rng.normal(0.5, 0.04, n)]
        + [rng.uniform(0, 1, n) for _ in range(d - 2)]
    )
    X = np.vstack([block, block])
    return LabeledDataset(X, ["a"] * n + ["b"] * n)


class TestTwoStage:
    def test_symmetric_pilot_grows_evenly(self):
        pilot = _symmetric_pilot()
        asked = []

        def sampler(label, count):
            asked.append((label, count))
            rng = np.random.default_rng(hash(label) % 2**32)
            return np.column_stack(
                [rng.normal(0.5, 0.02, count), rng.normal(0.5, 0.04, count)]
                + [rng.uniform(0, 1, count) for _ in range(3)]
            )

        plan, refit = two_stage(pilot, epsilon=0.1, n_total=300, sampler=sampler)
        assert plan.sizes == [150, 150]
        assert sorted(asked) == [("a", 100), ("b", 100)]
        assert refit.class_sizes == [150, 150]
        assert all(c.shortfall == 0 for c in plan.classes)

    def test_satisfied_budget_never_samples(self):
        pilot = _symmetric_pilot()
        def sampler(label, count):
            raise AssertionError("sampler must not be called")
        plan, refit = two_stage(pilot, epsilon=0.1, n_total=100, sampler=sampler)
        assert plan.sizes == [50, 50]
        assert refit.class_sizes == [50, 50]

    def test_shortfall_recorded(self):
        pilot = _symmetric_pilot()
        def sampler(label, count):
            return np.full((count - 10, 5), 0.5)
        plan, refit = two_stage(pilot, epsilon=0.1, n_total=300, sampler=sampler)
        assert all(c.shortfall == 10 for c in plan.classes)
        assert refit.class_sizes == [140, 140]

    def test_bad_sampler_shape_rejected(self):
        pilot = _symmetric_pilot()
        def sampler(label, count):
            return np.full((count, 3), 0.5)
        with pytest.raises(ValueError, match="sampler"):
            two_stage(pilot, epsilon=0.1, n_total=300, sampler=sampler)

    def test_small_pilot_rejected(self):
        pilot = _symmetric_pilot(n=20)
        with pytest.raises(ValueError, match="pilot"):
            two_stage(pilot, epsilon=0.1, n_total=300, sampler=lambda l, c: None)
