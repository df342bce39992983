"""Posterior kernel density classifier: fitting, scoring, persistence."""

import json
import math

import numpy as np
import pytest

from kdclass.bandwidths import ShrinkParams
from kdclass.classify import (
    fit,
    load_model,
    predict,
    predict_batch,
    save_model,
)
from kdclass.data import LabeledDataset
from kdclass.datagen import example2
from kdclass.density import log_class_density


def _two_point_model():
    """Two 1-d classes: duplicate pairs at -1 and at +1, equal priors."""
    X = np.array([[-1.0], [-1.0], [1.0], [1.0]])
    return fit(LabeledDataset(X, ["neg", "neg", "pos", "pos"]))


@pytest.fixture(scope="module")
def small_model():
    train, _ = example2(99, n_train=40, n_test=10)
    return fit(train.subset(["1", "4"]))


class TestFit:
    def test_single_class_rejected(self):
        data = LabeledDataset(np.ones((4, 2)), ["a"] * 4)
        with pytest.raises(ValueError):
            fit(data)

    def test_tiny_class_rejected(self):
        data = LabeledDataset(np.arange(6.0).reshape(3, 2), ["a", "a", "b"])
        with pytest.raises(ValueError):
            fit(data)

    def test_empty_dataset_rejected(self):
        data = LabeledDataset(np.empty((0, 2)), [])
        with pytest.raises(ValueError):
            fit(data)

    def test_first_appearance_order(self):
        X = np.arange(12.0).reshape(6, 2)
        model = fit(LabeledDataset(X, ["b", "a", "b", "a", "b", "a"]))
        assert model.labels == ["b", "a"]

    def test_empirical_priors(self):
        X = np.arange(8.0).reshape(4, 2)
        model = fit(LabeledDataset(X, ["a", "a", "b", "b"]))
        np.testing.assert_allclose(model.priors, [0.5, 0.5])

        X = np.arange(12.0).reshape(6, 2)
        model = fit(LabeledDataset(X, ["a"] * 4 + ["b"] * 2))
        np.testing.assert_allclose(model.priors, [2 / 3, 1 / 3])

    def test_uniform_priors_flag(self):
        X = np.arange(12.0).reshape(6, 2)
        model = fit(LabeledDataset(X, ["a"] * 4 + ["b"] * 2), uniform_priors=True)
        np.testing.assert_allclose(model.priors, [0.5, 0.5])
        assert model.uniform_priors

    def test_model_shape_properties(self, small_model):
        assert small_model.d == 10
        assert small_model.class_sizes == [40, 40]
        assert sum(small_model.class_sizes) == 80


class TestPredictValidation:
    def test_wrong_dimension(self, small_model):
        with pytest.raises(ValueError):
            predict(np.zeros(3), small_model)

    def test_non_finite_query(self, small_model):
        with pytest.raises(ValueError):
            predict([math.nan] + [0.0] * 9, small_model)

    def test_unknown_mode(self, small_model):
        with pytest.raises(ValueError):
            predict(np.zeros(10), small_model, mode="bayes")

    def test_fixed_mode_needs_bandwidth(self, small_model):
        with pytest.raises(ValueError):
            predict(np.zeros(10), small_model, mode="fixed")
        with pytest.raises(ValueError):
            predict(np.zeros(10), small_model, mode="fixed", fixed_h=0.0)
        with pytest.raises(ValueError):
            predict(np.zeros(10), small_model, mode="fixed", fixed_h=math.inf)

    def test_batch_needs_matrix(self, small_model):
        with pytest.raises(ValueError):
            predict_batch(np.zeros(10), small_model)


class TestFixedModeScores:
    def test_nearer_class_wins(self):
        model = _two_point_model()
        pred = predict([0.2], model, mode="fixed", fixed_h=1.0)
        assert pred.label == "pos"
        # log score = log(1/2) + log K(distance); densities collapse to a
        # single kernel value because the two points per class coincide
        assert pred.log_scores[0] == pytest.approx(
            math.log(0.5) - 1.6389385332046726, abs=1e-12
        )
        assert pred.log_scores[1] == pytest.approx(
            math.log(0.5) - 1.2389385332046727, abs=1e-12
        )
        assert pred.posteriors[1] == pytest.approx(0.598687660112452, abs=1e-12)

    def test_exact_tie_prefers_first_listed(self):
        model = _two_point_model()
        pred = predict([0.0], model, mode="fixed", fixed_h=1.0)
        assert pred.log_scores[0] == pred.log_scores[1]
        assert pred.label == "neg"

    def test_posteriors_are_softmax_of_log_scores(self, small_model):
        rng = np.random.default_rng(8)
        for _ in range(5):
            pred = predict(rng.uniform(0, 1, 10), small_model, mode="fixed", fixed_h=0.4)
            assert pred.posteriors.sum() == pytest.approx(1.0, abs=1e-12)
            ref = np.exp(pred.log_scores - pred.log_scores.max())
            np.testing.assert_allclose(pred.posteriors, ref / ref.sum(), atol=1e-12)
            assert pred.label == small_model.labels[int(np.argmax(pred.log_scores))]

    def test_scores_match_density_module(self, small_model):
        x = np.full(10, 0.5)
        pred = predict(x, small_model, mode="fixed", fixed_h=0.3)
        h = np.full(10, 0.3)
        for ci, group in enumerate(small_model.groups):
            expect = math.log(small_model.priors[ci]) + log_class_density(
                x, group.samples, h
            )
            assert pred.log_scores[ci] == pytest.approx(expect, abs=1e-12)
        np.testing.assert_array_equal(pred.bandwidths, np.full((2, 10), 0.3))
        np.testing.assert_array_equal(pred.steps, np.zeros((2, 10), dtype=np.int64))


class TestAdaptiveMode:
    def test_prediction_carries_shrink_state(self, small_model):
        pred = predict(np.full(10, 0.5), small_model)
        assert pred.bandwidths.shape == (2, 10)
        assert pred.steps.shape == (2, 10)
        assert (pred.steps >= 0).all()
        assert (pred.steps > 0).any()
        gamma = small_model.params.gamma
        for ci in range(2):
            n_c = small_model.class_sizes[ci]
            h0 = small_model.params.c0 / math.log(math.log(n_c))
            for j in range(10):
                assert pred.bandwidths[ci, j] == h0 * gamma ** pred.steps[ci, j]

    def test_prior_shift_is_exact(self):
        """Uniform and empirical priors move every log score by exactly the
        log prior ratio, leaving densities untouched."""
        train, _ = example2(31, n_train=40, n_test=10)
        data = train.subset(["1", "3"])
        keep = [i for i, lab in enumerate(data.labels) if lab == "1" or i % 2 == 0]
        unbalanced = LabeledDataset(data.X[keep], [data.labels[i] for i in keep])
        emp = fit(unbalanced)
        uni = fit(unbalanced, uniform_priors=True)
        x = np.full(10, 0.5)
        p_emp = predict(x, emp)
        p_uni = predict(x, uni)
        for ci in range(2):
            shift = math.log(0.5) - math.log(emp.priors[ci])
            assert p_uni.log_scores[ci] - p_emp.log_scores[ci] == pytest.approx(
                shift, abs=1e-12
            )
        np.testing.assert_array_equal(p_emp.bandwidths, p_uni.bandwidths)


class TestBatch:
    def test_batch_of_one_matches_single(self, small_model):
        x = np.full(10, 0.4)
        single = predict(x, small_model)
        batch = predict_batch(x[None, :], small_model)
        assert len(batch) == 1
        assert batch[0].label == single.label
        np.testing.assert_array_equal(batch[0].log_scores, single.log_scores)
        np.testing.assert_array_equal(batch[0].bandwidths, single.bandwidths)

    def test_row_permutation_permutes_predictions(self, small_model):
        rng = np.random.default_rng(21)
        X = rng.uniform(0, 1, (6, 10))
        perm = rng.permutation(6)
        preds = predict_batch(X, small_model)
        shuffled = predict_batch(X[perm], small_model)
        for out_pos, in_pos in enumerate(perm):
            assert shuffled[out_pos].label == preds[in_pos].label
            np.testing.assert_array_equal(
                shuffled[out_pos].log_scores, preds[in_pos].log_scores
            )

    def test_threads_do_not_change_results(self, small_model):
        rng = np.random.default_rng(22)
        X = rng.uniform(0, 1, (8, 10))
        serial = predict_batch(X, small_model, threads=None)
        pooled = predict_batch(X, small_model, threads=3)
        for a, b in zip(serial, pooled):
            assert a.label == b.label
            np.testing.assert_array_equal(a.log_scores, b.log_scores)
            np.testing.assert_array_equal(a.bandwidths, b.bandwidths)
            np.testing.assert_array_equal(a.steps, b.steps)


class TestPersistence:
    def test_round_trip(self, small_model, tmp_path):
        path = tmp_path / "model.json"
        save_model(path, small_model)
        loaded = load_model(path)
        assert loaded.labels == small_model.labels
        assert loaded.uniform_priors == small_model.uniform_priors
        assert loaded.params == small_model.params
        np.testing.assert_array_equal(loaded.priors, small_model.priors)
        for a, b in zip(loaded.groups, small_model.groups):
            np.testing.assert_array_equal(a.samples, b.samples)

        # floats survive exactly, so a re-save is byte-identical
        path2 = tmp_path / "model2.json"
        save_model(path2, loaded)
        assert path.read_bytes() == path2.read_bytes()

        x = np.full(10, 0.45)
        a = predict(x, small_model)
        b = predict(x, loaded)
        assert a.label == b.label
        np.testing.assert_array_equal(a.log_scores, b.log_scores)

    def test_rejects_wrong_kind(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"kind": "something-else"}\n')
        with pytest.raises(ValueError):
            load_model(path)

    def test_rejects_wrong_version(self, small_model, tmp_path):
        path = tmp_path / "model.json"
        save_model(path, small_model)
        doc = json.loads(path.read_text())
        doc["schema_version"] = 99
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError):
            load_model(path)

    def test_rejects_bad_priors(self, small_model, tmp_path):
        path = tmp_path / "model.json"
        save_model(path, small_model)
        doc = json.loads(path.read_text())
        doc["priors"] = [0.9, 0.9]
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError):
            load_model(path)

    def test_rejects_shape_mismatch(self, small_model, tmp_path):
        path = tmp_path / "model.json"
        save_model(path, small_model)
        doc = json.loads(path.read_text())
        doc["classes"][0]["samples"] = [[1.0, 2.0]]
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError):
            load_model(path)

    def test_rejects_missing_field(self, small_model, tmp_path):
        path = tmp_path / "model.json"
        save_model(path, small_model)
        doc = json.loads(path.read_text())
        del doc["params"]
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError):
            load_model(path)

    def test_rejects_invalid_json(self, tmp_path):
        path = tmp_path / "garbage.json"
        path.write_text("{not json")
        with pytest.raises(ValueError):
            load_model(path)


class TestAccuracySanity:
    def test_separable_generated_classes(self):
        """Distant generator classes are classified nearly perfectly in both
        modes on a small holdout."""
        train, test = example2(7, n_train=60, n_test=20)
        pair = train.subset(["1", "4"])
        model = fit(pair)
        hold = test.subset(["1", "4"])
        for kwargs in ({"mode": "adaptive"}, {"mode": "fixed", "fixed_h": 0.4}):
            preds = predict_batch(hold.X, model, **kwargs)
            hits = sum(p.label == lab for p, lab in zip(preds, hold.labels))
            assert hits / hold.n >= 0.9
