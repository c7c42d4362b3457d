import json
import math
import warnings

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import DimensionMismatch
from core.rng import substream
from dcopf.services import ActiveSet
from scenarios.dataset import Dataset, DatasetMeta, LabeledSample
from scenarios.dictionary import ActiveSetDictionary

from .exceptions import (
    BindingMismatch, CorruptPayload, EmptyDataset, KOutOfRange, LabelOutOfRange,
    SingleClassDataset, StaleCache, VersionMismatch,
)
from .layers import (
    batchnorm_train_forward, cross_entropy, dropout_forward, relu_forward, softmax,
    softmax_cross_entropy_backward,
)
from .model import Mode, backward, forward, init_model
from .optim import AdamHyper, AdamState, adam_step, adam_update
from .prediction import ensure_binding, predict_proba, predict_topk, predict_topk_batch, rank_classes
from .serialization import load_model, save_model
from .services import fit_classifier
from .training import TrainConfig, train


def synthetic_dataset(n=200, n_bus=3, k=2, seed=0):
    """Labels are the argmax of a fixed linear map of omega"""
    rng = substream(seed, 'generate', 0)
    weights = substream(seed, 'init', 99).normal(size=(n_bus, k))
    omegas = rng.normal(size=(n, n_bus))
    labels = np.argmax(omegas @ weights, axis=1)
    dictionary = ActiveSetDictionary([ActiveSet((c,)) for c in range(k)], [int(np.sum(labels == c)) for c in range(k)])
    samples = [
        LabeledSample(index=i, omega=omegas[i], label=int(labels[i]), p_star=np.zeros(1), cost=0.0)
        for i in range(n)
    ]
    meta = DatasetMeta(
        case_name='synthetic', sigma_frac=0.03, seed=seed, generator_version='test',
        bus_ids=tuple(range(1, n_bus + 1)), load_buses=tuple(range(n_bus)), n_gen=1,
    )
    return Dataset(samples=samples, dictionary=dictionary, meta=meta)


def small_config(**overrides):
    settings = dict(layer_widths=(8, 6), epochs=2, batch_size=16, dropout_rate=0.0, seed=3)
    settings.update(overrides)
    return TrainConfig(**settings)


class InitModelTests(SimpleTestCase):
    def test_shapes_compose(self):
        model = init_model(TrainConfig(layer_widths=(4,)), input_dim=3, k=2, seed=0)
        self.assertEqual(model.hidden[0].W.shape, (3, 4))
        self.assertEqual(model.output.W.shape, (4, 2))
        np.testing.assert_array_equal(model.hidden[0].gamma, np.ones(4))
        np.testing.assert_array_equal(model.hidden[0].running_var, np.ones(4))

    def test_seeded(self):
        cfg = TrainConfig(layer_widths=(5, 5))
        a = init_model(cfg, 3, 2, seed=1)
        b = init_model(cfg, 3, 2, seed=1)
        c = init_model(cfg, 3, 2, seed=2)
        for name, value in a.parameters().items():
            np.testing.assert_array_equal(value, b.parameters()[name])
        self.assertFalse(np.array_equal(a.hidden[0].W, c.hidden[0].W))

    def test_weight_variance_scales_with_fan_in(self):
        model = init_model(TrainConfig(layer_widths=(40,)), input_dim=256, k=2, seed=0)
        variance = float(np.var(model.hidden[0].W))
        self.assertAlmostEqual(variance, 2 / 256, delta=0.1 * 2 / 256)


class LayerTests(SimpleTestCase):
    def test_relu(self):
        out, _ = relu_forward(np.array([[-5.0, 0.0, 2.5]]))
        np.testing.assert_array_equal(out, [[0.0, 0.0, 2.5]])
        again, _ = relu_forward(out)
        np.testing.assert_array_equal(again, out)

    def test_softmax_rows_normalized(self):
        rng = substream(0, 'init', 1)
        probs = softmax(rng.normal(scale=30.0, size=(50, 7)))
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
        self.assertTrue(np.all(probs >= 0))

    def test_cross_entropy_values(self):
        self.assertAlmostEqual(cross_entropy([[0.7, 0.3]], [0]), -math.log(0.7), places=12)
        self.assertAlmostEqual(cross_entropy([[0.7, 0.3]], [0]), 0.356675, places=6)
        self.assertEqual(cross_entropy([[1.0, 0.0]], [[1, 0]]), 0.0)
        k = 5
        self.assertAlmostEqual(cross_entropy(np.full((4, k), 1 / k), [0, 1, 2, 3]), math.log(k), places=12)

    def test_cross_entropy_label_range(self):
        with self.assertRaises(LabelOutOfRange):
            cross_entropy([[0.5, 0.5]], [2])

    def test_output_gradient(self):
        grad = softmax_cross_entropy_backward(np.array([[0.7, 0.3]]), [0])
        np.testing.assert_allclose(grad, [[-0.3, 0.3]], atol=1e-15)

    def test_batchnorm_normalizes_batch(self):
        rng = substream(0, 'init', 2)
        x = rng.normal(loc=4.0, scale=3.0, size=(32, 6))
        _, (x_hat, _, _), _, _ = batchnorm_train_forward(x, np.ones(6), np.zeros(6), 1e-10)
        np.testing.assert_allclose(x_hat.mean(axis=0), 0.0, atol=1e-6)
        np.testing.assert_allclose(x_hat.var(axis=0), 1.0, atol=1e-6)

    def test_inverted_dropout_keeps_expectation(self):
        x = np.ones((1, 100_000))
        out, _ = dropout_forward(x, 0.3, substream(0, 'dropout', 0))
        self.assertTrue(0.99 <= float(np.mean(out / x)) <= 1.01)


class ForwardTests(SimpleTestCase):
    def setUp(self):
        self.model = init_model(TrainConfig(layer_widths=(6, 4), dropout_rate=0.25), 3, 4, seed=5)
        self.X = substream(1, 'generate', 0).normal(size=(20, 3))

    def test_probabilities(self):
        probs, _ = forward(self.model, self.X, Mode.EVAL)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
        self.assertTrue(np.all(probs >= 0))

    def test_equal_logits_give_uniform(self):
        self.model.output.W[:] = 0.0
        probs, _ = forward(self.model, self.X, Mode.EVAL)
        np.testing.assert_allclose(probs, 0.25, atol=1e-15)

    def test_eval_is_pure(self):
        before = self.model.hidden[0].running_mean.copy()
        first, _ = forward(self.model, self.X, Mode.EVAL)
        second, _ = forward(self.model, self.X, Mode.EVAL)
        np.testing.assert_array_equal(first, second)
        np.testing.assert_array_equal(self.model.hidden[0].running_mean, before)

    def test_train_updates_running_statistics(self):
        layer = self.model.hidden[0]
        batch_mean = np.mean(self.X @ layer.W + layer.B, axis=0)
        forward(self.model, self.X, Mode.TRAIN, rng=substream(0, 'dropout', 0))
        np.testing.assert_allclose(layer.running_mean, 0.01 * batch_mean, atol=1e-12)

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            forward(self.model, np.zeros((2, 5)))


class BackwardTests(SimpleTestCase):
    def _loss(self, model, X, y):
        probs, _ = forward(model, X, Mode.TRAIN, rng=substream(0, 'dropout', 0))
        return cross_entropy(probs, y)

    def test_matches_finite_differences(self):
        model = init_model(TrainConfig(layer_widths=(5, 4), dropout_rate=0.3), 3, 3, seed=2)
        X = substream(2, 'generate', 0).normal(size=(8, 3))
        y = np.array([0, 1, 2, 0, 1, 2, 2, 1])
        _, cache = forward(model, X, Mode.TRAIN, rng=substream(0, 'dropout', 0))
        grads = backward(model, cache, y)

        picker = substream(2, 'init', 7)
        step = 1e-5
        params = model.parameters()
        checked = 0
        for name, param in params.items():
            for flat in picker.choice(param.size, size=min(3, param.size), replace=False):
                index = np.unravel_index(flat, param.shape)
                original = param[index]
                param[index] = original + step
                plus = self._loss(model, X, y)
                param[index] = original - step
                minus = self._loss(model, X, y)
                param[index] = original
                numeric = (plus - minus) / (2 * step)
                analytic = grads[name][index]
                scale = max(abs(numeric) + abs(analytic), 1e-4)
                self.assertLessEqual(abs(numeric - analytic) / scale, 1e-4, f"{name}{index}")
                checked += 1
        self.assertGreaterEqual(checked, 25)

    def test_perfect_prediction_has_zero_output_gradient(self):
        model = init_model(TrainConfig(layer_widths=(3,), dropout_rate=0.0), 2, 1, seed=0)
        _, cache = forward(model, np.ones((4, 2)), Mode.TRAIN)
        grads = backward(model, cache, [0, 0, 0, 0])
        np.testing.assert_array_equal(grads['output.B'], [0.0])

    def test_stale_cache(self):
        model = init_model(TrainConfig(layer_widths=(3,), dropout_rate=0.0), 2, 2, seed=0)
        X = np.array([[0.0, 1.0], [1.0, 0.0]])
        _, cache = forward(model, X, Mode.TRAIN)
        grads = backward(model, cache, [0, 1])
        adam_step(model, grads, AdamState.zeros_like(model.parameters()), AdamHyper())
        with self.assertRaises(StaleCache):
            backward(model, cache, [0, 1])
        _, eval_cache = forward(model, X, Mode.EVAL)
        with self.assertRaises(StaleCache):
            backward(model, eval_cache, [0, 1])


class AdamTests(SimpleTestCase):
    def test_zero_gradient_leaves_parameters(self):
        params = {'theta': np.array([1.5, -2.0])}
        adam_update(params, {'theta': np.zeros(2)}, AdamState.zeros_like(params), AdamHyper())
        np.testing.assert_array_equal(params['theta'], [1.5, -2.0])

    def test_first_step(self):
        params = {'theta': np.array([0.0])}
        state = adam_update(params, {'theta': np.array([1.0])}, AdamState.zeros_like(params), AdamHyper(alpha=0.1))
        self.assertAlmostEqual(float(params['theta'][0]), -0.1 / (1 + 1e-8), places=12)
        self.assertEqual(state.t, 1)

    def test_converges_on_quadratic(self):
        params = {'theta': np.array([0.0])}
        state = AdamState.zeros_like(params)
        hyper = AdamHyper(alpha=0.05)
        for _ in range(500):
            adam_update(params, {'theta': 2 * (params['theta'] - 3.0)}, state, hyper)
        self.assertLessEqual(abs(float(params['theta'][0]) - 3.0), 1e-2)


class TrainTests(SimpleTestCase):
    def test_history_has_one_row_per_epoch(self):
        result = fit_classifier(synthetic_dataset(), small_config(epochs=1))
        self.assertEqual(len(result.history), 1)
        self.assertEqual(result.history[0].epoch, 1)

    def test_learns_a_separable_task(self):
        result = fit_classifier(synthetic_dataset(n=400), small_config(epochs=15, layer_widths=(16,)))
        self.assertGreaterEqual(result.history[-1].train_top1, 0.85)
        self.assertLess(result.history[-1].mean_loss, result.history[0].mean_loss)

    def test_deterministic(self):
        ds = synthetic_dataset()
        cfg = small_config(dropout_rate=0.2)
        first = save_model(fit_classifier(ds, cfg).model)
        second = save_model(fit_classifier(ds, cfg).model)
        self.assertEqual(first, second)

    def test_single_class(self):
        ds = synthetic_dataset(k=1)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter('always')
            result = fit_classifier(ds, small_config())
        self.assertTrue(any(issubclass(w.category, SingleClassDataset) for w in caught))
        self.assertEqual(result.history[-1].mean_loss, 0.0)
        probs = predict_proba(result.model, np.array([[5.0, -3.0, 1.0]]))
        self.assertEqual(probs.shape, (1, 1))

    def test_empty_dataset(self):
        ds = synthetic_dataset().subset([])
        model = init_model(small_config(), 3, 2, seed=0)
        with self.assertRaises(EmptyDataset):
            train(model, ds, small_config())

    def test_unseen_labels_rejected(self):
        ds = synthetic_dataset()
        ds.samples[0] = LabeledSample(index=0, omega=np.zeros(3), label=-1, p_star=np.zeros(1), cost=0.0)
        model = init_model(small_config(), 3, 2, seed=0)
        with self.assertRaises(LabelOutOfRange):
            train(model, ds, small_config())

    def test_truncated_config(self):
        cfg = TrainConfig()
        self.assertEqual(cfg.truncated(2).layer_widths, (256, 256))
        self.assertEqual(cfg.truncated(2).epochs, 20)


class PredictionTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.ds = synthetic_dataset(k=3)
        cls.model = fit_classifier(cls.ds, small_config(epochs=3)).model

    def test_rank_tie_break(self):
        np.testing.assert_array_equal(rank_classes(np.array([0.5, 0.3, 0.2]), 2), [[0, 1]])
        np.testing.assert_array_equal(rank_classes(np.array([0.25, 0.5, 0.25]), 3), [[1, 0, 2]])

    def test_k_out_of_range(self):
        with self.assertRaises(KOutOfRange):
            predict_topk(self.model, self.ds.samples[0].omega, 0)
        with self.assertRaises(KOutOfRange):
            predict_topk(self.model, self.ds.samples[0].omega, 4)

    def test_rankings_are_consistent(self):
        omega = self.ds.samples[3].omega
        full = predict_topk(self.model, omega, 3)
        self.assertEqual(sorted(full.classes), [0, 1, 2])
        self.assertEqual(list(full.scores), sorted(full.scores, reverse=True))
        self.assertEqual(predict_topk(self.model, omega, 1).classes, full.classes[:1])
        self.assertEqual(predict_topk(self.model, omega, 2).classes, full.classes[:2])

    def test_batch_matches_single(self):
        batch = predict_topk_batch(self.model, self.ds.omegas[:10], 2)
        for row, sample in zip(batch, self.ds.samples[:10]):
            self.assertEqual(tuple(row), predict_topk(self.model, sample.omega, 2).classes)

    def test_binding(self):
        ensure_binding(self.model, self.ds.dictionary)
        other = ActiveSetDictionary([ActiveSet((9,))])
        with self.assertRaises(BindingMismatch):
            ensure_binding(self.model, other)


class SerializationTests(SimpleTestCase):
    def setUp(self):
        self.ds = synthetic_dataset()
        self.model = fit_classifier(self.ds, small_config()).model

    def test_round_trip(self):
        payload = save_model(self.model)
        loaded = load_model(payload)
        self.assertEqual(save_model(loaded), payload)
        np.testing.assert_array_equal(predict_proba(loaded, self.ds.omegas), predict_proba(self.model, self.ds.omegas))
        self.assertEqual(loaded.label_binding, self.ds.dictionary.digest())

    def test_truncated_payload(self):
        payload = save_model(self.model)
        with self.assertRaises(CorruptPayload):
            load_model(payload[: len(payload) // 2])

    def test_version_mismatch(self):
        data = json.loads(save_model(self.model))
        data['version'] = 99
        with self.assertRaises(VersionMismatch):
            load_model(json.dumps(data).encode())

    def test_shape_mismatch(self):
        data = json.loads(save_model(self.model))
        data['k'] = 5
        with self.assertRaises(CorruptPayload):
            load_model(json.dumps(data).encode())
