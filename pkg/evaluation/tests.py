import dataclasses
import json
import math
import tempfile
from pathlib import Path
from unittest import skipUnless

import numpy as np
from django.test import SimpleTestCase

from classifier.exceptions import BindingMismatch
from classifier.model import init_model
from classifier.services import fit_classifier
from classifier.training import TrainConfig
from core.rng import substream
from dcopf.oracle import enumerate_vertices, oracle_optimum
from dcopf.polytope import build_polytope
from dcopf.services import ActiveSet, solve_dcopf
from grid.matpower import load_case
from grid.services import build_network
from grid.testing import fixture_network, pglib_case_path
from scenarios.dataset import Dataset, DatasetMeta, LabeledSample
from scenarios.dictionary import UNSEEN_LABEL, ActiveSetDictionary
from scenarios.exceptions import EmptySplit
from scenarios.sampling import build_distribution
from scenarios.services import generate_dataset, split_dataset

from .metrics import fixed_status_report, frequency_distribution, optimality_gap, topk_accuracy
from .policies import Outcome, PolicyResult, classifier_policy, ensemble_policy
from .reports import format_cell, read_csv_body, write_csv, write_json
from .services import ENSEMBLE, evaluate_policies
from .studies import depth_study, learning_curve

# Load changes at bus 3 of the ring. Up to w = 0.25 line 1-3 binds (row 5);
# above it the dear unit sits at its lower limit (row 3).
RING_DRAWS = (0.0, 0.3, 0.1, 0.4, -0.2, 0.05, 0.35, -0.1, 0.2, 0.27, -0.3, 0.15)
LINE_BINDING = ActiveSet((5,))
DEAR_UNIT_OFF = ActiveSet((3,))

PGLIB_CASE24 = pglib_case_path('case24_ieee_rts')


def ring_omega(w):
    return np.array([0.0, 0.0, w])


def ring_dataset(draws=RING_DRAWS):
    """Labeled ring samples, solved with the LP"""
    net = fixture_network('case3_ring')
    poly = build_polytope(net)
    dictionary = ActiveSetDictionary()
    samples = []
    for index, w in enumerate(draws):
        point = solve_dcopf(poly, ring_omega(w))
        label = dictionary.add(point.active_set)
        samples.append(LabeledSample(index, ring_omega(w), label, point.p_star, point.cost))
    meta = DatasetMeta(
        case_name=net.case_name, sigma_frac=0.3, seed=0, generator_version='test',
        bus_ids=(1, 2, 3), load_buses=(2,), n_gen=2,
    )
    return Dataset(samples=samples, dictionary=dictionary, meta=meta), poly


def constant_model(dictionary, label, n_bus=3, load_buses=(2,)):
    """A classifier that ranks ``label`` first for every input, the rest by index"""
    model = init_model(TrainConfig(layer_widths=(2,), dropout_rate=0.0), len(load_buses), len(dictionary), seed=0)
    model.output.W[:] = 0.0
    model.output.B[:] = 0.0
    model.output.B[label] = 5.0
    model.label_binding = dictionary.digest()
    model.feature_buses = tuple(load_buses)
    model.n_bus = n_bus
    return model


def small_config(**overrides):
    settings = dict(layer_widths=(8, 6), epochs=3, batch_size=16, dropout_rate=0.0, seed=3)
    settings.update(overrides)
    return TrainConfig(**settings)


class EnsemblePolicyTests(SimpleTestCase):
    def setUp(self):
        self.poly = build_polytope(fixture_network('case3_ring'))

    def test_all_vertex_sets_reproduce_oracle(self):
        candidates = [v.active_set for v in enumerate_vertices(self.poly, np.zeros(3))]
        rng = substream(11, 'generate', 0)
        for _ in range(100):
            omega = ring_omega(rng.normal(0.0, 0.2))
            result = ensemble_policy(self.poly, candidates, omega)
            oracle = oracle_optimum(self.poly, omega)
            if oracle is None:
                self.assertEqual(result.outcome, Outcome.NO_FEASIBLE_CANDIDATE)
                continue
            self.assertTrue(result.feasible)
            self.assertAlmostEqual(result.cost, oracle.cost, delta=1e-9 * abs(oracle.cost))
            np.testing.assert_allclose(result.p_hat, oracle.p, atol=1e-8)

    def test_infeasible_candidate(self):
        result = ensemble_policy(self.poly, [DEAR_UNIT_OFF], np.zeros(3))
        self.assertEqual(result.outcome, Outcome.NO_FEASIBLE_CANDIDATE)
        self.assertFalse(result.feasible)
        self.assertIsNone(result.p_hat)
        self.assertIsNone(result.chosen_set)
        self.assertEqual(result.candidates_evaluated, 1)

    def test_cheapest_feasible_candidate_wins(self):
        cheap_unit_off = ActiveSet((2,))
        result = ensemble_policy(self.poly, [cheap_unit_off, DEAR_UNIT_OFF, LINE_BINDING], np.zeros(3))
        self.assertEqual(result.chosen_set, 2)
        self.assertAlmostEqual(result.cost, 2000.0, places=9)
        self.assertEqual(result.candidates_evaluated, 3)

    def test_suboptimal_with_reference_cost(self):
        result = ensemble_policy(self.poly, [ActiveSet((2,))], np.zeros(3), reference_cost=2000.0)
        self.assertEqual(result.outcome, Outcome.FEASIBLE_SUBOPTIMAL)
        np.testing.assert_allclose(result.p_hat, [0.0, 1.0], atol=1e-12)
        self.assertAlmostEqual(result.cost, 3000.0, places=9)

    def test_costlier_vertex_is_suboptimal_without_reference(self):
        cheap_unit_off = ActiveSet((2,))
        result = ensemble_policy(self.poly, [cheap_unit_off], np.zeros(3))
        self.assertTrue(result.feasible)
        self.assertEqual(result.outcome, Outcome.FEASIBLE_SUBOPTIMAL)
        self.assertAlmostEqual(result.cost, 3000.0, places=9)

    def test_optimal_vertex_without_reference(self):
        result = ensemble_policy(self.poly, [LINE_BINDING], np.zeros(3))
        self.assertEqual(result.outcome, Outcome.OPTIMAL)

    def test_ties_keep_earlier_candidate(self):
        result = ensemble_policy(self.poly, [LINE_BINDING, LINE_BINDING], np.zeros(3))
        self.assertEqual(result.chosen_set, 0)

    def test_singular_candidate_is_skipped(self):
        poly = build_polytope(fixture_network('case4_colocated'))
        point = solve_dcopf(poly, np.zeros(4))
        result = ensemble_policy(poly, [ActiveSet((0, 3)), point.active_set], np.zeros(4))
        self.assertEqual(result.chosen_set, 1)
        self.assertEqual(result.candidates_evaluated, 2)
        self.assertAlmostEqual(result.cost, point.cost, delta=1e-9 * abs(point.cost))


class ClassifierPolicyTests(SimpleTestCase):
    def setUp(self):
        self.ds, self.poly = ring_dataset()
        self.dictionary = self.ds.dictionary
        self.model = constant_model(self.dictionary, label=0)

    def test_dictionary_holds_both_regimes(self):
        self.assertEqual(list(self.dictionary), [LINE_BINDING, DEAR_UNIT_OFF])

    def test_correct_top1_is_optimal(self):
        sample = self.ds.samples[0]
        result = classifier_policy(self.model, self.dictionary, self.poly, sample.omega, 1, reference_cost=sample.cost)
        self.assertEqual(result.outcome, Outcome.OPTIMAL)
        self.assertEqual(result.chosen_set, 0)
        self.assertEqual(result.candidates_evaluated, 1)
        self.assertAlmostEqual(result.cost, sample.cost, delta=1e-9 * sample.cost)

    def test_wrong_top1_has_no_feasible_candidate(self):
        sample = self.ds.samples[3]
        self.assertEqual(sample.label, 1)
        result = classifier_policy(self.model, self.dictionary, self.poly, sample.omega, 1)
        self.assertEqual(result.outcome, Outcome.NO_FEASIBLE_CANDIDATE)
        self.assertFalse(result.fallback_used)

    def test_wrong_but_feasible_top1_is_suboptimal(self):
        dictionary = ActiveSetDictionary((LINE_BINDING, ActiveSet((2,))))
        model = constant_model(dictionary, label=1)
        optimum = solve_dcopf(self.poly, np.zeros(3))
        result = classifier_policy(model, dictionary, self.poly, np.zeros(3), 1)
        self.assertTrue(result.feasible)
        self.assertEqual(result.chosen_set, 1)
        self.assertEqual(result.outcome, Outcome.FEASIBLE_SUBOPTIMAL)
        self.assertGreaterEqual(result.cost, optimum.cost)
        self.assertAlmostEqual(result.cost, 3000.0, places=9)

    def test_fallback_solves_the_lp(self):
        sample = self.ds.samples[3]
        result = classifier_policy(self.model, self.dictionary, self.poly, sample.omega, 1, fallback_lp=True)
        self.assertTrue(result.feasible)
        self.assertTrue(result.fallback_used)
        self.assertEqual(result.chosen_set, 1)
        self.assertAlmostEqual(result.cost, sample.cost, delta=1e-9 * sample.cost)

    def test_full_k_matches_ensemble(self):
        candidates = list(self.dictionary)
        for sample in self.ds.samples:
            ranked = classifier_policy(self.model, self.dictionary, self.poly, sample.omega, len(self.dictionary))
            full = ensemble_policy(self.poly, candidates, sample.omega)
            self.assertEqual(ranked.chosen_set, full.chosen_set)
            self.assertEqual(ranked.cost, full.cost)
            self.assertLessEqual(ranked.candidates_evaluated, len(self.dictionary))

    def test_binding_mismatch(self):
        self.model.label_binding = 'another-dictionary'
        with self.assertRaises(BindingMismatch):
            classifier_policy(self.model, self.dictionary, self.poly, np.zeros(3), 1)


class TopkAccuracyTests(SimpleTestCase):
    def test_majority_class_model(self):
        labels = [0] * 8 + [1] * 2
        ds, _ = ring_dataset()
        samples = [dataclasses.replace(ds.samples[0], index=i, label=label) for i, label in enumerate(labels)]
        test = Dataset(samples=samples, dictionary=ds.dictionary, meta=ds.meta)
        accuracy = topk_accuracy(constant_model(ds.dictionary, 0), test, [1, 2])
        self.assertAlmostEqual(accuracy[1], 0.8)
        self.assertAlmostEqual(accuracy[2], 1.0)

    def test_k_beyond_class_count(self):
        ds, _ = ring_dataset()
        accuracy = topk_accuracy(constant_model(ds.dictionary, 0), ds, [1, 5])
        self.assertEqual(accuracy[5], 1.0)

    def test_unseen_labels_are_misses(self):
        ds, _ = ring_dataset()
        samples = list(ds.samples)
        samples[0] = dataclasses.replace(samples[0], label=UNSEEN_LABEL)
        test = Dataset(samples=samples, dictionary=ds.dictionary, meta=ds.meta)
        accuracy = topk_accuracy(constant_model(ds.dictionary, 0), test, [2])
        self.assertAlmostEqual(accuracy[2], 1 - 1 / len(samples))

    def test_monotone_in_k_for_trained_model(self):
        ds, _ = ring_dataset()
        model = fit_classifier(ds, small_config()).model
        accuracy = topk_accuracy(model, ds, [1, 2])
        self.assertLessEqual(accuracy[1], accuracy[2])
        self.assertEqual(accuracy[2], 1.0)


class FixedStatusTests(SimpleTestCase):
    def test_single_sample_is_fully_fixed(self):
        ds, poly = ring_dataset((0.1,))
        report = fixed_status_report(ds, poly)
        self.assertEqual(report.n_samples, 1)
        self.assertEqual(report.generator_fixed_pct, 100.0)
        self.assertEqual(report.flow_fixed_pct, 100.0)
        self.assertEqual(report.generator_element_fixed_pct, 100.0)
        self.assertTrue(all(row.fixed for row in report.rows))

    def test_alternating_regimes(self):
        ds, poly = ring_dataset()
        report = fixed_status_report(ds, poly)
        n_off = sum(1 for s in ds.samples if s.label == 1)
        unfixed = [row.row for row in report.rows if not row.fixed]
        self.assertEqual(unfixed, [3, 5])
        self.assertEqual(report.rows[3].active_count, n_off)
        self.assertEqual(report.rows[5].active_count, len(ds) - n_off)
        self.assertAlmostEqual(report.generator_fixed_pct, 75.0)
        self.assertAlmostEqual(report.flow_fixed_pct, 500 / 6)

        dear_unit = report.elements[1]
        self.assertEqual(dear_unit.counts, {'free': len(ds) - n_off, 'upper': 0, 'lower': n_off})
        self.assertFalse(dear_unit.fixed)
        self.assertTrue(report.elements[0].fixed)
        self.assertAlmostEqual(report.generator_element_fixed_pct, 50.0)
        self.assertAlmostEqual(report.flow_element_fixed_pct, 200 / 3)

    def test_fixed_set_shrinks_as_samples_are_added(self):
        ds, poly = ring_dataset()
        small = {r.row for r in fixed_status_report(ds.head(1), poly).rows if r.fixed}
        large = {r.row for r in fixed_status_report(ds, poly).rows if r.fixed}
        self.assertTrue(large <= small)


class FrequencyTests(SimpleTestCase):
    def test_sorted_and_normalized(self):
        ds, _ = ring_dataset()
        table = frequency_distribution(ds)
        self.assertEqual([row.label for row in table], [0, 1])
        self.assertAlmostEqual(sum(row.frequency for row in table), 1.0, delta=1e-12)
        self.assertEqual(table[0].count, 8)
        self.assertEqual(table[0].rows, (5,))

    def test_single_class(self):
        ds, _ = ring_dataset((0.0, 0.1, -0.1))
        table = frequency_distribution(ds)
        self.assertEqual([(r.label, r.count, r.frequency) for r in table], [(0, 3, 1.0)])


class OptimalityGapTests(SimpleTestCase):
    def result(self, cost, feasible=True):
        outcome = Outcome.OPTIMAL if feasible else Outcome.NO_FEASIBLE_CANDIDATE
        return PolicyResult(None, cost, 0 if feasible else None, feasible, 1, outcome)

    def test_gaps_and_infeasible_fraction(self):
        summary = optimality_gap(
            [self.result(2200.0), self.result(np.nan, feasible=False), self.result(1000.0)],
            [2000.0, 1500.0, 1000.0],
        )
        self.assertAlmostEqual(summary.mean_gap, 0.05)
        self.assertAlmostEqual(summary.max_gap, 0.1)
        self.assertAlmostEqual(summary.infeasible_fraction, 1 / 3)
        self.assertEqual(summary.n_feasible, 2)

    def test_zero_optimum_uses_absolute_gap(self):
        summary = optimality_gap([self.result(0.5)], [0.0])
        self.assertAlmostEqual(summary.max_gap, 0.5)

    def test_nothing_feasible(self):
        summary = optimality_gap([self.result(np.nan, feasible=False)], [1.0])
        self.assertTrue(math.isnan(summary.mean_gap))
        self.assertEqual(summary.infeasible_fraction, 1.0)


class EvaluatePoliciesTests(SimpleTestCase):
    def setUp(self):
        self.ds, self.poly = ring_dataset()
        self.model = constant_model(self.ds.dictionary, 0)

    def test_report(self):
        report = evaluate_policies(self.model, self.ds.dictionary, self.poly, self.ds, [1, 2])
        n_off = sum(1 for s in self.ds.samples if s.label == 1)

        self.assertEqual(report.n_test, len(self.ds))
        self.assertEqual(report.unseen_fraction, 0.0)
        self.assertAlmostEqual(report.accuracy[1], 1 - n_off / len(self.ds))
        self.assertEqual(report.accuracy[2], 1.0)
        self.assertEqual(report.confusion[(1, 0)], n_off)

        top1 = report.policy('classifier_top1')
        self.assertAlmostEqual(top1.feasibility_rate, 1 - n_off / len(self.ds))
        self.assertEqual(top1.max_candidates, 1)
        self.assertLessEqual(top1.max_gap, 1e-9)

        top2 = report.policy('classifier_top2')
        ensemble = report.policy(ENSEMBLE)
        self.assertEqual(top2.feasibility_rate, 1.0)
        self.assertEqual(ensemble.feasibility_rate, 1.0)
        self.assertLessEqual(ensemble.mean_gap, 1e-9)
        self.assertLessEqual(top2.mean_candidates, 2)
        self.assertEqual(ensemble.outcomes, {'Optimal': len(self.ds)})

        payload = report.to_dict()
        self.assertEqual(payload['accuracy'], {'1': report.accuracy[1], '2': 1.0})
        self.assertIn([1, 0, n_off], payload['confusion_top1'])

    def test_fallback_counts(self):
        report = evaluate_policies(self.model, self.ds.dictionary, self.poly, self.ds, [1], fallback_lp=True)
        n_off = sum(1 for s in self.ds.samples if s.label == 1)
        top1 = report.policy('classifier_top1')
        self.assertEqual(top1.fallback_count, n_off)
        self.assertEqual(top1.feasibility_rate, 1.0)

    def test_empty_test_set(self):
        with self.assertRaises(EmptySplit):
            evaluate_policies(self.model, self.ds.dictionary, self.poly, self.ds.head(0), [1])


class StudyTests(SimpleTestCase):
    def setUp(self):
        self.ds, _ = ring_dataset()

    def test_learning_curve(self):
        cells = learning_curve(self.ds, self.ds, [8, 4], small_config(), [1, 2])
        self.assertEqual([(c.parameter, c.K) for c in cells], [(4, 1), (4, 2), (8, 1), (8, 2)])
        for first, second in zip(cells[::2], cells[1::2]):
            self.assertLessEqual(first.accuracy, second.accuracy)
            self.assertTrue(0.0 <= first.accuracy <= 1.0)

    def test_depth_study(self):
        cells = depth_study(self.ds, self.ds, [2, 1], small_config(), [1])
        self.assertEqual([(c.parameter, c.K) for c in cells], [(1, 1), (2, 1)])
        self.assertTrue(all(c.n_train == len(self.ds) for c in cells))


class ReportTests(SimpleTestCase):
    def test_csv_header_lines_and_body(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_csv(Path(tmp) / 'out.csv', ['K', 'accuracy'], [(1, 0.1), (2, 1.0)], {'seed': 4})
            lines = path.read_text(encoding='utf-8').splitlines()
            self.assertTrue(lines[0].startswith('# generated: '))
            self.assertEqual(lines[1], '# config: {"seed": 4}')
            self.assertEqual(read_csv_body(path), [['K', 'accuracy'], ['1', '0.1'], ['2', '1.0']])

    def test_cells(self):
        self.assertEqual(format_cell(True), 'true')
        self.assertEqual(format_cell(None), '')
        self.assertEqual(format_cell((3, 5)), '3 5')
        self.assertEqual(format_cell(0.1 + 0.2), '0.30000000000000004')

    def test_json_drops_nonfinite(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_json(Path(tmp) / 'summary.json', {'gap': float('nan'), 'k': {1: 0.5}})
            self.assertEqual(json.loads(path.read_text()), {'gap': None, 'k': {'1': 0.5}})


@skipUnless(PGLIB_CASE24.exists(), 'PGLib case24 not available')
class Case24ReproductionTests(SimpleTestCase):
    """10k draws at 3% load uncertainty on the 24-bus RTS case; slow"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        net = build_network(load_case(PGLIB_CASE24))
        cls.poly = build_polytope(net)
        cls.ds = generate_dataset(net, cls.poly, build_distribution(net, 0.03), 10000, seed=0)
        cls.train_ds, cls.test = split_dataset(cls.ds, 0.8, 0)
        cls.cells = depth_study(cls.train_ds, cls.test, (2, 3, 4, 5), TrainConfig(seed=0), (1, 2, 3))

    def accuracy(self, depth):
        return {c.K: c.accuracy for c in self.cells if c.parameter == depth}

    def test_few_active_sets(self):
        self.assertLessEqual(len(self.ds.dictionary), 15)

    def test_fixed_status(self):
        report = fixed_status_report(self.ds, self.poly)
        self.assertGreaterEqual(report.flow_fixed_pct, 99.0)
        self.assertAlmostEqual(report.generator_fixed_pct, 87.72, delta=3.0)

    def test_top_k_accuracy_at_depth_two(self):
        eta = self.accuracy(2)
        self.assertGreaterEqual(eta[1], 0.95)
        self.assertGreaterEqual(eta[2], 0.99)
        self.assertGreaterEqual(eta[3], 0.99)

    def test_top1_accuracy_insensitive_to_depth(self):
        top1 = [self.accuracy(depth)[1] for depth in (2, 3, 4, 5)]
        self.assertLessEqual(max(top1) - min(top1), 0.03)

    def test_accuracy_nondecreasing_in_k(self):
        for depth in (2, 3, 4, 5):
            eta = self.accuracy(depth)
            self.assertLessEqual(eta[1], eta[2])
            self.assertLessEqual(eta[2], eta[3])

    def test_full_ensemble_is_optimal(self):
        model = fit_classifier(self.train_ds, TrainConfig(seed=0).truncated(2)).model
        test = self.test.head(200)
        report = evaluate_policies(model, self.ds.dictionary, self.poly, test, [1])
        self.assertEqual(report.unseen_fraction, 0.0)
        self.assertLessEqual(report.policy(ENSEMBLE).mean_gap, 1e-9)
