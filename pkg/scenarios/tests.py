import dataclasses
import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ConfigError
from core.rng import substream
from dcopf.oracle import oracle_optimum
from dcopf.polytope import build_polytope
from dcopf.services import ActiveSet, recover_solution, solve_dcopf
from grid.testing import fixture_network

from .dictionary import UNSEEN_LABEL, ActiveSetDictionary
from .exceptions import AllSamplesInfeasible, DatasetFormatError, EmptySplit, NegativeSigmaFrac
from .sampling import build_distribution, sample_omega
from .services import discovery_curve, discovery_run, generate_dataset, relabel, split_dataset
from .storage import load_dataset, save_dataset


def make_dataset(name='case3_ring', n_samples=50, seed=1, sigma_frac=0.03, threads=1):
    net = fixture_network(name)
    poly = build_polytope(net)
    model = build_distribution(net, sigma_frac)
    return generate_dataset(net, poly, model, n_samples, seed, threads=threads)


class DistributionTests(SimpleTestCase):
    def setUp(self):
        self.net = fixture_network('case3_ring')

    def test_sigma_proportional_to_load(self):
        model = build_distribution(self.net, 0.03)
        np.testing.assert_allclose(model.sigma, [0.0, 0.0, 0.03])
        self.assertEqual(model.load_buses, (2,))

    def test_negative_sigma_frac(self):
        with self.assertRaises(NegativeSigmaFrac):
            build_distribution(self.net, -0.01)

    def test_zero_sigma_gives_zero_draws(self):
        model = build_distribution(self.net, 0.0)
        omega = sample_omega(model, substream(3, 'generate', 0))
        np.testing.assert_array_equal(omega, np.zeros(3))

    def test_draws_are_reproducible(self):
        model = build_distribution(self.net, 0.03)
        first = sample_omega(model, substream(5, 'generate', 9))
        second = sample_omega(model, substream(5, 'generate', 9))
        np.testing.assert_array_equal(first, second)
        self.assertEqual(first[0], 0.0)
        self.assertEqual(first[1], 0.0)

    def test_empirical_standard_deviation(self):
        model = build_distribution(self.net, 0.03)
        rng = substream(0, 'generate', 0)
        draws = np.array([sample_omega(model, rng)[2] for _ in range(100_000)])
        self.assertAlmostEqual(float(np.std(draws)), 0.03, delta=0.001)


class ActiveSetDictionaryTests(SimpleTestCase):
    def test_labels_follow_first_discovery(self):
        dictionary = ActiveSetDictionary()
        self.assertEqual(dictionary.add(ActiveSet((5,))), 0)
        self.assertEqual(dictionary.add(ActiveSet((2,))), 1)
        self.assertEqual(dictionary.add(ActiveSet((5,))), 0)
        self.assertEqual(dictionary.counts, [2, 1])
        self.assertEqual(dictionary.total_samples, 3)
        self.assertEqual(dictionary.label_of(ActiveSet((7,))), UNSEEN_LABEL)

    def test_unseen_mass_counts_singletons(self):
        dictionary = ActiveSetDictionary()
        for rows in [(1,), (1,), (2,), (3,)]:
            dictionary.add(ActiveSet(rows))
        self.assertAlmostEqual(dictionary.unseen_mass(), 0.5)

    def test_digest_ignores_counts(self):
        a = ActiveSetDictionary([ActiveSet((1,)), ActiveSet((4,))], [10, 1])
        b = ActiveSetDictionary([ActiveSet((1,)), ActiveSet((4,))], [3, 3])
        c = ActiveSetDictionary([ActiveSet((4,)), ActiveSet((1,))], [10, 1])
        self.assertEqual(a.digest(), b.digest())
        self.assertNotEqual(a.digest(), c.digest())

    def test_rejects_duplicates(self):
        with self.assertRaises(ValueError):
            ActiveSetDictionary([ActiveSet((1,)), ActiveSet((1,))])

    def test_dict_round_trip(self):
        dictionary = ActiveSetDictionary([ActiveSet(()), ActiveSet((2, 3))], [4, 1])
        again = ActiveSetDictionary.from_dict(dictionary.to_dict())
        self.assertEqual(again.sets, dictionary.sets)
        self.assertEqual(again.counts, dictionary.counts)


class GenerateDatasetTests(SimpleTestCase):
    def test_single_sample(self):
        ds = make_dataset(n_samples=1)
        self.assertEqual(len(ds), 1)
        self.assertEqual(len(ds.dictionary), 1)
        self.assertEqual(ds.samples[0].label, 0)

    def test_rejects_empty_request(self):
        with self.assertRaises(ConfigError):
            make_dataset(n_samples=0)

    def test_labels_recover_optimal_dispatch(self):
        net = fixture_network('case3_ring')
        poly = build_polytope(net)
        ds = make_dataset(n_samples=500, seed=4)
        self.assertEqual(ds.dictionary.total_samples, len(ds))
        for sample in ds.samples[:100]:
            p = recover_solution(ds.dictionary[sample.label], poly, sample.omega)
            np.testing.assert_allclose(p, sample.p_star, atol=1e-8)
            best = oracle_optimum(poly, sample.omega)
            self.assertAlmostEqual(sample.cost, best.cost, delta=1e-9 * abs(best.cost))
        for sample in ds.samples[100:]:
            p = recover_solution(ds.dictionary[sample.label], poly, sample.omega)
            np.testing.assert_allclose(p, sample.p_star, atol=1e-8)

    def test_infeasible_draws_are_dropped_and_counted(self):
        ds = make_dataset(n_samples=200, sigma_frac=2.0)
        self.assertGreater(ds.meta.n_infeasible, 0)
        self.assertEqual(len(ds) + ds.meta.n_infeasible, 200)
        self.assertTrue(all(s.feasible for s in ds.samples))

    def test_all_infeasible(self):
        net = fixture_network('case3_ring')
        buses = tuple(dataclasses.replace(bus, demand=bus.demand * 5) for bus in net.buses)
        net = dataclasses.replace(net, buses=buses)
        with self.assertRaises(AllSamplesInfeasible):
            generate_dataset(net, build_polytope(net), build_distribution(net), 5, seed=0)

    def test_output_independent_of_thread_count(self):
        with tempfile.TemporaryDirectory() as tmp:
            serial = save_dataset(make_dataset('case4_colocated', 120, seed=3, threads=1), Path(tmp) / 'a.csv')
            parallel = save_dataset(make_dataset('case4_colocated', 120, seed=3, threads=4), Path(tmp) / 'b.csv')
            self.assertEqual(serial.read_bytes(), parallel.read_bytes())

    def test_meta(self):
        ds = make_dataset(n_samples=5, seed=12)
        self.assertEqual(ds.meta.case_name, 'case3_ring')
        self.assertEqual(ds.meta.seed, 12)
        self.assertEqual(ds.meta.bus_ids, (1, 2, 3))
        self.assertEqual(ds.meta.sampler, 'normal')


class DiscoveryRunTests(SimpleTestCase):
    def _run(self, name, window, max_samples):
        net = fixture_network(name)
        return discovery_run(net, build_polytope(net), build_distribution(net), 0, window, max_samples)

    def test_single_active_set_stops_after_window(self):
        result = self._run('case2_line', window=10, max_samples=100)
        self.assertEqual(result.n_samples, 11)
        self.assertEqual(result.discovery_curve, [(1, 1), (11, 1)])
        self.assertTrue(result.stopped_early)

    def test_window_equal_to_budget_runs_to_the_end(self):
        result = self._run('case2_line', window=20, max_samples=20)
        self.assertEqual(result.n_samples, 20)
        self.assertFalse(result.stopped_early)

    def test_curve_is_nondecreasing(self):
        result = self._run('case4_colocated', window=50, max_samples=1000)
        self.assertEqual(result.discovery_curve[0], (1, 1))
        sizes = [size for _, size in result.discovery_curve]
        self.assertEqual(sizes, sorted(sizes))
        self.assertEqual(sizes[-1], len(result.dictionary))
        self.assertGreaterEqual(result.unseen_mass, 0.0)

    def test_dataset_curve_matches_discovery_run(self):
        net = fixture_network('case4_colocated')
        poly = build_polytope(net)
        model = build_distribution(net, 0.1)
        result = discovery_run(net, poly, model, 4, window=200, max_samples=200)
        ds = generate_dataset(net, poly, model, 200, 4, threads=1)
        self.assertEqual(discovery_curve(ds), result.discovery_curve)


    def test_active_tolerance_reaches_every_solve(self):
        net = fixture_network('case3_ring')
        with mock.patch('scenarios.services.solve_dcopf', wraps=solve_dcopf) as solve:
            discovery_run(net, build_polytope(net), build_distribution(net), 0, 3, 5, tol_active=1e-4)
        self.assertTrue(solve.call_args_list)
        for call in solve.call_args_list:
            self.assertEqual(call.kwargs['tol_active'], 1e-4)


class SplitDatasetTests(SimpleTestCase):
    def setUp(self):
        self.ds = make_dataset(n_samples=10)

    def test_sizes_and_disjointness(self):
        train, test = split_dataset(self.ds, 0.8, seed=2)
        self.assertEqual((len(train), len(test)), (8, 2))
        train_ids = {s.index for s in train}
        test_ids = {s.index for s in test}
        self.assertFalse(train_ids & test_ids)
        self.assertEqual(train_ids | test_ids, {s.index for s in self.ds})
        self.assertIs(train.dictionary, test.dictionary)

    def test_same_seed_same_split(self):
        first, _ = split_dataset(self.ds, 0.5, seed=9)
        second, _ = split_dataset(self.ds, 0.5, seed=9)
        self.assertEqual([s.index for s in first], [s.index for s in second])

    def test_empty_side(self):
        with self.assertRaises(EmptySplit):
            split_dataset(self.ds, 0.96, seed=0)
        with self.assertRaises(EmptySplit):
            split_dataset(self.ds, 0.01, seed=0)

    def test_fraction_out_of_range(self):
        with self.assertRaises(ConfigError):
            split_dataset(self.ds, 1.0, seed=0)


class RelabelTests(SimpleTestCase):
    def test_maps_onto_reference_dictionary(self):
        ds = make_dataset('case4_colocated', 60, seed=1)
        reference = ActiveSetDictionary([ds.dictionary[0]])
        relabeled = relabel(ds, reference)
        self.assertIs(relabeled.dictionary, reference)
        for before, after in zip(ds.samples, relabeled.samples):
            expected = 0 if before.label == 0 else UNSEEN_LABEL
            self.assertEqual(after.label, expected)


class StorageTests(SimpleTestCase):
    def test_load_restores_samples(self):
        ds = make_dataset('case4_colocated', 30, seed=6)
        with tempfile.TemporaryDirectory() as tmp:
            path = save_dataset(ds, Path(tmp) / 'data.csv')
            loaded = load_dataset(path)
            self.assertEqual(loaded.meta, ds.meta)
            self.assertEqual(loaded.dictionary.sets, ds.dictionary.sets)
            np.testing.assert_array_equal(loaded.omegas, ds.omegas)
            np.testing.assert_array_equal(loaded.p_stars, ds.p_stars)
            np.testing.assert_array_equal(loaded.labels, ds.labels)
            again = save_dataset(loaded, Path(tmp) / 'again.csv')
            self.assertEqual(path.read_bytes(), again.read_bytes())

    def test_omega_columns_use_external_bus_ids(self):
        ds = make_dataset(n_samples=2)
        with tempfile.TemporaryDirectory() as tmp:
            path = save_dataset(ds, Path(tmp) / 'data.csv')
            columns = path.read_text().splitlines()[2]
        self.assertEqual(columns, 'index,label,cost,w_3,p_0,p_1')

    def test_rejects_foreign_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'other.csv'
            path.write_text('a,b,c\n1,2,3\n')
            with self.assertRaises(DatasetFormatError):
                load_dataset(path)
