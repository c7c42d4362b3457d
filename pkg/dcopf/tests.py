import dataclasses
from unittest import skipUnless

import numpy as np
from django.test import SimpleTestCase
from scipy.optimize import linprog

from core.exceptions import DimensionMismatch
from core.rng import substream
from grid.matpower import load_case
from grid.network import Bus, Generator, Network
from grid.services import build_network
from grid.testing import fixture_network, pglib_case_path

from .exceptions import SingularBasis
from .oracle import enumerate_vertices, oracle_optimum
from .polytope import RowKind, build_polytope
from .ptdf import compute_ptdf, flows
from .services import (
    ActiveSet, SolveStatus, check_feasible, extract_active_set, recover_solution, solve_dcopf,
)

FIXTURES = ('case2_line', 'case3_ring', 'case4_colocated')


def random_omegas(net, count, seed=7):
    """Gaussian forecast errors at load buses, 3% of demand"""
    rng = substream(seed, 'generate', 0)
    sigma = 0.03 * net.demand
    return [rng.normal(0.0, 1.0, net.n_bus) * sigma for _ in range(count)]


class PtdfTests(SimpleTestCase):
    def test_ring_entries(self):
        ptdf = compute_ptdf(fixture_network('case3_ring'))
        expected = np.array([
            [0.0, -2 / 3, -1 / 3],
            [0.0, -1 / 3, -2 / 3],
            [0.0, 1 / 3, -1 / 3],
        ])
        np.testing.assert_allclose(ptdf.M, expected, atol=1e-12)

    def test_two_bus_line(self):
        ptdf = compute_ptdf(fixture_network('case2_line'))
        np.testing.assert_allclose(ptdf.M, [[0.0, -1.0]], atol=1e-12)

    def test_balanced_flows_do_not_depend_on_slack(self):
        net = fixture_network('case3_ring')
        injection = np.array([0.5, 0.5, -1.0])
        reference = flows(compute_ptdf(net), injection)
        for slack in (1, 2):
            np.testing.assert_allclose(flows(compute_ptdf(net, slack_bus=slack), injection), reference, atol=1e-12)

    def test_slack_column_is_zero(self):
        ptdf = compute_ptdf(fixture_network('case4_colocated'))
        np.testing.assert_array_equal(ptdf.M[:, 0], 0.0)


class PolytopeTests(SimpleTestCase):
    def test_ring_shapes_and_rhs(self):
        poly = build_polytope(fixture_network('case3_ring'))
        self.assertEqual(poly.A.shape, (10, 2))
        self.assertEqual(poly.C.shape, (10, 3))
        self.assertAlmostEqual(poly.balance_rhs_base, 1.0)
        np.testing.assert_allclose(poly.b[:4], [2.0, 2.0, 0.0, 0.0], atol=1e-12)
        # shift = -M d = (1/3, 2/3, 1/3)
        np.testing.assert_allclose(poly.b[4:7], [1.5 - 1 / 3, 0.5 - 2 / 3, 1.5 - 1 / 3], atol=1e-12)
        np.testing.assert_allclose(poly.b[7:], [1.5 + 1 / 3, 0.5 + 2 / 3, 1.5 + 1 / 3], atol=1e-12)

    def test_row_blocks(self):
        poly = build_polytope(fixture_network('case3_ring'))
        self.assertEqual([str(label) for label in poly.row_labels[:4]],
                         ['GenUpper(0)', 'GenUpper(1)', 'GenLower(0)', 'GenLower(1)'])
        self.assertEqual(poly.rows_of_kind(RowKind.FLOW_UPPER), [4, 5, 6])
        self.assertEqual(poly.rows_of_kind(RowKind.FLOW_LOWER), [7, 8, 9])

    def test_unrated_branch_has_no_rows(self):
        poly = build_polytope(fixture_network('case4_colocated'))
        self.assertEqual(poly.rated_branches, (0, 1, 2, 3))
        self.assertEqual(poly.unrated_branches, (4,))
        self.assertEqual(poly.n_rows, 2 * 3 + 2 * 4)

    def test_fingerprint_is_stable(self):
        net = fixture_network('case3_ring')
        self.assertEqual(build_polytope(net).fingerprint(), build_polytope(net).fingerprint())
        self.assertNotEqual(
            build_polytope(net).fingerprint(),
            build_polytope(fixture_network('case4_colocated')).fingerprint(),
        )


class SolveDcopfTests(SimpleTestCase):
    def test_ring_at_forecast(self):
        poly = build_polytope(fixture_network('case3_ring'))
        point = solve_dcopf(poly, np.zeros(3))
        self.assertIs(point.status, SolveStatus.OPTIMAL)
        np.testing.assert_allclose(point.p_star, [0.5, 0.5], atol=1e-9)
        self.assertAlmostEqual(point.cost, 2000.0, places=6)
        self.assertEqual(point.active_set, ActiveSet((5,)))

    def test_ring_follows_closed_form(self):
        poly = build_polytope(fixture_network('case3_ring'))
        for w in (-0.02, 0.01, 0.03):
            point = solve_dcopf(poly, np.array([0.0, 0.0, w]))
            np.testing.assert_allclose(point.p_star, [0.5 + w, 0.5 - 2 * w], atol=1e-9)
            self.assertEqual(point.active_set.to_list(), [5])

    def test_single_generator_has_empty_active_set(self):
        poly = build_polytope(fixture_network('case2_line'))
        point = solve_dcopf(poly, np.array([0.0, 0.1]))
        self.assertEqual(len(point.active_set), 0)
        np.testing.assert_allclose(point.p_star, [0.5], atol=1e-9)

    def test_single_bus_without_lines(self):
        net = Network(
            case_name='single', base_mva=100.0,
            buses=(Bus(index=0, external_id=1, demand=1.0, is_load=True),),
            generators=(Generator(bus=0, p_min=0.0, p_max=2.0, cost=10.0),),
            branches=(), slack_bus=0,
        )
        point = solve_dcopf(build_polytope(net), np.zeros(1))
        np.testing.assert_allclose(point.p_star, [1.0], atol=1e-9)
        self.assertEqual(point.active_set, ActiveSet(()))

    def test_infeasible_draw(self):
        poly = build_polytope(fixture_network('case3_ring'))
        point = solve_dcopf(poly, np.array([0.0, 0.0, -3.5]))
        self.assertIs(point.status, SolveStatus.INFEASIBLE)
        self.assertIsNone(point.p_star)
        self.assertIsNone(point.active_set)

    def test_infeasible_demand(self):
        net = fixture_network('case3_ring')
        buses = tuple(dataclasses.replace(bus, demand=bus.demand * 5) for bus in net.buses)
        point = solve_dcopf(build_polytope(dataclasses.replace(net, buses=buses)), np.zeros(3))
        self.assertFalse(point.is_optimal)

    def test_wrong_omega_length(self):
        poly = build_polytope(fixture_network('case3_ring'))
        with self.assertRaises(DimensionMismatch):
            solve_dcopf(poly, np.zeros(2))

    def test_matches_vertex_oracle(self):
        for name in FIXTURES:
            net = fixture_network(name)
            poly = build_polytope(net)
            for omega in random_omegas(net, 100):
                point = solve_dcopf(poly, omega)
                best = oracle_optimum(poly, omega)
                if not point.is_optimal:
                    self.assertIsNone(best, name)
                    continue
                self.assertIsNotNone(best, name)
                self.assertAlmostEqual(point.cost, best.cost, delta=1e-9 * max(1.0, abs(best.cost)))
                # colocated twins share a cost, so any optimal vertex may be returned
                optimal = [
                    v.p for v in enumerate_vertices(poly, omega)
                    if v.feasible and abs(v.cost - best.cost) <= 1e-9 * max(1.0, abs(best.cost))
                ]
                self.assertTrue(
                    any(np.max(np.abs(point.p_star - p)) <= 1e-8 for p in optimal),
                    f"{name}: dispatch {point.p_star} is not an optimal vertex",
                )

    def test_degenerate_case_is_deterministic(self):
        poly = build_polytope(fixture_network('case4_colocated'))
        omega = np.zeros(4)
        first = solve_dcopf(poly, omega)
        for _ in range(5):
            again = solve_dcopf(poly, omega)
            self.assertEqual(again.active_set, first.active_set)
            np.testing.assert_array_equal(again.p_star, first.p_star)

    @skipUnless(pglib_case_path('case24_ieee_rts').exists(), 'PGLib case24 not available')
    def test_pglib_case24_matches_reference_lp(self):
        net = build_network(load_case(pglib_case_path('case24_ieee_rts')))
        poly = build_polytope(net)
        omega = np.zeros(net.n_bus)
        point = solve_dcopf(poly, omega)
        reference = linprog(
            poly.cost, A_ub=poly.A, b_ub=poly.rhs(omega),
            A_eq=np.ones((1, poly.n_gen)), b_eq=[poly.balance_rhs(omega)],
            bounds=(None, None), method='highs',
        )
        self.assertTrue(reference.success)
        self.assertAlmostEqual(point.cost, reference.fun, delta=1e-6 * abs(reference.fun))
        self.assertEqual(len(point.active_set), net.n_gen - 1)


class ActiveSetRecoveryTests(SimpleTestCase):
    def test_recovery_reproduces_optimum(self):
        for name in FIXTURES:
            net = fixture_network(name)
            poly = build_polytope(net)
            for omega in random_omegas(net, 200, seed=11):
                point = solve_dcopf(poly, omega)
                if not point.is_optimal:
                    continue
                p = recover_solution(point.active_set, poly, omega)
                np.testing.assert_allclose(p, point.p_star, rtol=0, atol=1e-8)
                self.assertTrue(check_feasible(p, poly, omega).feasible)

    def assert_pglib_round_trip(self, name):
        net = build_network(load_case(pglib_case_path(name)))
        poly = build_polytope(net)
        solved = 0
        for omega in random_omegas(net, 200, seed=5):
            point = solve_dcopf(poly, omega)
            if not point.is_optimal:
                continue
            solved += 1
            p = recover_solution(point.active_set, poly, omega)
            np.testing.assert_allclose(p, point.p_star, rtol=0, atol=1e-8)
            self.assertEqual(len(point.active_set), net.n_gen - 1)
        self.assertGreater(solved, 0)

    @skipUnless(pglib_case_path('case24_ieee_rts').exists(), 'PGLib case24 not available')
    def test_pglib_case24_round_trip(self):
        self.assert_pglib_round_trip('case24_ieee_rts')

    @skipUnless(pglib_case_path('case57_ieee').exists(), 'PGLib case57 not available')
    def test_pglib_case57_round_trip(self):
        self.assert_pglib_round_trip('case57_ieee')

    def test_tight_row_selection_without_hint(self):
        poly = build_polytope(fixture_network('case3_ring'))
        aset = extract_active_set(poly, np.array([0.5, 0.5]), np.zeros(3))
        self.assertEqual(aset.to_list(), [5])

    def test_bad_hint_falls_back(self):
        poly = build_polytope(fixture_network('case3_ring'))
        with self.assertLogs('dcopf.services', level='WARNING'):
            aset = extract_active_set(poly, np.array([0.5, 0.5]), np.zeros(3), basis_hint=[0])
        self.assertEqual(aset.to_list(), [5])

    def test_singular_basis(self):
        poly = build_polytope(fixture_network('case4_colocated'))
        # GenUpper(0) and GenLower(0) are parallel
        with self.assertRaises(SingularBasis):
            recover_solution(ActiveSet((0, 3)), poly, np.zeros(4))

    def test_active_set_rows_must_increase(self):
        with self.assertRaises(ValueError):
            ActiveSet((3, 1))
        self.assertEqual(ActiveSet.from_rows([3, 1, 3]).rows, (1, 3))

    def test_enumeration_covers_optimum(self):
        poly = build_polytope(fixture_network('case3_ring'))
        vertices = enumerate_vertices(poly, np.zeros(3))
        feasible = {v.active_set.rows for v in vertices if v.feasible}
        self.assertIn((5,), feasible)


class CheckFeasibleTests(SimpleTestCase):
    def setUp(self):
        self.poly = build_polytope(fixture_network('case3_ring'))

    def test_optimum_is_feasible(self):
        check = check_feasible([0.5, 0.5], self.poly, np.zeros(3))
        self.assertTrue(check.feasible)
        self.assertAlmostEqual(check.balance_residual, 0.0)

    def test_line_overload(self):
        # line 1-3 carries 2/3 - 0.4/3 against a 0.5 rating
        check = check_feasible([0.6, 0.4], self.poly, np.zeros(3))
        self.assertFalse(check.feasible)
        self.assertAlmostEqual(check.max_violation, 1 / 30)

    def test_balance_residual(self):
        check = check_feasible([0.6, 0.5], self.poly, np.zeros(3))
        self.assertFalse(check.feasible)
        self.assertAlmostEqual(check.balance_residual, 0.1)
