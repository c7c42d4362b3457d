import dataclasses
import math
import tempfile
from pathlib import Path
from unittest import skipUnless

from django.test import SimpleTestCase

from .exceptions import (
    CaseEncodingError, DisconnectedNetwork, MalformedRow, MissingTable, NoReferenceBus,
    NonNumericToken, NonpositiveReactance, UnknownBus,
)
from .matpower import load_case, parse_case, serialize_case
from .network import BR_STATUS, BR_X, BUS_TYPE, GEN_BUS, T_BUS
from .services import build_network, validate
from .testing import CASES_DIR, fixture_case, pglib_case_path

PGLIB_CASE24 = pglib_case_path('case24_ieee_rts')


def replace_cell(raw, table, row, column, value):
    """Copy of raw with one table cell changed"""
    rows = [list(r) for r in raw.table(table)]
    rows[row][column] = float(value)
    return dataclasses.replace(raw, **{table: tuple(tuple(r) for r in rows)})


class ParseCaseTests(SimpleTestCase):
    def test_fixture_table_sizes(self):
        raw = fixture_case('case3_ring')
        self.assertEqual(raw.table_sizes, (3, 2, 3, 2))
        self.assertEqual(raw.case_name, 'case3_ring')
        self.assertEqual(raw.base_mva, 100.0)

    def test_missing_gencost(self):
        text = (CASES_DIR / 'case3_ring.m').read_text()
        text = text.split('%% generator cost data')[0]
        with self.assertRaises(MissingTable) as ctx:
            parse_case(text)
        self.assertEqual(ctx.exception.name, 'gencost')

    def test_non_numeric_token_reports_position(self):
        text = (CASES_DIR / 'case2_line.m').read_text()
        text = text.replace('1\t2\t0.01\t0.1', '1\t2\tabc\t0.1')
        with self.assertRaises(NonNumericToken) as ctx:
            parse_case(text)
        self.assertEqual(ctx.exception.column, 3)
        self.assertEqual(ctx.exception.token, 'abc')

    def test_short_row_is_malformed(self):
        text = (CASES_DIR / 'case2_line.m').read_text()
        text = text.replace('\t2\t0.01\t0.1\t0\t100\t100\t100\t0\t0\t1\t-360\t360;', '\t2\t0.01\t0.1;')
        with self.assertRaises(MalformedRow) as ctx:
            parse_case(text)
        self.assertEqual(ctx.exception.table, 'branch')

    def test_comments_scientific_notation_and_unknown_fields(self):
        text = """function mpc = tiny
        mpc.baseMVA = 1e2;   % base
        mpc.bus_name = {
            'one';
            'two';
        };
        mpc.areas = [ 1 1; ];
        mpc.bus = [
            1 3 0 0 0 0 1 1 0 230 1 1.1 0.9 7.5;  % trailing extra column kept
            2 1 5.0E+01 0 0 0 1 1 0 230 1 1.1 0.9
        ];
        mpc.gen = [ 1 0 0 0 0 1 100 1 80 0 0 0 0 0 0 0 0 0 0 0 0; ];
        mpc.branch = [ 1 2 0 0.2 0 0 0 0 0 0 1 -360 360; ];
        mpc.gencost = [ 2 0 0 2 15 0; ];
        """
        raw = parse_case(text)
        self.assertEqual(raw.case_name, 'tiny')
        self.assertEqual(raw.base_mva, 100.0)
        self.assertEqual(raw.table_sizes, (2, 1, 1, 1))
        self.assertEqual(len(raw.bus[0]), 14)
        self.assertEqual(raw.bus[0][13], 7.5)
        self.assertEqual(raw.bus[1][2], 50.0)

    def test_serialize_round_trip(self):
        for name in ('case2_line', 'case3_ring', 'case4_colocated'):
            raw = fixture_case(name)
            again = parse_case(serialize_case(raw))
            self.assertEqual(again, raw)

    def test_non_utf8_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'latin1.m'
            path.write_bytes((CASES_DIR / 'case3_ring.m').read_bytes() + b'% caf\xe9\n')
            with self.assertRaises(CaseEncodingError) as ctx:
                load_case(path)
        self.assertEqual(ctx.exception.exit_code, 2)
        self.assertIn('latin1.m', str(ctx.exception))


class BuildNetworkTests(SimpleTestCase):
    def test_per_unit_demand(self):
        net = build_network(fixture_case('case3_ring'))
        self.assertEqual(net.n_bus, 3)
        self.assertAlmostEqual(net.buses[2].demand, 1.0)
        self.assertEqual(net.load_buses, (2,))
        self.assertEqual(net.slack_bus, 0)

    def test_generator_and_branch_quantities(self):
        net = build_network(fixture_case('case3_ring'))
        self.assertEqual([g.p_max for g in net.generators], [2.0, 2.0])
        # $/MWh scaled to $/p.u.
        self.assertEqual([g.cost for g in net.generators], [1000.0, 3000.0])
        self.assertAlmostEqual(net.branches[1].f_max, 0.5)
        self.assertAlmostEqual(net.branches[0].susceptance, 10.0)

    def test_unrated_branch_is_unlimited(self):
        net = build_network(fixture_case('case4_colocated'))
        self.assertTrue(math.isinf(net.branches[4].f_max))
        self.assertFalse(net.branches[4].is_limited)

    def test_colocated_generators_stay_distinct(self):
        net = build_network(fixture_case('case4_colocated'))
        self.assertEqual(net.n_gen, 3)
        self.assertEqual(net.generator_buses, (0, 0, 2))

    def test_out_of_service_elements_dropped(self):
        raw = fixture_case('case3_ring')
        raw = replace_cell(raw, 'branch', 0, BR_STATUS, 0)
        net = build_network(raw)
        self.assertEqual(net.n_branch, 2)

    def test_zero_reactance(self):
        raw = replace_cell(fixture_case('case3_ring'), 'branch', 1, BR_X, 0)
        with self.assertRaises(NonpositiveReactance) as ctx:
            build_network(raw)
        self.assertEqual(ctx.exception.branch, 2)

    def test_negative_reactance(self):
        raw = replace_cell(fixture_case('case3_ring'), 'branch', 1, BR_X, -0.1)
        with self.assertRaises(NonpositiveReactance) as ctx:
            build_network(raw)
        self.assertEqual(ctx.exception.branch, 2)
        self.assertIn('nonpositive', str(ctx.exception))

    def test_generator_on_unknown_bus(self):
        raw = replace_cell(fixture_case('case3_ring'), 'gen', 0, GEN_BUS, 99)
        with self.assertRaises(UnknownBus) as ctx:
            build_network(raw)
        self.assertEqual((ctx.exception.table, ctx.exception.row, ctx.exception.bus_id), ('gen', 1, 99))
        self.assertEqual(ctx.exception.exit_code, 2)

    def test_branch_on_unknown_bus(self):
        raw = replace_cell(fixture_case('case3_ring'), 'branch', 2, T_BUS, 7)
        with self.assertRaises(UnknownBus) as ctx:
            build_network(raw)
        self.assertEqual((ctx.exception.table, ctx.exception.row, ctx.exception.bus_id), ('branch', 3, 7))

    def test_no_reference_bus(self):
        raw = replace_cell(fixture_case('case3_ring'), 'bus', 0, BUS_TYPE, 2)
        with self.assertRaises(NoReferenceBus):
            build_network(raw)

    def test_disconnected(self):
        raw = fixture_case('case3_ring')
        raw = replace_cell(raw, 'branch', 1, BR_STATUS, 0)
        raw = replace_cell(raw, 'branch', 2, BR_STATUS, 0)
        with self.assertRaises(DisconnectedNetwork):
            build_network(raw)

    def test_deterministic(self):
        raw = fixture_case('case4_colocated')
        self.assertEqual(build_network(raw), build_network(raw))

    def test_piecewise_linear_cost_uses_first_segment(self):
        raw = fixture_case('case2_line')
        raw = dataclasses.replace(raw, gencost=((1, 0, 0, 3, 0, 0, 50, 1000, 150, 3500),))
        net = build_network(raw)
        self.assertAlmostEqual(net.generators[0].cost, 20.0 * 100)

    @skipUnless(PGLIB_CASE24.exists(), 'PGLib case24 not available')
    def test_pglib_case24(self):
        raw = load_case(PGLIB_CASE24)
        self.assertEqual(raw.case_name, 'pglib_opf_case24_ieee_rts')
        net = build_network(raw)
        self.assertEqual(net.n_bus, 24)
        self.assertGreater(2 * net.n_gen, net.n_bus)
        self.assertEqual(validate(net), [])


class ValidateTests(SimpleTestCase):
    def setUp(self):
        self.net = build_network(fixture_case('case3_ring'))

    def test_valid_fixture(self):
        self.assertEqual(validate(self.net), [])

    def test_bounds_inverted(self):
        generators = list(self.net.generators)
        generators[0] = dataclasses.replace(generators[0], p_min=3.0)
        net = dataclasses.replace(self.net, generators=tuple(generators))
        self.assertEqual([str(d) for d in validate(net)], ['BoundsInverted(gen 1)'])

    def test_insufficient_capacity(self):
        generators = tuple(dataclasses.replace(g, p_max=0.3) for g in self.net.generators)
        net = dataclasses.replace(self.net, generators=generators)
        self.assertEqual([str(d) for d in validate(net)], ['InsufficientCapacity'])

    def test_nonpositive_rating(self):
        branches = list(self.net.branches)
        branches[2] = dataclasses.replace(branches[2], f_max=0.0)
        net = dataclasses.replace(self.net, branches=tuple(branches))
        self.assertEqual([str(d) for d in validate(net)], ['NonpositiveRating(branch 3)'])
