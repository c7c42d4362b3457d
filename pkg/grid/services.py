import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .exceptions import DisconnectedNetwork, NoReferenceBus, NonpositiveReactance, UnknownBus
from .network import (
    BR_STATUS, BR_X, BUS_I, BUS_TYPE, COST, COST_MODEL, F_BUS, GEN_BUS, GEN_STATUS,
    NCOST, PD, PMAX, PMIN, POLYNOMIAL, PW_LINEAR, RATE_A, REF_BUS_TYPE, T_BUS,
    UNLIMITED, Branch, Bus, Generator, Network,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Diagnostic:
    """One violated Network invariant"""
    code: str
    element: str = ''
    detail: str = ''

    def __str__(self):
        return f"{self.code}({self.element})" if self.element else self.code


def _linear_cost(row, base_mva):
    """First-order cost coefficient in $/p.u. from a gencost row"""
    model, ncost = int(row[COST_MODEL]), int(row[NCOST])
    coefficients = row[COST:COST + (2 * ncost if model == PW_LINEAR else ncost)]
    if model == POLYNOMIAL:
        # coefficients run c_{n-1} ... c_1 c_0
        slope = coefficients[-2] if ncost >= 2 else 0.0
    elif model == PW_LINEAR and ncost >= 2:
        x0, f0, x1, f1 = coefficients[:4]
        slope = (f1 - f0) / (x1 - x0) if x1 != x0 else 0.0
    else:
        slope = 0.0
    return slope * base_mva


def _bus(bus_index, table, row, bus_id):
    try:
        return bus_index[int(bus_id)]
    except KeyError:
        raise UnknownBus(table, row, int(bus_id)) from None


def count_components(n_bus, branches):
    if n_bus == 0:
        return 0
    rows = [br.from_bus for br in branches]
    cols = [br.to_bus for br in branches]
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n_bus, n_bus))
    n_components, _ = connected_components(graph, directed=False)
    return n_components


class NetworkService:
    """Turns parsed MATPOWER tables into the per-unit DC network"""

    @classmethod
    def build_network(cls, raw):
        base = raw.base_mva

        bus_index = {}
        buses = []
        slack_bus = None
        for i, row in enumerate(raw.bus):
            external_id = int(row[BUS_I])
            bus_index[external_id] = i
            demand = row[PD] / base
            buses.append(Bus(index=i, external_id=external_id, demand=demand, is_load=demand > 0))
            if slack_bus is None and int(row[BUS_TYPE]) == REF_BUS_TYPE:
                slack_bus = i
        if slack_bus is None:
            raise NoReferenceBus()

        generators = []
        for g, row in enumerate(raw.gen):
            if row[GEN_STATUS] <= 0:
                continue
            cost_row = raw.gencost[g] if g < len(raw.gencost) else None
            generators.append(Generator(
                bus=_bus(bus_index, 'gen', g + 1, row[GEN_BUS]),
                p_min=row[PMIN] / base,
                p_max=row[PMAX] / base,
                cost=_linear_cost(cost_row, base) if cost_row is not None else 0.0,
            ))

        branches = []
        for k, row in enumerate(raw.branch):
            if row[BR_STATUS] <= 0:
                continue
            if row[BR_X] <= 0:
                raise NonpositiveReactance(k + 1)
            rating = row[RATE_A]
            branches.append(Branch(
                from_bus=_bus(bus_index, 'branch', k + 1, row[F_BUS]),
                to_bus=_bus(bus_index, 'branch', k + 1, row[T_BUS]),
                susceptance=1.0 / row[BR_X],
                f_max=rating / base if rating > 0 else UNLIMITED,
            ))

        n_components = count_components(len(buses), branches)
        if n_components > 1:
            raise DisconnectedNetwork(n_components)

        network = Network(
            case_name=raw.case_name,
            base_mva=base,
            buses=tuple(buses),
            generators=tuple(generators),
            branches=tuple(branches),
            slack_bus=slack_bus,
        )
        logger.info(
            f"Built network {network.case_name}: {network.n_bus} buses, "
            f"{network.n_gen} generators, {network.n_branch} branches"
        )
        return network

    @classmethod
    def validate(cls, net):
        """Return one Diagnostic per violated Network invariant (empty when valid)"""
        diagnostics = []

        for g, gen in enumerate(net.generators, start=1):
            if not 0 <= gen.bus < net.n_bus:
                diagnostics.append(Diagnostic('InvalidGeneratorBus', f"gen {g}", f"bus index {gen.bus}"))
            if gen.p_min > gen.p_max:
                diagnostics.append(Diagnostic('BoundsInverted', f"gen {g}", f"{gen.p_min} > {gen.p_max}"))
            if not (math.isfinite(gen.p_min) and math.isfinite(gen.p_max)):
                diagnostics.append(Diagnostic('UnboundedGenerator', f"gen {g}"))

        for k, branch in enumerate(net.branches, start=1):
            if not (branch.f_max > 0):
                diagnostics.append(Diagnostic('NonpositiveRating', f"branch {k}", f"f_max = {branch.f_max}"))
            for end in (branch.from_bus, branch.to_bus):
                if not 0 <= end < net.n_bus:
                    diagnostics.append(Diagnostic('InvalidBranchBus', f"branch {k}", f"bus index {end}"))

        if not 0 <= net.slack_bus < net.n_bus:
            diagnostics.append(Diagnostic('NoReferenceBus'))

        valid_branches = [
            br for br in net.branches
            if 0 <= br.from_bus < net.n_bus and 0 <= br.to_bus < net.n_bus
        ]
        n_components = count_components(net.n_bus, valid_branches)
        if n_components > 1:
            diagnostics.append(Diagnostic('DisconnectedNetwork', '', f"{n_components} islands"))

        capacity = sum(gen.p_max for gen in net.generators)
        if capacity < float(net.demand.sum()):
            diagnostics.append(Diagnostic(
                'InsufficientCapacity', '', f"capacity {capacity:.6g} < demand {net.demand.sum():.6g}"
            ))

        return diagnostics


def build_network(raw):
    return NetworkService.build_network(raw)


def validate(net):
    return NetworkService.validate(net)


@dataclass(frozen=True)
class InventoryRow:
    case: str
    buses: int
    generators: int
    branches: int
    generator_constraints: int
    flow_constraints: int
    active_sets: object = None


def case_inventory(net, dictionary=None):
    """One row of the case summary table; active_sets is None without a dictionary"""
    rated = sum(1 for branch in net.branches if branch.is_limited)
    return InventoryRow(
        case=net.case_name,
        buses=net.n_bus,
        generators=net.n_gen,
        branches=net.n_branch,
        generator_constraints=2 * net.n_gen,
        flow_constraints=2 * rated,
        active_sets=len(dictionary) if dictionary is not None else None,
    )
