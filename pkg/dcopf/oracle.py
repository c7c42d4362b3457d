"""Brute-force vertex enumeration for small DC-OPF instances.

Every (n_g - 1)-subset of rows is tried as an active set. Exponential in the
row count; meant for networks with a handful of generators and lines.
"""
import itertools
from dataclasses import dataclass

import numpy as np

from .services import TOL_FEASIBLE, ActiveSet, basis_matrix, check_feasible, is_nonsingular, recover_solution


@dataclass(frozen=True)
class Vertex:
    active_set: ActiveSet
    p: np.ndarray
    cost: float
    feasible: bool


def enumerate_vertices(poly, omega, tol=TOL_FEASIBLE):
    vertices = []
    for rows in itertools.combinations(range(poly.n_rows), poly.n_gen - 1):
        if not is_nonsingular(basis_matrix(poly, rows)):
            continue
        aset = ActiveSet(rows)
        p = recover_solution(aset, poly, omega)
        vertices.append(Vertex(
            active_set=aset,
            p=p,
            cost=float(poly.cost @ p),
            feasible=check_feasible(p, poly, omega, tol).feasible,
        ))
    return vertices


def oracle_optimum(poly, omega, tol=TOL_FEASIBLE):
    """Cheapest feasible vertex, or None when no vertex is feasible"""
    feasible = [v for v in enumerate_vertices(poly, omega, tol) if v.feasible]
    if not feasible:
        return None
    return min(feasible, key=lambda v: v.cost)
