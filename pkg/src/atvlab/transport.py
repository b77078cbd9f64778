"""Exact solvers for one-stage finite transport problems.

When both marginals have at most 3 points the problem is solved by
complete enumeration of the basic solutions of the transport polytope:
every vertex is the tree solution of a spanning tree of the complete
bipartite support graph, so scanning all spanning trees visits every
vertex and the minimum over them is the exact optimum.  Larger problems
fall back to the two-phase simplex core.

Enumeration is deliberately free of any structural insight about the cost
matrix (in particular of diagonal optimality), which is what makes the
values it produces usable as an oracle for the recursive algorithms built
on top.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import ShapeMismatch, SolverFailure
from .measures import Dist
from .simplex import solve_eq_lp

#: Largest marginal size solved by vertex enumeration.
MAX_ENUM_SIDE = 3
#: Slack when accepting a vertex as feasible / cost-tied.
VERTEX_TOL = 1e-12


@lru_cache(maxsize=None)
def _tree_systems(m: int, n: int):
    """Precompiled vertex solvers for the m x n transport polytope.

    Returns ``(cells, coeffs, diag)`` where ``cells[t]`` lists the flat
    cell indices of spanning tree ``t``, ``coeffs[t]`` maps the stacked
    marginal vector ``[p; q]`` linearly onto the basic cell values, and
    ``diag[t]`` flags which basic cells sit on the diagonal.  Tree
    solutions are obtained by integer-exact leaf elimination, so the only
    rounding in a vertex is the final matrix-vector product.
    """
    nodes = m + n
    k = nodes - 1
    all_cells = [(i, j) for i in range(m) for j in range(n)]
    cells_out, coeffs_out, diag_out = [], [], []

    for combo in combinations(range(m * n), k):
        edges = [all_cells[c] for c in combo]
        parent = list(range(nodes))

        def find(v: int) -> int:
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        acyclic = True
        for i, j in edges:
            ri, rj = find(i), find(m + j)
            if ri == rj:
                acyclic = False
                break
            parent[ri] = rj
        if not acyclic:
            continue  # k acyclic edges on m+n nodes <=> spanning tree

        # leaf elimination with integer coefficient vectors
        residual = [np.eye(nodes, dtype=np.int64)[v] for v in range(nodes)]
        adjacency: dict[int, set[int]] = {v: set() for v in range(nodes)}
        for e, (i, j) in enumerate(edges):
            adjacency[i].add(e)
            adjacency[m + j].add(e)
        coeff = np.zeros((k, nodes), dtype=np.int64)
        alive = set(range(nodes))
        while len(alive) > 1:
            leaf = min(v for v in alive if len(adjacency[v]) == 1)
            e = adjacency[leaf].pop()
            i, j = edges[e]
            other = m + j if leaf == i else i
            coeff[e] = residual[leaf]
            residual[other] = residual[other] - residual[leaf]
            adjacency[other].discard(e)
            alive.remove(leaf)

        cells_out.append([i * n + j for i, j in edges])
        coeffs_out.append(coeff)
        diag_out.append([float(i == j) for i, j in edges])

    return (
        np.array(cells_out, dtype=np.intp),
        np.array(coeffs_out, dtype=float),
        np.array(diag_out, dtype=float),
    )


def _solve_by_enumeration(p: np.ndarray, q: np.ndarray, cost: np.ndarray):
    m, n = cost.shape
    cells, coeffs, diag = _tree_systems(m, n)
    r = np.concatenate([p, q])
    basics = coeffs @ r                                # (trees, m+n-1)
    feasible = basics.min(axis=1) >= -VERTEX_TOL
    if not feasible.any():
        raise SolverFailure("no feasible transport vertex; bad marginals")
    values = (basics * cost.ravel()[cells]).sum(axis=1)
    values[~feasible] = np.inf
    best = float(values.min())
    tied = np.nonzero(values <= best + VERTEX_TOL)[0]
    diag_mass = (basics[tied] * diag[tied]).sum(axis=1)
    chosen = int(tied[int(np.argmax(diag_mass))])

    plan = np.zeros(m * n)
    plan[cells[chosen]] = np.maximum(basics[chosen], 0.0)
    plan = plan.reshape(m, n)
    return float((plan * cost).sum()), plan


def _solve_by_simplex(p: np.ndarray, q: np.ndarray, cost: np.ndarray):
    m, n = cost.shape
    a = np.zeros((m + n, m * n))
    for i in range(m):
        a[i, i * n : (i + 1) * n] = 1.0
    for j in range(n):
        a[m + j, j::n] = 1.0
    result = solve_eq_lp(cost.ravel(), a, np.concatenate([p, q]))
    plan = result.x.reshape(m, n)
    return float((plan * cost).sum()), plan


def solve_discrete_ot(p: Dist, q: Dist, cost) -> tuple[float, np.ndarray]:
    """Exact optimal transport between two finite distributions.

    Returns ``(value, plan)`` with ``value = <plan, cost>`` globally
    optimal and ``plan`` carrying the marginals ``p`` and ``q``.  Ties
    between optimal vertices are broken toward the diagonal-heaviest
    plan so output is reproducible; the value itself is tie-independent.
    """
    if not isinstance(p, Dist):
        p = Dist(p)
    if not isinstance(q, Dist):
        q = Dist(q)
    c = np.asarray(cost, dtype=float)
    if c.shape != (p.size, q.size):
        raise ShapeMismatch(
            f"cost shape {c.shape} does not match marginals ({p.size}, {q.size})"
        )
    if not np.isfinite(c).all():
        raise ValueError("cost matrix must be finite")
    if np.any(c < 0.0):
        raise ValueError("cost matrix must be nonnegative")
    if max(p.size, q.size) <= MAX_ENUM_SIDE:
        return _solve_by_enumeration(p.weights, q.weights, c)
    return _solve_by_simplex(p.weights, q.weights, c)
