"""Adapted total variation between finite process laws.

Three mutually independent routes to the same number live in this package:

* :func:`atv_recursive` evaluates the stagewise decomposition

      tv(kernels at prefix) summed over prefixes, each term weighted by
      the product of componentwise-minimum measures along the prefix,

  which is the closed recursion
  ``value(prefix) = tv(p, q) + sum_s min(p_s, q_s) * value(prefix + s)``.

* :func:`atv_dp` runs backward induction over prefix pairs, solving the
  one-stage transport problem at each pair with a generic exact solver
  that knows nothing about diagonal optimality.  Agreement with the
  recursion is therefore a genuine cross-check, not a tautology.

* ``atv_lp`` (in :mod:`atvlab.bicausal_lp`) minimizes over explicitly
  constrained couplings, with no recursion at all.

:func:`optimal_bicausal_coupling` realizes the optimum: at every prefix
pair the stage coupling puts the maximal possible mass on the diagonal
and spreads the leftover as a normalized product of the residuals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadNormalization, NegativeMass, ShapeMismatch
from .measures import (
    Dist,
    KernelNode,
    Path,
    ProcessLaw,
    _check_same_shape,
    joint_prob,
)
from .transport import solve_discrete_ot

#: Cost of a mismatch under the discrete metric, including the factor 2.
MISMATCH_COST = 2.0
#: Residual masses below this are treated as zero when coupling leftovers.
RESIDUAL_EPS = 1e-15
#: Couplings must reproduce their marginals within this tolerance.
COUPLING_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class AtvBreakdown:
    """Adapted total variation split into its per-stage contributions."""

    per_stage: tuple[float, ...]
    total: float

    def __post_init__(self) -> None:
        if abs(self.total - math.fsum(self.per_stage)) > 1e-12:
            raise BadNormalization("total does not match the stage sum")
        if self.total < -1e-12 or self.total > 2.0 + 1e-12:
            raise BadNormalization(f"total {self.total!r} outside [0, 2]")

    @classmethod
    def from_stages(cls, per_stage) -> "AtvBreakdown":
        stages = tuple(float(s) for s in per_stage)
        return cls(stages, math.fsum(stages))


@dataclass(frozen=True, eq=False)
class Coupling:
    """A joint probability table over path pairs with fixed marginals."""

    mu_law: ProcessLaw
    nu_law: ProcessLaw
    table: dict[tuple[Path, Path], float]

    def __post_init__(self) -> None:
        _check_same_shape(self.mu_law, self.nu_law)
        mass = 0.0
        marg_x: dict[Path, float] = {}
        marg_y: dict[Path, float] = {}
        for (x, y), w in self.table.items():
            if w < 0.0:
                raise NegativeMass(f"coupling entry {w!r} at {(x, y)}")
            self.mu_law.check_path(x, length=self.n)
            self.nu_law.check_path(y, length=self.n)
            mass += w
            marg_x[x] = marg_x.get(x, 0.0) + w
            marg_y[y] = marg_y.get(y, 0.0) + w
        if abs(mass - 1.0) > COUPLING_TOL:
            raise BadNormalization(f"coupling mass {mass!r}")
        self._check_marginal(marg_x, self.mu_law, "first")
        self._check_marginal(marg_y, self.nu_law, "second")

    def _check_marginal(self, marg: dict[Path, float], law: ProcessLaw, side: str):
        paths = set(marg)
        paths.update(path for path, _ in law.support())
        for path in paths:
            err = abs(marg.get(path, 0.0) - joint_prob(law, path))
            if err > COUPLING_TOL:
                raise BadNormalization(
                    f"{side} marginal off by {err!r} at path {path}"
                )

    @property
    def n(self) -> int:
        return self.mu_law.n


def coupling_cost(pi: Coupling) -> float:
    """Twice the off-diagonal mass: the discrete-metric transport cost."""
    return MISMATCH_COST * math.fsum(
        w for (x, y), w in pi.table.items() if x != y
    )


def atv_recursive(mu: ProcessLaw, nu: ProcessLaw) -> AtvBreakdown:
    """Adapted total variation via the stagewise decomposition.

    ``per_stage[k]`` collects the depth-k kernel total variations weighted
    by the iterated minimum measure of the prefix; ``total`` is their sum.
    Prefixes whose minimum-measure weight hits zero contribute nothing
    below them, so the recursion stops there.
    """
    _check_same_shape(mu, nu)
    contributions: list[list[float]] = [[] for _ in range(mu.n)]

    def walk(a: KernelNode, b: KernelNode, weight: float, depth: int) -> None:
        p, q = a.dist.weights, b.dist.weights
        contributions[depth].append(weight * float(np.abs(p - q).sum()))
        if depth + 1 == mu.n:
            return
        floor = np.minimum(p, q)
        for s, child in sorted(a.children.items()):
            w = weight * float(floor[s])
            if w > 0.0:
                walk(child, b.children[s], w, depth + 1)

    walk(mu.root, nu.root, 1.0, 0)
    return AtvBreakdown.from_stages(math.fsum(c) for c in contributions)


def optimal_bicausal_coupling(mu: ProcessLaw, nu: ProcessLaw) -> Coupling:
    """Construct an optimal bicausal coupling stage by stage.

    At each reachable prefix pair the stage coupling places
    ``min(p_s, q_s)`` on every diagonal cell and couples the residual
    measures by the normalized product rule.  The residuals have disjoint
    supports, so all product mass is off-diagonal.  The result is bicausal
    by construction and its cost equals ``atv_recursive(mu, nu).total``.
    """
    _check_same_shape(mu, nu)
    table: dict[tuple[Path, Path], float] = {}

    def stage_plan(p: np.ndarray, q: np.ndarray) -> dict[tuple[int, int], float]:
        floor = np.minimum(p, q)
        plan = {(s, s): float(floor[s]) for s in range(len(p)) if floor[s] > 0.0}
        res_p = p - floor
        res_q = q - floor
        residual = float(res_p.sum())
        if residual > RESIDUAL_EPS:
            for i in np.nonzero(res_p > 0.0)[0]:
                for j in np.nonzero(res_q > 0.0)[0]:
                    plan[(int(i), int(j))] = (
                        plan.get((int(i), int(j)), 0.0)
                        + float(res_p[i]) * float(res_q[j]) / residual
                    )
        return plan

    def walk(a: KernelNode, b: KernelNode, x: Path, y: Path, mass: float) -> None:
        plan = stage_plan(a.dist.weights, b.dist.weights)
        for (i, j), w in sorted(plan.items()):
            piece = mass * w
            if piece <= 0.0:
                continue
            if len(x) + 1 == mu.n:
                key = (x + (i,), y + (j,))
                table[key] = table.get(key, 0.0) + piece
            else:
                walk(a.children[i], b.children[j], x + (i,), y + (j,), piece)

    walk(mu.root, nu.root, (), (), 1.0)
    return Coupling(mu, nu, table)


def atv_dp(mu: ProcessLaw, nu: ProcessLaw, ot_solver=solve_discrete_ot) -> float:
    """Adapted total variation by backward induction over prefix pairs.

    ``V(a, b)`` is the optimal remaining cost given x-prefix ``a`` and
    y-prefix ``b``: zero at full depth, otherwise the exact one-stage
    transport value between the kernels at ``a`` and ``b`` under the cost

        c(s, t) = 2                  if s != t,
        c(s, s) = V(a + s, b + s)    otherwise,

    because a mismatch anywhere already incurs the full discrete-metric
    cost on paths.  Child values are only needed (and only defined) where
    both kernels charge the symbol; elsewhere the diagonal cell carries no
    feasible mass and its cost is pinned at 2.

    The memo is keyed by prefix pairs, so the worst-case state count is
    the square of the path count; fine at desk scale, exponential beyond.
    The stage solver is injectable to keep this route independent of any
    structural shortcut.
    """
    _check_same_shape(mu, nu)
    memo: dict[tuple[Path, Path], float] = {}

    def value(a: Path, b: Path, na: KernelNode, nb: KernelNode) -> float:
        key = (a, b)
        if key in memo:
            return memo[key]
        depth = len(a)
        p, q = na.dist, nb.dist
        size = p.size
        cost = np.full((size, size), MISMATCH_COST)
        if depth + 1 < mu.n:
            for s in range(size):
                if p.weights[s] > 0.0 and q.weights[s] > 0.0:
                    cost[s, s] = value(
                        a + (s,), b + (s,), na.children[s], nb.children[s]
                    )
        else:
            np.fill_diagonal(cost, 0.0)
        val, _ = ot_solver(p, q, cost)
        memo[key] = val
        return val

    return value((), (), mu.root, nu.root)
