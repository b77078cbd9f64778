"""Dense two-phase revised simplex with Bland's rule.

Solves ``min c.x  s.t.  A x = b, x >= 0`` on the small dense systems this
package produces (transport subproblems and causality-constrained coupling
programs).  Bland's smallest-index pivoting rule is used in both phases,
which precludes cycling on the heavily degenerate transport polytopes at
the cost of some speed.

Every iteration refactorizes the basis against the original data instead
of updating a running tableau.  Naive tableau updates accumulate rounding
garbage through the tiny pivots these degenerate polytopes force, up to
the point of fake infeasibility; refactorization caps the error of each
iteration at one linear solve and makes the final solution independent of
the pivot history.  At the few-hundred-row scale this package targets,
the extra dense solves are cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, SolverFailure

#: Feasibility tolerance (phase-one residual, sign of basic values).
FEAS_TOL = 1e-9
#: Reduced-cost threshold below which a column may enter the basis.
COST_TOL = 1e-9
#: Smallest direction entry accepted in the ratio test.
PIVOT_TOL = 1e-9
#: Absolute slack when comparing ratio-test ties.
RATIO_TIE_TOL = 1e-12
#: Residual bound for the final solution against the original system.
SOLUTION_TOL = 1e-8


@dataclass(frozen=True)
class SimplexResult:
    x: np.ndarray
    value: float
    iterations: int


def _basic_values(a: np.ndarray, b: np.ndarray, basis: list[int]) -> np.ndarray:
    try:
        xb = np.linalg.solve(a[:, basis], b)
    except np.linalg.LinAlgError as exc:
        raise SolverFailure(f"singular basis: {exc}") from exc
    dust = (xb < 0.0) & (xb >= -FEAS_TOL)
    xb[dust] = 0.0
    if np.any(xb < 0.0):
        raise SolverFailure(f"basis lost feasibility (min value {xb.min()!r})")
    return xb


def _run_phase(
    a: np.ndarray,
    b: np.ndarray,
    cost: np.ndarray,
    basis: list[int],
    max_iter: int,
) -> int:
    """Bland-rule pivoting until no reduced cost is below -COST_TOL."""
    iterations = 0
    while True:
        basis_matrix = a[:, basis]
        xb = _basic_values(a, b, basis)
        try:
            duals = np.linalg.solve(basis_matrix.T, cost[basis])
        except np.linalg.LinAlgError as exc:
            raise SolverFailure(f"singular basis: {exc}") from exc
        reduced = cost - duals @ a
        reduced[basis] = 0.0
        candidates = np.nonzero(reduced < -COST_TOL)[0]
        if candidates.size == 0:
            return iterations
        entering = int(candidates[0])  # Bland: smallest eligible index
        direction = np.linalg.solve(basis_matrix, a[:, entering])
        rows = np.nonzero(direction > PIVOT_TOL)[0]
        if rows.size == 0:
            raise SolverFailure(
                "unbounded direction encountered; the feasible set of a "
                "transport-type program is bounded, so this indicates "
                "corrupted input"
            )
        ratios = xb[rows] / direction[rows]
        best = float(ratios.min())
        tied = rows[ratios <= best + RATIO_TIE_TOL]
        # Bland: among tied rows leave the basic variable of smallest index
        leaving = int(min(tied, key=lambda r: basis[r]))
        basis[leaving] = entering
        iterations += 1
        if iterations > max_iter:
            raise SolverFailure(f"iteration guard exceeded ({max_iter})")


def solve_eq_lp(
    objective,
    matrix,
    rhs,
    *,
    max_iter: int | None = None,
) -> SimplexResult:
    """Minimize ``objective . x`` subject to ``matrix @ x = rhs, x >= 0``.

    Raises :class:`Infeasible` when phase one cannot reach feasibility and
    :class:`SolverFailure` when the iteration guard trips or numerical
    integrity is lost.  Redundant equality rows are tolerated: they are
    detected after phase one and dropped.
    """
    c = np.asarray(objective, dtype=float).copy()
    a = np.atleast_2d(np.asarray(matrix, dtype=float)).copy()
    b = np.asarray(rhs, dtype=float).copy()
    m, n = a.shape
    if c.shape != (n,) or b.shape != (m,):
        raise SolverFailure(
            f"inconsistent LP dimensions: A{a.shape}, c{c.shape}, b{b.shape}"
        )
    if max_iter is None:
        max_iter = 2000 + 200 * (m + n)

    flip = b < 0.0
    a[flip] *= -1.0
    b[flip] *= -1.0

    # phase one over [A | I] with an artificial basis
    augmented = np.hstack([a, np.eye(m)])
    basis = list(range(n, n + m))
    phase1_cost = np.concatenate([np.zeros(n), np.ones(m)])
    iters = _run_phase(augmented, b, phase1_cost, basis, max_iter)
    xb = _basic_values(augmented, b, basis)
    residual = float(sum(v for var, v in zip(basis, xb) if var >= n))
    if residual > FEAS_TOL:
        raise Infeasible(f"phase-one residual {residual!r}")

    # replace leftover artificials by original columns where possible;
    # rows that admit no replacement are redundant and get dropped
    artificial_rows = [row for row, var in enumerate(basis) if var >= n]
    if artificial_rows:
        try:
            tableau = np.linalg.solve(augmented[:, basis], a)
        except np.linalg.LinAlgError as exc:
            raise SolverFailure(f"singular basis: {exc}") from exc
        keep = np.ones(m, dtype=bool)
        in_basis = set(basis)
        for row in artificial_rows:
            options = np.nonzero(np.abs(tableau[row]) > PIVOT_TOL)[0]
            options = [j for j in options if j not in in_basis]
            if options:
                in_basis.discard(basis[row])
                basis[row] = int(options[0])
                in_basis.add(basis[row])
                # refresh the drive-out tableau for the changed basis
                tableau = np.linalg.solve(augmented[:, basis], a)
            else:
                keep[row] = False
        a = a[keep]
        b = b[keep]
        basis = [var for var, k in zip(basis, keep) if k]
        m = a.shape[0]

    # phase two over the original columns
    iters += _run_phase(a, b, c, basis, max_iter)

    xb = _basic_values(a, b, basis)
    x = np.zeros(n)
    for var, val in zip(basis, xb):
        x[var] = float(val)
    gap = float(np.abs(a @ x - b).max()) if m else 0.0
    if gap > SOLUTION_TOL:
        raise SolverFailure(f"solution residual {gap!r} exceeds {SOLUTION_TOL}")
    return SimplexResult(x=x, value=float(c @ x), iterations=iters)
