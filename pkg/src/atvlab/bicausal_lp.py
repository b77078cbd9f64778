"""Adapted total variation as an explicit linear program.

The variables are joint probabilities on full path pairs.  Marginal rows
pin the two path distributions; causality rows linearize the requirement
that, conditionally on the first k coordinates of one process, the other
process's first k coordinates are independent of the next coordinate:

    mu(a) * pi(X_{1:k+1} = a+s, Y_{1:k} = b)
        = mu(a+s) * pi(X_{1:k} = a, Y_{1:k} = b)

for every depth k < n, every x-prefix ``a`` with positive mass, every
y-prefix ``b`` and next symbol ``s`` -- plus the mirror rows for the
second process.  One-step-ahead events suffice on finite product spaces:
iterating the constraint over depths recovers conditional independence
from the whole future, so the encoding generates full bicausality.

This route shares nothing with the recursive and backward-induction
algorithms except the simplex core, which makes three-way agreement a
meaningful consistency check.  Rows at zero-probability x-prefixes are
omitted (both sides vanish identically).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .atv import MISMATCH_COST, Coupling
from .errors import CapExceeded
from .measures import Path, ProcessLaw, _check_same_shape
from .simplex import solve_eq_lp

#: Default cap on the number of LP variables (path pairs).
DEFAULT_VAR_CAP = 4096
#: Default tolerance for the bicausality checker.
BICAUSAL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class LpProblem:
    """Equality-form LP ``min objective . x`` over coupling coordinates."""

    objective: np.ndarray
    matrix: np.ndarray
    rhs: np.ndarray
    x_paths: tuple[Path, ...]
    y_paths: tuple[Path, ...]
    row_kinds: tuple[str, ...]

    @property
    def var_count(self) -> int:
        return len(self.objective)

    def coordinates(self, pi: Coupling) -> np.ndarray:
        """Flatten a coupling's table into this problem's variable order."""
        x_index = {p: i for i, p in enumerate(self.x_paths)}
        y_index = {p: i for i, p in enumerate(self.y_paths)}
        coords = np.zeros(self.var_count)
        ny = len(self.y_paths)
        for (x, y), w in pi.table.items():
            coords[x_index[x] * ny + y_index[y]] += w
        return coords

    def residuals(self, coords: np.ndarray) -> np.ndarray:
        return np.abs(self.matrix @ coords - self.rhs)


def build_bicausal_lp(
    mu: ProcessLaw,
    nu: ProcessLaw,
    *,
    include_causality: bool = True,
    cap: int = DEFAULT_VAR_CAP,
) -> LpProblem:
    """Assemble the coupling LP; without causality rows it computes plain TV."""
    _check_same_shape(mu, nu)
    sizes = mu.sizes
    n = mu.n
    npaths = int(np.prod(sizes))
    nvars = npaths * npaths
    if nvars > cap:
        raise CapExceeded(f"{nvars} variables exceed the cap {cap}")

    paths = tuple(product(*(range(s) for s in sizes)))
    # tail products: block(prefix of length k) spans strides[k] consecutive paths
    strides = [1] * (n + 1)
    for k in range(n - 1, -1, -1):
        strides[k] = strides[k + 1] * sizes[k]

    def block(prefix: Path) -> slice:
        start = 0
        for depth, s in enumerate(prefix):
            start += s * strides[depth + 1]
        return slice(start, start + strides[len(prefix)])

    mu_joint = mu.joint_table().ravel()
    nu_joint = nu.joint_table().ravel()

    rows: list[np.ndarray] = []
    rhs: list[float] = []
    kinds: list[str] = []

    def add_row(row2d: np.ndarray, value: float, kind: str) -> None:
        rows.append(row2d.ravel())
        rhs.append(value)
        kinds.append(kind)

    for ix in range(npaths):
        row = np.zeros((npaths, npaths))
        row[ix, :] = 1.0
        add_row(row, float(mu_joint[ix]), "marginal-mu")
    for iy in range(npaths):
        row = np.zeros((npaths, npaths))
        row[:, iy] = 1.0
        add_row(row, float(nu_joint[iy]), "marginal-nu")

    if include_causality:
        for k in range(1, n):
            y_prefixes = list(product(*(range(s) for s in sizes[:k])))
            for a, mass_a in mu.prefixes(k):
                for s in range(sizes[k]):
                    mass_as = mu.prefix_prob(a + (s,))
                    for b in y_prefixes:
                        row = np.zeros((npaths, npaths))
                        row[block(a + (s,)), block(b)] += mass_a
                        row[block(a), block(b)] -= mass_as
                        add_row(row, 0.0, "causal-mu")
            x_prefixes = list(product(*(range(s) for s in sizes[:k])))
            for b, mass_b in nu.prefixes(k):
                for t in range(sizes[k]):
                    mass_bt = nu.prefix_prob(b + (t,))
                    for a in x_prefixes:
                        row = np.zeros((npaths, npaths))
                        row[block(a), block(b + (t,))] += mass_b
                        row[block(a), block(b)] -= mass_bt
                        add_row(row, 0.0, "causal-nu")

    objective = np.empty(nvars)
    for i, x in enumerate(paths):
        for j, y in enumerate(paths):
            objective[i * npaths + j] = 0.0 if x == y else MISMATCH_COST

    return LpProblem(
        objective=objective,
        matrix=np.array(rows),
        rhs=np.array(rhs),
        x_paths=paths,
        y_paths=paths,
        row_kinds=tuple(kinds),
    )


def atv_lp(mu: ProcessLaw, nu: ProcessLaw, *, cap: int = DEFAULT_VAR_CAP) -> float:
    """Optimal value of the causality-constrained coupling LP.

    ``Infeasible`` from the solver signals a constraint-builder bug: the
    stagewise product coupling is always feasible.
    """
    problem = build_bicausal_lp(mu, nu, cap=cap)
    return solve_eq_lp(problem.objective, problem.matrix, problem.rhs).value


@dataclass(frozen=True)
class BicausalReport:
    """Outcome of the bicausality check; truthy iff the coupling passed."""

    ok: bool
    max_violation: float
    worst: str | None

    def __bool__(self) -> bool:
        return self.ok


def is_bicausal(pi: Coupling, tol: float = BICAUSAL_TOL) -> BicausalReport:
    """Check every linearized causality equality of a coupling.

    Assumes the coupling's marginals already match its laws within
    ``tol`` (enforced at construction).  Returns the worst-violated
    constraint for diagnosis.
    """
    mu, nu = pi.mu_law, pi.nu_law
    n = pi.n

    # prefix-pair aggregates of the coupling table
    same: list[dict[tuple[Path, Path], float]] = [dict() for _ in range(n)]
    ahead_x: list[dict[tuple[Path, Path], float]] = [dict() for _ in range(n)]
    ahead_y: list[dict[tuple[Path, Path], float]] = [dict() for _ in range(n)]
    for (x, y), w in pi.table.items():
        for k in range(1, n):
            same_key = (x[:k], y[:k])
            same[k][same_key] = same[k].get(same_key, 0.0) + w
            kx = (x[: k + 1], y[:k])
            ahead_x[k][kx] = ahead_x[k].get(kx, 0.0) + w
            ky = (x[:k], y[: k + 1])
            ahead_y[k][ky] = ahead_y[k].get(ky, 0.0) + w

    worst = 0.0
    worst_desc: str | None = None

    def consider(residual: float, desc: str) -> None:
        nonlocal worst, worst_desc
        if residual > worst:
            worst, worst_desc = residual, desc

    for k in range(1, n):
        nu_prefixes = list(nu.prefixes(k))
        mu_prefixes = list(mu.prefixes(k))
        for a, mass_a in mu_prefixes:
            for s in range(mu.sizes[k]):
                mass_as = mu.prefix_prob(a + (s,))
                for b, _ in nu_prefixes:
                    lhs = mass_a * ahead_x[k].get((a + (s,), b), 0.0)
                    rhs = mass_as * same[k].get((a, b), 0.0)
                    consider(
                        abs(lhs - rhs),
                        f"x-causality depth {k}: a={a} s={s} b={b}",
                    )
        for b, mass_b in nu_prefixes:
            for t in range(nu.sizes[k]):
                mass_bt = nu.prefix_prob(b + (t,))
                for a, _ in mu_prefixes:
                    lhs = mass_b * ahead_y[k].get((a, b + (t,)), 0.0)
                    rhs = mass_bt * same[k].get((a, b), 0.0)
                    consider(
                        abs(lhs - rhs),
                        f"y-causality depth {k}: b={b} t={t} a={a}",
                    )

    return BicausalReport(ok=worst <= tol, max_violation=worst, worst=worst_desc)
