"""Inequality checks and the tightness experiment.

The central bound says the adapted total variation of two n-stage laws is
at most ``sqrt(n) * sqrt(2 * kl)``; with n = 1 this is the classical
Pinsker inequality.  Checks with infinite relative entropy pass
vacuously.  The tightness experiment evaluates the bound on the Bernoulli
product family, where both sides have closed forms and the normalized
ratio ``atv^2 / (2 n kl)`` climbs to 1 as the bias vanishes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from collections.abc import Iterable, Sequence

from .atv import atv_recursive
from .ensembles import _check_eps, bernoulli_pair
from .errors import BadSpec
from .measures import ProcessLaw, kl, path_tv

#: Slack allowed when asserting an inequality numerically.
CHECK_TOL = 1e-9
#: Relative slack in the tightness bound flag.
BOUND_TOL = 1e-9


@dataclass(frozen=True)
class InequalityCheck:
    """One evaluated inequality ``lhs <= rhs`` with its numerical slack."""

    passed: bool
    lhs: float
    rhs: float
    slack: float


@dataclass(frozen=True)
class SandwichCheck:
    """The two-sided bound ``tv <= atv <= (2^n - 1) tv``."""

    passed: bool
    tv: float
    atv: float
    upper: float
    lower_slack: float
    upper_slack: float


def check_classical_pinsker(
    mu: ProcessLaw, nu: ProcessLaw, *, tol: float = CHECK_TOL
) -> InequalityCheck:
    """Path-level total variation against ``sqrt(2 kl)``."""
    lhs = path_tv(mu, nu)
    h = kl(mu, nu)
    rhs = math.inf if math.isinf(h) else math.sqrt(2.0 * h)
    return InequalityCheck(lhs <= rhs + tol, lhs, rhs, rhs - lhs)


def check_adapted_pinsker(
    mu: ProcessLaw, nu: ProcessLaw, *, tol: float = CHECK_TOL
) -> InequalityCheck:
    """Adapted total variation against ``sqrt(n) * sqrt(2 kl)``."""
    lhs = atv_recursive(mu, nu).total
    h = kl(mu, nu)
    rhs = math.inf if math.isinf(h) else math.sqrt(mu.n) * math.sqrt(2.0 * h)
    return InequalityCheck(lhs <= rhs + tol, lhs, rhs, rhs - lhs)


def check_sandwich(
    mu: ProcessLaw, nu: ProcessLaw, *, tol: float = CHECK_TOL
) -> SandwichCheck:
    """Two-sided comparison of adapted and plain total variation."""
    t = path_tv(mu, nu)
    a = atv_recursive(mu, nu).total
    upper = (2.0**mu.n - 1.0) * t
    return SandwichCheck(
        passed=(t - tol <= a <= upper + tol),
        tv=t,
        atv=a,
        upper=upper,
        lower_slack=a - t,
        upper_slack=upper - a,
    )


@dataclass(frozen=True)
class TightnessRow:
    """One grid point of the tightness experiment.

    ``ratio`` is normalized so the bound reads ``ratio <= 1``; the
    asymptotic value as eps drops to 0 is exactly 1 for every horizon.
    """

    n: int
    eps: float
    atv: float
    atv_closed: float
    kl: float
    kl_closed: float
    ratio: float
    bound_ok: bool

    def __post_init__(self) -> None:
        _check_eps(self.eps)


def closed_form_atv(n: int, eps: float) -> float:
    """``2 - 2 (1 - eps)^n`` in a cancellation-free form."""
    return -2.0 * math.expm1(n * math.log1p(-eps))


def closed_form_kl(n: int, eps: float) -> float:
    """``n * [(1/2+eps) log(1+2 eps) + (1/2-eps) log(1-2 eps)]``."""
    return n * (
        (0.5 + eps) * math.log1p(2.0 * eps) + (0.5 - eps) * math.log1p(-2.0 * eps)
    )


def geometric_grid(hi: float = 0.25, lo: float = 1e-5, count: int = 12) -> list[float]:
    """Geometric grid from ``hi`` down to ``lo`` (inclusive)."""
    if count < 1:
        raise BadSpec(f"grid needs at least one point, got {count}")
    if not 0.0 < lo <= hi:
        raise BadSpec(f"need 0 < lo <= hi, got lo={lo!r} hi={hi!r}")
    if count == 1:
        return [hi]
    return [hi * (lo / hi) ** (i / (count - 1)) for i in range(count)]


DEFAULT_N_LIST = (1, 2, 3, 4, 6)


def tightness_experiment(
    n_list: Sequence[int] = DEFAULT_N_LIST,
    eps_grid: Iterable[float] | None = None,
) -> list[TightnessRow]:
    """Evaluate computed and closed-form quantities on the Bernoulli family.

    Rows are sorted by ``(n, eps)`` ascending.  For each row the computed
    adapted total variation and relative entropy match their closed forms
    to within 1e-12, and the normalized ratio increases toward 1 as eps
    decreases.
    """
    grid = list(eps_grid) if eps_grid is not None else geometric_grid()
    for eps in grid:
        _check_eps(eps)
    rows = []
    for n in n_list:
        for eps in grid:
            mu, nu = bernoulli_pair(n, eps)
            atv = atv_recursive(mu, nu).total
            h = kl(mu, nu)
            ratio = atv * atv / (2.0 * n * h)
            rows.append(
                TightnessRow(
                    n=n,
                    eps=eps,
                    atv=atv,
                    atv_closed=closed_form_atv(n, eps),
                    kl=h,
                    kl_closed=closed_form_kl(n, eps),
                    ratio=ratio,
                    bound_ok=atv * atv <= 2.0 * n * h * (1.0 + BOUND_TOL),
                )
            )
    rows.sort(key=lambda r: (r.n, r.eps))
    return rows
