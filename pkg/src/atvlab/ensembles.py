"""Reproducible generators for pairs of process laws.

Random families draw every kernel from a Dirichlet sampler with a hard
floor of 1e-6 on each weight, so relative entropy is finite in both
directions and the inequality sweeps are never vacuous.  All families are
deterministic functions of the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadEpsilon, BadSpec
from .measures import Alphabet, Dist, ProcessLaw, law_from_kernels, product_law

FAMILIES = ("uniform-random", "markov", "product", "bernoulli-eps")

#: Hard floor on randomly drawn kernel weights (keeps kl finite).
KERNEL_FLOOR = 1e-6


@dataclass(frozen=True)
class EnsembleSpec:
    """Parameters of one generated ensemble of law pairs."""

    n: int
    sizes: tuple[int, ...] | int
    family: str
    count: int
    seed: int
    eps: float | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise BadSpec(f"horizon must be >= 1, got {self.n}")
        sizes = self.sizes
        if isinstance(sizes, int):
            sizes = (sizes,) * self.n
        else:
            sizes = tuple(int(s) for s in sizes)
        object.__setattr__(self, "sizes", sizes)
        if len(sizes) != self.n:
            raise BadSpec(f"{len(sizes)} sizes for horizon {self.n}")
        if any(s < 1 for s in sizes):
            raise BadSpec(f"alphabet sizes must be >= 1, got {sizes}")
        if self.count < 1:
            raise BadSpec(f"count must be >= 1, got {self.count}")
        if self.family not in FAMILIES:
            raise BadSpec(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.family == "bernoulli-eps":
            if any(s != 2 for s in sizes):
                raise BadSpec("bernoulli-eps needs binary alphabets")
            if self.eps is None:
                raise BadSpec("bernoulli-eps needs an eps parameter")
            _check_eps(self.eps)


def _check_eps(eps: float) -> None:
    if not 0.0 < eps < 0.5:
        raise BadEpsilon(f"eps must lie in (0, 1/2), got {eps!r}")


def bernoulli_pair(n: int, eps: float) -> tuple[ProcessLaw, ProcessLaw]:
    """The product pair with stage laws (1/2+eps, 1/2-eps) vs (1/2, 1/2).

    This is the family on which the adapted Pinsker inequality is tight:
    its adapted total variation is ``2 - 2(1-eps)^n`` in closed form.
    """
    _check_eps(eps)
    if n < 1:
        raise BadSpec(f"horizon must be >= 1, got {n}")
    alpha = Alphabet(2)
    p0 = 0.5 + eps
    biased = Dist(np.array([p0, 1.0 - p0]), alpha)
    fair = Dist(np.array([0.5, 0.5]), alpha)
    return product_law([biased] * n), product_law([fair] * n)


def _simplex_sample(rng: np.random.Generator, size: int) -> np.ndarray:
    v = rng.dirichlet(np.ones(size))
    return KERNEL_FLOOR + (1.0 - size * KERNEL_FLOOR) * v


def _random_law(rng: np.random.Generator, sizes: tuple[int, ...], family: str) -> ProcessLaw:
    n = len(sizes)
    if family == "uniform-random":
        # draw in depth-first prefix order; reproducible for a fixed rng state
        return law_from_kernels(sizes, lambda prefix: _simplex_sample(rng, sizes[len(prefix)]))
    if family == "product":
        stage = [Dist(_simplex_sample(rng, s)) for s in sizes]
        return product_law(stage)
    if family == "markov":
        init = _simplex_sample(rng, sizes[0])
        transitions = [
            np.stack([_simplex_sample(rng, sizes[k]) for _ in range(sizes[k - 1])])
            for k in range(1, n)
        ]

        def kernel(prefix):
            if not prefix:
                return init
            return transitions[len(prefix) - 1][prefix[-1]]

        return law_from_kernels(sizes, kernel)
    raise BadSpec(f"family {family!r} has no random sampler")


def generate_ensemble(spec: EnsembleSpec) -> list[tuple[ProcessLaw, ProcessLaw]]:
    """Generate ``spec.count`` law pairs, deterministically in the seed."""
    if spec.family == "bernoulli-eps":
        pair = bernoulli_pair(spec.n, spec.eps)
        return [pair] * spec.count
    rng = np.random.default_rng(spec.seed)
    out = []
    for _ in range(spec.count):
        mu = _random_law(rng, spec.sizes, spec.family)
        nu = _random_law(rng, spec.sizes, spec.family)
        out.append((mu, nu))
    return out
