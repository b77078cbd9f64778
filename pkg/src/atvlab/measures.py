"""Finite process laws as prefix trees of one-step kernels.

The law of an ``n``-step process on finite alphabets is stored as a prefix
tree: the root holds the distribution of the first coordinate, and every
node reached by a positive-probability prefix of length ``k`` holds the
conditional distribution of coordinate ``k+1`` given that prefix.
Zero-probability prefixes carry no node, and operations that would need a
kernel at an unreachable prefix treat its contribution as zero.

Conventions used throughout the package:

* Total variation carries the factor 2: ``tv(p, q) = sum(|p_i - q_i|)``
  with range ``[0, 2]``.  Half of this is the equally common
  "statistical distance" convention; divide by two when converting.
* Relative entropy uses the natural logarithm with the usual conventions
  ``0 * log(0 / q) = 0`` and ``p * log(p / 0) = +inf`` for ``p > 0``.
  Infinity is an ordinary ``math.inf``; there is no wrapper type.
* Paths and prefixes are plain tuples of symbol indices.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import BadNormalization, NegativeMass, ShapeMismatch

#: Ingestion tolerance: a joint table must sum to 1 within this bound.
NORMALIZATION_TOL = 1e-9
#: Tolerance for a single stage distribution summing to 1.
DIST_TOL = 1e-12

Path = tuple[int, ...]


@dataclass(frozen=True)
class Alphabet:
    """A finite symbol set, optionally labelled."""

    size: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValueError(f"alphabet size must be >= 1, got {self.size}")
        if self.labels is not None:
            labels = tuple(self.labels)
            object.__setattr__(self, "labels", labels)
            if len(labels) != self.size:
                raise ValueError(
                    f"{len(labels)} labels for alphabet of size {self.size}"
                )
            if len(set(labels)) != len(labels):
                raise ValueError("alphabet labels must be pairwise distinct")


def _as_weight_vector(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1:
        raise ShapeMismatch(f"weight vector must be 1-D, got shape {w.shape}")
    return w.copy()


@dataclass(frozen=True, eq=False)
class Dist:
    """A probability vector over one alphabet."""

    weights: np.ndarray
    alphabet: Alphabet | None = None

    def __post_init__(self) -> None:
        w = _as_weight_vector(self.weights)
        alphabet = self.alphabet or Alphabet(len(w))
        if len(w) != alphabet.size:
            raise ShapeMismatch(
                f"{len(w)} weights for alphabet of size {alphabet.size}"
            )
        if np.any(w < 0.0):
            raise NegativeMass(f"negative weight in {w!r}")
        total = float(w.sum())
        if abs(total - 1.0) > DIST_TOL:
            raise BadNormalization(f"weights sum to {total!r}, expected 1")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "alphabet", alphabet)

    @property
    def size(self) -> int:
        return self.alphabet.size


@dataclass(frozen=True, eq=False)
class SubProb:
    """A nonnegative sub-probability vector with cached total mass."""

    weights: np.ndarray
    alphabet: Alphabet | None = None
    mass: float = field(init=False)

    def __post_init__(self) -> None:
        w = _as_weight_vector(self.weights)
        alphabet = self.alphabet or Alphabet(len(w))
        if len(w) != alphabet.size:
            raise ShapeMismatch(
                f"{len(w)} weights for alphabet of size {alphabet.size}"
            )
        if np.any(w < 0.0):
            raise NegativeMass(f"negative weight in {w!r}")
        mass = float(w.sum())
        if mass > 1.0 + DIST_TOL:
            raise BadNormalization(f"sub-probability mass {mass!r} exceeds 1")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "mass", mass)


@dataclass(frozen=True, eq=False)
class KernelNode:
    """One prefix-tree node: a stage kernel plus its positive-symbol children.

    Treated as immutable after construction; the ``children`` dict is never
    mutated once the owning law exists.
    """

    dist: Dist
    children: dict[int, "KernelNode"] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class ProcessLaw:
    """A probability law on a product of finite alphabets.

    Stored as the full disintegration into stage kernels.  Immutable; all
    operations on laws are pure functions, so instances may be shared
    freely across threads.
    """

    alphabets: tuple[Alphabet, ...]
    root: KernelNode

    def __post_init__(self) -> None:
        alphabets = tuple(self.alphabets)
        object.__setattr__(self, "alphabets", alphabets)
        if not alphabets:
            raise ShapeMismatch("a process law needs at least one stage")
        total = self._validate_node(self.root, 0)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise BadNormalization(f"joint path probabilities sum to {total!r}")

    def _validate_node(self, node: KernelNode, depth: int) -> float:
        if node.dist.size != self.alphabets[depth].size:
            raise ShapeMismatch(
                f"kernel at depth {depth} has size {node.dist.size}, "
                f"alphabet has size {self.alphabets[depth].size}"
            )
        w = node.dist.weights
        positive = {i for i in range(len(w)) if w[i] > 0.0}
        if depth == self.n - 1:
            if node.children:
                raise ShapeMismatch("leaf-depth kernel must have no children")
            return float(w.sum())
        if set(node.children) != positive:
            raise ShapeMismatch(
                f"children at depth {depth} must exist exactly for the "
                f"positive symbols {sorted(positive)}"
            )
        return math.fsum(
            w[i] * self._validate_node(child, depth + 1)
            for i, child in sorted(node.children.items())
        )

    @property
    def n(self) -> int:
        """Number of stages (the horizon)."""
        return len(self.alphabets)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(a.size for a in self.alphabets)

    def check_path(self, path: Sequence[int], length: int | None = None) -> Path:
        """Validate symbol indices; return the path as a tuple."""
        p = tuple(int(s) for s in path)
        if length is not None and len(p) != length:
            raise ShapeMismatch(f"path {p} has length {len(p)}, expected {length}")
        if len(p) > self.n:
            raise ShapeMismatch(f"path {p} longer than horizon {self.n}")
        for depth, s in enumerate(p):
            if not 0 <= s < self.alphabets[depth].size:
                raise ShapeMismatch(
                    f"symbol {s} out of range for stage {depth} "
                    f"(size {self.alphabets[depth].size})"
                )
        return p

    def node(self, prefix: Sequence[int]) -> KernelNode | None:
        """Tree node at ``prefix``, or None if the prefix has probability 0."""
        p = self.check_path(prefix)
        if len(p) == self.n:
            raise ShapeMismatch("full paths carry no kernel")
        node = self.root
        for s in p:
            child = node.children.get(s)
            if child is None:
                return None
            node = child
        return node

    def kernel(self, prefix: Sequence[int]) -> Dist | None:
        """Conditional next-coordinate law given ``prefix`` (None if unreachable)."""
        node = self.node(prefix)
        return None if node is None else node.dist

    def prefix_prob(self, prefix: Sequence[int]) -> float:
        """Probability of the cylinder set of paths starting with ``prefix``."""
        p = self.check_path(prefix)
        node = self.root
        mass = 1.0
        for s in p:
            mass *= float(node.dist.weights[s])
            if mass == 0.0:
                return 0.0
            child = node.children.get(s)
            if child is None:
                # positive kernel weight at leaf depth: prefix was full length
                return mass
            node = child
        return mass

    def prefixes(self, depth: int) -> Iterator[tuple[Path, float]]:
        """All positive-probability prefixes of a given length, with masses."""
        if not 0 <= depth <= self.n:
            raise ShapeMismatch(f"depth {depth} outside [0, {self.n}]")

        def rec(node: KernelNode | None, prefix: Path, mass: float):
            if len(prefix) == depth:
                yield prefix, mass
                return
            w = node.dist.weights
            for s in sorted(node.children) if node.children else (
                i for i in range(len(w)) if w[i] > 0.0
            ):
                yield from rec(node.children.get(s), prefix + (s,), mass * float(w[s]))

        yield from rec(self.root, (), 1.0)

    def support(self) -> Iterator[tuple[Path, float]]:
        """All positive-probability full paths with their probabilities."""
        yield from self.prefixes(self.n)

    def joint_table(self) -> np.ndarray:
        """Dense joint table of shape ``sizes`` induced by the kernels."""
        table = np.zeros(self.sizes)
        for path, prob in self.support():
            table[path] = prob
        return table


def _check_same_shape(mu: ProcessLaw, nu: ProcessLaw) -> None:
    if mu.sizes != nu.sizes:
        raise ShapeMismatch(
            f"laws live on different shapes: {mu.sizes} vs {nu.sizes}"
        )


def _as_alphabets(alphabets: Sequence[Alphabet | int]) -> tuple[Alphabet, ...]:
    out = []
    for a in alphabets:
        out.append(a if isinstance(a, Alphabet) else Alphabet(int(a)))
    return tuple(out)


def _dense_table(table, alphabets: tuple[Alphabet, ...]) -> np.ndarray:
    sizes = tuple(a.size for a in alphabets)
    n = len(sizes)
    if isinstance(table, Mapping):
        dense = np.zeros(sizes)
        for path, prob in table.items():
            p = tuple(int(s) for s in path) if not isinstance(path, int) else (path,)
            if len(p) != n:
                raise ShapeMismatch(f"path {p} has length {len(p)}, expected {n}")
            for depth, s in enumerate(p):
                if not 0 <= s < sizes[depth]:
                    raise ShapeMismatch(
                        f"symbol {s} out of range for stage {depth}"
                    )
            dense[p] = float(prob)
        return dense
    arr = np.asarray(table, dtype=float)
    if arr.shape != sizes:
        raise ShapeMismatch(f"table shape {arr.shape} does not match {sizes}")
    return arr.copy()


def from_joint(
    table,
    alphabets: Sequence[Alphabet | int],
    *,
    renormalize: bool = False,
) -> ProcessLaw:
    """Disintegrate a joint table into a prefix tree of stage kernels.

    ``table`` is either a dense array of shape ``sizes`` or a mapping from
    full paths to probabilities.  The result reproduces every input path
    probability as the product of its stage-kernel weights.

    With ``renormalize=True`` a table with positive total mass is scaled
    to sum to 1 instead of being rejected.
    """
    alphas = _as_alphabets(alphabets)
    dense = _dense_table(table, alphas)
    if np.any(dense < 0.0):
        raise NegativeMass("joint table contains negative probabilities")
    total = float(dense.sum())
    if abs(total - 1.0) > NORMALIZATION_TOL:
        if renormalize and total > 0.0:
            dense = dense / total
        else:
            raise BadNormalization(f"joint table sums to {total!r}, expected 1")
    n = len(alphas)

    def build(block: np.ndarray, depth: int) -> KernelNode:
        stage_mass = block.reshape(block.shape[0], -1).sum(axis=1)
        prefix_mass = stage_mass.sum()
        dist = Dist(stage_mass / prefix_mass, alphas[depth])
        children: dict[int, KernelNode] = {}
        if depth + 1 < n:
            for s in range(block.shape[0]):
                if stage_mass[s] > 0.0:
                    children[s] = build(block[s], depth + 1)
        return KernelNode(dist, children)

    return ProcessLaw(alphas, build(dense, 0))


def law_from_kernels(
    alphabets: Sequence[Alphabet | int],
    kernel_fn: Callable[[Path], object],
) -> ProcessLaw:
    """Build a law from an explicit kernel map ``prefix -> weight vector``.

    ``kernel_fn`` is called once per positive-probability prefix, in
    depth-first lexicographic order, so stochastic kernel factories are
    reproducible for a fixed RNG state.
    """
    alphas = _as_alphabets(alphabets)
    n = len(alphas)

    def build(prefix: Path) -> KernelNode:
        depth = len(prefix)
        dist = Dist(_as_weight_vector(kernel_fn(prefix)), alphas[depth])
        children: dict[int, KernelNode] = {}
        if depth + 1 < n:
            for s in range(dist.size):
                if dist.weights[s] > 0.0:
                    children[s] = build(prefix + (s,))
        return KernelNode(dist, children)

    return ProcessLaw(alphas, build(()))


def product_law(stage_dists: Sequence[Dist]) -> ProcessLaw:
    """Law of independent coordinates with the given stage distributions."""
    dists = list(stage_dists)
    alphas = tuple(d.alphabet for d in dists)
    return law_from_kernels(alphas, lambda prefix: dists[len(prefix)].weights)


def joint_prob(law: ProcessLaw, path: Sequence[int]) -> float:
    """Joint probability of one full path (0 if it leaves the tree)."""
    p = law.check_path(path, length=law.n)
    node = law.root
    mass = 1.0
    for depth, s in enumerate(p):
        mass *= float(node.dist.weights[s])
        if mass == 0.0:
            return 0.0
        if depth + 1 < law.n:
            node = node.children[s]
    return mass


def tv(p: Dist, q: Dist) -> float:
    """Total variation ``sum(|p_i - q_i|)`` in [0, 2] (factor-2 convention)."""
    if p.size != q.size:
        raise ShapeMismatch(f"distributions of sizes {p.size} and {q.size}")
    return float(np.abs(p.weights - q.weights).sum())


def meet(p: Dist, q: Dist) -> SubProb:
    """Componentwise minimum of two probability vectors.

    Its mass equals ``1 - tv(p, q) / 2``.
    """
    if p.size != q.size:
        raise ShapeMismatch(f"distributions of sizes {p.size} and {q.size}")
    return SubProb(np.minimum(p.weights, q.weights), p.alphabet)


def _kernel_kl(p: np.ndarray, q: np.ndarray) -> float:
    """Relative entropy of one stage kernel; +inf if p charges a q-null symbol."""
    terms = []
    for pi, qi in zip(p.tolist(), q.tolist()):
        if pi == 0.0:
            continue
        if qi == 0.0:
            return math.inf
        terms.append(pi * math.log(pi / qi))
    return math.fsum(terms)


def kl(mu: ProcessLaw, nu: ProcessLaw) -> float:
    """Relative entropy of ``mu`` w.r.t. ``nu``, summed over full paths.

    Returns ``math.inf`` when some path has positive mu-probability but
    zero nu-probability.
    """
    _check_same_shape(mu, nu)
    terms: list[float] = []

    def walk(a: KernelNode, b: KernelNode, pm: float, pn: float, depth: int) -> bool:
        wa, wb = a.dist.weights, b.dist.weights
        for s in range(len(wa)):
            ws = float(wa[s])
            if ws == 0.0:
                continue
            vs = float(wb[s])
            if vs == 0.0:
                return False
            m, v = pm * ws, pn * vs
            if depth + 1 == mu.n:
                terms.append(m * math.log(m / v))
            elif not walk(a.children[s], b.children[s], m, v, depth + 1):
                return False
        return True

    if not walk(mu.root, nu.root, 1.0, 1.0, 0):
        return math.inf
    return math.fsum(terms)


def kl_chain(mu: ProcessLaw, nu: ProcessLaw) -> float:
    """Relative entropy computed stagewise via the entropy chain rule.

    Sums, over every positive-probability prefix of ``mu``, the prefix
    probability times the relative entropy of the one-step kernels of the
    two laws at that prefix.  Agrees with :func:`kl` (including +inf when
    absolute continuity fails).
    """
    _check_same_shape(mu, nu)
    terms: list[float] = []

    def walk(a: KernelNode, b: KernelNode, mass: float, depth: int) -> bool:
        h = _kernel_kl(a.dist.weights, b.dist.weights)
        if math.isinf(h):
            return False
        terms.append(mass * h)
        if depth + 1 == mu.n:
            return True
        wa = a.dist.weights
        for s, child in sorted(a.children.items()):
            # finite h guarantees the nu-child exists wherever mu charges s
            if not walk(child, b.children[s], mass * float(wa[s]), depth + 1):
                return False
        return True

    if not walk(mu.root, nu.root, 1.0, 0):
        return math.inf
    return math.fsum(terms)


def path_tv(mu: ProcessLaw, nu: ProcessLaw) -> float:
    """Total variation between the two laws seen as path distributions."""
    _check_same_shape(mu, nu)
    return float(np.abs(mu.joint_table() - nu.joint_table()).sum())
