"""Semantic exception hierarchy shared across the toolkit."""


class AtvLabError(Exception):
    """Base class for all toolkit errors."""


class ShapeMismatch(AtvLabError):
    """Operands live on different alphabets, horizons, or index ranges."""


class NegativeMass(AtvLabError):
    """A weight that must be nonnegative is negative."""


class BadNormalization(AtvLabError):
    """A probability vector or table does not sum to one within tolerance."""


class CapExceeded(AtvLabError):
    """A problem instance exceeds the configured size cap."""


class SolverFailure(AtvLabError):
    """The LP solver exceeded its iteration guard or lost feasibility."""


class Infeasible(AtvLabError):
    """An LP that must be feasible is not; signals a constraint-builder bug."""


class BadSpec(AtvLabError):
    """An ensemble specification is invalid."""


class BadEpsilon(AtvLabError):
    """A Bernoulli bias parameter lies outside (0, 1/2)."""
