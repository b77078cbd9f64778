"""Adapted total variation toolkit for finite-alphabet process laws.

Represents laws of discrete-time processes as prefix trees of stage
kernels, computes total variation, relative entropy, and adapted total
variation by three mutually independent algorithms, constructs optimal
bicausal couplings, and verifies Pinsker-type inequalities including
their tightness on the Bernoulli product family.

Total variation uses the factor-2 convention throughout: ``tv`` and
``atv`` take values in [0, 2].
"""

from .atv import (
    AtvBreakdown,
    Coupling,
    atv_dp,
    atv_recursive,
    coupling_cost,
    optimal_bicausal_coupling,
)
from .bicausal_lp import (
    BicausalReport,
    LpProblem,
    atv_lp,
    build_bicausal_lp,
    is_bicausal,
)
from .ensembles import EnsembleSpec, bernoulli_pair, generate_ensemble
from .errors import (
    AtvLabError,
    BadEpsilon,
    BadNormalization,
    BadSpec,
    CapExceeded,
    Infeasible,
    NegativeMass,
    ShapeMismatch,
    SolverFailure,
)
from .inequalities import (
    InequalityCheck,
    SandwichCheck,
    TightnessRow,
    check_adapted_pinsker,
    check_classical_pinsker,
    check_sandwich,
    closed_form_atv,
    closed_form_kl,
    geometric_grid,
    tightness_experiment,
)
from .measures import (
    Alphabet,
    Dist,
    KernelNode,
    ProcessLaw,
    SubProb,
    from_joint,
    joint_prob,
    kl,
    kl_chain,
    law_from_kernels,
    meet,
    path_tv,
    product_law,
    tv,
)
from .transport import solve_discrete_ot

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "AtvBreakdown",
    "AtvLabError",
    "BadEpsilon",
    "BadNormalization",
    "BadSpec",
    "BicausalReport",
    "CapExceeded",
    "Coupling",
    "Dist",
    "EnsembleSpec",
    "InequalityCheck",
    "Infeasible",
    "KernelNode",
    "LpProblem",
    "NegativeMass",
    "ProcessLaw",
    "SandwichCheck",
    "ShapeMismatch",
    "SolverFailure",
    "SubProb",
    "TightnessRow",
    "atv_dp",
    "atv_lp",
    "atv_recursive",
    "bernoulli_pair",
    "build_bicausal_lp",
    "check_adapted_pinsker",
    "check_classical_pinsker",
    "check_sandwich",
    "closed_form_atv",
    "closed_form_kl",
    "coupling_cost",
    "from_joint",
    "generate_ensemble",
    "geometric_grid",
    "is_bicausal",
    "joint_prob",
    "kl",
    "kl_chain",
    "law_from_kernels",
    "meet",
    "optimal_bicausal_coupling",
    "path_tv",
    "product_law",
    "solve_discrete_ot",
    "tightness_experiment",
    "tv",
]
