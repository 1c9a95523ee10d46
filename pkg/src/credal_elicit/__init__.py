"""Gamma-maximin property elicitation over finitely generated credal sets."""

__version__ = "0.1.0"

from .bayes import (
    BayesPairResult,
    InclusionReport,
    WorstCaseResult,
    bayes_pair,
    check_inclusion,
    duality_gap,
    worst_case_distribution,
)
from .core import (
    CredalError,
    CredalSet,
    Distribution,
    DomainError,
    InfeasibleError,
    IntervalBounds,
    OutcomeSpace,
    SpaceMismatchError,
    bounds_to_generators,
    convex_combine_sets,
    expectation,
    mix,
    union_sets,
)
from .losses import (
    LossSpec,
    PropertyValueSet,
    RiskOverflowError,
    bayes_risk,
    loss_subgradient,
    loss_value,
    precise_property,
)
from .solver import (
    MinimaxResult,
    PropertyDomain,
    SolverError,
    SolverParams,
    elicit,
    elicit_grid_oracle,
    upper_risk,
)
