"""Stationary discs attached to model quadrics: quadratic matrix equations,
explicit lifts, minimality tests and the 1-jet Jacobian criterion."""

from .discs import (
    build_lift,
    da_nondegenerate,
    defective,
    eval_boundary,
    orbit_space,
    stationary_minimal,
    verify_lift,
)
from .equations import contraction_guard, dX_dRe_a, phi_inverse_series, solve_X, stein_K
from .exceptions import (
    GenerationError,
    InvalidInputError,
    IterationLimitError,
    PreconditionError,
    RegimeError,
    SingularOperatorError,
    StatdiscError,
    StepTooLargeError,
)
from .jets import jacobian_block_analytic, jacobian_block_fd, jet_map, local_diffeo_verdict
from .linalg import Definiteness, definiteness, numerical_rank, real_span_rank
from .quadric import QuadricModel

__version__ = "0.1.0"
