# Package initialization for spde module

# Import the numerical core for easier access
from .errors import (
    LabError,
    GuardError,
    NonSymmetricError,
    SingularStepError,
    ConvergenceError,
    ConfigurationError
)
from .grid_norms import Grid, build_grid, discrete_norm, spacetime_norm, terminal_norm
from .noise_tree import (
    NoiseTree,
    AdaptedField,
    TerminalVariable,
    build_tree,
    conditional_expectation,
    ito_integral,
    martingale_representation
)
from .coefficients import CoefficientSet, ConditionReport, certify, get_preset, get_perturbation
from .operators import OperatorStack
from .forward_solver import ForwardProblem, ForwardSolver, solve_forward, solve_forward_path
from .backward_solver import (
    BackwardProblem,
    BackwardSolution,
    BackwardSolver,
    solve_backward_adjoint,
    solve_backward_dp,
    solve_backward_neumann,
    solve_backward_path,
    estimate_P_star_norm,
    k_shift_roundtrip
)

# Package metadata
__all__ = [
    'LabError',
    'GuardError',
    'NonSymmetricError',
    'SingularStepError',
    'ConvergenceError',
    'ConfigurationError',
    'Grid',
    'build_grid',
    'discrete_norm',
    'spacetime_norm',
    'terminal_norm',
    'NoiseTree',
    'AdaptedField',
    'TerminalVariable',
    'build_tree',
    'conditional_expectation',
    'ito_integral',
    'martingale_representation',
    'CoefficientSet',
    'ConditionReport',
    'certify',
    'get_preset',
    'get_perturbation',
    'OperatorStack',
    'ForwardProblem',
    'ForwardSolver',
    'solve_forward',
    'solve_forward_path',
    'BackwardProblem',
    'BackwardSolution',
    'BackwardSolver',
    'solve_backward_adjoint',
    'solve_backward_dp',
    'solve_backward_neumann',
    'solve_backward_path',
    'estimate_P_star_norm',
    'k_shift_roundtrip'
]

__version__ = '0.1.0'
