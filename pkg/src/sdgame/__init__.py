"""Linear-quadratic two-player stochastic differential games.

Solvers for closed-loop Nash equilibria, closed-loop representations of
open-loop equilibria, zero-sum saddle points and single-player problems,
with Monte Carlo and deterministic verification tools.
"""

from __future__ import annotations

from .bsde import (
    OffsetSolution,
    solve_closed_loop_offsets,
    solve_feedback_offsets,
    solve_open_rep_offsets,
    solve_slq_offsets,
    solve_zero_sum_offsets,
)
from .errors import (
    BlowUp,
    DimensionMismatch,
    GameError,
    Infeasible,
    InfeasibleReason,
    NotZeroSum,
    NumericalFailure,
    SymmetryViolation,
)
from .linalg import PinvResult, pinv, range_inclusion, solve_linear_family
from .model import (
    GameSpec,
    PlayerCost,
    TimeGrid,
    ValidatedGame,
    ZeroSumGame,
    slq_data,
    slq_spec,
    stack,
    validate,
    zero_sum_reduce,
    zero_sum_spec,
)
from .paths import MatrixPath, VectorPath
from .riccati import (
    ClosedLoopSolution,
    OpenRepSolution,
    SolverOptions,
    ZeroSumSolution,
    solve_closed_loop_nash,
    solve_lyapunov,
    solve_open_loop_rep,
    solve_slq,
    solve_zero_sum,
)
from .simulate import (
    ClosedLoop,
    McReport,
    NoisePlan,
    OpenLoop,
    Profile,
    Strategy,
    analytic_value,
    convexity_probe,
    deviation_library,
    discrete_oracle,
    mc_cost,
    mc_costs,
    nash_deviation_test,
    policy_value,
    simulate_paths,
    stationarity_residual,
)

__version__ = "0.1.0"
