"""Backward Riccati solvers for closed-loop Nash, open-loop representation,
zero-sum and single-player problems, plus the Lyapunov equation of a fixed
feedback.

All solvers use :func:`~sdgame.integrate.rk4_backward` on the game grid and
re-solve the algebraic coupling for the feedback at every RK4 stage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, InfeasibleReason
from .integrate import rk4_backward, to_half_grid
from .linalg import max_eig_sym, min_eig_sym, pinv_unchecked, range_residual
from .model import TimeGrid, ValidatedGame, ZeroSumGame, stack
from .paths import MatrixPath


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances shared by the Riccati and offset solvers.

    Attributes
    ----------
    cond_max : float
        Coupling matrices with a larger condition number are treated as
        singular; the solve then continues only if the right-hand side lies in
        their range.
    psd_tol : float
        Allowed negative slack in semidefiniteness conditions.
    res_tol : float
        Residual tolerance for algebraic constraints, relative to
        ``1 + |rhs|``.
    blowup_bound : float
        Largest admissible max-norm of a solution before :class:`BlowUp`.
    rel_cutoff : float, optional
        Pseudo-inverse cutoff; ``None`` uses the default of ``linalg.pinv``.
    """

    cond_max: float = 1e10
    psd_tol: float = 1e-8
    res_tol: float = 1e-8
    blowup_bound: float = 1e8
    rel_cutoff: float | None = None


DEFAULT_OPTIONS = SolverOptions()


def _scale(X: np.ndarray) -> float:
    return 1.0 + (float(np.max(np.abs(X))) if X.size else 0.0)


def solve_coupling(M: np.ndarray, N: np.ndarray, opts: SolverOptions, s=None):
    """Solve ``M X + N = 0`` for the feedback block ``X``.

    Returns ``(X, cond, residual)``. When ``cond(M) > opts.cond_max`` the
    minimum-norm solution is accepted only if ``N`` lies in the range of ``M``;
    otherwise :class:`Infeasible` with reason ``SingularCoupling`` is raised.
    ``s`` is the time reported in that error, or a zero-argument callable
    returning it.
    """
    if M.size == 0:
        return np.zeros((0,) + N.shape[1:]), 1.0, 0.0
    pr = pinv_unchecked(M, opts.rel_cutoff)
    X = -(pr.pinv @ N)
    res = range_residual(N, M, pr.pinv) if pr.cond > opts.cond_max else 0.0
    if res > 0.0 and res > opts.res_tol * _scale(N):
        raise Infeasible(
            InfeasibleReason.SINGULAR_COUPLING, s() if callable(s) else s, res,
            f"coupling condition number {pr.cond:.3e}",
        )
    return X, pr.cond, res


def _sym(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + np.swapaxes(P, -1, -2))


# ---------------------------------------------------------------------------
# Closed-loop Nash equilibrium
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ClosedLoopSolution:
    """Coupled symmetric Riccati solution and its equilibrium feedback.

    Attributes
    ----------
    P1, P2 : MatrixPath
        Symmetric ``n x n`` solutions.
    Theta_star : MatrixPath
        Equilibrium feedback, ``m x n``; rows ``0..m1-1`` belong to Player 1.
    psd_margins : ndarray, shape (n_steps + 1, 2)
        Smallest eigenvalues of ``R^i_ii + D_i^T P_i D_i``.
    stationarity_residuals : ndarray, shape (n_steps + 1, 2)
        Max-norm of each player's first-order condition for ``Theta_star``.
    condition_numbers : ndarray, shape (n_steps + 1,)
        Condition numbers of the stacked coupling matrix.
    """

    P1: MatrixPath
    P2: MatrixPath
    Theta_star: MatrixPath
    psd_margins: np.ndarray
    stationarity_residuals: np.ndarray
    condition_numbers: np.ndarray


def _owner_mask(game: ValidatedGame) -> np.ndarray:
    """Boolean ``(m, 1)`` mask of the control rows owned by Player 1."""
    mask = np.zeros((game.m, 1), dtype=bool)
    mask[: game.m1] = True
    return mask


def closed_loop_coupling(game: ValidatedGame, j: int, P: np.ndarray, mask: np.ndarray | None = None):
    """Stacked matrices ``(M, N)`` with ``M Theta* + N = 0`` at half index ``j``.

    ``P`` has shape ``(2, n, n)``. Row block ``i`` of ``M`` is the Player-``i``
    rows of ``R^i + D^T P_i D`` and of ``N`` the Player-``i`` rows of
    ``B^T P_i + D^T P_i C + S^i``.
    """
    if mask is None:
        mask = _owner_mask(game)
    B, C, D = game.B[j], game.C[j], game.D[j]
    DtP = D.T @ P
    Mfull = game.R[:, j] + DtP @ D
    Nfull = B.T @ P + DtP @ C + game.S[:, j]
    return np.where(mask, Mfull[0], Mfull[1]), np.where(mask, Nfull[0], Nfull[1])


def _nash_rhs(game: ValidatedGame, j: int, P: np.ndarray, Theta: np.ndarray) -> np.ndarray:
    A, B, C, D = game.A[j], game.B[j], game.C[j], game.D[j]
    PA = P @ A
    F = P @ B + C.T @ P @ D + np.swapaxes(game.S[:, j], 1, 2)
    FT = F @ Theta
    quad = Theta.T @ (game.R[:, j] + D.T @ P @ D) @ Theta
    return -(PA + np.swapaxes(PA, 1, 2) + C.T @ P @ C + game.Q[:, j] + quad + FT + np.swapaxes(FT, 1, 2))


def solve_closed_loop_nash(
    game: ValidatedGame, grid: TimeGrid | None = None, opts: SolverOptions = DEFAULT_OPTIONS
) -> ClosedLoopSolution:
    """Integrate the coupled symmetric Riccati system of a closed-loop Nash
    equilibrium backward from ``P_i(T) = G^i``.

    Raises
    ------
    Infeasible
        ``SingularCoupling`` if the feedback cannot be determined,
        ``PsdViolation`` if ``R^i_ii + D_i^T P_i D_i`` has an eigenvalue below
        ``-psd_tol`` at a grid point.
    BlowUp
        If ``|P_i|`` exceeds ``opts.blowup_bound``.
    """
    grid = _check_grid(game, grid)
    N = grid.n_steps
    s = grid.points
    thetas = np.empty((N + 1, game.m, game.n))
    margins = np.empty((N + 1, 2))
    resid = np.empty((N + 1, 2))
    conds = np.empty(N + 1)
    mask = _owner_mask(game)

    def rhs(j, P):
        M, Nm = closed_loop_coupling(game, j, P, mask)
        Theta, _, _ = solve_coupling(M, Nm, opts, lambda: _half_time(grid, j))
        return _nash_rhs(game, j, P, Theta)

    def on_point(k, P):
        j = 2 * k
        M, Nm = closed_loop_coupling(game, j, P, mask)
        Theta, cond, _ = solve_coupling(M, Nm, opts, float(s[k]))
        thetas[k], conds[k] = Theta, cond
        E = M @ Theta + Nm
        for i in (0, 1):
            rows = game.rows(i + 1)
            resid[k, i] = float(np.max(np.abs(E[rows]))) if E[rows].size else 0.0
            Di = game.D[j][:, rows]
            margins[k, i] = min_eig_sym(_sym(game.R[i, j][rows, rows] + Di.T @ P[i] @ Di))
            if margins[k, i] < -opts.psd_tol:
                raise Infeasible(
                    InfeasibleReason.PSD_VIOLATION, float(s[k]), margins[k, i], f"player {i + 1}"
                )

    P = rk4_backward(rhs, game.G.copy(), grid, post=_sym, on_point=on_point, bound=opts.blowup_bound)
    P[N] = game.G
    return ClosedLoopSolution(
        MatrixPath(grid, P[:, 0]), MatrixPath(grid, P[:, 1]), MatrixPath(grid, thetas),
        margins, resid, conds,
    )


# ---------------------------------------------------------------------------
# Closed-loop representation of open-loop equilibria
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OpenRepSolution:
    """Non-symmetric stacked Riccati solution and its representation feedback.

    Attributes
    ----------
    Pi1, Pi2 : MatrixPath
        ``n x n`` solutions, generally not symmetric.
    Theta : MatrixPath
        Feedback of the closed-loop representation, ``m x n``.
    condition_numbers : ndarray, shape (n_steps + 1,)
        Condition numbers of the stacked ``m x m`` coupling matrix.
    residuals : ndarray, shape (n_steps + 1,)
        Max-norm residual of the coupling equation for ``Theta``.
    """

    Pi1: MatrixPath
    Pi2: MatrixPath
    Theta: MatrixPath
    condition_numbers: np.ndarray
    residuals: np.ndarray


def open_rep_coupling(sg, j: int, Pi: np.ndarray):
    """``(K, L)`` with ``K Theta + L = 0`` for the stacked ``2n x n`` matrix ``Pi``.

    ``K = J^T (R I_m + D^T Pi D)`` and ``L = J^T (B^T Pi + D^T Pi C + S I_n)``
    where bold lifts come from :func:`sdgame.model.stack`.
    """
    g = sg.game
    JT = sg.J.T
    K = JT @ (sg.R[j] @ sg.I_m + sg.D[j].T @ Pi @ g.D[j])
    L = JT @ (sg.B[j].T @ Pi + sg.D[j].T @ Pi @ g.C[j] + sg.S[j] @ sg.I_n)
    return K, L


def solve_open_loop_rep(
    game: ValidatedGame, grid: TimeGrid | None = None, opts: SolverOptions = DEFAULT_OPTIONS
) -> OpenRepSolution:
    """Integrate the stacked non-symmetric Riccati system backward from
    ``Pi_i(T) = G^i``; no symmetrization is applied.

    Raises
    ------
    Infeasible
        ``SingularCoupling`` if the stacked coupling cannot be solved.
    BlowUp
        If ``|Pi|`` exceeds ``opts.blowup_bound``.
    """
    grid = _check_grid(game, grid)
    sg = stack(game)
    n, N = game.n, grid.n_steps
    s = grid.points
    thetas = np.empty((N + 1, game.m, n))
    conds = np.empty(N + 1)
    resid = np.empty(N + 1)

    def rhs(j, Pi):
        K, L = open_rep_coupling(sg, j, Pi)
        Theta, _, _ = solve_coupling(K, L, opts, lambda: _half_time(grid, j))
        F = Pi @ game.B[j] + sg.C[j].T @ Pi @ game.D[j] + sg.S[j].T @ sg.I_m
        return -(Pi @ game.A[j] + sg.A[j].T @ Pi + sg.C[j].T @ Pi @ game.C[j] + sg.Q[j] @ sg.I_n + F @ Theta)

    def on_point(k, Pi):
        K, L = open_rep_coupling(sg, 2 * k, Pi)
        Theta, cond, _ = solve_coupling(K, L, opts, float(s[k]))
        thetas[k], conds[k] = Theta, cond
        resid[k] = float(np.max(np.abs(K @ Theta + L)))

    Pi_T = sg.G @ sg.I_n
    Pi = rk4_backward(rhs, Pi_T, grid, on_point=on_point, bound=opts.blowup_bound)
    return OpenRepSolution(
        MatrixPath(grid, Pi[:, :n]), MatrixPath(grid, Pi[:, n:]), MatrixPath(grid, thetas), conds, resid
    )


# ---------------------------------------------------------------------------
# Zero-sum games and single-player problems
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ZeroSumSolution:
    """Pseudo-inverse Riccati solution with its minimum-norm feedback.

    Attributes
    ----------
    P : MatrixPath
        Symmetric ``n x n`` solution.
    Theta0 : MatrixPath
        ``-(R + D^T P D)^+ (B^T P + D^T P C + S)``.
    projector : MatrixPath
        ``I - (R + D^T P D)^+ (R + D^T P D)``; adding ``projector @ Gamma``
        to ``Theta0`` spans every admissible feedback.
    range_residuals : ndarray, shape (n_steps + 1,)
        Range-inclusion residuals of ``B^T P + D^T P C + S``.
    margins : ndarray, shape (n_steps + 1, k)
        Sign margins, all required ``>= -psd_tol``. For games: the smallest
        eigenvalue of ``R11 + D1^T P D1`` and minus the largest eigenvalue of
        ``R22 + D2^T P D2``. For single-player data: the smallest eigenvalue
        of ``R + D^T P D``.
    """

    P: MatrixPath
    Theta0: MatrixPath
    projector: MatrixPath
    range_residuals: np.ndarray
    margins: np.ndarray


def _zs_blocks(zs: ZeroSumGame, j: int, P: np.ndarray):
    B, C, D = zs.B[j], zs.C[j], zs.D[j]
    M = _sym(zs.R[j] + D.T @ P @ D)
    L = B.T @ P + D.T @ P @ C + zs.S[j]
    return M, L


def _solve_pinv_riccati(zs: ZeroSumGame, grid: TimeGrid | None, opts: SolverOptions, single: bool):
    grid = _check_grid(zs, grid)
    n, m, N = zs.n, zs.m, grid.n_steps
    s = grid.points
    thetas = np.empty((N + 1, m, n))
    projs = np.empty((N + 1, m, m))
    rres = np.empty(N + 1)
    margins = np.empty((N + 1, 1 if single else 2))
    r1, r2 = slice(0, zs.m1), slice(zs.m1, m)

    def rhs(j, P):
        M, L = _zs_blocks(zs, j, P)
        Mp = pinv_unchecked(M, opts.rel_cutoff).pinv
        return -(P @ zs.A[j] + zs.A[j].T @ P + zs.C[j].T @ P @ zs.C[j] + zs.Q[j] - L.T @ Mp @ L)

    def on_point(k, P):
        j = 2 * k
        M, L = _zs_blocks(zs, j, P)
        Mp = pinv_unchecked(M, opts.rel_cutoff).pinv
        thetas[k] = -(Mp @ L)
        projs[k] = np.eye(m) - Mp @ M
        rres[k] = range_residual(L, M, Mp)
        if rres[k] > opts.res_tol * _scale(L):
            raise Infeasible(InfeasibleReason.RANGE_CONDITION, float(s[k]), rres[k])
        if single:
            margins[k, 0] = min_eig_sym(M)
        else:
            margins[k, 0] = min_eig_sym(M[r1, r1])
            margins[k, 1] = -max_eig_sym(M[r2, r2])
        bad = np.nonzero(margins[k] < -opts.psd_tol)[0]
        if bad.size:
            which = "R+D'PD" if single else ("player 1 block", "player 2 block")[int(bad[0])]
            raise Infeasible(InfeasibleReason.SIGN_CONDITION, float(s[k]), float(margins[k, bad[0]]), which)

    P = rk4_backward(rhs, zs.G.copy(), grid, post=_sym, on_point=on_point, bound=opts.blowup_bound)
    P[N] = zs.G
    return ZeroSumSolution(
        MatrixPath(grid, P), MatrixPath(grid, thetas), MatrixPath(grid, projs), rres, margins
    )


def solve_zero_sum(
    zs: ZeroSumGame, grid: TimeGrid | None = None, opts: SolverOptions = DEFAULT_OPTIONS
) -> ZeroSumSolution:
    """Integrate the zero-sum pseudo-inverse Riccati equation from ``P(T) = G``.

    Raises
    ------
    Infeasible
        ``RangeCondition`` when ``B^T P + D^T P C + S`` leaves the range of
        ``R + D^T P D``; ``SignCondition`` when ``R11 + D1^T P D1`` is not
        positive semidefinite or ``R22 + D2^T P D2`` is not negative
        semidefinite (within ``psd_tol``).
    BlowUp
    """
    return _solve_pinv_riccati(zs, grid, opts, single=False)


def solve_slq(
    slq: ZeroSumGame, grid: TimeGrid | None = None, opts: SolverOptions = DEFAULT_OPTIONS
) -> ZeroSumSolution:
    """Single-controller version of :func:`solve_zero_sum`.

    ``slq`` is the output of :func:`sdgame.model.slq_data`. The sign
    condition is ``R + D^T P D >= -psd_tol``.
    """
    if slq.m2 != 0:
        raise ValueError("single-player data must have m2 = 0")
    return _solve_pinv_riccati(slq, grid, opts, single=True)


# ---------------------------------------------------------------------------
# Lyapunov equation of a fixed feedback
# ---------------------------------------------------------------------------


def solve_lyapunov(
    game: ValidatedGame,
    Theta: MatrixPath,
    grid: TimeGrid | None = None,
    opts: SolverOptions = DEFAULT_OPTIONS,
) -> tuple[MatrixPath, MatrixPath]:
    """Quadratic cost matrices ``(P1, P2)`` of the closed-loop system ``u = Theta X``.

    Solves ``P_i' + P_i (A+B Theta) + (A+B Theta)^T P_i + (C+D Theta)^T P_i (C+D Theta)
    + Q^i + Theta^T S^i + S^i^T Theta + Theta^T R^i Theta = 0`` with
    ``P_i(T) = G^i``. Stage values of ``Theta`` come from cubic interpolation.
    """
    grid = _check_grid(game, grid)
    if Theta.shape != (game.m, game.n):
        raise ValueError(f"Theta has shape {Theta.shape}, expected {(game.m, game.n)}")
    Th = to_half_grid(Theta.values, grid)

    def rhs(j, P):
        T = Th[j]
        Acl = game.A[j] + game.B[j] @ T
        Ccl = game.C[j] + game.D[j] @ T
        out = np.empty_like(P)
        for i in (0, 1):
            ST = T.T @ game.S[i, j]
            out[i] = -(
                P[i] @ Acl + Acl.T @ P[i] + Ccl.T @ P[i] @ Ccl + game.Q[i, j] + ST + ST.T
                + T.T @ game.R[i, j] @ T
            )
        return out

    P = rk4_backward(rhs, game.G.copy(), grid, post=_sym, bound=opts.blowup_bound)
    P[grid.n_steps] = game.G
    return MatrixPath(grid, P[:, 0]), MatrixPath(grid, P[:, 1])


def _half_time(grid: TimeGrid, j: int) -> float:
    return float(grid.half_points[j])


def _check_grid(game, grid: TimeGrid | None) -> TimeGrid:
    if grid is None:
        return game.grid
    if grid != game.grid:
        raise ValueError(f"grid {grid} differs from the grid the game was sampled on ({game.grid})")
    return grid
