"""Offset systems that determine the affine part ``v`` of each equilibrium.

With deterministic ``b, sigma, q, rho, g`` every backward equation for
``(eta, zeta)`` has ``zeta = 0`` and reduces to a linear backward ODE for
``eta``. At every RK4 stage the control offset ``v`` is eliminated first from
its algebraic constraint and then substituted into the ``eta`` drift.

Where a value function exists (closed-loop games, zero-sum games and
single-player problems) the solvers also integrate the constant term
``c(s)`` so that a player's cost from ``(s, x)`` is
``<P(s) x, x> + 2 <eta(s), x> + c(s)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, InfeasibleReason
from .integrate import rk4_backward, to_half_grid
from .linalg import pinv_unchecked, range_residual
from .model import TimeGrid, ValidatedGame, ZeroSumGame, stack
from .paths import MatrixPath, VectorPath
from .riccati import (
    DEFAULT_OPTIONS,
    SolverOptions,
    _check_grid,
    _half_time,
    _owner_mask,
    _scale,
    closed_loop_coupling,
    open_rep_coupling,
    solve_coupling,
)


@dataclass(frozen=True, eq=False)
class OffsetSolution:
    """Offset paths of an equilibrium.

    Attributes
    ----------
    eta1, eta2 : VectorPath
        ``n``-vector offsets of each player's adjoint. For zero-sum games
        ``eta2 = -eta1``; for single-player data ``eta2`` is zero.
    zeta1, zeta2 : VectorPath
        Martingale integrands, identically zero for deterministic data.
    v : VectorPath
        Affine control offset, ``m``-vector.
    residuals : ndarray, shape (n_steps + 1,)
        Max-norm residual of the algebraic constraint defining ``v``.
    value_const : ndarray or None
        Constant term of each player's cost, shape ``(n_steps + 1, 2)``;
        ``None`` when the solution concept has no value function.
    """

    eta1: VectorPath
    eta2: VectorPath
    zeta1: VectorPath
    zeta2: VectorPath
    v: VectorPath
    residuals: np.ndarray
    value_const: np.ndarray | None = None


def _assemble(grid, eta1, eta2, v, resid, value_const=None) -> OffsetSolution:
    zeros = np.zeros_like(eta1)
    return OffsetSolution(
        VectorPath(grid, eta1), VectorPath(grid, eta2), VectorPath(grid, zeros),
        VectorPath(grid, zeros), VectorPath(grid, v), resid, value_const,
    )


def _check_path(path, grid: TimeGrid, shape, name: str) -> None:
    if path.grid != grid:
        raise ValueError(f"{name} lives on a different grid")
    got = path.values.shape[1:]
    if tuple(got) != tuple(shape):
        raise ValueError(f"{name} has shape {tuple(got)}, expected {tuple(shape)}")


def solve_closed_loop_offsets(
    game: ValidatedGame,
    P1: MatrixPath,
    P2: MatrixPath,
    Theta_star: MatrixPath,
    grid: TimeGrid | None = None,
    opts: SolverOptions = DEFAULT_OPTIONS,
) -> OffsetSolution:
    """Offsets ``eta_i`` and ``v*`` of a closed-loop Nash equilibrium.

    ``v*`` solves the same stacked system as ``Theta*`` with right-hand side
    rows ``B_i^T eta_i + D_i^T P_i sigma + rho^i_i``, and
    ``eta_i' = -(A^T eta_i + Theta*^T [B^T eta_i + D^T P_i sigma + rho^i
    + (R^i + D^T P_i D) v*] + (P_i B + C^T P_i D + S^i^T) v* + C^T P_i sigma
    + P_i b + q^i)`` with ``eta_i(T) = g^i``.

    Raises
    ------
    Infeasible
        ``SingularCoupling`` when ``v*`` cannot be determined.
    """
    grid = _check_grid(game, grid)
    n, m = game.n, game.m
    for name, path, shape in (("P1", P1, (n, n)), ("P2", P2, (n, n)), ("Theta_star", Theta_star, (m, n))):
        _check_path(path, grid, shape, name)
    P = to_half_grid(np.stack([P1.values, P2.values], axis=1), grid)
    Th = to_half_grid(Theta_star.values, grid)
    mask = _owner_mask(game)
    N = grid.n_steps
    vs = np.empty((N + 1, m))
    resid = np.empty(N + 1)

    def offset_rhs(j, eta, Pj):
        DtPs = (Pj @ game.sigma[j]) @ game.D[j]  # rows D^T P_i sigma, (2, m)
        w = eta @ game.B[j] + DtPs + game.rho[:, j]
        return np.where(mask[:, 0], w[0], w[1])

    def v_of(j, eta, Pj, s):
        M, _ = closed_loop_coupling(game, j, Pj, mask)
        w = offset_rhs(j, eta, Pj)
        v, _, _ = solve_coupling(M, w[:, None], opts, s)
        return v[:, 0], M, w

    def rhs(j, y):
        eta = y[:, :n]
        Pj = P[j]
        A, B, C, D = game.A[j], game.B[j], game.C[j], game.D[j]
        b, sig = game.b[j], game.sigma[j]
        v, _, _ = v_of(j, eta, Pj, lambda: _half_time(grid, j))
        T = Th[j]
        Psig = Pj @ sig  # (2, n)
        Dv_sig = D @ v + sig
        Rv = game.R[:, j] @ v  # (2, m)
        inner = eta @ B + Psig @ D + game.rho[:, j] + Rv + (D.T @ Pj @ D) @ v
        F_v = (Pj @ B + C.T @ Pj @ D + np.swapaxes(game.S[:, j], 1, 2)) @ v
        d_eta = -(eta @ A + inner @ T + F_v + Psig @ C + Pj @ b + game.q[:, j])
        running = (
            np.einsum("in,in->i", Pj @ Dv_sig, np.broadcast_to(Dv_sig, (2, n)))
            + 2.0 * eta @ (B @ v + b)
            + Rv @ v
            + 2.0 * game.rho[:, j] @ v
        )
        return np.concatenate([d_eta, -running[:, None]], axis=1)

    def on_point(k, y):
        j = 2 * k
        v, M, w = v_of(j, y[:, :n], P[j], float(grid.points[k]))
        vs[k] = v
        resid[k] = float(np.max(np.abs(M @ v + w))) if m else 0.0

    y_T = np.concatenate([game.g, np.zeros((2, 1))], axis=1)
    Y = rk4_backward(rhs, y_T, grid, on_point=on_point, bound=opts.blowup_bound)
    return _assemble(grid, Y[:, 0, :n], Y[:, 1, :n], vs, resid, Y[:, :, n])


def solve_open_rep_offsets(
    game: ValidatedGame,
    Pi1: MatrixPath,
    Pi2: MatrixPath,
    grid: TimeGrid | None = None,
    opts: SolverOptions = DEFAULT_OPTIONS,
) -> OffsetSolution:
    """Offsets of the closed-loop representation of an open-loop equilibrium.

    With stacked ``eta = (eta_1; eta_2)`` and ``Pi = (Pi_1; Pi_2)``:
    ``K v + J^T (B^T eta + D^T Pi sigma + rho) = 0`` where
    ``K = J^T (R I_m + D^T Pi D)``, and
    ``eta' = -(A^T eta + (Pi B + C^T Pi D + S^T I_m) v + C^T Pi sigma + Pi b + q)``
    with ``eta(T) = g``.

    Raises
    ------
    Infeasible
        ``SingularCoupling`` when ``v`` cannot be determined.
    """
    grid = _check_grid(game, grid)
    n = game.n
    for name, path in (("Pi1", Pi1), ("Pi2", Pi2)):
        _check_path(path, grid, (n, n), name)
    sg = stack(game)
    Pi = to_half_grid(np.concatenate([Pi1.values, Pi2.values], axis=1), grid)
    JT = sg.J.T
    N = grid.n_steps
    vs = np.empty((N + 1, game.m))
    resid = np.empty(N + 1)

    def v_of(j, eta, s):
        K, _ = open_rep_coupling(sg, j, Pi[j])
        w = JT @ (sg.B[j].T @ eta + sg.D[j].T @ Pi[j] @ game.sigma[j] + sg.rho[j])
        v, _, _ = solve_coupling(K, w[:, None], opts, s)
        return v[:, 0], K, w

    def rhs(j, eta):
        Pj = Pi[j]
        v, _, _ = v_of(j, eta, lambda: _half_time(grid, j))
        F = Pj @ game.B[j] + sg.C[j].T @ Pj @ game.D[j] + sg.S[j].T @ sg.I_m
        return -(sg.A[j].T @ eta + F @ v + sg.C[j].T @ Pj @ game.sigma[j] + Pj @ game.b[j] + sg.q[j])

    def on_point(k, eta):
        v, K, w = v_of(2 * k, eta, float(grid.points[k]))
        vs[k] = v
        resid[k] = float(np.max(np.abs(K @ v + w)))

    eta = rk4_backward(rhs, sg.g.copy(), grid, on_point=on_point, bound=opts.blowup_bound)
    return _assemble(grid, eta[:, :n], eta[:, n:], vs, resid)


def _pinv_offsets(zs: ZeroSumGame, P: MatrixPath, grid, opts: SolverOptions):
    grid = _check_grid(zs, grid)
    n, m = zs.n, zs.m
    _check_path(P, grid, (n, n), "P")
    Ph = to_half_grid(P.values, grid)
    N = grid.n_steps
    vs = np.empty((N + 1, m))
    resid = np.empty(N + 1)

    def parts(j, eta):
        Pj = Ph[j]
        D = zs.D[j]
        M = zs.R[j] + D.T @ Pj @ D
        M = 0.5 * (M + M.T)
        Mp = pinv_unchecked(M, opts.rel_cutoff).pinv
        w = zs.B[j].T @ eta + D.T @ Pj @ zs.sigma[j] + zs.rho[j]
        return Pj, M, Mp, w

    def rhs(j, y):
        eta = y[:n]
        Pj, M, Mp, w = parts(j, eta)
        v = -(Mp @ w)
        L = zs.B[j].T @ Pj + zs.D[j].T @ Pj @ zs.C[j] + zs.S[j]
        sig = zs.sigma[j]
        d_eta = -(zs.A[j].T @ eta + zs.C[j].T @ Pj @ sig + Pj @ zs.b[j] + zs.q[j] + L.T @ v)
        running = sig @ Pj @ sig + 2.0 * eta @ zs.b[j] + w @ v
        return np.concatenate([d_eta, [-running]])

    def on_point(k, y):
        _, M, Mp, w = parts(2 * k, y[:n])
        vs[k] = -(Mp @ w)
        resid[k] = range_residual(w[:, None], M, Mp) if m else 0.0
        if resid[k] > opts.res_tol * _scale(w):
            raise Infeasible(InfeasibleReason.RANGE_CONDITION, float(grid.points[k]), resid[k], "offset")

    y_T = np.concatenate([zs.g, [0.0]])
    Y = rk4_backward(rhs, y_T, grid, on_point=on_point, bound=opts.blowup_bound)
    return grid, Y[:, :n], Y[:, n], vs, resid


def solve_zero_sum_offsets(
    zs: ZeroSumGame, P: MatrixPath, grid: TimeGrid | None = None, opts: SolverOptions = DEFAULT_OPTIONS
) -> OffsetSolution:
    """Offset ``eta`` and minimum-norm ``v`` of a zero-sum saddle point.

    ``v = -(R + D^T P D)^+ w`` with ``w = B^T eta + D^T P sigma + rho``, and
    ``eta' = -(A^T eta + C^T P sigma + P b + q + (P B + C^T P D + S^T) v)``,
    ``eta(T) = g``. ``eta1`` is Player 1's offset and ``eta2 = -eta1``.

    Raises
    ------
    Infeasible
        ``RangeCondition`` when ``w`` leaves the range of ``R + D^T P D``.
    """
    grid, eta, c, vs, resid = _pinv_offsets(zs, P, grid, opts)
    return _assemble(grid, eta, -eta, vs, resid, np.column_stack([c, -c]))


def solve_slq_offsets(
    slq: ZeroSumGame, P: MatrixPath, grid: TimeGrid | None = None, opts: SolverOptions = DEFAULT_OPTIONS
) -> OffsetSolution:
    """Single-player version of :func:`solve_zero_sum_offsets`.

    ``value_const[:, 0]`` is
    ``int_s^T [<P sigma, sigma> + 2 <eta, b> - <(R + D^T P D)^+ w, w>] dr``.
    """
    if slq.m2 != 0:
        raise ValueError("single-player data must have m2 = 0")
    grid, eta, c, vs, resid = _pinv_offsets(slq, P, grid, opts)
    return _assemble(grid, eta, np.zeros_like(eta), vs, resid, np.column_stack([c, np.zeros_like(c)]))


def solve_feedback_offsets(
    game: ValidatedGame,
    P1: MatrixPath,
    P2: MatrixPath,
    Theta: MatrixPath,
    v: VectorPath,
    grid: TimeGrid | None = None,
    opts: SolverOptions = DEFAULT_OPTIONS,
) -> OffsetSolution:
    """Cost offsets of the fixed affine feedback ``u = Theta X + v``.

    ``P_i`` must solve the Lyapunov equation of ``Theta``
    (:func:`sdgame.riccati.solve_lyapunov`). Then each player's cost from
    ``(s, x)`` is ``<P_i x, x> + 2 <eta_i, x> + c_i`` where
    ``eta_i' = -((A + B Theta)^T eta_i + (C + D Theta)^T P_i (D v + sigma)
    + (S^i + R^i Theta)^T v + P_i (B v + b) + q^i + Theta^T rho^i)`` and
    ``c_i' = -(<P_i (D v + sigma), D v + sigma> + 2 <eta_i, B v + b>
    + <R^i v, v> + 2 <rho^i, v>)``.
    """
    grid = _check_grid(game, grid)
    n, m = game.n, game.m
    for name, path, shape in (("P1", P1, (n, n)), ("P2", P2, (n, n)), ("Theta", Theta, (m, n))):
        _check_path(path, grid, shape, name)
    _check_path(v, grid, (m,), "v")
    P = to_half_grid(np.stack([P1.values, P2.values], axis=1), grid)
    Th = to_half_grid(Theta.values, grid)
    V = to_half_grid(v.values, grid)

    def rhs(j, y):
        eta = y[:, :n]
        Pj, T, vj = P[j], Th[j], V[j]
        A, B, C, D = game.A[j], game.B[j], game.C[j], game.D[j]
        Acl, Ccl = A + B @ T, C + D @ T
        Dv_sig = D @ vj + game.sigma[j]
        Bv_b = B @ vj + game.b[j]
        PDs = Pj @ Dv_sig  # (2, n)
        SRT = game.S[:, j] + game.R[:, j] @ T  # (2, m, n)
        d_eta = -(
            eta @ Acl + PDs @ Ccl + np.einsum("imn,m->in", SRT, vj) + Pj @ Bv_b + game.q[:, j]
            + game.rho[:, j] @ T
        )
        running = PDs @ Dv_sig + 2.0 * eta @ Bv_b + (game.R[:, j] @ vj) @ vj + 2.0 * game.rho[:, j] @ vj
        return np.concatenate([d_eta, -running[:, None]], axis=1)

    y_T = np.concatenate([game.g, np.zeros((2, 1))], axis=1)
    Y = rk4_backward(rhs, y_T, grid, bound=opts.blowup_bound)
    return _assemble(grid, Y[:, 0, :n], Y[:, 1, :n], v.values, np.zeros(grid.n_steps + 1), Y[:, :, n])
