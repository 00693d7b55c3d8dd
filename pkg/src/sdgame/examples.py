"""Built-in game instances, their closed-form solutions and random generators."""

from __future__ import annotations

import numpy as np

from .model import GameSpec, PlayerCost, TimeGrid, slq_spec, zero_sum_spec

DEFAULT_STEPS = 1000


def default_grid(t0: float = 0.0, T: float = 1.0, n_steps: int = DEFAULT_STEPS) -> TimeGrid:
    return TimeGrid(t0, T, n_steps)


def singular_coupling_game() -> GameSpec:
    """Scalar game with no closed-loop equilibrium.

    ``dX = (u1 + u2) ds + (u1 - u2) dW`` and both players pay ``E X(T)^2``.
    """
    return GameSpec(
        n=1, m1=1, m2=1, B1=[[1.0]], B2=[[1.0]], D1=[[1.0]], D2=[[-1.0]],
        player1=PlayerCost(G=[[1.0]]), player2=PlayerCost(G=[[1.0]]),
    )


def indefinite_player_game() -> GameSpec:
    """Scalar game ``dX = u1 ds + u2 dW`` where Player 2's cost is not convex.

    Player 1 pays ``E[X(T)^2 + int u1^2]``; Player 2 pays
    ``E[-X(T)^2 + int (u2^2 - X^2)]``.
    """
    return GameSpec(
        n=1, m1=1, m2=1, B1=[[1.0]], D2=[[1.0]],
        player1=PlayerCost(R11=[[1.0]], G=[[1.0]]),
        player2=PlayerCost(Q=[[-1.0]], R22=[[1.0]], G=[[-1.0]]),
    )


def distinct_outcomes_game() -> GameSpec:
    """Scalar game ``dX = (u1 + u2) ds + X dW``; Player i pays ``E[X(T)^2 + int ui^2]``.

    Its open-loop and closed-loop equilibria differ.
    """
    return GameSpec(
        n=1, m1=1, m2=1, C=[[1.0]], B1=[[1.0]], B2=[[1.0]],
        player1=PlayerCost(R11=[[1.0]], G=[[1.0]]),
        player2=PlayerCost(R22=[[1.0]], G=[[1.0]]),
    )


def scalar_zero_sum_game() -> GameSpec:
    """Zero-sum game with ``B = (1, 1)``, ``Q = 1``, ``R = diag(1, -1)``, ``G = 1``."""
    return zero_sum_spec(
        GameSpec(n=1, m1=1, m2=1, B1=[[1.0]], B2=[[1.0]],
                 player1=PlayerCost(Q=[[1.0]], R11=[[1.0]], R22=[[-1.0]], G=[[1.0]]))
    )


def scalar_regulator() -> GameSpec:
    """``dX = u ds``, cost ``E[X(T)^2 + int u^2]``; ``P(s) = 1 / (T + 1 - s)``."""
    return slq_spec(1, 1, B=[[1.0]], R=[[1.0]], G=[[1.0]])


def geometric_noise_game() -> GameSpec:
    """``dX = X dW`` with cost ``E X(T)^2`` for Player 1 and no controls in use."""
    return GameSpec(n=1, m1=1, m2=1, C=[[1.0]], player1=PlayerCost(G=[[1.0]]))


# Closed forms on [t0, T] ----------------------------------------------------


def distinct_outcomes_open_rep(s, T: float = 1.0):
    """``Pi_1 = Pi_2 = e^{T-s} / (2 e^{T-s} - 1)``."""
    e = np.exp(T - np.asarray(s, dtype=float))
    return e / (2.0 * e - 1.0)


def distinct_outcomes_closed_loop(s, T: float = 1.0):
    """``P_1 = P_2 = e^{T-s} / (3 e^{T-s} - 2)``."""
    e = np.exp(T - np.asarray(s, dtype=float))
    return e / (3.0 * e - 2.0)


def indefinite_player_p1(s, T: float = 1.0):
    """``P_1 = 1 / (T + 1 - s)``."""
    return 1.0 / (T + 1.0 - np.asarray(s, dtype=float))


def indefinite_player_p2(s, T: float = 1.0):
    """``P_2 = -((T+1-s)^3 + 2) / (3 (T+1-s)^2)``."""
    y = T + 1.0 - np.asarray(s, dtype=float)
    return -(y**3 + 2.0) / (3.0 * y**2)


def singular_coupling_open_loop(grid: TimeGrid, beta: float, x: float) -> np.ndarray:
    """Controls ``u1 = u2 = -beta x / 2`` on ``[t0, t0 + 1/beta)`` at the grid points.

    Returns an array of shape ``(n_steps + 1, 2)``. The window must end on a
    grid point, which makes ``X(T) = 0`` on every Euler path.
    """
    s = grid.points
    steps = (1.0 / beta) / grid.dt
    if abs(steps - round(steps)) > 1e-9 or grid.t0 + 1.0 / beta > grid.T + 1e-12:
        raise ValueError("1/beta must be a whole number of steps inside [t0, T]")
    u = np.zeros((len(s), 2))
    u[: int(round(steps))] = -0.5 * beta * x
    return u


# Random generators ---------------------------------------------------------


def _sym(rng: np.random.Generator, k: int, scale: float) -> np.ndarray:
    X = rng.normal(scale=scale, size=(k, k))
    return 0.5 * (X + X.T)


def random_zero_sum(rng: np.random.Generator, n: int, m1: int = 1, m2: int = 1) -> GameSpec:
    """Random zero-sum game: Player 1 minimizes and Player 2 maximizes ``J``.

    ``R11`` is positive definite and ``R22`` negative definite so the sign
    conditions usually hold; callers filter on solver feasibility.
    """
    m = m1 + m2

    def mat(r, c, scale=0.5):
        return rng.normal(scale=scale, size=(r, c))

    L1 = mat(m1, m1, 0.3)
    L2 = mat(m2, m2, 0.3)
    R12 = mat(m1, m2, 0.1)
    cost = PlayerCost(
        Q=_sym(rng, n, 0.5),
        S1=mat(m1, n, 0.2),
        S2=mat(m2, n, 0.2),
        R11=np.eye(m1) * 1.5 + L1 @ L1.T,
        R12=R12,
        R21=R12.T,
        R22=-(np.eye(m2) * 3.0 + L2 @ L2.T),
        q=rng.normal(scale=0.3, size=n),
        rho1=rng.normal(scale=0.3, size=m1),
        rho2=rng.normal(scale=0.3, size=m2),
        G=_sym(rng, n, 0.5),
        g=rng.normal(scale=0.3, size=n),
    )
    spec = GameSpec(
        n=n, m1=m1, m2=m2,
        A=mat(n, n, 0.4), B1=mat(n, m1), B2=mat(n, m2),
        C=mat(n, n, 0.3), D1=mat(n, m1, 0.2), D2=mat(n, m2, 0.2),
        b=rng.normal(scale=0.3, size=n), sigma=rng.normal(scale=0.3, size=n),
        player1=cost,
    )
    return zero_sum_spec(spec)


def random_slq(rng: np.random.Generator, n: int, m: int, offsets: bool = True) -> GameSpec:
    """Random convex single-player problem.

    The joint weight ``[[Q, S^T], [S, R]]`` is positive definite and ``G`` is
    positive semidefinite, so ``P >= 0`` and ``R + D^T P D >= R > 0``.
    """
    W = rng.normal(scale=0.5, size=(n + m, n + m))
    W = W @ W.T + 0.5 * np.eye(n + m)
    H = rng.normal(scale=0.5, size=(n, n))

    def vec(k):
        return rng.normal(scale=0.3, size=k) if offsets else None

    return slq_spec(
        n, m,
        A=rng.normal(scale=0.4, size=(n, n)),
        B=rng.normal(scale=0.6, size=(n, m)),
        C=rng.normal(scale=0.3, size=(n, n)),
        D=rng.normal(scale=0.3, size=(n, m)),
        b=vec(n), sigma=vec(n),
        Q=W[:n, :n], S=W[n:, :n], R=W[n:, n:],
        q=vec(n), rho=vec(m),
        G=H @ H.T, g=vec(n),
    )
