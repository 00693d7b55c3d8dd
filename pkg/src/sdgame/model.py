"""Game data model: time grids, coefficient specs, validation and reductions.

A :class:`GameSpec` holds coefficient *samplers* (constants or callables of
time). :func:`validate` materializes them once on the half-step grid used by
the RK4 integrators, checks shapes and symmetry, and returns an immutable
:class:`ValidatedGame`. Index ``j`` of a sampled array refers to time
``t0 + j * dt / 2``, so grid point ``k`` sits at ``j = 2 k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Any, Callable, Union

import numpy as np

from .errors import DimensionMismatch, NotZeroSum, SymmetryViolation
from .linalg import SYMMETRY_TOL, asymmetry

Sampler = Union[float, int, np.ndarray, list, Callable[[float], Any], None]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``s_k = t0 + k dt`` on ``[t0, T]``."""

    t0: float
    T: float
    n_steps: int

    def __post_init__(self):
        if not (np.isfinite(self.t0) and np.isfinite(self.T)) or not self.t0 < self.T:
            raise ValueError(f"need finite t0 < T, got t0={self.t0}, T={self.T}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps}")
        object.__setattr__(self, "n_steps", int(self.n_steps))
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "T", float(self.T))

    @property
    def dt(self) -> float:
        return (self.T - self.t0) / self.n_steps

    @property
    def points(self) -> np.ndarray:
        s = self.t0 + np.arange(self.n_steps + 1) * self.dt
        s[-1] = self.T
        return s

    @property
    def half_points(self) -> np.ndarray:
        s = self.t0 + np.arange(2 * self.n_steps + 1) * (0.5 * self.dt)
        s[-1] = self.T
        return s

    def with_steps(self, n_steps: int) -> "TimeGrid":
        return TimeGrid(self.t0, self.T, n_steps)


@dataclass(frozen=True)
class PlayerCost:
    """Cost weights of one player; ``None`` means identically zero.

    ``S1``/``S2`` are the ``m1 x n`` and ``m2 x n`` cross weights, ``Rjk`` the
    ``mj x mk`` control blocks, ``rho1``/``rho2`` the linear control weights.
    """

    Q: Sampler = None
    S1: Sampler = None
    S2: Sampler = None
    R11: Sampler = None
    R12: Sampler = None
    R21: Sampler = None
    R22: Sampler = None
    q: Sampler = None
    rho1: Sampler = None
    rho2: Sampler = None
    G: Sampler = None
    g: Sampler = None

    def negated(self) -> "PlayerCost":
        """The cost with every weight multiplied by -1."""
        kw = {f.name: _negate(getattr(self, f.name)) for f in fields(self)}
        return PlayerCost(**kw)


def _negate(sampler: Sampler) -> Sampler:
    if sampler is None:
        return None
    if callable(sampler):
        return lambda s, f=sampler: -np.asarray(f(s), dtype=float)
    return -np.asarray(sampler, dtype=float)


@dataclass(frozen=True)
class GameSpec:
    """Two-player linear-quadratic game before sampling.

    State ``dX = (A X + B1 u1 + B2 u2 + b) ds + (C X + D1 u1 + D2 u2 + sigma) dW``.
    Any coefficient left as ``None`` is zero.
    """

    n: int
    m1: int
    m2: int
    A: Sampler = None
    B1: Sampler = None
    B2: Sampler = None
    C: Sampler = None
    D1: Sampler = None
    D2: Sampler = None
    b: Sampler = None
    sigma: Sampler = None
    player1: PlayerCost = field(default_factory=PlayerCost)
    player2: PlayerCost = field(default_factory=PlayerCost)


def _sample(sampler: Sampler, times: np.ndarray, shape: tuple[int, ...], name: str) -> np.ndarray:
    """Evaluate ``sampler`` at ``times`` and return an array ``(len(times),) + shape``."""
    K = len(times)
    if sampler is None:
        return np.zeros((K,) + shape)
    if callable(sampler):
        vals = [np.asarray(sampler(float(s)), dtype=float) for s in times]
        out = np.empty((K,) + shape)
        for j, v in enumerate(vals):
            out[j] = _fit(v, shape, name)
    else:
        out = np.broadcast_to(_fit(np.asarray(sampler, dtype=float), shape, name), (K,) + shape).copy()
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} has non-finite samples")
    return out


def _fit(v: np.ndarray, shape: tuple[int, ...], name: str) -> np.ndarray:
    if v.shape == shape:
        return v
    if v.size == int(np.prod(shape)) and v.size <= 1:
        return v.reshape(shape)
    raise DimensionMismatch(name, shape, v.shape)


def _readonly(*arrays: np.ndarray) -> None:
    for a in arrays:
        a.setflags(write=False)


@dataclass(frozen=True, eq=False)
class ValidatedGame:
    """A game sampled on the half-step grid of ``grid``.

    Shapes use ``K = 2 n_steps + 1`` samples and ``m = m1 + m2``. Per-player
    arrays carry a leading player axis of length 2. ``S[i]`` stacks
    ``(S^i_1; S^i_2)`` into ``m x n``; ``R[i]`` is the full ``m x m`` block
    matrix; ``rho[i]`` stacks ``(rho^i_1; rho^i_2)``.
    """

    n: int
    m1: int
    m2: int
    grid: TimeGrid
    A: np.ndarray  # (K, n, n)
    B: np.ndarray  # (K, n, m)
    C: np.ndarray  # (K, n, n)
    D: np.ndarray  # (K, n, m)
    b: np.ndarray  # (K, n)
    sigma: np.ndarray  # (K, n)
    Q: np.ndarray  # (2, K, n, n)
    S: np.ndarray  # (2, K, m, n)
    R: np.ndarray  # (2, K, m, m)
    q: np.ndarray  # (2, K, n)
    rho: np.ndarray  # (2, K, m)
    G: np.ndarray  # (2, n, n)
    g: np.ndarray  # (2, n)

    @property
    def m(self) -> int:
        return self.m1 + self.m2

    def rows(self, player: int) -> slice:
        """Control rows owned by ``player`` (1 or 2)."""
        if player == 1:
            return slice(0, self.m1)
        if player == 2:
            return slice(self.m1, self.m)
        raise ValueError(f"player must be 1 or 2, got {player}")

    def replace(self, **arrays) -> "ValidatedGame":
        """Copy with some sampled arrays replaced (shapes must match)."""
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        for name, value in arrays.items():
            value = np.array(value, dtype=float)
            if value.shape != kw[name].shape:
                raise DimensionMismatch(name, kw[name].shape, value.shape)
            _readonly(value)
            kw[name] = value
        return ValidatedGame(**kw)

    def scaled_offsets(self, lam: float) -> "ValidatedGame":
        """Copy with ``b, sigma, q, rho, g`` multiplied by ``lam``."""
        return self.replace(
            b=lam * self.b, sigma=lam * self.sigma, q=lam * self.q, rho=lam * self.rho, g=lam * self.g
        )

    @property
    def is_homogeneous(self) -> bool:
        return not any(np.any(a) for a in (self.b, self.sigma, self.q, self.rho, self.g))


def _check_symmetric(values: np.ndarray, name: str, times: np.ndarray | None) -> None:
    mats = values.reshape((-1,) + values.shape[-2:])
    for j, M in enumerate(mats):
        if M.size == 0:
            continue
        res = asymmetry(M)
        if res > SYMMETRY_TOL * (1.0 + float(np.max(np.abs(M)))):
            raise SymmetryViolation(name, res, None if times is None else float(times[j % len(times)]))


def validate(spec: GameSpec, grid: TimeGrid) -> ValidatedGame:
    """Sample ``spec`` on the half-step grid and check the standing assumptions.

    Raises
    ------
    DimensionMismatch
        A coefficient has the wrong shape.
    SymmetryViolation
        ``Q^i``, ``R^i`` (including ``R^i_12 = (R^i_21)^T``) or ``G^i`` is not
        symmetric at some sample.
    ValueError
        Non-finite samples or invalid dimensions.
    """
    n, m1, m2 = int(spec.n), int(spec.m1), int(spec.m2)
    if n < 1 or m1 < 0 or m2 < 0 or m1 + m2 < 1:
        raise ValueError(f"invalid dimensions n={n}, m1={m1}, m2={m2}")
    m = m1 + m2
    ts = grid.half_points

    def smp(x, shape, name):
        return _sample(x, ts, shape, name)

    A = smp(spec.A, (n, n), "A")
    B = np.concatenate([smp(spec.B1, (n, m1), "B1"), smp(spec.B2, (n, m2), "B2")], axis=2)
    C = smp(spec.C, (n, n), "C")
    D = np.concatenate([smp(spec.D1, (n, m1), "D1"), smp(spec.D2, (n, m2), "D2")], axis=2)
    b = smp(spec.b, (n,), "b")
    sigma = smp(spec.sigma, (n,), "sigma")

    Q, S, R, q, rho, G, g = [], [], [], [], [], [], []
    for i, pc in enumerate((spec.player1, spec.player2), start=1):
        p = f"player{i}."
        Q.append(smp(pc.Q, (n, n), p + "Q"))
        S.append(np.concatenate([smp(pc.S1, (m1, n), p + "S1"), smp(pc.S2, (m2, n), p + "S2")], axis=1))
        R11 = smp(pc.R11, (m1, m1), p + "R11")
        R12 = smp(pc.R12, (m1, m2), p + "R12")
        R21 = smp(pc.R21, (m2, m1), p + "R21")
        R22 = smp(pc.R22, (m2, m2), p + "R22")
        R.append(np.concatenate([np.concatenate([R11, R12], axis=2), np.concatenate([R21, R22], axis=2)], axis=1))
        q.append(smp(pc.q, (n,), p + "q"))
        rho.append(np.concatenate([smp(pc.rho1, (m1,), p + "rho1"), smp(pc.rho2, (m2,), p + "rho2")], axis=1))
        G.append(_sample(pc.G, ts[-1:], (n, n), p + "G")[0])
        g.append(_sample(pc.g, ts[-1:], (n,), p + "g")[0])
        _check_symmetric(Q[-1], p + "Q", ts)
        _check_symmetric(R[-1], p + "R", ts)
        _check_symmetric(G[-1], p + "G", None)

    game = ValidatedGame(
        n, m1, m2, grid, A, B, C, D, b, sigma,
        np.stack(Q), np.stack(S), np.stack(R), np.stack(q), np.stack(rho), np.stack(G), np.stack(g),
    )
    _readonly(*(getattr(game, f.name) for f in fields(game) if isinstance(getattr(game, f.name), np.ndarray)))
    return game


@dataclass(frozen=True, eq=False)
class StackedGame:
    """Block lift of a two-player game onto doubled state and control spaces.

    ``A = diag(A, A)``, ``B = diag(B, B)``, ``C = diag(C, C)``, ``D = diag(D, D)``,
    ``Q = diag(Q^1, Q^2)``, ``S = diag(S^1, S^2)``, ``R = diag(R^1, R^2)``,
    ``q = (q^1; q^2)``, ``rho = (rho^1; rho^2)``, ``G = diag(G^1, G^2)``,
    ``g = (g^1; g^2)``. ``J`` (``2m x m``) selects each player's own rows and
    ``I_k = (I_k; I_k)``.
    """

    game: ValidatedGame
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    Q: np.ndarray
    S: np.ndarray
    R: np.ndarray
    q: np.ndarray
    rho: np.ndarray
    G: np.ndarray
    g: np.ndarray
    J: np.ndarray
    I_n: np.ndarray
    I_m: np.ndarray


def _blkdiag(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Block diagonal of two stacks of matrices with the same leading axes."""
    lead = X.shape[:-2]
    r1, c1 = X.shape[-2:]
    r2, c2 = Y.shape[-2:]
    out = np.zeros(lead + (r1 + r2, c1 + c2))
    out[..., :r1, :c1] = X
    out[..., r1:, c1:] = Y
    return out


def selector(m1: int, m2: int) -> np.ndarray:
    """The ``2m x m`` matrix picking rows ``1..m1`` and ``m+m1+1..2m``."""
    m = m1 + m2
    J = np.zeros((2 * m, m))
    J[:m1, :m1] = np.eye(m1)
    J[m + m1:, m1:] = np.eye(m2)
    return J


def stacked_identity(k: int) -> np.ndarray:
    return np.vstack([np.eye(k), np.eye(k)])


def stack(game: ValidatedGame) -> StackedGame:
    """Build the block lift of ``game`` on its half-step samples."""
    sg = StackedGame(
        game=game,
        A=_blkdiag(game.A, game.A),
        B=_blkdiag(game.B, game.B),
        C=_blkdiag(game.C, game.C),
        D=_blkdiag(game.D, game.D),
        Q=_blkdiag(game.Q[0], game.Q[1]),
        S=_blkdiag(game.S[0], game.S[1]),
        R=_blkdiag(game.R[0], game.R[1]),
        q=np.concatenate([game.q[0], game.q[1]], axis=-1),
        rho=np.concatenate([game.rho[0], game.rho[1]], axis=-1),
        G=_blkdiag(game.G[0], game.G[1]),
        g=np.concatenate([game.g[0], game.g[1]]),
        J=selector(game.m1, game.m2),
        I_n=stacked_identity(game.n),
        I_m=stacked_identity(game.m),
    )
    _readonly(*(getattr(sg, f.name) for f in fields(sg) if isinstance(getattr(sg, f.name), np.ndarray)))
    return sg


@dataclass(frozen=True, eq=False)
class ZeroSumGame:
    """Single quadratic cost shared with opposite signs (or one-player data).

    With ``m2 = 0`` this is a plain stochastic LQ control problem. Arrays use
    the half-step sampling of :class:`ValidatedGame`.
    """

    n: int
    m1: int
    m2: int
    grid: TimeGrid
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    b: np.ndarray
    sigma: np.ndarray
    Q: np.ndarray
    S: np.ndarray
    R: np.ndarray
    q: np.ndarray
    rho: np.ndarray
    G: np.ndarray
    g: np.ndarray

    @property
    def m(self) -> int:
        return self.m1 + self.m2


ZERO_SUM_TOL = 1e-12


def zero_sum_reduce(game: ValidatedGame, tol: float = ZERO_SUM_TOL) -> ZeroSumGame:
    """Check ``J^1 = -J^2`` sample-wise and return the shared cost data.

    Raises
    ------
    NotZeroSum
        When some weight of Player 2 differs from the negated weight of
        Player 1 by more than ``tol * (1 + |weight|)``.
    """
    ts = game.grid.half_points
    for name in ("Q", "S", "R", "q", "rho", "G", "g"):
        X = getattr(game, name)
        X1, X2 = X[0], X[1]
        per = (X1 + X2).reshape(X1.shape[0], -1) if name not in ("G", "g") else (X1 + X2).reshape(1, -1)
        scale = np.abs(X1).reshape(per.shape[0], -1)
        if per.shape[1] == 0:
            continue
        res = np.max(np.abs(per), axis=1)
        lim = tol * (1.0 + np.max(scale, axis=1))
        bad = np.nonzero(res > lim)[0]
        if bad.size:
            j = int(bad[0])
            raise NotZeroSum(name, float(res[j]), None if name in ("G", "g") else float(ts[j]))
    return _single_cost(game)


def slq_data(game: ValidatedGame) -> ZeroSumGame:
    """Player 1's control problem from a game with ``m2 = 0``."""
    if game.m2 != 0:
        raise DimensionMismatch("m2", (0,), (game.m2,))
    return _single_cost(game)


def _single_cost(game: ValidatedGame) -> ZeroSumGame:
    return ZeroSumGame(
        game.n, game.m1, game.m2, game.grid,
        game.A, game.B, game.C, game.D, game.b, game.sigma,
        game.Q[0], game.S[0], game.R[0], game.q[0], game.rho[0], game.G[0], game.g[0],
    )


def slq_spec(
    n: int,
    m: int,
    *,
    A: Sampler = None,
    B: Sampler = None,
    C: Sampler = None,
    D: Sampler = None,
    b: Sampler = None,
    sigma: Sampler = None,
    Q: Sampler = None,
    S: Sampler = None,
    R: Sampler = None,
    q: Sampler = None,
    rho: Sampler = None,
    G: Sampler = None,
    g: Sampler = None,
) -> GameSpec:
    """One-controller problem written as a game with an empty second player."""
    return GameSpec(
        n=n, m1=m, m2=0, A=A, B1=B, C=C, D1=D, b=b, sigma=sigma,
        player1=PlayerCost(Q=Q, S1=S, R11=R, q=q, rho1=rho, G=G, g=g),
    )


def zero_sum_spec(spec: GameSpec) -> GameSpec:
    """Copy of ``spec`` whose Player 2 cost is the negated Player 1 cost."""
    return GameSpec(
        n=spec.n, m1=spec.m1, m2=spec.m2, A=spec.A, B1=spec.B1, B2=spec.B2, C=spec.C,
        D1=spec.D1, D2=spec.D2, b=spec.b, sigma=spec.sigma,
        player1=spec.player1, player2=spec.player1.negated(),
    )
