"""Monte Carlo and deterministic verification of computed equilibria.

Paths use the Euler-Maruyama scheme with left-endpoint coefficients, and
running costs use the trapezoidal rule on the grid points. Brownian
increments for step ``k`` come from a Philox stream keyed by ``(seed, k)``;
path ``p`` reads the ``p``-th draw of that stream, so its increments do not
depend on ``n_paths`` or on how paths are batched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

from .bsde import OffsetSolution, solve_feedback_offsets
from .errors import BlowUp
from .integrate import rk4_forward
from .model import TimeGrid, ValidatedGame
from .paths import MatrixPath, VectorPath
from .riccati import DEFAULT_OPTIONS, SolverOptions, solve_coupling, solve_lyapunov

# ---------------------------------------------------------------------------
# Noise and reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoisePlan:
    """Reproducible Brownian increments for ``n_paths`` sample paths."""

    seed: int
    n_paths: int

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if int(self.n_paths) < 1:
            raise ValueError("n_paths must be positive")

    def generator(self, k: int) -> np.random.Generator:
        """Generator of the standard normal draws of step ``k``."""
        return np.random.Generator(np.random.Philox(key=int(self.seed) + (int(k) << 64)))

    def increment(self, grid: TimeGrid, k: int) -> np.ndarray:
        """``dW_k`` for every path, shape ``(n_paths,)``."""
        return self.generator(k).standard_normal(self.n_paths) * math.sqrt(grid.dt)

    def increments(self, grid: TimeGrid) -> np.ndarray:
        """All increments, shape ``(n_steps, n_paths)``."""
        return np.stack([self.increment(grid, k) for k in range(grid.n_steps)])


@dataclass(frozen=True)
class McReport:
    """Sample mean of a per-path quantity with its standard error."""

    mean: float
    stderr: float
    n_paths: int
    seed: int

    @classmethod
    def from_samples(cls, x: np.ndarray, seed: int) -> "McReport":
        x = np.asarray(x, dtype=float)
        n = x.size
        mean = float(np.mean(x))
        stderr = float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(mean, stderr, n, int(seed))

    def to_record(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "n_paths": self.n_paths, "seed": self.seed}


# ---------------------------------------------------------------------------
# Policies
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Strategy:
    """Control law of one player: ``u_i = theta X + offset`` on the grid.

    Attributes
    ----------
    theta : ndarray or None
        Feedback gains, shape ``(n_steps + 1, m_i, n)``; ``None`` for an
        open-loop (deterministic) control.
    offset : ndarray
        Shape ``(n_steps + 1, m_i)``.
    frozen : bool
        Evaluate the feedback on the reference trajectory instead of the
        simulated one. A frozen strategy reproduces the *process* that the
        reference profile generated, which is what an open-loop opponent
        keeps fixed under a unilateral deviation.
    """

    theta: np.ndarray | None
    offset: np.ndarray
    frozen: bool = False

    def scaled(self, lam: float) -> "Strategy":
        theta = None if self.theta is None else lam * self.theta
        return Strategy(theta, lam * self.offset, self.frozen)

    def shifted(self, delta: np.ndarray) -> "Strategy":
        return Strategy(self.theta, self.offset + delta, self.frozen)


@dataclass(frozen=True, eq=False)
class ClosedLoop:
    """Affine feedback ``u = Theta X + v`` for both players."""

    Theta: MatrixPath
    v: VectorPath


@dataclass(frozen=True, eq=False)
class OpenLoop:
    """Deterministic controls ``u(s)`` for both players, shape ``(n_steps + 1, m)``."""

    u: VectorPath


@dataclass(frozen=True, eq=False)
class Profile:
    """Per-player strategies, with the reference profile for frozen ones."""

    players: tuple[Strategy, Strategy]
    reference: "Policy | None" = None


Policy = Union[ClosedLoop, OpenLoop, Profile]


def strategies(policy: Policy, game: ValidatedGame) -> tuple[Strategy, Strategy]:
    """Split a policy into the two players' strategies."""
    if isinstance(policy, Profile):
        return policy.players
    r1, r2 = game.rows(1), game.rows(2)
    if isinstance(policy, ClosedLoop):
        Th, v = policy.Theta.values, policy.v.values
        if Th.shape[1:] != (game.m, game.n) or v.shape[1] != game.m:
            raise ValueError(f"feedback has shape {Th.shape[1:]} and offset width {v.shape[1]}, "
                             f"expected {(game.m, game.n)} and {game.m}")
        return Strategy(Th[:, r1], v[:, r1]), Strategy(Th[:, r2], v[:, r2])
    if isinstance(policy, OpenLoop):
        u = policy.u.values
        if u.shape[1] != game.m:
            raise ValueError(f"control has width {u.shape[1]}, expected {game.m}")
        return Strategy(None, u[:, r1]), Strategy(None, u[:, r2])
    raise TypeError(f"unsupported policy {type(policy).__name__}")


def _check_strategies(game: ValidatedGame, grid: TimeGrid, strats) -> None:
    N = grid.n_steps + 1
    for i, st in enumerate(strats, start=1):
        mi = len(range(*game.rows(i).indices(game.m)))
        if st.offset.shape != (N, mi):
            raise ValueError(f"player {i} offset has shape {st.offset.shape}, expected {(N, mi)}")
        if st.theta is not None and st.theta.shape != (N, mi, game.n):
            raise ValueError(f"player {i} gain has shape {st.theta.shape}, expected {(N, mi, game.n)}")


def _write_controls(strats, Z: np.ndarray, Xref: np.ndarray, n: int, k: int) -> None:
    """Fill the control rows ``Z[n:]`` from the state rows ``Z[:n]`` at grid point ``k``."""
    X = Z[:n]
    r = n
    for st in strats:
        mi = st.offset.shape[1]
        u = Z[r:r + mi]
        if st.theta is not None:
            np.matmul(st.theta[k], Xref if st.frozen else X, out=u)
            u += st.offset[k][:, None]
        else:
            u[...] = st.offset[k][:, None]
        r += mi


# ---------------------------------------------------------------------------
# Path simulation and costs
# ---------------------------------------------------------------------------


Visitor = Callable[[int, np.ndarray, np.ndarray], None]


def _rollout(
    game: ValidatedGame,
    policy: Policy,
    x0,
    grid: TimeGrid,
    noise: NoisePlan,
    visit: Visitor | None = None,
) -> np.ndarray:
    """Simulate ``policy`` and return per-path costs of both players, shape ``(2, n_paths)``."""
    if grid != game.grid:
        raise ValueError("policy grid differs from the game grid")
    strats = strategies(policy, game)
    _check_strategies(game, grid, strats)
    ref_strats = None
    if any(st.frozen and st.theta is not None for st in strats):
        if not isinstance(policy, Profile) or policy.reference is None:
            raise ValueError("frozen strategies need a reference policy")
        ref_strats = strategies(policy.reference, game)
        if any(st.frozen for st in ref_strats):
            raise ValueError("reference policy cannot itself contain frozen strategies")
        _check_strategies(game, grid, ref_strats)

    # Paths are stored column-wise: Z = [X; u] has shape (n + m, n_paths).
    P, n, N = noise.n_paths, game.n, grid.n_steps
    x0 = np.asarray(x0, dtype=float).reshape(n)
    coef = _StepData(game, P)
    Z = np.empty((n + game.m, P))
    Z[:n] = x0[:, None]
    Zr = None
    if ref_strats is not None:
        Zr = np.empty_like(Z)
        Zr[:n] = x0[:, None]
    dW = np.empty(P)
    costs = np.zeros((2, P))
    sqrt_dt = math.sqrt(grid.dt)

    # Overflow surfaces as BlowUp below, so floating-point warnings are redundant.
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(N + 1):
            if Zr is not None:
                _write_controls(ref_strats, Zr, Zr[:n], n, k)
            _write_controls(strats, Z, None if Zr is None else Zr[:n], n, k)
            if visit is not None:
                visit(k, Z[:n].T, Z[n:].T)
            # Trapezoidal rule in time for the running cost.
            coef.add_running(costs, Z, k, 0.5 if k in (0, N) else 1.0)
            if k == N:
                break
            noise.generator(k).standard_normal(out=dW)
            dW *= sqrt_dt
            if Zr is not None:
                coef.step(Zr, k, dW)
            coef.step(Z, k, dW)
            if (k % 64 == 63 or k == N - 1) and not np.all(np.isfinite(Z[:n])):
                raise BlowUp(float(grid.points[k + 1]), float("inf"), float("inf"))
    X = Z[:n]
    GX = (game.G.reshape(2 * n, n) @ X).reshape(2, n, P)
    costs += np.sum(GX * X[None], axis=1) + 2.0 * game.g @ X
    return costs


class _StepData:
    """Grid-point coefficients arranged for vectorized path updates.

    With ``Z = [X; u]`` stored column-wise, the running costs of both players
    are ``c_i^T (Z_a Z_b)_{a <= b} + w_i^T Z`` and the Euler step uses
    ``[A B] Z`` and ``[C D] Z``. Weights and drift are premultiplied by ``dt``.
    """

    def __init__(self, game: ValidatedGame, n_paths: int):
        j = slice(None, None, 2)
        n, m = game.n, game.m
        k = n + m
        dt = game.grid.dt
        Q, S, R = (np.swapaxes(a[:, j], 0, 1) for a in (game.Q, game.S, game.R))
        W = np.zeros(Q.shape[:2] + (k, k))
        W[:, :, :n, :n] = Q
        W[:, :, n:, :n] = S
        W[:, :, :n, n:] = np.swapaxes(S, -1, -2)
        W[:, :, n:, n:] = R
        self.pairs = [(a, b) for a in range(k) for b in range(a, k)]
        ia, ib = np.array(self.pairs).T if self.pairs else (np.zeros(0, int), np.zeros(0, int))
        # Off-diagonal products appear twice in the quadratic form.
        self.c = np.ascontiguousarray(dt * W[:, :, ia, ib] * np.where(ia == ib, 1.0, 2.0))
        w = np.concatenate([game.q[:, j], game.rho[:, j]], axis=2)
        self.w = np.ascontiguousarray(2.0 * dt * np.swapaxes(w, 0, 1))
        self.drift = dt * np.concatenate([game.A[j], game.B[j]], axis=2)
        self.b = dt * game.b[j][:, :, None]
        self.diff = np.concatenate([game.C[j], game.D[j]], axis=2)
        self.sigma = game.sigma[j][:, :, None]
        self.n = n
        self.prod = np.empty((len(self.pairs), n_paths))
        self.tmp = np.empty((2, n, n_paths))
        self.acc = np.empty((2, n_paths))

    def add_running(self, costs: np.ndarray, Z: np.ndarray, k: int, weight: float = 1.0) -> None:
        """Accumulate ``weight * dt`` times the running costs into ``costs`` (shape ``(2, n_paths)``)."""
        for r, (a, b) in enumerate(self.pairs):
            np.multiply(Z[a], Z[b], out=self.prod[r])
        np.matmul(self.c[k], self.prod, out=self.acc)
        if weight != 1.0:
            self.acc *= weight
        costs += self.acc
        np.matmul(self.w[k], Z, out=self.acc)
        if weight != 1.0:
            self.acc *= weight
        costs += self.acc

    def step(self, Z: np.ndarray, k: int, dW: np.ndarray) -> None:
        """Advance the state rows of ``Z`` in place by one Euler step."""
        drift, diff = self.tmp
        np.matmul(self.drift[k], Z, out=drift)
        np.matmul(self.diff[k], Z, out=diff)
        diff += self.sigma[k]
        diff *= dW
        drift += self.b[k]
        X = Z[: self.n]
        X += drift
        X += diff


@dataclass(frozen=True, eq=False)
class SimulatedPaths:
    """States ``(n_steps + 1, n_paths, n)`` and controls ``(n_steps + 1, n_paths, m)``."""

    grid: TimeGrid
    states: np.ndarray
    controls: np.ndarray

    def to_csv(self, out_dir: str | Path, prefix: str = "path") -> list[Path]:
        """Write one CSV per path with columns ``s``, state entries, control entries."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        n, m = self.states.shape[2], self.controls.shape[2]
        header = ",".join(["s"] + [f"X[{i}]" for i in range(n)] + [f"u[{i}]" for i in range(m)])
        files = []
        for p in range(self.states.shape[1]):
            rows = np.column_stack([self.grid.points, self.states[:, p], self.controls[:, p]])
            f = out_dir / f"{prefix}_{p:06d}.csv"
            np.savetxt(f, rows, delimiter=",", header=header, comments="", fmt="%.17g")
            files.append(f)
        return files


def simulate_paths(
    game: ValidatedGame, policy: Policy, x0, grid: TimeGrid, noise: NoisePlan
) -> SimulatedPaths:
    """Euler-Maruyama paths ``X_{k+1} = X_k + (A X_k + B u_k + b) dt + (C X_k + D u_k + sigma) dW_k``."""
    N = grid.n_steps
    states = np.empty((N + 1, noise.n_paths, game.n))
    controls = np.empty((N + 1, noise.n_paths, game.m))

    def visit(k, X, u):
        states[k], controls[k] = X, u

    _rollout(game, policy, x0, grid, noise, visit)
    return SimulatedPaths(grid, states, controls)


def mc_cost(
    game: ValidatedGame, player: int, policy: Policy, x0, grid: TimeGrid, noise: NoisePlan
) -> McReport:
    """Monte Carlo estimate of ``J^player`` under ``policy`` from ``(t0, x0)``."""
    costs = _rollout(game, policy, x0, grid, noise)
    return McReport.from_samples(costs[_player_index(player)], noise.seed)


def mc_costs(
    game: ValidatedGame, policy: Policy, x0, grid: TimeGrid, noise: NoisePlan
) -> tuple[McReport, McReport]:
    """Monte Carlo estimates of ``(J^1, J^2)`` from a single set of paths."""
    costs = _rollout(game, policy, x0, grid, noise)
    return McReport.from_samples(costs[0], noise.seed), McReport.from_samples(costs[1], noise.seed)


def _player_index(player: int) -> int:
    if player not in (1, 2):
        raise ValueError(f"player must be 1 or 2, got {player}")
    return player - 1


# ---------------------------------------------------------------------------
# Deterministic values
# ---------------------------------------------------------------------------


def analytic_value(P: MatrixPath, offsets: OffsetSolution, game: ValidatedGame, x0, player: int = 1) -> float:
    """``<P(t0) x0, x0> + 2 <eta(t0), x0> + c(t0)`` for the given player.

    ``offsets`` must carry ``value_const`` (closed-loop, zero-sum and
    single-player solutions do).
    """
    if offsets.value_const is None:
        raise ValueError("these offsets carry no value function constant")
    i = _player_index(player)
    x0 = np.asarray(x0, dtype=float).reshape(game.n)
    eta = (offsets.eta1, offsets.eta2)[i].values[0]
    return float(x0 @ P.values[0] @ x0 + 2.0 * eta @ x0 + offsets.value_const[0, i])


def policy_value(
    game: ValidatedGame, policy: ClosedLoop, x0, opts: SolverOptions = DEFAULT_OPTIONS
) -> tuple[float, float]:
    """Exact costs ``(J^1, J^2)`` of the affine feedback ``policy`` from ``(t0, x0)``."""
    P1, P2 = solve_lyapunov(game, policy.Theta, opts=opts)
    off = solve_feedback_offsets(game, P1, P2, policy.Theta, policy.v, opts=opts)
    return analytic_value(P1, off, game, x0, 1), analytic_value(P2, off, game, x0, 2)


# ---------------------------------------------------------------------------
# Stationarity along paths
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StationarityReport:
    """Max and RMS of the first-order condition over paths and grid points."""

    max: float
    rms: float
    per_player_max: tuple[float, float]
    n_paths: int
    max_state: float


def stationarity_residual(
    game: ValidatedGame,
    Pi1: MatrixPath,
    Pi2: MatrixPath,
    offsets: OffsetSolution,
    Theta: MatrixPath,
    v: VectorPath,
    grid: TimeGrid,
    noise: NoisePlan,
    x0=None,
) -> StationarityReport:
    """First-order condition of each player along simulated representation paths.

    With ``Y_i = Pi_i X + eta_i``, ``Z_i = Pi_i (C + D Theta) X + Pi_i (D v + sigma)
    + zeta_i`` and ``u = Theta X + v`` evaluates
    ``B_i^T Y_i + D_i^T Z_i + S^i_i X + R^i_i u + rho^i_i`` at every grid point.
    """
    x0 = np.ones(game.n) if x0 is None else np.asarray(x0, dtype=float)
    Pis = (Pi1.values, Pi2.values)
    etas = (offsets.eta1.values, offsets.eta2.values)
    zetas = (offsets.zeta1.values, offsets.zeta2.values)
    Th, vv = Theta.values, v.values
    per_max = [0.0, 0.0]
    sumsq = [0.0]
    count = [0]
    xmax = [0.0]

    def visit(k, X, u):
        j = 2 * k
        C, D, B = game.C[j], game.D[j], game.B[j]
        Ccl = C + D @ Th[k]
        xmax[0] = max(xmax[0], float(np.max(np.abs(X))))
        for i in (0, 1):
            rows = game.rows(i + 1)
            if rows.stop == rows.start:
                continue
            Pi = Pis[i][k]
            Y = X @ Pi.T + etas[i][k]
            Z = X @ (Pi @ Ccl).T + Pi @ (D @ vv[k] + game.sigma[j]) + zetas[i][k]
            r = (
                Y @ B[:, rows] + Z @ D[:, rows] + X @ game.S[i, j][rows].T
                + u @ game.R[i, j][rows].T + game.rho[i, j][rows]
            )
            per_max[i] = max(per_max[i], float(np.max(np.abs(r))))
            sumsq[0] += float(np.sum(r * r))
            count[0] += r.size

    _rollout(game, ClosedLoop(Theta, v), x0, grid, noise, visit)
    rms = math.sqrt(sumsq[0] / count[0]) if count[0] else 0.0
    return StationarityReport(max(per_max), rms, (per_max[0], per_max[1]), noise.n_paths, xmax[0])


# ---------------------------------------------------------------------------
# Convexity probe
# ---------------------------------------------------------------------------

Direction = Union[Callable[[float], np.ndarray], VectorPath]


def direction_library(game: ValidatedGame, player: int) -> dict[str, Callable[[float], np.ndarray]]:
    """Deterministic control directions for one player.

    For each unit vector ``e`` of the player's control space: the constant
    ``e``, ``e`` on the first and on the second half of the horizon, and
    ``e sin`` / ``e cos`` with one full period over the horizon.
    """
    grid = game.grid
    rows = game.rows(player)
    mi = rows.stop - rows.start
    t0, L = grid.t0, grid.T - grid.t0
    mid = t0 + 0.5 * L
    out: dict[str, Callable[[float], np.ndarray]] = {}
    for a in range(mi):
        e = np.zeros(mi)
        e[a] = 1.0
        out[f"const[{a}]"] = lambda s, e=e: e
        out[f"first-half[{a}]"] = lambda s, e=e: e * (s <= mid)
        out[f"second-half[{a}]"] = lambda s, e=e: e * (s >= mid)
        out[f"sin[{a}]"] = lambda s, e=e: e * math.sin(2 * math.pi * (s - t0) / L)
        out[f"cos[{a}]"] = lambda s, e=e: e * math.cos(2 * math.pi * (s - t0) / L)
    return out


@dataclass(frozen=True)
class ConvexityReport:
    """Normalized quadratic-form values ``value / int |u|^2`` per direction."""

    player: int
    minimum: float
    values: dict


def convexity_probe(
    game: ValidatedGame,
    player: int,
    grid: TimeGrid | None = None,
    directions: dict[str, Direction] | None = None,
) -> ConvexityReport:
    """Evaluate the homogeneous cost form of ``player`` along deterministic directions.

    For ``dX = (A X + B_i u) ds + (C X + D_i u) dW``, ``X(t0) = 0`` the mean
    ``m`` and second moment ``M`` solve ``m' = A m + B_i u`` and
    ``M' = A M + M A^T + (C M C^T + C m w^T + w m^T C^T + w w^T)`` with
    ``w = D_i u`` (plus the drift cross terms ``B_i u m^T + m u^T B_i^T``).
    The form ``tr(G M(T)) + int [tr(Q M) + 2 u^T S_ii m + u^T R_ii u] ds`` is
    integrated with RK4 and divided by ``int |u|^2 ds``. A negative minimum
    certifies that the player's cost is not convex; a nonnegative one is only
    a necessary condition.
    """
    grid = game.grid if grid is None else grid
    if grid != game.grid:
        raise ValueError("grid differs from the game grid")
    i = _player_index(player)
    rows = game.rows(player)
    n = game.n
    if directions is None:
        directions = direction_library(game, player)
    hs = grid.half_points
    values = {}
    for name, d in directions.items():
        U = _direction_samples(d, grid, hs)
        if U.shape[1] != rows.stop - rows.start:
            raise ValueError(f"direction {name} has dimension {U.shape[1]}")

        def rhs(j, y, U=U):
            mvec, M = y[:n], y[n:n + n * n].reshape(n, n)
            u = U[j]
            A, C = game.A[j], game.C[j]
            Bi, Di = game.B[j][:, rows], game.D[j][:, rows]
            Bu, w = Bi @ u, Di @ u
            Cm = C @ mvec
            dM = A @ M + M @ A.T + np.outer(Bu, mvec) + np.outer(mvec, Bu)
            dM += C @ M @ C.T + np.outer(Cm, w) + np.outer(w, Cm) + np.outer(w, w)
            run = (
                np.sum(game.Q[i, j] * M)
                + 2.0 * u @ game.S[i, j][rows] @ mvec
                + u @ game.R[i, j][rows, rows] @ u
            )
            return np.concatenate([A @ mvec + Bu, dM.ravel(), [run, u @ u]])

        y = rk4_forward(rhs, np.zeros(n + n * n + 2), grid)[-1]
        M_T = y[n:n + n * n].reshape(n, n)
        value = float(np.sum(game.G[i] * M_T) + y[-2])
        norm = float(y[-1])
        values[name] = value / norm if norm > 0 else 0.0
    minimum = min(values.values()) if values else 0.0
    return ConvexityReport(player, minimum, values)


def _direction_samples(d: Direction, grid: TimeGrid, hs: np.ndarray) -> np.ndarray:
    if isinstance(d, VectorPath):
        vals = d.values
        out = np.empty((len(hs), vals.shape[1]))
        out[0::2] = vals
        out[1::2] = 0.5 * (vals[:-1] + vals[1:])
        return out
    return np.array([np.atleast_1d(np.asarray(d(float(s)), dtype=float)) for s in hs])


# ---------------------------------------------------------------------------
# Unilateral deviation test
# ---------------------------------------------------------------------------


def deviation_library(
    game: ValidatedGame,
    player: int,
    equilibrium: Strategy | None = None,
    impulse: float = 10.0,
    shift: float = 0.2,
) -> list[tuple[str, Strategy]]:
    """Finite family of unilateral deviations for ``player``.

    Open-loop controls: constants ``+-e``, single-step impulses of size
    ``impulse`` at the first and the middle step, and one-period sinusoids.
    When the equilibrium strategy is given: scaled copies (factors 0, 0.5,
    1.5) and the equilibrium shifted by ``+-shift e`` or ``shift e sin``.
    """
    grid = game.grid
    rows = game.rows(player)
    mi = rows.stop - rows.start
    N = grid.n_steps
    s = grid.points
    phase = 2 * np.pi * (s - grid.t0) / (grid.T - grid.t0)
    out: list[tuple[str, Strategy]] = []
    for a in range(mi):
        e = np.zeros(mi)
        e[a] = 1.0
        const = np.tile(e, (N + 1, 1))
        sin = np.sin(phase)[:, None] * e
        out.append((f"const+[{a}]", Strategy(None, const)))
        out.append((f"const-[{a}]", Strategy(None, -const)))
        for k, label in ((0, "first"), (N // 2, "mid")):
            imp = np.zeros((N + 1, mi))
            imp[k] = impulse * e
            out.append((f"impulse-{label}[{a}]", Strategy(None, imp)))
        out.append((f"sin[{a}]", Strategy(None, sin)))
        out.append((f"cos[{a}]", Strategy(None, np.cos(phase)[:, None] * e)))
        if equilibrium is not None:
            out.append((f"eq+shift[{a}]", equilibrium.shifted(shift * const)))
            out.append((f"eq-shift[{a}]", equilibrium.shifted(-shift * const)))
            out.append((f"eq+sin[{a}]", equilibrium.shifted(shift * sin)))
    if equilibrium is not None:
        for lam in (0.0, 0.5, 1.5):
            out.append((f"eq*{lam:g}", equilibrium.scaled(lam)))
    return out


@dataclass(frozen=True)
class DeviationResult:
    name: str
    cost: McReport
    diff_mean: float
    diff_stderr: float
    passed: bool


@dataclass(frozen=True)
class PlayerDeviationReport:
    player: int
    equilibrium_cost: McReport
    results: list
    passed: bool

    @property
    def worst(self) -> DeviationResult | None:
        """Deviation with the smallest ``diff_mean + 3 stderr``."""
        if not self.results:
            return None
        return min(self.results, key=lambda r: r.diff_mean + 3.0 * r.diff_stderr)


@dataclass(frozen=True)
class NashReport:
    concept: str
    players: dict
    passed: bool


def unilateral(
    game: ValidatedGame, equilibrium: Policy, player: int, deviation: Strategy, concept: str
) -> Profile:
    """Profile where ``player`` switches to ``deviation`` and the opponent does not.

    Under ``concept="closed"`` the opponent keeps its feedback law applied to
    the new state; under ``concept="open"`` it keeps the control process it
    used at equilibrium.
    """
    s1, s2 = strategies(equilibrium, game)
    if concept not in ("closed", "open"):
        raise ValueError("concept must be 'closed' or 'open'")
    frozen = concept == "open"
    if player == 1:
        other = Strategy(s2.theta, s2.offset, frozen)
        return Profile((deviation, other), equilibrium if frozen else None)
    other = Strategy(s1.theta, s1.offset, frozen)
    return Profile((other, deviation), equilibrium if frozen else None)


def nash_deviation_test(
    game: ValidatedGame,
    equilibrium: Policy,
    x0,
    grid: TimeGrid,
    noise: NoisePlan,
    deviations: dict[int, Sequence[tuple[str, Strategy]]] | None = None,
    concept: str = "closed",
    players: Sequence[int] = (1, 2),
    sigmas: float = 3.0,
) -> NashReport:
    """Compare each player's cost at equilibrium and under unilateral deviations.

    All runs share ``noise`` (common random numbers). A deviation passes when
    ``mean(J_dev - J_eq) >= -sigmas * stderr(J_dev - J_eq)``.
    """
    eq = strategies(equilibrium, game)
    base = _rollout(game, equilibrium, x0, grid, noise)
    reports = {}
    for p in players:
        i = _player_index(p)
        devs = deviations[p] if deviations is not None else deviation_library(game, p, eq[i])
        results = []
        for name, dev in devs:
            costs = _rollout(game, unilateral(game, equilibrium, p, dev, concept), x0, grid, noise)
            d = McReport.from_samples(costs[i] - base[i], noise.seed)
            results.append(
                DeviationResult(
                    name, McReport.from_samples(costs[i], noise.seed), d.mean, d.stderr,
                    d.mean >= -sigmas * d.stderr,
                )
            )
        reports[p] = PlayerDeviationReport(
            p, McReport.from_samples(base[i], noise.seed), results, all(r.passed for r in results)
        )
    return NashReport(concept, reports, all(r.passed for r in reports.values()))


# ---------------------------------------------------------------------------
# Discrete-time oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiscreteSolution:
    """Value matrices and feedback of the Euler-discretized game."""

    P1: MatrixPath
    P2: MatrixPath
    Theta: MatrixPath
    condition_numbers: np.ndarray


def discrete_oracle(
    game: ValidatedGame, grid: TimeGrid | None = None, opts: SolverOptions = DEFAULT_OPTIONS
) -> DiscreteSolution:
    """Feedback Nash equilibrium of the Euler-discretized game by backward induction.

    At step ``k`` with ``F = I + A dt`` each player's one-step optimality
    condition reads ``(B_i^T P_i F + D_i^T P_i C + S^i_i) x
    + (R^i_i + D_i^T P_i D + dt B_i^T P_i B) u = 0``; the stacked system is
    solved for the feedback and ``P_i`` is updated with the exact one-step
    expected cost. Coefficients are taken at the left endpoint.
    """
    grid = game.grid if grid is None else grid
    if grid != game.grid:
        raise ValueError("grid differs from the game grid")
    n, m, N, dt = game.n, game.m, grid.n_steps, grid.dt
    P = np.empty((N + 1, 2, n, n))
    Th = np.empty((N + 1, m, n))
    conds = np.empty(N + 1)
    P[N] = game.G
    I = np.eye(n)
    for k in range(N - 1, -1, -1):
        j = 2 * k
        A, B, C, D = game.A[j], game.B[j], game.C[j], game.D[j]
        F = I + dt * A
        Pn = P[k + 1]
        Ms, Ns = [], []
        for i in (0, 1):
            rows = game.rows(i + 1)
            Pi = Pn[i]
            Ms.append((game.R[i, j] + D.T @ Pi @ D + dt * B.T @ Pi @ B)[rows])
            Ns.append((B.T @ Pi @ F + D.T @ Pi @ C + game.S[i, j])[rows])
        Theta, conds[k], _ = solve_coupling(np.vstack(Ms), np.vstack(Ns), opts, float(grid.points[k]))
        Th[k] = Theta
        Fcl = F + dt * B @ Theta
        Ccl = C + D @ Theta
        for i in (0, 1):
            Pi = Pn[i]
            ST = Theta.T @ game.S[i, j]
            new = dt * (game.Q[i, j] + ST + ST.T + Theta.T @ game.R[i, j] @ Theta)
            new += Fcl.T @ Pi @ Fcl + dt * Ccl.T @ Pi @ Ccl
            P[k, i] = 0.5 * (new + new.T)
    # The feedback at T is not defined by the recursion; repeat the last one.
    Th[N] = Th[N - 1]
    conds[N] = conds[N - 1]
    return DiscreteSolution(MatrixPath(grid, P[:, 0]), MatrixPath(grid, P[:, 1]), MatrixPath(grid, Th), conds)
