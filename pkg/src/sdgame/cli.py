"""Command-line front end.

Subcommands::

    sdgame solve   --kind {closed-loop,open-rep,zero-sum,slq} --instance FILE --out DIR [--dt-steps N]
    sdgame verify  --instance FILE --solution DIR --checks LIST [--seed S --paths P]
    sdgame example ID --out DIR

``--instance`` also accepts ``builtin:<name>`` for the built-in games. Every
command writes ``report.json`` and ``summary.txt`` to its output directory
and exits with 0 when every check passed, 1 when a check failed or a solver
reported infeasibility, and 2 on usage, parse or file errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import examples as ex
from .bsde import (
    OffsetSolution,
    solve_closed_loop_offsets,
    solve_open_rep_offsets,
    solve_slq_offsets,
    solve_zero_sum_offsets,
)
from .errors import BlowUp, GameError, Infeasible, InfeasibleReason, NotZeroSum
from .instance import InstanceError, digest, load_document, parse_document, spec_to_document
from .model import GameSpec, TimeGrid, ValidatedGame, slq_data, validate, zero_sum_reduce
from .paths import MatrixPath, VectorPath
from .riccati import (
    DEFAULT_OPTIONS,
    closed_loop_coupling,
    solve_closed_loop_nash,
    solve_open_loop_rep,
    solve_slq,
    solve_zero_sum,
)
from .simulate import (
    ClosedLoop,
    NoisePlan,
    OpenLoop,
    analytic_value,
    convexity_probe,
    mc_costs,
    nash_deviation_test,
    policy_value,
    stationarity_residual,
    strategies,
)

KINDS = ("closed-loop", "open-rep", "zero-sum", "slq")
CHECKS = ("stationarity", "convexity", "deviation", "value")

BUILTIN_GAMES: dict[str, Callable[[], GameSpec]] = {
    "singular-coupling": ex.singular_coupling_game,
    "indefinite-player": ex.indefinite_player_game,
    "distinct-outcomes": ex.distinct_outcomes_game,
    "scalar-zero-sum": ex.scalar_zero_sum_game,
    "scalar-regulator": ex.scalar_regulator,
    "geometric-noise": ex.geometric_noise_game,
}

# Numeric aliases kept for compatibility with the documented example ids.
EXAMPLE_ALIASES = {
    "6.1": "singular-coupling",
    "6.2": "indefinite-player",
    "6.3": "distinct-outcomes",
}

DEFAULT_SEED = 42
DEFAULT_PATHS = 100_000
DEFAULT_DEVIATION_PATHS = 10_000
STATIONARITY_TOL = 1e-5
CONVEXITY_TOL = 1e-8
CLOSED_FORM_TOL = 1e-6
COINCIDENCE_TOL = 1e-8


class UsageError(Exception):
    """Bad arguments or unusable input files (exit code 2)."""


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, Path):
        return str(x)
    return x


@dataclass
class Check:
    name: str
    passed: bool
    values: dict = field(default_factory=dict)


@dataclass
class RunReport:
    """Outcome of one command: solver status, checks and written files."""

    command: str
    instance_digest: str | None = None
    status: str = "Feasible"
    checks: list = field(default_factory=list)
    files: list = field(default_factory=list)

    def add(self, name: str, passed: bool, **values) -> Check:
        c = Check(name, bool(passed), values)
        self.checks.append(c)
        return c

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_record(self) -> dict:
        return _jsonable({
            "command": self.command,
            "instance_digest": self.instance_digest,
            "status": self.status,
            "passed": self.passed,
            "checks": [{"name": c.name, "passed": c.passed, **c.values} for c in self.checks],
            "files": sorted(str(f) for f in self.files),
        })

    def summary(self) -> str:
        lines = [f"{self.command}: status {self.status}"]
        if self.instance_digest:
            lines.append(f"instance {self.instance_digest}")
        for c in self.checks:
            nums = " ".join(f"{k}={_fmt(v)}" for k, v in c.values.items() if not isinstance(v, (dict, list)))
            lines.append(f"{'PASS' if c.passed else 'FAIL'}  {c.name}  {nums}".rstrip())
        lines.append("overall " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)

    def write(self, out_dir: Path) -> None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(json.dumps(self.to_record(), indent=2) + "\n")
        (out_dir / "summary.txt").write_text(self.summary() + "\n")


def _fmt(v: Any) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    if isinstance(v, np.ndarray):
        return np.array2string(v, precision=6, separator=",").replace("\n", "").replace(" ", "")
    return str(v)


def _fail_status(report: RunReport, exc: GameError) -> None:
    report.status = exc.status
    values = {"message": str(exc)}
    if isinstance(exc, Infeasible):
        values.update(reason=exc.reason.value, s=exc.s, residual=exc.residual)
    elif isinstance(exc, BlowUp):
        values.update(s=exc.s, norm=exc.norm)
    report.add("solver", False, **values)


# ---------------------------------------------------------------------------
# Instances and solutions
# ---------------------------------------------------------------------------


def resolve_instance(arg: str) -> tuple[dict, GameSpec, TimeGrid]:
    """Load ``arg`` as a JSON file or a ``builtin:<name>`` game."""
    if arg.startswith("builtin:"):
        name = arg.split(":", 1)[1]
        name = EXAMPLE_ALIASES.get(name, name)
        if name not in BUILTIN_GAMES:
            raise UsageError(f"unknown built-in game {name!r}; choose from {sorted(BUILTIN_GAMES)}")
        spec, grid = BUILTIN_GAMES[name](), ex.default_grid()
        return spec_to_document(spec, grid), spec, grid
    path = Path(arg)
    if not path.is_file():
        raise UsageError(f"instance file {arg} not found")
    doc = load_document(path)
    spec, grid = parse_document(doc)
    return doc, spec, grid


def _write_solution(kind: str, game: ValidatedGame, out: Path, report: RunReport) -> dict[str, str]:
    """Run the solver pair for ``kind``; write CSV paths and return the file map."""
    grid = game.grid
    mats: dict[str, MatrixPath] = {}
    vecs: dict[str, VectorPath] = {}
    if kind == "closed-loop":
        sol = solve_closed_loop_nash(game)
        off = solve_closed_loop_offsets(game, sol.P1, sol.P2, sol.Theta_star)
        mats.update(P1=sol.P1, P2=sol.P2, Theta=sol.Theta_star)
        report.add(
            "certificates", True,
            P1_t0=sol.P1[0], P2_t0=sol.P2[0], Theta_t0=sol.Theta_star[0],
            min_psd_margin=float(sol.psd_margins.min()),
            max_stationarity_residual=float(sol.stationarity_residuals.max()),
            max_condition_number=float(sol.condition_numbers.max()),
            max_offset_residual=float(off.residuals.max()),
        )
    elif kind == "open-rep":
        sol = solve_open_loop_rep(game)
        off = solve_open_rep_offsets(game, sol.Pi1, sol.Pi2)
        mats.update(Pi1=sol.Pi1, Pi2=sol.Pi2, Theta=sol.Theta)
        report.add(
            "certificates", True,
            Pi1_t0=sol.Pi1[0], Pi2_t0=sol.Pi2[0], Theta_t0=sol.Theta[0],
            max_coupling_residual=float(sol.residuals.max()),
            max_condition_number=float(sol.condition_numbers.max()),
            max_offset_residual=float(off.residuals.max()),
        )
    else:
        if kind == "zero-sum":
            reduced = zero_sum_reduce(game)
            sol = solve_zero_sum(reduced)
            off = solve_zero_sum_offsets(reduced, sol.P)
        else:
            if game.m2 != 0:
                raise UsageError("kind slq needs an instance with m2 = 0")
            reduced = slq_data(game)
            sol = solve_slq(reduced)
            off = solve_slq_offsets(reduced, sol.P)
        mats.update(P=sol.P, Theta=sol.Theta0, projector=sol.projector)
        report.add(
            "certificates", True,
            P_t0=sol.P[0], Theta_t0=sol.Theta0[0],
            min_sign_margin=float(sol.margins.min()),
            max_range_residual=float(sol.range_residuals.max()),
            max_offset_residual=float(off.residuals.max()),
        )
    vecs.update(eta1=off.eta1, eta2=off.eta2, v=off.v)
    if off.value_const is not None:
        vecs["c"] = VectorPath(grid, off.value_const)
    files = {}
    for name, p in mats.items():
        files[name] = p.to_csv(out / f"{name}.csv", name).name
    for name, p in vecs.items():
        files[name] = p.to_csv(out / f"{name}.csv", name).name
    return files


def cmd_solve(kind: str, instance: str, out: Path, dt_steps: int | None = None) -> RunReport:
    """Solve ``instance`` for the equilibrium concept ``kind`` and write CSV paths."""
    doc, spec, grid = resolve_instance(instance)
    if dt_steps is not None:
        grid = grid.with_steps(dt_steps)
    report = RunReport("solve", digest(doc))
    game = validate(spec, grid)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "kind": kind,
        "instance_digest": report.instance_digest,
        "grid": {"t0": grid.t0, "T": grid.T, "n_steps": grid.n_steps},
        "files": {},
    }
    try:
        manifest["files"] = _write_solution(kind, game, out, report)
    except NotZeroSum as exc:
        raise UsageError(f"kind zero-sum needs a zero-sum instance: {exc}") from None
    except (Infeasible, BlowUp) as exc:
        _fail_status(report, exc)
    manifest["status"] = report.status
    (out / "solution.json").write_text(json.dumps(manifest, indent=2) + "\n")
    report.files = [out / f for f in manifest["files"].values()] + [out / "solution.json"]
    report.add("solver-status", report.status == "Feasible", kind=kind, n_steps=grid.n_steps)
    return report


@dataclass
class LoadedSolution:
    kind: str
    game: ValidatedGame
    mats: dict
    vecs: dict

    @property
    def policy(self) -> ClosedLoop:
        return ClosedLoop(self.mats["Theta"], self.vecs["v"])


def load_solution(instance: str, sol_dir: Path) -> tuple[str, LoadedSolution]:
    """Read a solution directory written by :func:`cmd_solve` and check it matches ``instance``."""
    manifest_path = sol_dir / "solution.json"
    if not manifest_path.is_file():
        raise UsageError(f"{manifest_path} not found")
    manifest = json.loads(manifest_path.read_text())
    doc, spec, grid = resolve_instance(instance)
    dig = digest(doc)
    if manifest.get("instance_digest") != dig:
        raise UsageError(f"solution was computed for {manifest.get('instance_digest')}, instance is {dig}")
    if manifest.get("status") != "Feasible":
        raise UsageError(f"solution status is {manifest.get('status')}; nothing to verify")
    g = manifest["grid"]
    if (g["t0"], g["T"]) != (grid.t0, grid.T):
        raise UsageError("solution horizon differs from the instance horizon")
    grid = grid.with_steps(int(g["n_steps"]))
    game = validate(spec, grid)
    kind = manifest["kind"]
    mats, vecs = {}, {}
    for name, fname in manifest["files"].items():
        f = sol_dir / fname
        if not f.is_file():
            raise UsageError(f"solution file {f} is missing")
        try:
            if name in ("P1", "P2", "Pi1", "Pi2", "P", "Theta", "projector"):
                mats[name] = MatrixPath.from_csv(f, grid)
            else:
                vecs[name] = VectorPath.from_csv(f, grid)
        except (ValueError, KeyError) as exc:
            raise UsageError(f"cannot read {f}: {exc}") from None
    return dig, LoadedSolution(kind, game, mats, vecs)


# ---------------------------------------------------------------------------
# Verification checks
# ---------------------------------------------------------------------------


def _players(sol: LoadedSolution) -> tuple[int, ...]:
    return (1,) if sol.game.m2 == 0 else (1, 2)


def check_stationarity(sol: LoadedSolution, report: RunReport, noise: NoisePlan, x0) -> None:
    game, grid = sol.game, sol.game.grid
    Theta = sol.mats["Theta"]
    if sol.kind == "closed-loop":
        P = np.stack([sol.mats["P1"].values, sol.mats["P2"].values], axis=1)
        worst = 0.0
        for k in range(grid.n_steps + 1):
            M, N = closed_loop_coupling(game, 2 * k, P[k])
            worst = max(worst, float(np.max(np.abs(M @ Theta[k] + N))) if M.size else 0.0)
        report.add("stationarity", worst <= STATIONARITY_TOL, form="closed-loop coupling", max=worst,
                   tol=STATIONARITY_TOL)
        return
    if sol.kind == "open-rep":
        Pi1, Pi2 = sol.mats["Pi1"], sol.mats["Pi2"]
    else:
        Pi1 = sol.mats["P"]
        sign = -1.0 if sol.kind == "zero-sum" else 0.0
        Pi2 = MatrixPath(grid, sign * Pi1.values)
    z = VectorPath(grid, np.zeros((grid.n_steps + 1, game.n)))
    off = OffsetSolution(sol.vecs["eta1"], sol.vecs["eta2"], z, z, sol.vecs["v"], np.zeros(grid.n_steps + 1))
    r = stationarity_residual(game, Pi1, Pi2, off, Theta, sol.vecs["v"], grid, noise, x0=x0)
    report.add("stationarity", r.max <= STATIONARITY_TOL, form="adjoint along paths", max=r.max, rms=r.rms,
               n_paths=r.n_paths, tol=STATIONARITY_TOL)


def check_convexity(sol: LoadedSolution, report: RunReport) -> None:
    for p in _players(sol):
        r = convexity_probe(sol.game, p)
        worst = min(r.values, key=r.values.get) if r.values else None
        report.add(f"convexity-player{p}", r.minimum >= -CONVEXITY_TOL, minimum=r.minimum,
                   direction=worst, tol=CONVEXITY_TOL)


def check_deviation(sol: LoadedSolution, report: RunReport, noise: NoisePlan, x0) -> None:
    game, policy = sol.game, sol.policy
    concept = "open" if sol.kind == "open-rep" else "closed"
    players = _players(sol)
    eq = strategies(policy, game)
    selfdev = {p: [("equilibrium", eq[p - 1])] for p in players}
    same = nash_deviation_test(game, policy, x0, game.grid, noise, selfdev, concept, players)
    diffs = {p: same.players[p].results[0].diff_mean for p in players}
    report.add("deviation-self", all(d == 0.0 for d in diffs.values()), **{f"diff_player{p}": d for p, d in diffs.items()})
    rep = nash_deviation_test(game, policy, x0, game.grid, noise, None, concept, players)
    for p, pr in rep.players.items():
        w = pr.worst
        report.add(
            f"deviation-player{p}", pr.passed, concept=concept, n_deviations=len(pr.results),
            equilibrium_cost=pr.equilibrium_cost.mean, worst=w.name, worst_diff=w.diff_mean,
            worst_stderr=w.diff_stderr, n_paths=noise.n_paths, seed=noise.seed,
        )


def check_value(sol: LoadedSolution, report: RunReport, noise: NoisePlan, x0) -> None:
    game, policy = sol.game, sol.policy
    exact = policy_value(game, policy, x0)
    mc = mc_costs(game, policy, x0, game.grid, noise)
    for p in _players(sol):
        i = p - 1
        err = abs(mc[i].mean - exact[i])
        report.add(f"value-mc-player{p}", err <= 3.0 * mc[i].stderr + 1e-12 * (1 + abs(exact[i])),
                   exact=exact[i], mc_mean=mc[i].mean, mc_stderr=mc[i].stderr, n_paths=noise.n_paths)
    if "c" not in sol.vecs:
        return
    z = VectorPath(game.grid, np.zeros((game.grid.n_steps + 1, game.n)))
    off = OffsetSolution(sol.vecs["eta1"], sol.vecs["eta2"], z, z, sol.vecs["v"],
                         np.zeros(game.grid.n_steps + 1), sol.vecs["c"].values)
    for p in _players(sol):
        if sol.kind == "closed-loop":
            P = sol.mats[f"P{p}"]
        else:
            P = MatrixPath(game.grid, (1.0 if p == 1 else -1.0) * sol.mats["P"].values)
        v = analytic_value(P, off, game, x0, p)
        err = abs(v - exact[p - 1])
        report.add(f"value-identity-player{p}", err <= CLOSED_FORM_TOL * (1 + abs(v)), value_function=v,
                   policy_cost=exact[p - 1], error=err)


def cmd_verify(
    instance: str,
    sol_dir: Path,
    checks: list[str],
    seed: int = DEFAULT_SEED,
    paths: int = DEFAULT_PATHS,
    deviation_paths: int = DEFAULT_DEVIATION_PATHS,
    x0=None,
) -> RunReport:
    """Run the requested checks against a solution directory."""
    dig, sol = load_solution(instance, sol_dir)
    report = RunReport("verify", dig)
    n = sol.game.n
    x0 = np.ones(n) if x0 is None else np.asarray(x0, dtype=float)
    if x0.shape != (n,):
        raise UsageError(f"--x0 needs {n} entries")
    dev_noise = NoisePlan(seed, deviation_paths)
    if "stationarity" in checks:
        check_stationarity(sol, report, dev_noise, x0)
    if "convexity" in checks:
        check_convexity(sol, report)
    if "deviation" in checks:
        check_deviation(sol, report, dev_noise, x0)
    if "value" in checks:
        check_value(sol, report, NoisePlan(seed, paths), x0)
    return report


# ---------------------------------------------------------------------------
# Built-in example scenarios
# ---------------------------------------------------------------------------


def _closed_form_table(out: Path, name: str, grid: TimeGrid, cols: dict[str, np.ndarray]) -> Path:
    f = out / f"{name}.csv"
    header = ",".join(["s"] + list(cols))
    np.savetxt(f, np.column_stack([grid.points] + list(cols.values())), delimiter=",", header=header,
               comments="", fmt="%.17g")
    return f


def example_singular_coupling(out: Path, report: RunReport, seed: int, paths: int, dev_paths: int) -> None:
    grid = ex.default_grid()
    game = validate(ex.singular_coupling_game(), grid)
    try:
        solve_closed_loop_nash(game)
        report.add("closed-loop-infeasible", False, status="Feasible")
    except Infeasible as exc:
        report.status = exc.status
        report.add("closed-loop-infeasible", exc.reason is InfeasibleReason.SINGULAR_COUPLING,
                   status=exc.status, s=exc.s, residual=exc.residual)
    beta, x = 2.0, 1.0
    u = VectorPath(grid, ex.singular_coupling_open_loop(grid, beta, x))
    report.files.append(u.to_csv(out / "u_open_loop.csv", "u"))
    policy = OpenLoop(u)
    c1, c2 = mc_costs(game, policy, [x], grid, NoisePlan(seed, paths))
    zero = all(abs(c.mean) <= 1e-20 and c.stderr == 0.0 for c in (c1, c2))
    report.add("open-loop-zero-cost", zero, beta=beta, x0=x, J1_mean=c1.mean, J1_stderr=c1.stderr,
               J2_mean=c2.mean, J2_stderr=c2.stderr, n_paths=paths)
    rep = nash_deviation_test(game, policy, [x], grid, NoisePlan(seed, dev_paths))
    for p, pr in rep.players.items():
        w = pr.worst
        report.add(f"open-loop-deviation-player{p}", pr.passed, n_deviations=len(pr.results),
                   worst=w.name, worst_diff=w.diff_mean, worst_stderr=w.diff_stderr, n_paths=dev_paths)


def example_indefinite_player(out: Path, report: RunReport, seed: int, paths: int, dev_paths: int) -> None:
    grid = ex.default_grid()
    game = validate(ex.indefinite_player_game(), grid)
    sol = solve_closed_loop_nash(game)
    off = solve_closed_loop_offsets(game, sol.P1, sol.P2, sol.Theta_star)
    s = grid.points
    p1, p2 = ex.indefinite_player_p1(s), ex.indefinite_player_p2(s)
    e1 = float(np.max(np.abs(sol.P1.values[:, 0, 0] - p1)))
    e2 = float(np.max(np.abs(sol.P2.values[:, 0, 0] - p2)))
    theta_exact = np.stack([-p1, np.zeros_like(p1)], axis=1)
    et = float(np.max(np.abs(sol.Theta_star.values[:, :, 0] - theta_exact)))
    report.add("P1-closed-form", e1 <= CLOSED_FORM_TOL, max_error=e1, P1_t0=sol.P1[0][0, 0])
    report.add("P2-closed-form", e2 <= CLOSED_FORM_TOL, max_error=e2, P2_t0=sol.P2[0][0, 0])
    report.add("feedback-closed-form", et <= CLOSED_FORM_TOL, max_error=et)
    vmax = float(np.max(np.abs(off.v.values)))
    report.add("offset-zero", vmax <= 1e-12, max_abs_v=vmax)
    margin = float(np.min(1.0 + sol.P2.values[:, 0, 0]))
    report.add("player2-weight-nonnegative", margin >= -DEFAULT_OPTIONS.psd_tol, min_1_plus_P2=margin)
    c1 = convexity_probe(game, 1)
    report.add("convexity-player1", c1.minimum >= -CONVEXITY_TOL, minimum=c1.minimum)
    c2 = convexity_probe(game, 2, directions={"const": lambda s: np.ones(1)})
    report.add("convexity-player2-fails", c2.minimum <= -0.4, value=c2.minimum, expected=-0.5)
    report.files.append(_closed_form_table(out, "closed_loop_table", grid, {
        "P1": sol.P1.values[:, 0, 0], "P1_exact": p1, "P2": sol.P2.values[:, 0, 0], "P2_exact": p2,
    }))


def example_distinct_outcomes(out: Path, report: RunReport, seed: int, paths: int, dev_paths: int) -> None:
    grid = ex.default_grid()
    game = validate(ex.distinct_outcomes_game(), grid)
    s = grid.points
    rep_sol = solve_open_loop_rep(game)
    off = solve_open_rep_offsets(game, rep_sol.Pi1, rep_sol.Pi2)
    cl = solve_closed_loop_nash(game)
    pi_exact = ex.distinct_outcomes_open_rep(s)
    p_exact = ex.distinct_outcomes_closed_loop(s)
    epi = max(float(np.max(np.abs(rep_sol.Pi1.values[:, 0, 0] - pi_exact))),
              float(np.max(np.abs(rep_sol.Pi2.values[:, 0, 0] - pi_exact))))
    ep = max(float(np.max(np.abs(cl.P1.values[:, 0, 0] - p_exact))),
             float(np.max(np.abs(cl.P2.values[:, 0, 0] - p_exact))))
    report.add("open-rep-closed-form", epi <= CLOSED_FORM_TOL, max_error=epi, Pi_t0=rep_sol.Pi1[0][0, 0],
               Theta1_t0=rep_sol.Theta[0][0, 0])
    report.add("closed-loop-closed-form", ep <= CLOSED_FORM_TOL, max_error=ep, P_t0=cl.P1[0][0, 0])
    gap = float(rep_sol.Pi1[0][0, 0] - cl.P1[0][0, 0])
    report.add("outcomes-differ", gap > 0.1, Pi_minus_P_t0=gap)
    r = stationarity_residual(game, rep_sol.Pi1, rep_sol.Pi2, off, rep_sol.Theta, off.v, grid,
                              NoisePlan(seed, dev_paths))
    report.add("stationarity", r.max <= STATIONARITY_TOL, max=r.max, n_paths=r.n_paths)
    report.files.append(_closed_form_table(out, "outcome_table", grid, {
        "Pi": rep_sol.Pi1.values[:, 0, 0], "Pi_exact": pi_exact, "P": cl.P1.values[:, 0, 0], "P_exact": p_exact,
    }))


def zero_sum_coincidence(rng: np.random.Generator, n: int, grid: TimeGrid, max_draws: int = 50):
    """Draw random zero-sum games until both pipelines are feasible.

    Returns ``(dPi_P, dPi_sum, dTheta, draws)``: max-norm gaps between
    ``Pi1`` and ``P``, between ``Pi1`` and ``-Pi2``, between the two feedbacks,
    and the number of draws used.
    """
    for draw in range(1, max_draws + 1):
        game = validate(ex.random_zero_sum(rng, n), grid)
        try:
            zs = solve_zero_sum(zero_sum_reduce(game))
            rep = solve_open_loop_rep(game)
        except (Infeasible, BlowUp):
            continue
        return (
            rep.Pi1.max_abs_diff(zs.P),
            float(np.max(np.abs(rep.Pi1.values + rep.Pi2.values))),
            rep.Theta.max_abs_diff(zs.Theta0),
            draw,
        )
    raise RuntimeError(f"no feasible zero-sum draw in {max_draws} attempts")


def slq_corollary(rng: np.random.Generator, n: int, m: int, grid: TimeGrid) -> tuple[float, float]:
    """Feedback and offset gaps between the single-player and two-player pipelines."""
    game = validate(ex.random_slq(rng, n, m), grid)
    slq = slq_data(game)
    sol = solve_slq(slq)
    off = solve_slq_offsets(slq, sol.P)
    rep = solve_open_loop_rep(game)
    roff = solve_open_rep_offsets(game, rep.Pi1, rep.Pi2)
    return sol.Theta0.max_abs_diff(rep.Theta), off.v.max_abs_diff(roff.v)


def example_zero_sum_coincidence(out: Path, report: RunReport, seed: int, paths: int, dev_paths: int) -> None:
    rng = np.random.default_rng(seed)
    grid = ex.default_grid()
    for idx, n in enumerate((1, 1, 2, 2), start=1):
        dp, ds, dt, draws = zero_sum_coincidence(rng, n, grid)
        report.add(f"coincidence-{idx}-n{n}", max(dp, ds) <= COINCIDENCE_TOL, max_Pi1_minus_P=dp,
                   max_Pi1_plus_Pi2=ds, max_feedback_gap=dt, draws=draws)


def example_slq_corollary(out: Path, report: RunReport, seed: int, paths: int, dev_paths: int) -> None:
    rng = np.random.default_rng(seed)
    grid = ex.default_grid()
    for n, m in ((1, 1), (2, 1), (2, 2)):
        dth, dv = slq_corollary(rng, n, m, grid)
        report.add(f"feedback-agreement-n{n}-m{m}", max(dth, dv) <= COINCIDENCE_TOL, max_feedback_gap=dth,
                   max_offset_gap=dv)


EXAMPLES = {
    "singular-coupling": example_singular_coupling,
    "indefinite-player": example_indefinite_player,
    "distinct-outcomes": example_distinct_outcomes,
    "zero-sum-coincidence": example_zero_sum_coincidence,
    "slq-corollary": example_slq_corollary,
}


def cmd_example(
    name: str,
    out: Path,
    seed: int = DEFAULT_SEED,
    paths: int = DEFAULT_PATHS,
    deviation_paths: int = DEFAULT_DEVIATION_PATHS,
) -> RunReport:
    """Reproduce a built-in scenario end to end and record its checks."""
    key = EXAMPLE_ALIASES.get(name, name)
    if key not in EXAMPLES:
        raise UsageError(f"unknown example {name!r}; choose from {sorted(EXAMPLES) + sorted(EXAMPLE_ALIASES)}")
    out.mkdir(parents=True, exist_ok=True)
    report = RunReport(f"example {key}")
    if key in BUILTIN_GAMES:
        doc = spec_to_document(BUILTIN_GAMES[key](), ex.default_grid())
        report.instance_digest = digest(doc)
        inst = out / "instance.json"
        inst.write_text(json.dumps(doc, indent=2) + "\n")
        report.files.append(inst)
    EXAMPLES[key](out, report, seed, paths, deviation_paths)
    return report


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _checks(text: str) -> list[str]:
    items = [c.strip() for c in text.split(",") if c.strip()]
    if items == ["all"]:
        return list(CHECKS)
    bad = [c for c in items if c not in CHECKS]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"checks must be 'all' or a comma list of {', '.join(CHECKS)}")
    return items


def _vector(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma-separated list of numbers") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sdgame", description="Solve and verify linear-quadratic stochastic differential games.")
    sub = parser.add_subparsers(dest="command", required=True)

    def mc_options(p):
        p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="noise seed (default %(default)s)")
        p.add_argument("--paths", type=_positive, default=DEFAULT_PATHS,
                       help="paths for cost estimates (default %(default)s)")
        p.add_argument("--deviation-paths", type=_positive, default=DEFAULT_DEVIATION_PATHS,
                       help="paths for deviation and stationarity tests (default %(default)s)")

    p = sub.add_parser("solve", help="solve an instance")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--instance", required=True, help="JSON file or builtin:<name>")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--dt-steps", type=_positive, default=None, help="override the number of grid steps")

    p = sub.add_parser("verify", help="check a solution directory")
    p.add_argument("--instance", required=True)
    p.add_argument("--solution", type=Path, required=True)
    p.add_argument("--checks", type=_checks, default=list(CHECKS),
                   help="'all' or a comma list of " + ", ".join(CHECKS))
    p.add_argument("--x0", type=_vector, default=None, help="initial state (default all ones)")
    p.add_argument("--out", type=Path, default=None, help="report directory (default: the solution directory)")
    mc_options(p)

    p = sub.add_parser("example", help="run a built-in scenario")
    p.add_argument("id", help="one of " + ", ".join(sorted(EXAMPLES) + sorted(EXAMPLE_ALIASES)))
    p.add_argument("--out", type=Path, required=True)
    mc_options(p)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            report = cmd_solve(args.kind, args.instance, args.out, args.dt_steps)
            out = args.out
        elif args.command == "verify":
            report = cmd_verify(args.instance, args.solution, args.checks, args.seed, args.paths,
                                args.deviation_paths, args.x0)
            out = args.out or args.solution
        else:
            report = cmd_example(args.id, args.out, args.seed, args.paths, args.deviation_paths)
            out = args.out
    except (UsageError, InstanceError, OSError, ValueError) as exc:
        print(f"sdgame: error: {exc}", file=sys.stderr)
        return 2
    report.write(out)
    print(report.summary())
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
