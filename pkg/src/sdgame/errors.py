"""Exception types shared by the solver modules."""

from __future__ import annotations

from enum import Enum


class GameError(Exception):
    """Base class for every error raised by this package."""

    @property
    def status(self) -> str:
        """Short machine-readable status label used in run reports."""
        return type(self).__name__


class NumericalFailure(GameError):
    """A dense decomposition failed to converge."""

    def __init__(self, message: str, shape: tuple[int, ...] | None = None):
        super().__init__(message if shape is None else f"{message} (input shape {shape})")
        self.shape = shape


class DimensionMismatch(GameError, ValueError):
    """An array does not have the shape required by the game dimensions."""

    def __init__(self, name: str, expected: tuple[int, ...], got: tuple[int, ...]):
        super().__init__(f"{name}: expected shape {expected}, got {got}")
        self.name = name
        self.expected = expected
        self.got = got


class SymmetryViolation(GameError, ValueError):
    """A matrix that must be symmetric is not, beyond tolerance."""

    def __init__(self, name: str, residual: float, s: float | None = None):
        where = "" if s is None else f" at s={s:.6g}"
        super().__init__(f"{name} is not symmetric{where}: |M - M^T|_inf = {residual:.3e}")
        self.name = name
        self.residual = residual
        self.s = s


class NotZeroSum(GameError):
    """The two players' cost data are not negatives of each other."""

    def __init__(self, name: str, residual: float, s: float | None = None):
        where = "" if s is None else f" at s={s:.6g}"
        super().__init__(f"zero-sum identity fails for {name}{where}: residual {residual:.3e}")
        self.name = name
        self.residual = residual
        self.s = s


class InfeasibleReason(str, Enum):
    SINGULAR_COUPLING = "SingularCoupling"
    PSD_VIOLATION = "PsdViolation"
    RANGE_CONDITION = "RangeCondition"
    SIGN_CONDITION = "SignCondition"


class Infeasible(GameError):
    """A necessary condition for the requested equilibrium fails numerically.

    Parameters
    ----------
    reason : InfeasibleReason
        Which condition failed.
    s : float, optional
        Time at which the failure was detected.
    residual : float, optional
        Size of the violation (residual norm, eigenvalue or condition number).
    detail : str, optional
        Free-form context.
    """

    def __init__(
        self,
        reason: InfeasibleReason,
        s: float | None = None,
        residual: float | None = None,
        detail: str = "",
    ):
        self.reason = InfeasibleReason(reason)
        self.s = s
        self.residual = residual
        self.detail = detail
        parts = [self.status]
        if s is not None:
            parts.append(f"at s={s:.6g}")
        if residual is not None:
            parts.append(f"residual={residual:.3e}")
        if detail:
            parts.append(detail)
        super().__init__(" ".join(parts))

    @property
    def status(self) -> str:
        return f"Infeasible{{{self.reason.value}}}"


class BlowUp(GameError):
    """A backward solution or a simulated path left the admissible bound."""

    def __init__(self, s: float, norm: float, bound: float):
        super().__init__(f"norm {norm:.3e} exceeds bound {bound:.3e} at s={s:.6g}")
        self.s = s
        self.norm = norm
        self.bound = bound
