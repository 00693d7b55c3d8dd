"""Dense small-matrix utilities: pseudo-inverse, range tests, linear families.

Matrices are plain ``numpy`` arrays. Every function returns new arrays and
never modifies its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, Infeasible, InfeasibleReason, NumericalFailure

_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny

#: Relative symmetry tolerance used by :func:`min_eig_sym` and the model checks.
SYMMETRY_TOL = 1e-9


def default_rel_cutoff(shape: tuple[int, int]) -> float:
    """Singular-value threshold relative to the largest singular value."""
    return max(shape) * _EPS * 64


@dataclass(frozen=True)
class PinvResult:
    """Moore-Penrose pseudo-inverse together with rank information.

    Attributes
    ----------
    pinv : ndarray
        The pseudo-inverse, shape ``(cols, rows)``.
    rank : int
        Number of singular values kept.
    cutoff : float
        Absolute singular-value threshold that was applied.
    cond : float
        Ratio of largest to smallest singular value of the input (``inf`` when
        the smallest one is zero).
    """

    pinv: np.ndarray
    rank: int
    cutoff: float
    cond: float


def _as_matrix(M, name: str = "M") -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionMismatch(name, ("rows", "cols"), M.shape)
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def pinv(M, rel_cutoff: float | None = None) -> PinvResult:
    """Pseudo-inverse by singular value decomposition.

    Parameters
    ----------
    M : array_like, shape (r, c)
        Nonempty finite matrix.
    rel_cutoff : float, optional
        Singular values below ``rel_cutoff * sigma_max`` are treated as zero.
        Defaults to :func:`default_rel_cutoff`.

    Returns
    -------
    PinvResult
    """
    M = _as_matrix(M)
    if rel_cutoff is not None and rel_cutoff <= 0:
        raise ValueError("rel_cutoff must be positive")
    return pinv_unchecked(M, rel_cutoff)


def pinv_unchecked(M: np.ndarray, rel_cutoff: float | None = None) -> PinvResult:
    """:func:`pinv` without input validation, for use inside integrators."""
    r, c = M.shape
    if M.size == 0:
        return PinvResult(np.zeros((c, r)), 0, 0.0, 1.0)
    if rel_cutoff is None:
        rel_cutoff = max(r, c) * _EPS * 64
    try:
        U, sv, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}", M.shape) from exc
    # Subnormal singular values would overflow on inversion; treat them as zero.
    cutoff = max(rel_cutoff * sv[0], _TINY)
    keep = sv > cutoff
    rank = int(np.count_nonzero(keep))
    inv_sv = 1.0 / np.where(keep, sv, np.inf)
    Mp = (Vt.T * inv_sv) @ U.T
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    return PinvResult(Mp, rank, float(cutoff), cond)


def range_residual(Psi, M, Mp: np.ndarray | None = None) -> float:
    """Max-norm of ``(I - M M^+) Psi``."""
    M = np.asarray(M, dtype=float)
    Psi = np.asarray(Psi, dtype=float)
    if Mp is None:
        Mp = pinv(M).pinv
    R = Psi - M @ (Mp @ Psi)
    return float(np.abs(R).max()) if R.size else 0.0


def range_inclusion(Psi, M, tol: float) -> tuple[bool, float]:
    """Test whether the columns of ``Psi`` lie in the range of ``M``.

    Returns
    -------
    ok : bool
        ``True`` iff ``|(I - M M^+) Psi|_inf <= tol``.
    residual : float
        The residual norm.
    """
    M = _as_matrix(M)
    Psi = np.asarray(Psi, dtype=float)
    if Psi.ndim == 1:
        Psi = Psi[:, None]
    if Psi.shape[0] != M.shape[0]:
        raise DimensionMismatch("Psi", (M.shape[0], Psi.shape[1]), Psi.shape)
    res = range_residual(Psi, M)
    return res <= tol, res


@dataclass(frozen=True)
class LinearFamily:
    """Solution set ``theta0 + projector @ Gamma`` of ``M Theta = Psi``."""

    theta0: np.ndarray
    projector: np.ndarray
    residual: float


def solve_linear_family(M, Psi, tol: float = 1e-10) -> LinearFamily:
    """Minimum-norm solution and null-space projector of ``M Theta = Psi``.

    Parameters
    ----------
    M : array_like, shape (r, c)
    Psi : array_like, shape (r,) or (r, k)
    tol : float
        Range-inclusion tolerance, scaled by ``1 + |Psi|_inf``.

    Returns
    -------
    LinearFamily

    Raises
    ------
    Infeasible
        With reason ``RangeCondition`` when ``Psi`` is not in the range of ``M``.
    """
    M = _as_matrix(M)
    Psi = np.asarray(Psi, dtype=float)
    if Psi.shape[0] != M.shape[0]:
        raise DimensionMismatch("Psi", (M.shape[0],) + Psi.shape[1:], Psi.shape)
    Mp = pinv(M).pinv
    res = range_residual(Psi, M, Mp)
    scale = 1.0 + (float(np.max(np.abs(Psi))) if Psi.size else 0.0)
    if res > tol * scale:
        raise Infeasible(InfeasibleReason.RANGE_CONDITION, residual=res)
    theta0 = Mp @ Psi
    projector = np.eye(M.shape[1]) - Mp @ M
    return LinearFamily(theta0, projector, res)


def asymmetry(M) -> float:
    """Max-norm of ``M - M^T``."""
    M = np.asarray(M, dtype=float)
    return float(np.max(np.abs(M - M.T))) if M.size else 0.0


def is_symmetric(M, tol: float = SYMMETRY_TOL) -> bool:
    """Relative symmetry test ``|M - M^T| <= tol (1 + |M|)``."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return True
    return asymmetry(M) <= tol * (1.0 + float(np.max(np.abs(M))))


def min_eig_sym(M) -> float:
    """Smallest eigenvalue of the symmetric part of ``M``.

    ``M`` must be square and symmetric up to :data:`SYMMETRY_TOL`. An empty
    matrix has no eigenvalues and yields ``+inf``.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch("M", ("k", "k"), M.shape)
    if M.size == 0:
        return float("inf")
    if not is_symmetric(M):
        raise ValueError(f"matrix is not symmetric: |M - M^T|_inf = {asymmetry(M):.3e}")
    return float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])


def max_eig_sym(M) -> float:
    """Largest eigenvalue of the symmetric part of ``M`` (``-inf`` if empty)."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return float("-inf")
    return -min_eig_sym(-M)
