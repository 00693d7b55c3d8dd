"""Fixed-step RK4 on a uniform grid, with stage values at half steps."""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import BlowUp
from .model import TimeGrid

# rhs(j, y) returns dy/ds at half-grid index j (time t0 + j dt / 2).
Rhs = Callable[[int, np.ndarray], np.ndarray]


def rk4_backward(
    rhs: Rhs,
    y_T: np.ndarray,
    grid: TimeGrid,
    *,
    post: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    on_point: Optional[Callable[[int, np.ndarray], None]] = None,
    bound: float = np.inf,
) -> np.ndarray:
    """Integrate ``dy/ds = rhs`` from ``s = T`` down to ``s = t0``.

    Parameters
    ----------
    rhs : callable
        Right-hand side evaluated at half-grid indices.
    y_T : ndarray
        Terminal value.
    post : callable, optional
        Applied to each new grid value (e.g. symmetrization).
    on_point : callable, optional
        Called as ``on_point(k, y_k)`` for every grid point, starting at
        ``k = n_steps``; may raise to stop the integration.
    bound : float
        :class:`BlowUp` is raised when ``max |y|`` exceeds it.

    Returns
    -------
    ndarray
        Values at the grid points, shape ``(n_steps + 1,) + y_T.shape``.
    """
    N, h = grid.n_steps, grid.dt
    s = grid.points
    ys = np.empty((N + 1,) + np.shape(y_T))
    ys[N] = y_T
    if on_point is not None:
        on_point(N, ys[N])
    for k in range(N, 0, -1):
        y = ys[k]
        j = 2 * k
        k1 = rhs(j, y)
        k2 = rhs(j - 1, y - 0.5 * h * k1)
        k3 = rhs(j - 1, y - 0.5 * h * k2)
        k4 = rhs(j - 2, y - h * k3)
        y_new = y - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if post is not None:
            y_new = post(y_new)
        size = float(np.max(np.abs(y_new))) if y_new.size else 0.0
        if not np.isfinite(size) or size > bound:
            raise BlowUp(float(s[k - 1]), size, bound)
        ys[k - 1] = y_new
        if on_point is not None:
            on_point(k - 1, y_new)
    return ys


def rk4_forward(rhs: Rhs, y0: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Integrate ``dy/ds = rhs`` from ``t0`` up to ``T``; returns grid values."""
    N, h = grid.n_steps, grid.dt
    ys = np.empty((N + 1,) + np.shape(y0))
    ys[0] = y0
    for k in range(N):
        y = ys[k]
        j = 2 * k
        k1 = rhs(j, y)
        k2 = rhs(j + 1, y + 0.5 * h * k1)
        k3 = rhs(j + 1, y + 0.5 * h * k2)
        k4 = rhs(j + 2, y + h * k3)
        ys[k + 1] = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return ys


def to_half_grid(values: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Refine grid-point samples to the half-step grid.

    Grid points are copied exactly; midpoints come from a not-a-knot cubic
    spline, whose fourth-order accuracy matches the RK4 stepper.
    """
    values = np.asarray(values, dtype=float)
    N = grid.n_steps
    out = np.empty((2 * N + 1,) + values.shape[1:])
    out[0::2] = values
    if N == 1:
        out[1] = 0.5 * (values[0] + values[1])
    else:
        spline = CubicSpline(grid.points, values, axis=0)
        out[1::2] = spline(grid.half_points[1::2])
    return out
