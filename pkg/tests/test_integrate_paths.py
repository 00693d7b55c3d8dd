from __future__ import annotations

import csv

import numpy as np
import pytest

from sdgame.errors import BlowUp
from sdgame.integrate import rk4_backward, rk4_forward, to_half_grid
from sdgame.model import TimeGrid
from sdgame.paths import MatrixPath, VectorPath


def test_backward_exponential_is_fourth_order():
    # y' = y, y(1) = 1  ->  y(0) = e^{-1}
    errs = []
    for n in (10, 20, 40):
        g = TimeGrid(0, 1, n)
        y = rk4_backward(lambda j, y: y, np.array([1.0]), g)
        errs.append(abs(y[0, 0] - np.exp(-1.0)))
    assert 14 < errs[0] / errs[1] < 18
    assert 14 < errs[1] / errs[2] < 18


def test_backward_on_point_visits_every_grid_point():
    g = TimeGrid(0, 1, 5)
    seen = []
    rk4_backward(lambda j, y: 0 * y, np.zeros(1), g, on_point=lambda k, y: seen.append(k))
    assert seen == [5, 4, 3, 2, 1, 0]


def test_backward_blowup():
    g = TimeGrid(0, 1, 100)
    with pytest.raises(BlowUp):
        rk4_backward(lambda j, y: -(y**2), np.array([1.0]), TimeGrid(0, 2, 200), bound=1e6)
    with pytest.raises(BlowUp):
        rk4_backward(lambda j, y: np.full_like(y, np.nan), np.array([1.0]), g)


def test_forward_uses_half_step_index():
    g = TimeGrid(0, 1, 4)
    ts = g.half_points
    y = rk4_forward(lambda j, y: np.array([ts[j] ** 3]), np.zeros(1), g)
    np.testing.assert_allclose(y[:, 0], g.points**4 / 4, atol=1e-15)


def test_half_grid_interpolation():
    g = TimeGrid(0, 1, 8)
    vals = np.sin(g.points)[:, None]
    h = to_half_grid(vals, g)
    np.testing.assert_array_equal(h[0::2], vals)
    np.testing.assert_allclose(h[1::2, 0], np.sin(g.half_points[1::2]), atol=1e-5)


def test_paths_round_trip(tmp_path):
    g = TimeGrid(0, 1, 3)
    rng = np.random.default_rng(0)
    M = MatrixPath(g, rng.normal(size=(4, 2, 3)))
    V = VectorPath(g, rng.normal(size=(4, 2)))
    f = M.to_csv(tmp_path / "M.csv", "Theta")
    with open(f, newline="") as fh:
        header = next(csv.reader(fh))
    assert header == ["s", "Theta[0,0]", "Theta[0,1]", "Theta[0,2]", "Theta[1,0]", "Theta[1,1]", "Theta[1,2]"]
    np.testing.assert_array_equal(MatrixPath.from_csv(f, g).values, M.values)
    f = V.to_csv(tmp_path / "v.csv", "v")
    np.testing.assert_array_equal(VectorPath.from_csv(f, g).values, V.values)


def test_paths_are_immutable_and_checked():
    g = TimeGrid(0, 1, 3)
    M = MatrixPath(g, np.zeros((4, 1, 1)))
    with pytest.raises(ValueError):
        M.values[0, 0, 0] = 1
    with pytest.raises(ValueError):
        MatrixPath(g, np.zeros((3, 1, 1)))
    with pytest.raises(ValueError):
        VectorPath(g, np.full((4, 1), np.inf))


def test_csv_grid_mismatch(tmp_path):
    g = TimeGrid(0, 1, 3)
    f = VectorPath(g, np.zeros((4, 1))).to_csv(tmp_path / "v.csv", "v")
    with pytest.raises(ValueError):
        VectorPath.from_csv(f, TimeGrid(0, 1, 4))
