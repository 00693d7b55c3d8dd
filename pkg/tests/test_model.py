from __future__ import annotations

import numpy as np
import pytest

from sdgame import examples as ex
from sdgame.errors import DimensionMismatch, NotZeroSum, SymmetryViolation
from sdgame.model import (
    GameSpec,
    PlayerCost,
    TimeGrid,
    selector,
    slq_data,
    slq_spec,
    stack,
    validate,
    zero_sum_reduce,
    zero_sum_spec,
)


class TestTimeGrid:
    def test_points(self):
        g = TimeGrid(0.0, 1.0, 4)
        np.testing.assert_allclose(g.points, [0, 0.25, 0.5, 0.75, 1.0])
        assert g.dt == 0.25
        assert len(g.half_points) == 9
        assert g.points[-1] == 1.0 and g.half_points[-1] == 1.0

    def test_last_point_exact(self):
        g = TimeGrid(0.1, 0.7, 3)
        assert g.points[-1] == 0.7

    @pytest.mark.parametrize("t0,T,n", [(1.0, 1.0, 10), (0.0, 1.0, 0), (0.0, np.inf, 5), (0.0, 1.0, 2.5)])
    def test_invalid(self, t0, T, n):
        with pytest.raises(ValueError):
            TimeGrid(t0, T, n)

    def test_with_steps(self):
        assert TimeGrid(0, 2, 5).with_steps(10) == TimeGrid(0, 2, 10)


class TestValidate:
    def test_shapes_and_zero_defaults(self):
        g = TimeGrid(0, 1, 10)
        G = validate(ex.distinct_outcomes_game(), g)
        assert G.A.shape == (21, 1, 1)
        assert G.B.shape == (21, 1, 2)
        assert G.Q.shape == (2, 21, 1, 1)
        assert G.S.shape == (2, 21, 2, 1)
        assert G.R.shape == (2, 21, 2, 2)
        assert G.G.shape == (2, 1, 1)
        np.testing.assert_array_equal(G.R[0, 0], [[1, 0], [0, 0]])
        np.testing.assert_array_equal(G.R[1, 0], [[0, 0], [0, 1]])
        assert G.is_homogeneous

    def test_arrays_are_read_only(self):
        G = validate(ex.distinct_outcomes_game(), TimeGrid(0, 1, 4))
        with pytest.raises(ValueError):
            G.A[0, 0, 0] = 1.0

    def test_callable_samples_on_half_grid(self):
        spec = GameSpec(n=1, m1=1, m2=0, A=lambda s: [[s]], B1=[[1.0]])
        G = validate(spec, TimeGrid(0, 1, 2))
        np.testing.assert_allclose(G.A[:, 0, 0], [0, 0.25, 0.5, 0.75, 1.0])

    def test_dimension_mismatch(self):
        spec = GameSpec(n=2, m1=1, m2=1, A=np.eye(3))
        with pytest.raises(DimensionMismatch) as e:
            validate(spec, TimeGrid(0, 1, 2))
        assert e.value.name == "A"

    def test_scalar_only_for_size_one(self):
        with pytest.raises(DimensionMismatch):
            validate(GameSpec(n=2, m1=1, m2=1, A=1.0), TimeGrid(0, 1, 2))
        G = validate(GameSpec(n=1, m1=1, m2=1, A=2.0), TimeGrid(0, 1, 2))
        assert G.A[0, 0, 0] == 2.0

    def test_asymmetric_Q(self):
        spec = GameSpec(n=2, m1=1, m2=1, player1=PlayerCost(Q=[[1.0, 1.0], [0.0, 1.0]]))
        with pytest.raises(SymmetryViolation):
            validate(spec, TimeGrid(0, 1, 2))

    def test_inconsistent_cross_control_weights(self):
        spec = GameSpec(n=1, m1=1, m2=1, player1=PlayerCost(R12=[[1.0]], R21=[[0.0]]))
        with pytest.raises(SymmetryViolation):
            validate(spec, TimeGrid(0, 1, 2))

    def test_non_finite(self):
        with pytest.raises(ValueError):
            validate(GameSpec(n=1, m1=1, m2=0, b=lambda s: [np.nan]), TimeGrid(0, 1, 2))

    def test_invalid_dimensions(self):
        with pytest.raises(ValueError):
            validate(GameSpec(n=1, m1=0, m2=0), TimeGrid(0, 1, 2))

    def test_scaled_offsets(self, rng):
        G = validate(ex.random_zero_sum(rng, 2), TimeGrid(0, 1, 4))
        H = G.scaled_offsets(3.0)
        np.testing.assert_array_equal(H.g, 3.0 * G.g)
        np.testing.assert_array_equal(H.A, G.A)
        assert not G.is_homogeneous
        assert G.scaled_offsets(0.0).is_homogeneous


class TestStack:
    def test_selector(self):
        J = selector(1, 2)
        assert J.shape == (6, 3)
        np.testing.assert_array_equal(J[0], [1, 0, 0])
        np.testing.assert_array_equal(J[4], [0, 1, 0])
        np.testing.assert_array_equal(J[5], [0, 0, 1])
        assert not J[1:4].any()

    def test_blocks(self, rng):
        G = validate(ex.random_zero_sum(rng, 2), TimeGrid(0, 1, 2))
        sg = stack(G)
        assert sg.A.shape == (5, 4, 4)
        np.testing.assert_array_equal(sg.Q[0, :2, :2], G.Q[0, 0])
        np.testing.assert_array_equal(sg.Q[0, 2:, 2:], G.Q[1, 0])
        assert not sg.Q[0, :2, 2:].any()
        np.testing.assert_array_equal(sg.g, np.concatenate(G.g))


class TestReductions:
    def test_zero_sum_reduce(self, rng):
        G = validate(ex.random_zero_sum(rng, 2), TimeGrid(0, 1, 4))
        zs = zero_sum_reduce(G)
        np.testing.assert_array_equal(zs.Q, G.Q[0])
        np.testing.assert_array_equal(zs.R, G.R[0])

    def test_not_zero_sum(self):
        G = validate(ex.distinct_outcomes_game(), TimeGrid(0, 1, 4))
        with pytest.raises(NotZeroSum):
            zero_sum_reduce(G)

    def test_zero_sum_spec_negates_player2(self):
        spec = zero_sum_spec(GameSpec(n=1, m1=1, m2=1, player1=PlayerCost(Q=lambda s: [[1 + s]], G=[[2.0]])))
        G = validate(spec, TimeGrid(0, 1, 2))
        np.testing.assert_allclose(G.Q[1], -G.Q[0])
        np.testing.assert_allclose(G.G[1], [[-2.0]])

    def test_slq(self):
        G = validate(slq_spec(1, 1, B=[[1.0]], R=[[1.0]], G=[[1.0]]), TimeGrid(0, 1, 2))
        assert G.m2 == 0 and G.m == 1
        d = slq_data(G)
        assert d.R.shape == (5, 1, 1)
        with pytest.raises(DimensionMismatch):
            slq_data(validate(ex.distinct_outcomes_game(), TimeGrid(0, 1, 2)))
