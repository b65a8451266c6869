# tests/test_symflow_service.py

"""
Steiner steps on rasters and the flow toward the balls.
"""

import numpy as np
import pytest

from models.sets import Ellipsoid
from services import settuple_service, symflow_service
from services.errors import ArgumentError, PropertyViolation


class TestSchedules:
    def test_golden_schedule_starts_on_axis(self):
        schedule = symflow_service.golden_schedule(2, 4)
        assert schedule[0] == pytest.approx((1.0, 0.0))
        for u in schedule:
            assert np.hypot(*u) == pytest.approx(1.0)

    def test_axis_schedule_alternates(self):
        assert symflow_service.axis_schedule(2, 3) == [(1.0, 0.0), (0.0, 1.0), (1.0, 0.0)]

    def test_no_flow_in_three_dimensions(self):
        with pytest.raises(ArgumentError):
            symflow_service.golden_schedule(3, 2)


class TestSteinerSet:
    def test_line_symmetral_is_centered_interval(self, coarse_lattice_1d):
        shifted = settuple_service.rasterize(Ellipsoid.ball(0.5, 1, center=[0.3]), coarse_lattice_1d)
        centered = settuple_service.rasterize(Ellipsoid.ball(0.5, 1), coarse_lattice_1d)
        result, strips = symflow_service.steiner_set(shifted, (1.0,))
        assert strips == 1
        assert np.array_equal(result.mask, centered.mask)

    def test_counts_preserved_and_idempotent(self, spec_2d, coarse_lattice_2d):
        E = settuple_service.random_set_tuple(spec_2d, seed=6, kinds=("grid",), lattice=coarse_lattice_2d)
        once, _ = symflow_service.steiner_set(E[0], (0.6, 0.8))
        twice, _ = symflow_service.steiner_set(once, (0.6, 0.8))
        assert np.count_nonzero(once.mask) == np.count_nonzero(E[0].mask)
        assert np.array_equal(once.mask, twice.mask)

    def test_zero_direction_rejected(self, coarse_lattice_2d):
        with pytest.raises(ArgumentError):
            symflow_service.steiner_set(coarse_lattice_2d.empty(), (0.0, 0.0))

    def test_step_needs_grids(self, rs_family_2d, spec_2d):
        with pytest.raises(ArgumentError):
            symflow_service.steiner_step(rs_family_2d, settuple_service.make_ball_tuple(spec_2d), (1.0, 0.0))

    def test_step_preserves_measures(self, rs_family_2d, spec_2d, coarse_lattice_2d):
        E = settuple_service.random_set_tuple(spec_2d, seed=8, kinds=("grid",), lattice=coarse_lattice_2d)
        T = symflow_service.steiner_step(rs_family_2d, E, (0.0, 1.0))
        np.testing.assert_array_equal(T.measures(), E.measures())


class TestFlow:
    def test_line_flow_is_monotone_and_converges(self, rs_family, spec111, coarse_lattice_1d):
        E = symflow_service.flow_start("blobs", rs_family, spec111, seed=7, lattice=coarse_lattice_1d)
        trajectory = symflow_service.flow_to_balls(rs_family, E, engine="exact", steps=3)
        assert trajectory.monotone
        assert trajectory.converged
        assert trajectory.steps[-1].phi >= trajectory.steps[0].phi
        symflow_service.assert_monotone(trajectory)

    def test_plane_flow_approaches_balls(self, rs_family_2d, spec_2d, coarse_lattice_2d):
        E = symflow_service.flow_start("translated", rs_family_2d, spec_2d, seed=3, lattice=coarse_lattice_2d)
        trajectory = symflow_service.flow_to_balls(rs_family_2d, E, engine="mc", n=2 ** 15, seed=3, steps=12)
        assert len(trajectory.steps) == 13
        assert trajectory.final_distance < trajectory.steps[0].distance
        for step in trajectory.steps:
            assert step.measures == trajectory.steps[0].measures

    def test_assert_monotone_raises_on_violation(self, rs_family, spec111, coarse_lattice_1d):
        E = symflow_service.flow_start("balls", rs_family, spec111, lattice=coarse_lattice_1d)
        trajectory = symflow_service.flow_to_balls(rs_family, E, engine="exact", steps=1)
        broken = trajectory.model_copy(update={"violations": [1]})
        with pytest.raises(PropertyViolation):
            symflow_service.assert_monotone(broken)

    def test_flow_needs_grids(self, rs_family, spec111):
        with pytest.raises(ArgumentError):
            symflow_service.flow_to_balls(rs_family, settuple_service.make_ball_tuple(spec111), steps=1)

    def test_unknown_start(self, rs_family, spec111):
        with pytest.raises(ArgumentError):
            symflow_service.flow_start("spiral", rs_family, spec111)

    def test_rows_follow_steps(self, rs_family, spec111, coarse_lattice_1d):
        E = symflow_service.flow_start("balls", rs_family, spec111, lattice=coarse_lattice_1d)
        trajectory = symflow_service.flow_to_balls(rs_family, E, engine="exact", steps=2)
        rows = trajectory.as_rows()
        assert [row["step"] for row in rows] == [0, 1, 2]
        assert rows[0]["phi"] == pytest.approx(0.75, abs=0.05)
