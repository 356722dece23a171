import numpy as np
import pytest

from coalkin.field import (
    DIRICHLET_ZERO,
    HOMOGENEOUS,
    LEFT,
    PERIODIC,
    RIGHT,
    BoundaryRegime,
    DensityField,
    Grid,
)
from coalkin.integrator import (
    SimState,
    SimulationUnstable,
    TimeConfig,
    homogeneous_driver,
    homogeneous_rate,
    maybe_enlarge,
    rk4_step,
    run,
)
from coalkin.kernels import B, G
from coalkin.operators import LOG_MASS, MIDPOINT, ModelConfig

MID = ModelConfig(MIDPOINT, G(1, 1))
JUMP = ModelConfig(jump_kernel=B(1, 1))


def const_periodic(r0, dx=0.1, n=200):
    return DensityField(Grid(-10.0, dx, n), np.full(n, r0), BoundaryRegime(PERIODIC, PERIODIC))


class TestTimeConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(dt=0.0),
            dict(dt=0.1, t_end=-1.0),
            dict(dt=0.1, t_end=1.0, snapshot_times=(0.5, 0.2)),
            dict(dt=0.1, t_end=1.0, snapshot_times=(2.0,)),
            dict(dt=0.3, t_end=1.0),
            dict(dt=0.1, t_end=1.0, snapshot_times=(0.25,)),
            dict(dt=0.1, diag_every=0),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            TimeConfig(**kwargs)

    def test_steps(self):
        assert TimeConfig(0.01, 10.0).n_steps == 1000
        assert TimeConfig(0.5, 2560.0).step_index(192.0) == 384


def test_driver_formula():
    m = ModelConfig(LOG_MASS, G(2, 1))
    assert homogeneous_rate(m) == 1.0
    assert homogeneous_driver(m, 0.5, 2.0) == pytest.approx(0.5 / 2.0)
    assert homogeneous_rate(JUMP) == 0.0
    assert homogeneous_driver(JUMP, 0.3, 100.0) == 0.3


def test_constant_field_follows_logistic_law():
    f = const_periodic(1.0)
    res = run(f, MID, TimeConfig(0.01, 10.0))
    exact = homogeneous_driver(MID, 1.0, 10.0)
    assert np.max(np.abs(res.final.field.values - exact)) / exact < 1e-8


def test_rk4_fourth_order():
    errs = []
    for dt in (0.2, 0.1, 0.05):
        res = run(const_periodic(1.0, n=20), MID, TimeConfig(dt, 4.0))
        errs.append(abs(res.final.field.values[0] - homogeneous_driver(MID, 1.0, 4.0)))
    for a, b in zip(errs, errs[1:]):
        assert 14.0 <= a / b <= 18.0


def test_driver_tracks_closed_form():
    g = Grid.from_bounds(-10, 10, 0.1)
    bnd = BoundaryRegime(HOMOGENEOUS, DIRICHLET_ZERO)
    x = g.x
    f = DensityField(g, np.where(x < 0, 0.8, 0.0), bnd, left_value=0.8)
    res = run(f, MID, TimeConfig(0.05, 5.0), auto_enlarge=False)
    assert res.final.field.left_value == pytest.approx(homogeneous_driver(MID, 0.8, 5.0), rel=1e-8)
    assert res.final.field.right_value == 0.0


def test_clamp_counts_negative_nodes():
    f = const_periodic(1.0, n=10)

    def pull_down(field, m):
        out = np.zeros(field.grid.n)
        out[:3] = -1.0
        return out

    s = rk4_step(SimState(f), MID, 2.0, rhs_fn=pull_down)
    assert s.clamped == 3
    assert np.all(s.field.values[:3] == 0.0) and np.all(s.field.values[3:] == 1.0)


def test_instability_raises():
    with pytest.raises(SimulationUnstable):
        run(const_periodic(1.0, n=20), ModelConfig(MIDPOINT, G(1e200, 1)), TimeConfig(10.0, 100.0))


class TestEnlarge:
    def grid_field(self, values_fn, bnd=BoundaryRegime(), lv=0.0):
        g = Grid.from_bounds(-20, 20, 0.1)
        return DensityField(g, values_fn(g.x), bnd, left_value=lv)

    def test_quiet_boundaries(self):
        f = self.grid_field(lambda x: np.exp(-x ** 2))
        s = maybe_enlarge(SimState(f), MID)
        assert s.field is f and s.enlargements == ()

    def test_right_trigger_doubles(self):
        f = self.grid_field(lambda x: np.exp(-((x - 18) ** 2)))
        s = maybe_enlarge(SimState(f, t=3.0), MID)
        assert s.enlargements == ((3.0, RIGHT),)
        assert (s.field.grid.x_min, s.field.grid.x_max) == (-20.0, pytest.approx(60.0))

    def test_both_sides_split_extension(self):
        f = self.grid_field(lambda x: np.exp(-((x - 18) ** 2)) + np.exp(-((x + 18) ** 2)))
        s = maybe_enlarge(SimState(f), MID)
        assert {side for _, side in s.enlargements} == {LEFT, RIGHT}
        assert s.field.grid.x_min == pytest.approx(-40.0) and s.field.grid.x_max == pytest.approx(40.0)

    def test_homogeneous_side_compares_to_driver(self):
        bnd = BoundaryRegime(HOMOGENEOUS, DIRICHLET_ZERO)
        f = self.grid_field(lambda x: np.where(x < 0, 0.8, 0.0), bnd, lv=0.8)
        assert maybe_enlarge(SimState(f), MID).enlargements == ()
        bumped = self.grid_field(lambda x: np.where(x < 0, 0.8, 0.0) + 0.1 * np.exp(-((x + 19) ** 2)), bnd, lv=0.8)
        assert maybe_enlarge(SimState(bumped), MID).enlargements == ((0.0, LEFT),)

    def test_periodic_never_enlarges(self):
        f = const_periodic(1.0)
        assert maybe_enlarge(SimState(f), MID).field is f


def test_snapshots_and_diagnostics_schedule():
    tc = TimeConfig(0.1, 1.0, (0.0, 0.5, 1.0), diag_every=2)
    res = run(const_periodic(0.5, n=20), MID, tc)
    assert [t for t, _ in res.snapshots] == [0.0, 0.5, 1.0]
    np.testing.assert_allclose(res.diagnostics.column("t"), [0, 0.2, 0.4, 0.6, 0.8, 1.0])
    with pytest.raises(KeyError):
        res.snapshot(0.3)


def test_run_enlarges_moving_front():
    g = Grid.from_bounds(-10, 10, 0.1)
    f = DensityField(g, np.exp(-((g.x - 5) ** 2)))
    res = run(f, ModelConfig(jump_kernel=G(1, 1, 3)), TimeConfig(0.1, 10.0))
    assert res.enlargements and res.final.field.grid.length >= 40.0 - 1e-9
