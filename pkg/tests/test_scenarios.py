import json

import numpy as np
import pytest

from coalkin.field import DIRICHLET_ZERO, HOMOGENEOUS, PERIODIC
from coalkin.kernels import B, G
from coalkin.operators import LOG_MASS, ModelConfig
from coalkin.scenarios import (
    CONSTANT,
    HEAVISIDE_LEFT,
    HEAVISIDE_RIGHT,
    PERIODIC_KERNEL,
    TABULATED,
    Domain,
    InitialCondition,
    Scenario,
    ScenarioError,
    figure_group,
    figure_ids,
    get_scenario,
    load_scenario,
    registry,
    save_scenario,
)


def minimal_dict():
    return {
        "id": "tiny",
        "domain": {"x_min": -5, "x_max": 5, "dx": 0.1},
        "time": {"dt": 0.1, "t_end": 1.0, "snapshots": [0, 1]},
        "model": {"jump": {"kernel": "G:1,1"}},
        "initial": {"kind": "tabulated", "params": {"rows": [[-1, 0], [0, 1], [1, 0]]}},
        "output": {},
    }


def test_registry_ids_unique_and_roundtrip():
    reg = registry()
    assert len(reg) >= 8
    assert len({s.id for s in reg}) == len(reg)
    for s in reg:
        again = Scenario.from_dict(json.loads(json.dumps(s.to_dict())))
        assert again == s


def test_figure_groups_cover_registry():
    ids = figure_ids()
    assert sum(len(figure_group(f)) for f in ids) == len(registry())
    assert len(figure_group("free-jumps-periodic")) == 4
    with pytest.raises(KeyError):
        figure_group("nope")
    with pytest.raises(KeyError):
        get_scenario("nope")


class TestInitialConditions:
    def test_periodic_bumps(self):
        ic = InitialCondition(PERIODIC_KERNEL, kernel=B(1, 1), period=40.0)
        assert ic.sample(np.array([40.5]))[0] == pytest.approx(0.5)
        assert ic.sample(np.array([-79.5]))[0] == pytest.approx(0.5)
        assert ic.sample(np.array([20.0]))[0] == 0.0
        f = get_scenario("free-jumps-periodic").initial_field()
        assert f.quad_integral() / (f.grid.period / 40.0) == pytest.approx(1.0, rel=1e-12)

    def test_heaviside_half_at_origin(self):
        x = np.array([-1.0, 0.0, 1.0])
        np.testing.assert_array_equal(InitialCondition(HEAVISIDE_LEFT).sample(x), [1.0, 0.5, 0.0])
        np.testing.assert_array_equal(InitialCondition(HEAVISIDE_RIGHT, level=2.0).sample(x), [0.0, 1.0, 2.0])

    def test_far_values(self):
        assert InitialCondition(HEAVISIDE_LEFT, level=0.7).far_values() == (0.7, 0.0)
        assert InitialCondition(CONSTANT, level=0.3).far_values() == (0.3, 0.3)

    def test_tabulated_interpolates_and_vanishes_outside(self):
        ic = InitialCondition(TABULATED, rows=((0.0, 0.0), (1.0, 2.0), (2.0, 0.0)))
        np.testing.assert_allclose(ic.sample(np.array([-1.0, 0.5, 1.5, 3.0])), [0, 1, 1, 0])

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(kind="gaussian"),
            dict(kind=CONSTANT, level=-1.0),
            dict(kind=PERIODIC_KERNEL, kernel=G(1, 1)),
            dict(kind=TABULATED, rows=((0.0, 1.0),)),
            dict(kind=TABULATED, rows=((1.0, 1.0), (0.0, 1.0))),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ScenarioError):
            InitialCondition(**kwargs)


class TestValidation:
    def test_minimal_loads(self):
        s = Scenario.from_dict(minimal_dict())
        assert s.initial_field().grid.n == 101

    @pytest.mark.parametrize("section", ["domain", "time", "model", "initial"])
    def test_missing_section(self, section):
        d = minimal_dict()
        del d[section]
        with pytest.raises(ScenarioError, match=section):
            Scenario.from_dict(d)

    @pytest.mark.parametrize(
        "path,value,match",
        [
            (("domain", "dx"), 0.3, "domain"),
            (("time", "dt"), 0.3, "time"),
            (("model", "jump", "kernel"), "G:1", "model.jump.kernel"),
            (("initial", "kind"), "heaviside_left", "boundary_left"),
        ],
    )
    def test_errors_name_the_field(self, path, value, match):
        d = minimal_dict()
        node = d
        for key in path[:-1]:
            node = node[key]
        node[path[-1]] = value
        with pytest.raises(ScenarioError, match=match):
            Scenario.from_dict(d)

    def test_missing_required_key(self):
        d = minimal_dict()
        del d["domain"]["x_max"]
        with pytest.raises(ScenarioError, match="domain.x_max"):
            Scenario.from_dict(d)

    def test_log_mass_rejects_periodic(self):
        d = minimal_dict()
        d["domain"].update(boundary_left=PERIODIC, boundary_right=PERIODIC)
        d["model"] = {"coalescence": {"type": LOG_MASS, "kernel": "G:1,1"}}
        with pytest.raises(ScenarioError, match="log-mass"):
            Scenario.from_dict(d)

    def test_constant_needs_matching_boundaries(self):
        d = minimal_dict()
        d["initial"] = {"kind": "constant", "params": {"level": 0.5}}
        with pytest.raises(ScenarioError):
            Scenario.from_dict(d)
        d["domain"].update(boundary_left=HOMOGENEOUS, boundary_right=HOMOGENEOUS)
        assert Scenario.from_dict(d).initial_field().left_value == 0.5


def test_with_overrides():
    s = get_scenario("repulsive-jumps").with_overrides(dt=0.25, dx=0.1, t_end=512.0)
    assert s.time.dt == 0.25 and s.domain.dx == 0.1 and s.time.t_end == 512.0
    assert s.time.snapshot_times == (0.0, 192.0, 512.0)
    with pytest.raises(ScenarioError):
        s.with_overrides(dx=0.3)
    with pytest.raises(ValueError):
        s.with_overrides(dt=0.3)


def test_periodic_grid_excludes_period_end():
    g = Domain(0.0, 40.0, 0.5, PERIODIC, PERIODIC).grid()
    assert g.n == 80 and g.period == pytest.approx(40.0)
    assert Domain(0.0, 40.0, 0.5, DIRICHLET_ZERO, DIRICHLET_ZERO).grid().n == 81


def test_save_load(tmp_path):
    s = get_scenario("mass-coalescence")
    p = tmp_path / "s.json"
    save_scenario(s, p)
    assert set(json.loads(p.read_text())) >= {"domain", "time", "model", "initial", "output"}
    assert load_scenario(p) == s


def test_load_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{")
    with pytest.raises(ScenarioError, match="invalid JSON"):
        load_scenario(p)


def test_model_from_registry_is_consistent():
    s = get_scenario("repulsive-jumps")
    assert s.model == ModelConfig(jump_kernel=G(1, 1, 2), repulsion=G(10, 1, 4))
