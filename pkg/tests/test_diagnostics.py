import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coalkin.diagnostics import (
    DIAGNOSTICS_HEADER,
    DiagnosticsRecord,
    count_maxima,
    heterogeneity_profile,
    mass_functional,
    particle_number,
    spatial_variance,
    stationarity_gap,
)
from coalkin.field import DensityField, Grid

GRID = Grid.from_bounds(-5, 5, 0.05)


def fld(values, grid=GRID):
    return DensityField(grid, np.asarray(values, float))


@given(st.floats(0, 10), st.floats(0, 10), st.integers(0, 2**32 - 1))
def test_number_and_mass_are_linear(a, b, seed):
    rng = np.random.default_rng(seed)
    u, v = rng.random(GRID.n), rng.random(GRID.n)
    for fn in (particle_number, mass_functional):
        combined = fn(fld(a * u + b * v))
        assert combined == pytest.approx(a * fn(fld(u)) + b * fn(fld(v)), rel=1e-12, abs=1e-12)


def test_mass_of_unit_box():
    g = Grid.from_bounds(0, 1, 0.001)
    w = np.ones(g.n)
    assert mass_functional(fld(w, g)) == pytest.approx(np.e - 1, rel=1e-6)


def test_mass_overflow_is_inf_without_warning():
    g = Grid.from_bounds(0, 800, 1.0)
    v = np.zeros(g.n)
    v[750] = 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert mass_functional(fld(v, g)) == np.inf
        v[750] = 0.0
        v[3] = 1.0
        assert np.isfinite(mass_functional(fld(v, g)))


def test_variance_of_constant_is_zero():
    assert spatial_variance(fld(np.full(GRID.n, 0.4))) == 0.0


@given(st.integers(0, 2**32 - 1))
def test_gap_is_a_metric(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (fld(rng.random(GRID.n)) for _ in range(3))
    assert stationarity_gap(a, a) == 0.0
    assert stationarity_gap(a, b) == stationarity_gap(b, a)
    assert stationarity_gap(a, c) <= stationarity_gap(a, b) + stationarity_gap(b, c) + 1e-15


def test_gap_rejects_mismatched_grids():
    with pytest.raises(ValueError):
        stationarity_gap(fld(np.zeros(GRID.n)), fld(np.zeros(11), Grid(0.0, 1.0, 11)))


class TestHeterogeneity:
    def test_constant(self):
        assert heterogeneity_profile(fld(np.ones(GRID.n)), (-2, 2)) == (0.0, 0)

    def test_single_bump(self):
        var, peaks = heterogeneity_profile(fld(np.exp(-GRID.x ** 2)), (-4, 4))
        assert var > 0 and peaks == 1

    def test_counts_separated_bumps(self):
        x = GRID.x
        v = sum(np.exp(-8 * (x - c) ** 2) for c in (-3, -1, 1, 3))
        assert heterogeneity_profile(fld(v), (-5, 5))[1] == 4

    def test_ignores_ripple(self):
        x = GRID.x
        v = np.exp(-x ** 2) + 1e-3 * np.sin(40 * x)
        assert count_maxima(v) == 1

    def test_empty_window(self):
        with pytest.raises(ValueError):
            heterogeneity_profile(fld(np.ones(GRID.n)), (10, 11))


def test_record_rows_and_csv(tmp_path):
    rec = DiagnosticsRecord()
    rec.append(0.0, fld(np.exp(-GRID.x ** 2)))
    rec.append(0.5, fld(0.5 * np.exp(-GRID.x ** 2)), clamped=2)
    with pytest.raises(ValueError):
        rec.append(0.5, fld(np.zeros(GRID.n)))
    assert len(rec) == 2
    np.testing.assert_allclose(rec.column("N"), [np.sqrt(np.pi), 0.5 * np.sqrt(np.pi)], rtol=1e-8)
    assert list(rec.column("clamped")) == [0, 2]
    assert list(rec.column("domain_len")) == [10.0, 10.0]
    p = tmp_path / "diagnostics.csv"
    rec.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == ",".join(DIAGNOSTICS_HEADER) == "t,N,M,var,min,max,clamped,domain_len"
    assert lines[2].split(",")[6] == "2"
