import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from coalkin.kernels import B, G, Kernel, KernelSpecError, parse_kernel

FAMILIES = [G(1, 1), B(1, 1), G(10, 1, 4), B(1, 0.8, 8)]

positive = st.floats(0.05, 20.0, allow_nan=False)
shift = st.floats(0.0, 10.0, allow_nan=False)
kernels = st.builds(
    Kernel, st.sampled_from(["gaussian", "step"]), positive, positive, shift
)


def test_gaussian_at_zero():
    assert G(1, 1)(0.0) == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), rel=1e-15)


def test_shifted_step_at_shift():
    assert B(1, 0.8, 8)(8.0) == pytest.approx(0.3125, rel=1e-15)


def test_step_outside_support():
    assert B(1, 1)(1.0001) == 0.0


def test_step_edge_takes_half_plateau():
    assert B(1, 1)(1.0) == pytest.approx(0.25)
    assert B(1, 1)(0.999) == pytest.approx(0.5)


def test_scalar_in_scalar_out():
    assert isinstance(G(1, 1)(0.3), float)
    assert G(1, 1)(np.zeros(3)).shape == (3,)


@pytest.mark.parametrize("k, lam", [(G(3, 1), 3.0), (B(4, 1), 4.0), (G(10, 1, 4), 10.0)])
def test_total_integral_is_strength(k, lam):
    assert k.total_integral() == lam


def test_step_support_radius_exact():
    assert B(1, 0.8, 8).support_radius() == pytest.approx(8.8)
    assert B(1, 1).support_radius() == 1.0


def test_gaussian_support_radius_tail():
    # two-sided tail beyond R, by the closed-form erfc, must not exceed tol * lam
    for tol in (1e-6, 1e-12):
        r = G(1, 1).support_radius(tol)
        assert special.erfc(r / math.sqrt(2.0)) <= tol * (1 + 1e-9)
        # and a trapezoid tail integral agrees
        x = np.linspace(r, r + 20.0, 200001)
        tail = 2.0 * integrate.trapezoid(G(1, 1)(x), x)
        assert tail == pytest.approx(tol, rel=1e-6)


def test_support_radius_frozen_value():
    # sqrt(2) * erfcinv(1e-12), evaluated once with scipy
    assert G(1, 1).support_radius() == pytest.approx(7.130506848171325, rel=1e-12)
    assert G(1, 1, 3).support_radius() == pytest.approx(10.130506848171325, rel=1e-12)


def test_support_radius_rejects_bad_tol():
    with pytest.raises(ValueError):
        G(1, 1).support_radius(0.0)


@pytest.mark.parametrize("k", FAMILIES, ids=str)
@pytest.mark.parametrize("dx", [0.01, 0.005])
def test_trapezoid_integral_converges_to_strength(k, dx):
    r = k.support_radius(1e-12)
    n = int(math.ceil(r / dx))
    x = dx * np.arange(-n, n + 1)
    total = float(np.sum(k(x)) * dx)
    assert total == pytest.approx(k.total_integral(), rel=1e-8)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("G:1,1", G(1, 1)),
        ("B:1,0.8,8", B(1, 0.8, 8)),
        (" g : 10 , 1 , 4 ", G(10, 1, 4)),
    ],
)
def test_parse(text, expected):
    assert parse_kernel(text) == expected


@pytest.mark.parametrize("text", ["", "X:1,1", "G:1", "G:1,2,3,4", "G:a,1", "G:-1,1", "B:1,0", "G:1,1,-2"])
def test_parse_rejects(text):
    with pytest.raises(KernelSpecError):
        parse_kernel(text)


def test_to_string():
    assert B(1, 0.8, 8).to_string() == "B:1,0.8,8"
    assert str(G(0.02, 0.2)) == "G:0.02,0.2"


@given(kernels)
def test_string_round_trip(k):
    assert parse_kernel(k.to_string()) == k


@given(kernels, st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=20))
def test_even_and_non_negative(k, xs):
    x = np.array(xs)
    v = k(x)
    assert np.all(v >= 0.0)
    assert np.array_equal(v, k(-x))


@given(kernels, st.sampled_from([0.05, 0.1, 0.2]))
def test_taps_match_evaluation(k, dx):
    offs, vals = k.taps(dx)
    assert offs[0] >= 0 and np.all(np.diff(offs) > 0)
    np.testing.assert_array_equal(vals, k(offs * dx))
    dense = k.dense_taps(dx)
    assert dense.size % 2 == 1
    np.testing.assert_array_equal(dense, dense[::-1])


def test_midpoint_taps_sample_doubled_offsets():
    k = B(1, 0.8, 8)
    offs, vals = k.midpoint_taps(0.05)
    np.testing.assert_allclose(vals, k(2 * 0.05 * offs))
    # the shifted plateau spans 7.2 < 2u < 8.8
    assert (2 * 0.05 * offs).min() == pytest.approx(7.2)
