import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radinfo.spaces import (GridPath, NormedSpaceSpec, dual_norm, euclidean, eval_norm, lp,
                            modulus_of_convexity, norm_gradient, norm_subgradients, parse_space)

P_VALUES = [1.0, 1.5, 2.0, 3.0, 4.0, math.inf]
coords = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
vec3 = st.lists(coords, min_size=3, max_size=3).map(np.array)


@given(st.sampled_from(P_VALUES), vec3, st.floats(-5, 5))
def test_homogeneity(p, v, a):
    s = lp(p, 3)
    assert eval_norm(s, a * v) == pytest.approx(abs(a) * eval_norm(s, v), rel=1e-12, abs=1e-12)


@given(st.sampled_from(P_VALUES), vec3, vec3)
def test_triangle_inequality(p, u, v):
    s = lp(p, 3)
    assert eval_norm(s, u + v) <= eval_norm(s, u) + eval_norm(s, v) + 1e-9


@given(st.sampled_from(P_VALUES), vec3, vec3)
def test_holder(p, u, v):
    s = lp(p, 3)
    assert abs(u @ v) <= eval_norm(s, v) * dual_norm(s, u) + 1e-9


@given(st.sampled_from(P_VALUES), vec3)
def test_subgradients_attain_norm(p, v):
    s = lp(p, 3)
    n = eval_norm(s, v)
    if n < 1e-6:
        return
    for g in norm_subgradients(s, v):
        assert g @ v == pytest.approx(n, rel=1e-9)
        assert dual_norm(s, g) <= 1 + 1e-9


def test_gradient_matches_finite_difference():
    s = lp(3, 2)
    v = np.array([0.4, -1.3])
    h = 1e-6
    fd = [(eval_norm(s, v + h * e) - eval_norm(s, v - h * e)) / (2 * h) for e in np.eye(2)]
    assert np.allclose(norm_gradient(s, v[None])[0], fd, atol=1e-8)


def test_nonsmooth_gradient_rejected():
    with pytest.raises(ValueError):
        norm_gradient(lp(1, 2), np.array([[1.0, 2.0]]))


def test_stacked_vectors():
    out = eval_norm(euclidean(2), np.array([[3.0, 4.0], [0.0, 1.0]]))
    assert out.tolist() == [5.0, 1.0]


def test_large_values_do_not_overflow():
    assert eval_norm(lp(8, 2), np.array([1e300, 1e300])) == pytest.approx(1e300 * 2 ** (1 / 8))


@pytest.mark.parametrize("label", ["lp:p=2,dim=2", "lp:p=inf,dim=3", "euclidean:dim=3", "sup",
                                   "sup_plus_point:t=0.5"])
def test_label_roundtrip(label):
    assert parse_space(label).label == label
    assert parse_space(parse_space(label).label) == parse_space(label)


@pytest.mark.parametrize("label", ["foo", "lp:p=0.5,dim=2", "lp:q=2", "euclidean:dim"])
def test_bad_labels(label):
    with pytest.raises(ValueError):
        parse_space(label)


def test_path_norms():
    grid = np.linspace(0, 1, 9)
    f = GridPath(grid, np.array([0, 0.2, -0.7, 0.1, 0.5, 0.3, 0, 0, 0.1]))
    assert eval_norm(NormedSpaceSpec("sup"), f) == 0.7
    assert eval_norm(parse_space("sup_plus_point:t=0.5"), f) == pytest.approx(1.2)
    with pytest.raises(ValueError):
        eval_norm(euclidean(2), f)


@pytest.mark.parametrize("grid, values", [
    ([0, 0.3, 1], [0, 1, 2]),         # no node at 1/2
    ([0, 0.5, 1], [1, 0, 0]),         # does not start at 0
    ([0, 0.5, 0.5, 1], [0, 0, 0, 0]),
])
def test_gridpath_validation(grid, values):
    with pytest.raises(ValueError):
        GridPath(np.array(grid, float), np.array(values, float))


@pytest.mark.parametrize("eps", [0.5, 1.0, 2.0])
def test_modulus_euclidean_closed_form(eps):
    est = modulus_of_convexity(euclidean(2), eps)
    assert est.value == pytest.approx(1 - math.sqrt(1 - eps ** 2 / 4), abs=1e-6)
    assert est.uniformly_convex


@pytest.mark.parametrize("p", [1.0, math.inf])
def test_modulus_vanishes_for_flat_balls(p):
    est = modulus_of_convexity(lp(p, 2), 1.0)
    assert est.value <= 1e-6
    assert not est.uniformly_convex


def test_modulus_monotone_in_epsilon():
    vals = [modulus_of_convexity(lp(4, 2), e).value for e in (0.25, 0.5, 1.0, 1.5)]
    assert all(b >= a - 1e-7 for a, b in zip(vals, vals[1:]))
    assert 0 < vals[2] < 1 - math.sqrt(0.75)  # flatter than the disk


def test_modulus_euclidean_3d():
    est = modulus_of_convexity(euclidean(3), 1.0)
    assert est.value == pytest.approx(1 - math.sqrt(0.75), abs=1e-6)


def test_modulus_rejects_paths():
    with pytest.raises(ValueError):
        modulus_of_convexity(NormedSpaceSpec("sup"), 1.0)


def test_tiny_values_do_not_underflow():
    assert eval_norm(lp(4, 2), np.array([1e-100, 0.0])) == pytest.approx(1e-100)
    assert eval_norm(euclidean(2), np.array([3e-200, 4e-200])) == pytest.approx(5e-200)
