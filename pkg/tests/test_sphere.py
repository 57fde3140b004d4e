import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from panoflow import sphere


def test_sph_to_vec_axes():
    np.testing.assert_allclose(sphere.sph_to_vec(0.0, 0.0), [0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(sphere.sph_to_vec(np.pi / 2, 0.0), [1, 0, 0], atol=1e-15)


def test_sph_to_vec_scalar_formula():
    t, p = 0.3, -0.7
    expected = [np.cos(p) * np.sin(t), np.sin(p), np.cos(p) * np.cos(t)]
    np.testing.assert_array_equal(sphere.sph_to_vec(t, p), expected)


def test_vec_to_sph_poles_and_forward():
    assert sphere.vec_to_sph([0.0, 1.0, 0.0]) == (0.0, np.pi / 2)
    t, p = sphere.vec_to_sph([0.0, 0.0, 1.0])
    assert t == 0.0 and p == 0.0


def test_vec_to_sph_back_axis_is_minus_pi():
    t, _ = sphere.vec_to_sph([0.0, 0.0, -1.0])
    assert t == -np.pi


def test_roundtrip_random(rng):
    t = rng.uniform(-np.pi, np.pi, 10_000)
    p = rng.uniform(-np.pi / 2 + 1e-6, np.pi / 2 - 1e-6, 10_000)
    t2, p2 = sphere.vec_to_sph(sphere.sph_to_vec(t, p))
    assert np.max(np.abs(t2 - t)) < 1e-12
    assert np.max(np.abs(p2 - p)) < 1e-12


@pytest.mark.parametrize(
    "a, b, expected",
    [
        ([1, 0, 0], [1, 0, 0], 0.0),
        ([1, 0, 0], [0, 1, 0], np.pi / 2),
        ([1, 0, 0], [-1, 0, 0], np.pi),
    ],
)
def test_geodesic_cases(a, b, expected):
    assert sphere.geodesic(a, b) == pytest.approx(expected, abs=1e-15)


def test_arc_angle_tangent_plane():
    eps = 1e-3
    s = [0.0, 0.0, 1.0]
    a = [np.sin(eps), 0.0, np.cos(eps)]
    b = [0.0, np.sin(eps), np.cos(eps)]
    assert sphere.arc_angle_at(s, a, b) == pytest.approx(np.pi / 2, abs=1e-6)


def test_arc_angle_degenerate_cases():
    s = np.array([0.0, 0.0, 1.0])
    a = sphere.normalize([0.1, 0.2, 1.0])
    assert sphere.arc_angle_at(s, a, a) == 0.0
    assert sphere.arc_angle_at(s, s, a) == 0.0


def test_rotation_helpers():
    v = np.array([[0.2, -0.3, 0.9]])
    np.testing.assert_array_equal(sphere.rotate(np.eye(3), v), v)
    assert sphere.angle_of(sphere.rot_y(np.pi / 2)) == pytest.approx(np.pi / 2, abs=1e-15)
    R = sphere.axis_angle([1.0, 2.0, 3.0], 0.7)
    np.testing.assert_allclose(sphere.compose(R, sphere.transpose(R)), np.eye(3), atol=1e-12)
    assert sphere.is_rotation(R)
    assert not sphere.is_rotation(np.diag([1.0, 1.0, -1.0]))


def test_rot_y_increases_longitude():
    t, _ = sphere.vec_to_sph(sphere.rotate(sphere.rot_y(0.25), sphere.sph_to_vec(0.1, 0.3)))
    assert t == pytest.approx(0.35, abs=1e-12)


def test_rotvec_matches_axis_angle():
    R = sphere.axis_angle([0.0, 0.0, 2.0], 0.4)
    np.testing.assert_allclose(sphere.rotvec(R), [0.0, 0.0, 0.4], atol=1e-12)


unit = st.floats(-1.0, 1.0, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(st.tuples(unit, unit, unit), st.tuples(unit, unit, unit))
def test_geodesic_symmetric_and_bounded(a, b):
    a, b = np.array(a), np.array(b)
    if np.linalg.norm(a) < 1e-3 or np.linalg.norm(b) < 1e-3:
        return
    a, b = sphere.normalize(a), sphere.normalize(b)
    d = sphere.geodesic(a, b)
    assert 0.0 <= d <= np.pi
    assert d == pytest.approx(sphere.geodesic(b, a), abs=1e-15)
