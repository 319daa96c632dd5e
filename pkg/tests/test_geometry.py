import numpy as np
import pytest
from hypothesis import given, strategies as st

from basecamp.geometry import (
    Transform,
    orthonormal_basis,
    quat_from_axis_angle,
    quat_from_matrix,
    quat_multiply,
    quat_rotate,
    quat_rotation_angle,
    quat_to_matrix,
)


def random_quat(rng):
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)


def test_rotation_matrix_orthonormal():
    rng = np.random.default_rng(0)
    for _ in range(50):
        m = quat_to_matrix(random_quat(rng))
        np.testing.assert_allclose(m @ m.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(m) == pytest.approx(1.0, abs=1e-12)


def test_quat_matrix_round_trip():
    rng = np.random.default_rng(1)
    for _ in range(50):
        q = random_quat(rng)
        q2 = quat_from_matrix(quat_to_matrix(q))
        # q and -q are the same rotation
        assert min(np.linalg.norm(q2 - q), np.linalg.norm(q2 + q)) < 1e-9


def test_axis_angle_rotation():
    q = quat_from_axis_angle([0, 0, 1], np.pi / 2)
    np.testing.assert_allclose(quat_rotate(q, [1, 0, 0]), [0, 1, 0], atol=1e-12)


def test_rotation_angle_between_quats():
    q1 = quat_from_axis_angle([0, 1, 0], 0.3)
    q2 = quat_from_axis_angle([0, 1, 0], 0.3 + 0.021)
    assert quat_rotation_angle(q1, q2) == pytest.approx(0.021, abs=1e-12)


def test_multiply_composition_order():
    qa = quat_from_axis_angle([0, 0, 1], np.pi / 2)
    qb = quat_from_axis_angle([1, 0, 0], np.pi / 2)
    v = np.array([0.0, 1.0, 0.0])
    # quat_multiply(qa, qb) applies qb first
    expected = quat_rotate(qa, quat_rotate(qb, v))
    np.testing.assert_allclose(quat_rotate(quat_multiply(qa, qb), v), expected,
                               atol=1e-12)


def test_transform_compose_inverse():
    rng = np.random.default_rng(2)
    for _ in range(30):
        t1 = Transform(rng.normal(size=3), random_quat(rng))
        t2 = Transform(rng.normal(size=3), random_quat(rng))
        p = rng.normal(size=3)
        np.testing.assert_allclose(
            t1.compose(t2).apply(p), t1.apply(t2.apply(p)), atol=1e-12)
        roundtrip = t1.inverse().apply(t1.apply(p))
        np.testing.assert_allclose(roundtrip, p, atol=1e-12)


@given(st.integers(0, 10_000))
def test_orthonormal_basis_properties(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=3)
    a /= np.linalg.norm(a)
    b1, b2 = orthonormal_basis(a)
    for v in (b1, b2):
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
        assert abs(v @ a) < 1e-12
    assert abs(b1 @ b2) < 1e-12


def test_transform_json_round_trip():
    t = Transform([1, 2, 3], quat_from_axis_angle([0, 1, 0], 0.7))
    t2 = Transform.from_json(t.to_json())
    np.testing.assert_allclose(t2.position, t.position)
    np.testing.assert_allclose(t2.quaternion, t.quaternion)
