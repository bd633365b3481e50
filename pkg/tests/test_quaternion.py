import numpy as np
import pytest

from slewopt import quaternion as qt

RNG = np.random.default_rng(7)


def random_quats(n):
    return qt.normalize(RNG.normal(size=(n, 4)))


def test_identity_element_and_inverse():
    for b in random_quats(20):
        np.testing.assert_allclose(qt.hamilton_product(qt.IDENTITY, b), b, atol=1e-15)
        np.testing.assert_allclose(qt.positive_scalar(qt.hamilton_product(qt.conjugate(b), b)),
                                   qt.IDENTITY, atol=1e-12)


def test_conjugate_is_involution():
    q = random_quats(1)[0]
    assert np.array_equal(qt.conjugate(qt.conjugate(q)), q)


def test_product_matches_rotation_matrix_composition():
    for a, b in zip(random_quats(50), random_quats(50)):
        np.testing.assert_allclose(qt.rotation_matrix(qt.hamilton_product(a, b)),
                                   qt.rotation_matrix(a) @ qt.rotation_matrix(b), atol=1e-12)


def test_left_and_error_matrices_match_products():
    for a, b in zip(random_quats(10), random_quats(10)):
        np.testing.assert_allclose(qt.left_matrix(a) @ b, qt.hamilton_product(a, b), atol=1e-14)
        np.testing.assert_allclose(qt.error_quaternion(b, a),
                                   qt.hamilton_product(qt.conjugate(a), b), atol=1e-14)


def test_error_quaternion_cases():
    q = random_quats(1)[0]
    np.testing.assert_allclose(qt.positive_scalar(qt.error_quaternion(q, q)), qt.IDENTITY,
                               atol=1e-15)
    np.testing.assert_allclose(qt.error_quaternion(q, qt.IDENTITY), q, atol=1e-15)
    q90 = qt.axis_angle_to_quaternion([0, 0, 1], np.pi / 2)
    q45 = qt.axis_angle_to_quaternion([0, 0, 1], np.pi / 4)
    np.testing.assert_allclose(qt.error_quaternion(q90, q45), q45, atol=1e-15)


def test_error_then_compose_recovers_q():
    for q, qd in zip(random_quats(20), random_quats(20)):
        back = qt.hamilton_product(qd, qt.error_quaternion(q, qd))
        np.testing.assert_allclose(back, q, atol=1e-12)


def test_skew_operators():
    O, C = qt.skew_operators(np.zeros(3))
    assert not O.any() and not C.any()
    _, C = qt.skew_operators([1.0, 0.0, 0.0])
    np.testing.assert_array_equal(C @ [0.0, 1.0, 0.0], [0.0, 0.0, 1.0])
    w, v = RNG.normal(size=3), RNG.normal(size=3)
    np.testing.assert_allclose(qt.skew(w) @ v, np.cross(w, v), atol=1e-15)
    q = random_quats(1)[0]
    np.testing.assert_allclose(qt.omega_matrix(w) @ q, qt.xi_matrix(q) @ w, atol=1e-15)
    # Omega is skew, so the kinematics preserve the norm
    np.testing.assert_array_equal(qt.omega_matrix(w), -qt.omega_matrix(w).T)


def test_kinematics_agree_with_body_rate_product():
    # qdot = 0.5 q * (w, 0)
    q, w = random_quats(1)[0], RNG.normal(size=3)
    np.testing.assert_allclose(0.5 * qt.omega_matrix(w) @ q,
                               0.5 * qt.hamilton_product(q, np.r_[w, 0.0], renormalize=False),
                               atol=1e-15)


def test_axis_angle_values():
    np.testing.assert_array_equal(qt.axis_angle_to_quaternion([0, 1, 0], 0.0), qt.IDENTITY)
    np.testing.assert_allclose(qt.axis_angle_to_quaternion([1, 0, 0], np.pi), [1, 0, 0, 0],
                               atol=1e-16)
    q = qt.axis_angle_to_quaternion([1, 1, 1], np.radians(60))
    np.testing.assert_allclose(q, [0.28867513459481287] * 3 + [0.8660254037844387], atol=1e-15)
    with pytest.raises(ValueError):
        qt.axis_angle_to_quaternion([0, 0, 0], 0.1)


def test_axis_angle_round_trip():
    for q in random_quats(50):
        aa = qt.quaternion_to_axis_angle(q)
        assert abs(np.linalg.norm(aa.axis) - 1.0) < 1e-12
        assert 0.0 <= aa.angle <= np.pi
        back = qt.axis_angle_to_quaternion(aa.axis, aa.angle)
        assert np.linalg.norm(qt.rotation_matrix(back) - qt.rotation_matrix(q)) < 1e-9


def test_near_identity_axis_convention():
    aa = qt.quaternion_to_axis_angle([0.0, 0.0, 0.0, -1.0])
    assert aa.angle == 0.0
    np.testing.assert_array_equal(aa.axis, [0.0, 0.0, 1.0])


def test_rotation_vectors_vectorized():
    qs = random_quats(30)
    np.testing.assert_allclose(qt.rotation_vectors(qs),
                               np.array([qt.rotation_vector(q) for q in qs]), atol=1e-12)
    np.testing.assert_allclose(qt.rotation_vectors(qt.IDENTITY), [[0.0, 0.0, 0.0]])


def test_rotation_matrix_round_trip():
    for q in random_quats(50):
        np.testing.assert_allclose(qt.from_rotation_matrix(qt.rotation_matrix(q)),
                                   qt.positive_scalar(q), atol=1e-12)


def test_slerp():
    q0, q1 = random_quats(2)
    np.testing.assert_allclose(qt.slerp(q0, q1, 0.0), q0, atol=1e-15)
    assert qt.angle_between(qt.slerp(q0, q1, 1.0), q1) < 1e-7
    mid = qt.slerp(qt.IDENTITY, qt.axis_angle_to_quaternion([0, 0, 1], np.pi / 2), 0.5)
    np.testing.assert_allclose(mid, qt.axis_angle_to_quaternion([0, 0, 1], np.pi / 4),
                               atol=1e-15)
    for a, b in zip(random_quats(50), random_quats(50)):
        t = RNG.uniform()
        assert abs(qt.angle_between(a, qt.slerp(a, b, t)) - t * qt.angle_between(a, b)) < 1e-9


def test_slerp_stays_unit():
    a, b, t = random_quats(1000), random_quats(1000), RNG.uniform(size=1000)
    norms = [np.linalg.norm(qt.slerp(x, y, s)) for x, y, s in zip(a, b, t)]
    assert np.max(np.abs(np.array(norms) - 1.0)) < 1e-12


def test_equidistributed_axes():
    assert qt.equidistributed_axes(1).shape == (1, 3)
    E = qt.equidistributed_axes(100)
    assert np.max(np.abs(np.linalg.norm(E, axis=1) - 1.0)) < 1e-12
    cos = np.clip(E @ E.T, -1.0, 1.0)
    np.fill_diagonal(cos, -1.0)
    assert np.degrees(np.arccos(cos.max())) >= 15.0
    with pytest.raises(ValueError):
        qt.equidistributed_axes(0)
