import numpy as np
import pytest

from funklab.billiards import (BilliardError, BounceState, caustics, dual_orbit, hyperbolic_reflect_direction,
                               initial_state, orbit, pencil_parameter, periodic_orbit, reflect,
                               reflect_variational, stationarity_residual)
from funklab.geometry import Ellipsoid, ProjectiveMap, SupportBody2, apply_projective, unit
from funklab.metrics import distance


@pytest.fixture(scope="module")
def discs():
    return SupportBody2.disc(1.0), SupportBody2.disc(2.0)


@pytest.fixture(scope="module")
def ellipses():
    K = Ellipsoid(np.array([[1.0, 0.15], [0.15, 1.8]]), np.array([0.05, -0.03])).to_body2()
    L = Ellipsoid(np.array([[0.3, -0.04], [-0.04, 0.22]]), np.array([0.1, 0.05])).to_body2()
    return K, L


def _chord_angle(K, a, b):
    X = K.boundary(np.array([a, b]))
    d = X[1] - X[0]
    return np.arccos(np.dot(d, -X[0]) / np.linalg.norm(d) / np.linalg.norm(X[0]))


def test_concentric_reflection_is_euclidean(discs):
    K, L = discs
    s0 = initial_state(K, L, 0.0, np.array([-1.0, 1.0]))
    s1 = reflect(K, L, s0)
    s2 = reflect(K, L, s1)
    assert s1.q == pytest.approx(np.pi / 2, abs=1e-12)
    assert _chord_angle(K, s1.q, s2.q) == pytest.approx(np.pi / 4, abs=1e-12)


def test_diameter_maps_to_itself(discs):
    K, L = discs
    s0 = initial_state(K, L, 0.0, np.array([-1.0, 0.0]))
    s1 = reflect(K, L, s0)
    s2 = reflect(K, L, s1)
    assert s1.q == pytest.approx(np.pi, abs=1e-12)
    assert np.angle(np.exp(1j * s2.q)) == pytest.approx(0.0, abs=1e-12)
    assert np.angle(np.exp(1j * (s2.p - s0.p))) == pytest.approx(0.0, abs=1e-12)


def test_initial_direction_must_point_inward(discs):
    K, L = discs
    with pytest.raises(BilliardError):
        initial_state(K, L, 0.0, np.array([1.0, 0.0]))


def test_variational_agreement(ellipses):
    K, L = ellipses
    s = initial_state(K, L, 0.4, np.array([-0.9, 0.3]))
    for _ in range(10):
        s1 = reflect(K, L, s)
        q2 = reflect(K, L, s1).q
        assert abs(np.angle(np.exp(1j * (reflect_variational(K, L, s.q, s1.q) - q2)))) < 1e-8
        assert abs(stationarity_residual(K, L, s.p, s1.q, s1.p)) < 1e-8
        s = s1


def test_klein_model_agreement():
    K = SupportBody2.ellipse([[4.0, 0.5], [0.5, 2.5]], [0.05, 0.0])
    L = SupportBody2.disc(1.0)
    s = initial_state(K, L, 0.2, np.array([-1.0, 0.4]))
    for _ in range(8):
        s1 = reflect(K, L, s)
        x0, x1 = K.boundary(np.array([s.q, s1.q]))
        b1 = L.boundary(np.array(s1.p))
        d = (b1 - x1) / np.linalg.norm(b1 - x1)
        h = hyperbolic_reflect_direction(x0, x1, unit(s1.q))
        # angle difference via atan2 of cross and dot (arccos loses half the digits)
        assert abs(np.arctan2(d[0] * h[1] - d[1] * h[0], d @ h)) < 1e-8
        s = s1


def test_projective_conjugation(ellipses):
    from funklab.geometry import line_angle_map
    K, L = ellipses
    s0 = initial_state(K, L, 1.0, np.array([-0.2, -1.0]))
    s1 = reflect(K, L, s0)
    g = ProjectiveMap.random_admissible(np.random.default_rng(5), 0.08)
    gK, gL = apply_projective(g, K), apply_projective(g, L)
    t1 = reflect(gK, gL, BounceState(line_angle_map(g, K, s0.q), line_angle_map(g, L, s0.p)))
    assert abs(np.angle(np.exp(1j * (t1.q - line_angle_map(g, K, s1.q))))) < 1e-6
    assert abs(np.angle(np.exp(1j * (t1.p - line_angle_map(g, L, s1.p))))) < 1e-6


def test_two_periodic_data(discs):
    K, L = discs
    orb = orbit(K, L, initial_state(K, L, 0.7, -unit(0.7)), 6)
    q = np.mod(orb.q, 2 * np.pi)
    assert np.allclose(q[::2], q[0], atol=1e-12) and np.allclose(q[1::2], q[1], atol=1e-12)
    assert orb.rotation_number == pytest.approx(0.5)


def test_periodic_concentric(discs):
    K, L = discs
    orb = periodic_orbit(K, L, 2)
    assert orb.total_length == pytest.approx(2 * np.log(3), abs=1e-10)


def test_periodic_invariance_under_disc_homography():
    K, L = SupportBody2.disc(0.5), SupportBody2.disc(1.0)
    g = ProjectiveMap.disc_boost(0.3, 0.4)
    gK, gL = apply_projective(g, K), apply_projective(g, L)
    # 2 d^H(-0.5, 0.5) in the unit disc is 2 log 3
    assert periodic_orbit(gK, gL, 2).total_length == pytest.approx(2 * np.log(3), abs=1e-6)


def test_off_center_two_periodic():
    K = SupportBody2.disc(0.6, (0.2, 0.1))
    L = SupportBody2.disc(1.5, (-0.1, 0.0))
    orb = periodic_orbit(K, L, 2)
    x0, x1 = orb.bounce_points()
    assert orb.total_length == pytest.approx(2 * distance(L, "hilbert", x0, x1), abs=1e-8)
    # the two bounce points lie on the line of centres
    c = np.array([0.3, 0.1])
    u = x1 - x0
    assert abs(u[0] * c[1] - u[1] * c[0]) / np.linalg.norm(u) / np.linalg.norm(c) < 1e-6


def test_periodic_rejects_bad_rotation(discs):
    with pytest.raises(BilliardError):
        periodic_orbit(*discs, 4, rotation=2)


def test_dual_orbit_concentric(discs):
    K, L = discs
    orb = periodic_orbit(K, L, 2)
    d = dual_orbit(orb)
    assert d.kind == "reverse_funk"
    assert d.total_length == pytest.approx(2 * np.log(3), abs=1e-10)
    assert d.rotation_number == pytest.approx(orb.rotation_number)


def test_dual_orbit_ellipses(ellipses):
    K, L = ellipses
    orb = periodic_orbit(K, L, 3)
    d = dual_orbit(orb)
    assert d.total_length == pytest.approx(orb.total_length, rel=1e-6)
    assert d.residual < 1e-8
    assert d.meta["primal_rotation"] == pytest.approx(1 / 3)
    assert d.rotation_number == pytest.approx(orb.rotation_number)
    # double dual about the dual origin reproduces the primal bounce points (shifted by one index)
    a = np.asarray(d.meta["anchor"])
    dd = dual_orbit(d, anchor=np.zeros(2))
    P = dd.inner.boundary(dd.q) + a
    X = K.boundary(orb.q)
    assert np.max(np.abs(np.roll(X, -1, axis=0) - P)) < 1e-8


def test_pencil_parameter():
    B = Ellipsoid(np.eye(2))
    K = Ellipsoid(np.diag([4.0, 4.0]))
    assert pencil_parameter(B, K, [0.9, 0.0]) == pytest.approx(2.24 / 0.19, rel=1e-12)
    assert pencil_parameter(B, K, [0.5, 0.0]) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(BilliardError):
        pencil_parameter(B, K, [1.0, 0.0])


def test_caustics_concentric():
    K, B = Ellipsoid(np.eye(2) / 0.25), Ellipsoid(np.eye(2) / 4.0)
    Kb, Bb = K.to_body2(), B.to_body2()
    orb = orbit(Kb, Bb, initial_state(Kb, Bb, 0.0, np.array([-1.0, 0.9])), 60)
    r = caustics(orb, K, B)
    assert r.harmonic_residual < 1e-9
    for C in (r.inner, r.outer):
        S = C.normalized()
        assert abs(S[0, 0] - S[1, 1]) < 1e-9 and np.max(np.abs([S[0, 1], S[0, 2], S[1, 2]])) < 1e-9


def test_caustics_generic():
    K, B = Ellipsoid(np.diag([1.0, 1 / 0.36])), Ellipsoid(np.eye(2) / 4)
    Kb, Bb = K.to_body2(), B.to_body2()
    orb = orbit(Kb, Bb, initial_state(Kb, Bb, 0.3, np.array([-0.8, 0.5])), 200)
    r = caustics(orb, K, B)
    assert r.t_spread < 1e-8
    assert r.tangency_residual < 1e-6
    assert r.harmonic_residual < 1e-7
    assert r.summary()["t_mean"] == pytest.approx(np.mean(r.t_values))
