import numpy as np
import pytest

from funklab.geometry import (Conic, Ellipsoid, GeometryError, LpBall, NotInteriorError, ProjectiveMap,
                              SupportBody2, apply_projective, cross_ratio, difference_body, dual_body_at,
                              harmonic_residual, pencil_member, polar_body, tangents_from_point)

SQUARE = [[1, 1], [-1, 1], [-1, -1], [1, -1]]


@pytest.fixture(scope="module")
def disc():
    return SupportBody2.disc(1.0)


@pytest.fixture(scope="module")
def square():
    return SupportBody2.polygon(SQUARE)


def test_construction_rejects_bad_samples():
    with pytest.raises(GeometryError):
        SupportBody2(np.ones(10))
    with pytest.raises(GeometryError):
        SupportBody2(-np.ones(64))
    # |cos| is not a support function of a strictly convex body
    with pytest.raises(GeometryError):
        SupportBody2.from_support(lambda t: np.abs(np.cos(t)) + 1e-9)


def test_gauge(disc, square):
    assert disc.gauge(np.array([0.5, 0.0])) == pytest.approx(0.5, abs=1e-12)
    assert square.gauge(np.array([1.0, 1.0])) == pytest.approx(1.0, abs=1e-12)
    E = SupportBody2.ellipse([[0.25, 0], [0, 1]])
    assert E.gauge(np.array([2.0, 0.0])) == pytest.approx(1.0, abs=1e-12)


def test_gauge_support_duality():
    K = SupportBody2.from_fourier([1.2, 0.1, -0.05, 0.04, 0.03])
    P = polar_body(K)
    X = np.random.default_rng(0).uniform(-1, 1, (50, 2))
    assert np.allclose(K.gauge(X), P.support(np.arctan2(X[:, 1], X[:, 0])) * np.linalg.norm(X, axis=1),
                       atol=1e-9)


def test_polar_examples(disc, square):
    assert np.allclose(polar_body(disc).h, 1.0, atol=1e-12)
    assert polar_body(square).area == pytest.approx(2.0, rel=1e-9)
    A = np.array([[2.0, 0.3], [0.3, 0.7]])
    P = polar_body(SupportBody2.ellipse(A))
    E = SupportBody2.ellipse(np.linalg.inv(A))
    assert np.max(np.abs(P.h - E.h)) < 1e-10


def test_polar_involution():
    K = SupportBody2.from_fourier([1.2, 0.1, -0.05, 0.04, 0.03])
    assert np.max(np.abs(polar_body(polar_body(K)).h / K.h - 1)) < 1e-6


def test_dual_body_at(disc, square):
    assert dual_body_at(disc, [0, 0]).area == pytest.approx(np.pi, rel=1e-12)
    assert dual_body_at(disc, [0.5, 0]).area == pytest.approx(np.pi / 0.75 ** 1.5, rel=1e-10)
    assert dual_body_at(square, [0, 0]).area == pytest.approx(2.0, rel=1e-9)
    with pytest.raises(NotInteriorError):
        dual_body_at(disc, [1.5, 0])


def test_area(disc, square):
    assert disc.area == pytest.approx(np.pi, rel=1e-13)
    assert square.area == pytest.approx(4.0, rel=1e-9)
    assert SupportBody2.ellipse([[0.25, 0], [0, 1]]).area == pytest.approx(2 * np.pi, rel=1e-12)


def test_ray_exit(disc, square):
    t, b, _ = disc.ray_exit(np.zeros(2), np.array([1.0, 0]))
    assert t == pytest.approx(1.0) and np.allclose(b, [1, 0])
    t, b, _ = disc.ray_exit(np.array([0.5, 0]), np.array([1.0, 0]))
    assert t == pytest.approx(0.5) and np.allclose(b, [1, 0])
    _, b, _ = square.ray_exit(np.array([0.5, 0.5]), np.array([1.0, 0]))
    assert np.allclose(b, [1, 0.5], atol=1e-12)


def test_apply_projective(disc):
    assert np.allclose(apply_projective(ProjectiveMap.identity(), disc).h, disc.h, atol=1e-10)
    big = apply_projective(ProjectiveMap(np.diag([2.0, 2.0, 1.0])), disc)
    assert big.area == pytest.approx(4 * np.pi, rel=1e-10)
    L = np.array([[1.3, 0.2], [-0.1, 0.8]])
    img = apply_projective(ProjectiveMap.affine(L, [0.1, 0.2]), disc)
    assert img.area == pytest.approx(abs(np.linalg.det(L)) * np.pi, rel=1e-8)


def test_cross_ratio_invariance():
    g = ProjectiveMap(np.array([[1, 0, 0], [0, 1, 0], [0.1, 0, 1.0]]))
    P = np.array([[-1, 0], [-0.5, 0], [0.5, 0], [1, 0]], dtype=float)
    before = cross_ratio(*P)
    after = cross_ratio(*g.apply(P))
    assert after == pytest.approx(before, abs=1e-10)
    # |ac||bd| / (|ab||cd|) = 1.5 * 1.5 / (0.5 * 0.5)
    assert before == pytest.approx(9.0, abs=1e-12)


def test_tangents_from_point(disc):
    for z, expect in (([2.0, 0.0], [[0.5, np.sqrt(3) / 2], [0.5, -np.sqrt(3) / 2]]),
                      ([0.0, 2.0], [[np.sqrt(3) / 2, 0.5], [-np.sqrt(3) / 2, 0.5]])):
        pts = disc.boundary(np.array(tangents_from_point(disc, z)))
        got = sorted(map(tuple, np.round(pts, 12)))
        assert np.allclose(got, sorted(map(tuple, expect)), atol=1e-10)
    E = SupportBody2.ellipse([[0.25, 0], [0, 1]])
    pts = E.boundary(np.array(tangents_from_point(E, [4.0, 0.0])))
    assert np.allclose(pts[:, 0], 1.0, atol=1e-10)
    with pytest.raises(GeometryError):
        tangents_from_point(disc, [0.1, 0.0])


def test_difference_body(disc):
    assert np.allclose(difference_body(disc).h, disc.h)
    T = SupportBody2.polygon([[0, 0], [1, 0], [0, 1]], N=384)
    assert difference_body(T).area == pytest.approx(1.5 * T.area, rel=1e-9)
    E = SupportBody2.ellipse([[1.0, 0.2], [0.2, 0.5]])
    assert np.allclose(difference_body(E).h, E.h, atol=1e-12)


def test_pencil_member():
    C1, C2 = Conic.circle(1.0), Conic.circle(2.0)
    for kind in ("linear", "dual"):
        assert harmonic_residual(pencil_member(C1, C2, 1.0, kind), C1, C1, C1) < 1e-12
        assert np.allclose(pencil_member(C1, C2, 0.0, kind).normalized(), C2.normalized())
    m = pencil_member(C1, C2, 0.5)
    # diag(1 + 1/4, 1 + 1/4, -2)/2 is the circle of radius sqrt(8/5)
    assert np.allclose(m.normalized(), Conic.circle(np.sqrt(8 / 5)).normalized(), atol=1e-12)


def test_harmonic_residual():
    A, B = Conic.circle(1.0), Conic.circle(1.7)
    assert harmonic_residual(A, B, A, B) < 1e-14
    assert harmonic_residual(A, A, A, A) < 1e-14
    r = 1.3
    C = [Conic(np.diag([1.0, 1.0, -r ** (2 * k)])) for k in range(4)]
    assert harmonic_residual(*C) < 1e-12
    scaled = [Conic(s * c.S) for s, c in zip((2.0, -0.3, 5.0, 0.1), C)]
    assert harmonic_residual(*scaled) == pytest.approx(harmonic_residual(*C), abs=1e-13)
    assert harmonic_residual(A, B, B, A) > 1e-3


def test_ellipsoid_and_lp():
    E = Ellipsoid(np.diag([4.0, 1.0]))
    assert E.volume == pytest.approx(np.pi / 2)
    assert E.dual_volume(np.array([0.25, 0.0])) == pytest.approx(2 * np.pi / 0.75 ** 1.5)
    with pytest.raises(GeometryError):
        Ellipsoid(np.array([[1.0, 2.0], [2.0, 1.0]]))
    B = LpBall(2, 1.0)
    assert B.gauge(np.array([0.5, 0.5])) == pytest.approx(1.0)
    assert B.support(np.array([0.3, -0.7])) == pytest.approx(0.7)
    assert LpBall(2, np.inf).to_body2().area == pytest.approx(4.0, rel=1e-9)
    with pytest.raises(GeometryError):
        LpBall(2, 0.5)


def test_homothet_and_contains(disc):
    H = disc.homothet(np.array([0.2, 0.0]), 0.5)
    assert H.area == pytest.approx(np.pi / 4)
    assert H.contains(np.array([0.6, 0.0]))[0]
    assert not H.contains(np.array([0.75, 0.0]))[0]
