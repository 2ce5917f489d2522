import numpy as np
import pytest

from funklab.geometry import NotInteriorError, ProjectiveMap, SupportBody2, apply_projective
from funklab.metrics import (FunkContext, Polyline, circle_curve, curve_length, distance, funk_ball,
                             funk_norm, push_curve)


@pytest.fixture(scope="module")
def disc():
    return SupportBody2.disc(1.0)


def _random_interior(K, rng, n):
    r = np.sqrt(rng.uniform(0, 0.9 ** 2, n))
    t = rng.uniform(0, 2 * np.pi, n)
    return np.stack([r * np.cos(t), r * np.sin(t)], axis=1)


def test_distance_goldens(disc):
    assert distance(disc, "funk", [0, 0], [0.5, 0]) == pytest.approx(np.log(2), abs=1e-12)
    assert distance(disc, "reverse_funk", [0.5, 0], [0, 0]) == pytest.approx(np.log(2), abs=1e-12)
    assert distance(disc, "hilbert", [0, 0], [0.5, 0]) == pytest.approx(0.5 * np.log(3), abs=1e-12)
    for kind in ("funk", "reverse_funk", "hilbert"):
        assert distance(disc, kind, [0.2, 0.1], [0.2, 0.1]) == 0.0
    with pytest.raises(ValueError):
        distance(disc, "euclid", [0, 0], [0.1, 0])
    with pytest.raises(NotInteriorError):
        distance(disc, "funk", [0, 0], [1.5, 0])


def test_funk_norm(disc):
    for a in np.linspace(0, 2 * np.pi, 7):
        assert funk_norm(disc, [0, 0], [np.cos(a), np.sin(a)]) == pytest.approx(1.0)
    assert funk_norm(disc, [0.5, 0], [1, 0]) == pytest.approx(2.0)
    assert funk_norm(disc, [0.5, 0], [-1, 0]) == pytest.approx(2 / 3)


def test_curve_length(disc):
    ctx = FunkContext(disc)
    assert curve_length(ctx, "funk", Polyline([[0, 0], [0.5, 0]])) == pytest.approx(np.log(2), abs=1e-12)
    c = circle_curve(0.5)
    h = curve_length(ctx, "hilbert", c)
    f = curve_length(ctx, "funk", c)
    # along a centred circle the two orientations contribute equally
    assert h == pytest.approx(f, rel=1e-12)
    # funk norm of the tangent of a circle of radius r in the unit disc is r/sqrt(1 - r^2)
    assert f == pytest.approx(2 * np.pi * 0.5 / np.sqrt(0.75), rel=1e-12)


def test_closed_curve_length_chart_independent(disc):
    g = ProjectiveMap.disc_boost(0.4, 0.3)
    gL = apply_projective(g, disc)
    c = circle_curve(0.3, (0.1, -0.2))
    a = curve_length(FunkContext(disc), "funk", c)
    b = curve_length(FunkContext(gL), "funk", push_curve(g, c))
    assert b == pytest.approx(a, abs=1e-6)


def test_triangle_inequality():
    K = SupportBody2.from_fourier([1.2, 0.1, -0.05, 0.04, 0.03])
    rng = np.random.default_rng(1)
    X, Y, Z = (_random_interior(K, rng, 1000) for _ in range(3))
    d = lambda a, b: distance(K, "funk", a, b)  # noqa: E731
    assert np.all(d(X, Z) <= d(X, Y) + d(Y, Z) + 1e-10)


def test_hilbert_projective_invariance(disc):
    g = ProjectiveMap.disc_boost(0.7, 1.1)
    rng = np.random.default_rng(2)
    X, Y = _random_interior(disc, rng, 200), _random_interior(disc, rng, 200)
    gX, gY = g.apply(X), g.apply(Y)
    assert np.allclose(distance(disc, "hilbert", gX, gY), distance(disc, "hilbert", X, Y), atol=1e-8)


def test_chart_cocycle(disc):
    # d(x,y) + d(y,z) - d(x,z) is the same in both charts
    g = ProjectiveMap.disc_boost(0.5, 0.2)
    rng = np.random.default_rng(3)
    X, Y, Z = (_random_interior(disc, rng, 100) for _ in range(3))

    def comb(a, b, c):
        return (distance(disc, "funk", a, b) + distance(disc, "funk", b, c) - distance(disc, "funk", a, c)
                + distance(disc, "funk", c, a) - distance(disc, "funk", c, b) - distance(disc, "funk", b, a))
    assert np.allclose(comb(X, Y, Z), comb(g.apply(X), g.apply(Y), g.apply(Z)), atol=1e-9)


def test_funk_ball(disc):
    assert funk_ball(disc, [0, 0], 0.0).degenerate
    B = funk_ball(disc, [0, 0], np.log(2))
    assert np.allclose(B.h, 0.5)
    K = SupportBody2.from_fourier([1.2, 0.1, -0.05, 0.04, 0.03])
    q = np.array([0.1, 0.05])
    B = funk_ball(K, q, 1.0)
    pts = B.boundary(B.theta)
    assert np.allclose(distance(K, "funk", np.broadcast_to(q, pts.shape), pts), 1.0, atol=1e-9)
