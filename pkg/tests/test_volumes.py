import numpy as np
import pytest

from funklab.geometry import (Ellipsoid, GeometryError, LpBall, NotInteriorError, ProjectiveMap,
                              SupportBody2, apply_projective, polar_body)
from funklab.volumes import (MomentSpec, VolumeReport, _ellipsoid_mahler, ball_growth_ratio,
                             centro_affine_area, dual_volume_boundary_asymptotic, funk_ht_volume,
                             funk_volume_duality_check, hilbert_boundary_length_duality,
                             hilbert_ht_volume, mahler_min, mahler_series_check, mahler_tilde,
                             moment_bound, moment_I2j)

DISC = SupportBody2.disc(1.0)
S3 = np.sqrt(3) / 2
TRIANGLE = SupportBody2.polygon(np.array([[1.0, 0.0], [-0.5, S3], [-0.5, -S3]]), 384)


def test_report_rejects_negative_error():
    with pytest.raises(ValueError):
        VolumeReport(1.0, -1.0, "grid", 1)
    assert '"method": "grid"' in VolumeReport(1.0, 0.0, "grid", 1).to_json()


def test_funk_volume_of_disc():
    v = funk_ht_volume(DISC, SupportBody2.disc(0.5))
    assert v.value == pytest.approx(2 * np.pi * (0.75 ** -0.5 - 1), abs=1e-10)
    assert v.value == pytest.approx(0.97201215, abs=1e-8)


def test_funk_volume_small_region():
    z = np.array([0.2, -0.1])
    Om = SupportBody2.disc(1e-3, z)
    v = funk_ht_volume(DISC, Om).value / (np.pi * 1e-6)
    assert v == pytest.approx(DISC.dual_area(z[None])[0] / np.pi, rel=1e-5)


def test_funk_volume_requires_nesting():
    with pytest.raises(GeometryError):
        funk_ht_volume(DISC, SupportBody2.disc(1.2))


def test_funk_volume_projective_invariance():
    K = SupportBody2.disc(0.3, (0.2, 0.1))
    L = SupportBody2.ellipse([[0.5, 0.1], [0.1, 0.8]], [0.1, 0.0])
    g = ProjectiveMap.random_admissible(np.random.default_rng(1), 0.08)
    a = funk_ht_volume(L, K).value
    b = funk_ht_volume(apply_projective(g, L), apply_projective(g, K)).value
    assert b == pytest.approx(a, rel=5e-3)


def test_hilbert_equals_funk_for_symmetric():
    Om = SupportBody2.disc(0.5)
    assert hilbert_ht_volume(DISC, Om).value == pytest.approx(funk_ht_volume(DISC, Om).value, rel=1e-10)


def test_hilbert_triangle_factor():
    Z = np.array([[0.0, 0.0], [0.2, 0.1], [-0.3, 0.0]])
    assert np.allclose(TRIANGLE.symmetral_dual_area(Z) / TRIANGLE.dual_area(Z), 1.5, atol=1e-10)
    Om = SupportBody2.disc(0.2, (0.05, 0.0))
    r = hilbert_ht_volume(TRIANGLE, Om).value / funk_ht_volume(TRIANGLE, Om).value
    assert r == pytest.approx(1.5, abs=1e-8)


@pytest.mark.parametrize("K, L", [
    (SupportBody2.disc(1.0), SupportBody2.disc(2.0)),
    (SupportBody2.disc(0.3, (0.2, 0.1)), SupportBody2.ellipse([[0.5, 0.1], [0.1, 0.8]], [0.1, 0.0])),
], ids=["concentric", "off-center"])
def test_funk_volume_duality(K, L):
    a, b = funk_volume_duality_check(K, L)
    assert b.value == pytest.approx(a.value, rel=5e-3)


def test_hilbert_length_duality_concentric():
    a, b = hilbert_boundary_length_duality(SupportBody2.disc(1.0), SupportBody2.disc(2.0))
    # tangent chords through radius 1 reach the radius 2 circle at distance sqrt(3) both ways
    assert a == pytest.approx(2 * np.pi / np.sqrt(3), rel=1e-8)
    assert b == pytest.approx(a, rel=5e-3)


def test_hilbert_length_duality_rejects_polygons():
    with pytest.raises(GeometryError):
        hilbert_boundary_length_duality(SupportBody2.disc(0.2), TRIANGLE)


def test_mahler_disc_and_ellipse():
    gold = 2 * np.pi ** 2 * (0.75 ** -0.5 - 1)
    assert gold == pytest.approx(3.0536662, abs=1e-7)
    assert mahler_tilde(DISC, np.zeros(2), 0.5).value == pytest.approx(gold, abs=1e-9)
    E = Ellipsoid(np.array([[3.0, 0.4], [0.4, 0.7]]), np.array([0.1, 0.2]))
    r = mahler_tilde(E, None, 0.5)
    assert r.method == "closed-form" and r.value == pytest.approx(gold, rel=1e-14)
    assert mahler_tilde(E.to_body2(), E.center, 0.5).value == pytest.approx(gold, rel=1e-8)


def test_ellipsoid_mahler_three_dimensions():
    from scipy.integrate import quad
    w3 = 4 * np.pi / 3
    ref = 3 * w3 ** 2 * quad(lambda s: s * s * (1 - s * s) ** -2, 0, 0.5)[0]
    assert _ellipsoid_mahler(Ellipsoid(np.eye(3)), 0.5) == pytest.approx(ref, rel=1e-12)


def test_mahler_small_rho():
    v = mahler_tilde(DISC, np.zeros(2), 0.01).value
    assert v == pytest.approx(1e-4 * np.pi * np.pi, rel=1e-2)


def test_mahler_rejects_bad_rho():
    with pytest.raises(ValueError):
        mahler_tilde(DISC, None, 1.0)


def test_square_below_ellipsoid():
    assert mahler_tilde(LpBall(2, np.inf), None, 0.5).value < 3.0536662 * (1 - 1e-3)


def test_mahler_convex_in_q():
    K = SupportBody2.ellipse([[1.0, 0.2], [0.2, 0.6]], [0.1, 0.0])
    a, b = np.array([-0.4, 0.3]), np.array([0.5, -0.2])
    fa, fb = mahler_tilde(K, a, 0.5).value, mahler_tilde(K, b, 0.5).value
    fm = mahler_tilde(K, (a + b) / 2, 0.5).value
    assert fm <= (fa + fb) / 2 + 1e-10


def test_mahler_min_locations():
    q, v = mahler_min(SupportBody2.ellipse([[1.0, 0.2], [0.2, 0.6]]), 0.5)
    assert np.linalg.norm(q) < 1e-6
    q, v = mahler_min(SupportBody2.disc(1.0, (0.3, 0.0)), 0.5)
    assert np.allclose(q, [0.3, 0.0], atol=1e-6)
    assert v.value == pytest.approx(3.0536662, abs=1e-6)


def test_mahler_duality_at_interior_point():
    K = SupportBody2.from_fourier([1.0, 0.08, 0.05, 0.0, 0.03, 0.02, 0.0])
    q = np.array([0.1, -0.05])
    Kq = polar_body(K.translate(-q))
    a = mahler_tilde(K, q, 0.5).value
    b = mahler_tilde(Kq, np.zeros(2), 0.5).value
    assert b == pytest.approx(a, rel=5e-3)


def test_centro_affine_area():
    assert centro_affine_area(DISC) == pytest.approx(2 * np.pi, rel=1e-12)
    assert centro_affine_area(SupportBody2.ellipse([[4.0, 1.0], [1.0, 0.5]])) == pytest.approx(2 * np.pi, rel=1e-8)
    assert centro_affine_area(DISC, (0.5, 0.0)) > 2 * np.pi
    # disc: closed form int (1 - 0.5 cos t)^(-1/2) dt
    from scipy.integrate import quad
    ref = quad(lambda t: (1 - 0.5 * np.cos(t)) ** -0.5, 0, 2 * np.pi)[0]
    assert centro_affine_area(DISC, (0.5, 0.0)) == pytest.approx(ref, rel=1e-10)
    with pytest.raises(GeometryError):
        centro_affine_area(TRIANGLE)
    with pytest.raises(NotInteriorError):
        centro_affine_area(DISC, (1.5, 0.0))


def test_growth_ratio_ellipse():
    E = SupportBody2.ellipse([[2.0, 0.3], [0.3, 0.7]])
    assert ball_growth_ratio(E, np.zeros(2), 12.0) == pytest.approx(2 ** -0.5 * 2 * np.pi, rel=0.02)


def test_boundary_asymptotic_disc():
    m, p = dual_volume_boundary_asymptotic(DISC, 0.3, 0.99)
    assert m == pytest.approx(np.pi / (1 - 0.99 ** 2) ** 1.5, rel=1e-8)
    assert m / p == pytest.approx(1.0, abs=0.02)


def test_boundary_asymptotic_ellipse():
    E = SupportBody2.ellipse([[0.25, 0.0], [0.0, 1.0]])
    m, p = dual_volume_boundary_asymptotic(E, 0.0, 0.995)
    assert m / p == pytest.approx(1.0, abs=0.03)
    scaled = [dual_volume_boundary_asymptotic(E, 0.0, r)[0] * (1 - r) ** 1.5 for r in (0.98, 0.99, 0.995)]
    assert max(scaled) / min(scaled) < 1.02


def test_moments_of_disc():
    D = Ellipsoid(np.eye(2))
    assert moment_I2j(D, MomentSpec(0)).value == pytest.approx(np.pi ** 2, abs=1e-10)
    assert moment_I2j(D, MomentSpec(1)).value == pytest.approx(np.pi ** 2 / 8, abs=1e-10)
    assert moment_I2j(DISC, MomentSpec(1)).value == pytest.approx(np.pi ** 2 / 8, abs=1e-8)


def test_moment_bound_values():
    assert moment_bound(MomentSpec(0, 2)) == pytest.approx(np.pi ** 2)
    assert moment_bound(MomentSpec(1, 2)) == pytest.approx(np.pi ** 2 / 8)
    assert moment_bound(MomentSpec(0, 3)) == pytest.approx(16 * np.pi ** 2 / 9)
    with pytest.raises(ValueError):
        MomentSpec(-1)


def test_moment_l1_strictly_below():
    assert moment_I2j(LpBall(2, 1.0), MomentSpec(1)).value < np.pi ** 2 / 8


def test_moments_three_dimensional_ball():
    r = moment_I2j(LpBall(3, 2.0), MomentSpec(1, 3), seed=3, samples=1 << 16)
    assert abs(r.value - moment_bound(MomentSpec(1, 3))) < 4 * r.error
    assert r.seed == 3


def test_moment_origin_must_be_interior():
    with pytest.raises(NotInteriorError):
        moment_I2j(SupportBody2.disc(0.5, (1.0, 0.0)), MomentSpec(1))


def test_series_identity():
    lhs, s, gap = mahler_series_check(Ellipsoid(np.eye(2)), 0.3, 8)
    assert gap < 1e-6
    assert mahler_series_check(DISC, 0.0, 4) == (0.0, 0.0, 0.0)
    with pytest.raises(GeometryError):
        mahler_series_check(SupportBody2.disc(1.0, (0.1, 0.0)), 0.3, 4)
