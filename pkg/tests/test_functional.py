import warnings

import numpy as np
import pytest

from funklab.functional import (BoxTooSmall, GaussianSpec, GridFunction, functional_moment,
                                functional_moment_bound, functional_series, half_space_bound,
                                half_space_sinh, legendre, twisted_product)

GAUSS1 = GaussianSpec(np.eye(1)).to_grid()


def test_gridfunction_validation():
    with pytest.raises(ValueError):
        GridFunction(3, 1.0, 4, np.zeros((4, 4, 4)))
    with pytest.raises(ValueError):
        GridFunction(1, 1.0, 4, np.full(4, np.inf))
    with pytest.raises(ValueError):
        GridFunction(1, 1.0, 4, np.zeros(5))
    with pytest.raises(ValueError):
        GaussianSpec(np.array([[1.0, 0.0], [0.0, -1.0]]))


def test_json_round_trip():
    phi = GridFunction.indicator(-1.0, 1.0, half_width=2.0, resolution=9)
    back = GridFunction.from_json(phi.to_json())
    assert np.array_equal(back.values, phi.values)
    g = GridFunction.from_json({"preset": "gaussian", "n": 2, "resolution": 32})
    assert g.n == 2 and g.values.shape == (32, 32)
    with pytest.raises(ValueError):
        GridFunction.from_json({"preset": "cubic"})


def test_legendre_self_dual_gaussian():
    lp = legendre(GAUSS1)
    x = GAUSS1.axis
    inner = np.abs(x) < 4
    assert np.max(np.abs(lp.values[inner] - 0.5 * x[inner] ** 2)) < GAUSS1.step ** 2


def test_legendre_indicator_is_support_function():
    phi = GridFunction.indicator(-1.0, 1.0, half_width=4.0, resolution=401)
    lp = legendre(phi)
    assert np.allclose(lp.values, np.abs(phi.axis), atol=1e-12)


def test_legendre_translation_rule():
    z = 1.0
    phi = GridFunction.sample(lambda x: 0.5 * x * x, 1, 8.0, 801)
    shifted = GridFunction.sample(lambda x: 0.5 * (x - z) ** 2, 1, 8.0, 801)
    x = phi.axis
    inner = np.abs(x) < 3
    diff = legendre(shifted).values - (legendre(phi).values + z * x)
    assert np.max(np.abs(diff[inner])) < phi.step ** 2


def test_fenchel_and_triple_conjugate():
    phi = GridFunction.power(4.0, 1, half_width=3.0, resolution=201)
    lp = legendre(phi)
    x = phi.axis
    assert np.all(phi.values[:, None] + lp.values[None, :] >= np.outer(x, x) - 1e-12)
    l3 = legendre(legendre(lp))
    assert np.allclose(l3.values, lp.values, atol=1e-12)
    assert np.all(legendre(lp).values <= phi.values + 1e-12)


def test_legendre_two_dimensional_factorizes():
    phi = GridFunction.sample(lambda x, y: 0.5 * x * x + 0.25 * y ** 4, 2, 3.0, 61)
    lp = legendre(phi)
    x = phi.axis
    l1 = legendre(GridFunction.sample(lambda t: 0.5 * t * t, 1, 3.0, 61)).values
    l2 = legendre(GridFunction.sample(lambda t: 0.25 * t ** 4, 1, 3.0, 61)).values
    assert np.allclose(lp.values, l1[:, None] + l2[None, :], atol=1e-12)
    # brute force at one dual point
    X, Y = phi.mesh()
    i, k = 17, 44
    assert lp.values[i, k] == pytest.approx(np.max(X * x[i] + Y * x[k] - phi.values), abs=1e-12)


def test_legendre_rejects_infinite():
    with pytest.raises(ValueError):
        GridFunction.indicator(5.0, 6.0, half_width=1.0, resolution=11)


@pytest.mark.parametrize("n, rho", [(1, 0.0), (1, 0.5), (2, 0.0), (2, 0.5)])
def test_gaussian_twisted_product(n, rho):
    v = twisted_product(GaussianSpec(np.eye(n)).to_grid(), rho)
    assert v == pytest.approx((2 * np.pi) ** n * (1 - rho ** 2) ** (-n / 2), rel=1e-4)


def test_gaussian_exact_path_and_rotation_invariance():
    assert twisted_product(GaussianSpec(np.eye(1)), 0.5) == pytest.approx(7.25520, abs=1e-5)
    c, s = np.cos(0.4), np.sin(0.4)
    U = np.array([[c, -s], [s, c]])
    A = np.diag([2.0, 0.5])
    assert twisted_product(GaussianSpec(U.T @ A @ U), 0.3) == twisted_product(GaussianSpec(A), 0.3)


def test_quartic_strictly_below_gaussian():
    q = twisted_product(GridFunction.power(4.0, 1, half_width=20.0, resolution=2048), 0.5)
    assert q < 2 * np.pi / np.sqrt(0.75)


def test_box_too_small():
    phi = GaussianSpec(np.eye(1)).to_grid(half_width=2.0, resolution=101)
    with pytest.raises(BoxTooSmall, match="box too small"):
        twisted_product(phi, 0.5)


def test_symmetrization_warns():
    phi = GridFunction.sample(lambda x: 0.5 * (x - 0.1) ** 2, 1, 8.0, 1024)
    with pytest.warns(UserWarning, match="symmetrized"):
        twisted_product(phi, 0.2)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        twisted_product(GAUSS1, 0.2)


def test_moments():
    assert functional_moment_bound(1, 1) == pytest.approx(2 * np.pi)
    # E[x^4]^2 = 9 for independent standard normals
    assert functional_moment_bound(1, 2) == pytest.approx(9 * 2 * np.pi)
    assert functional_moment_bound(2, 1) == pytest.approx(2 * (2 * np.pi) ** 2)
    assert functional_moment(GAUSS1, 1) == pytest.approx(2 * np.pi, rel=1e-4)
    g2 = GaussianSpec(np.eye(2)).to_grid()
    assert functional_moment(g2, 0) == pytest.approx((2 * np.pi) ** 2, rel=1e-4)
    assert functional_moment(g2, 1) == pytest.approx(functional_moment_bound(2, 1), rel=1e-4)
    quartic = GridFunction.power(4.0, 1, half_width=20.0, resolution=2048)
    assert functional_moment(quartic, 1) < 2 * np.pi
    with pytest.raises(ValueError):
        functional_moment(GAUSS1, -1)


def test_series_consistency():
    quartic = GridFunction.power(4.0, 1, half_width=20.0, resolution=2048)
    tp, s = functional_series(quartic, 0.3, 10)
    assert s == pytest.approx(tp, rel=1e-8)


def test_half_space_sinh():
    assert half_space_bound(0.5) == pytest.approx(0.604600, abs=1e-6)
    half = GridFunction.sample(lambda x: 0.5 * x * x, 1, 8.0, 1025, half_line=True)
    assert half_space_sinh(half, 0.5) == pytest.approx(0.604600, abs=1e-4)
    assert half_space_sinh(half, 0.0) == 0.0
    q = GridFunction.sample(lambda x: 0.25 * x ** 4, 1, 20.0, 2049, half_line=True)
    assert half_space_sinh(q, 0.5) < 0.604600
    with pytest.raises(ValueError):
        half_space_sinh(GAUSS1, 0.5)


def test_half_line_presets():
    g = GridFunction.from_json({"preset": "gaussian", "n": 1, "half_line": True, "resolution": 1025})
    assert g.half_line and g.axis[0] == 0.0
    assert half_space_sinh(g, 0.5) == pytest.approx(half_space_bound(0.5), abs=1e-4)
    with pytest.raises(ValueError):
        GridFunction.from_json({"preset": "gaussian", "n": 2, "half_line": True})
