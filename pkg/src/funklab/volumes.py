"""Holmes-Thompson Funk and Hilbert volumes, Funk-Mahler volumes, centro-affine
area and the moment functionals I_2j of planar (and, by Monte Carlo, spatial)
convex bodies."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from math import comb

import numpy as np
from scipy.special import factorial2

from .geometry import (TWO_PI, Ellipsoid, GeometryError, LpBall, NotInteriorError, SupportBody2,
                       polar_body, unit, unit_ball_volume)
from .metrics import FunkContext, boundary_curve, curve_length, funk_ball
from .numerics import RngStream, gauss_legendre

RHO_CAP = 1.0 - 1e-4


@dataclass(frozen=True)
class VolumeReport:
    value: float
    error: float
    method: str
    resolution: int
    seed: int | None = None

    def __post_init__(self):
        if not self.error >= 0:
            raise ValueError("error estimate must be nonnegative")

    def __float__(self):
        return self.value

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)


@dataclass(frozen=True)
class MomentSpec:
    j: int
    n: int = 2

    def __post_init__(self):
        if self.j < 0 or self.n < 1:
            raise ValueError("need j >= 0 and n >= 1")


# -- planar body adaptors ---------------------------------------------------------------

class _Planar:
    """Uniform access to support, radial function and dual areas.

    `kinks` lists angles where the radial function about the origin or the
    support function fail to be smooth; quadratures split there.
    """

    smooth = True

    def radial(self, a, phi):
        raise NotImplementedError

    def dual_area(self, Z):
        raise NotImplementedError

    def phi_kinks(self, a):
        return None


class _SB(_Planar):
    def __init__(self, K: SupportBody2):
        self.K = K
        self.smooth = K.smooth
        self._fine = {}

    def radial(self, a, phi):
        return self.K.radial_profile(a, phi)

    def phi_kinks(self, a):
        if self.K.smooth:
            return None
        V = self.K.vertices - np.asarray(a)
        return np.mod(np.arctan2(V[:, 1], V[:, 0]), TWO_PI)

    def _fine_grid(self, M):
        if M not in self._fine:
            th = TWO_PI * np.arange(M) / M
            self._fine[M] = (self.K.fourier_eval(th)[0], unit(th))
        return self._fine[M]

    def dual_area(self, Z):
        """Dual areas with the trapezoid grid refined near the boundary.

        The integrand 1/H^2 has complex poles at distance about sqrt(2 H_min / R)
        from the real axis; the grid is refined until it resolves that scale.
        """
        K = self.K
        Z = np.atleast_2d(Z)
        if not K.smooth:
            return K.dual_area(Z)
        out = np.empty(Z.shape[0])
        Rmax = float(np.max(K.radius_of_curvature_samples))
        level = np.zeros(Z.shape[0], dtype=int)
        for s in range(0, Z.shape[0], 1024):
            H = K.h[None, :] - Z[s:s + 1024] @ K.u.T
            hmin = H.min(axis=1)
            if np.any(hmin <= 0):
                raise NotInteriorError("point is not interior to the body")
            width = np.sqrt(2 * hmin / Rmax)
            need = 40.0 / width
            level[s:s + 1024] = np.maximum(0, np.ceil(np.log2(need / K.N))).astype(int)
        if level.max() > 8:
            raise NotInteriorError("point too close to the boundary for dual-area quadrature")
        for lv in np.unique(level):
            idx = np.nonzero(level == lv)[0]
            if lv == 0:
                out[idx] = K.dual_area(Z[idx])
                continue
            M = K.N << int(lv)
            h, U = self._fine_grid(M)
            step = max(1, 4_000_000 // M)
            for s in range(0, idx.size, step):
                ii = idx[s:s + step]
                H = h[None, :] - Z[ii] @ U.T
                out[ii] = 0.5 * (TWO_PI / M) * np.sum(H ** -2.0, axis=1)
        return out


class _Lp(_Planar):
    """Planar l_p ball with exact support and radial functions."""

    smooth = False

    def __init__(self, B: LpBall, nodes: int = 48):
        self.B = B
        brk = np.pi / 4 * np.arange(9)
        th, w = [], []
        for a, b in zip(brk[:-1], brk[1:]):
            x, ww = gauss_legendre(nodes, a, b)
            th.append(x)
            w.append(ww)
        self.th = np.concatenate(th)
        self.w = np.concatenate(w)
        self.U = unit(self.th)
        self.h = B.support(self.U)

    def radial(self, a, phi):
        if np.any(np.asarray(a) != 0):
            raise GeometryError("exact l_p radial function is only available about the origin")
        return self.B.radial(unit(phi))

    def phi_kinks(self, a):
        return np.pi / 4 * np.arange(8)

    def dual_area(self, Z):
        Z = np.atleast_2d(Z)
        out = np.empty(Z.shape[0])
        for s in range(0, Z.shape[0], 2048):
            H = self.h[None, :] - Z[s:s + 2048] @ self.U.T
            if np.min(H) <= 0:
                raise NotInteriorError("point is not interior to the body")
            out[s:s + 2048] = 0.5 * (H ** -2.0) @ self.w
        return out


def _adapt(K) -> _Planar:
    if isinstance(K, _Planar):
        return K
    if isinstance(K, SupportBody2):
        return _SB(K)
    if isinstance(K, Ellipsoid):
        return _SB(K.to_body2())
    if isinstance(K, LpBall):
        if K.n != 2:
            raise GeometryError("planar quadrature needs n = 2")
        if K.p in (1, 2, np.inf):
            return _SB(K.to_body2())
        return _Lp(K)
    raise TypeError(f"unsupported body type {type(K).__name__}")


def _phi_rule(kinks, n_phi):
    if kinks is None:
        phi = TWO_PI * np.arange(n_phi) / n_phi
        return phi, np.full(n_phi, TWO_PI / n_phi)
    brk = np.unique(np.mod(np.asarray(kinks, dtype=float), TWO_PI))
    brk = np.append(brk, brk[0] + TWO_PI)
    per = max(8, int(np.ceil(n_phi / (brk.size - 1))))
    phi, w = [], []
    for a, b in zip(brk[:-1], brk[1:]):
        if b - a < 1e-12:
            continue
        x, ww = gauss_legendre(per, a, b)
        phi.append(x)
        w.append(ww)
    return np.concatenate(phi), np.concatenate(w)


def _region_integral(Lp: _Planar, anchor, R_L, R_O, phi, wphi, f, order):
    """Integral over {anchor + t u(phi) : t < R_O(phi)} of f(z) dz.

    Radial variable t = R_L (1 - e^-r), so that integrands blowing up at the
    boundary of the ambient body are resolved on uniform panels in r.
    """
    rmax = -np.log1p(-R_O / R_L)
    if np.any(~np.isfinite(rmax)) or np.any(rmax <= 0):
        raise NotInteriorError("region is not strictly inside the ambient body")
    xg, wg = np.polynomial.legendre.leggauss(order)
    Zs, W = [], []
    for k in range(phi.size):
        m = max(1, int(np.ceil(rmax[k])))
        edges = np.linspace(0.0, rmax[k], m + 1)
        r = (0.5 * (edges[1:] - edges[:-1])[:, None] * xg[None, :]
             + 0.5 * (edges[1:] + edges[:-1])[:, None]).ravel()
        wr = (0.5 * (edges[1:] - edges[:-1])[:, None] * wg[None, :]).ravel()
        e = np.exp(-r)
        t = R_L[k] * (-np.expm1(-r))
        jac = R_L[k] * e
        Zs.append(anchor + t[:, None] * unit(phi[k])[None, :])
        W.append(wphi[k] * wr * t * jac)
    Z = np.concatenate(Zs)
    Wt = np.concatenate(W)
    return float(Wt @ f(Z)), Z.shape[0]


def _region_setup(L, Omega, anchor):
    """Adaptors, anchor and a radial profile callable for Omega."""
    Lp = _adapt(L)
    hom = getattr(Omega, "_homothety", None) if isinstance(Omega, SupportBody2) else None
    if anchor is None:
        if hom is not None:
            anchor = hom[1]
        elif isinstance(Omega, (LpBall,)):
            anchor = np.zeros(2)
        else:
            anchor = Omega.centroid if isinstance(Omega, SupportBody2) else np.zeros(2)
    anchor = np.asarray(anchor, dtype=float)
    if hom is not None and np.allclose(hom[1], anchor, rtol=0, atol=1e-15):
        parent = Lp if hom[0] is getattr(Lp, "K", None) else _adapt(hom[0])
        rho = hom[2]

        def R_O(phi):
            return rho * parent.radial(anchor, phi)
        kinks = parent.phi_kinks(anchor)
    else:
        Op = _adapt(Omega)
        R_O = lambda phi: Op.radial(anchor, phi)  # noqa: E731
        kinks = Op.phi_kinks(anchor)
    lk = Lp.phi_kinks(anchor)
    if lk is not None:
        kinks = lk if kinks is None else np.concatenate([kinks, lk])
    return Lp, anchor, R_O, kinks


def _check_nested(L, Omega):
    """Strict inclusion via pointwise support ordering on a fine grid."""
    th = TWO_PI * np.arange(2048) / 2048
    hL = _support(L, th)
    hO = _support(Omega, th)
    if np.any(hO >= hL - 1e-12 * np.max(np.abs(hL))):
        raise NotInteriorError("region is not strictly inside the ambient body")


def _support(K, th):
    if isinstance(K, SupportBody2):
        return K.support(th)
    return K.support(unit(th))


def _integrate(L, Omega, f_of, anchor, n_phi, order):
    Lp, a, R_O, kinks = _region_setup(L, Omega, anchor)
    f = f_of(Lp)

    def one(n_phi, order):
        phi, w = _phi_rule(kinks, n_phi)
        R_L = Lp.radial(a, phi)
        return _region_integral(Lp, a, R_L, R_O(phi), phi, w, f, order)
    v, npts = one(n_phi, order)
    v2, _ = one(max(8, (3 * n_phi) // 4), max(4, order - 4))
    return v, abs(v - v2), npts


def funk_ht_volume(L, Omega, anchor=None, n_phi: int = 128, order: int = 16) -> VolumeReport:
    """(1/pi) * integral over Omega of the area of L^z."""
    if isinstance(Omega, SupportBody2) and Omega.degenerate:
        return VolumeReport(0.0, 0.0, "grid", 0)
    _check_nested(L, Omega)
    v, err, npts = _integrate(L, Omega, lambda Lp: Lp.dual_area, anchor, n_phi, order)
    return VolumeReport(v / np.pi, err / np.pi, "grid", npts)


def hilbert_ht_volume(L, Omega, anchor=None, n_phi: int = 64, order: int = 12) -> VolumeReport:
    """(1/pi) * integral over Omega of the area of the symmetral of L^z."""
    if not isinstance(L, SupportBody2):
        L = L.to_body2()
    _check_nested(L, Omega)
    v, err, npts = _integrate(L, Omega, lambda Lp: lambda Z: L.symmetral_dual_area(Z),
                              anchor, n_phi, order)
    return VolumeReport(v / np.pi, err / np.pi, "grid", npts)


def dual_pair(K: SupportBody2, L: SupportBody2, anchor=None):
    """(L-a)°, (K-a)° for the anchor a (default: area centroid of K); the dual of K inside L."""
    a = K.centroid if anchor is None else np.asarray(anchor, dtype=float)
    return polar_body(L.translate(-a)), polar_body(K.translate(-a)), a


def funk_volume_duality_check(K: SupportBody2, L: SupportBody2, anchor=None):
    """(vol^F_L(K), vol^F_{K dual}(L dual)) with duals taken about the anchor."""
    _check_nested(L, K)
    Ld, Kd, _ = dual_pair(K, L, anchor)
    return funk_ht_volume(L, K), funk_ht_volume(Kd, Ld)


def hilbert_boundary_length_duality(K: SupportBody2, L: SupportBody2, anchor=None, n: int = 512):
    """Hilbert length of the boundary of K in L and of the boundary of L dual in K dual."""
    if not (K.smooth and L.smooth):
        raise GeometryError("boundary lengths need strictly convex smooth bodies")
    _check_nested(L, K)
    Ld, Kd, _ = dual_pair(K, L, anchor)
    primal = curve_length(FunkContext(L), "hilbert", boundary_curve(K), n=n)
    dual = curve_length(FunkContext(Kd), "hilbert", boundary_curve(Ld), n=n)
    return primal, dual


# -- Funk-Mahler volumes --------------------------------------------------------------

def _ellipsoid_mahler(E: Ellipsoid, rho: float) -> float:
    """n omega_n^2 int_0^rho s^(n-1) (1 - s^2)^(-(n+1)/2) ds."""
    n = E.n
    w = unit_ball_volume(n)
    if n == 2:
        integral = 1.0 / np.sqrt(1 - rho ** 2) - 1.0
    elif n == 3:
        integral = 0.5 * (rho / (1 - rho ** 2) - np.arctanh(rho))
    elif n == 1:
        integral = np.arctanh(rho)
    else:
        from scipy.integrate import quad
        integral = quad(lambda s: s ** (n - 1) * (1 - s * s) ** (-(n + 1) / 2), 0, rho,
                        epsabs=0, epsrel=1e-13)[0]
    return float(n * w * w * integral)


def mahler_tilde(K, q=None, rho: float = 0.5, n_phi: int = 128, order: int = 16) -> VolumeReport:
    """Integral over q + rho (K - q) of |K^z| dz."""
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    rho = min(rho, RHO_CAP)
    if isinstance(K, Ellipsoid):
        qq = K.center if q is None else np.asarray(q, dtype=float)
        if np.allclose(qq, K.center, rtol=0, atol=1e-15):
            return VolumeReport(_ellipsoid_mahler(K, rho), 0.0, "closed-form", 0)
        K = K.to_body2()
    if isinstance(K, LpBall) and q is not None and np.any(np.asarray(q) != 0):
        K = K.to_body2(N=4096) if K.p != 2 else K.to_body2()
    q = np.zeros(2) if q is None else np.asarray(q, dtype=float)
    Kp = _adapt(K)
    if isinstance(Kp, _SB):
        if not Kp.K.contains(q)[0]:
            raise NotInteriorError("q is not interior")
        Om = Kp.K.homothet(q, rho)
        v, err, npts = _integrate(Kp, Om, lambda P: P.dual_area, q, n_phi, order)
        return VolumeReport(v, err, "grid", npts)
    # analytic l_p ball about the origin

    def one(n_phi, order):
        kinks = Kp.phi_kinks(q)
        phi, w = _phi_rule(kinks, n_phi)
        R = Kp.radial(q, phi)
        return _region_integral(Kp, q, R, rho * R, phi, w, Kp.dual_area, order)
    v, npts = one(n_phi, order)
    v2, _ = one((3 * n_phi) // 4, order - 4)
    return VolumeReport(v, abs(v - v2), "grid", npts)


def mahler_tilde_gradient(K: SupportBody2, q, rho: float, n_phi: int = 96, order: int = 12):
    """Value, gradient and Hessian in q of the Funk-Mahler volume.

    Substituting z = q + rho (y - q), y in K, gives rho^2 int_K |K^z| dy, so
    derivatives follow from those of the dual area.
    """
    q = np.asarray(q, dtype=float)
    a = K.centroid
    phi, w = _phi_rule(None if K.smooth else _SB(K).phi_kinks(a), n_phi)
    R = K.radial_profile(a, phi)
    xg, wg = gauss_legendre(order, 0.0, 1.0)
    t = R[:, None] * xg[None, :]
    Y = a + t[..., None] * unit(phi)[:, None, :]
    Wt = (w[:, None] * wg[None, :] * t * R[:, None]).ravel()
    Z = q + rho * (Y.reshape(-1, 2) - q)
    A, G, H = K.dual_area(Z, derivatives=True)
    c = rho ** 2
    return (c * Wt @ A, c * (1 - rho) * Wt @ G, c * (1 - rho) ** 2 * np.einsum("m,mij->ij", Wt, H))


def mahler_min(K: SupportBody2, rho: float, tol: float = 1e-12, max_iter: int = 50):
    """Minimizer of q -> mahler_tilde(K, q, rho) by Newton's method on a convex function."""
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    q = K.centroid.copy()
    val, g, H = mahler_tilde_gradient(K, q, rho)
    for _ in range(max_iter):
        step = -np.linalg.solve(H, g)
        lam = 1.0
        while lam > 1e-6:
            cand = q + lam * step
            if K.contains(cand, margin=1e-9)[0]:
                v2, g2, H2 = mahler_tilde_gradient(K, cand, rho)
                if v2 <= val + 1e-14 * abs(val):
                    break
            lam *= 0.5
        else:
            break
        q, val, g, H = cand, v2, g2, H2
        if np.linalg.norm(lam * step) < tol:
            break
    return q, mahler_tilde(K, q, rho)


# -- centro-affine area and boundary asymptotics ----------------------------------------------

def centro_affine_area(K: SupportBody2, q=(0.0, 0.0)) -> float:
    """Trapezoid rule for the integral of (h + h'')^(1/2) / (h - <q,u>)^(1/2) over the normal angle."""
    if not K.smooth:
        raise GeometryError("centro-affine area needs a strictly convex smooth body")
    q = np.asarray(q, dtype=float)
    rc = K.radius_of_curvature_samples
    if np.min(rc) <= 1e-6 * np.max(K.h + np.roll(K.h, K.N // 2)):
        raise GeometryError("curvature not available (h + h'' too small)")
    H = K.h - K.u @ q
    if np.min(H) <= 0:
        raise NotInteriorError("q is not interior")
    return float((TWO_PI / K.N) * np.sum(np.sqrt(rc / H)))


def ball_growth_ratio(K: SupportBody2, q, R: float, n_phi: int = 96, order: int = 16) -> float:
    """vol^F_K(Funk ball of radius R about q) / e^(R/2)."""
    B = funk_ball(K, q, R)
    return funk_ht_volume(K, B, anchor=q, n_phi=n_phi, order=order).value / np.exp(R / 2)


def dual_volume_boundary_asymptotic(K: SupportBody2, p: float, rho: float):
    """(measured, predicted) dual area at rho x(p) as rho -> 1, for the origin interior to K."""
    if not K.smooth:
        raise GeometryError("curvature not available for polygon-mode bodies")
    x = K.boundary(np.array(p))
    hp = float(K.support(np.array(p)))
    k = 1.0 / float(K.radius_of_curvature(np.array(p)))
    measured = float(_SB(K).dual_area(rho * x[None, :])[0])
    predicted = (1 - rho) ** -1.5 * 2 ** -1.5 * np.pi * np.sqrt(k) / hp ** 1.5
    return measured, float(predicted)


# -- moments ------------------------------------------------------------------------------

def moment_bound(spec: MomentSpec) -> float:
    """Ellipsoid value of I_2j: (2 pi)^n (2j-1)!! / ((n+2j) (n+2j)!! (n-2)!!) * (2/pi)^((1-(-1)^n)/2).

    This is the Gaussian moment (2 pi)^n (2j-1)!! (n+2j-2)!!/(n-2)!! pushed
    to bodies; the (2j-1)!! factor sits in the numerator.
    """
    n, j = spec.n, spec.j
    if n < 2:
        raise ValueError("moment bound needs n >= 2")
    df = lambda m: float(factorial2(m)) if m > 0 else 1.0  # noqa: E731
    odd = (2 / np.pi) if n % 2 else 1.0
    return float(TWO_PI ** n * df(2 * j - 1) / ((n + 2 * j) * df(n + 2 * j) * df(n - 2)) * odd)


def _radial_support_funcs(K):
    """Radial function of K and of its polar (1/h) about the origin, with kink angles."""
    if isinstance(K, LpBall):
        if K.n != 2:
            raise GeometryError("planar moment quadrature needs n = 2")
        return (lambda t: K.radial(unit(t)), lambda t: 1.0 / K.support(unit(t)),
                np.pi / 4 * np.arange(8))
    if isinstance(K, Ellipsoid):
        if K.n != 2 or np.any(K.center != 0):
            raise GeometryError("planar moment quadrature needs a centered ellipse")
        return (lambda t: 1.0 / K.gauge_about_center(unit(t)), lambda t: 1.0 / K.support(unit(t)),
                None)
    if isinstance(K, SupportBody2):
        if not K.contains(np.zeros(2))[0]:
            raise NotInteriorError("origin is not interior")
        kinks = None
        if not K.smooth:
            V = K.vertices
            kinks = np.concatenate([np.arctan2(V[:, 1], V[:, 0]), K.theta[K.active_facets]])
        return (lambda t: K.radial_profile(np.zeros(2), t), lambda t: 1.0 / K.support(t), kinks)
    raise TypeError(f"unsupported body type {type(K).__name__}")


def moment_I2j(K, spec: MomentSpec, seed: int = 0, samples: int = 1 << 20,
               n_phi: int = 512) -> VolumeReport:
    """I_2j = (n+2j)^-2 double integral of <p, eta>^2j over the cone measures of K and K°.

    In polar form on each sphere the cone measure is rho^n dw, so for n = 2
    the double integral factorizes after expanding <w, w'>^2j binomially.
    For n = 3 it is estimated by Monte Carlo on S^2 x S^2.
    """
    n, j = spec.n, spec.j
    if n == 2:
        rK, rP, kinks = _radial_support_funcs(K)

        def one(nphi):
            phi, w = _phi_rule(kinks, nphi)
            a = rK(phi) ** (2 + 2 * j)
            b = rP(phi) ** (2 + 2 * j)
            c, s = np.cos(phi), np.sin(phi)
            tot = 0.0
            for k in range(2 * j + 1):
                mono = c ** k * s ** (2 * j - k)
                tot += comb(2 * j, k) * (w @ (a * mono)) * (w @ (b * mono))
            return tot / (2 + 2 * j) ** 2
        v = one(n_phi)
        return VolumeReport(float(v), abs(v - one(n_phi // 2)), "boundary-reduced", n_phi)
    if n == 3:
        if isinstance(K, LpBall):
            rK = lambda W: K.radial(W)  # noqa: E731
            rP = lambda W: 1.0 / K.support(W)  # noqa: E731
        elif isinstance(K, Ellipsoid):
            rK = lambda W: 1.0 / K.gauge_about_center(W)  # noqa: E731
            rP = lambda W: 1.0 / K.support(W)  # noqa: E731
        else:
            raise TypeError("n = 3 moments need an LpBall or Ellipsoid")
        rng = RngStream(seed, stream=1000 + j)
        X = rng.normal(samples, 6)
        W1 = X[:, :3] / np.linalg.norm(X[:, :3], axis=1, keepdims=True)
        W2 = X[:, 3:] / np.linalg.norm(X[:, 3:], axis=1, keepdims=True)
        vals = ((4 * np.pi) ** 2 / (3 + 2 * j) ** 2
                * np.einsum("ij,ij->i", W1, W2) ** (2 * j)
                * rK(W1) ** (3 + 2 * j) * rP(W2) ** (3 + 2 * j))
        batches = np.array([b.mean() for b in np.array_split(vals, 32)])
        return VolumeReport(float(vals.mean()), float(batches.std(ddof=1) / np.sqrt(32)),
                            "monte-carlo", samples, seed)
    raise GeometryError("moments are implemented for n = 2 and n = 3")


def mahler_series_check(K, rho: float, J: int):
    """(mahler_tilde(K, 0, rho), sum_{j<=J} C(n+2j, n) I_2j rho^(n+2j), gap)."""
    if isinstance(K, SupportBody2) and not K.is_symmetric:
        raise GeometryError("series identity needs a centrally symmetric body")
    if isinstance(K, Ellipsoid) and np.any(K.center != 0):
        raise GeometryError("series identity needs a centrally symmetric body")
    if rho == 0:
        return 0.0, 0.0, 0.0
    n = 2
    lhs = mahler_tilde(K, None, rho).value
    terms = [comb(n + 2 * j, n) * moment_I2j(K, MomentSpec(j, n)).value * rho ** (n + 2 * j)
             for j in range(J + 1)]
    s = float(np.sum(terms))
    return lhs, s, abs(lhs - s)
