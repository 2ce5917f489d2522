"""Convex curves on the 2-sphere and the Beta function B_K(z).

Curves are stored as trigonometric interpolants in arc length.  The polar
boundary is xi(beta) = x(beta) x x'(beta), parametrized by the same
arc-length parameter, which is also how the boundary integrals are set up.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.optimize import brentq
from scipy.special import gamma, hyp2f1

from .geometry import GeometryError, ProjectiveMap
from .numerics import (QuadratureSpec, RngStream, gauss_legendre, integrate_1d,
                       richardson_limit)

DEFAULT_M = 256
EPS_SCHEDULE = (0.2, 0.14, 0.1, 0.07, 0.05)


class CurveError(GeometryError):
    pass


@dataclass
class BetaResult:
    value: float
    method: str
    spread: float = 0.0
    eps_samples: list = field(default_factory=list)
    stderr: float | None = None
    reliable: bool = True
    extrapolants: tuple = ()

    def to_json(self):
        return {"value": self.value, "method": self.method, "spread": self.spread,
                "stderr": self.stderr, "reliable": self.reliable,
                "eps_table": [{"eps": e, "F": v} for e, v in self.eps_samples],
                "extrapolants": list(self.extrapolants)}


def _coef(P):
    M = P.shape[0]
    c = np.fft.rfft(P, axis=0) / M
    c[1:] *= 2.0
    c[-1] = 0.0
    return c


def _eval(c, omega, t, order=0):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    k = np.arange(c.shape[0]) * omega
    out = np.empty((t.size, c.shape[1]))
    ck = c * ((1j * k) ** order)[:, None]
    for s in range(0, t.size, 1024):
        E = np.exp(1j * np.outer(t[s:s + 1024], k))
        out[s:s + 1024] = np.real(E @ ck)
    return out


def _fine(c, M_out, order=0):
    """Values of the interpolant (or a derivative) on a uniform grid of M_out points over one period."""
    k = np.arange(c.shape[0])
    cc = c * ((1j * k) ** order)[:, None]
    full = np.zeros((M_out // 2 + 1, c.shape[1]), dtype=complex)
    n = min(cc.shape[0], full.shape[0])
    full[:n] = cc[:n]
    full[1:] *= 0.5
    return np.fft.irfft(full * M_out, M_out, axis=0)


class SphericalCurve:
    """Closed curve on S^2 by M samples equally spaced in arc length."""

    def __init__(self, samples, length: float):
        P = np.asarray(samples, dtype=float)
        if P.ndim != 2 or P.shape[1] != 3 or P.shape[0] % 2 or P.shape[0] < 16:
            raise CurveError("samples must be an (M, 3) array with M even and >= 16")
        self.X = P / np.linalg.norm(P, axis=1, keepdims=True)
        self.M = P.shape[0]
        self.length = float(length)
        self.omega = 2 * np.pi / self.length
        self.c = _coef(self.X)
        self.alpha = self.length * np.arange(self.M) / self.M
        self.X1 = _fine(self.c, self.M, 1) * self.omega
        self.X2 = _fine(self.c, self.M, 2) * self.omega ** 2
        self._validate()

    def _validate(self):
        nrm = np.abs(np.linalg.norm(self.X, axis=1) - 1)
        if nrm.max() > 1e-10:
            raise CurveError("samples are not on the unit sphere")
        speed = np.abs(np.linalg.norm(self.X1, axis=1) - 1)
        if speed.max() > 1e-8:
            raise CurveError(f"parametrization is not arc length (speed error {speed.max():.1e})")
        if self.kappa_samples.min() <= 0:
            raise CurveError("curve is not spherically convex (geodesic curvature must be > 0)")

    @property
    def kappa_samples(self):
        return np.einsum("ij,ij->i", self.X, np.cross(self.X1, self.X2))

    def eval(self, alpha, order=0):
        return _eval(self.c, self.omega, alpha, order)

    def kappa(self, alpha):
        x, x1, x2 = self.eval(alpha), self.eval(alpha, 1), self.eval(alpha, 2)
        return np.einsum("ij,ij->i", x, np.cross(x1, x2))

    def xi(self, beta, order=0):
        """Polar boundary point x x x' (order 0) or its derivative x x x'' (order 1)."""
        x = self.eval(beta)
        return np.cross(x, self.eval(beta, 1 + order))

    @property
    def area(self):
        """Gauss-Bonnet: 2 pi minus the total geodesic curvature."""
        return float(2 * np.pi - self.length / self.M * self.kappa_samples.sum())

    @property
    def polar_area(self):
        """The polar of a spherically convex body has area 2 pi minus the perimeter."""
        return float(2 * np.pi - self.length)

    @classmethod
    def from_param(cls, P, M: int = DEFAULT_M, iters: int = 6):
        """Re-fit samples P (uniform in some periodic parameter) to arc length with M samples."""
        P = np.asarray(P, dtype=float)
        P = P / np.linalg.norm(P, axis=1, keepdims=True)
        for _ in range(iters):
            c = _coef(P)
            n = P.shape[0]
            nf = 4 * max(n, M)
            d1 = _fine(c, nf, 1)
            speed = np.linalg.norm(d1, axis=1)
            sc = np.fft.rfft(speed) / nf
            sc[1:] *= 2
            sc[-1] = 0
            L = 2 * np.pi * sc[0].real
            k = np.arange(sc.size)

            def S(t):
                t = np.atleast_1d(t)
                E = np.exp(1j * np.outer(t, k[1:]))
                return sc[0].real * t + np.real((E - 1) @ (sc[1:] / (1j * k[1:])))

            def speed_at(t):
                return np.linalg.norm(_eval(c, 1.0, t, 1), axis=1)
            target = L * np.arange(M) / M
            t = 2 * np.pi * np.arange(M) / M
            for _ in range(30):
                step = (S(t) - target) / speed_at(t)
                t = t - step
                if np.max(np.abs(step)) < 1e-15:
                    break
            Pn = _eval(c, 1.0, t)
            Pn /= np.linalg.norm(Pn, axis=1, keepdims=True)
            done = (n == M and np.max(np.abs(speed - L / (2 * np.pi))) < 1e-12 * L)
            P = Pn
            if done:
                break
        return cls(P, L)

    @classmethod
    def from_samples(cls, points, M: int = DEFAULT_M):
        """Fit raw ordered samples with a periodic quintic spline in chord length, then re-fit."""
        Q = np.asarray(points, dtype=float)
        Q = Q / np.linalg.norm(Q, axis=1, keepdims=True)
        if Q.shape[0] < 8:
            raise CurveError("need at least 8 sample points")
        closed = np.vstack([Q, Q[:1]])
        d = np.linalg.norm(np.diff(closed, axis=0), axis=1)
        u = np.concatenate([[0.0], np.cumsum(d)])
        spl = make_interp_spline(u, closed, k=5, bc_type="periodic")
        tt = u[-1] * np.arange(4 * M) / (4 * M)
        return cls.from_param(spl(tt), M)

    def to_json(self):
        return {"type": "samples", "points": self.X.tolist()}


def cap_curve(theta0: float, M: int = DEFAULT_M, pole=(0.0, 0.0, 1.0)) -> SphericalCurve:
    """Circle at colatitude theta0 about `pole`, counter-clockwise seen from outside."""
    if not 0 < theta0 < np.pi / 2:
        raise CurveError("colatitude must lie in (0, pi/2)")
    s, c = np.sin(theta0), np.cos(theta0)
    t = 2 * np.pi * np.arange(M) / M
    P = np.stack([s * np.cos(t), s * np.sin(t), np.full(M, c)], axis=1)
    p = np.asarray(pole, dtype=float)
    p = p / np.linalg.norm(p)
    R = _frame(p)
    return SphericalCurve(P @ R.T, 2 * np.pi * s)


def _frame(p):
    """Rotation taking e3 to p (columns e1, e2, p)."""
    a = np.array([1.0, 0, 0]) if abs(p[0]) < 0.9 else np.array([0, 1.0, 0])
    e1 = a - (a @ p) * p
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(p, e1)
    return np.stack([e1, e2, p], axis=1)


def polar_curve(K: SphericalCurve, M: int | None = None) -> SphericalCurve:
    """Boundary of the polar body, xi = x x x', re-fitted to arc length."""
    return SphericalCurve.from_param(np.cross(K.X, K.X1), M or K.M)


def projective_push(g, K: SphericalCurve, M: int | None = None) -> SphericalCurve:
    """Image x -> g x / |g x| of the curve."""
    G = g.matrix if isinstance(g, ProjectiveMap) else np.asarray(g, dtype=float)
    if np.linalg.det(G) <= 0:
        raise CurveError("map must preserve orientation")
    try:
        return SphericalCurve.from_param(K.X @ G.T, M or K.M)
    except CurveError as e:
        raise CurveError(f"map too strong: {e}") from None


# -- Beta function ----------------------------------------------------------------------------

def cap_closed_form(z: float) -> float:
    """The cap-at-height-1/sqrt(2) expression
    -(4 pi/(z+1)) (pi (1 - 1/sqrt 2) - sqrt(pi) Gamma(z+5/2)/Gamma(z+3) 2F1(1, z+5/2; z+3; -1)).

    It is negative for z >= 0, where the Beta integral is positive.
    """
    return float(-4 * np.pi / (z + 1) * (np.pi * (1 - 1 / np.sqrt(2))
                                         - np.sqrt(np.pi) * gamma(z + 2.5) / gamma(z + 3)
                                         * hyp2f1(1, z + 2.5, z + 3, -1)))


def _grid_pairs(K: SphericalCurve):
    X, X1, X2 = K.X, K.X1, K.X2
    Xi = np.cross(X, X1)
    Xi1 = np.cross(X, X2)
    t = np.clip(X @ Xi.T, 0.0, None)
    A = X1 @ Xi.T          # <x'(a), xi(b)>
    B = X @ Xi1.T          # <x(a), xi'(b)>
    return t, A, B


def _R(zp1, t):
    """R_{z+1}(t) = (1 - t^(z+1)) / (1 - t^2), continuous at t = 1."""
    near = np.abs(1 - t) < 1e-6
    tt = np.where(near, 0.5, t)
    val = (1 - tt ** zp1) / (1 - tt * tt)
    return np.where(near, 0.5 * zp1, val)


def beta_stokes(K: SphericalCurve, z: float) -> BetaResult:
    """Boundary double integral of the primitive omega_z, oriented so that B(0) > 0."""
    if z < 0:
        raise ValueError("the boundary formula needs z >= 0")
    t, A, B = _grid_pairs(K)
    h = K.length / K.M
    val = -np.sum(_R(z + 1, t) * A * B) * h * h / (z + 1)
    return BetaResult(float(val), "stokes")


def _inside(points, normals):
    return np.all(points @ normals.T >= 0, axis=1)


def _sample_region(boundary_normals, center, radius, n, rng_stream):
    """Uniform samples in the spherical region {y : <y, n_k> >= 0} by rejection from a cap."""
    R = _frame(center)
    out = []
    got = 0
    block = 0
    while got < n:
        U = rng_stream.block(block).random((1 << 16, 2))
        block += 1
        cr = 1 - U[:, 0] * (1 - np.cos(radius))
        sr = np.sqrt(np.clip(1 - cr * cr, 0, None))
        ps = 2 * np.pi * U[:, 1]
        Y = np.stack([sr * np.cos(ps), sr * np.sin(ps), cr], axis=1) @ R.T
        Y = Y[_inside(Y, boundary_normals)]
        out.append(Y)
        got += Y.shape[0]
    return np.concatenate(out)[:n]


def _bounding_cap(B):
    c = B.mean(axis=0)
    c /= np.linalg.norm(c)
    r = float(np.max(np.arccos(np.clip(B @ c, -1, 1))))
    return c, min(np.pi, r * 1.02 + 1e-3)


def beta_direct(K: SphericalCurve, z: float, method: str = "direct", seed: int = 0,
                samples: int = 1 << 18, batches: int = 32) -> BetaResult:
    """B_K(z) by Monte Carlo over K x K-polar ("direct") or by the boundary formula ("stokes")."""
    if method == "stokes":
        return beta_stokes(K, z)
    if method != "direct":
        raise ValueError("method must be 'direct' or 'stokes'")
    if z <= -1:
        raise ValueError("the direct integral needs z > -1")
    area_k, area_p = K.area, K.polar_area
    if z == 0:
        return BetaResult(area_k * area_p, "direct", stderr=0.0)
    dense = max(4 * K.M, 1024)
    al = K.length * np.arange(dense) / dense
    Xb = K.eval(al)
    Xib = np.cross(Xb, K.eval(al, 1))
    Xib /= np.linalg.norm(Xib, axis=1, keepdims=True)
    cK, rK = _bounding_cap(Xb)
    cP, rP = _bounding_cap(Xib)
    xs = _sample_region(Xib, cK, rK, samples, RngStream(seed, 0))
    ps = _sample_region(Xb, cP, rP, samples, RngStream(seed, 1))
    vals = np.clip(np.einsum("ij,ij->i", xs, ps), 0, None) ** z * area_k * area_p
    means = np.array([b.mean() for b in np.array_split(vals, batches)])
    return BetaResult(float(vals.mean()), "direct", stderr=float(means.std(ddof=1) / np.sqrt(batches)))


def _eps_integral(K: SphericalCurve, eps: float, n_alpha: int, spec: QuadratureSpec):
    """J(eps) = double integral over {<x, xi> >= eps^2} of <x', xi><x, xi'>/<x, xi>^2."""
    L = K.length
    e2 = eps * eps
    alphas = L * np.arange(n_alpha) / n_alpha
    scan = np.linspace(0.0, 0.5 * L, 257)[1:]
    total = 0.0
    for a in alphas:
        x = K.eval(a)[0]
        x1 = K.eval(a, 1)[0]

        def t_of(phi):
            return K.xi(a + np.atleast_1d(phi)) @ x

        def root(sign):
            tv = t_of(sign * scan)
            idx = np.argmax(tv >= e2)
            if tv[idx] < e2:
                raise CurveError("cut-off level not reached; eps too large for this curve")
            lo = scan[idx - 1] if idx > 0 else 0.0
            return brentq(lambda p: t_of(sign * p)[0] - e2, lo, scan[idx], xtol=1e-15, rtol=1e-15)
        ap, am = root(1.0), root(-1.0)
        lo, hi = a + ap, a + L - am
        chk = t_of(np.linspace(ap, L - am, 513))
        if chk.min() < e2 * (1 - 1e-9):
            raise CurveError("region {<x,xi> < eps^2} is not a single band around the diagonal")

        def g(b):
            xi = K.xi(b)
            xi1 = K.xi(b, 1)
            tt = xi @ x
            return (xi @ x1) * (xi1 @ x) / (tt * tt)
        total += integrate_1d(g, lo, hi, spec)
    return total * L / n_alpha


def beta_minus3(K: SphericalCurve, eps_schedule=EPS_SCHEDULE, n_alpha: int = 32,
                tol: float = 5e-3) -> BetaResult:
    """Regularized B_K(-3): F(eps) = J(eps)/2 + (2 sqrt 2/eps) * integral of sqrt(kappa),
    extrapolated to eps -> 0 assuming an O(eps) remainder.

    Both boundary curves are traversed counter-clockwise (x(alpha) and
    xi(beta) = x(beta) x x'(beta)), the orientation in which the counterterm
    cancels the 1/eps divergence of J.
    """
    spec = QuadratureSpec(abs_tol=1e-11, rel_tol=1e-12, max_subdivisions=4000)
    kap = K.kappa_samples
    ct_int = 2 * np.sqrt(2) * K.length / K.M * np.sum(np.sqrt(kap))
    table = []
    for eps in eps_schedule:
        J = _eps_integral(K, eps, n_alpha, spec)
        table.append((float(eps), float(0.5 * J + ct_int / eps)))
    rr = richardson_limit(table, order=1.0, tol=tol)
    return BetaResult(rr.value, "regularized", rr.spread, table, None, rr.reliable, rr.extrapolants)


def counterterm(K: SphericalCurve, eps: float) -> float:
    return float(2 * np.sqrt(2) / eps * K.length / K.M * np.sum(np.sqrt(K.kappa_samples)))


def near_diagonal_ratio(K: SphericalCurve, offset: float = 1e-3):
    """<x(a), xi(a + d)>/d^2 at every sample for a small offset d; tends to kappa/2."""
    t = np.einsum("ij,ij->i", K.X, K.xi(K.alpha + offset))
    return t / offset ** 2


# -- spherical Funk volume -----------------------------------------------------------------------

def _region_rule(B, dB, center, n_r):
    """Nodes/weights on the region enclosed by the boundary samples B (derivatives dB) about center.

    Geodesic polar coordinates (r, psi) about the center; the outer integral
    runs over the boundary parameter with d psi = psi'(beta) d beta.
    """
    R = _frame(center)
    Bl, dBl = B @ R, dB @ R
    r_b = np.arccos(np.clip(Bl[:, 2], -1, 1))
    psi = np.arctan2(Bl[:, 1], Bl[:, 0])
    dpsi = (Bl[:, 0] * dBl[:, 1] - Bl[:, 1] * dBl[:, 0]) / (Bl[:, 0] ** 2 + Bl[:, 1] ** 2)
    if np.any(dpsi <= 0):
        raise CurveError("region is not star-shaped about its center")
    xg, wg = gauss_legendre(n_r, 0.0, 1.0)
    r = r_b[:, None] * xg[None, :]
    w = dpsi[:, None] * r_b[:, None] * wg[None, :] * np.sin(r)
    P = np.stack([np.sin(r) * np.cos(psi)[:, None], np.sin(r) * np.sin(psi)[:, None], np.cos(r)], axis=-1)
    return (P @ R.T).reshape(-1, 3), w.ravel()


def funk_ht_volume_spherical(K: SphericalCurve, Omega: SphericalCurve, n_r: int = 32,
                             n_beta: int | None = None) -> float:
    """(1/pi) * integral over Omega x K-polar of <x, xi>^-3."""
    m = n_beta or K.M
    al = K.length * np.arange(m) / m
    Xb = K.eval(al)
    Xi = np.cross(Xb, K.eval(al, 1))
    dXi = np.cross(Xb, K.eval(al, 2))
    # Omega must sit strictly inside K: positive pairing with every polar boundary point
    if np.min(Omega.X @ (Xi / np.linalg.norm(Xi, axis=1, keepdims=True)).T) <= 1e-9:
        raise CurveError("Omega touches or leaves K")
    h = K.length / m
    cP = Xi.mean(axis=0)
    cP /= np.linalg.norm(cP)
    P, wP = _region_rule(Xi, dXi, cP, n_r)
    wP = wP * h
    cO = Omega.X.mean(axis=0)
    cO /= np.linalg.norm(cO)
    Q, wQ = _region_rule(Omega.X, Omega.X1, cO, n_r)
    wQ = wQ * Omega.length / Omega.M
    T = Q @ P.T
    return float(wQ @ (T ** -3.0) @ wP / np.pi)
