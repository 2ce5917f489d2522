"""Planar convex bodies stored by support samples, plus ellipsoids, l_p balls,
projective maps and conics.

A SupportBody2 keeps h(theta_j) at N uniform normal angles.  Two modes exist:

* smooth: the trigonometric interpolant of the samples is the body; spectral
  derivatives give h', h'' and the radius of curvature h + h''.
* polygon: the body is the intersection of the N supporting half-planes
  {<x, u_j> <= h_j}.  Exact for polygons whose edge normals lie on the grid
  and the natural choice for bodies with corners or flat pieces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import ConvexHull

TWO_PI = 2.0 * np.pi
DEFAULT_N = 512
_CHUNK = 2048


class GeometryError(ValueError):
    pass


class NotInteriorError(GeometryError):
    pass


def unit(theta):
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def unit_perp(theta):
    theta = np.asarray(theta, dtype=float)
    return np.stack([-np.sin(theta), np.cos(theta)], axis=-1)


def wrap(theta):
    return np.mod(theta, TWO_PI)


def normalize_projective(M):
    """Scale to unit Frobenius norm, sign fixed so the largest-magnitude entry is positive."""
    M = np.asarray(M, dtype=float)
    M = M / np.linalg.norm(M)
    flat = M.ravel()
    k = np.argmax(np.abs(flat))
    return M if flat[k] >= 0 else -M


class SupportBody2:
    """Convex body in the plane given by support samples at uniform normals."""

    def __init__(self, h, smooth: bool = True, check: bool = True, degenerate: bool = False):
        h = np.array(h, dtype=float)
        if h.ndim != 1 or h.size < 64 or h.size % 2:
            raise GeometryError("support samples must be a 1-D array of even length >= 64")
        self.h = h
        self.h.setflags(write=False)
        self.N = h.size
        self.smooth = bool(smooth)
        self.degenerate = bool(degenerate)
        self.theta = TWO_PI * np.arange(self.N) / self.N
        self.u = unit(self.theta)
        self.up = unit_perp(self.theta)
        if check and not degenerate:
            self._validate()

    # -- construction helpers -------------------------------------------------
    @classmethod
    def from_support(cls, hfun, N: int = DEFAULT_N, smooth: bool = True):
        theta = TWO_PI * np.arange(N) / N
        return cls(hfun(theta), smooth=smooth)

    @classmethod
    def disc(cls, radius: float = 1.0, center=(0.0, 0.0), N: int = DEFAULT_N):
        c = np.asarray(center, dtype=float)
        return cls.from_support(lambda t: radius + c[0] * np.cos(t) + c[1] * np.sin(t), N)

    @classmethod
    def ellipse(cls, A, center=(0.0, 0.0), N: int = DEFAULT_N):
        """Body {<A(x-c), x-c> <= 1}."""
        return Ellipsoid(np.asarray(A, float), np.asarray(center, float)).to_body2(N)

    @classmethod
    def polygon(cls, vertices, N: int = DEFAULT_N):
        V = np.asarray(vertices, dtype=float)
        return cls.from_support(lambda t: np.max(unit(t) @ V.T, axis=1), N, smooth=False)

    @classmethod
    def from_fourier(cls, coeffs, N: int = DEFAULT_N):
        """h = a0 + sum_k (a_k cos k t + b_k sin k t) from [a0, a1, b1, a2, b2, ...]."""
        c = np.asarray(coeffs, dtype=float)
        if c.size % 2 != 1:
            raise GeometryError("Fourier coefficients must be [a0, a1, b1, ...]")

        def hfun(t):
            out = np.full_like(t, c[0])
            for k in range(1, (c.size - 1) // 2 + 1):
                out += c[2 * k - 1] * np.cos(k * t) + c[2 * k] * np.sin(k * t)
            return out
        return cls.from_support(hfun, N)

    def _validate(self):
        if not np.all(np.isfinite(self.h)):
            raise GeometryError("support samples must be finite")
        width = self.h + np.roll(self.h, self.N // 2)
        if np.min(width) <= 0:
            raise GeometryError("support samples do not describe a body with interior")
        if self.smooth:
            rc = self.radius_of_curvature_samples
            if np.min(rc) <= 1e-6 * np.max(width):
                raise GeometryError("body is not strictly convex (h + h'' must be positive); "
                                    "use polygon mode for bodies with corners or flat pieces")
        else:
            _ = self.vertices

    # -- spectral data ----------------------------------------------------------
    @cached_property
    def _coef(self):
        c = np.fft.rfft(self.h) / self.N
        c[1:] *= 2.0
        c[-1] = 0.0  # drop the Nyquist mode so derivatives stay real and consistent
        return c

    @cached_property
    def _k(self):
        return np.arange(self.N // 2 + 1, dtype=float)

    @cached_property
    def hp(self):
        return self._spectral(1)

    @cached_property
    def hpp(self):
        return self._spectral(2)

    def _spectral(self, order):
        c = np.fft.rfft(self.h)
        k = self._k
        c = c * (1j * k) ** order
        c[-1] = 0.0
        return np.fft.irfft(c, self.N)

    @cached_property
    def radius_of_curvature_samples(self):
        return self.h + self.hpp

    def fourier_eval(self, theta, orders=(0,)):
        """Trigonometric interpolant and its derivatives at arbitrary angles."""
        theta = np.asarray(theta, dtype=float)
        shape = theta.shape
        t = theta.ravel()
        outs = [np.empty(t.size) for _ in orders]
        c, k = self._coef, self._k
        for s in range(0, t.size, _CHUNK):
            E = np.exp(1j * np.outer(t[s:s + _CHUNK], k))
            for o, out in zip(orders, outs):
                out[s:s + _CHUNK] = np.real(E @ (c * (1j * k) ** o))
        return [o.reshape(shape) for o in outs]

    # -- basic geometry ---------------------------------------------------------
    @cached_property
    def steiner_point(self):
        return (2.0 / self.N) * (self.h @ self.u)

    @cached_property
    def vertices(self):
        """Vertices of the half-plane polygon (polygon mode) in counter-clockwise order."""
        idx = self.active_facets
        s = self.steiner_point
        H = self.h[idx] - self.u[idx] @ s
        j2 = np.roll(idx, -1)
        n1, n2 = self.u[idx], self.u[j2]
        H2 = np.roll(H, -1)
        det = n1[:, 0] * n2[:, 1] - n1[:, 1] * n2[:, 0]
        x = (H * n2[:, 1] - H2 * n1[:, 1]) / det
        y = (n1[:, 0] * H2 - n2[:, 0] * H) / det
        return np.stack([x, y], axis=1) + s

    @cached_property
    def active_facets(self):
        s = self.steiner_point
        H = self.h - self.u @ s
        if np.min(H) <= 0:
            raise GeometryError("degenerate polygon body")
        pts = self.u / H[:, None]
        hull = ConvexHull(pts)
        idx = np.sort(hull.vertices)
        # drop facets whose dual point lies on a hull edge (numerically redundant)
        keep = []
        m = idx.size
        for a in range(m):
            p0, p1, p2 = pts[idx[a - 1]], pts[idx[a]], pts[idx[(a + 1) % m]]
            cross = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])
            if cross > 1e-12 * np.max(np.abs(pts)) ** 2:
                keep.append(idx[a])
        return np.array(keep, dtype=int)

    @cached_property
    def boundary_samples(self):
        if self.smooth:
            return self.h[:, None] * self.u + self.hp[:, None] * self.up
        return self.boundary(self.theta)

    def support(self, theta):
        if self.smooth:
            return self.fourier_eval(theta)[0]
        V = self.vertices
        return np.max(unit(theta) @ V.T, axis=-1)

    def support_vec(self, xi):
        """Support function at arbitrary (not necessarily unit) vectors."""
        xi = np.asarray(xi, dtype=float)
        r = np.hypot(xi[..., 0], xi[..., 1])
        return r * self.support(np.arctan2(xi[..., 1], xi[..., 0]))

    def boundary(self, theta):
        """Boundary point with outer normal u(theta)."""
        theta = np.asarray(theta, dtype=float)
        if self.smooth:
            h, hp = self.fourier_eval(theta, (0, 1))
            return h[..., None] * unit(theta) + hp[..., None] * unit_perp(theta)
        V = self.vertices
        k = np.argmax(unit(theta) @ V.T, axis=-1)
        return V[k]

    def boundary_derivative(self, theta):
        """d x / d theta = (h + h'') u_perp (smooth mode)."""
        self._require_smooth("boundary derivative")
        h, hpp = self.fourier_eval(theta, (0, 2))
        return (h + hpp)[..., None] * unit_perp(theta)

    def radius_of_curvature(self, theta):
        self._require_smooth("curvature")
        h, hpp = self.fourier_eval(theta, (0, 2))
        return h + hpp

    def _require_smooth(self, what):
        if not self.smooth:
            raise GeometryError(f"{what} is not available for polygon-mode bodies")
        if self.degenerate:
            raise GeometryError(f"{what} is not available for a degenerate body")

    @cached_property
    def area(self):
        if self.degenerate:
            return 0.0
        if self.smooth:
            return 0.5 * (TWO_PI / self.N) * float(np.sum(self.h ** 2 - self.hp ** 2))
        V = self.vertices
        return 0.5 * float(np.sum(V[:, 0] * np.roll(V[:, 1], -1) - np.roll(V[:, 0], -1) * V[:, 1]))

    @cached_property
    def centroid(self):
        if self.smooth:
            X = self.boundary_samples
            dX = (self.h + self.hpp)[:, None] * self.up
            w = TWO_PI / self.N
            # area centroid via Green: (1/3A) * int x (x dy - y dx)
            cross = X[:, 0] * dX[:, 1] - X[:, 1] * dX[:, 0]
            return (w * (cross @ X)) / (3.0 * self.area)
        V = self.vertices
        V2 = np.roll(V, -1, axis=0)
        cr = V[:, 0] * V2[:, 1] - V2[:, 0] * V[:, 1]
        return ((V + V2) * cr[:, None]).sum(axis=0) / (6.0 * self.area)

    @property
    def is_symmetric(self):
        return bool(np.max(np.abs(self.h - np.roll(self.h, self.N // 2))) <= 1e-10 * np.max(np.abs(self.h)))

    # -- gauges and rays ----------------------------------------------------------
    def _H_grid(self, z):
        H = self.h[None, :] - z @ self.u.T
        return H

    def gauge_from(self, z, v, return_theta: bool = False):
        """Gauge of K - z evaluated at v, i.e. max_theta <v,u>/(h - <z,u>).

        z and v broadcast to shape (M, 2).  Points z must be interior.
        """
        z = np.asarray(z, dtype=float)
        v = np.asarray(v, dtype=float)
        z, v = np.broadcast_arrays(z, v)
        shape = z.shape[:-1]
        z = z.reshape(-1, 2)
        v = v.reshape(-1, 2)
        val = np.empty(z.shape[0])
        th = np.empty(z.shape[0])
        for s in range(0, z.shape[0], _CHUNK):
            val[s:s + _CHUNK], th[s:s + _CHUNK] = self._gauge_chunk(z[s:s + _CHUNK], v[s:s + _CHUNK])
        val, th = val.reshape(shape), th.reshape(shape)
        return (val, th) if return_theta else val

    def _gauge_chunk(self, z, v):
        if self.smooth:
            H = self._H_grid(z)
            if np.min(H) <= 0:
                raise NotInteriorError("point is not interior to the body")
            ratio = (v @ self.u.T) / H
            j = np.argmax(ratio, axis=1)
            th = self.theta[j]
            dmax = TWO_PI / self.N
            for _ in range(12):
                h, hp, hpp = self.fourier_eval(th, (0, 1, 2))
                u, up = unit(th), unit_perp(th)
                vu = np.einsum("ij,ij->i", v, u)
                vup = np.einsum("ij,ij->i", v, up)
                Hh = h - np.einsum("ij,ij->i", z, u)
                Hp = hp - np.einsum("ij,ij->i", z, up)
                F = vup * Hh - vu * Hp
                Fp = -vu * (h + hpp)
                with np.errstate(divide="ignore", invalid="ignore"):
                    step = np.where(Fp != 0, -F / Fp, 0.0)
                step = np.clip(step, -dmax, dmax)
                th = th + step
                if np.max(np.abs(step)) < 1e-15:
                    break
            h = self.fourier_eval(th)[0]
            u = unit(th)
            Hh = h - np.einsum("ij,ij->i", z, u)
            if np.min(Hh) <= 0:
                raise NotInteriorError("point is not interior to the body")
            val = np.einsum("ij,ij->i", v, u) / Hh
            return val, wrap(th)
        idx = self.active_facets
        H = self.h[idx][None, :] - z @ self.u[idx].T
        if np.min(H) <= 0:
            raise NotInteriorError("point is not interior to the body")
        ratio = (v @ self.u[idx].T) / H
        j = np.argmax(ratio, axis=1)
        return ratio[np.arange(z.shape[0]), j], self.theta[idx][j]

    def gauge(self, x):
        """Minkowski functional of K at x (origin must be interior)."""
        x = np.asarray(x, dtype=float)
        return self.gauge_from(np.zeros_like(x), x)

    def contains(self, x, margin: float = 0.0):
        x = np.asarray(x, dtype=float)
        H = self.h[None, :] - np.atleast_2d(x) @ self.u.T
        return np.min(H, axis=1) > margin

    def ray_exit(self, x, v):
        """Smallest t > 0 with x + t v on the boundary; returns (t, b, theta_b)."""
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        g, th = self.gauge_from(x, v, return_theta=True)
        if np.any(g <= 0):
            raise GeometryError("zero direction or degenerate ray")
        t = 1.0 / g
        b = x + t[..., None] * v
        return t, b, th

    def radial_profile(self, z, phi):
        """Distance from interior point z to the boundary along directions u(phi)."""
        z = np.asarray(z, dtype=float)
        phi = np.asarray(phi, dtype=float)
        return 1.0 / self.gauge_from(np.broadcast_to(z, phi.shape + (2,)), unit(phi))

    # -- derived bodies -------------------------------------------------------------
    def translate(self, c):
        c = np.asarray(c, dtype=float)
        return SupportBody2(self.h + self.u @ c, smooth=self.smooth, check=False)

    def scale(self, s: float, about=(0.0, 0.0)):
        a = np.asarray(about, dtype=float)
        if s <= 0:
            raise GeometryError("scale factor must be positive")
        h = (self.u @ a) + s * (self.h - self.u @ a)
        return SupportBody2(h, smooth=self.smooth, check=False)

    def homothet(self, q, rho: float):
        """q + rho (K - q)."""
        q = np.asarray(q, dtype=float)
        h = self.u @ q + rho * (self.h - self.u @ q)
        if rho == 0:
            return SupportBody2(h, smooth=self.smooth, check=False, degenerate=True)
        body = SupportBody2(h, smooth=self.smooth, check=False)
        body._homothety = (self, q.copy(), float(rho))
        return body

    _homothety = None

    def polar(self):
        """Polar body about the origin; h_{K°}(phi) = gauge_K(u(phi))."""
        return polar_body(self)

    def resample(self, N: int):
        if self.smooth:
            th = TWO_PI * np.arange(N) / N
            return SupportBody2(self.support(th), smooth=True)
        return SupportBody2(np.max(unit(TWO_PI * np.arange(N) / N) @ self.vertices.T, axis=1),
                            smooth=False)

    # -- dual area at interior points ----------------------------------------------------
    def dual_area(self, z, derivatives: bool = False):
        """Area of K^z = (K - z)° for interior points z (shape (..., 2)).

        Smooth mode uses 0.5 * int dtheta / (h - <z,u>)^2 with the periodic
        trapezoid rule; polygon mode sums the triangles of the polar polygon.
        With derivatives=True also returns gradient and Hessian in z.
        """
        z = np.asarray(z, dtype=float)
        shape = z.shape[:-1]
        zz = z.reshape(-1, 2)
        area = np.empty(zz.shape[0])
        grad = np.empty((zz.shape[0], 2)) if derivatives else None
        hess = np.empty((zz.shape[0], 2, 2)) if derivatives else None
        for s in range(0, zz.shape[0], _CHUNK):
            zc = zz[s:s + _CHUNK]
            if self.smooth:
                H = self._H_grid(zc)
                if np.min(H) <= 0:
                    raise NotInteriorError("point is not interior to the body")
                w = TWO_PI / self.N
                Hi = 1.0 / H
                area[s:s + _CHUNK] = 0.5 * w * np.sum(Hi ** 2, axis=1)
                if derivatives:
                    H3 = Hi ** 3
                    grad[s:s + _CHUNK] = w * H3 @ self.u
                    H4 = Hi ** 4
                    U = self.u
                    hess[s:s + _CHUNK, 0, 0] = 3 * w * H4 @ (U[:, 0] ** 2)
                    hess[s:s + _CHUNK, 0, 1] = 3 * w * H4 @ (U[:, 0] * U[:, 1])
                    hess[s:s + _CHUNK, 1, 0] = hess[s:s + _CHUNK, 0, 1]
                    hess[s:s + _CHUNK, 1, 1] = 3 * w * H4 @ (U[:, 1] ** 2)
            else:
                idx = self.active_facets
                U1 = self.u[idx]
                U2 = np.roll(U1, -1, axis=0)
                D = U1[:, 0] * U2[:, 1] - U1[:, 1] * U2[:, 0]
                H1 = self.h[idx][None, :] - zc @ U1.T
                if np.min(H1) <= 0:
                    raise NotInteriorError("point is not interior to the body")
                H2 = np.roll(H1, -1, axis=1)
                f = D[None, :] / (H1 * H2)
                area[s:s + _CHUNK] = 0.5 * f.sum(axis=1)
                if derivatives:
                    # d/dz 1/(H1 H2) = (u1/H1 + u2/H2)/(H1 H2)
                    a1 = U1[None, :, :] / H1[:, :, None]
                    a2 = U2[None, :, :] / H2[:, :, None]
                    sv = a1 + a2
                    grad[s:s + _CHUNK] = 0.5 * np.einsum("mk,mki->mi", f, sv)
                    hess[s:s + _CHUNK] = 0.5 * (
                        np.einsum("mk,mki,mkj->mij", f, sv, sv)
                        + np.einsum("mk,mki,mkj->mij", f, a1, a1)
                        + np.einsum("mk,mki,mkj->mij", f, a2, a2))
        if derivatives:
            return area.reshape(shape), grad.reshape(shape + (2,)), hess.reshape(shape + (2, 2))
        return area.reshape(shape)

    def symmetral_dual_area(self, z, n_dirs: int = 256):
        """Area of (1/2)(K^z - K^z) at interior points z.

        The support function of the symmetral in direction phi is the mean of
        the Finsler norms of +u(phi) and -u(phi) at z.
        """
        z = np.atleast_2d(np.asarray(z, dtype=float))
        out = np.empty(z.shape[0])
        if not self.smooth:
            idx = self.active_facets
            U = self.u[idx]
            for m, zc in enumerate(z):
                H = self.h[idx] - U @ zc
                if np.min(H) <= 0:
                    raise NotInteriorError("point is not interior to the body")
                C = U / H[:, None]
                out[m] = _symmetral_polygon_area(C)
            return out
        phi = TWO_PI * np.arange(n_dirs) / n_dirs
        k = np.fft.rfftfreq(n_dirs, 1.0 / n_dirs)
        for m, zc in enumerate(z):
            g = self.gauge_from(np.broadcast_to(zc, (n_dirs, 2)), unit(phi))
            hd = 0.5 * (g + np.roll(g, n_dirs // 2))
            c = np.fft.rfft(hd) * 1j * k
            c[-1] = 0
            hdp = np.fft.irfft(c, n_dirs)
            out[m] = 0.5 * (TWO_PI / n_dirs) * np.sum(hd ** 2 - hdp ** 2)
        return out

    def to_json(self):
        return {"type": "support_samples", "smooth": self.smooth, "h": self.h.tolist()}


def _symmetral_polygon_area(C):
    """Area of (1/2)(P - P) for a convex polygon with (possibly redundant) points C."""
    hull = ConvexHull(C)
    V = C[hull.vertices]
    P = (V[:, None, :] - V[None, :, :]).reshape(-1, 2)
    h2 = ConvexHull(P)
    return 0.25 * h2.volume


# -- operations as free functions (spec surface) ----------------------------------------

def gauge(K: SupportBody2, x):
    return K.gauge(x)


def area(K: SupportBody2) -> float:
    return K.area


def ray_exit(K: SupportBody2, x, v):
    t, b, _ = K.ray_exit(x, v)
    return t, b


def polar_body(K: SupportBody2) -> SupportBody2:
    g = K.gauge(K.u)
    return SupportBody2(g, smooth=K.smooth, check=False)


def dual_body_at(K: SupportBody2, z) -> SupportBody2:
    z = np.asarray(z, dtype=float)
    if not K.contains(z)[0]:
        raise NotInteriorError("not interior")
    g = K.gauge_from(np.broadcast_to(z, (K.N, 2)), K.u)
    return SupportBody2(g, smooth=K.smooth, check=False)


def difference_body(K: SupportBody2) -> SupportBody2:
    h = 0.5 * (K.h + np.roll(K.h, K.N // 2))
    return SupportBody2(h, smooth=K.smooth, check=False)


def tangents_from_point(K: SupportBody2, z):
    """The two normal angles whose tangent lines pass through the exterior point z."""
    z = np.asarray(z, dtype=float)
    f_grid = K.u @ z - K.h
    if np.max(f_grid) <= 0:
        raise GeometryError("point is interior; no tangents")
    return tuple(sorted(_periodic_roots(lambda t: unit(t) @ z - K.support(t), K.theta, f_grid)))


def _periodic_roots(f, grid, values):
    roots = []
    n = grid.size
    for j in range(n):
        a, b = values[j], values[(j + 1) % n]
        if a == 0:
            roots.append(grid[j])
        elif a * b < 0:
            t0 = grid[j]
            t1 = grid[j] + TWO_PI / n
            roots.append(wrap(brentq(lambda t: float(f(t)), t0, t1, xtol=1e-15, rtol=1e-15)))
    return roots


def apply_projective(g: "ProjectiveMap", K: SupportBody2, N: int | None = None) -> SupportBody2:
    """Image of K under a homography that keeps K in the affine chart."""
    N = N or K.N
    M = np.asarray(g.matrix, dtype=float)
    X = K.boundary_samples if K.smooth else K.vertices
    w = X @ M[2, :2] + M[2, 2]
    if not (np.all(w > 0) or np.all(w < 0)) or np.min(np.abs(w)) < 1e-12 * np.max(np.abs(w)):
        raise GeometryError("body crosses infinity")
    if w[0] < 0:
        M = -M
    targets = TWO_PI * np.arange(N) / N
    if not K.smooth:
        Y = g.apply(X)
        return SupportBody2(np.max(unit(targets) @ Y.T, axis=1), smooth=False)
    Minv_T = np.linalg.inv(M).T
    theta, h_new = _line_angle_map(K, Minv_T, targets)
    return SupportBody2(h_new, smooth=True)


def _image_line(K, Minv_T, theta):
    h, hp = K.fourier_eval(theta, (0, 1))
    ell = np.stack([np.cos(theta), np.sin(theta), -h], axis=-1)
    dell = np.stack([-np.sin(theta), np.cos(theta), -hp], axis=-1)
    m = ell @ Minv_T.T
    dm = dell @ Minv_T.T
    return m, dm


def _line_angle_map(K, Minv_T, targets):
    """Solve for the source normals whose image tangent lines have normals `targets`."""
    th = K.theta
    m, _ = _image_line(K, Minv_T, th)
    phi = np.unwrap(np.arctan2(m[:, 1], m[:, 0]))
    increasing = phi[-1] > phi[0]
    if not increasing:
        raise GeometryError("orientation-reversing maps are not supported; compose with a reflection")
    phi0 = phi[0]
    tt = phi0 + np.mod(targets - phi0, TWO_PI)
    ext_th = np.concatenate([th, [TWO_PI]])
    ext_phi = np.concatenate([phi, [phi0 + TWO_PI]])
    j = np.clip(np.searchsorted(ext_phi, tt) - 1, 0, K.N - 1)
    lo, hi = ext_th[j], ext_th[j + 1]
    flo, fhi = ext_phi[j] - tt, ext_phi[j + 1] - tt
    x = lo - flo * (hi - lo) / (fhi - flo)
    for _ in range(40):
        mm, dm = _image_line(K, Minv_T, x)
        ang = np.arctan2(mm[:, 1], mm[:, 0])
        f = np.angle(np.exp(1j * (ang - tt)))
        dphi = (mm[:, 0] * dm[:, 1] - mm[:, 1] * dm[:, 0]) / (mm[:, 0] ** 2 + mm[:, 1] ** 2)
        lo = np.where(f < 0, np.maximum(lo, x), lo)
        hi = np.where(f > 0, np.minimum(hi, x), hi)
        step = -f / dphi
        xn = x + step
        bad = (xn <= lo) | (xn >= hi) | ~np.isfinite(xn)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        done = np.max(np.abs(xn - x)) < 1e-15
        x = xn
        if done:
            break
    mm, _ = _image_line(K, Minv_T, x)
    nrm = np.hypot(mm[:, 0], mm[:, 1])
    return wrap(x), -mm[:, 2] / nrm


def line_angle_map(g: "ProjectiveMap", K: SupportBody2, theta):
    """Normal angle on gK of the image of the tangent line of K at normal angle theta."""
    M = np.asarray(g.matrix, dtype=float)
    X = K.boundary(np.atleast_1d(theta))
    w = X @ M[2, :2] + M[2, 2]
    if np.any(w < 0):
        M = -M
    m, _ = _image_line(K, np.linalg.inv(M).T, np.atleast_1d(np.asarray(theta, dtype=float)))
    out = wrap(np.arctan2(m[:, 1], m[:, 0]))
    return out if np.ndim(theta) else float(out[0])


# -- ellipsoids and l_p balls -------------------------------------------------------------

@dataclass(frozen=True)
class Ellipsoid:
    """Body {x : <A(x - c), x - c> <= 1}."""
    A: np.ndarray
    center: np.ndarray = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if A.shape[0] != A.shape[1] or not np.allclose(A, A.T, rtol=0, atol=1e-12 * np.abs(A).max()):
            raise GeometryError("A must be symmetric")
        if np.min(np.linalg.eigvalsh(A)) <= 0:
            raise GeometryError("A must be positive definite")
        object.__setattr__(self, "A", A)
        c = np.zeros(A.shape[0]) if self.center is None else np.asarray(self.center, dtype=float)
        object.__setattr__(self, "center", c)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def volume(self):
        return unit_ball_volume(self.n) / np.sqrt(np.linalg.det(self.A))

    def support(self, xi):
        xi = np.asarray(xi, dtype=float)
        Ainv = np.linalg.inv(self.A)
        return xi @ self.center + np.sqrt(np.einsum("...i,ij,...j->...", xi, Ainv, xi))

    def gauge_about_center(self, x):
        d = np.asarray(x, dtype=float) - self.center
        return np.sqrt(np.einsum("...i,ij,...j->...", d, self.A, d))

    def dual_volume(self, z):
        """|E^z| = omega_n det(A)^(1/2) / (1 - rho^2)^((n+1)/2), rho the gauge of z about the center."""
        rho = self.gauge_about_center(z)
        if np.any(rho >= 1):
            raise NotInteriorError("not interior")
        return unit_ball_volume(self.n) * np.sqrt(np.linalg.det(self.A)) / (1 - rho ** 2) ** ((self.n + 1) / 2)

    def to_body2(self, N: int = DEFAULT_N) -> SupportBody2:
        if self.n != 2:
            raise GeometryError("only planar ellipses convert to SupportBody2")
        return SupportBody2.from_support(lambda t: self.support(unit(t)), N)

    def to_conic(self) -> "Conic":
        if self.n != 2:
            raise GeometryError("only planar ellipses are conics")
        A, c = self.A, self.center
        S = np.zeros((3, 3))
        S[:2, :2] = A
        S[:2, 2] = S[2, :2] = -A @ c
        S[2, 2] = c @ A @ c - 1.0
        return Conic(S)


def unit_ball_volume(n: int) -> float:
    from scipy.special import gamma
    return float(np.pi ** (n / 2) / gamma(n / 2 + 1))


@dataclass(frozen=True)
class LpBall:
    """Body {x : ||(w_i x_i)||_p <= 1}; unconditional."""
    n: int
    p: float
    weights: tuple = None

    def __post_init__(self):
        if not self.p >= 1:
            raise GeometryError("p must be >= 1")
        w = np.ones(self.n) if self.weights is None else np.asarray(self.weights, dtype=float)
        if w.shape != (self.n,) or np.any(w <= 0):
            raise GeometryError("weights must be positive, one per axis")
        object.__setattr__(self, "weights", tuple(float(a) for a in w))

    @property
    def q(self):
        if np.isinf(self.p):
            return 1.0
        if self.p == 1:
            return np.inf
        return self.p / (self.p - 1)

    def gauge(self, x):
        return _pnorm(np.asarray(x, dtype=float) * np.asarray(self.weights), self.p)

    def support(self, xi):
        return _pnorm(np.asarray(xi, dtype=float) / np.asarray(self.weights), self.q)

    def radial(self, u):
        return 1.0 / self.gauge(u)

    def to_body2(self, N: int = DEFAULT_N) -> SupportBody2:
        if self.n != 2:
            raise GeometryError("only planar l_p balls convert to SupportBody2")
        smooth = self.p == 2
        return SupportBody2.from_support(lambda t: self.support(unit(t)), N, smooth=smooth)


def _pnorm(x, p):
    a = np.abs(x)
    if np.isinf(p):
        return a.max(axis=-1)
    if p == 1:
        return a.sum(axis=-1)
    m = a.max(axis=-1, keepdims=True)
    m = np.where(m == 0, 1.0, m)
    return m[..., 0] * np.sum((a / m) ** p, axis=-1) ** (1.0 / p)


# -- projective maps and conics -------------------------------------------------------------

class ProjectiveMap:
    def __init__(self, matrix):
        M = np.asarray(matrix, dtype=float)
        if M.shape != (3, 3):
            raise GeometryError("projective map needs a 3x3 matrix")
        if abs(np.linalg.det(M)) < 1e-14 * np.linalg.norm(M) ** 3:
            raise GeometryError("projective map is singular")
        self.matrix = M

    @classmethod
    def identity(cls):
        return cls(np.eye(3))

    @classmethod
    def affine(cls, L, t=(0.0, 0.0)):
        M = np.eye(3)
        M[:2, :2] = L
        M[:2, 2] = t
        return cls(M)

    @classmethod
    def disc_boost(cls, rapidity: float, angle: float = 0.0):
        """Homography preserving the unit disc: rotation * boost along x * rotation^-1."""
        c, s = np.cosh(rapidity), np.sinh(rapidity)
        B = np.array([[c, 0, s], [0, 1, 0], [s, 0, c]])
        R = np.eye(3)
        R[:2, :2] = [[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]]
        return cls(R @ B @ R.T)

    @classmethod
    def random_admissible(cls, rng: np.random.Generator, strength: float = 0.15):
        """Small random perturbation of the identity with positive determinant."""
        while True:
            M = np.eye(3) + strength * rng.standard_normal((3, 3))
            if np.linalg.det(M) > 0.2:
                return cls(M)

    def apply(self, pts):
        pts = np.asarray(pts, dtype=float)
        P = pts @ self.matrix[:, :2].T + self.matrix[:, 2]
        return P[..., :2] / P[..., 2:3]

    def push_vectors(self, pts, vecs):
        """Differential of the map at pts applied to vecs."""
        pts = np.asarray(pts, dtype=float)
        vecs = np.asarray(vecs, dtype=float)
        M = self.matrix
        P = pts @ M[:, :2].T + M[:, 2]
        dP = vecs @ M[:, :2].T
        w = P[..., 2:3]
        return dP[..., :2] / w - P[..., :2] * dP[..., 2:3] / w ** 2

    def inverse(self):
        return ProjectiveMap(np.linalg.inv(self.matrix))

    def compose(self, other: "ProjectiveMap"):
        return ProjectiveMap(self.matrix @ other.matrix)

    def normalized(self):
        return normalize_projective(self.matrix)

    def to_json(self):
        return {"matrix": self.matrix.tolist()}


def cross_ratio(a, b, c, d):
    """|ac||bd| / (|ab||cd|) for collinear points."""
    a, b, c, d = (np.asarray(p, dtype=float) for p in (a, b, c, d))
    n = np.linalg.norm
    return n(c - a) * n(d - b) / (n(b - a) * n(d - c))


@dataclass(frozen=True)
class Conic:
    S: np.ndarray

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        if S.shape != (3, 3):
            raise GeometryError("conic needs a 3x3 matrix")
        object.__setattr__(self, "S", 0.5 * (S + S.T))

    @classmethod
    def circle(cls, radius: float, center=(0.0, 0.0)):
        return Ellipsoid(np.eye(2) / radius ** 2, np.asarray(center, float)).to_conic()

    @property
    def degenerate(self) -> bool:
        Sn = self.S / np.linalg.norm(self.S)
        return abs(np.linalg.det(Sn)) < 1e-12

    def normalized(self):
        return normalize_projective(self.S)

    def inverse(self) -> "Conic":
        if self.degenerate:
            raise GeometryError("degenerate conic has no dual")
        return Conic(np.linalg.inv(self.S))

    def value(self, pts):
        """Quadratic form at homogeneous points (..., 3) or affine points (..., 2)."""
        P = np.asarray(pts, dtype=float)
        if P.shape[-1] == 2:
            P = np.concatenate([P, np.ones(P.shape[:-1] + (1,))], axis=-1)
        return np.einsum("...i,ij,...j->...", P, self.S, P)

    def tangency_residual(self, lines):
        """Normalized |w^T S^-1 w| for homogeneous lines w; zero iff tangent."""
        W = np.atleast_2d(np.asarray(lines, dtype=float))
        Sinv = np.linalg.inv(self.S)
        Sinv = Sinv / np.linalg.norm(Sinv)
        W = W / np.linalg.norm(W, axis=1, keepdims=True)
        return np.abs(np.einsum("ki,ij,kj->k", W, Sinv, W))


def pencil_member(C1: Conic, C2: Conic, t: float, kind: str = "linear") -> Conic:
    if kind == "linear":
        return Conic(t * C1.S + (1 - t) * C2.S)
    if kind == "dual":
        if C1.degenerate or C2.degenerate:
            raise GeometryError("dual pencil needs non-degenerate conics")
        D = t * np.linalg.inv(C1.S) + (1 - t) * np.linalg.inv(C2.S)
        Dn = D / np.linalg.norm(D)
        if abs(np.linalg.det(Dn)) < 1e-12:
            return Conic(_adjugate(Dn))
        return Conic(np.linalg.inv(D))
    raise GeometryError(f"unknown pencil kind {kind!r}")


def _adjugate(D):
    C = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            m = np.delete(np.delete(D, i, axis=0), j, axis=1)
            C[i, j] = (-1) ** (i + j) * (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
    return C.T


def harmonic_residual(Q1: Conic, Q2: Conic, Q3: Conic, Q4: Conic) -> float:
    for Q in (Q1, Q2, Q3, Q4):
        if Q.degenerate:
            raise GeometryError("harmonic residual needs non-degenerate conics")
    X = normalize_projective(np.linalg.solve(Q2.S, Q1.S))
    Y = normalize_projective(np.linalg.solve(Q4.S, Q3.S))
    return float(np.linalg.norm(X - Y))
