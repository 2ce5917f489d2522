"""Funk billiards for nested planar bodies K inside int(L).

A bounce state is a pair of normal angles: q on the boundary of K (the
bounce point) and p on the boundary of L (where the outgoing ray, continued,
leaves L).  The tangent-line construction gives the reflection; the
stationarity of d^F(x, y) + d^F(y, z) in y gives an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd

import numpy as np
from scipy.optimize import brentq

from .geometry import (TWO_PI, Conic, Ellipsoid, GeometryError, SupportBody2, harmonic_residual,
                       polar_body, unit, unit_perp, wrap)
from .metrics import funk_distance
from .numerics import cyclic_coordinate_max


class BilliardError(GeometryError):
    pass


@dataclass(frozen=True)
class BounceState:
    q: float
    p: float


@dataclass
class BilliardOrbit:
    inner: SupportBody2
    outer: SupportBody2
    states: list
    lengths: np.ndarray
    closed: bool = False
    kind: str = "funk"
    residual: float = 0.0
    rotation_number: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def q(self):
        return np.array([s.q for s in self.states])

    @property
    def p(self):
        return np.array([s.p for s in self.states])

    @property
    def total_length(self):
        return float(np.sum(self.lengths))

    def bounce_points(self):
        return self.inner.boundary(self.q)

    def rows(self):
        """(index, q, p, segment length) table; the last state has no segment on open orbits."""
        out = []
        for j, s in enumerate(self.states):
            seg = float(self.lengths[j]) if j < len(self.lengths) else float("nan")
            out.append((j, float(s.q), float(s.p), seg))
        return out


def _hline(K: SupportBody2, theta):
    """Homogeneous tangent line (cos, sin, -h) at normal angle theta."""
    return np.array([np.cos(theta), np.sin(theta), -float(K.support(np.array(theta)))])


def _other_root(f, known, n):
    """Root of a 2pi-periodic f other than the simple root `known`.

    Dividing by sin((t - known)/2) makes the function antiperiodic with a
    single sign change on (known, known + 2pi).
    """
    def g(t):
        return f(t) / np.sin(0.5 * (t - known))
    eps = 1e-7
    grid = known + eps + (TWO_PI - 2 * eps) * np.arange(n + 1) / n
    vals = np.array([g(t) for t in grid])
    sign_change = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
    if sign_change.size == 0:
        raise BilliardError("no second root found")
    j = sign_change[0]
    return wrap(brentq(g, grid[j], grid[j + 1], xtol=1e-15, rtol=1e-15, maxiter=200))


def chord_end(K: SupportBody2, q0: float, v) -> float:
    """Normal angle where the chord from x_K(q0) in direction v meets the boundary again."""
    if not K.smooth:
        raise BilliardError("billiards need a strictly convex smooth inner body")
    x0 = K.boundary(np.array(q0))
    v = np.asarray(v, dtype=float)
    if np.dot(v, unit(q0)) >= 0:
        raise BilliardError("direction does not enter the inner body")

    def c(t):
        x = K.boundary(np.array(t))
        d = x - x0
        return d[0] * v[1] - d[1] * v[0]
    return _other_root(c, q0, 64)


def other_tangent(L: SupportBody2, zh, known: float) -> float:
    """Normal angle of the second tangent to L through the homogeneous point zh."""
    zh = np.asarray(zh, dtype=float)

    def f(t):
        return zh[0] * np.cos(t) + zh[1] * np.sin(t) - zh[2] * float(L.support(np.array(t)))
    return _other_root(f, known, 64)


def reflect(K: SupportBody2, L: SupportBody2, incoming: BounceState) -> BounceState:
    """Tangent-line reflection law: returns the next state (q1, p1)."""
    q0, p0 = incoming.q, incoming.p
    x0 = K.boundary(np.array(q0))
    b0 = L.boundary(np.array(p0))
    q1 = chord_end(K, q0, b0 - x0)
    z1 = np.cross(_hline(K, q1), _hline(L, p0))
    p1 = other_tangent(L, z1, p0)
    return BounceState(float(q1), float(p1))


def initial_state(K: SupportBody2, L: SupportBody2, q: float, direction) -> BounceState:
    """State leaving x_K(q) with the given direction (vector or angle)."""
    d = unit(direction) if np.ndim(direction) == 0 else np.asarray(direction, dtype=float)
    x = K.boundary(np.array(q))
    if np.dot(d, unit(q)) >= 0:
        raise BilliardError("initial direction must point into the inner body")
    _, _, th = L.ray_exit(x, d)
    return BounceState(float(q), float(th))


def covector(L: SupportBody2, p, y):
    """xi = u(p) / (h_L(p) - <y, u(p)>), the Funk co-unit vector at y toward exit normal p."""
    p = np.asarray(p, dtype=float)
    u = unit(p)
    return u / (L.support(p) - np.sum(np.asarray(y) * u, axis=-1))[..., None]


def stationarity_residual(K, L, p_in, q, p_out):
    """Tangential component of xi_out - xi_in at x_K(q), relative to |xi_in|."""
    y = K.boundary(np.array(q))
    xi_in = covector(L, p_in, y)
    xi_out = covector(L, p_out, y)
    return float(np.dot(unit_perp(q), xi_out - xi_in) / np.linalg.norm(xi_in))


def reflect_variational(K: SupportBody2, L: SupportBody2, q0: float, q1: float) -> float:
    """Next bounce q2 from the stationarity of d^F(x0, y) + d^F(y, x2) at y = x_K(q1).

    Exits are located by ray shooting, independently of the tangent construction.
    """
    x0 = K.boundary(np.array(q0))
    y = K.boundary(np.array(q1))
    _, _, th_in = L.ray_exit(x0, y - x0)
    xi_in = covector(L, th_in, y)
    T = unit_perp(q1)
    c_in = float(np.dot(T, xi_in))

    def r(t):
        x2 = K.boundary(np.array(t))
        _, _, th = L.ray_exit(y, x2 - y)
        return float(np.dot(T, covector(L, th, y))) - c_in
    eps = 1e-6
    grid = q1 + eps + (TWO_PI - 2 * eps) * np.arange(129) / 128
    vals = np.array([r(t) for t in grid])
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
    if idx.size == 0:
        raise BilliardError("variational root not bracketed")
    j = idx[0]
    return float(wrap(brentq(r, grid[j], grid[j + 1], xtol=1e-15, rtol=1e-15)))


def _segment_length(L, p, xa, xb):
    """d^F(xa, xb) from the supporting line of L at the exit normal p."""
    u = unit(p)
    hp = float(L.support(np.array(p)))
    return float(np.log((hp - np.dot(xa, u)) / (hp - np.dot(xb, u))))


def _winding(angles, closed):
    a = np.asarray(angles, dtype=float)
    if closed:
        a = np.append(a, a[0])
    inc = np.mod(np.diff(a), TWO_PI)
    return float(inc.sum() / TWO_PI / (len(a) - 1)) if len(a) > 1 else 0.0


def orbit(K: SupportBody2, L: SupportBody2, initial: BounceState, bounces: int) -> BilliardOrbit:
    states = [initial]
    for _ in range(bounces):
        states.append(reflect(K, L, states[-1]))
    X = K.boundary(np.array([s.q for s in states]))
    lengths = np.array([_segment_length(L, states[j].p, X[j], X[j + 1]) for j in range(bounces)])
    res = [abs(stationarity_residual(K, L, states[j - 1].p, states[j].q, states[j].p))
           for j in range(1, len(states))]
    return BilliardOrbit(K, L, states, lengths, closed=False, kind="funk",
                         residual=float(max(res, default=0.0)),
                         rotation_number=_winding([s.q for s in states], False))


# -- periodic orbits -------------------------------------------------------------------

def _total_length(K, L, qs):
    X = K.boundary(np.asarray(qs))
    Y = np.roll(X, -1, axis=0)
    return float(np.sum(funk_distance(L, X, Y)))


def _gradient(K, L, qs):
    qs = np.asarray(qs, dtype=float)
    X = K.boundary(qs)
    dX = K.boundary_derivative(qs)
    Xn = np.roll(X, -1, axis=0)
    _, _, th = L.ray_exit(X, Xn - X)           # exit of segment i -> i+1
    xi_out = covector(L, th, X)                 # at x_i, segment i -> i+1
    xi_in = covector(L, np.roll(th, 1), X)      # at x_i, segment i-1 -> i
    return np.einsum("ij,ij->i", dX, xi_in - xi_out)


def _polish(K, L, qs, iters=30):
    qs = np.array(qs, dtype=float)
    m = qs.size
    G = _gradient(K, L, qs)
    for _ in range(iters):
        if np.max(np.abs(G)) < 1e-13:
            break
        h = 1e-6
        J = np.empty((m, m))
        for i in range(m):
            e = np.zeros(m)
            e[i] = h
            J[:, i] = (_gradient(K, L, qs + e) - _gradient(K, L, qs - e)) / (2 * h)
        step = np.linalg.lstsq(J, -G, rcond=1e-10)[0]
        step = np.clip(step, -0.1, 0.1)
        new = qs + step
        Gn = _gradient(K, L, new)
        if np.max(np.abs(Gn)) > np.max(np.abs(G)):
            new = qs + 0.5 * step
            Gn = _gradient(K, L, new)
        qs, G = new, Gn
    return qs, float(np.max(np.abs(G)))


def periodic_orbit(K: SupportBody2, L: SupportBody2, period: int, rotation: int = 1,
                   starts: int = 8) -> BilliardOrbit:
    """Birkhoff maximizer of total funk length among m-gons inscribed in K with winding k."""
    m, k = int(period), int(rotation)
    if m < 2 or not 1 <= k < m or gcd(m, k) != 1:
        raise BilliardError("need period >= 2 and 1 <= rotation < period, coprime")
    if not K.smooth:
        raise BilliardError("billiards need a strictly convex smooth inner body")
    best = None
    for s in range(starts):
        phi = TWO_PI * s / (starts * m)
        q0 = phi + TWO_PI * k * np.arange(m) / m

        def f(qs):
            return _total_length(K, L, qs)
        qs, _, _ = cyclic_coordinate_max(f, q0, step=np.pi / m, sweeps=40, tol=1e-9)
        qs, res = _polish(K, L, qs)
        val = _total_length(K, L, qs)
        key = (-round(val, 10), res, tuple(np.round(wrap(qs), 12)))
        if best is None or key < best[0]:
            best = (key, qs, res)
    _, qs, res = best
    qs = wrap(qs)
    X = K.boundary(qs)
    Xn = np.roll(X, -1, axis=0)
    _, _, th = L.ray_exit(X, Xn - X)
    states = [BounceState(float(a), float(b)) for a, b in zip(qs, th)]
    lengths = np.array([_segment_length(L, th[i], X[i], Xn[i]) for i in range(m)])
    return BilliardOrbit(K, L, states, lengths, closed=True, kind="funk", residual=res,
                         rotation_number=_winding(qs, True), meta={"period": m, "rotation": k})


# -- dual orbits ----------------------------------------------------------------------

def _angle(v):
    return float(wrap(np.arctan2(v[1], v[0])))


def dual_orbit(orb: BilliardOrbit, anchor=None, residual_tol: float = 1e-6) -> BilliardOrbit:
    """Orbit in the dual plane: tangent lines at exits become bounce points.

    Dual bodies are polars about `anchor` (default: area centroid of the
    inner body).  A Funk orbit maps to a reverse-Funk orbit and vice versa.
    """
    if orb.residual > residual_tol:
        raise BilliardError(f"orbit residual {orb.residual:.2e} too large for dualization")
    a = orb.inner.centroid if anchor is None else np.asarray(anchor, dtype=float)
    inner_d = polar_body(orb.outer.translate(-a))
    outer_d = polar_body(orb.inner.translate(-a))
    n = len(orb.states)
    Xin = orb.inner.boundary(orb.q) - a
    Xout = orb.outer.boundary(orb.p) - a
    cnt = n if orb.closed else n - 1
    bounce = [_angle(Xout[j]) for j in range(cnt)]
    exits = [_angle(Xin[(j + 1) % n]) for j in range(cnt)]
    states = [BounceState(b, e) for b, e in zip(bounce, exits)]
    kind = "reverse_funk" if orb.kind == "funk" else "funk"
    P = _dual_points(orb.outer, orb.p[:cnt], a)
    segs = cnt if orb.closed else cnt - 1
    lengths = np.empty(segs)
    for j in range(segs):
        Pa, Pb = P[j], P[(j + 1) % cnt]
        lengths[j] = float(funk_distance(outer_d, Pb, Pa) if kind == "reverse_funk"
                           else funk_distance(outer_d, Pa, Pb))
    out = BilliardOrbit(inner_d, outer_d, states, lengths, closed=orb.closed, kind=kind,
                        rotation_number=_winding(bounce, orb.closed),
                        meta={"anchor": a.tolist(), "primal_rotation": orb.rotation_number})
    out.residual = _dual_residual(out, P)
    return out


def _dual_points(L, p, a):
    """Tangent lines of L at normals p as points of the polar plane about a."""
    u = unit(np.asarray(p, dtype=float))
    return u / (L.support(np.asarray(p, dtype=float)) - u @ a)[:, None]


def _dual_residual(orb, P):
    """Stationarity of the dual orbit's length at each interior bounce, via ray shooting."""
    K, L = orb.inner, orb.outer
    m = len(P)
    rng = range(m) if orb.closed else range(1, m - 1)
    worst = 0.0
    for j in rng:
        y = P[j]
        prev, nxt = P[(j - 1) % m], P[(j + 1) % m]
        if orb.kind == "reverse_funk":
            prev, nxt = nxt, prev
        _, _, th_in = L.ray_exit(prev, y - prev)
        _, _, th_out = L.ray_exit(y, nxt - y)
        T = unit_perp(orb.states[j].q)
        xi_in = covector(L, th_in, y)
        xi_out = covector(L, th_out, y)
        worst = max(worst, abs(float(np.dot(T, xi_out - xi_in))) / np.linalg.norm(xi_in))
    return worst


# -- caustics in nested ellipses ---------------------------------------------------------

def pencil_parameter(B: Ellipsoid, K: Ellipsoid, z) -> float:
    """t(z) = -S_K(z)/S_B(z); for the normalized pair this is (<Az,z> - 1)/(1 - |z|^2)."""
    z = np.asarray(z, dtype=float)
    SB, SK = B.to_conic(), K.to_conic()
    vb = SB.value(z)
    if np.any(np.abs(vb) < 1e-14):
        raise BilliardError("point lies on the outer conic")
    return -SK.value(z) / vb


@dataclass
class CausticReport:
    inner: Conic
    inner_fit: Conic
    outer: Conic
    t_values: np.ndarray
    t_spread: float
    pencil_residual: float
    tangency_residual: float
    harmonic_residual: float
    harmonic_residual_constructed: float
    outer_points: np.ndarray = None

    def summary(self):
        return {"t_mean": float(np.mean(self.t_values)), "t_spread": self.t_spread,
                "pencil_residual": self.pencil_residual,
                "tangency_residual": self.tangency_residual,
                "harmonic_residual": self.harmonic_residual,
                "harmonic_residual_constructed": self.harmonic_residual_constructed}


def _fit_quadric(P):
    """Symmetric 3x3 S (unit norm) minimizing sum (P_k^T S P_k)^2 over homogeneous rows P."""
    x, y, w = P[:, 0], P[:, 1], P[:, 2]
    V = np.stack([x * x, 2 * x * y, y * y, 2 * x * w, 2 * y * w, w * w], axis=1)
    _, sv, Vt = np.linalg.svd(V, full_matrices=False)
    if sv[-2] < 1e-12 * sv[0]:
        raise BilliardError("rank-deficient conic fit")
    a, b, c, d, e, f = Vt[-1]
    return np.array([[a, b, d], [b, c, e], [d, e, f]])


def caustics(orb: BilliardOrbit, K: Ellipsoid, B: Ellipsoid) -> CausticReport:
    """Outer and inner conic caustics of an orbit of the B-Funk billiard in K."""
    if len(orb.states) < 7:
        raise BilliardError("need at least 6 bounces")
    SK, SB = K.to_conic().S, B.to_conic().S
    Kb, Lb = orb.inner, orb.outer
    Z = []
    for j in range(1, len(orb.states)):
        z = np.cross(_hline(Kb, orb.states[j].q), _hline(Lb, orb.states[j - 1].p))
        z = z / np.linalg.norm(z)
        if abs(z[2]) > 1e-8:
            Z.append(z)
    Z = np.array(Z)
    vK = np.einsum("ki,ij,kj->k", Z, SK, Z)
    vB = np.einsum("ki,ij,kj->k", Z, SB, Z)
    t = -vK / vB
    t_spread = float((t.max() - t.min()) / max(1.0, np.abs(t).mean()))
    So = _fit_quadric(Z)
    basis = np.stack([SK.ravel() / np.linalg.norm(SK), SB.ravel() / np.linalg.norm(SB)], axis=1)
    coef, *_ = np.linalg.lstsq(basis, So.ravel(), rcond=None)
    pencil_res = float(np.linalg.norm(So.ravel() - basis @ coef) / np.linalg.norm(So))
    Si = SK @ np.linalg.solve(So, SB)
    Si = 0.5 * (Si + Si.T)
    X = Kb.boundary(orb.q)
    Xh = np.concatenate([X, np.ones((len(X), 1))], axis=1)
    W = np.cross(Xh[:-1], Xh[1:])
    Qi = Conic(Si)
    tang = float(np.max(Qi.tangency_residual(W)))
    Qi_fit = Conic(np.linalg.inv(_fit_quadric(W / np.linalg.norm(W, axis=1, keepdims=True))))
    Qo = Conic(So)
    hr = harmonic_residual(Qi_fit, Conic(SK), Conic(SB), Qo)
    hr_c = harmonic_residual(Qi, Conic(SK), Conic(SB), Qo)
    return CausticReport(Qi, Qi_fit, Qo, t, t_spread, pencil_res, tang, hr, hr_c,
                         outer_points=Z[:, :2] / Z[:, 2:3])


# -- Klein-model oracle -------------------------------------------------------------------

def hyperbolic_reflect_direction(x0, y, normal):
    """Outgoing direction at y for the hyperbolic billiard in the Klein model of the unit disc.

    The incoming point x0 is reflected in the geodesic through y that is
    hyperbolically orthogonal to the tangent line with Euclidean normal
    `normal`; the outgoing ray heads for the image.
    """
    J = np.diag([1.0, 1.0, -1.0])
    n = np.asarray(normal, dtype=float)
    Y = np.append(y, 1.0)
    ell = np.append(n, -np.dot(n, y))
    nT = J @ ell
    nN = J @ np.cross(Y, nT)
    X0 = np.append(x0, 1.0)

    def mk(a, b):
        return a @ J @ b
    R = X0 - 2 * mk(X0, nN) / mk(nN, nN) * nN
    img = R[:2] / R[2]
    d = img - y
    return d / np.linalg.norm(d)
