"""Log-concave functions on grids: discrete Legendre transforms, twisted
products, functional moments and the half-line sinh integral."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.special import factorial2

_CHUNK = 256
DEFAULT_HALF_WIDTH = 8.0
DEFAULT_RESOLUTION = {1: 1024, 2: 256}
DECAY_TOL = 1e-9


class BoxTooSmall(ValueError):
    pass


def _axis(half_width, res, half_line):
    """Uniform grid; the full-line grid is exactly antisymmetric so sign flips map nodes to nodes."""
    if half_line:
        return np.linspace(0.0, half_width, res)
    h = 2.0 * half_width / (res - 1)
    return h * (np.arange(res) - 0.5 * (res - 1))


@dataclass
class GridFunction:
    """Values of phi on the uniform grid linspace(-hw, hw, res)^n (or [0, hw] on a half-line)."""
    n: int
    half_width: float
    resolution: int
    values: np.ndarray
    half_line: bool = False

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError("grid functions live in dimension 1 or 2")
        if self.half_line and self.n != 1:
            raise ValueError("half-line grids are one-dimensional")
        v = np.asarray(self.values, dtype=float)
        shape = (self.resolution,) * self.n
        if v.shape != shape:
            raise ValueError(f"values must have shape {shape}, got {v.shape}")
        if np.any(np.isnan(v)) or np.any(v == -np.inf):
            raise ValueError("values must be real or +inf")
        if not np.any(np.isfinite(v)):
            raise ValueError("function is everywhere infinite")
        self.values = v

    @property
    def axis(self):
        return _axis(self.half_width, self.resolution, self.half_line)

    @property
    def step(self):
        return self.axis[1] - self.axis[0]

    def mesh(self):
        a = self.axis
        return np.meshgrid(a, a, indexing="ij") if self.n == 2 else (a,)

    @classmethod
    def sample(cls, f, n=1, half_width=DEFAULT_HALF_WIDTH, resolution=None, half_line=False):
        res = resolution or DEFAULT_RESOLUTION[n]
        a = _axis(half_width, res, half_line)
        if n == 1:
            vals = f(a)
        else:
            X, Y = np.meshgrid(a, a, indexing="ij")
            vals = f(X, Y)
        return cls(n, float(half_width), res, np.asarray(vals, dtype=float), half_line)

    @classmethod
    def power(cls, p: float, n=1, **kw):
        """phi(x) = sum |x_i|^p / p."""
        if n == 1:
            return cls.sample(lambda x: np.abs(x) ** p / p, 1, **kw)
        return cls.sample(lambda x, y: (np.abs(x) ** p + np.abs(y) ** p) / p, 2, **kw)

    @classmethod
    def indicator(cls, lo: float, hi: float, **kw):
        """0 on [lo, hi], +inf elsewhere (n = 1)."""
        return cls.sample(lambda x: np.where((x >= lo - 1e-12) & (x <= hi + 1e-12), 0.0, np.inf), 1, **kw)

    @classmethod
    def from_json(cls, d: dict):
        if "preset" in d:
            kw = {k: d[k] for k in ("half_width", "resolution") if k in d}
            n = int(d.get("n", 1))
            if d.get("half_line"):
                if n != 1:
                    raise ValueError("half-line grids are one-dimensional")
                if d["preset"] == "gaussian":
                    a = float(np.ravel(d.get("A", [[1.0]]))[0])
                    c = float(d.get("c", 0.0))
                    return cls.sample(lambda x: 0.5 * a * x * x + c, 1, half_line=True, **kw)
                if d["preset"] == "power":
                    p = float(d["p"])
                    return cls.sample(lambda x: x ** p / p, 1, half_line=True, **kw)
            if d["preset"] == "gaussian":
                spec = GaussianSpec(np.asarray(d.get("A", np.eye(n)), dtype=float), float(d.get("c", 0.0)))
                return spec.to_grid(**kw)
            if d["preset"] == "power":
                return cls.power(float(d["p"]), int(d.get("n", 1)), **kw)
            raise ValueError(f"unknown preset {d['preset']!r}")
        extra = set(d) - {"n", "half_width", "resolution", "values", "half_line"}
        if extra:
            raise ValueError(f"unknown keys {sorted(extra)}")
        vals = np.array([np.inf if v is None else v for v in np.ravel(d["values"])], dtype=float)
        n, res = int(d["n"]), int(d["resolution"])
        return cls(n, float(d["half_width"]), res, vals.reshape((res,) * n), bool(d.get("half_line", False)))

    def to_json(self):
        vals = [None if not np.isfinite(v) else float(v) for v in self.values.ravel()]
        return {"n": self.n, "half_width": self.half_width, "resolution": self.resolution,
                "half_line": self.half_line, "values": vals}


@dataclass(frozen=True)
class GaussianSpec:
    """phi(x) = <Ax, x>/2 + c."""
    A: np.ndarray
    c: float = 0.0

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if A.shape[0] != A.shape[1] or not np.allclose(A, A.T):
            raise ValueError("A must be symmetric")
        if np.min(np.linalg.eigvalsh(A)) <= 0:
            raise ValueError("A must be positive definite")
        object.__setattr__(self, "A", A)

    @property
    def n(self):
        return self.A.shape[0]

    def to_grid(self, half_width=DEFAULT_HALF_WIDTH, resolution=None):
        A, c = self.A, self.c
        if self.n == 1:
            return GridFunction.sample(lambda x: 0.5 * A[0, 0] * x * x + c, 1, half_width, resolution)
        return GridFunction.sample(
            lambda x, y: 0.5 * (A[0, 0] * x * x + 2 * A[0, 1] * x * y + A[1, 1] * y * y) + c,
            2, half_width, resolution)


# -- discrete Legendre transform ----------------------------------------------------------------

def _conj1d(x, vals, xi):
    """max_i x_i xi_k - vals[..., i] along the last axis, for each xi_k."""
    out = np.empty(vals.shape[:-1] + (xi.size,))
    for s in range(0, xi.size, _CHUNK):
        t = xi[s:s + _CHUNK]
        # (..., i, k)
        out[..., s:s + _CHUNK] = np.max(x[:, None] * t[None, :] - vals[..., :, None], axis=-2)
    return out


def legendre(phi: GridFunction) -> GridFunction:
    """Discrete Legendre transform on the dual grid (equal to the primal grid).

    In two dimensions the maximum factorizes over the axes, so two passes of
    the one-dimensional direct maximum give the exact discrete transform.
    """
    if not np.any(np.isfinite(phi.values)):
        raise ValueError("function is everywhere infinite")
    x = phi.axis
    if phi.n == 1:
        out = _conj1d(x, phi.values, x)
    else:
        psi = _conj1d(x, phi.values, x)                       # (x1, xi2)
        out = _conj1d(x, -psi.T, x).T                          # (xi1, xi2)
    return GridFunction(phi.n, phi.half_width, phi.resolution, out, phi.half_line)


def _symmetrize(phi: GridFunction) -> GridFunction:
    if phi.half_line:
        return phi
    v = phi.values
    if phi.n == 1:
        s = 0.5 * (v + v[::-1])
    else:
        s = 0.25 * (v + v[::-1, :] + v[:, ::-1] + v[::-1, ::-1])
    fin = np.isfinite(v) & np.isfinite(s)
    diff = np.max(np.abs(v[fin] - s[fin]), initial=0.0)
    if diff > 1e-12 or np.any(np.isfinite(v) != np.isfinite(s)):
        warnings.warn(f"input symmetrized over coordinate sign flips (max change {diff:.3e})",
                      stacklevel=3)
    return GridFunction(phi.n, phi.half_width, phi.resolution, s, phi.half_line)


def _weights(phi: GridFunction):
    w = np.full(phi.resolution, phi.step)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def _pair(phi):
    """Symmetrized phi, its transform, and e^-phi, e^-L phi with trapezoid weights folded in."""
    phi = _symmetrize(phi)
    lp = legendre(phi)
    w = _weights(phi)
    W = w if phi.n == 1 else np.outer(w, w)
    E1 = np.exp(-phi.values) * W
    E2 = np.exp(-lp.values) * W
    return phi, lp, E1, E2


def _edge_check(phi, lp, rho):
    """Raise if the twisted integrand is not negligible on the boundary of the box."""
    x = phi.axis
    f1, f2 = phi.values, lp.values
    if phi.n == 1:
        edge_x = np.zeros_like(x, dtype=bool)
        edge_x[[0, -1]] = True
        ex = -f1[:, None] - f2[None, :] + rho * np.outer(x, x)
        bd = np.max(np.where(edge_x[:, None] | edge_x[None, :], ex, -np.inf))
        peak = np.max(ex)
    else:
        X1, X2 = phi.mesh()
        P = np.stack([X1.ravel(), X2.ravel()], axis=1)
        edge = ((np.abs(X1) == x[-1]) | (np.abs(X2) == x[-1])).ravel()
        v1, v2 = -f1.ravel(), -f2.ravel()
        peak = np.max(v1) + np.max(v2)
        bd = -np.inf
        for ve, vo in ((v1, v2), (v2, v1)):
            E = P[edge]
            for s in range(0, E.shape[0], 64):
                ex = ve[edge][s:s + 64, None] + vo[None, :] + rho * (E[s:s + 64] @ P.T)
                bd = max(bd, float(np.max(ex)))
    if bd - peak > np.log(DECAY_TOL):
        raise BoxTooSmall("box too small: integrand does not decay at the box edge "
                          f"(edge/peak = {np.exp(bd - peak):.2e}); increase half_width")


def _twist_matrix(x, rho, power=0):
    X = np.outer(x, x)
    M = np.exp(rho * X)
    return M * X ** power if power else M


def twisted_product(phi, rho: float) -> float:
    """Integral of exp(-phi(x) - L phi(xi) + rho <x, xi>) over the grid box squared."""
    if not 0 <= rho < 1:
        raise ValueError("rho must lie in [0, 1)")
    if isinstance(phi, GaussianSpec):
        return float((2 * np.pi) ** phi.n * (1 - rho ** 2) ** (-phi.n / 2))
    phi, lp, E1, E2 = _pair(phi)
    _edge_check(phi, lp, rho)
    C = _twist_matrix(phi.axis, rho)
    if phi.n == 1:
        return float(E1 @ C @ E2)
    return float(np.sum((C.T @ E1 @ C) * E2))


def functional_moment(phi, j: int) -> float:
    """Integral of <x, xi>^(2j) exp(-phi(x) - L phi(xi))."""
    if j < 0:
        raise ValueError("j must be nonnegative")
    if isinstance(phi, GaussianSpec):
        return functional_moment_bound(phi.n, j)
    phi, lp, E1, E2 = _pair(phi)
    _edge_check(phi, lp, 0.0)
    x = phi.axis
    X = np.outer(x, x)
    if phi.n == 1:
        return float(E1 @ X ** (2 * j) @ E2)
    from math import comb
    tot = 0.0
    for k in range(2 * j + 1):
        P, Q = X ** k, X ** (2 * j - k)
        tot += comb(2 * j, k) * np.sum((P.T @ E1 @ Q) * E2)
    return float(tot)


def _df(m: int) -> float:
    return float(factorial2(m)) if m > 0 else 1.0


def functional_moment_bound(n: int, j: int) -> float:
    """Gaussian value (2 pi)^n (n-2+2j)!! (2j-1)!! / (n-2)!!."""
    return float((2 * np.pi) ** n * _df(n - 2 + 2 * j) * _df(2 * j - 1) / _df(n - 2))


def functional_series(phi, rho: float, J: int):
    """(twisted product, sum_{j<=J} rho^(2j)/(2j)! * moment_j)."""
    from math import factorial
    s = sum(rho ** (2 * j) / factorial(2 * j) * functional_moment(phi, j) for j in range(J + 1))
    return twisted_product(phi, rho), float(s)


def half_space_sinh(phi: GridFunction, rho: float) -> float:
    """Integral over the positive quadrant of exp(-phi(x) - L phi(xi)) sinh(rho x xi).

    The transform is taken over the half-line; Simpson's rule handles the
    non-periodic endpoint at 0.
    """
    if not phi.half_line or phi.n != 1:
        raise ValueError("half_space_sinh needs a one-dimensional half-line grid")
    if not 0 <= rho < 1:
        raise ValueError("rho must lie in [0, 1)")
    lp = legendre(phi)
    x = phi.axis
    e1, e2 = np.exp(-phi.values), np.exp(-lp.values)
    ex = -phi.values[:, None] - lp.values[None, :] + rho * np.outer(x, x)
    edge = max(np.max(ex[-1, :]), np.max(ex[:, -1]))
    if edge - np.max(ex) > np.log(DECAY_TOL):
        raise BoxTooSmall("box too small: integrand does not decay at the box edge")
    F = e1[:, None] * e2[None, :] * np.sinh(rho * np.outer(x, x))
    return float(simpson(simpson(F, x=x, axis=1), x=x))


def half_space_bound(rho: float) -> float:
    """(1 - rho^2)^(-1/2) arctan(rho / sqrt(1 - rho^2))."""
    s = np.sqrt(1 - rho * rho)
    return float(np.arctan(rho / s) / s)
