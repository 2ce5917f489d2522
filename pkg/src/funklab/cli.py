"""Command-line driver: ``funklab <command> [<action>] [options]``."""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import io as fio
from .geometry import DEFAULT_N, Ellipsoid, GeometryError, LpBall, SupportBody2

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
FORMATS = ("json", "csv", "svg")


@dataclass
class ExperimentConfig:
    command: str
    action: str | None
    inputs: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    resolution: int | None = None
    seed: int | None = None
    tol: float | None = None
    format: str = "json"
    out: str | None = None
    threads: int | None = None


class InputError(Exception):
    pass


@dataclass
class Output:
    result: dict
    rows: tuple | None = None
    svg: str | None = None
    text: str | None = None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def _common(p):
    p.add_argument("--seed", type=int, help="seed for Monte Carlo streams (unsigned 64-bit)")
    p.add_argument("--resolution", type=int, help="support samples N, curve samples M or grid points")
    p.add_argument("--tol", type=float, help="tolerance override")
    p.add_argument("--out", help="output path (or a bare format name: json, csv, svg)")
    p.add_argument("--format", choices=FORMATS)


def build_parser():
    ap = _Parser(prog="funklab", description="Funk and Hilbert geometry of convex bodies.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("distance", help="Funk, reverse-Funk or Hilbert distance")
    p.add_argument("--body", required=True)
    p.add_argument("--kind", default="funk", choices=("funk", "reverse_funk", "hilbert"))
    p.add_argument("--from", dest="x", required=True)
    p.add_argument("--to", dest="y", required=True)
    _common(p)

    p = sub.add_parser("billiard", help="Funk billiards")
    p.add_argument("action", choices=("run", "periodic", "dual-check", "caustic"))
    p.add_argument("--inner", required=True)
    p.add_argument("--outer", required=True)
    p.add_argument("--bounces", type=int, default=100)
    p.add_argument("--q", type=float, default=0.3, help="starting normal angle on the inner body")
    p.add_argument("--direction", default="-0.8,0.5", help="starting direction x,y or an angle")
    p.add_argument("--period", type=int, default=3)
    p.add_argument("--rotation", type=int, default=1)
    _common(p)

    p = sub.add_parser("volume", help="Holmes-Thompson volumes and Funk-Mahler quantities")
    p.add_argument("action", choices=("funk", "hilbert", "duality", "mahler", "moments",
                                      "centroaffine", "growth"))
    p.add_argument("--body", help="ambient body (or the body itself for mahler/moments/centroaffine)")
    p.add_argument("--inner", help="inner body for funk/hilbert/duality")
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--q", help="base point x,y")
    p.add_argument("--minimize", action="store_true", help="mahler: minimize over the base point")
    p.add_argument("--j", type=int, default=1)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--radius", type=float, default=12.0, help="growth: Funk ball radius")
    _common(p)

    p = sub.add_parser("functional", help="log-concave functions on grids")
    p.add_argument("action", choices=("legendre", "twisted", "moments", "sinh"))
    p.add_argument("--function", required=True)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--j", type=int, default=1)
    _common(p)

    p = sub.add_parser("beta", help="Beta function of spherical convex bodies")
    p.add_argument("action", choices=("direct", "minus3", "invariance"))
    p.add_argument("--curve", required=True)
    p.add_argument("--z", type=float, default=0.0)
    p.add_argument("--method", default="stokes", choices=("direct", "stokes"))
    p.add_argument("--eps", help="comma-separated cut-off schedule")
    p.add_argument("--maps", type=int, default=5, help="invariance: number of random homographies")
    p.add_argument("--strength", type=float, default=0.15)
    _common(p)

    p = sub.add_parser("check", help="acceptance suites")
    p.add_argument("suite", help="'all' or a suite name")
    _common(p)
    return ap


# -- helpers -------------------------------------------------------------------------------------

def _N(cfg):
    return cfg.resolution or DEFAULT_N


def _body(path, cfg, raw=False):
    return fio.body_from_dict(fio.load_json(path), where=str(path), N=_N(cfg), raw=raw)


def _as_body2(B, cfg):
    return B if isinstance(B, SupportBody2) else B.to_body2(_N(cfg))


def _as_ellipsoid(path, cfg):
    d = fio.load_json(path)
    if d.get("type") == "disc":
        r = float(d.get("radius", 1.0))
        return Ellipsoid(np.eye(2) / r ** 2, np.asarray(d.get("center", [0.0, 0.0]), dtype=float))
    B = fio.body_from_dict(d, where=str(path), raw=True)
    if not isinstance(B, Ellipsoid):
        raise fio.SpecError(f"{path}: caustics need ellipse or disc bodies")
    return B


def _direction(text):
    parts = text.split(",")
    if len(parts) == 1:
        return float(parts[0])
    return fio.parse_point(text)


def _need_seed(cfg, why):
    if cfg.seed is None:
        raise InputError(f"--seed is required ({why})")


# -- commands ------------------------------------------------------------------------------------

def cmd_distance(a, cfg):
    from .metrics import distance
    L = _as_body2(_body(a.body, cfg), cfg)
    x, y = fio.parse_point(a.x), fio.parse_point(a.y)
    d = float(distance(L, a.kind, x, y))
    return Output({"distance": d}, text=f"{d:.6f}")


def cmd_billiard(a, cfg):
    from . import billiards as bl
    from .plot import billiard_svg
    if a.action == "caustic":
        K, B = _as_ellipsoid(a.inner, cfg), _as_ellipsoid(a.outer, cfg)
        Kb, Bb = K.to_body2(_N(cfg)), B.to_body2(_N(cfg))
        orb = bl.orbit(Kb, Bb, bl.initial_state(Kb, Bb, a.q, _direction(a.direction)), a.bounces)
        rep = bl.caustics(orb, K, B)
        s = rep.summary()
        res = dict(s, outer_conic=rep.outer.S, inner_conic=rep.inner.S, inner_conic_fit=rep.inner_fit.S)
        print(f"caustics: t = {s['t_mean']:.10g} (spread {s['t_spread']:.1e}), "
              f"harmonic residual {s['harmonic_residual']:.2e}", file=sys.stderr)
        svg = billiard_svg(orb, [(rep.outer.S, "outer caustic"), (rep.inner.S, "inner caustic")])
        return Output(res, (["index", "q", "p", "segment_length"], orb.rows()), svg)
    K = _as_body2(_body(a.inner, cfg), cfg)
    L = _as_body2(_body(a.outer, cfg), cfg)
    if a.action == "run":
        orb = bl.orbit(K, L, bl.initial_state(K, L, a.q, _direction(a.direction)), a.bounces)
    else:
        orb = bl.periodic_orbit(K, L, a.period, a.rotation)
    res = {"total_length": orb.total_length, "residual": orb.residual,
           "rotation_number": orb.rotation_number, "q": orb.q, "p": orb.p, "lengths": orb.lengths}
    if a.action == "dual-check":
        d = bl.dual_orbit(orb)
        rel = abs(d.total_length - orb.total_length) / orb.total_length
        res.update(dual_total_length=d.total_length, dual_kind=d.kind, relative_gap=rel,
                   dual_rotation_number=d.rotation_number)
        print(f"dual-check: primal {orb.total_length:.12g}, dual {d.total_length:.12g}, "
              f"relative gap {rel:.1e}", file=sys.stderr)
    return Output(res, (["index", "q", "p", "segment_length"], orb.rows()), billiard_svg(orb))


def cmd_volume(a, cfg):
    from . import volumes as vol
    act = a.action
    if act in ("funk", "hilbert", "duality"):
        if not (a.body and a.inner):
            raise InputError(f"volume {act} needs --body (ambient) and --inner")
        L = _as_body2(_body(a.body, cfg), cfg)
        K = _as_body2(_body(a.inner, cfg), cfg)
        if act == "funk":
            r = vol.funk_ht_volume(L, K)
            return Output({"volume": r.value, "error": r.error, "method": r.method})
        if act == "hilbert":
            r = vol.hilbert_ht_volume(L, K)
            return Output({"volume": r.value, "error": r.error, "method": r.method})
        p, d = vol.funk_volume_duality_check(K, L)
        res = {"primal": p.value, "dual": d.value, "relative_gap": abs(p.value - d.value) / p.value}
        if K.smooth and L.smooth:
            hp, hd = vol.hilbert_boundary_length_duality(K, L)
            res.update(hilbert_boundary_primal=hp, hilbert_boundary_dual=hd)
        return Output(res)
    if not a.body:
        raise InputError(f"volume {act} needs --body")
    if act == "mahler":
        B = _body(a.body, cfg, raw=True)
        if a.minimize:
            q, r = vol.mahler_min(_as_body2(B, cfg), a.rho, **({"tol": cfg.tol} if cfg.tol else {}))
            return Output({"q": q, "value": r.value, "error": r.error})
        q = fio.parse_point(a.q) if a.q else None
        r = vol.mahler_tilde(B, q, a.rho)
        return Output({"value": r.value, "error": r.error, "method": r.method})
    if act == "moments":
        d = fio.load_json(a.body)
        if d.get("type") == "lp_ball" and a.n != 2:
            B = LpBall(a.n, float(d["p"]) if d["p"] not in ("inf", "Infinity") else np.inf, d.get("weights"))
        else:
            B = _body(a.body, cfg, raw=True)
        if a.n == 3:
            _need_seed(cfg, "n = 3 moments are Monte Carlo estimates")
        spec = vol.MomentSpec(a.j, a.n)
        r = vol.moment_I2j(B, spec, seed=cfg.seed or 0)
        return Output({"I2j": r.value, "error": r.error, "bound": vol.moment_bound(spec), "method": r.method})
    K = _as_body2(_body(a.body, cfg), cfg)
    q = fio.parse_point(a.q) if a.q else np.zeros(2)
    if act == "centroaffine":
        return Output({"centro_affine_area": vol.centro_affine_area(K, q)})
    ratio = vol.ball_growth_ratio(K, q, a.radius)
    return Output({"radius": a.radius, "ratio": ratio,
            "centro_affine_prediction": 2 ** -0.5 * vol.centro_affine_area(K, q)})


def cmd_functional(a, cfg):
    from . import functional as fn
    phi = fio.function_from_dict(fio.load_json(a.function), where=str(a.function))
    if a.action == "legendre":
        lp = fn.legendre(phi)
        rows = None
        if lp.n == 1:
            rows = (["x", "phi", "legendre"], list(zip(phi.axis, phi.values, lp.values)))
        return Output({"transform": lp.to_json()}, rows)
    if a.action == "twisted":
        v = fn.twisted_product(phi, a.rho)
        return Output({"twisted_product": v, "gaussian_value": (2 * np.pi) ** phi.n * (1 - a.rho ** 2) ** (-phi.n / 2)})
    if a.action == "moments":
        return Output({"moment": fn.functional_moment(phi, a.j),
                       "bound": fn.functional_moment_bound(phi.n, a.j)})
    return Output({"sinh_integral": fn.half_space_sinh(phi, a.rho), "bound": fn.half_space_bound(a.rho)})


def cmd_beta(a, cfg):
    from . import beta as bt
    from .geometry import ProjectiveMap
    K = fio.curve_from_dict(fio.load_json(a.curve), where=str(a.curve), M=cfg.resolution)
    eps = tuple(float(s) for s in a.eps.split(",")) if a.eps else bt.EPS_SCHEDULE
    kw = {"tol": cfg.tol} if cfg.tol else {}
    if a.action == "direct":
        if a.method == "direct" and a.z != 0:
            _need_seed(cfg, "the direct path is a Monte Carlo estimate")
        r = bt.beta_direct(K, a.z, a.method, seed=cfg.seed or 0)
        return Output(r.to_json())
    if a.action == "minus3":
        r = bt.beta_minus3(K, eps, **kw)
        rows = (["eps", "F"], r.eps_samples)
        return Output(r.to_json(), rows)
    _need_seed(cfg, "random homographies")
    rng = np.random.default_rng(cfg.seed)
    base = bt.beta_minus3(K, eps, **kw)
    vals = []
    for _ in range(a.maps):
        g = ProjectiveMap.random_admissible(rng, a.strength)
        vals.append(bt.beta_minus3(bt.projective_push(g, K), eps, **kw).value)
    rel = [abs(v - base.value) / abs(base.value) for v in vals]
    return Output({"base": base.value, "pushed": vals, "max_rel_change": max(rel)},
                  (["map", "value", "rel_change"], list(zip(range(len(vals)), vals, rel))))


def cmd_check(a, cfg):
    from .checks import SUITES, run_suites
    _need_seed(cfg, "the suites include Monte Carlo estimates")
    names = list(SUITES) if a.suite == "all" else [a.suite]
    for n in names:
        if n not in SUITES:
            raise InputError(f"unknown suite {n!r}; choose 'all' or one of {sorted(SUITES)}")
    timings = {}
    checks = run_suites(names, cfg.seed, timings)
    for c in checks:
        print(c.line(), file=sys.stderr)
    for n, t in timings.items():
        print(f"  {n}: {t:.1f} s", file=sys.stderr)
    res = {"passed": all(c.passed for c in checks), "checks": [c.to_json() for c in checks]}
    rows = (["suite", "name", "passed"], [(c.suite, c.name, c.passed) for c in checks])
    return Output(res, rows)


COMMANDS = {"distance": cmd_distance, "billiard": cmd_billiard, "volume": cmd_volume,
            "functional": cmd_functional, "beta": cmd_beta, "check": cmd_check}


def _config(a):
    fmt, out = a.format, a.out
    if out in FORMATS:
        fmt, out = fmt or out, None
    fmt = fmt or (Path(out).suffix.lstrip(".") if out and Path(out).suffix.lstrip(".") in FORMATS else "json")
    skip = {"command", "action", "seed", "resolution", "tol", "out", "format"}
    inputs = {k: v for k, v in vars(a).items() if k in ("body", "inner", "outer", "function", "curve") and v}
    params = {k: v for k, v in vars(a).items() if k not in skip and k not in inputs
              and k not in ("body", "inner", "outer", "function", "curve")}
    threads = os.environ.get("FUNKLAB_THREADS")
    if a.seed is not None and not 0 <= a.seed < 2 ** 64:
        raise InputError("--seed must be an unsigned 64-bit integer")
    if a.resolution is not None and a.resolution < 16:
        raise InputError("--resolution must be at least 16")
    try:
        threads = int(threads) if threads else None
    except ValueError:
        raise InputError("FUNKLAB_THREADS must be an integer") from None
    return ExperimentConfig(a.command, getattr(a, "action", None) or getattr(a, "suite", None),
                            inputs, params, a.resolution, a.seed, a.tol, fmt, out, threads)


def _emit(cfg, out: Output, explicit_format: bool):
    if cfg.format == "svg":
        if out.svg is None:
            raise InputError(f"svg output is not available for '{cfg.command}'")
        payload = out.svg
    elif cfg.format == "csv":
        rows = out.rows
        if rows is None:
            flat = {k: v for k, v in fio._plain(out.result).items() if not isinstance(v, (list, dict))}
            rows = (["key", "value"], sorted(flat.items()))
        header, data = rows
        payload = "# config: " + fio.dumps_compact(asdict(cfg)) + "\n" + fio.to_csv(header, data)
    else:
        payload = fio.dumps({"config": asdict(cfg), "result": out.result})
    if cfg.out:
        Path(cfg.out).write_text(payload)
    elif out.text is not None and not explicit_format:
        sys.stdout.write(out.text + "\n")
    else:
        sys.stdout.write(payload)


def run(argv=None) -> int:
    try:
        a = build_parser().parse_args(argv)
        cfg = _config(a)
        limiter = None
        if cfg.threads:
            from threadpoolctl import threadpool_limits
            limiter = threadpool_limits(cfg.threads)
        try:
            out = COMMANDS[a.command](a, cfg)
        finally:
            if limiter is not None:
                limiter.unregister()
        _emit(cfg, out, a.format is not None or a.out is not None)
        if a.command == "check" and not out.result["passed"]:
            return EXIT_FAIL
        return EXIT_OK
    except (InputError, fio.SpecError, GeometryError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


def main():
    sys.exit(run())
