"""Input specs (bodies, maps, curves, grid functions) and output sinks."""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path

import numpy as np

from .geometry import DEFAULT_N, Ellipsoid, GeometryError, LpBall, ProjectiveMap, SupportBody2


class SpecError(ValueError):
    """Malformed input spec; the message names the file, line or field."""


_BODY_KEYS = {
    "support_fourier": {"coeffs"},
    "ellipse": {"A", "center"},
    "disc": {"radius", "center"},
    "lp_ball": {"p", "weights"},
    "polygon": {"vertices"},
    "support_samples": {"h", "smooth"},
}


def load_json(path):
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise SpecError(f"{path}: cannot read ({e.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from None


def _field(d, key, where, conv=None):
    if key not in d:
        raise SpecError(f"{where}: missing field {key!r}")
    v = d[key]
    if conv is None:
        return v
    try:
        return conv(v)
    except (TypeError, ValueError) as e:
        raise SpecError(f"{where}: field {key!r}: {e}") from None


def _array(shape=None):
    def conv(v):
        a = np.asarray(v, dtype=float)
        if shape is not None and a.shape != shape:
            raise ValueError(f"expected shape {shape}, got {a.shape}")
        return a
    return conv


def body_from_dict(d, where="body", N: int = DEFAULT_N, raw: bool = False):
    """SupportBody2 from a body spec; with raw=True ellipses and l_p balls keep their exact type."""
    if not isinstance(d, dict):
        raise SpecError(f"{where}: expected an object")
    kind = _field(d, "type", where)
    if kind not in _BODY_KEYS:
        raise SpecError(f"{where}: field 'type': unknown body type {kind!r}; "
                        f"expected one of {sorted(_BODY_KEYS)}")
    extra = set(d) - _BODY_KEYS[kind] - {"type"}
    if extra:
        raise SpecError(f"{where}: unknown field(s) {sorted(extra)} for type {kind!r}")
    try:
        if kind == "support_fourier":
            return SupportBody2.from_fourier(_field(d, "coeffs", where, _array()), N)
        if kind == "disc":
            c = _array((2,))(d.get("center", [0.0, 0.0]))
            return SupportBody2.disc(float(d.get("radius", 1.0)), c, N)
        if kind == "ellipse":
            E = Ellipsoid(_field(d, "A", where, _array((2, 2))), _array((2,))(d.get("center", [0, 0])))
            return E if raw else E.to_body2(N)
        if kind == "lp_ball":
            p = _field(d, "p", where, lambda v: np.inf if v in ("inf", "Infinity") else float(v))
            B = LpBall(2, p, d.get("weights"))
            return B if raw else B.to_body2(N)
        if kind == "polygon":
            V = _field(d, "vertices", where, _array())
            if V.ndim != 2 or V.shape[1] != 2 or V.shape[0] < 3:
                raise SpecError(f"{where}: field 'vertices': need at least three [x, y] pairs")
            return SupportBody2.polygon(V, N)
        h = _field(d, "h", where, _array())
        return SupportBody2(h, smooth=bool(d.get("smooth", True)))
    except GeometryError as e:
        raise SpecError(f"{where}: {e}") from None


def map_from_dict(d, where="map"):
    if not isinstance(d, dict) or set(d) != {"matrix"}:
        raise SpecError(f"{where}: expected {{\"matrix\": [[3x3]]}}")
    try:
        return ProjectiveMap(_field(d, "matrix", where, _array((3, 3))))
    except GeometryError as e:
        raise SpecError(f"{where}: {e}") from None


def curve_from_dict(d, where="curve", M: int | None = None):
    from .beta import DEFAULT_M, CurveError, SphericalCurve, cap_curve
    M = M or DEFAULT_M
    if not isinstance(d, dict):
        raise SpecError(f"{where}: expected an object")
    kind = _field(d, "type", where)
    allowed = {"cap": {"type", "theta", "pole"}, "samples": {"type", "points"}}
    if kind not in allowed:
        raise SpecError(f"{where}: field 'type': expected 'cap' or 'samples', got {kind!r}")
    extra = set(d) - allowed[kind]
    if extra:
        raise SpecError(f"{where}: unknown field(s) {sorted(extra)}")
    try:
        if kind == "cap":
            return cap_curve(_field(d, "theta", where, float), M, d.get("pole", (0.0, 0.0, 1.0)))
        P = _field(d, "points", where, _array())
        if P.ndim != 2 or P.shape[1] != 3:
            raise SpecError(f"{where}: field 'points': need [x, y, z] triples")
        return SphericalCurve.from_samples(P, M)
    except CurveError as e:
        raise SpecError(f"{where}: {e}") from None


def function_from_dict(d, where="function"):
    from .functional import GridFunction
    if not isinstance(d, dict):
        raise SpecError(f"{where}: expected an object")
    allowed = {"n", "half_width", "resolution", "values", "half_line", "preset", "A", "c", "p"}
    extra = set(d) - allowed
    if extra:
        raise SpecError(f"{where}: unknown field(s) {sorted(extra)}")
    try:
        return GridFunction.from_json(d)
    except KeyError as e:
        raise SpecError(f"{where}: missing field {e.args[0]!r}") from None
    except ValueError as e:
        raise SpecError(f"{where}: {e}") from None


def parse_point(text: str, dim: int = 2):
    try:
        v = np.array([float(s) for s in text.split(",")])
    except ValueError:
        raise SpecError(f"cannot parse point {text!r}; expected comma-separated numbers") from None
    if v.size != dim:
        raise SpecError(f"point {text!r} must have {dim} coordinates")
    return v


# -- output ------------------------------------------------------------------------------

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else str(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def to_csv(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def dumps_compact(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))
