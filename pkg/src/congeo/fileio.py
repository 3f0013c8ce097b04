"""Readers and writers for every on-disk format the CLI touches.

All emitted floats are printed with 17 significant digits so that every
JSON/CSV artifact re-parses to bit-identical values.  Readers are strict:
unknown fields, wrong types, and malformed shapes raise SchemaError with a
field path, which the CLI maps to exit code 1.
"""

from __future__ import annotations

import csv
import json
import os
from typing import Any, Sequence

import numpy as np

from .dynamic import Trajectory
from .finsler import CongestionField, euclidean_metric, grid_congestion, parse_congestion_spec
from .geodesic import BvpConfig, Curve
from .ncp import NcpProblem
from .routing import RoutingScenario
from .traffic import (
    ElasticDemand,
    FixedDemand,
    Link,
    OdPair,
    Route,
    TrafficNetwork,
    UeSolution,
)

__all__ = [
    "SchemaError",
    "fmt_float",
    "dump_json",
    "load_json",
    "load_network",
    "load_ncp_problem",
    "load_scenario",
    "load_congestion_grid",
    "save_congestion_grid",
    "load_congestion_spec",
    "write_curve_csv",
    "read_curve_csv",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "write_flows_csv",
    "read_flows_csv",
    "write_times_csv",
    "read_times_csv",
    "write_curve_svg",
]


class SchemaError(ValueError):
    """Malformed input file: wrong type, missing or unknown field, bad shape."""


# ---------------------------------------------------------------------------
# JSON with controlled float formatting
# ---------------------------------------------------------------------------

def fmt_float(v: float) -> str:
    v = float(v)
    if not np.isfinite(v):
        raise ValueError(f"refusing to serialize non-finite float {v}")
    return format(v, ".17g")


def _encode(obj: Any, indent: int) -> str:
    pad = " " * indent
    inner = " " * (indent + 2)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{inner}{json.dumps(str(k))}: {_encode(v, indent + 2)}" for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [f"{inner}{_encode(v, indent + 2)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if obj is None:
        return "null"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dump_json(obj: Any, path: str | None = None) -> str:
    text = _encode(obj, 0) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def load_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None


# ---------------------------------------------------------------------------
# Strict object validation
# ---------------------------------------------------------------------------

def _check_keys(obj: dict, required: Sequence[str], optional: Sequence[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object, got {type(obj).__name__}")
    keys = set(obj)
    missing = [k for k in required if k not in keys]
    if missing:
        raise SchemaError(f"{where}: missing field(s) {missing}")
    unknown = sorted(keys - set(required) - set(optional))
    if unknown:
        raise SchemaError(f"{where}: unknown field(s) {unknown}")


def _number(obj: dict, key: str, where: str) -> float:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


def _string(obj: dict, key: str, where: str) -> str:
    v = obj[key]
    if not isinstance(v, str):
        raise SchemaError(f"{where}.{key}: expected a string, got {v!r}")
    return v


def _string_list(obj: dict, key: str, where: str) -> list[str]:
    v = obj[key]
    if not isinstance(v, list) or not all(isinstance(s, str) for s in v):
        raise SchemaError(f"{where}.{key}: expected a list of strings")
    return v


def _matrix(obj: dict, key: str, where: str) -> np.ndarray:
    v = obj[key]
    try:
        arr = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(f"{where}.{key}: expected a numeric matrix") from None
    if arr.ndim != 2:
        raise SchemaError(f"{where}.{key}: expected a 2-d matrix, got shape {arr.shape}")
    return arr


def _vector(obj: dict, key: str, where: str) -> np.ndarray:
    v = obj[key]
    try:
        arr = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(f"{where}.{key}: expected a numeric vector") from None
    if arr.ndim != 1:
        raise SchemaError(f"{where}.{key}: expected a 1-d vector, got shape {arr.shape}")
    return arr


def _as_dict(source) -> dict:
    if isinstance(source, dict):
        return source
    return load_json(os.fspath(source))


# ---------------------------------------------------------------------------
# Traffic network JSON
# ---------------------------------------------------------------------------

def load_network(source) -> TrafficNetwork:
    """Parse the network schema; every structural invariant violation is a
    SchemaError naming the offending element."""
    doc = _as_dict(source)
    _check_keys(doc, ["nodes", "links", "routes", "od_pairs"], [], "network")
    nodes = _string_list(doc, "nodes", "network")

    links = []
    for i, raw in enumerate(doc["links"]):
        where = f"links[{i}]"
        _check_keys(raw, ["id", "from", "to", "t0", "capacity"], ["bpr_b", "bpr_p"], where)
        kwargs = {}
        if "bpr_b" in raw:
            kwargs["bpr_b"] = _number(raw, "bpr_b", where)
        if "bpr_p" in raw:
            kwargs["bpr_p"] = _number(raw, "bpr_p", where)
        try:
            links.append(
                Link(
                    id=_string(raw, "id", where),
                    from_node=_string(raw, "from", where),
                    to_node=_string(raw, "to", where),
                    t0=_number(raw, "t0", where),
                    capacity=_number(raw, "capacity", where),
                    **kwargs,
                )
            )
        except ValueError as exc:
            raise SchemaError(f"{where}: {exc}") from None

    routes = []
    for i, raw in enumerate(doc["routes"]):
        where = f"routes[{i}]"
        _check_keys(raw, ["id", "od", "links"], [], where)
        try:
            routes.append(
                Route(
                    id=_string(raw, "id", where),
                    od=_string(raw, "od", where),
                    links=tuple(_string_list(raw, "links", where)),
                )
            )
        except ValueError as exc:
            raise SchemaError(f"{where}: {exc}") from None

    od_pairs = []
    for i, raw in enumerate(doc["od_pairs"]):
        where = f"od_pairs[{i}]"
        _check_keys(raw, ["id", "origin", "destination", "demand"], [], where)
        dem_raw = raw["demand"]
        dwhere = f"{where}.demand"
        if not isinstance(dem_raw, dict) or "type" not in dem_raw:
            raise SchemaError(f"{dwhere}: expected an object with a 'type' field")
        dtype = dem_raw["type"]
        try:
            if dtype == "fixed":
                _check_keys(dem_raw, ["type", "d0"], [], dwhere)
                demand = FixedDemand(_number(dem_raw, "d0", dwhere))
            elif dtype == "elastic":
                _check_keys(dem_raw, ["type", "d0", "k"], [], dwhere)
                demand = ElasticDemand(_number(dem_raw, "d0", dwhere), _number(dem_raw, "k", dwhere))
            else:
                raise SchemaError(f"{dwhere}.type: must be 'fixed' or 'elastic', got {dtype!r}")
            od_pairs.append(
                OdPair(
                    id=_string(raw, "id", where),
                    origin=_string(raw, "origin", where),
                    destination=_string(raw, "destination", where),
                    demand=demand,
                )
            )
        except SchemaError:
            raise
        except ValueError as exc:
            raise SchemaError(f"{where}: {exc}") from None

    try:
        return TrafficNetwork(
            nodes=tuple(nodes), links=tuple(links), routes=tuple(routes), od_pairs=tuple(od_pairs)
        )
    except ValueError as exc:
        raise SchemaError(f"network: {exc}") from None


# ---------------------------------------------------------------------------
# NCP problem JSON (closed set of named map families; no code evaluation)
# ---------------------------------------------------------------------------

def load_ncp_problem(source) -> NcpProblem:
    """Problem schema: {"n": int, "f": {"type": "affine"|"quadratic", ...}}.

    ``affine``: F(x) = M x + q.  ``quadratic``: F(x) = a*x^2 + M x + q with
    the square taken componentwise (a nonnegative keeps F monotone on the
    nonnegative orthant).
    """
    doc = _as_dict(source)
    _check_keys(doc, ["n", "f"], [], "problem")
    n = doc["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise SchemaError(f"problem.n: expected a positive integer, got {n!r}")
    spec = doc["f"]
    if not isinstance(spec, dict) or "type" not in spec:
        raise SchemaError("problem.f: expected an object with a 'type' field")
    ftype = spec["type"]
    if ftype == "affine":
        _check_keys(spec, ["type", "M", "q"], [], "problem.f")
        M = _matrix(spec, "M", "problem.f")
        q = _vector(spec, "q", "problem.f")
        if M.shape != (n, n) or q.shape != (n,):
            raise SchemaError(f"problem.f: M must be {n}x{n} and q length {n}")
        return NcpProblem(n=n, f=lambda x: M @ x + q, jacobian=lambda x: M)
    if ftype == "quadratic":
        _check_keys(spec, ["type", "a", "M", "q"], [], "problem.f")
        a = _vector(spec, "a", "problem.f")
        M = _matrix(spec, "M", "problem.f")
        q = _vector(spec, "q", "problem.f")
        if a.shape != (n,) or M.shape != (n, n) or q.shape != (n,):
            raise SchemaError(f"problem.f: a, q must have length {n} and M be {n}x{n}")
        return NcpProblem(
            n=n,
            f=lambda x: a * x * x + M @ x + q,
            jacobian=lambda x: np.diag(2.0 * a * x) + M,
        )
    raise SchemaError(f"problem.f.type: unknown family {ftype!r}")


# ---------------------------------------------------------------------------
# Congestion grids (CSV) and field specs
# ---------------------------------------------------------------------------

GRID_HEADER = ["x", "y", "wx", "wy"]


def save_congestion_grid(path: str, xs, ys, vectors) -> None:
    """Row-major rectangular dump: x is the outer (slowest) coordinate."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    vectors = np.asarray(vectors, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(GRID_HEADER)
        for i, px in enumerate(xs):
            for j, py in enumerate(ys):
                writer.writerow(
                    [fmt_float(px), fmt_float(py), fmt_float(vectors[i, j, 0]), fmt_float(vectors[i, j, 1])]
                )


def load_congestion_grid(path: str) -> CongestionField:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty grid file") from None
        if [h.strip() for h in header] != GRID_HEADER:
            raise SchemaError(f"{path}: header must be exactly {','.join(GRID_HEADER)}")
        rows = []
        for ln, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise SchemaError(f"{path}:{ln}: expected 4 fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise SchemaError(f"{path}:{ln}: non-numeric value") from None
    if not rows:
        raise SchemaError(f"{path}: no grid rows")
    data = np.asarray(rows)
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    nx, ny = len(xs), len(ys)
    if nx < 2 or ny < 2:
        raise SchemaError(f"{path}: grid needs at least 2 distinct coordinates per axis")
    if len(rows) != nx * ny:
        raise SchemaError(f"{path}: expected {nx * ny} rows for a {nx}x{ny} grid, got {len(rows)}")
    expected_x = np.repeat(xs, ny)
    expected_y = np.tile(ys, nx)
    if not (np.array_equal(data[:, 0], expected_x) and np.array_equal(data[:, 1], expected_y)):
        raise SchemaError(f"{path}: rows must sweep y fastest with x then y strictly increasing")
    vectors = data[:, 2:4].reshape(nx, ny, 2)
    try:
        return grid_congestion(xs, ys, vectors)
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from None


def load_congestion_spec(spec, base_dir: str = ".") -> CongestionField:
    """Field spec: a preset string or {"grid_csv": path} (path relative to
    the referencing file)."""
    if isinstance(spec, str):
        try:
            return parse_congestion_spec(spec)
        except ValueError as exc:
            raise SchemaError(f"field: {exc}") from None
    if isinstance(spec, dict):
        _check_keys(spec, ["grid_csv"], [], "field")
        rel = _string(spec, "grid_csv", "field")
        return load_congestion_grid(os.path.join(base_dir, rel))
    raise SchemaError(f"field: expected a preset string or grid reference, got {spec!r}")


# ---------------------------------------------------------------------------
# Routing scenario JSON
# ---------------------------------------------------------------------------

def load_scenario(source, base_dir: str | None = None) -> RoutingScenario:
    if isinstance(source, dict):
        doc = source
        base = base_dir or "."
    else:
        doc = load_json(os.fspath(source))
        base = base_dir or os.path.dirname(os.path.abspath(os.fspath(source)))
    _check_keys(
        doc,
        ["origin", "destination", "field"],
        ["metric", "tol", "nodes", "seed", "explore", "restarts", "eps_cong", "box_margin"],
        "scenario",
    )
    origin = _vector(doc, "origin", "scenario")
    destination = _vector(doc, "destination", "scenario")
    if origin.shape != (2,) or destination.shape != (2,):
        raise SchemaError("scenario: origin and destination must be [x, y] pairs")
    metric_name = doc.get("metric", "euclidean")
    if metric_name != "euclidean":
        raise SchemaError(f"scenario.metric: only 'euclidean' is available, got {metric_name!r}")
    field = load_congestion_spec(doc["field"], base)
    bvp_kwargs = {"explore": True}
    if "tol" in doc:
        bvp_kwargs["tol"] = _number(doc, "tol", "scenario")
    if "nodes" in doc:
        nodes = doc["nodes"]
        if isinstance(nodes, bool) or not isinstance(nodes, int):
            raise SchemaError("scenario.nodes: expected an integer")
        bvp_kwargs["nodes"] = nodes
    if "seed" in doc:
        seed = doc["seed"]
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise SchemaError("scenario.seed: expected a nonnegative integer")
        bvp_kwargs["seed"] = seed
    if "explore" in doc:
        if not isinstance(doc["explore"], bool):
            raise SchemaError("scenario.explore: expected a boolean")
        bvp_kwargs["explore"] = doc["explore"]
    if "restarts" in doc:
        restarts = doc["restarts"]
        if isinstance(restarts, bool) or not isinstance(restarts, int) or restarts < 0:
            raise SchemaError("scenario.restarts: expected a nonnegative integer")
        bvp_kwargs["restarts"] = restarts
    kwargs = {}
    if "eps_cong" in doc:
        kwargs["eps_cong"] = _number(doc, "eps_cong", "scenario")
    if "box_margin" in doc:
        kwargs["box_margin"] = _number(doc, "box_margin", "scenario")
    try:
        return RoutingScenario(
            origin=tuple(origin),
            destination=tuple(destination),
            metric=euclidean_metric(),
            congestion=field,
            bvp=BvpConfig(**bvp_kwargs),
            **kwargs,
        )
    except ValueError as exc:
        raise SchemaError(f"scenario: {exc}") from None


# ---------------------------------------------------------------------------
# Curve / trajectory / solution tables (CSV)
# ---------------------------------------------------------------------------

def write_curve_csv(path: str, curve: Curve) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x", "y"])
        for k in range(curve.n_nodes):
            writer.writerow(
                [fmt_float(curve.params[k]), fmt_float(curve.points[k, 0]), fmt_float(curve.points[k, 1])]
            )


def read_curve_csv(path: str) -> Curve:
    t, pts = [], []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t", "x", "y"]:
            raise SchemaError(f"{path}: header must be t,x,y")
        for ln, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise SchemaError(f"{path}:{ln}: expected 3 fields")
            try:
                t.append(float(row[0]))
                pts.append([float(row[1]), float(row[2])])
            except ValueError:
                raise SchemaError(f"{path}:{ln}: non-numeric value") from None
    try:
        return Curve(params=np.asarray(t), points=np.asarray(pts))
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from None


def write_trajectory_csv(path: str, traj: Trajectory, include_cost: bool | None = None) -> None:
    cost = traj.cost_values() if (include_cost or (include_cost is None and traj.c is not None)) else None
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "h", "c"] if cost is not None else ["t", "h"])
        for k in range(traj.n_nodes):
            row = [fmt_float(traj.grid[k]), fmt_float(traj.h[k])]
            if cost is not None:
                row.append(fmt_float(cost[k]))
            writer.writerow(row)


def read_trajectory_csv(path: str) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Returns (grid, h, c-or-None); attach a cost model downstream if c is absent."""
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty trajectory file")
        header = [h.strip() for h in header]
        if header not in (["t", "h"], ["t", "h", "c"]):
            raise SchemaError(f"{path}: header must be t,h or t,h,c")
        has_c = len(header) == 3
        t, h, c = [], [], []
        for ln, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(f"{path}:{ln}: expected {len(header)} fields")
            try:
                t.append(float(row[0]))
                h.append(float(row[1]))
                if has_c:
                    c.append(float(row[2]))
            except ValueError:
                raise SchemaError(f"{path}:{ln}: non-numeric value") from None
    grid = np.asarray(t)
    flows = np.asarray(h)
    costs = np.asarray(c) if has_c else None
    if grid.size < 3:
        raise SchemaError(f"{path}: trajectory needs at least three rows")
    return grid, flows, costs


def write_flows_csv(path: str, solution: UeSolution) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["route", "flow"])
        for rid, v in zip(solution.route_ids, solution.h):
            writer.writerow([rid, fmt_float(v)])


def read_flows_csv(path: str) -> dict[str, float]:
    return _read_keyed_csv(path, ["route", "flow"])


def write_times_csv(path: str, solution: UeSolution) -> None:
    key = "od" if solution.demand_block == "per_od" else "route"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([key, "time"])
        for pid, v in zip(solution.pi_ids, solution.pi):
            writer.writerow([pid, fmt_float(v)])


def read_times_csv(path: str) -> dict[str, float]:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), None)
    if header is None:
        raise SchemaError(f"{path}: empty file")
    key = header[0].strip()
    if key not in ("od", "route") or [h.strip() for h in header][1:] != ["time"]:
        raise SchemaError(f"{path}: header must be od,time or route,time")
    return _read_keyed_csv(path, [key, "time"])


def _read_keyed_csv(path: str, expected_header: list[str]) -> dict[str, float]:
    out: dict[str, float] = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != expected_header:
            raise SchemaError(f"{path}: header must be {','.join(expected_header)}")
        for ln, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise SchemaError(f"{path}:{ln}: expected 2 fields")
            try:
                out[row[0]] = float(row[1])
            except ValueError:
                raise SchemaError(f"{path}:{ln}: non-numeric value") from None
    return out


def write_curve_svg(path: str, curve: Curve, pad_frac: float = 0.05) -> None:
    """Minimal SVG polyline with a viewBox fitted to the curve."""
    pts = curve.points
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    pad = pad_frac * float(np.max(span))
    origin = lo - pad
    size = span + 2 * pad
    # SVG y grows downward; mirror the second coordinate inside the box
    flip = float(lo[1] + hi[1])
    coords = " ".join(f"{fmt_float(p[0])},{fmt_float(flip - p[1])}" for p in pts)
    view = f"{fmt_float(origin[0])} {fmt_float(origin[1])} {fmt_float(size[0])} {fmt_float(size[1])}"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{view}">'
            f'<polyline fill="none" stroke="black" stroke-width="{fmt_float(0.01 * float(np.max(size)))}" '
            f'points="{coords}"/></svg>\n'
        )
