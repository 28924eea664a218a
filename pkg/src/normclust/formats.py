"""Readers and writers for the on-disk formats used by the CLI.

* points CSV: one row per point, float columns are coordinates (a
  non-numeric first row is treated as a header)
* graph file: whitespace separated ``u v w`` lines, ``#`` comments allowed;
  optional id lists (one id per line) select P and F
* explicit metric JSON: ``{"ids", "points", "centers", "matrix"}``
* requests CSV: ``point_id,radius``
"""
from __future__ import annotations

import csv
import json
import math

import numpy as np

from .ballint import Request
from .metrics import (ContinuousEuclidean, EuclideanMetric, ExplicitMetric, GraphMetric,
                      MetricError, MetricSpace)


class InputError(ValueError):
    pass


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def read_points_csv(path) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    if rows and not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
    if not rows:
        raise InputError(f"{path}: no points")
    width = len(rows[0])
    out = []
    for lineno, r in enumerate(rows, start=1):
        if len(r) != width:
            raise InputError(f"{path}: row {lineno} has {len(r)} columns, expected {width}")
        try:
            out.append([float(c) for c in r])
        except ValueError:
            raise InputError(f"{path}: row {lineno} has a non-numeric value") from None
    arr = np.array(out)
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{path}: non-finite coordinate")
    return arr


def read_id_list(path) -> list[str]:
    try:
        with open(path) as fh:
            return [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def read_graph(path, points_path=None, centers_path=None) -> GraphMetric:
    edges = []
    try:
        with open(path) as fh:
            for lineno, ln in enumerate(fh, start=1):
                ln = ln.split("#", 1)[0].strip()
                if not ln:
                    continue
                parts = ln.split()
                if len(parts) != 3 or not _is_number(parts[2]):
                    raise InputError(f"{path}:{lineno}: expected 'u v w'")
                edges.append((parts[0], parts[1], float(parts[2])))
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    points = read_id_list(points_path) if points_path else None
    centers = read_id_list(centers_path) if centers_path else None
    try:
        return GraphMetric(edges, points, centers)
    except MetricError as exc:
        raise InputError(f"{path}: {exc}") from None


def read_explicit(path, check_triangle=None) -> ExplicitMetric:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict) or "matrix" not in data:
        raise InputError(f"{path}: explicit metric needs a 'matrix' field")
    try:
        M = np.array(data["matrix"], dtype=np.float64)
        return ExplicitMetric(M, data.get("ids"), data.get("points"), data.get("centers"),
                              check_triangle=check_triangle)
    except (MetricError, ValueError, TypeError) as exc:
        raise InputError(f"{path}: {exc}") from None


def read_metric(points=None, graph=None, matrix=None, centers=None, continuous=False,
                graph_points=None, graph_centers=None, check_triangle=None) -> MetricSpace:
    given = [x is not None for x in (points, graph, matrix)]
    if sum(given) != 1:
        raise InputError("give exactly one of --points, --graph, --matrix")
    if points is not None:
        P = read_points_csv(points)
        if continuous:
            if centers is not None:
                raise InputError("--centers cannot be combined with --continuous")
            return ContinuousEuclidean(P)
        F = read_points_csv(centers) if centers is not None else None
        try:
            return EuclideanMetric(P, F)
        except MetricError as exc:
            raise InputError(str(exc)) from None
    if continuous or centers is not None:
        raise InputError("--centers/--continuous only apply to --points")
    if graph is not None:
        return read_graph(graph, graph_points, graph_centers)
    return read_explicit(matrix, check_triangle)


def read_requests_csv(path, space: MetricSpace) -> list[Request]:
    labels = {str(lbl): i for i, lbl in enumerate(space.point_labels)}
    out = []
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    if rows and not _is_number(rows[0][-1]):
        rows = rows[1:]
    for lineno, r in enumerate(rows, start=1):
        if len(r) != 2:
            raise InputError(f"{path}: row {lineno} must be 'point_id,radius'")
        pid = r[0].strip()
        if pid not in labels:
            raise InputError(f"{path}: row {lineno}: unknown point id {pid!r}")
        try:
            out.append(Request(labels[pid], float(r[1])))
        except ValueError as exc:
            raise InputError(f"{path}: row {lineno}: {exc}") from None
    return out


def _fmt(obj) -> str:
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return json.dumps(None)
        text = format(x, ".17g")
        # keep floats recognisable as floats after a round trip
        return text if any(c in text for c in ".en") else text + ".0"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _fmt(obj.tolist())
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_fmt(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON with every float written to 17 significant digits."""
    return _fmt(obj)


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj) + "\n")
