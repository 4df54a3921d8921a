"""JSON and CSV formats for measures, polygons and tables."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import InvalidInput
from .geometry import DiscreteSphericalMeasure, Polygon, angles_of, direction, wulff_shape

VERTEX_TOL = 1e-10


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise InvalidInput(f"input file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: invalid JSON ({exc})") from exc


def measure_from_dict(data) -> DiscreteSphericalMeasure:
    try:
        atoms = data["atoms"]
        dirs, weights = [], []
        for atom in atoms:
            if "angle" in atom:
                dirs.append(direction(float(atom["angle"])))
            else:
                d = np.asarray(atom["dir"], dtype=float)
                norm = np.hypot(*d)
                if not norm > 0:
                    raise InvalidInput("atom direction must be nonzero")
                dirs.append(d / norm)
            weights.append(float(atom["weight"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed measure: {exc}") from exc
    return DiscreteSphericalMeasure(np.array(dirs).reshape(-1, 2), weights)


def measure_to_dict(mu: DiscreteSphericalMeasure):
    return {
        "atoms": [
            {"angle": float(a), "dir": d.tolist(), "weight": float(w)}
            for a, d, w in zip(angles_of(mu.directions), mu.directions, mu.weights)
        ]
    }


def read_measure(path) -> DiscreteSphericalMeasure:
    return measure_from_dict(_load_json(path))


def polygon_from_dict(data) -> Polygon:
    """Rebuild the polygon from normals and supports; listed vertices, if
    any, must agree with the reconstruction."""
    try:
        normals = np.asarray(data["normals"], dtype=float).reshape(-1, 2)
        supports = np.asarray(data["supports"], dtype=float).reshape(-1)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed polygon: {exc}") from exc
    P = wulff_shape(normals, supports)
    if data.get("vertices") is not None:
        given = np.asarray(data["vertices"], dtype=float).reshape(-1, 2)
        tol = VERTEX_TOL * P.diameter
        d = np.hypot(*(given[:, None, :] - P.vertices[None, :, :]).transpose(2, 0, 1))
        if len(given) != len(P.vertices) or d.min(axis=1).max() > tol:
            raise InvalidInput("listed vertices disagree with the halfplane intersection")
    return P


def polygon_to_dict(P: Polygon):
    return {
        "normals": P.normals.tolist(),
        "supports": P.supports.tolist(),
        "vertices": P.vertices.tolist(),
        "present": [bool(p) for p in P.present],
    }


def read_polygon(path) -> Polygon:
    return polygon_from_dict(_load_json(path))


def write_json(path, data):
    Path(path).write_text(json.dumps(data, indent=2, allow_nan=True) + "\n")


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return "" if x is None else str(x)


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
