"""Planar convex geometry: directions, discrete measures on the circle, and
polygons described by support numbers.

Directions are stored as ``(N, 2)`` float arrays of unit vectors. A polygon
keeps its full list of candidate normals (index-aligned with the measure that
generated it) even when some of the halfplanes are redundant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateBody, HemisphereViolation, InvalidInput, OriginOutside

TWO_PI = 2.0 * np.pi

UNIT_TOL = 1e-12
SEPARATION_TOL = 1e-9
PRESENT_TOL = 1e-10
HAUSDORFF_SAMPLES = 4096


def direction(angle):
    """Unit vector(s) at the given angle(s) in radians."""
    angle = np.asarray(angle, dtype=float)
    return np.stack([np.cos(angle), np.sin(angle)], axis=-1)


def angles_of(dirs):
    """Angles in ``[0, 2*pi)`` of an ``(N, 2)`` array of directions."""
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    return np.mod(np.arctan2(dirs[:, 1], dirs[:, 0]), TWO_PI)


def as_directions(dirs, normalize=False):
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    if dirs.ndim != 2 or dirs.shape[1] != 2:
        raise InvalidInput(f"directions must have shape (N, 2), got {dirs.shape}")
    norms = np.hypot(dirs[:, 0], dirs[:, 1])
    if normalize:
        if np.any(norms == 0.0):
            raise InvalidInput("zero vector cannot be a direction")
        return dirs / norms[:, None]
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise InvalidInput("directions must have unit length")
    return dirs


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


@dataclass(frozen=True)
class DirectionReport:
    spans: bool
    general_position: bool
    max_gap: float
    # smallest angle between the lines spanned by two directions; small values
    # mean nearly parallel or antipodal pairs and poor conditioning
    min_line_separation: float

    @property
    def ill_conditioned(self):
        return self.min_line_separation < 1e-6


def validate_directions(dirs) -> DirectionReport:
    """Check the closed-half-circle condition and general position.

    In the plane the directions avoid every closed half-circle exactly when
    all cyclic gaps between consecutive angles are below pi. General position
    means no two directions are parallel or antiparallel.
    """
    dirs = as_directions(dirs, normalize=True)
    n = len(dirs)
    if n == 0:
        raise InvalidInput("at least one direction is required")
    theta = np.sort(angles_of(dirs))
    gaps = np.diff(np.concatenate([theta, [theta[0] + TWO_PI]]))
    max_gap = float(gaps.max())
    spans = bool(n >= 3 and max_gap < np.pi)

    if n >= 2:
        iu = np.triu_indices(n, k=1)
        sin_ab = np.abs(_cross(dirs[iu[0]], dirs[iu[1]]))
        cos_ab = np.abs(np.einsum("ij,ij->i", dirs[iu[0]], dirs[iu[1]]))
        line_angles = np.arctan2(sin_ab, cos_ab)
        min_sep = float(line_angles.min())
    else:
        min_sep = np.pi / 2
    general = bool(min_sep > SEPARATION_TOL)
    return DirectionReport(spans, general, max_gap, min_sep)


@dataclass(frozen=True, eq=False)
class DiscreteSphericalMeasure:
    """Finite sum of weighted point masses on the unit circle."""

    directions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        dirs = as_directions(self.directions)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(w) != len(dirs):
            raise InvalidInput("one weight per direction is required")
        if len(w) < 3:
            raise InvalidInput("a discrete measure needs at least 3 atoms")
        if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
            raise InvalidInput("atom weights must be finite and strictly positive")
        theta = np.sort(angles_of(dirs))
        gaps = np.diff(np.concatenate([theta, [theta[0] + TWO_PI]]))
        if gaps.min() <= SEPARATION_TOL:
            raise InvalidInput("atom directions must be pairwise distinct")
        dirs = dirs.copy()
        w = w.copy()
        dirs.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_angles(cls, angles, weights):
        return cls(direction(angles), weights)

    @property
    def total(self) -> float:
        return float(np.sum(self.weights))

    def __len__(self):
        return len(self.weights)

    def scaled(self, c):
        return DiscreteSphericalMeasure(self.directions, c * self.weights)

    def integrate(self, f):
        """Integral of ``f(directions) -> (N,)`` against the measure."""
        return float(np.dot(self.weights, f(self.directions)))


@dataclass(frozen=True, eq=False)
class Polygon:
    """Convex polygon with its candidate facet normals.

    ``normals[k]`` and ``supports[k]`` describe the halfplane
    ``x . v_k <= h_k``; ``present[k]`` says whether that halfplane
    contributes an edge of positive length. ``vertices`` run
    counter-clockwise and ``edge_facets[i]`` is the facet index of the edge
    from ``vertices[i]`` to ``vertices[i + 1]``.
    """

    normals: np.ndarray
    supports: np.ndarray
    vertices: np.ndarray
    edge_facets: np.ndarray
    present: np.ndarray = field(init=False)
    facet_endpoints: np.ndarray = field(init=False)
    facet_lengths: np.ndarray = field(init=False)
    diameter: float = field(init=False)

    def __post_init__(self):
        n = len(self.normals)
        m = len(self.vertices)
        present = np.zeros(n, dtype=bool)
        present[self.edge_facets] = True
        ends = np.full((n, 2, 2), np.nan)
        nxt = np.roll(self.vertices, -1, axis=0)
        ends[self.edge_facets, 0] = self.vertices
        ends[self.edge_facets, 1] = nxt
        lengths = np.zeros(n)
        lengths[self.edge_facets] = np.hypot(*(nxt - self.vertices).T)
        if m < 3:
            raise DegenerateBody("polygon needs at least three vertices")
        for name, arr in (
            ("normals", self.normals),
            ("supports", self.supports),
            ("vertices", self.vertices),
            ("edge_facets", self.edge_facets),
            ("present", present),
            ("facet_endpoints", ends),
            ("facet_lengths", lengths),
        ):
            arr = np.array(arr)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "diameter", _diameter(self.vertices))

    @property
    def n_facets(self):
        return len(self.normals)

    @property
    def area(self):
        x, y = self.vertices.T
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def centroid(self):
        x, y = self.vertices.T
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        c = x * yn - xn * y
        a = 0.5 * np.sum(c)
        return np.array([np.sum((x + xn) * c), np.sum((y + yn) * c)]) / (6.0 * a)

    @property
    def vertex_centroid(self):
        return self.vertices.mean(axis=0)

    def contains_origin(self):
        return bool(np.all(self.supports[self.present] > 0.0))


def _diameter(vertices):
    d = vertices[:, None, :] - vertices[None, :, :]
    return float(np.sqrt(np.max(np.einsum("ijk,ijk->ij", d, d))))


def _intersect(v1, h1, v2, h2):
    det = v1[0] * v2[1] - v1[1] * v2[0]
    return np.array([h1 * v2[1] - h2 * v1[1], v1[0] * h2 - v2[0] * h1]) / det


def _dual_hull(points):
    """Indices of the strict convex-hull vertices of ``points``, CCW."""
    idx = sorted(range(len(points)), key=lambda i: (points[i][0], points[i][1]))

    def turn(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def chain(seq):
        out = []
        for i in seq:
            while len(out) >= 2 and turn(points[out[-2]], points[out[-1]], points[i]) <= 0.0:
                out.pop()
            out.append(i)
        return out

    lower = chain(idx)
    upper = chain(reversed(idx))
    return lower[:-1] + upper[:-1]


def wulff_shape(dirs, supports) -> Polygon:
    """Intersect the halfplanes ``x . v_k <= h_k``.

    Requires positive supports so the origin is interior. Redundant
    halfplanes, including those touching the body in a single point, are
    kept in the normal list with ``present = False``.
    """
    normals = as_directions(dirs)
    h = np.asarray(supports, dtype=float).reshape(-1)
    if len(h) != len(normals):
        raise InvalidInput("one support number per direction is required")
    if not validate_directions(normals).spans:
        raise HemisphereViolation("directions lie in a closed half-circle")
    if not np.all(np.isfinite(h)) or np.any(h <= 0.0):
        raise DegenerateBody("support numbers must be strictly positive")

    # facet k is present iff v_k / h_k is a vertex of the dual hull
    hull = _dual_hull(normals / h[:, None])
    theta = angles_of(normals)
    alive = sorted(hull, key=lambda k: theta[k])
    while True:
        if len(alive) < 3:
            raise DegenerateBody("fewer than three facets survive")
        verts = np.array(
            [
                _intersect(normals[alive[i - 1]], h[alive[i - 1]], normals[alive[i]], h[alive[i]])
                for i in range(len(alive))
            ]
        )
        # vertex i is the start of the edge on facet alive[i]
        nxt = np.roll(verts, -1, axis=0)
        lengths = np.hypot(*(nxt - verts).T)
        diam = _diameter(verts)
        if not np.isfinite(diam) or diam <= 0.0:
            raise DegenerateBody("halfplane intersection is degenerate")
        short = lengths <= PRESENT_TOL * diam
        if not short.any():
            break
        alive = [k for k, s in zip(alive, short) if not s]

    poly = Polygon(normals, h, verts, np.array(alive, dtype=int))
    if poly.area <= 0.0:
        raise DegenerateBody("halfplane intersection has empty interior")
    return poly


def support_function(P: Polygon, u):
    """h(P, u) for one direction or an ``(M, 2)`` batch."""
    u = np.asarray(u, dtype=float)
    vals = P.vertices @ u.T
    return vals.max(axis=0)


def radial_function(P: Polygon, u):
    """rho(P, u), the distance from the origin to the boundary along ``u``."""
    if not P.contains_origin():
        raise OriginOutside("origin is not interior to the polygon")
    u = np.atleast_2d(np.asarray(u, dtype=float))
    v = P.normals[P.present]
    h = P.supports[P.present]
    c = u @ v.T
    with np.errstate(divide="ignore"):
        t = np.where(c > 0.0, h[None, :] / np.where(c > 0.0, c, 1.0), np.inf)
    rho = t.min(axis=1)
    return rho if rho.size > 1 else float(rho[0])


def diameter(P: Polygon) -> float:
    return P.diameter


def transform(P: Polygon, scale: float, shift=(0.0, 0.0)) -> Polygon:
    """``scale * P + shift`` with the facet structure carried over."""
    if scale <= 0.0:
        raise InvalidInput("scale must be positive")
    shift = np.asarray(shift, dtype=float)
    return Polygon(
        P.normals,
        scale * P.supports + P.normals @ shift,
        scale * P.vertices + shift,
        P.edge_facets,
    )


def _edge_angles(P):
    return angles_of(P.normals[P.edge_facets])


def _active_vertex(P, angles):
    # vertex i sits between the normals of edges i - 1 and i
    u = direction(angles)
    return np.argmax(u @ P.vertices.T, axis=1)


def hausdorff_distance(P: Polygon, Q: Polygon, samples: int = HAUSDORFF_SAMPLES) -> float:
    """Sup-norm distance between support functions.

    Between consecutive normals of the merged fans each support function is
    linear in a fixed vertex, so the difference is ``d . u`` for a fixed
    vector ``d``; its extreme is at an arc end or at ``+-d``. Those
    candidates are evaluated together with a uniform grid.
    """
    breaks = np.unique(np.concatenate([_edge_angles(P), _edge_angles(Q)]))
    cand = [breaks, np.linspace(0.0, TWO_PI, samples, endpoint=False)]
    if len(breaks) > 0:
        ends = np.concatenate([breaks[1:], [breaks[0] + TWO_PI]])
        mids = 0.5 * (breaks + ends)
        d = P.vertices[_active_vertex(P, mids)] - Q.vertices[_active_vertex(Q, mids)]
        for sign in (1.0, -1.0):
            a = np.mod(np.arctan2(sign * d[:, 1], sign * d[:, 0]) - breaks, TWO_PI) + breaks
            inside = a < ends
            cand.append(a[inside])
    u = direction(np.concatenate(cand))
    return float(np.max(np.abs(support_function(P, u) - support_function(Q, u))))


def support_distance(P: Polygon, h_other, samples: int = HAUSDORFF_SAMPLES) -> float:
    """Sampled sup-distance between ``h(P, .)`` and a support function callable
    taking an ``(M, 2)`` array of directions."""
    angles = np.concatenate(
        [np.linspace(0.0, TWO_PI, samples, endpoint=False), _edge_angles(P)]
    )
    u = direction(angles)
    return float(np.max(np.abs(support_function(P, u) - h_other(u))))


def regular_polygon(n: int, apothem: float = 1.0, phase: float = 0.0) -> Polygon:
    """Regular n-gon with outer normals at ``phase + 2 pi k / n``."""
    angles = phase + TWO_PI * np.arange(n) / n
    return wulff_shape(direction(angles), np.full(n, float(apothem)))


def inscribed_regular_polygon(n: int, radius: float = 1.0) -> Polygon:
    """Regular n-gon whose vertices lie on the circle of the given radius."""
    return regular_polygon(n, radius * np.cos(np.pi / n), phase=np.pi / n)


def ellipse_polygon(a: float, b: float, n: int) -> Polygon:
    """Circumscribed n-gon of the ellipse x^2/a^2 + y^2/b^2 = 1."""
    u = direction(TWO_PI * np.arange(n) / n)
    return wulff_shape(u, np.hypot(a * u[:, 0], b * u[:, 1]))


def box(x0: float, x1: float, y0: float, y1: float) -> Polygon:
    """Axis-aligned rectangle with normals ordered (e1, e2, -e1, -e2)."""
    normals = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    P = wulff_shape(normals, [0.5 * (x1 - x0), 0.5 * (y1 - y0)] * 2)
    return transform(P, 1.0, (cx, cy))
