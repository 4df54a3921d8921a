"""Deterministic triangulation of a convex polygon.

The polygon is first moved to a reference frame (area centroid at the
origin, unit diameter), fanned from the origin and uniformly refined there.
Physical coordinates are an affine image of the reference nodes, so meshes of
``m * P + t`` and ``P`` differ only by that map.
"""

from __future__ import annotations

from dataclasses import dataclass

from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .geometry import Polygon


@dataclass(frozen=True, eq=False)
class TriMesh:
    ref_nodes: np.ndarray  # (n, 2) in the reference frame
    triangles: np.ndarray  # (t, 3), counter-clockwise
    boundary_edges: np.ndarray  # (e, 2), oriented along the CCW boundary
    boundary_facets: np.ndarray  # (e,) facet index of each boundary edge
    boundary_triangles: np.ndarray  # (e,) the triangle owning each boundary edge
    center: np.ndarray
    scale: float
    level: int
    n_facets: int
    # (n, M + 1) barycentric-style weights: column 0 is the fan center, column
    # j the polygon vertex j - 1; node = weights @ [center, vertices]
    weights: sp.csr_matrix

    @property
    def nodes(self):
        return self.center + self.scale * self.ref_nodes

    @property
    def n_nodes(self):
        return len(self.ref_nodes)

    @cached_property
    def boundary_nodes(self):
        return np.unique(self.boundary_edges)

    def ref_areas(self):
        p = self.ref_nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def areas(self):
        return self.scale**2 * self.ref_areas()


def _refine(nodes, tris, bedges, btris, weights):
    n = len(nodes)
    t = len(tris)
    a, b, c = tris.T
    pairs = np.stack([np.stack([a, b], 1), np.stack([b, c], 1), np.stack([c, a], 1)], 1)
    keys = np.sort(pairs.reshape(-1, 2), axis=1)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.reshape(t, 3)
    mids = 0.5 * (nodes[uniq[:, 0]] + nodes[uniq[:, 1]])
    new_nodes = np.vstack([nodes, mids])
    new_weights = sp.vstack([weights, 0.5 * (weights[uniq[:, 0]] + weights[uniq[:, 1]])]).tocsr()
    mab, mbc, mca = (inv + n).T
    new_tris = np.empty((4 * t, 3), dtype=np.int64)
    new_tris[0::4] = np.stack([a, mab, mca], 1)
    new_tris[1::4] = np.stack([mab, b, mbc], 1)
    new_tris[2::4] = np.stack([mca, mbc, c], 1)
    new_tris[3::4] = np.stack([mab, mbc, mca], 1)

    # every boundary edge is (a, b) of its owner triangle by construction
    bm = mab[btris]
    e = len(bedges)
    new_bedges = np.empty((2 * e, 2), dtype=np.int64)
    new_bedges[0::2] = np.stack([bedges[:, 0], bm], 1)
    new_bedges[1::2] = np.stack([bm, bedges[:, 1]], 1)
    new_btris = np.empty(2 * e, dtype=np.int64)
    new_btris[0::2] = 4 * btris
    new_btris[1::2] = 4 * btris + 1
    return new_nodes, new_tris, new_bedges, new_btris, new_weights


def build_mesh(P: Polygon, level: int) -> TriMesh:
    """Fan triangulation from the centroid, refined ``level`` times."""
    level = int(level)
    if level < 0:
        raise ValueError("level must be nonnegative")
    center = P.centroid
    scale = P.diameter
    w = (P.vertices - center) / scale
    m = len(w)
    nodes = np.vstack([[0.0, 0.0], w])
    ring = np.arange(1, m + 1)
    nxt = np.roll(ring, -1)
    # triangle i = (v_i, v_{i+1}, origin): the boundary edge is its (a, b) edge
    tris = np.stack([ring, nxt, np.zeros(m, dtype=np.int64)], 1).astype(np.int64)
    bedges = np.stack([ring, nxt], 1).astype(np.int64)
    btris = np.arange(m, dtype=np.int64)
    weights = sp.identity(m + 1, format="csr")
    for _ in range(level):
        nodes, tris, bedges, btris, weights = _refine(nodes, tris, bedges, btris, weights)
    # the boundary edge of a child keeps its parent's facet; children are
    # emitted in pairs so a repeat of the base pattern recovers the facet
    facets = np.repeat(np.asarray(P.edge_facets, dtype=np.int64), 2**level)
    return TriMesh(nodes, tris, bedges, facets, btris, center, scale, level, P.n_facets, weights)
