"""Torsion problem on a convex polygon: P1 Galerkin solve of ``-Lap u = 2``
with zero boundary values, torsional rigidity, and the per-facet torsion and
cone-torsion measures.

Everything is assembled in the mesh's reference frame (unit diameter) and
scaled back: ``u = s^2 u_ref``, ``T = s^4 T_ref``, ``mu = s^3 mu_ref``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InvalidSchedule, MeshMismatch, SolverDivergence
from .geometry import Polygon
from .mesh import TriMesh, build_mesh

log = logging.getLogger(__name__)

DIM = 2
CONE_FACTOR = DIM + 2  # G_k = h_k mu_k / (n + 2)
CG_RTOL = 1e-10


def _gradients(nodes, tris):
    """Barycentric gradients ``(t, 3, 2)`` and signed areas ``(t,)``."""
    p = nodes[tris]
    x, y = p[..., 0], p[..., 1]
    area = 0.5 * ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    gx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], 1)
    gy = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], 1)
    grads = np.stack([gx, gy], -1) / (2.0 * area)[:, None, None]
    return grads, area


def assemble(mesh: TriMesh):
    """Reference-frame stiffness matrix and load vector for ``f = 2``."""
    grads, area = _gradients(mesh.ref_nodes, mesh.triangles)
    local = area[:, None, None] * np.einsum("tik,tjk->tij", grads, grads)
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = mesh.n_nodes
    K = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    K.sum_duplicates()
    load = np.bincount(mesh.triangles.ravel(), weights=np.repeat(2.0 * area / 3.0, 3), minlength=n)
    return K, load


def pcg(A, b, rtol=CG_RTOL, maxiter=None):
    """Jacobi-preconditioned conjugate gradients from a zero start.

    Returns ``(x, relative_residual, iterations)``. Summation order is fixed
    by the sparse format, so results are reproducible.
    """
    n = len(b)
    maxiter = 20 * n if maxiter is None else maxiter
    dinv = 1.0 / A.diagonal()
    x = np.zeros(n)
    r = b.copy()
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x, 0.0, 0
    z = dinv * r
    p = z.copy()
    rz = r @ z
    for it in range(1, maxiter + 1):
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        res = np.linalg.norm(r) / bnorm
        if res <= rtol:
            return x, res, it
        z = dinv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverDivergence(f"PCG reached {maxiter} iterations at relative residual {res:.3e}")


@dataclass(frozen=True, eq=False)
class TorsionSolution:
    mesh: TriMesh
    u: np.ndarray  # physical nodal values
    T: float
    energy: float
    linear_residual: float
    iterations: int
    u_ref: np.ndarray = field(repr=False)

    def element_gradients(self):
        grads, _ = _gradients(self.mesh.ref_nodes, self.mesh.triangles)
        g = np.einsum("tik,ti->tk", grads, self.u_ref[self.mesh.triangles])
        return self.mesh.scale * g

    def evaluate(self, points):
        """Piecewise-linear interpolant ``u_h`` at physical points.

        Points outside the mesh evaluate to 0 (the extension by zero).
        """
        pts = (np.atleast_2d(np.asarray(points, dtype=float)) - self.mesh.center) / self.mesh.scale
        tri = self.mesh.triangles
        p = self.mesh.ref_nodes[tri]
        out = np.zeros(len(pts))
        tol = 1e-12
        for chunk in range(0, len(pts), 256):
            q = pts[chunk:chunk + 256]
            v0 = p[None, :, 0]
            d1 = p[None, :, 1] - v0
            d2 = p[None, :, 2] - v0
            w = q[:, None, :] - v0
            det = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
            l1 = (w[..., 0] * d2[..., 1] - w[..., 1] * d2[..., 0]) / det
            l2 = (d1[..., 0] * w[..., 1] - d1[..., 1] * w[..., 0]) / det
            l0 = 1.0 - l1 - l2
            inside = (l0 >= -tol) & (l1 >= -tol) & (l2 >= -tol)
            hit = inside.any(axis=1)
            t = np.argmax(inside, axis=1)
            rows = np.arange(len(q))
            vals = self.u[tri[t]]
            lam = np.stack([l0[rows, t], l1[rows, t], l2[rows, t]], 1)
            out[chunk:chunk + 256] = np.where(hit, np.einsum("ij,ij->i", lam, vals), 0.0)
        return out


def solve_torsion(mesh: TriMesh, rtol: float = CG_RTOL) -> TorsionSolution:
    K, load = assemble(mesh)
    n = mesh.n_nodes
    boundary = np.zeros(n, dtype=bool)
    boundary[mesh.boundary_nodes] = True
    interior = np.flatnonzero(~boundary)
    u_ref = np.zeros(n)
    Kii = K[interior][:, interior]
    u_ref[interior], res, its = pcg(Kii, load[interior], rtol=rtol)

    s4 = mesh.scale**4
    T_ref = float(load @ u_ref)
    energy_ref = float(u_ref @ (K @ u_ref))
    return TorsionSolution(
        mesh=mesh,
        u=mesh.scale**2 * u_ref,
        T=s4 * T_ref,
        energy=s4 * energy_ref,
        linear_residual=float(res),
        iterations=its,
        u_ref=u_ref,
    )


@dataclass(frozen=True, eq=False)
class FacetMeasures:
    mu_tor: np.ndarray
    g_tor: np.ndarray
    total_T_check: float


def _element_edge_flux(sol: TorsionSolution, P: Polygon):
    mesh = sol.mesh
    grads, _ = _gradients(mesh.ref_nodes, mesh.triangles)
    gt = grads[mesh.boundary_triangles]
    ut = sol.u_ref[mesh.triangles[mesh.boundary_triangles]]
    gu = np.einsum("tik,ti->tk", gt, ut)
    dn = np.einsum("tk,tk->t", gu, P.normals[mesh.boundary_facets])
    e = mesh.boundary_edges
    p = mesh.ref_nodes
    length = np.hypot(*(p[e[:, 1]] - p[e[:, 0]]).T)
    return length * dn * dn


def node_energy_gradient(sol: TorsionSolution):
    """Derivative of ``4 int u_h - int |grad u_h|^2`` with respect to the
    physical node positions at fixed nodal values, shape ``(n, 2)``.

    At the Galerkin solution this functional equals ``T``, and by the
    envelope property its node derivative is the derivative of the discrete
    rigidity under mesh motion.
    """
    mesh = sol.mesh
    tris = mesh.triangles
    p = mesh.ref_nodes[tris]
    x, y = p[..., 0], p[..., 1]
    U = sol.u_ref[tris]
    area = 0.5 * ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    nxt = [1, 2, 0]
    prv = [2, 0, 1]
    # q = 2 A grad u_h
    qx = sum(U[:, i] * (y[:, nxt[i]] - y[:, prv[i]]) for i in range(3))
    qy = sum(U[:, i] * (x[:, prv[i]] - x[:, nxt[i]]) for i in range(3))
    coef_area = 4.0 / 3.0 * U.sum(axis=1) + (qx * qx + qy * qy) / (4.0 * area * area)
    gx = np.empty_like(x)
    gy = np.empty_like(y)
    for j in range(3):
        jn, jp = nxt[j], prv[j]
        dA_dx = 0.5 * (y[:, jn] - y[:, jp])
        dA_dy = 0.5 * (x[:, jp] - x[:, jn])
        du = U[:, jn] - U[:, jp]
        gx[:, j] = coef_area * dA_dx - qy * du / (2.0 * area)
        gy[:, j] = coef_area * dA_dy + qx * du / (2.0 * area)
    n = mesh.n_nodes
    flat = tris.ravel()
    g = np.stack([np.bincount(flat, gx.ravel(), n), np.bincount(flat, gy.ravel(), n)], axis=1)
    return mesh.scale**3 * g


def vertex_sensitivities(P: Polygon):
    """Derivatives of the polygon vertices and area centroid with respect to
    each support number: ``dV`` of shape ``(N, M, 2)`` and ``dc`` of shape
    ``(N, 2)``.

    Vertex ``i`` is the intersection of facets ``edge_facets[i - 1]`` and
    ``edge_facets[i]``; the centroid derivative is taken by complex step.
    """
    alive = P.edge_facets
    m = len(alive)
    a = P.normals[np.roll(alive, 1)]
    b = P.normals[alive]
    det = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    d_da = np.stack([b[:, 1], -b[:, 0]], 1) / det[:, None]
    d_db = np.stack([-a[:, 1], a[:, 0]], 1) / det[:, None]
    dV = np.zeros((P.n_facets, m, 2))
    rows = np.arange(m)
    dV[np.roll(alive, 1), rows] += d_da
    dV[alive, rows] += d_db

    step = 1e-30
    V = P.vertices[None, :, :] + 1j * step * dV
    x, y = V[..., 0], V[..., 1]
    xn, yn = np.roll(x, -1, axis=1), np.roll(y, -1, axis=1)
    cr = x * yn - xn * y
    six_area = 3.0 * cr.sum(axis=1)
    c = np.stack([((x + xn) * cr).sum(axis=1), ((y + yn) * cr).sum(axis=1)], 1) / six_area[:, None]
    dc = c.imag / step
    return dV, dc


def rigidity_gradient(sol: TorsionSolution, P: Polygon):
    """Exact derivative of the discrete rigidity with respect to each support
    number, following the deterministic mesh as the polygon moves.

    Because the mesh map is homogeneous and translation-equivariant,
    ``sum_k h_k dT_k = 4 T`` and ``sum_k dT_k v_k = 0`` hold to rounding.
    """
    G = node_energy_gradient(sol)
    GW = sol.mesh.weights.T @ G  # (M + 1, 2)
    dV, dc = vertex_sensitivities(P)
    return np.einsum("kmd,md->k", dV, GW[1:]) + dc @ GW[0]


def _boundary_layer_measure(sol: TorsionSolution, P: Polygon):
    # only boundary nodes move, and only those on facet k move normal to it:
    # the velocity field lives in the first element layer along the boundary
    mesh = sol.mesh
    G = node_energy_gradient(sol)
    mask = np.zeros(mesh.n_nodes)
    mask[mesh.boundary_nodes] = 1.0
    GW = mesh.weights.T @ (G * mask[:, None])
    dV, _ = vertex_sensitivities(P)
    return np.einsum("kmd,md->k", dV, GW[1:])


def facet_torsion_measure(sol: TorsionSolution, P: Polygon, method: str = "boundary") -> FacetMeasures:
    """Per-facet torsion measure ``mu_k = int_{F_k} |grad u|^2`` and the
    cone-torsion measure ``G_k = h_k mu_k / 4``.

    ``method="boundary"`` evaluates the Hadamard derivative in its
    domain-integral form with a velocity field carried by the element layer
    along the boundary: it moves facet ``k`` outward by a unit amount (its
    endpoints sliding along the neighbouring facets) and leaves every
    interior node fixed. It uses element-constant gradients only and does
    not satisfy ``sum_k h_k mu_k = 4 T`` by construction, so that identity
    remains an accuracy check.

    ``method="variational"`` is the exact derivative of the discrete
    rigidity (see :func:`rigidity_gradient`). It is the most accurate of the
    three and satisfies the boundary identity to rounding.

    ``method="edge"`` squares the normal component of the gradient of the
    triangle adjacent to each boundary edge; it is only first-order
    accurate.
    """
    mesh = sol.mesh
    if mesh.n_facets != P.n_facets:
        raise MeshMismatch("mesh and polygon disagree on the number of facets")
    if np.any(~P.present[mesh.boundary_facets]) or not np.all(
        np.isin(np.flatnonzero(P.present), mesh.boundary_facets)
    ):
        raise MeshMismatch("boundary edges do not match the present facets")
    if method == "boundary":
        mu = _boundary_layer_measure(sol, P)
    elif method == "variational":
        mu = rigidity_gradient(sol, P)
    elif method == "edge":
        per_edge = _element_edge_flux(sol, P)
        mu = mesh.scale**3 * np.bincount(mesh.boundary_facets, weights=per_edge, minlength=P.n_facets)
    else:
        raise ValueError(f"unknown facet measure method {method!r}")
    mu = np.where(P.present, mu, 0.0)
    g = P.supports * mu / CONE_FACTOR
    return FacetMeasures(mu, g, float(np.sum(g)))


def identity_gap(T, mu, supports):
    """Relative defect in ``(n + 2) T = sum_k h_k mu_k``."""
    return abs(CONE_FACTOR * T - float(np.dot(supports, mu))) / (CONE_FACTOR * T)


@dataclass(frozen=True)
class LevelRow:
    level: int
    nodes: int
    T: float
    energy: float
    sum_mu: float
    identity_gap: float


@dataclass(frozen=True, eq=False)
class Extrapolation:
    T: float
    mu_tor: np.ndarray
    table: list
    order_T: float
    order_mu: float


def _richardson(x1, x2, ratio, order):
    return x2 + (x2 - x1) / (ratio**order - 1.0)


def _estimate_order(d01, d12, ratio, fallback, what):
    if d12 > 0.0 and d01 > 0.0:
        p = np.log(d01 / d12) / np.log(ratio)
        if 0.5 <= p <= 4.0:
            return float(p)
    warnings.warn(f"unstable convergence-order fit for {what}; using order {fallback}", RuntimeWarning, stacklevel=3)
    return float(fallback)


def evaluate_level(P: Polygon, level: int, method: str = "boundary"):
    """Solve on one mesh level; returns ``(solution, facet measures)``."""
    sol = solve_torsion(build_mesh(P, level))
    fm = facet_torsion_measure(sol, P, method=method)
    return sol, fm


def refine_and_extrapolate(P: Polygon, levels, order=None, method: str = "boundary") -> Extrapolation:
    """Rigidity and facet measures on a refinement schedule, Richardson
    extrapolated to zero mesh size.

    With ``order=None`` the order is fitted from the last three levels
    (which must be equally spaced); otherwise the given order is used for
    both ``T`` and ``mu``.
    """
    levels = [int(v) for v in levels]
    if len(levels) < 2 or any(b <= a for a, b in zip(levels, levels[1:])):
        raise InvalidSchedule("need at least two strictly increasing levels")
    table, Ts, mus = [], [], []
    for lv in levels:
        sol, fm = evaluate_level(P, lv, method=method)
        Ts.append(sol.T)
        mus.append(fm.mu_tor)
        table.append(
            LevelRow(lv, sol.mesh.n_nodes, sol.T, sol.energy, float(fm.mu_tor.sum()),
                     identity_gap(sol.T, fm.mu_tor, P.supports))
        )
    ratio = 2.0 ** (levels[-1] - levels[-2])
    if order is not None:
        pT = pm = float(order)
    elif len(levels) >= 3 and levels[-2] - levels[-3] == levels[-1] - levels[-2]:
        pT = _estimate_order(abs(Ts[-2] - Ts[-3]), abs(Ts[-1] - Ts[-2]), ratio, 1.0, "T")
        pm = _estimate_order(
            float(np.linalg.norm(mus[-2] - mus[-3])), float(np.linalg.norm(mus[-1] - mus[-2])), ratio, 1.0, "mu"
        )
    else:
        warnings.warn("cannot fit a convergence order; using order 1", RuntimeWarning, stacklevel=2)
        pT = pm = 1.0
    T = _richardson(Ts[-2], Ts[-1], ratio, pT)
    mu = _richardson(mus[-2], mus[-1], ratio, pm)
    return Extrapolation(float(T), mu, table, pT, pm)
