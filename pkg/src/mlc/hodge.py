"""Hodge decomposition of 1-forms and harmonic representatives.

A 1-form splits as beta = gamma + d v + coexact with gamma harmonic
(closed and coclosed), v the mean-zero exact potential and the coexact
part built from a face co-potential.  Both potentials come from
conjugate-gradient Poisson solves; the harmonic part is the remainder.

The harmonic subspace itself is spanned without eigensolvers: a primal
spanning tree and a dual spanning cotree leave exactly 2*genus edges,
each of which seeds an integer-valued closed 1-form supported away from
the tree.  Projecting out the exact part and orthonormalizing yields a
basis.  The same leftover edges close tree paths into 2*genus primal
cycles, so closed forms can be compared through their periods; by
construction the raw closed forms pair with those cycles in a signed
identity matrix, exactly, which pins both constructions.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .dec import DiscreteForm, d, inner, norm, spd_solve
from .errors import GeometryError, PreconditionError


class HodgeParts:
    """Result of decompose: beta = gamma + d(v) + coexact."""

    __slots__ = ("gamma", "v", "coexact")

    def __init__(self, gamma, v, coexact):
        self.gamma = gamma
        self.v = v
        self.coexact = coexact


def _require_positive_weights(metric, what):
    w = metric.cot_weights
    if np.any(w <= 0.0):
        bad = int(np.argmin(w))
        raise GeometryError(
            "%s needs a positive 1-form inner product; cotangent weight "
            "of edge %d is %.3e" % (what, bad, w[bad]), simplex=bad)


def exact_potential(beta, metric, tol=1e-10):
    """Mean-zero v with codifferential(d v) = codifferential(beta)."""
    mesh = metric.mesh
    L = metric.stiffness()
    rhs = mesh.d0_incidence().T @ (metric.cot_weights * beta.values)
    rhs -= rhs.mean()  # kernel of L is the constants; keeps CG consistent
    v = spd_solve(lambda y: L @ y, rhs, tol, diag=np.maximum(L.diagonal(), 1e-300))
    v -= np.dot(v, metric.dual_areas) / metric.total_area
    return DiscreteForm(0, v)


def _coexact_part(beta, metric, tol):
    """eta with d(eta) = d(beta) and codifferential(eta) = 0 exactly.

    eta = W^{-1} D1^T rho where rho solves (D1 W^{-1} D1^T) rho = d beta.
    The codifferential of eta vanishes exactly because the composed
    incidence D1 D0 is the zero integer matrix.
    """
    mesh = metric.mesh
    _require_positive_weights(metric, "coexact projection")
    d1 = mesh.d1_incidence().astype(np.float64)
    B = (d1 @ sp.diags(1.0 / metric.cot_weights) @ d1.T).tocsr()
    rhs = d1 @ beta.values
    rhs -= rhs.mean()  # kernel of B is the constants
    if not rhs.any():
        return DiscreteForm(1, np.zeros(mesh.n_edges))
    rho = spd_solve(lambda y: B @ y, rhs, tol, diag=B.diagonal())
    return DiscreteForm(1, (d1.T @ rho) / metric.cot_weights)


def decompose(beta, metric, tol=1e-10):
    """Split a 1-form into harmonic + exact + coexact parts.

    The potential v is gauge-fixed to mass-weighted mean zero.  For
    closed input the coexact part is zero up to solver tolerance (and
    exactly zero when d beta vanishes identically).
    """
    mesh = metric.mesh
    if beta.degree != 1 or len(beta.values) != mesh.n_edges:
        raise PreconditionError("decompose expects a 1-form on the metric's mesh")
    v = exact_potential(beta, metric, tol)
    eta = _coexact_part(beta, metric, tol)
    gamma = DiscreteForm(1, beta.values - d(v, mesh).values - eta.values)
    return HodgeParts(gamma, v, eta)


# -- tree-cotree --------------------------------------------------------------


def _spanning_trees(mesh):
    """Primal BFS tree from vertex 0, then dual BFS cotree from face 0.

    Returns (tree_mask, parent_vertex, parent_vertex_edge, cotree_mask,
    dual_order, dual_parent_edge, leftover_edge_ids).  The leftover count
    is always exactly 2*genus.
    """
    V, E, F = mesh.n_vertices, mesh.n_edges, mesh.n_faces
    incident = [[] for _ in range(V)]
    for e in range(E):
        a, b = mesh.edges[e]
        incident[a].append((e, b))
        incident[b].append((e, a))

    tree = np.zeros(E, dtype=bool)
    parent_vertex = np.full(V, -1, dtype=np.int64)
    parent_edge = np.full(V, -1, dtype=np.int64)
    seen = np.zeros(V, dtype=bool)
    seen[0] = True
    queue = [0]
    at = 0
    while at < len(queue):
        v = queue[at]
        at += 1
        for e, w in incident[v]:
            if not seen[w]:
                seen[w] = True
                tree[e] = True
                parent_vertex[w] = v
                parent_edge[w] = e
                queue.append(w)
    if not seen.all():
        raise GeometryError("mesh is not connected")

    cotree = np.zeros(E, dtype=bool)
    face_seen = np.zeros(F, dtype=bool)
    face_seen[0] = True
    dual_parent_edge = np.full(F, -1, dtype=np.int64)
    order = [0]
    at = 0
    he_face = mesh.he_face
    he_twin = mesh.he_twin
    he_edge = mesh.he_edge
    while at < len(order):
        f = order[at]
        at += 1
        for h in (3 * f, 3 * f + 1, 3 * f + 2):
            e = he_edge[h]
            if tree[e] or cotree[e]:
                continue
            g = he_face[he_twin[h]]
            if not face_seen[g]:
                face_seen[g] = True
                cotree[e] = True
                dual_parent_edge[g] = e
                order.append(g)

    leftover = np.nonzero(~tree & ~cotree)[0]
    assert len(leftover) == 2 - mesh.euler_characteristic()
    return tree, parent_vertex, parent_edge, cotree, order, dual_parent_edge, leftover


def _closed_form_for(mesh, x, cotree_order, dual_parent_edge):
    """Integer closed 1-form equal to 1 on leftover edge x, 0 on the tree.

    Face sums are zeroed leaf-first along the dual cotree; the last face
    closes automatically because the total signed sum over all faces
    cancels edge by edge.  All arithmetic is integral, so d of the result
    is exactly zero.
    """
    omega = np.zeros(mesh.n_edges, dtype=np.int64)
    omega[x] = 1
    face_edges = mesh.face_edges()
    face_signs = mesh.he_sign.reshape(-1, 3)
    for f in reversed(cotree_order):
        e_p = dual_parent_edge[f]
        if e_p < 0:
            continue  # dual root
        deficit = int(np.dot(face_signs[f], omega[face_edges[f]]))
        s = int(face_signs[f][np.nonzero(face_edges[f] == e_p)[0][0]])
        omega[e_p] -= s * deficit
    return omega.astype(np.float64)


def harmonic_basis(metric, tol=1e-10):
    """2*genus harmonic 1-forms, orthonormal in the cotangent inner product.

    Each raw generator is an exactly-closed integer form from the
    tree-cotree split; subtracting its exact part makes it coclosed to
    solver tolerance without touching closedness (d of an exact part is
    identically zero in exact arithmetic and at roundoff here).
    """
    mesh = metric.mesh
    genus2 = 2 - mesh.euler_characteristic()
    if genus2 == 0:
        return []
    _require_positive_weights(metric, "harmonic basis")
    _, _, _, _, order, dual_parent_edge, leftover = _spanning_trees(mesh)

    basis = []
    for x in leftover:
        omega = _closed_form_for(mesh, x, order, dual_parent_edge)
        form = DiscreteForm(1, omega)
        h = DiscreteForm(1, omega - d(exact_potential(form, metric, tol), mesh).values)
        scale = norm(h, metric)
        for prev in basis:
            h = DiscreteForm(1, h.values - inner(h, prev, metric) * prev.values)
        remaining = norm(h, metric)
        if remaining <= 1e-8 * scale:
            raise GeometryError(
                "harmonic basis is rank deficient at generator of edge %d" % x,
                simplex=int(x))
        basis.append(DiscreteForm(1, h.values / remaining))
    return basis


def homology_loops(mesh):
    """2*genus integer cycles pairing the harmonic generators.

    Each loop is an (E,) integer chain: entry +1/-1 walks that edge
    along/against its min-to-max orientation.  Loop k consists of
    leftover edge k plus the connecting path in the primal tree, so by
    construction loop j pairs with raw generator k as +-delta_jk.
    """
    tree, parent_vertex, parent_edge, _, _, _, leftover = _spanning_trees(mesh)

    depth = np.zeros(mesh.n_vertices, dtype=np.int64)
    # BFS parents are already topologically ordered from the root
    orderv = [0]
    children = [[] for _ in range(mesh.n_vertices)]
    for v in range(mesh.n_vertices):
        if parent_vertex[v] >= 0:
            children[parent_vertex[v]].append(v)
    at = 0
    while at < len(orderv):
        v = orderv[at]
        at += 1
        for c in children[v]:
            depth[c] = depth[v] + 1
            orderv.append(c)

    def step_up(chain, v, sign):
        # walk v -> parent(v); +1 when that matches the edge orientation
        e = parent_edge[v]
        a = mesh.edges[e, 0]
        chain[e] += sign * (1 if v == a else -1)
        return parent_vertex[v]

    loops = []
    for x in leftover:
        a, b = mesh.edges[x]
        chain = np.zeros(mesh.n_edges, dtype=np.int64)
        chain[x] = 1  # traverse a -> b, along orientation
        va, vb = a, b
        while depth[vb] > depth[va]:
            vb = step_up(chain, vb, +1)
        while depth[va] > depth[vb]:
            va = step_up(chain, va, -1)
        while va != vb:
            vb = step_up(chain, vb, +1)
            va = step_up(chain, va, -1)
        loops.append(chain)
    return loops


def periods(form, loops):
    """Integrals of a 1-form over integer cycles."""
    if form.degree != 1:
        raise PreconditionError("periods expects a 1-form")
    return np.array([float(np.dot(chain, form.values)) for chain in loops])
