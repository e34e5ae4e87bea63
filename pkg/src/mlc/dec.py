"""Discrete exterior calculus on conformally scaled triangle meshes.

0-forms are vertex samples, 1-forms are integrals over oriented edges
(orientation: smaller to larger vertex id), 2-forms are integrals over
faces.  Hodge stars are diagonal with barycentric dual cells, so dual
areas stay positive whenever the scaled triangle inequalities hold.

The metric g = e^{2u} g0 is realized by scaling each background edge
length by e^{(u_i+u_j)/2} and recomputing angles, areas and curvature
from the scaled lengths.  With this convention the smooth rescaling laws
(area element, curvature, codifferential on 1-forms) have no
discretization error for constant u, and the usual mesh-size error for
varying u.

Sign conventions are pinned by two identities rather than by analogy:
the codifferential is the adjoint of d, <du, beta> = <u, delta beta>,
and the Laplacian is -delta d, so -Lap is positive semidefinite and the
curvature PDE is always written with -Lap on the left.

Cotangent weights are used as-is; nothing is clamped.  The shipped
templates keep them strictly positive, and the helpers that genuinely
need a positive 1-form inner product (norms, projections) report
indefiniteness instead of repairing it.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import ConvergenceError, GeometryError, PreconditionError
from .mesh import check_triangle_inequalities


class DiscreteForm:
    """Real cochain of fixed degree on a triangle mesh.

    values[k] is a vertex sample (degree 0), the integral over oriented
    edge k (degree 1), or the integral over face k (degree 2).
    """

    __slots__ = ("degree", "values")

    def __init__(self, degree, values):
        if degree not in (0, 1, 2):
            raise PreconditionError("form degree must be 0, 1 or 2")
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 1:
            raise PreconditionError("form values must be a flat array")
        self.degree = degree
        self.values = values

    @classmethod
    def zeros(cls, degree, mesh):
        return cls(degree, np.zeros(simplex_count(mesh, degree)))

    def copy(self):
        return DiscreteForm(self.degree, self.values.copy())

    def __repr__(self):
        return "DiscreteForm(degree=%d, n=%d)" % (self.degree, len(self.values))


class DualForm:
    """Cochain on the barycentric dual complex, indexed by primal simplex.

    The star of a primal k-form is a dual (2-k)-form; primal_degree
    records k so indexing stays unambiguous.
    """

    __slots__ = ("primal_degree", "values")

    def __init__(self, primal_degree, values):
        self.primal_degree = primal_degree
        self.values = np.asarray(values, dtype=np.float64)


def simplex_count(mesh, degree):
    return (mesh.n_vertices, mesh.n_edges, mesh.n_faces)[degree]


def _check_form(form, mesh, degrees, what):
    if form.degree not in degrees:
        raise PreconditionError("%s: got a %d-form" % (what, form.degree))
    if len(form.values) != simplex_count(mesh, form.degree):
        raise PreconditionError(
            "%s: %d values for %d simplices of degree %d"
            % (what, len(form.values), simplex_count(mesh, form.degree), form.degree))


class ConformalMetric:
    """Metric e^{2u} g0 from background edge lengths and a vertex factor u.

    u may be None (the background itself), a flat array, or a 0-form.
    Scaled lengths are checked against the strict triangle inequality at
    construction; everything else (angles, areas, weights, stiffness) is
    derived lazily and cached.
    """

    def __init__(self, background, u=None, check=True):
        mesh = background.mesh
        if u is None:
            uv = np.zeros(mesh.n_vertices)
        elif isinstance(u, DiscreteForm):
            if u.degree != 0:
                raise PreconditionError("conformal factor must be a 0-form")
            uv = np.asarray(u.values, dtype=np.float64)
        else:
            uv = np.asarray(u, dtype=np.float64)
        if uv.shape != (mesh.n_vertices,) or not np.all(np.isfinite(uv)):
            raise PreconditionError("conformal factor needs one finite value per vertex")
        self.background = background
        self.mesh = mesh
        self.u = DiscreteForm(0, uv)
        e = mesh.edges
        self.scaled_lengths = background.lengths \
            * np.exp(0.5 * (uv[e[:, 0]] + uv[e[:, 1]]))
        if check:
            check_triangle_inequalities(mesh, self.scaled_lengths)

    @cached_property
    def corner_angles(self):
        """(F, 3) interior angles; column c is the angle at corner c."""
        ell = self.scaled_lengths[self.mesh.face_edges()]  # col c = edge (c, c+1)
        adj1 = ell
        adj2 = np.roll(ell, 1, axis=1)   # edge (c-1, c)
        opp = np.roll(ell, -1, axis=1)   # edge (c+1, c+2)
        cosine = (adj1 ** 2 + adj2 ** 2 - opp ** 2) / (2.0 * adj1 * adj2)
        return np.arccos(np.clip(cosine, -1.0, 1.0))

    @cached_property
    def face_areas(self):
        # Kahan's ordering keeps the Heron factors positive for needle
        # triangles that still pass the strict inequality check
        ell = np.sort(self.scaled_lengths[self.mesh.face_edges()], axis=1)
        c, b, a = ell[:, 0], ell[:, 1], ell[:, 2]
        prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
        return 0.25 * np.sqrt(np.maximum(prod, 0.0))

    @cached_property
    def dual_areas(self):
        """Barycentric dual cell areas: one third of each incident face."""
        area = np.zeros(self.mesh.n_vertices)
        np.add.at(area, self.mesh.faces.ravel(),
                  np.repeat(self.face_areas / 3.0, 3))
        return area

    @cached_property
    def total_area(self):
        return float(self.face_areas.sum())

    @cached_property
    def cot_weights(self):
        """Half-cotangent edge weights, the diagonal of the 1-form star."""
        # halfedge 3f+c spans edge (c, c+1); the opposite corner is c+2
        opp_angle = np.roll(self.corner_angles, 1, axis=1)
        cot = 1.0 / np.tan(opp_angle)
        return 0.5 * np.bincount(self.mesh.he_edge, weights=cot.ravel(),
                                 minlength=self.mesh.n_edges)

    @cached_property
    def angle_defects(self):
        """2*pi minus the angle sum at each vertex; sums exactly to 2*pi*chi."""
        total = np.zeros(self.mesh.n_vertices)
        np.add.at(total, self.mesh.faces.ravel(), self.corner_angles.ravel())
        return 2.0 * np.pi - total

    def stiffness(self):
        """Cotangent stiffness L = d0^T W1 d0, positive semidefinite.

        Semidefiniteness does not depend on the signs of individual edge
        weights: L equals the sum of per-face Gram blocks of honest
        triangles, so it holds whenever the scaled lengths pass the
        triangle inequality check.
        """
        if getattr(self, "_stiffness", None) is None:
            d0 = self.mesh.d0_incidence().astype(np.float64)
            self._stiffness = (d0.T @ sp.diags(self.cot_weights) @ d0).tocsr()
        return self._stiffness

    def scaled(self, du):
        """Metric with conformal factor u + du over the same background."""
        extra = du.values if isinstance(du, DiscreteForm) else np.asarray(du)
        return ConformalMetric(self.background, self.u.values + extra)


# -- operators ----------------------------------------------------------------


def d(form, mesh):
    """Exterior derivative via signed incidence sums."""
    _check_form(form, mesh, (0, 1), "d")
    if form.degree == 0:
        e = mesh.edges
        return DiscreteForm(1, form.values[e[:, 1]] - form.values[e[:, 0]])
    vals = form.values[mesh.he_edge] * mesh.he_sign
    return DiscreteForm(2, vals.reshape(-1, 3).sum(axis=1))


def hodge_star(form, metric):
    """Diagonal Hodge star onto the barycentric dual complex."""
    mesh = metric.mesh
    _check_form(form, mesh, (0, 1, 2), "hodge_star")
    if form.degree == 0:
        area = metric.dual_areas
        if np.any(area <= 0.0):
            bad = int(np.argmin(area))
            raise GeometryError("degenerate dual cell at vertex %d" % bad, simplex=bad)
        return DualForm(0, form.values * area)
    if form.degree == 1:
        return DualForm(1, form.values * metric.cot_weights)
    area = metric.face_areas
    if np.any(area <= 0.0):
        bad = int(np.argmin(area))
        raise GeometryError("degenerate face %d" % bad, simplex=bad)
    return DualForm(2, form.values / area)


def codifferential(beta, metric):
    """Adjoint of d on 1-forms: <du, beta> = <u, codifferential(beta)>."""
    mesh = metric.mesh
    _check_form(beta, mesh, (1,), "codifferential")
    flux = mesh.d0_incidence().T @ (metric.cot_weights * beta.values)
    return DiscreteForm(0, flux / metric.dual_areas)


def laplacian(u, metric):
    """Laplace operator on 0-forms, the composition -codifferential(d u).

    With this sign -laplacian is positive semidefinite and the curvature
    equation is solved in the form -Lap u = rhs.
    """
    _check_form(u, metric.mesh, (0,), "laplacian")
    return DiscreteForm(0, -(metric.stiffness() @ u.values) / metric.dual_areas)


def gauss_curvature(metric):
    """Angle defect divided by dual area, a 0-form.

    Integrating against the dual areas recovers 2*pi*chi exactly up to
    roundoff (the defects telescope), the discrete Gauss-Bonnet theorem.
    """
    return DiscreteForm(0, metric.angle_defects / metric.dual_areas)


def inner(a, b, metric):
    """L2 pairing of two forms of equal degree under the diagonal stars."""
    if a.degree != b.degree:
        raise PreconditionError("inner product needs forms of equal degree")
    _check_form(a, metric.mesh, (0, 1, 2), "inner")
    _check_form(b, metric.mesh, (0, 1, 2), "inner")
    if a.degree == 0:
        return float(np.dot(a.values * metric.dual_areas, b.values))
    if a.degree == 1:
        return float(np.dot(a.values * metric.cot_weights, b.values))
    return float(np.dot(a.values / metric.face_areas, b.values))


def norm(a, metric):
    """sqrt(<a, a>); reports indefiniteness instead of returning NaN."""
    sq = inner(a, a, metric)
    if sq < 0.0:
        raise GeometryError("indefinite 1-form inner product "
                            "(negative cotangent weights dominate)")
    return float(np.sqrt(sq))


def integrate(form2):
    """Total integral of a 2-form (values already are face integrals)."""
    if form2.degree != 2:
        raise PreconditionError("integrate expects a 2-form")
    return float(form2.values.sum())


# -- linear solver ------------------------------------------------------------


def spd_solve(apply, rhs, tol, maxiter=None, diag=None, x0=None):
    """Preconditioned conjugate gradients for SPD (or consistent PSD) systems.

    apply maps a vector to operator @ vector; diag, when given, enables
    Jacobi preconditioning.  Iterates until ||rhs - A x|| <= tol * ||rhs||.
    Deterministic: fixed seed-free arithmetic, no reordering.  On stall or
    iteration cap the failure carries the full relative residual history.
    """
    rhs = np.asarray(rhs, dtype=np.float64)
    n = len(rhs)
    bnorm = float(np.linalg.norm(rhs))
    if bnorm == 0.0:
        return np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    if maxiter is None:
        maxiter = 20 * n + 200
    if diag is not None:
        diag = np.asarray(diag, dtype=np.float64)
        if np.any(diag <= 0.0):
            raise PreconditionError("Jacobi preconditioner needs a positive diagonal")

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    r = rhs - apply(x) if x.any() else rhs.copy()
    z = r / diag if diag is not None else r
    p = z.copy()
    rz = float(np.dot(r, z))
    history = [float(np.linalg.norm(r)) / bnorm]

    for _ in range(maxiter):
        if history[-1] <= tol:
            # the recurrence residual can drift on semidefinite systems;
            # only the recomputed true residual is allowed to declare success
            true_r = rhs - apply(x)
            true_rel = float(np.linalg.norm(true_r)) / bnorm
            if true_rel <= tol:
                return x
            r = true_r
            history[-1] = true_rel
            z = r / diag if diag is not None else r
            p = z.copy()
            rz = float(np.dot(r, z))
            continue
        ap = apply(p)
        pap = float(np.dot(p, ap))
        if pap <= 0.0:
            raise ConvergenceError(
                "operator is not positive definite along a search direction "
                "(residual %.3e)" % history[-1], history=history)
        alpha = rz / pap
        x = x + alpha * p
        r = r - alpha * ap
        history.append(float(np.linalg.norm(r)) / bnorm)
        z = r / diag if diag is not None else r
        rz_next = float(np.dot(r, z))
        p = z + (rz_next / rz) * p
        rz = rz_next
    true_rel = float(np.linalg.norm(rhs - apply(x))) / bnorm
    if true_rel <= tol:
        return x
    raise ConvergenceError(
        "conjugate gradients stalled at relative residual %.3e after %d "
        "iterations" % (true_rel, maxiter), history=history)
