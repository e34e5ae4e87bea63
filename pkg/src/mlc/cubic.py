"""Cubic differentials on meshes and the conformal-holomorphicity residual.

A cubic differential C is stored by one complex coefficient per vertex,
expressed in that vertex's tangent-plane polar chart.  The chart angles
are ring angles normalized to total 2*pi, so charts are conformal for
the piecewise flat background; coefficients hop between charts by
Levi-Civita transport with triple the 1-form angle, the degree-3
equivariance of a cubic.

A spanning tree pins the per-vertex reference directions so that every
tree transport is zero; the remaining transports are reduced mod 2*pi
and snapped when they sit within roundoff of zero.  On an exactly flat
torus all transports snap, which makes constant coefficients satisfy
the discrete equation with residual exactly 0.0.

The antiholomorphic derivative is a per-vertex least-squares fit: the
transported one-ring differences of c are matched by a complex-linear
plus complex-antilinear response in the chart positions; the antilinear
coefficient approximates dbar c.  The equation dbar C = (beta - i * beta)
tensor C then reads, per vertex, c'' = v * c where v is the chart
representation of beta + i times its rotation, fitted over the same ring.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.sparse as sp

from .dec import ConformalMetric, DiscreteForm, d
from .errors import GeometryError, PreconditionError

_SNAP = 1e-12
_RING_RANK_EPS = 1e-12


def _wrap_angle(a):
    """Reduce to the principal branch (-pi, pi]."""
    return a - 2.0 * np.pi * np.round(a / (2.0 * np.pi))


class TangentFrames:
    """Per-vertex polar charts and per-halfedge transport angles.

    chart_angle[h] is the normalized direction of halfedge h in the
    chart of its source vertex; chart_radius[h] is the background edge
    length.  transport[h] rotates a vector's angle from the source chart
    into the destination chart.  psi holds the reference-direction
    offsets chosen so tree transports vanish.
    """

    def __init__(self, background):
        mesh = background.mesh
        self.mesh = mesh
        self.background = background
        base = ConformalMetric(background)
        corner = base.corner_angles

        nh = 3 * mesh.n_faces
        raw = np.zeros(nh)
        theta = np.zeros(mesh.n_vertices)
        for v in range(mesh.n_vertices):
            ring = mesh.ring_halfedges(v)
            total = 0.0
            for h in ring:
                raw[h] = total
                total += corner[h // 3, h % 3]
            theta[v] = total
        self.vertex_angle = theta
        scale = 2.0 * np.pi / theta
        self.chart_angle = raw * scale[mesh.he_src]
        self.chart_radius = background.lengths[mesh.he_edge]

        # transport i -> j: the shared edge points at chart_angle[h] from i
        # and at chart_angle[twin h] + pi from j
        rho = self.chart_angle[mesh.he_twin] + np.pi - self.chart_angle

        # reference directions from a breadth-first tree; tree transports
        # collapse to exact zeros after the snap below
        psi = np.zeros(mesh.n_vertices)
        seen = np.zeros(mesh.n_vertices, dtype=bool)
        seen[0] = True
        queue = [0]
        at = 0
        while at < len(queue):
            v = queue[at]
            at += 1
            for h in mesh.ring_halfedges(v):
                w = mesh.he_dst[h]
                if not seen[w]:
                    seen[w] = True
                    psi[w] = _wrap_angle(rho[h] + psi[v])
                    queue.append(w)
        self.psi = psi

        aligned = _wrap_angle((rho + psi[mesh.he_src]) - psi[mesh.he_dst])
        aligned[np.abs(aligned) < _SNAP] = 0.0
        self.transport = aligned

    def ring_chart(self, v):
        """(halfedges, complex positions) of the one-ring in v's frame.

        Positions are rotated by -psi so they live in the same reference
        frame as the stored coefficients and transports.
        """
        ring = self.mesh.ring_halfedges(v)
        z = self.chart_radius[ring] * np.exp(1j * (self.chart_angle[ring]
                                                   - self.psi[v]))
        return ring, z

    def holonomy(self, loop_halfedges):
        """Total transport around a halfedge loop, reduced mod 2*pi."""
        return float(_wrap_angle(self.transport[np.asarray(loop_halfedges)].sum()))


class CubicField:
    """Cubic differential: complex coefficient per vertex in its chart."""

    __slots__ = ("frames", "coeff")

    def __init__(self, frames, coeff):
        coeff = np.asarray(coeff, dtype=np.complex128)
        if coeff.shape != (frames.mesh.n_vertices,):
            raise PreconditionError("need one coefficient per vertex")
        self.frames = frames
        self.coeff = coeff

    @property
    def transport(self):
        return self.frames.transport

    @classmethod
    def constant(cls, frames, value):
        return cls(frames, np.full(frames.mesh.n_vertices, value,
                                   dtype=np.complex128))

    @classmethod
    def zero(cls, frames):
        return cls.constant(frames, 0.0)


def norm_sq(C, metric):
    """|C|^2 in the metric e^{2u} g0, a 0-form: |c|^2 e^{-6u} per vertex."""
    if C.frames.mesh is not metric.mesh:
        raise PreconditionError("field and metric live on different meshes")
    return DiscreteForm(0, np.abs(C.coeff) ** 2 * np.exp(-6.0 * metric.u.values))


def total_norm_sq(C, metric):
    """Integral of |C|^2 against the scaled dual areas."""
    return float(np.dot(norm_sq(C, metric).values, metric.dual_areas))


def _beta_on_halfedges(beta, mesh):
    """Value of a 1-form along each halfedge's own direction."""
    return beta.values[mesh.he_edge] * mesh.he_sign


def _check_closed(beta, mesh, tol):
    db = np.abs(d(beta, mesh).values)
    scale = max(1.0, float(np.abs(beta.values).max(initial=0.0)))
    if db.max(initial=0.0) > tol * scale:
        raise PreconditionError(
            "beta is not closed: max face sum %.3e" % db.max())


def _ring_moments(z):
    P = float(np.sum(np.abs(z) ** 2))
    Q = complex(np.sum(z * z))
    den = P * P - abs(Q) ** 2
    return P, Q, den


def dbar_residual(C, beta, metric, closed_tol=1e-8):
    """Per-vertex complex residual of dbar C = (beta - i star beta) tensor C.

    Linear in C; identically zero for C = 0.  For smooth conformally
    holomorphic data the residual decays under refinement (the rate on
    irregular meshes is an empirical matter and is measured, not assumed).
    """
    mesh = metric.mesh
    frames = C.frames
    if frames.mesh is not mesh:
        raise PreconditionError("field and metric live on different meshes")
    if beta.degree != 1 or len(beta.values) != mesh.n_edges:
        raise PreconditionError("beta must be a 1-form on the same mesh")
    _check_closed(beta, mesh, closed_tol)

    bhe = _beta_on_halfedges(beta, mesh)
    out = np.zeros(mesh.n_vertices, dtype=np.complex128)
    for v in range(mesh.n_vertices):
        ring, z = frames.ring_chart(v)
        P, Q, den = _ring_moments(z)
        if den <= _RING_RANK_EPS * P * P:
            raise GeometryError("degenerate one-ring chart at vertex %d" % v,
                                simplex=v)
        dc = C.coeff[mesh.he_dst[ring]] * np.exp(3j * frames.transport[ring]) \
            - C.coeff[v]
        s1 = complex(np.sum(np.conj(z) * dc))
        s2 = complex(np.sum(z * dc))
        cpp = (P * s2 - Q * s1) / den

        x, y = z.real, z.imag
        G = np.array([[np.dot(x, x), np.dot(x, y)],
                      [np.dot(x, y), np.dot(y, y)]])
        if np.linalg.det(G) <= _RING_RANK_EPS * max(P * P, 1.0):
            raise GeometryError("degenerate one-ring chart at vertex %d" % v,
                                simplex=v)
        pq = np.linalg.solve(G, np.array([np.dot(x, bhe[ring]),
                                          np.dot(y, bhe[ring])]))
        out[v] = cpp - complex(pq[0], pq[1]) * C.coeff[v]
    return out


def residual_operator(frames, beta, metric, closed_tol=1e-8):
    """Sparse complex matrix R with (R c)_v = dbar_residual at vertex v.

    The residual is complex-linear in the coefficients, so it is exactly
    a matrix; assembling it makes the least-squares projection and
    null-space checks plain linear algebra.
    """
    mesh = metric.mesh
    if frames.mesh is not mesh:
        raise PreconditionError("frames and metric live on different meshes")
    _check_closed(beta, mesh, closed_tol)
    bhe = _beta_on_halfedges(beta, mesh)

    rows, cols, vals = [], [], []
    for v in range(mesh.n_vertices):
        ring, z = frames.ring_chart(v)
        P, Q, den = _ring_moments(z)
        if den <= _RING_RANK_EPS * P * P:
            raise GeometryError("degenerate one-ring chart at vertex %d" % v,
                                simplex=v)
        x, y = z.real, z.imag
        G = np.array([[np.dot(x, x), np.dot(x, y)],
                      [np.dot(x, y), np.dot(y, y)]])
        pq = np.linalg.solve(G, np.array([np.dot(x, bhe[ring]),
                                          np.dot(y, bhe[ring])]))
        weight = (P * z - Q * np.conj(z)) / den
        twist = np.exp(3j * frames.transport[ring])
        rows.extend([v] * len(ring))
        cols.extend(mesh.he_dst[ring].tolist())
        vals.extend((weight * twist).tolist())
        rows.append(v)
        cols.append(v)
        vals.append(complex(-np.sum(weight)) - complex(pq[0], pq[1]))
    R = sp.csr_matrix((np.asarray(vals, dtype=np.complex128), (rows, cols)),
                      shape=(mesh.n_vertices, mesh.n_vertices))
    return R


def project_conformally_holomorphic(C0, beta, metric, tol=1e-10,
                                    max_power_iterations=60, threshold=1e-2):
    """Best near-holomorphic unit-norm field reachable from C0.

    Minimizes the dual-area-weighted residual energy over coefficients
    at unit field norm: the smallest eigenvector of R^H W R relative to
    the norm's mass matrix, found by shifted inverse power iteration with
    conjugate-gradient inner solves.  If even the minimizer's residual
    exceeds `threshold` (per unit norm) the zero field is returned and a
    warning is issued.
    """
    mesh = metric.mesh
    frames = C0.frames
    R = residual_operator(frames, beta, metric, closed_tol=max(1e-8, tol))
    W = metric.dual_areas
    mass = np.exp(-6.0 * metric.u.values) * metric.dual_areas
    A = (R.conj().T @ sp.diags(W) @ R).tocsr()

    def mnorm(c):
        return float(np.sqrt(np.real(np.vdot(c, mass * c))))

    x = C0.coeff.copy()
    if mnorm(x) == 0.0:
        x = np.ones(mesh.n_vertices, dtype=np.complex128)
    x /= mnorm(x)

    # shift keeps the operator positive definite when the discrete kernel
    # is exact; it only rescales kernel components, never rotates them
    shift = 1e-12 * max(float(np.real(np.vdot(x, A @ x))), 1e-30)
    diag = np.real(A.diagonal()) + shift * mass

    def apply(c):
        return A @ c + shift * (mass * c)

    rayleigh = np.inf
    for _ in range(max_power_iterations):
        y = _complex_cg(apply, mass * x, tol, diag)
        x = y / mnorm(y)
        rq = float(np.real(np.vdot(x, A @ x)))
        if abs(rayleigh - rq) <= 1e-12 * max(rq, 1e-30):
            rayleigh = rq
            break
        rayleigh = rq

    # deterministic phase: largest coefficient becomes real positive
    k = int(np.argmax(np.abs(x)))
    phase = x[k] / abs(x[k])
    x = x / phase

    residual = float(np.sqrt(max(rayleigh, 0.0)))
    if residual > threshold:
        warnings.warn("projection floor %.3e exceeds threshold %.3e; "
                      "returning the zero field" % (residual, threshold))
        return CubicField.zero(frames)
    return CubicField(frames, x)


def _complex_cg(apply, rhs, tol, diag, maxiter=None):
    """Hermitian positive definite CG over complex vectors."""
    n = len(rhs)
    bnorm = float(np.linalg.norm(rhs))
    if bnorm == 0.0:
        return np.zeros(n, dtype=np.complex128)
    if maxiter is None:
        maxiter = 20 * n + 200
    x = np.zeros(n, dtype=np.complex128)
    r = rhs.copy()
    z = r / diag
    p = z.copy()
    rz = complex(np.vdot(r, z))
    for _ in range(maxiter):
        if float(np.linalg.norm(r)) / bnorm <= tol:
            return x
        ap = apply(p)
        alpha = rz / complex(np.vdot(p, ap))
        x = x + alpha * p
        r = r - alpha * ap
        z = r / diag
        rz_next = complex(np.vdot(r, z))
        p = z + (rz_next / rz) * p
        rz = rz_next
    from .errors import ConvergenceError
    raise ConvergenceError("complex CG stalled at relative residual %.3e"
                           % (float(np.linalg.norm(r)) / bnorm))
