"""Convex variational solver for the coupled conformal-factor equation.

Given a background metric with curvature k0, a closed 1-form beta and a
nonnegative density tau on the vertices, the scaled metric e^{2u} g0 has
the prescribed mixed curvature exactly when u is a critical point of

    E(u) = sum_i [ 1/2 |du|^2 + k u - 1/2 kappa e^{2u} + 1/2 xi e^{-4u} ]_i A_i

for suitable coefficient fields (k, kappa, xi).  Two parameterizations of
the same problem are provided.  The direct route folds the divergence of
beta into the linear coefficient:

    k = k0 - delta(beta),    kappa = -1,    xi = tau.

The hodge route splits beta = gamma + dv into a divergence-free part and
an exact part, absorbs v into the exponential coefficients,

    k = k0,    kappa = -e^{2v},    xi = tau e^{-4v},

minimizes in the shifted variable u' and returns u = u' + v.  Both routes
minimize a strictly convex coercive energy (kappa < 0, xi >= 0), so Newton
iteration with a backtracking line search converges to the unique
minimizer from any starting point; we start at u = 0.

Only spacelike data (sign = -1) is supported: the timelike sign flips the
sign of kappa and destroys convexity, and on surfaces of negative Euler
characteristic the connection realized by a solution is necessarily
spacelike anyway.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dec import (
    ConformalMetric,
    DiscreteForm,
    codifferential,
    d,
    spd_solve,
)
from .errors import (
    ConvergenceError,
    GeometryError,
    LineSearchError,
    PreconditionError,
    UsageError,
)
from .hodge import exact_potential

__all__ = [
    "ProblemData",
    "SolveConfig",
    "SolveReport",
    "SubstitutedData",
    "functional_value",
    "gradient",
    "hessian_apply",
    "route_agreement",
    "solve",
    "substitute",
]


@dataclass
class SolveConfig:
    """Newton iteration knobs.

    tol is measured on the mass-weighted gradient norm sqrt(sum g_i^2 A_i).
    cg_tol is the relative tolerance of the inner conjugate-gradient solves.
    """

    tol: float = 1e-10
    max_iterations: int = 100
    cg_tol: float = 1e-12
    armijo_c: float = 1e-4
    max_backtracks: int = 60
    closed_tol: float = 1e-8
    # Optional starting point, in the route's own variable (the shifted
    # factor on the hodge route).  Convexity makes the result independent
    # of it; exposed so that independence can be tested.
    initial: object = None


def _as_vertex_values(obj, mesh, what):
    if isinstance(obj, DiscreteForm):
        if obj.degree != 0:
            raise PreconditionError("%s must be a 0-form" % what)
        vals = np.asarray(obj.values, dtype=np.float64)
    else:
        vals = np.asarray(obj, dtype=np.float64)
    if vals.shape != (mesh.n_vertices,):
        raise PreconditionError("%s needs one value per vertex" % what)
    if not np.all(np.isfinite(vals)):
        raise PreconditionError("%s contains non-finite entries" % what)
    return vals


class ProblemData:
    """Inputs of one curvature problem on a fixed background metric.

    background : EdgeLengthMetric
    beta       : closed 1-form (edge values); defaults to zero
    tau        : nonnegative 0-form, or a CubicField whose squared pointwise
                 norm in the background metric is taken
    sign       : -1 spacelike (supported), +1 timelike (rejected at solve)
    k0         : background curvature 0-form; defaults to the angle-defect
                 curvature of the background.  Overriding it (e.g. with the
                 constant -1) yields constant-coefficient model problems.
    """

    def __init__(self, background, beta=None, tau=None, sign=-1, k0=None):
        mesh = background.mesh
        self.background = background
        self.mesh = mesh
        if beta is None:
            self.beta = DiscreteForm.zeros(1, mesh)
        else:
            if not isinstance(beta, DiscreteForm) or beta.degree != 1:
                raise PreconditionError("beta must be a 1-form")
            if beta.values.shape != (mesh.n_edges,):
                raise PreconditionError("beta needs one value per edge")
            self.beta = DiscreteForm(1, np.asarray(beta.values, dtype=np.float64))
        if tau is None:
            self.tau = DiscreteForm.zeros(0, mesh)
        elif hasattr(tau, "coeff") and hasattr(tau, "frames"):
            from .cubic import norm_sq

            self.tau = norm_sq(tau, ConformalMetric(background))
        else:
            self.tau = DiscreteForm(0, _as_vertex_values(tau, mesh, "tau"))
        bad = np.flatnonzero(self.tau.values < 0.0)
        if bad.size:
            raise PreconditionError(
                "tau must be nonnegative; vertex %d carries %r"
                % (int(bad[0]), float(self.tau.values[bad[0]]))
            )
        if sign not in (-1, 1):
            raise PreconditionError("sign must be -1 (spacelike) or +1 (timelike)")
        self.sign = int(sign)
        if k0 is None:
            cm = ConformalMetric(background)
            self.k0 = DiscreteForm(0, cm.angle_defects / cm.dual_areas)
        else:
            self.k0 = DiscreteForm(0, _as_vertex_values(k0, mesh, "k0"))


class SubstitutedData:
    """Coefficients after absorbing the exact part of beta.

    kappa = -e^{2v} < 0 and xi = tau e^{-4v} >= 0 are vertex fields; gamma
    is the divergence-free remainder beta - dv.  k0 is the linear
    coefficient of the shifted problem (defaults to the constant -1, the
    hyperbolic normalization).
    """

    def __init__(self, kappa, xi, v, gamma, k0=None):
        if not isinstance(kappa, DiscreteForm) or kappa.degree != 0:
            raise PreconditionError("kappa must be a 0-form")
        mesh_size = kappa.values.shape[0]
        self.kappa = kappa
        if np.any(kappa.values >= 0.0):
            raise PreconditionError("kappa must be negative everywhere")
        if not isinstance(xi, DiscreteForm) or xi.degree != 0:
            raise PreconditionError("xi must be a 0-form")
        if np.any(xi.values < 0.0):
            raise PreconditionError("xi must be nonnegative")
        self.xi = xi
        self.v = v
        self.gamma = gamma
        if k0 is None:
            self.k0 = DiscreteForm(0, np.full(mesh_size, -1.0))
        else:
            self.k0 = k0


def substitute(data, metric=None, tol=1e-12):
    """Split beta = gamma + dv and fold v into the exponential coefficients.

    The potential v solves the weak equation <dv, dw> = <beta, dw> for all
    w, with mass-weighted mean zero; gamma = beta - dv is then
    divergence-free up to the solve tolerance, and for closed beta it is
    harmonic.  The returned data reproduces beta = gamma + dv exactly.
    """
    if metric is None:
        metric = ConformalMetric(data.background)
    v = exact_potential(data.beta, metric, tol=tol)
    dv = d(v, metric.mesh)
    gamma = DiscreteForm(1, data.beta.values - dv.values)
    ev = np.exp(2.0 * v.values)
    kappa = DiscreteForm(0, -ev)
    xi = DiscreteForm(0, data.tau.values * np.exp(-4.0 * v.values))
    return SubstitutedData(kappa, xi, v, gamma, k0=data.k0)


def _coefficients(data, metric):
    """Unified (k, kappa, xi) vertex arrays for either data flavour."""
    n = metric.mesh.n_vertices
    if isinstance(data, SubstitutedData):
        k = _as_vertex_values(data.k0, metric.mesh, "k0")
        return k, data.kappa.values, data.xi.values
    if isinstance(data, ProblemData):
        k = data.k0.values - codifferential(data.beta, metric).values
        return k, np.full(n, -1.0), data.tau.values
    raise PreconditionError("data must be ProblemData or SubstitutedData")


def functional_value(u, data, metric):
    """Energy E(u); may be +inf when the exponentials overflow."""
    uv = _as_vertex_values(u, metric.mesh, "u")
    k, kappa, xi = _coefficients(data, metric)
    A = metric.dual_areas
    L = metric.stiffness()
    with np.errstate(over="ignore"):
        e2 = np.exp(2.0 * uv)
        e4 = np.exp(-4.0 * uv)
        val = 0.5 * float(uv @ (L @ uv)) + float(
            np.dot(A, k * uv - 0.5 * kappa * e2 + 0.5 * xi * e4)
        )
    if math.isnan(val):
        return math.inf
    return val


def gradient(u, data, metric):
    """First variation of E as a 0-form in the vertex mass inner product.

    Zero gradient is the discrete curvature equation
    -lap u = -k + kappa e^{2u} + 2 xi e^{-4u}.
    """
    uv = _as_vertex_values(u, metric.mesh, "u")
    k, kappa, xi = _coefficients(data, metric)
    A = metric.dual_areas
    g = (metric.stiffness() @ uv) / A + k - kappa * np.exp(2.0 * uv) \
        - 2.0 * xi * np.exp(-4.0 * uv)
    return DiscreteForm(0, g)


def hessian_apply(u, v, data, metric):
    """Second variation at u applied to v, mass-weighted.

    The operator is -lap + diag(-2 kappa e^{2u} + 8 xi e^{-4u}); with
    kappa < 0 and xi >= 0 the zeroth-order weight is positive, so
    <v, Hv> >= |dv|^2 and E is strictly convex.
    """
    uv = _as_vertex_values(u, metric.mesh, "u")
    vv = _as_vertex_values(v, metric.mesh, "v")
    _, kappa, xi = _coefficients(data, metric)
    A = metric.dual_areas
    w = -2.0 * kappa * np.exp(2.0 * uv) + 8.0 * xi * np.exp(-4.0 * uv)
    return DiscreteForm(0, (metric.stiffness() @ vv) / A + w * vv)


def _minimize(k, kappa, xi, metric, cfg):
    """Newton descent on E from u = 0; returns the iterate bundle."""
    L = metric.stiffness()
    A = metric.dual_areas
    n = A.shape[0]
    diag_L = np.asarray(L.diagonal()).ravel()

    def energy_at(uv):
        with np.errstate(over="ignore"):
            e2 = np.exp(2.0 * uv)
            e4 = np.exp(-4.0 * uv)
            val = 0.5 * float(uv @ (L @ uv)) + float(
                np.dot(A, k * uv - 0.5 * kappa * e2 + 0.5 * xi * e4)
            )
        return math.inf if math.isnan(val) else val

    if cfg.initial is None:
        u = np.zeros(n)
    else:
        u = _as_vertex_values(cfg.initial, metric.mesh, "initial").copy()
    res_history = []
    energy_history = []
    for it in range(cfg.max_iterations + 1):
        e2 = np.exp(2.0 * u)
        e4 = np.exp(-4.0 * u)
        g = (L @ u) / A + k - kappa * e2 - 2.0 * xi * e4
        res = math.sqrt(float(np.dot(A, g * g)))
        e_now = energy_at(u)
        res_history.append(res)
        energy_history.append(e_now)
        if res <= cfg.tol:
            return u, it, res, e_now, res_history, energy_history
        if it == cfg.max_iterations:
            raise ConvergenceError(
                "newton iteration did not reach tolerance %r in %d steps"
                % (cfg.tol, cfg.max_iterations),
                history=res_history,
            )
        # Hessian in matrix form: L + diag(A * w) with strictly positive w.
        w = -2.0 * kappa * e2 + 8.0 * xi * e4
        Aw = A * w
        rhs = -(A * g)
        delta = spd_solve(
            lambda x: L @ x + Aw * x,
            rhs,
            tol=cfg.cg_tol,
            diag=diag_L + Aw,
        )
        slope = float(np.dot(A * g, delta))
        if not slope < 0.0:
            raise ConvergenceError(
                "newton direction failed to descend (slope %r)" % slope,
                history=res_history,
            )
        t = 1.0
        # near the minimizer the predicted decrease falls below the roundoff
        # of E itself; without this allowance the test rejects every t and
        # the iteration stalls one Newton step short of tolerance
        fuzz = math.sqrt(n) * np.finfo(np.float64).eps * (1.0 + abs(e_now))
        for _ in range(cfg.max_backtracks):
            cand = energy_at(u + t * delta)
            if cand <= e_now + cfg.armijo_c * t * slope + fuzz:
                break
            t *= 0.5
        else:
            raise LineSearchError(
                "line search failed after %d halvings at iteration %d"
                % (cfg.max_backtracks, it),
                history=res_history,
            )
        u = u + t * delta


@dataclass
class SolveReport:
    """Converged solve plus the scalar diagnostics of the scaled metric.

    area and cubic_norm_sq integrate e^{2u} and tau e^{-4u} against the
    background vertex masses.  gb_residual compares the total angle defect
    of the scaled edge lengths with 2 pi chi.  minmax_value is the total
    Ricci trace 2 * integral(K_g) - 4 |C|^2_g computed from the scaled
    defects, not from the closed-form 4 pi chi - 4 |C|^2_g it should equal.
    """

    u: DiscreteForm
    iterations: int
    residual: float
    energy: float
    area: float
    cubic_norm_sq: float
    gb_residual: float
    area_identity_residual: float
    minmax_value: float
    route: str = "direct"
    residual_history: list = field(default_factory=list)
    energy_history: list = field(default_factory=list)

    def to_dict(self):
        """Flat JSON summary; the key set is fixed (consumed by the CLI)."""
        return {
            "iterations": int(self.iterations),
            "residual": float(self.residual),
            "energy": float(self.energy),
            "area": float(self.area),
            "cubic_norm_sq": float(self.cubic_norm_sq),
            "gb_residual": float(self.gb_residual),
            "area_identity_residual": float(self.area_identity_residual),
            "minmax_value": float(self.minmax_value),
        }


def _validate(data, metric, cfg):
    if data.sign != -1:
        raise PreconditionError(
            "timelike sign (+1) is rejected: the energy is only convex for "
            "spacelike data, and solutions on chi < 0 surfaces are spacelike"
        )
    db = d(data.beta, metric.mesh).values
    scale = max(1.0, float(np.max(np.abs(data.beta.values), initial=0.0)))
    if float(np.max(np.abs(db), initial=0.0)) > cfg.closed_tol * scale:
        raise PreconditionError("beta is not closed to tolerance %r" % cfg.closed_tol)
    # Coercivity: the total linear coefficient must be negative.  The
    # divergence term integrates to zero, so with the default k0 this is
    # exactly 2 pi chi < 0.  The margin keeps a flat background (total
    # curvature zero up to roundoff) on the rejected side regardless of
    # the roundoff sign.
    total = float(np.dot(metric.dual_areas, data.k0.values))
    margin = 1e-10 * (float(np.dot(metric.dual_areas, np.abs(data.k0.values))) + 1.0)
    if not total < -margin:
        raise PreconditionError(
            "coercivity precondition violated: integral of the linear "
            "coefficient is %r (with default curvature this means "
            "chi >= 0); spacelike solves need chi < 0" % total
        )


def _finish(data, metric, u, iterations, residual, energy, res_hist, e_hist, route):
    mesh = metric.mesh
    A = metric.dual_areas
    area = float(np.dot(A, np.exp(2.0 * u)))
    cubic = float(np.dot(A, data.tau.values * np.exp(-4.0 * u)))
    chi = mesh.euler_characteristic()
    area_identity = abs(2.0 * math.pi * chi + area - 2.0 * cubic)
    # Angle-defect diagnostics need the scaled lengths to form honest
    # triangles; a converged but rough factor can still degenerate them.
    try:
        scaled = ConformalMetric(metric.background, u)
    except GeometryError as exc:
        warnings.warn(
            "scaled metric degenerates (%s); angle-defect diagnostics "
            "are reported as nan" % exc,
            stacklevel=3,
        )
        gb = math.nan
        minmax = math.nan
    else:
        total_curvature = float(np.sum(scaled.angle_defects))
        gb = abs(total_curvature - 2.0 * math.pi * chi)
        minmax = 2.0 * total_curvature - 4.0 * cubic
    return SolveReport(
        u=DiscreteForm(0, u),
        iterations=iterations,
        residual=residual,
        energy=energy,
        area=area,
        cubic_norm_sq=cubic,
        gb_residual=gb,
        area_identity_residual=area_identity,
        minmax_value=minmax,
        route=route,
        residual_history=res_hist,
        energy_history=e_hist,
    )


def solve(data, route="direct", cfg=None):
    """Minimize the energy and report diagnostics of the scaled metric.

    route="direct" keeps beta in the linear coefficient; route="hodge"
    substitutes its exact part and shifts the unknown back afterwards.
    Both produce the same u up to solver tolerance.  residual and energy
    in the report refer to the route's own functional.
    """
    if cfg is None:
        cfg = SolveConfig()
    if route not in ("direct", "hodge"):
        raise UsageError("unknown route %r (expected 'direct' or 'hodge')" % (route,))
    if not isinstance(data, ProblemData):
        raise PreconditionError("solve expects ProblemData")
    metric = ConformalMetric(data.background)
    _validate(data, metric, cfg)
    if route == "direct":
        k, kappa, xi = _coefficients(data, metric)
        u, its, res, en, rh, eh = _minimize(k, kappa, xi, metric, cfg)
    else:
        sub = substitute(data, metric, tol=min(cfg.cg_tol, 1e-12))
        k, kappa, xi = _coefficients(sub, metric)
        shifted, its, res, en, rh, eh = _minimize(k, kappa, xi, metric, cfg)
        u = shifted + sub.v.values
    return _finish(data, metric, u, its, res, en, rh, eh, route)


def route_agreement(data, cfg=None):
    """Max-norm distance between the two routes' conformal factors."""
    direct = solve(data, route="direct", cfg=cfg)
    hodge = solve(data, route="hodge", cfg=cfg)
    return float(np.max(np.abs(direct.u.values - hodge.u.values)))
