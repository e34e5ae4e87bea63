"""Batch front-end: solves, decompositions, chart verifications, reports.

One binary with subcommands.  Parameters come from a JSON config file;
--out, --tol and --seed override their config counterparts.  Exit codes:
0 ok, 1 usage or config parse error, 2 violated precondition, 3 numerical
failure.  Every failure path prints a single-line JSON diagnostic, and a
fixed config produces a byte-identical report file across runs.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from .charts import CHART_TOLERANCES, SCENARIOS, run_scenario
from .cubic import CubicField, TangentFrames, project_conformally_holomorphic
from .dec import ConformalMetric, DiscreteForm, codifferential, d
from .errors import (
    ConvergenceError,
    GeometryError,
    MeshError,
    MlcError,
    PreconditionError,
    UsageError,
)
from .hodge import decompose, harmonic_basis, homology_loops
from .io import save_form_csv, save_table_csv, save_vtk
from .mesh import flat_torus, generate_genus, load_off
from .solver import ProblemData, SolveConfig, solve

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of killing the process."""

    def error(self, message):
        raise UsageError(message)


def _build_parser():
    parser = _Parser(prog="mlc", description="curvature lab batch commands")
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {
        "solve": _cmd_solve,
        "hodge": _cmd_hodge,
        "chart-verify": _cmd_chart_verify,
        "report": _cmd_report,
    }
    for name, func in handlers.items():
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--tol", type=float, default=None, help="tolerance override")
        p.add_argument("--seed", type=int, default=None, help="seed for randomized inputs")
        p.add_argument("--vtk", action="store_true", help="also write legacy ASCII VTK")
        p.set_defaults(func=func)
    return parser


# -- config plumbing -----------------------------------------------------------


def _load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError("cannot read config %s: %s" % (path, exc))
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError("config %s is not valid JSON: %s" % (path, exc))
    if not isinstance(cfg, dict):
        raise UsageError("config %s must hold a JSON object" % path)
    return cfg


def _check_keys(cfg, allowed, where):
    if not isinstance(cfg, dict):
        raise UsageError("%s must be a JSON object" % where)
    unknown = sorted(set(cfg) - set(allowed))
    if unknown:
        raise UsageError("unknown %s key(s): %s" % (where, ", ".join(unknown)))


def _check_tolerances(cfg, where="config"):
    """Every key that names a tolerance must carry a positive number."""
    for key, val in cfg.items():
        spot = "%s.%s" % (where, key)
        if isinstance(val, dict):
            _check_tolerances(val, spot)
        elif "tol" in key and (not isinstance(val, (int, float)) or isinstance(val, bool)
                               or not math.isfinite(val) or val <= 0):
            raise UsageError("%s must be a positive finite number, got %r" % (spot, val))


def _resolve_tol(args, cfg, default=1e-10):
    tol = args.tol if args.tol is not None else cfg.get("tol", default)
    if not isinstance(tol, (int, float)) or isinstance(tol, bool) or not math.isfinite(tol) or tol <= 0:
        raise UsageError("tolerance must be a positive finite number, got %r" % (tol,))
    return float(tol)


def _resolve_seed(args, cfg):
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise UsageError("seed must be a nonnegative integer, got %r" % (seed,))
    return seed


def _resolve_out(args, cfg):
    out = args.out if args.out is not None else cfg.get("out", ".")
    if not isinstance(out, str):
        raise UsageError("output directory must be a string, got %r" % (out,))
    os.makedirs(out, exist_ok=True)
    return out


def _build_mesh(spec):
    if spec is None:
        spec = {"kind": "genus", "genus": 2, "subdivisions": 1}
    _check_keys(spec, ("kind", "genus", "subdivisions", "n", "m", "path"), "mesh")
    kind = spec.get("kind", "genus")
    if kind == "genus":
        genus = spec.get("genus", 2)
        rounds = spec.get("subdivisions", 1)
        if not isinstance(genus, int) or not isinstance(rounds, int):
            raise UsageError("mesh genus and subdivisions must be integers")
        return generate_genus(genus, rounds)
    if kind == "flat-torus":
        n = spec.get("n", 7)
        m = spec.get("m", None)
        if not isinstance(n, int) or not (m is None or isinstance(m, int)):
            raise UsageError("flat-torus sizes must be integers")
        return flat_torus(n, m)
    if kind == "off":
        path = spec.get("path")
        if not isinstance(path, str):
            raise UsageError("mesh kind 'off' needs a string 'path'")
        return load_off(path)
    raise UsageError("unknown mesh kind %r (genus, flat-torus, off)" % (kind,))


def _amplitude(spec, default=0.5):
    amp = spec.get("amplitude", default)
    if not isinstance(amp, (int, float)) or isinstance(amp, bool) or not math.isfinite(amp):
        raise UsageError("amplitude must be a finite number, got %r" % (amp,))
    return float(amp)


def _build_one_form(spec, metric, rng, tol, where="beta"):
    """Edge 1-form from a generator spec.

    zero and exact are always closed; harmonic/closed add cohomology and
    need genus >= 1; loop and random are for decomposition runs (the
    solver rejects them as non-closed).
    """
    if spec is None:
        spec = {"kind": "zero"}
    _check_keys(spec, ("kind", "amplitude", "index"), where)
    mesh = metric.mesh
    kind = spec.get("kind", "zero")
    amp = _amplitude(spec)
    index = spec.get("index", 0)
    if not isinstance(index, int) or index < 0:
        raise UsageError("%s.index must be a nonnegative integer" % where)

    if kind == "zero":
        return DiscreteForm.zeros(1, mesh)
    if kind == "exact":
        pot = DiscreteForm(0, amp * rng.standard_normal(mesh.n_vertices))
        return d(pot, mesh)
    if kind in ("harmonic", "closed"):
        basis = harmonic_basis(metric, tol)
        if not basis:
            raise UsageError(
                "%s kind %r needs harmonic 1-forms; this mesh carries none" % (where, kind))
        if index >= len(basis):
            raise UsageError(
                "%s.index %d out of range; %d harmonic forms" % (where, index, len(basis)))
        values = amp * basis[index].values
        if kind == "closed":
            pot = DiscreteForm(0, amp * rng.standard_normal(mesh.n_vertices))
            values = values + d(pot, mesh).values
        return DiscreteForm(1, values)
    if kind == "loop":
        loops = homology_loops(mesh)
        if not len(loops):
            raise UsageError("%s kind 'loop' needs genus >= 1" % where)
        if index >= len(loops):
            raise UsageError(
                "%s.index %d out of range; %d generator loops" % (where, index, len(loops)))
        return DiscreteForm(1, amp * np.asarray(loops[index], dtype=np.float64))
    if kind == "random":
        return DiscreteForm(1, amp * rng.standard_normal(mesh.n_edges))
    raise UsageError(
        "unknown %s kind %r (zero, exact, harmonic, closed, loop, random)" % (where, kind))


def _build_tau(spec, background, base, beta, rng, tol):
    """Vertex data for the cubic-norm term: 0-form values or a CubicField."""
    if spec is None:
        spec = {"kind": "zero"}
    _check_keys(spec, ("kind", "amplitude", "value"), "tau")
    mesh = background.mesh
    kind = spec.get("kind", "zero")
    if kind == "zero":
        return None
    if kind == "constant":
        value = spec.get("value", 0.5)
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
            raise UsageError("tau.value must be a finite number, got %r" % (value,))
        return np.full(mesh.n_vertices, float(value))
    if kind == "random":
        return _amplitude(spec) * rng.random(mesh.n_vertices)
    if kind == "projected":
        frames = TangentFrames(background)
        coeff = rng.standard_normal(mesh.n_vertices) + 1j * rng.standard_normal(mesh.n_vertices)
        projected = project_conformally_holomorphic(
            CubicField(frames, coeff), beta, base, tol)
        return CubicField(frames, _amplitude(spec) * projected.coeff)
    raise UsageError("unknown tau kind %r (zero, constant, random, projected)" % (kind,))


# -- deterministic JSON --------------------------------------------------------


def _sanitize(obj):
    """Degenerate-run diagnostics may carry NaN; JSON gets null instead."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _dump_json(path, payload):
    text = json.dumps(_sanitize(payload), sort_keys=True, indent=2, allow_nan=False)
    with open(path, "w", newline="\n") as fh:
        fh.write(text + "\n")


def _say(payload):
    sys.stdout.write(json.dumps(_sanitize(payload), sort_keys=True, allow_nan=False) + "\n")


def _mesh_block(mesh):
    return {
        "vertices": mesh.n_vertices,
        "edges": mesh.n_edges,
        "faces": mesh.n_faces,
        "euler_characteristic": mesh.euler_characteristic(),
    }


# -- subcommands ---------------------------------------------------------------


def _cmd_solve(args):
    cfg = _load_config(args.config)
    _check_keys(cfg, ("mesh", "beta", "tau", "sign", "route", "tol", "seed", "out", "vtk"), "config")
    _check_tolerances(cfg)
    tol = _resolve_tol(args, cfg)
    seed = _resolve_seed(args, cfg)
    out = _resolve_out(args, cfg)

    sign = cfg.get("sign", -1)
    if sign not in (-1, 1) or isinstance(sign, bool):
        raise UsageError("sign must be -1 or 1, got %r" % (sign,))
    route = cfg.get("route", "direct")
    if route not in ("direct", "hodge"):
        raise UsageError("route must be 'direct' or 'hodge', got %r" % (route,))
    want_vtk = bool(args.vtk or cfg.get("vtk", False))

    mesh, background = _build_mesh(cfg.get("mesh"))
    base = ConformalMetric(background)
    rng = np.random.default_rng(seed)
    beta = _build_one_form(cfg.get("beta"), base, rng, tol)
    tau = _build_tau(cfg.get("tau"), background, base, beta, rng, tol)

    data = ProblemData(background, beta=beta, tau=tau, sign=sign)
    result = solve(data, route=route, cfg=SolveConfig(tol=tol))

    payload = {
        "command": "solve",
        "mesh": _mesh_block(mesh),
        "route": result.route,
        "seed": seed,
        "sign": sign,
        "tol": tol,
        "report": result.to_dict(),
    }
    report_path = os.path.join(out, "report.json")
    _dump_json(report_path, payload)
    save_form_csv(os.path.join(out, "u.csv"), result.u, label="u")
    save_table_csv(
        os.path.join(out, "history.csv"),
        ("iteration", "residual", "energy"),
        [(i, float(r), float(e))
         for i, (r, e) in enumerate(zip(result.residual_history, result.energy_history))],
    )
    if want_vtk:
        save_vtk(os.path.join(out, "solution.vtk"), mesh,
                 {"u": result.u.values, "k0": data.k0.values, "tau": data.tau.values})
    _say({"ok": True, "out": out, "iterations": result.iterations,
          "residual": result.residual,
          "area_identity_residual": result.area_identity_residual})
    return 0


def _cmd_hodge(args):
    cfg = _load_config(args.config)
    _check_keys(cfg, ("mesh", "form", "tol", "seed", "out"), "config")
    _check_tolerances(cfg)
    tol = _resolve_tol(args, cfg)
    seed = _resolve_seed(args, cfg)
    out = _resolve_out(args, cfg)

    mesh, background = _build_mesh(cfg.get("mesh"))
    base = ConformalMetric(background)
    rng = np.random.default_rng(seed)
    form = _build_one_form(cfg.get("form"), base, rng, tol, where="form")

    # inner solves run tighter than the reported bound so the component
    # norms are trustworthy at tol itself
    inner = max(tol * 1e-3, 1e-14)
    parts = decompose(form, base, inner)
    basis = harmonic_basis(base, inner)
    exact = d(parts.v, mesh)
    recon = parts.gamma.values + exact.values + parts.coexact.values
    payload = {
        "command": "hodge",
        "mesh": _mesh_block(mesh),
        "seed": seed,
        "tol": tol,
        "harmonic_dimension": len(basis),
        "gamma_norm": float(np.linalg.norm(parts.gamma.values)),
        "exact_norm": float(np.linalg.norm(exact.values)),
        "coexact_norm": float(np.linalg.norm(parts.coexact.values)),
        "reconstruction_residual": float(np.max(np.abs(recon - form.values), initial=0.0)),
        "d_gamma_residual": float(np.max(np.abs(d(parts.gamma, mesh).values), initial=0.0)),
        "delta_gamma_residual": float(
            np.max(np.abs(codifferential(parts.gamma, base).values), initial=0.0)),
    }
    _dump_json(os.path.join(out, "hodge.json"), payload)
    save_form_csv(os.path.join(out, "form.csv"), form, label="beta")
    save_form_csv(os.path.join(out, "gamma.csv"), parts.gamma, label="gamma")
    save_form_csv(os.path.join(out, "potential.csv"), parts.v, label="v")
    save_form_csv(os.path.join(out, "coexact.csv"), parts.coexact, label="eta")
    _say({"ok": True, "out": out, "harmonic_dimension": len(basis),
          "gamma_norm": payload["gamma_norm"]})
    return 0


def _cmd_chart_verify(args):
    cfg = _load_config(args.config)
    _check_keys(cfg, ("scenario", "tol", "seed", "out"), "config")
    _check_tolerances(cfg)
    seed = _resolve_seed(args, cfg)
    out = _resolve_out(args, cfg)
    scenario = cfg.get("scenario")
    if not isinstance(scenario, str):
        raise UsageError("config needs a 'scenario' name; catalog: %s" % ", ".join(SCENARIOS))
    uniform = args.tol if args.tol is not None else cfg.get("tol")
    if uniform is not None:
        uniform = float(uniform)
        if not math.isfinite(uniform) or uniform <= 0:
            raise UsageError("tolerance must be a positive finite number, got %r" % (uniform,))

    records = run_scenario(scenario, seed)
    tolerances = {}
    failures = 0
    worst = 0.0
    for rec in records:
        limit = uniform if uniform is not None else CHART_TOLERANCES[rec["identity"]]
        tolerances[rec["identity"]] = limit
        worst = max(worst, rec["residual"])
        if rec["residual"] > limit:
            failures += 1
    payload = {
        "command": "chart-verify",
        "scenario": scenario,
        "seed": seed,
        "max_residual": worst,
        "failures": failures,
        "tolerances": tolerances,
        "records": records,
    }
    _dump_json(os.path.join(out, "chart_report.json"), payload)
    if failures:
        raise ConvergenceError(
            "%d of %d identity residuals exceed tolerance in scenario %r (worst %.3e)"
            % (failures, len(records), scenario, worst))
    _say({"ok": True, "out": out, "scenario": scenario,
          "records": len(records), "max_residual": worst})
    return 0


def _cmd_report(args):
    cfg = _load_config(args.config)
    _check_keys(cfg, ("run", "out"), "config")
    run_dir = cfg.get("run")
    if not isinstance(run_dir, str):
        raise UsageError("config needs 'run': the directory of a finished solve")
    out = args.out if args.out is not None else cfg.get("out", run_dir)
    if not isinstance(out, str):
        raise UsageError("output directory must be a string, got %r" % (out,))
    from . import report as report_figures  # defers matplotlib to this path

    written = report_figures.render_report(run_dir, out)
    _say({"ok": True, "out": out, "written": [os.path.basename(p) for p in written]})
    return 0


def main(argv=None):
    """Entry point; returns the process exit code."""
    try:
        parser = _build_parser()
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        _say({"error": "usage", "message": str(exc)})
        return 1
    except (MeshError, GeometryError, PreconditionError) as exc:
        _say({"error": "precondition", "kind": type(exc).__name__, "message": str(exc)})
        return 2
    except ConvergenceError as exc:
        _say({"error": "numerical", "kind": type(exc).__name__, "message": str(exc)})
        return 3
    except MlcError as exc:  # future error classes stay machine-readable
        _say({"error": "failure", "kind": type(exc).__name__, "message": str(exc)})
        return 3


if __name__ == "__main__":
    sys.exit(main())
