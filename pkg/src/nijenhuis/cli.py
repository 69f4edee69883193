"""Command-line front end: ``nijenhuis <command> --file PROBLEM [options]``.

Every command builds a plain-dict report and an exit code:

* ``0``: every verdict passes,
* ``1``: a mathematical verdict fails,
* ``2``: the input could not be loaded or evaluated.

The machine format is canonical JSON (sorted keys, fixed indentation).  It is
byte-identical across runs for the same problem, seed and options.  Wall time
appears only with ``--timing``.  The human format always shows it.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from itertools import combinations, combinations_with_replacement

import numpy as np
import yaml

from . import __version__, problem
from .errors import NijenhuisError
from .fibration import SplitFibration, check_complex_projection, check_projectable, check_theorem_main
from .geometry import KINDS, VectorField, check_structure, is_nijenhuis
from .jets import fd_jacobian
from .liealg import alg_is_nijenhuis, check_homogeneous_complex, check_homogeneous_projectable
from .problem import ProblemError, ProblemSpec
from .tangent import lift_is_nijenhuis, tangent_lift_N, verify_lift_identities

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2
COMMANDS = ("torsion", "lift", "project", "liealg", "verify-all")
LIFT_RECOVERY_TOL = 1e-12
FD_CHECK_POINTS = 8


# ------------------------------------------------------------------- helpers

def _clean(x):
    """Turn numpy scalars and arrays into plain JSON values; non-finite floats become ``None``."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _pair_label(i: int, j: int) -> str:
    return f"e{i + 1},e{j + 1}"


def _exit_for(verdicts: dict) -> int:
    return EXIT_PASS if all(verdicts.values()) else EXIT_FAIL


def _config(spec: ProblemSpec) -> dict:
    cfg = {"problem": spec.name, "torsion_tol": spec.torsion_tol, "alg_tol": spec.alg_tol,
           "fd_step": spec.diff.fd_step, "format_tag": problem.FORMAT_TAG}
    if spec.sampler is not None:
        s = spec.sampler
        cfg.update(seed=s.seed, samples=s.count, box={"lo": list(s.lo), "hi": list(s.hi)})
    return cfg


def _require_chart(spec: ProblemSpec, command: str):
    if not spec.operators:
        raise ProblemError(f"{command} needs chart operators; the problem defines none")


# ------------------------------------------------------------------ commands

def cmd_torsion(spec: ProblemSpec, operator: str | None = None) -> tuple[dict, int]:
    _require_chart(spec, "torsion")
    name, N = spec.operator(operator)
    pts = spec.sampler.points()
    v = is_nijenhuis(N, pts, spec.torsion_tol)

    # Cross-check the jet derivative of N against central differences.
    M, dN = N.jets(pts[:FD_CHECK_POINTS])
    flat = lambda q: N.matrix(q).ravel()  # noqa: E731
    fd_err = 0.0
    for k in range(len(M)):
        fd = fd_jacobian(flat, pts[k], spec.diff)
        jet = dN[k].reshape(N.dim * N.dim, N.dim)
        fd_err = max(fd_err, float((np.abs(jet - fd) / np.maximum(1.0, np.abs(jet))).max()))

    structures = {kind: check_structure(N, kind, pts, spec.torsion_tol).residual for kind in KINDS}
    verdicts = {"nijenhuis": v.ok}
    report = {
        "command": "torsion", "operator": name, "verdicts": verdicts,
        "residuals": {"torsion_max": v.norm,
                      "pair_norms": {_pair_label(i, j): r for (i, j), r in sorted(v.pair_norms.items())}},
        "witness": None if v.worst is None else v.worst.as_dict(),
        "diagnostics": {"jets_vs_fd_relative": fd_err, "structure_residuals": structures},
    }
    return report, _exit_for(verdicts)


def _lift_fields(spec: ProblemSpec, n: int) -> list[tuple[str, VectorField]]:
    fields = list(spec.fields.items())
    eye = np.eye(n)
    k = 0
    while len(fields) < 2 and k < n:
        fields.append((f"e{k + 1}", VectorField.constant(spec.coords, eye[k])))
        k += 1
    return fields


def cmd_lift(spec: ProblemSpec, operator: str | None = None) -> tuple[dict, int]:
    _require_chart(spec, "lift")
    name, N = spec.operator(operator)
    n, tol = N.dim, spec.torsion_tol
    lifted = spec.sampler.doubled()
    pts = lifted.points()

    fields = _lift_fields(spec, n)
    pairs = combinations(fields, 2) if len(fields) >= 2 else combinations_with_replacement(fields, 2)
    per_pair, ident_ok = {}, True
    worst = {"bracket": 0.0, "operator": 0.0, "torsion": 0.0}
    witness = None
    for (lx, X), (ly, Y) in pairs:
        r = verify_lift_identities(N, X, Y, pts, tol)
        per_pair[f"{lx},{ly}"] = {"bracket": r.bracket_residual, "operator": r.operator_residual,
                                  "torsion": r.torsion_residual}
        if witness is None or r.worst > max(worst.values()):
            witness = {"pair": [lx, ly], "point": r.witness}
        worst = {"bracket": max(worst["bracket"], r.bracket_residual),
                 "operator": max(worst["operator"], r.operator_residual),
                 "torsion": max(worst["torsion"], r.torsion_residual)}
        ident_ok = ident_ok and r.ok

    LN = tangent_lift_N(N)
    proj = check_projectable(LN, SplitFibration(n, n), pts, tol)
    recovery = float("nan")
    if proj.ok:
        base_pts = pts[:, :n]
        recovery = float(np.abs(proj.base_operator.matrix(base_pts) - N.matrix(base_pts)).max())
    nij = lift_is_nijenhuis(N, pts, tol)

    verdicts = {
        "lift_identities": ident_ok,
        "lift_projectable": proj.ok,
        "projection_recovers_N": bool(proj.ok and recovery <= LIFT_RECOVERY_TOL),
        "lift_nijenhuis": nij.lift.ok,
        "theorem_5_1_implication": nij.implication_holds,
    }
    report = {
        "command": "lift", "operator": name, "verdicts": verdicts,
        "info": {"base_nijenhuis": nij.base.ok, "lifted_dim": 2 * n, "lift_tol": nij.lift.tol,
                 "recovery_tol": LIFT_RECOVERY_TOL, "fields": [f for f, _ in fields]},
        "residuals": {"identities": worst, "identities_per_pair": per_pair,
                      "lift_mixed_block": proj.mixed_block_norm, "lift_fiber_derivative": proj.fiber_derivative_norm,
                      "projection_recovery": recovery, "base_torsion": nij.base.norm, "lift_torsion": nij.lift.norm},
        "witness": {"identities": witness,
                    "lift_torsion": None if nij.lift.worst is None else nij.lift.worst.as_dict()},
    }
    return report, _exit_for(verdicts)


def cmd_project(spec: ProblemSpec, operator: str | None = None) -> tuple[dict, int]:
    _require_chart(spec, "project")
    if spec.fibration is None:
        raise ProblemError("project needs a fibration (fibration.base_dim) in the problem file")
    name, N = spec.operator(operator)
    fib, tol = spec.fibration, spec.torsion_tol
    pts = spec.sampler.points()
    proj = check_projectable(N, fib, pts, tol)
    report = {"command": "project", "operator": name,
              "info": {"base_dim": fib.base_dim, "fiber_dim": fib.fiber_dim, "anchor": list(fib.anchor)},
              "residuals": {"mixed_block": proj.mixed_block_norm, "fiber_derivative": proj.fiber_derivative_norm},
              "witness": {"projectability": {"block": proj.witness_block, "point": proj.witness}}}
    verdicts = {"projectable": proj.ok}
    report["verdicts"] = verdicts
    if not proj.ok:
        return report, EXIT_FAIL

    main = check_theorem_main(N, fib, pts, tol)
    report["base_operator"] = main.base_operator.to_strings()
    verdicts.update(theorem_identity=main.identity_ok, iff_agrees=main.iff_agrees)
    report["info"].update(torsion_vertical=main.torsion_vertical, base_nijenhuis=main.base_nijenhuis)
    report["residuals"].update(theorem_identity=main.identity_residual, vertical_defect=main.vertical_defect,
                               base_torsion=main.base_torsion)
    report["witness"]["theorem_identity"] = main.witness

    if spec.complex_projection:
        cp = check_complex_projection(N, fib, pts, tol)
        inv = cp.involutivity
        verdicts.update(complex_projection=cp.ok, complex_routes_agree=cp.routes_agree)
        report["info"].update(complex_fibration_route=cp.fibration_route, complex_direct_route=cp.direct_route,
                              complex_precheck=inv.precheck_ok)
        report["residuals"].update(complex_precheck=inv.precheck_residual, complex_bracket=inv.bracket_residual,
                                   base_structure=cp.base_structure_residual,
                                   base_torsion_direct=cp.base_torsion)
        report["witness"]["complex"] = {"pair": None if inv.witness_pair is None else list(inv.witness_pair),
                                        "point": inv.witness}
    return report, _exit_for(verdicts)


def cmd_liealg(spec: ProblemSpec, operator: str | None = None) -> tuple[dict, int]:
    if spec.algebra is None:
        raise ProblemError("liealg needs an algebra section in the problem file")
    a = spec.algebra
    datum, tol = a.datum, spec.alg_tol
    if operator is not None and operator not in a.operators:
        raise ProblemError(f"algebra operator {operator!r} not found; available: {sorted(a.operators)}")
    names = [operator] if operator is not None else sorted(a.operators)
    results, verdicts = {}, {}
    for name in names:
        N = a.operators[name]
        nij = alg_is_nijenhuis(datum.algebra, N, tol)
        hom = check_homogeneous_projectable(datum, N, tol)
        entry = {
            "verdicts": {"nijenhuis": nij.ok, "homogeneous_projectable": hom.ok},
            "residuals": {"torsion": nij.torsion_norm, "contracted_jacobi": nij.jacobi_residual,
                          "homogeneous": hom.residual},
            "witness": {"torsion_pair": None if nij.witness is None else _pair_label(*nij.witness),
                        "torsion_value": nij.witness_value, "homogeneous": hom.witness},
        }
        if a.complex:
            # On G/K only the torsion modulo k matters, so Nijenhuis on g is informational here.
            entry["info"] = {"nijenhuis_on_g": entry["verdicts"].pop("nijenhuis")}
            if hom.ok:
                c = check_homogeneous_complex(datum, N, tol)
                entry["verdicts"].update(complex_structure=c.ok, complex_routes_agree=c.routes_agree)
                entry["info"].update(k_valued_route=c.k_valued_route, subalgebra_route=c.subalgebra_route)
                entry["residuals"].update(k_valued=c.k_valued_residual, subalgebra=c.subalgebra_residual)
                entry["witness"].update(k_valued=c.k_valued_witness, subalgebra=c.subalgebra_witness)
            else:
                entry["verdicts"]["complex_structure"] = False
        results[name] = entry
        verdicts.update({f"{name}.{k}": v for k, v in entry["verdicts"].items()})
    report = {"command": "liealg", "verdicts": verdicts, "operators": results,
              "info": {"algebra": datum.algebra.name or "custom", "dim": datum.algebra.dim, "k_dim": datum.k_dim,
                       "ad_samples": len(datum.ad_samples), "complex": a.complex}}
    return report, _exit_for(verdicts)


_SUITES = {"torsion": cmd_torsion, "lift": cmd_lift, "project": cmd_project, "liealg": cmd_liealg}


def _guarded(fn, spec, operator) -> tuple[dict, int]:
    try:
        return fn(spec, operator)
    except NijenhuisError as exc:
        return {"error": str(exc)}, EXIT_ERROR


def cmd_verify_all(spec: ProblemSpec, operator: str | None = None) -> tuple[dict, int]:
    suites: dict[str, dict] = {}
    codes = []
    if spec.operators:
        names = [spec.operator(operator)[0]] if operator is not None else sorted(spec.operators)
        for name in names:
            for suite in ("torsion", "lift") + (("project",) if spec.fibration is not None else ()):
                rep, code = _guarded(_SUITES[suite], spec, name)
                rep["exit_code"] = code
                suites[f"{suite}:{name}"] = rep
                codes.append(code)
    if spec.algebra is not None:
        rep, code = _guarded(cmd_liealg, spec, None)
        rep["exit_code"] = code
        suites["liealg"] = rep
        codes.append(code)
    if not codes:
        raise ProblemError("nothing to verify")
    code = max(codes)
    verdicts = {k: v["exit_code"] == EXIT_PASS for k, v in suites.items()}
    return {"command": "verify-all", "verdicts": verdicts, "suites": suites}, code


COMMAND_FUNCS = {"torsion": cmd_torsion, "lift": cmd_lift, "project": cmd_project, "liealg": cmd_liealg,
                 "verify-all": cmd_verify_all}


# ------------------------------------------------------------------- driver

def run(command: str, file: str, operator: str | None = None, tol: float | None = None,
        seed: int | None = None, samples: int | None = None) -> tuple[dict, int]:
    """Load ``file``, run ``command`` and return ``(report, exit_code)``; never raises on bad input."""
    report: dict = {"command": command, "file": file}
    try:
        spec = problem.load(file).with_overrides(tol=tol, seed=seed, samples=samples)
        report["config"] = _config(spec)
        body, code = COMMAND_FUNCS[command](spec, operator)
        report.update(body)
        report["status"] = "pass" if code == EXIT_PASS else "fail"
    except (NijenhuisError, yaml.YAMLError, ValueError, TypeError, KeyError, OSError, RecursionError) as exc:
        report.update(status="error", error=f"{type(exc).__name__}: {exc}")
        code = EXIT_ERROR
    report["exit_code"] = code
    return _clean(report), code


def render_machine(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _fmt(v, verdict: bool = False) -> str:
    if isinstance(v, bool):
        return ("PASS" if v else "FAIL") if verdict else ("yes" if v else "no")
    if isinstance(v, float):
        return f"{v:.3e}"
    if isinstance(v, list) and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        return "[" + ", ".join(f"{x:.6g}" for x in v) + "]"
    return str(v)


def _lines(d: dict, indent: int, verdict: bool = False) -> list[str]:
    out = []
    pad = "  " * indent
    for k in sorted(d):
        v = d[k]
        if isinstance(v, dict):
            out.append(f"{pad}{k}:")
            out += _lines(v, indent + 1, verdict or k == "verdicts")
        else:
            out.append(f"{pad}{k}: {_fmt(v, verdict)}")
    return out


def render_human(report: dict, wall_time: float) -> str:
    head = f"nijenhuis {report['command']}: {report.get('status', '?').upper()} (exit {report['exit_code']})"
    lines = [head]
    if "error" in report:
        lines.append(f"  error: {report['error']}")
    for key in ("config", "verdicts", "info", "residuals", "witness", "base_operator", "diagnostics",
                "operators", "suites"):
        if key in report and report[key] is not None:
            val = report[key]
            if isinstance(val, dict):
                lines.append(f"  {key}:")
                lines += _lines(val, 2, key == "verdicts")
            else:
                lines.append(f"  {key}: {_fmt(val)}")
    if "operator" in report:
        lines.insert(1, f"  operator: {report['operator']}")
    lines.append(f"  wall time: {wall_time:.3f} s")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nijenhuis", description="Verify Nijenhuis operators on local charts.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--file", required=True, help="problem file path or bundled example name")
        s.add_argument("--operator", help="operator name (required when several are defined)")
        s.add_argument("--tol", type=float, help="override torsion_tol and alg_tol")
        s.add_argument("--seed", type=int, help="override the sampler seed")
        s.add_argument("--samples", type=int, help="override the sample count")
        s.add_argument("--format", choices=("human", "machine"), default="human")
        s.add_argument("--timing", action="store_true", help="include wall_time_s in machine reports")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PASS if exc.code in (0, None) else EXIT_ERROR
    start = time.perf_counter()
    report, code = run(args.command, args.file, args.operator, args.tol, args.seed, args.samples)
    elapsed = time.perf_counter() - start
    if args.format == "machine":
        if args.timing:
            report["wall_time_s"] = elapsed
        sys.stdout.write(render_machine(report))
    else:
        sys.stdout.write(render_human(report, elapsed))
    if code == EXIT_ERROR:
        print(f"error: {report.get('error', 'see report')}", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
