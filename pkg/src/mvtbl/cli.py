"""Command-line front end.

    mvtbl build-m   --n 27 --p 15 --N 2 --alpha 9/10 [--check]
    mvtbl build-l   --l 1 ...
    mvtbl commutant ...
    mvtbl eigen     ...
    mvtbl check     ...
    mvtbl reproduce

Exit codes: 0 ok, 1 failed check, 2 bad parameters, 3 non-convergence.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from fractions import Fraction

import mpmath
import numpy as np

from .commutant import (BUILDERS, block_tridiagonal_det, build_l1, build_l2, build_l3,
                        commutant_for, commutator_norm, l1_det_formula)
from .errors import (CertificationError, ConvergenceError, DegenerateParametersError,
                     InvalidParametersError)
from .limiting import (build_m_closed_form, build_m_complement, build_m_quadrature,
                       duality_map, residual_relative)
from .mvop import Params
from .precision import EXTENDED_DPS
from .spectral import simplicity_check, stable_m_eigenbasis, symmetric_eigen

EXIT_OK, EXIT_CHECK, EXIT_PARAMS, EXIT_CONVERGENCE = 0, 1, 2, 3

REFERENCE_PARAMS = Params(27, 15, 2, Fraction(9, 10))
REFERENCE_L1_EIGENVALUES = (6.46314, 6.55601, 6.63761, -5.61601, -5.54541, -5.4863)
# The reference eigenvalues belong to L1 rescaled so that l_{4,4} = 1.
REFERENCE_UNIT_DIAGONAL = 4

COMMUTATION_TOL = 1e-10
MEMBERSHIP_TOL = 1e-8
DET_TOL = 1e-9
ORACLE_TOL = 1e-9
DUALITY_TOL = 1e-12
CERTIFY_TOL = 1e-8


class UsageError(Exception):
    pass


def parse_number(text: str) -> Fraction:
    """Decimal ("0.9") or rational ("9/10") literal, kept exact."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a decimal or a/b literal: {text!r}") from exc


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def params_from_args(args) -> Params:
    missing = [f"--{k}" for k in ("n", "p", "N") if getattr(args, k) is None]
    if missing:
        raise UsageError("missing " + ", ".join(missing))
    n = args.n
    if n.denominator != 1:
        raise InvalidParametersError(f"n must be an integer, got {n}")
    p = args.p if args.p.denominator != 1 else int(args.p)
    return Params(int(n), p, args.N, args.alpha)


# -- serialization --------------------------------------------------------


def _is_mpf(x) -> bool:
    # each mpmath context has its own mpf class
    return hasattr(x, "_mpf_")


def _num(x) -> str:
    if _is_mpf(x):
        if not mpmath.isfinite(x):
            return json.dumps(str(float(x)))
        return mpmath.nstr(x, EXTENDED_DPS, min_fixed=1, max_fixed=0)
    x = float(x)
    if not math.isfinite(x):
        return json.dumps(str(x))
    return format(x, ".17g")


def to_json(obj, indent: int = 0) -> str:
    """JSON text with 17 significant digits for floats (all digits for mpf)."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent + 1) for v in obj) + "\n" + end + "]"
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, Fraction):
        return _num(float(obj))
    if isinstance(obj, (float, np.floating)) or _is_mpf(obj):
        return _num(obj)
    return json.dumps(str(obj))


def to_csv(rows, meta: dict, header=None) -> str:
    lines = ["# " + json.dumps(meta, sort_keys=True, default=str)]
    if header:
        lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_num(v) if not isinstance(v, str) else v for v in row))
    return "\n".join(lines) + "\n"


def _params_dict(params: Params) -> dict:
    return {"n": params.n, "p": str(params.p), "N": params.N, "alpha": str(params.alpha)}


def _emit(args, text: str):
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_matrix(args, params, values, meta):
    rows = np.asarray(values).tolist()
    if args.format == "csv":
        _emit(args, to_csv(rows, {"params": _params_dict(params), **meta}))
    else:
        _emit(args, to_json({"params": _params_dict(params), "matrix": rows, "meta": meta}) + "\n")


def _emit_table(args, params, header, rows, payload):
    if args.format == "csv":
        meta = {k: v for k, v in payload.items() if not isinstance(v, (list, dict))}
        _emit(args, to_csv(rows, {"params": _params_dict(params), **meta}, header))
    else:
        _emit(args, to_json({"params": _params_dict(params), **payload}) + "\n")


# -- commands -------------------------------------------------------------


def cmd_build_m(args) -> int:
    params = params_from_args(args)
    m = build_m_quadrature(params, order=args.quad_order, precision=args.precision)
    meta = {"route": m.route, "quadrature_order": m.quadrature_order,
            "asymmetry_defect": m.asymmetry_defect, "precision": m.precision}
    status = EXIT_OK
    if args.check:
        cf = build_m_closed_form(params, precision=args.precision)
        disc = residual_relative(cf, m)
        meta["closed_form_discrepancy"] = disc
        meta["check_passed"] = bool(disc <= ORACLE_TOL)
        status = EXIT_OK if disc <= ORACLE_TOL else EXIT_CHECK
    _emit_matrix(args, params, m.values, meta)
    return status


def cmd_build_l(args) -> int:
    params = params_from_args(args)
    l = BUILDERS[args.l](params, precision=args.precision)
    _emit_matrix(args, params, l.toarray(),
                 {"route": f"closed_form_L{args.l}", "quadrature_order": None,
                  "asymmetry_defect": 0.0, "precision": l.precision})
    return EXIT_OK


def _known_members(params: Params):
    out = {}
    if not params.self_dual:
        out["L1"] = build_l1(params)
        out["L2"] = build_l2(params)
    out["L3"] = build_l3(params)
    out["Id"] = np.eye(params.size)
    return out


def cmd_commutant(args) -> int:
    params = params_from_args(args)
    cb = commutant_for(params, precision=args.precision, order=args.quad_order)
    members = {}
    if params.alpha != 0:
        members = {k: cb.projection_residual(v) for k, v in _known_members(params).items()}
    payload = {
        "dimension": cb.dimension,
        "unknowns": cb.unknowns,
        "threshold": cb.threshold,
        "rank_gap": cb.rank_gap,
        "conclusive": cb.conclusive,
        "structure_defect": cb.structure_defect,
        "singular_values": cb.singular_values,
        "projection_residuals": members,
        "basis": [b.tolist() for b in cb.basis],
    }
    rows = [[f"s{i}", v] for i, v in enumerate(cb.singular_values)]
    rows += [[f"residual_{k}", v] for k, v in members.items()]
    _emit_table(args, params, ["name", "value"], rows, payload)
    return EXIT_OK


def cmd_eigen(args) -> int:
    params = params_from_args(args)
    l = BUILDERS[args.l](params, precision=args.precision)
    spec = symmetric_eigen(l)
    payload = {
        "operator": f"L{args.l}",
        "eigenvalues": spec.eigenvalues,
        "min_gap": spec.min_gap,
        "residual": spec.residual,
        "simple": simplicity_check(spec).simple,
        "eigenvectors": np.asarray(spec.eigenvectors).tolist(),
    }
    if args.l == 1:
        m = build_m_quadrature(params, order=args.quad_order)
        cert = stable_m_eigenbasis(params, m=m, tol=CERTIFY_TOL)
        payload["m_rayleigh_quotients"] = cert.eigenvalues
        payload["certification_residual"] = cert.residual
    rows = [[f"lambda{i}", v] for i, v in enumerate(spec.eigenvalues)]
    _emit_table(args, params, ["name", "value"], rows, payload)
    return EXIT_OK


def run_checks(params: Params, precision="standard", order=None) -> list[dict]:
    """The invariant battery; each entry records name, value, tolerance, passed."""
    if params.alpha == 0:
        raise DegenerateParametersError("alpha = 0: the L operators divide by alpha")
    out = []

    def add(name, value, tol, passed=None, informational=False):
        ok = bool(value <= tol) if passed is None else bool(passed)
        out.append({"name": name, "value": value, "tolerance": tol,
                    "passed": ok, "informational": informational})

    m = build_m_quadrature(params, order=order, precision=precision)
    mf = m.as_float()
    members = _known_members(params)
    for name in ("L1", "L2", "L3"):
        if name in members:
            add(f"commutation_{name}", commutator_norm(mf, members[name]).relative,
                COMMUTATION_TOL)

    cb = commutant_for(params, precision=precision, order=order)
    add("commutant_dimension", float(cb.dimension), math.inf, passed=True, informational=True)
    add("commutant_rank_gap", cb.rank_gap, math.inf, passed=True, informational=True)
    for name, l in members.items():
        add(f"commutant_contains_{name}", cb.projection_residual(l), MEMBERSHIP_TOL)

    if "L1" in members:
        l1 = members["L1"]
        det_num = block_tridiagonal_det(l1.toarray())
        det_formula = l1_det_formula(l1)
        add("det_identity", abs(det_num - det_formula) / abs(det_formula), DET_TOL)
        cf = build_m_closed_form(params, precision=precision)
        add("closed_form_vs_quadrature", residual_relative(cf, m), ORACLE_TOL)
        try:
            cert = stable_m_eigenbasis(params, m=m, tol=CERTIFY_TOL)
            add("certification", cert.residual, CERTIFY_TOL)
        except CertificationError as exc:
            add("certification", exc.residual, CERTIFY_TOL)

    dual = build_m_quadrature(params.dual(), order=order, precision=precision)
    add("duality", residual_relative(duality_map(m), dual), DUALITY_TOL)
    return out


def cmd_check(args) -> int:
    params = params_from_args(args)
    checks = run_checks(params, precision=args.precision, order=args.quad_order)
    passed = all(c["passed"] for c in checks)
    failing = [c["name"] for c in checks if not c["passed"]]
    if args.format == "csv":
        rows = [[c["name"], c["value"], c["tolerance"],
                 "info" if c["informational"] else ("pass" if c["passed"] else "fail")]
                for c in checks]
        _emit(args, to_csv(rows, {"params": _params_dict(params), "passed": passed,
                                  "failing": failing},
                           ["name", "value", "tolerance", "status"]))
    else:
        _emit(args, to_json({"params": _params_dict(params), "passed": passed,
                             "failing": failing, "checks": checks}) + "\n")
    for name in failing:
        print(f"check failed: {name}", file=sys.stderr)
    return EXIT_OK if passed else EXIT_CHECK


def reproduce_report() -> dict:
    """Numbers for the reference experiment (n, p, N, alpha) = (27, 15, 2, 9/10)."""
    params = REFERENCE_PARAMS
    t0 = time.perf_counter()
    l1_ref = build_l1(params, unit_diagonal=REFERENCE_UNIT_DIAGONAL)
    l1_eigs = np.asarray(symmetric_eigen(l1_ref).eigenvalues, dtype=float)
    reference = np.sort(np.array(REFERENCE_L1_EIGENVALUES))
    l1_raw = symmetric_eigen(build_l1(params))

    m = build_m_quadrature(params)
    comp = build_m_complement(params)
    one_minus = np.linalg.eigvalsh(comp.as_float())
    m_eigs = 1.0 - one_minus[::-1]
    cert = stable_m_eigenbasis(params, m=m, tol=CERTIFY_TOL)
    elapsed = time.perf_counter() - t0
    return {
        "params": params,
        "l1_eigenvalues": l1_eigs,
        "l1_reference": reference,
        "l1_max_error": float(np.max(np.abs(l1_eigs - reference))),
        "l1_unnormalized_eigenvalues": np.asarray(l1_raw.eigenvalues, dtype=float),
        "m_eigenvalues": m_eigs,
        "m_one_minus_eigenvalues": one_minus[::-1],
        "m_min_gap": float(np.min(np.diff(np.sort(one_minus)))),
        "l1_min_gap": float(np.min(np.diff(l1_eigs))),
        "certification_residuals": np.linalg.norm(
            m.as_float() @ cert.eigenvectors - cert.eigenvectors * cert.eigenvalues[None, :],
            axis=0),
        "seconds": elapsed,
    }


def format_reproduce(rep: dict) -> str:
    lines = ["Reference experiment: n = 27, p = 15, N = 2, alpha = 9/10", ""]
    lines.append("L1 eigenvalues (normalized so that l_44 = 1)")
    lines.append(f"  {'computed':>12}  {'reference':>10}  {'|diff|':>9}")
    for c, p in zip(rep["l1_eigenvalues"], rep["l1_reference"]):
        lines.append(f"  {c:12.5f}  {p:10.5f}  {abs(c - p):9.2e}")
    lines.append(f"  max |diff| = {rep['l1_max_error']:.2e} (tolerance 5e-4)")
    lines.append("  with l_22 = 1 instead: "
                 + ", ".join(f"{v:.5f}" for v in rep["l1_unnormalized_eigenvalues"]))
    lines.append("")
    lines.append("M eigenvalues")
    lines.append(f"  {'1 decimal':>9}  {'1 - lambda':>12}")
    for lam, om in zip(rep["m_eigenvalues"], rep["m_one_minus_eigenvalues"]):
        lines.append(f"  {lam:9.1f}  {om:12.5e}")
    lines.append("")
    lines.append("Minimum eigenvalue gap")
    lines.append(f"  M  : {rep['m_min_gap']:.3e}")
    lines.append(f"  L1 : {rep['l1_min_gap']:.5f}")
    lines.append("")
    lines.append("Certification ||M v - (v^T M v) v|| for the L1 eigenvectors")
    for k, r in enumerate(rep["certification_residuals"]):
        lines.append(f"  v{k}: {r:.3e}" + ("" if r <= CERTIFY_TOL else "  FAIL"))
    lines.append("")
    lines.append(f"elapsed {rep['seconds']:.3f} s")
    return "\n".join(lines) + "\n"


def cmd_reproduce(args) -> int:
    rep = reproduce_report()
    sys.stdout.write(format_reproduce(rep))
    if args.out:
        payload = {k: v for k, v in rep.items() if k not in ("params", "seconds")}
        if args.format == "csv":
            rows = [[f"l1_{i}", v] for i, v in enumerate(rep["l1_eigenvalues"])]
            rows += [[f"m_one_minus_{i}", v] for i, v in enumerate(rep["m_one_minus_eigenvalues"])]
            rows += [[f"certification_{i}", v]
                     for i, v in enumerate(rep["certification_residuals"])]
            text = to_csv(rows, {"params": _params_dict(rep["params"])}, ["name", "value"])
        else:
            text = to_json({"params": _params_dict(rep["params"]), **payload}) + "\n"
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return EXIT_OK


COMMANDS = {
    "build-m": cmd_build_m,
    "build-l": cmd_build_l,
    "commutant": cmd_commutant,
    "eigen": cmd_eigen,
    "check": cmd_check,
    "reproduce": cmd_reproduce,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mvtbl", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=list(COMMANDS))
    ap.add_argument("--n", type=parse_number)
    ap.add_argument("--p", type=parse_number)
    ap.add_argument("--N", type=int)
    ap.add_argument("--alpha", type=parse_number, default=Fraction(9, 10))
    ap.add_argument("--l", type=int, choices=(1, 2, 3), default=1)
    ap.add_argument("--precision", choices=("standard", "extended"), default="standard")
    ap.add_argument("--quad-order", type=_positive_int, default=None)
    ap.add_argument("--format", choices=("json", "csv"), default="json")
    ap.add_argument("--out", default=None)
    ap.add_argument("--check", action="store_true",
                    help="build-m: also assemble the closed form and compare")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_PARAMS
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except (InvalidParametersError, DegenerateParametersError) as exc:
        print(f"bad parameters: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except ConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except CertificationError as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
