"""Command-line interface.

Every subcommand prints a single JSON report to stdout: keys are sorted,
floats use their shortest round-trip representation, and nothing
time-dependent is included, so identical invocations produce identical
bytes. --output writes the same report to a file; --format csv instead
writes the iteration history as CSV (solve, solve-g and sweep only).

Exit codes: 0 success, 2 invalid parameters (including a degenerate
combined functional), 3 solver finished without converging, 4 internal
verification or calibration failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .forms import algebra_property_suite, standard_metric
from .invariants import (
    CalibrationError,
    calibration_info,
    gauss_bonnet,
    gauss_bonnet_kronecker,
    invariant_constants,
    ricci_2k,
    space_form_curvature,
    space_form_invariant,
)
from .linearization import (
    LinearFunctional,
    NondegeneracyViolated,
    constants as linearization_constants,
    fd_verify,
    max_order,
)
from .newton import (
    SolverConfig,
    continuation_sweep,
    fixed_point_certificate,
    generalized_solve,
    newton_solve,
    quadratic_tail,
    sphere_kernel_demo,
)
from .spaceform import (
    FULL_SPHERE,
    REAL_PROJECTIVE,
    SYNTHETIC_HYPERBOLIC,
    field_from_modes,
    mode_field,
    space_form,
    spectrum_gap_check,
    zonal_basis,
)

__all__ = ["main"]

_QUOTIENTS = {"rp": REAL_PROJECTIVE, "sphere": FULL_SPHERE, "hyperbolic": SYNTHETIC_HYPERBOLIC}
_CSV_COMMANDS = ("solve", "solve-g", "sweep")


def _jsonify(obj):
    """Recursively convert numpy scalars/arrays so json.dumps accepts them."""
    if isinstance(obj, dict):
        return {str(key): _jsonify(val) for key, val in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(val) for val in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(val) for val in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _field_payload(field) -> dict:
    return {
        "modes": field.modes.tolist(),
        "parity": field.parity,
        "max_mode": field.basis.max_mode,
        "nodes": int(field.basis.x.size),
    }


def _parse_floats(text: str) -> list[float]:
    items = [piece.strip() for piece in text.split(",") if piece.strip()]
    if not items:
        raise ValueError(f"no values in {text!r}")
    return [float(piece) for piece in items]


def _parse_ints(text: str) -> list[int]:
    return [int(round(v)) for v in _parse_floats(text)]


def _parse_mode_coeffs(text: str) -> dict[int, float]:
    out: dict[int, float] = {}
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        if ":" not in piece:
            raise ValueError(f"profile entry {piece!r} is not of the form mode:value")
        ell, val = piece.split(":", 1)
        out[int(ell)] = float(val)
    if not out:
        raise ValueError(f"no profile entries in {text!r}")
    return out


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        mode_cutoff=args.mode_cutoff,
        max_iterations=args.max_iterations,
        tol_residual=args.tol_residual,
        tol_volume=args.tol_volume,
        fd_jacobian_step=args.fd_step,
        damping=args.damping,
        nnodes=args.nnodes,
    )


def _profile_field(args, basis):
    """The perturbation profile: either a single mode or explicit modes."""
    if getattr(args, "coeffs", None):
        entries = _parse_mode_coeffs(args.coeffs)
        modes = np.zeros(basis.max_mode + 1)
        for ell, val in entries.items():
            if not 0 <= ell <= basis.max_mode:
                raise ValueError(f"profile mode {ell} outside 0..{basis.max_mode}")
            modes[ell] = val
        parity = "even" if all(ell % 2 == 0 for ell in entries) else "any"
        return field_from_modes(basis, modes, parity=parity)
    return mode_field(basis, args.mode, args.amp)


def _iteration_rows(report, amplitude=None):
    rows = []
    for i, rec in enumerate(report.iterations):
        row = [i, rec.residual, rec.volume_drift, rec.step_norm]
        if amplitude is not None:
            row = [amplitude] + row
        rows.append(row)
    return rows


def _report_results(report) -> dict:
    return {
        "status": report.status,
        "steps": report.steps,
        "achieved_constant": report.achieved_constant,
        "final_residual": report.final_residual,
        "final_volume_drift": report.final_volume_drift,
        "jacobian_min_singular_value": report.jacobian_min_singular_value,
        "quadratic_tail": quadratic_tail(report),
        "iterations": [
            {
                "iteration": i,
                "residual": rec.residual,
                "volume_drift": rec.volume_drift,
                "step_norm": rec.step_norm,
                "damping": rec.damping,
            }
            for i, rec in enumerate(report.iterations)
        ],
        "w": _field_payload(report.w),
    }


def _certificate_results(cert) -> dict:
    return {
        "variation": cert.variation,
        "sup_deviation": cert.sup_deviation,
        "volume_drift": cert.volume_drift,
        "threshold": cert.threshold,
        "max_mode": cert.max_mode,
        "nnodes": cert.nnodes,
        "passed": cert.passed,
    }


# ---------------------------------------------------------------------------
# Subcommand handlers: each returns (results, csv_rows, exit_code)
# ---------------------------------------------------------------------------


def _cmd_invariants(args, calibration):
    g = standard_metric(args.n)
    R = space_form_curvature(args.n, args.mu)
    measured = gauss_bonnet(R, g, args.k)
    closed = space_form_invariant(args.n, args.k, args.mu)
    consts = invariant_constants(args.n, args.k)
    ricci = ricci_2k(R, g, args.k)
    ricci_factor = float(np.trace(ricci.coeffs)) / args.n
    ricci_closed = consts.ricci_coefficient * args.mu**args.k
    results = {
        "gauss_bonnet": measured,
        "closed_form": closed,
        "difference": measured - closed,
        "ricci_factor": ricci_factor,
        "ricci_closed_form": ricci_closed,
        "base_coefficient": consts.base_coefficient,
        "ricci_coefficient": consts.ricci_coefficient,
    }
    if 2 * args.k < args.n:
        lin = linearization_constants(args.n, args.k, args.mu)
        results["tensor_coefficient"] = lin.tensor_coefficient
        results["conformal_coefficient"] = lin.conformal_coefficient
    scale = max(1.0, abs(closed))
    ok = abs(measured - closed) <= args.tol * scale and abs(ricci_factor - ricci_closed) <= args.tol * max(
        1.0, abs(ricci_closed)
    )
    if args.calibrate:
        info = calibration_info(args.n, args.k, samples=args.calibrate_samples, seed=args.seed)
        calibration[f"{args.n},{args.k}"] = {
            "constant": info.constant,
            "relative_spread": info.relative_spread,
            "samples": info.samples,
        }
        kron = gauss_bonnet_kronecker(R, args.k, info.constant)
        results["kronecker"] = kron
        results["kronecker_difference"] = kron - closed
        ok = ok and abs(kron - closed) <= args.tol * scale
    results["routes_agree"] = ok
    return results, None, 0 if ok else 4


def _cmd_verify_algebra(args, calibration):
    dims = tuple(_parse_ints(args.dims))
    suite = algebra_property_suite(cases=args.cases, seed=args.seed, dims=dims, tol=args.tol)
    ok = all(entry["passed"] for entry in suite.values())
    results = {"properties": suite, "all_passed": ok}
    return results, None, 0 if ok else 4


def _cmd_verify_linearization(args, calibration):
    if args.mu > 0:
        sf = space_form(args.n, args.mu, FULL_SPHERE)
    else:
        sf = space_form(args.n, args.mu, SYNTHETIC_HYPERBOLIC, lambda1=1.0)
    basis = zonal_basis(args.n, max(args.max_mode, args.mode))
    f = mode_field(basis, args.mode, args.amp)
    _, _, fine = fd_verify(sf, f, args.k, eps=args.eps)
    _, _, coarse = fd_verify(sf, f, args.k, eps=10.0 * args.eps)
    ratio = coarse / fine if fine > 0 else float("inf")
    ok = fine <= args.max_relerr and 50.0 <= ratio <= 200.0
    results = {
        "relative_error": fine,
        "relative_error_coarse": coarse,
        "step_ratio_window": [50.0, 200.0],
        "step_ratio": ratio,
        "max_relative_error": args.max_relerr,
        "passed": ok,
    }
    return results, None, 0 if ok else 4


def _cmd_spectrum(args, calibration):
    sf = space_form(args.n, args.mu, _QUOTIENTS[args.quotient], lambda1=args.lambda1)
    lam1, critical, ok = spectrum_gap_check(sf)
    results = {"lambda1": lam1, "critical_level": critical, "gap_clears": ok}
    return results, None, 0


def _cmd_calibrate(args, calibration):
    info = calibration_info(args.n, args.k, samples=args.samples, seed=args.seed)
    calibration[f"{args.n},{args.k}"] = {
        "constant": info.constant,
        "relative_spread": info.relative_spread,
        "samples": info.samples,
    }
    results = {
        "constant": info.constant,
        "relative_spread": info.relative_spread,
        "samples": info.samples,
    }
    return results, None, 0


def _finish_solve(args, sf, psi, report, weights):
    results = _report_results(report)
    results["psi"] = _field_payload(psi)
    code = 0 if report.status == "converged" else 3
    if args.certify and report.status == "converged":
        cert = fixed_point_certificate(sf, psi, report, weights=weights, threshold=args.certificate_threshold)
        results["certificate"] = _certificate_results(cert)
        if not cert.passed:
            code = 4
    rows = _iteration_rows(report)
    return results, [["iteration", "residual", "volume_drift", "step_norm"]] + rows, code


def _cmd_solve(args, calibration):
    sf = space_form(args.n, args.mu, _QUOTIENTS[args.quotient])
    cfg = _solver_config(args)
    basis = zonal_basis(args.n, cfg.mode_cutoff, cfg.nnodes)
    psi = _profile_field(args, basis)
    report = newton_solve(sf, psi, args.k, cfg)
    return _finish_solve(args, sf, psi, report, {args.k: 1.0})


def _cmd_solve_g(args, calibration):
    functional = LinearFunctional(tuple(_parse_floats(args.g_coeffs)))
    sf = space_form(args.n, args.mu, _QUOTIENTS[args.quotient])
    cfg = _solver_config(args)
    basis = zonal_basis(args.n, cfg.mode_cutoff, cfg.nnodes)
    psi = _profile_field(args, basis)
    report = generalized_solve(sf, psi, functional, cfg)
    weights = {k: c for k, c in zip(functional.orders, functional.coefficients) if c != 0.0}
    results, rows, code = _finish_solve(args, sf, psi, report, weights)
    results["functional"] = list(functional.coefficients)
    return results, rows, code


def _cmd_kernel_demo(args, calibration):
    cfg = SolverConfig(
        mode_cutoff=args.mode_cutoff,
        fd_jacobian_step=args.fd_step,
        nnodes=args.nnodes,
    )
    even_sv, full_sv = sphere_kernel_demo(args.n, args.mu, args.k, cfg)
    results = {
        "even_min_singular_value": even_sv,
        "full_min_singular_value": full_sv,
        "collapse_ratio": full_sv / even_sv if even_sv > 0 else float("inf"),
    }
    return results, None, 0


def _cmd_sweep(args, calibration):
    amplitudes = _parse_floats(args.amplitudes)
    sf = space_form(args.n, args.mu, _QUOTIENTS[args.quotient])
    cfg = _solver_config(args)
    basis = zonal_basis(args.n, cfg.mode_cutoff, cfg.nnodes)
    direction = mode_field(basis, args.mode, 1.0)
    runs = continuation_sweep(sf, direction, amplitudes, args.k, cfg)
    entries = []
    rows = [["amplitude", "iteration", "residual", "volume_drift", "step_norm"]]
    for amp, report in runs:
        entries.append(
            {
                "amplitude": amp,
                "status": report.status,
                "steps": report.steps,
                "achieved_constant": report.achieved_constant,
                "final_residual": report.final_residual,
                "final_volume_drift": report.final_volume_drift,
            }
        )
        rows.extend(_iteration_rows(report, amplitude=amp))
    results = {"runs": entries, "all_converged": all(e["status"] == "converged" for e in entries)}
    return results, rows, 0


# ---------------------------------------------------------------------------
# Parser construction and entry point
# ---------------------------------------------------------------------------


def _add_output_flags(sub):
    sub.add_argument("--output", help="also write the report to this path")
    sub.add_argument(
        "--format",
        choices=("json", "csv"),
        default="json",
        help="format of --output (csv holds the iteration history; solve/solve-g/sweep only)",
    )


def _add_solver_flags(sub):
    sub.add_argument("--mode-cutoff", type=int, default=16, help="highest retained correction mode")
    sub.add_argument("--max-iterations", type=int, default=30)
    sub.add_argument("--tol-residual", type=float, default=1e-10)
    sub.add_argument("--tol-volume", type=float, default=1e-10)
    sub.add_argument("--fd-step", type=float, default=1e-6, help="Jacobian finite-difference step")
    sub.add_argument("--damping", type=float, default=1.0, help="initial Newton step fraction")
    sub.add_argument("--nnodes", type=int, default=None, help="collocation nodes (default 2*cutoff+16)")


def _add_profile_flags(sub):
    sub.add_argument("--mode", type=int, default=2, help="perturbation profile: single mode index")
    sub.add_argument("--amp", type=float, default=0.05, help="sup amplitude of the single-mode profile")
    sub.add_argument("--coeffs", help="explicit profile modes, e.g. '2:0.05,4:-0.01' (overrides --mode/--amp)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gbyamabe",
        description="Gauss-Bonnet curvature invariants and constant-invariant conformal metrics on space forms",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("invariants", help="closed-form vs computed invariants of a model space form")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--calibrate", action="store_true", help="also run the Kronecker-delta route (n <= 7)")
    p.add_argument("--calibrate-samples", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_invariants)

    p = subs.add_parser("verify-algebra", help="randomized double-form algebra property suite")
    p.add_argument("--cases", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--dims", default="3,4,5,6", help="comma-separated dimensions to sample")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_verify_algebra)

    p = subs.add_parser("verify-linearization", help="finite-difference check of the closed-form linearization")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--mode", type=int, default=2)
    p.add_argument("--amp", type=float, default=0.05)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--max-mode", type=int, default=12, help="basis cutoff (raised to --mode if smaller)")
    p.add_argument("--max-relerr", type=float, default=1e-6)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_verify_linearization)

    p = subs.add_parser("spectrum", help="first nonzero Laplace eigenvalue vs the critical level")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--quotient", choices=tuple(_QUOTIENTS), default="rp")
    p.add_argument("--lambda1", type=float, default=None, help="declared gap (hyperbolic quotient only)")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_spectrum)

    p = subs.add_parser("calibrate", help="measure the Kronecker-delta proportionality constant")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--samples", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_calibrate)

    p = subs.add_parser("solve", help="Newton solve for a constant order-2k invariant")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--quotient", choices=("rp", "sphere"), default="rp")
    p.add_argument("--k", type=int, default=2)
    _add_profile_flags(p)
    _add_solver_flags(p)
    p.add_argument("--certify", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--certificate-threshold", type=float, default=1e-9)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_solve)

    p = subs.add_parser("solve-g", help="Newton solve for a combined functional of several orders")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--quotient", choices=("rp", "sphere"), default="rp")
    p.add_argument("--g-coeffs", required=True, help="functional coefficients by order, e.g. '1,0.1'")
    _add_profile_flags(p)
    _add_solver_flags(p)
    p.add_argument("--certify", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--certificate-threshold", type=float, default=1e-9)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_solve_g)

    p = subs.add_parser("kernel-demo", help="full-sphere Jacobian kernel vs the even sector")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--mode-cutoff", type=int, default=16)
    p.add_argument("--fd-step", type=float, default=1e-6)
    p.add_argument("--nnodes", type=int, default=None)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_kernel_demo)

    p = subs.add_parser("sweep", help="warm-started continuation in the profile amplitude")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--quotient", choices=("rp", "sphere"), default="rp")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--mode", type=int, default=2, help="profile direction: single mode index")
    p.add_argument("--amplitudes", default="0.0,0.02,0.04,0.06,0.08,0.1")
    _add_solver_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_sweep)

    return parser


def _write_report(args, report: dict, csv_rows) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    sys.stdout.write(text)
    if not args.output:
        return
    if args.format == "csv":
        with open(args.output, "w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerows(csv_rows)
    else:
        with open(args.output, "w") as handle:
            handle.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    inputs = {
        key: val
        for key, val in vars(args).items()
        if key not in ("func", "command", "output", "format") and val is not None
    }
    calibration: dict = {}
    base = {"schema": 1, "command": args.command, "inputs": _jsonify(inputs)}
    try:
        if args.format == "csv" and not args.output:
            raise ValueError("--format csv needs --output")
        results, csv_rows, code = args.func(args, calibration)
        if args.format == "csv" and csv_rows is None:
            raise ValueError(f"csv output is only available for: {', '.join(_CSV_COMMANDS)}")
    except CalibrationError as exc:
        report = dict(base, calibration=calibration, error={"type": type(exc).__name__, "message": str(exc)})
        sys.stdout.write(json.dumps(_jsonify(report), sort_keys=True, indent=2) + "\n")
        return 4
    except ValueError as exc:
        # NondegeneracyViolated lands here too; both are parameter problems
        report = dict(base, calibration=calibration, error={"type": type(exc).__name__, "message": str(exc)})
        sys.stdout.write(json.dumps(_jsonify(report), sort_keys=True, indent=2) + "\n")
        return 2
    report = dict(base, calibration=_jsonify(calibration), results=_jsonify(results))
    _write_report(args, report, csv_rows)
    return code


if __name__ == "__main__":
    sys.exit(main())
