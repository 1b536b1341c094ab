"""Command-line front end: ``trpgates <subcommand> ...``.

Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 degenerate
simplex, 5 reproduction calibration failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    DegenerateSimplexError,
    IntegrationError,
    NonUnitaryError,
    SweepDomainError,
    UnsupportedTwistOrder,
)
from .experiments import (
    ScanError,
    ScanSpec,
    reproduce_all,
    row_dict,
    run_scan,
    summary_lines,
    write_scan_csv,
)
from .gates import GateName, gate_name, matrix_to_json, target_unitary
from .metrics import DEFAULT_SAMPLES, DEFAULT_SEED, error_report
from .optimizer import SimplexConfig, append_ledger, default_ledger_path, minimize
from .propagator import ATOL, CONVENTIONS, RTOL, assemble_unitary, propagate_amplitudes
from .sweep import (
    DEFAULT_N,
    DEFAULT_TAU0,
    LabSweepParams,
    SweepParams,
    from_lab,
    phase_programs,
    resonance_times,
    to_lab,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_DEGENERATE = 4
EXIT_CALIBRATION = 5


class UsageError(Exception):
    pass


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def _format_block(m: np.ndarray) -> list[str]:
    return ["  [" + "  ".join(f"{x: .6f}" for x in row) + " ]" for row in m]


def _matrix_text(u: np.ndarray) -> str:
    lines = ["Re(U_a) ="] + _format_block(u.real) + ["Im(U_a) ="] + _format_block(u.imag)
    return "\n".join(lines)


def _sweep_from_args(args) -> SweepParams:
    return SweepParams(lam=args.lam, eta_n=args.eta4, n=args.n, tau0=args.tau0)


def _add_sweep_flags(p, need_lambda=True):
    p.add_argument("--lambda", dest="lam", type=float, required=need_lambda,
                   default=None if need_lambda else 1.0, help="adiabaticity parameter lambda")
    p.add_argument("--eta4", "--eta", dest="eta4", type=float, required=True,
                   help="twist strength eta_n")
    p.add_argument("--n", type=int, default=DEFAULT_N, help="twist order (default 4)")
    p.add_argument("--tau0", type=float, default=DEFAULT_TAU0,
                   help=f"sweep duration; window is [-tau0/2, tau0/2] (default {DEFAULT_TAU0:g})")


def _add_tolerances(p):
    p.add_argument("--rtol", type=float, default=RTOL)
    p.add_argument("--atol", type=float, default=ATOL)


def cmd_simulate(args) -> int:
    sweep = _sweep_from_args(args)
    target = gate_name(args.target)
    u_a = assemble_unitary(sweep, convention=args.convention, rtol=args.rtol, atol=args.atol)
    u_t = target_unitary(target)
    report = error_report(u_a, u_t, samples=args.samples, seed=args.seed)
    traj = propagate_amplitudes(sweep, rtol=args.rtol, atol=args.atol, record=args.trace is not None)
    if args.trace is not None:
        traj.to_csv(args.trace)
    payload = {
        "sweep": sweep.to_dict(),
        "target": target.value,
        "convention": args.convention,
        "u_a": matrix_to_json(u_a),
        "report": report.to_dict(),
        "trace_summary": {
            "transition_probability": traj.transition_probability,
            "max_norm_drift": traj.max_norm_drift,
            "steps": traj.steps,
        },
    }
    text = "\n".join([
        f"sweep: lambda={sweep.lam:g} eta{sweep.n}={sweep.eta_n:g} n={sweep.n} tau0={sweep.tau0:g}",
        _matrix_text(u_a),
        f"target:   {target.value}",
        f"Tr P:     {report.tr_p:.6e}",
        f"d*:       {report.d_star:.6e}",
        f"fidelity: {report.fidelity:.9f}",
        f"max sampled P_e ({report.samples} states, seed {report.seed}): {report.sampled_pe_max:.6e}",
        f"transition probability (start in lower level): {traj.transition_probability:.6f}",
    ])
    _emit(args, payload, text)
    return EXIT_OK


def cmd_optimize(args) -> int:
    path = Path(args.simplex)
    if not path.is_file():
        raise UsageError(f"simplex config file not found: {path}")
    try:
        config = SimplexConfig.from_json(path)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot parse simplex config {path}: {exc}") from exc
    overrides = {}
    if args.max_iter is not None:
        overrides["max_iterations"] = args.max_iter
    if args.max_evals is not None:
        overrides["max_evaluations"] = args.max_evals
    if args.restarts is not None:
        overrides["restarts"] = args.restarts
    if overrides:
        d = config.to_dict()
        d.update(overrides)
        config = SimplexConfig.from_dict(d)
    result = minimize(config, args.target, threads=args.threads)
    ledger = append_ledger(result, config, args.target,
                           args.ledger if args.ledger is not None else default_ledger_path())
    payload = result.to_dict()
    payload["ledger"] = str(ledger)
    b = result.best_params
    text = "\n".join([
        f"target:      {gate_name(args.target).value}",
        f"best lambda: {b.lam!r}",
        f"best eta{b.n}:   {b.eta_n!r}",
        f"best Tr P:   {result.best_tr_p:.6e}",
        f"evaluations: {result.evaluations}  iterations: {result.iterations}",
        f"stopped:     {result.reason} (converged={result.converged})",
        f"ledger:      {ledger}",
    ])
    _emit(args, payload, text)
    return EXIT_OK


def cmd_scan(args) -> int:
    sweep = _sweep_from_args(args)
    if args.values:
        values = args.values
    else:
        if args.steps < 1 or args.step <= 0:
            raise UsageError("--steps must be >= 1 and --step positive")
        base = sweep.lam if args.vary == "lambda" else sweep.eta_n
        values = [base + k * args.step for k in range(-args.steps, args.steps + 1)]
    spec = ScanSpec(args.target, sweep, args.vary, tuple(values))
    rows = run_scan(spec, threads=args.threads, rtol=args.rtol, atol=args.atol)
    if args.out is not None:
        write_scan_csv(rows, args.out)
    payload = {"target": spec.target.value, "vary": spec.vary, "rows": [row_dict(r) for r in rows]}
    lines = [f"{'lambda':>12s} {'eta4':>14s} {'tr_p':>12s} {'d_star':>12s} {'fidelity':>12s}"]
    for r in rows:
        lines.append(f"{r.lam:12.6f} {r.eta4:14.6e} {r.tr_p:12.4e} {r.d_star:12.4e} {r.fidelity:12.9f}")
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


def cmd_resonances(args) -> int:
    sweep = _sweep_from_args(args)
    res = resonance_times(sweep)
    inside = res.inside(sweep)
    lo, hi = sweep.window
    payload = {
        "regime": res.regime.value,
        "window": [lo, hi],
        "resonances": [{"tau": t, "inside_window": ok} for t, ok in zip(res.times, inside)],
    }
    lines = [f"regime: {res.regime.value}   window: [{lo:g}, {hi:g}]"]
    for t, ok in zip(res.times, inside):
        lines.append(f"  tau = {t: .6f}  {'inside' if ok else 'OUTSIDE window'}")
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


def cmd_translate(args) -> int:
    if args.A is not None:
        if args.lam is not None or args.eta4 is not None:
            raise UsageError("give either --lambda/--eta4 or --A/--calB, not both")
        if args.calB is None or args.T0 is None:
            raise UsageError("--A needs --calB and --T0")
        lab = LabSweepParams(omega1=args.omega1, A=args.A, calB=args.calB, T0=args.T0,
                             omega0=args.omega0)
        sweep = from_lab(lab)
    else:
        if args.lam is None or args.eta4 is None:
            raise UsageError("give --lambda and --eta4 (or --A, --calB, --T0)")
        sweep = SweepParams(lam=args.lam, eta_n=args.eta4, n=4, tau0=args.tau0)
        lab = to_lab(sweep, args.omega1, T0=args.T0, omega0=args.omega0)
    if args.phase_csv is not None:
        phase_programs(lab, samples=args.samples).to_csv(args.phase_csv)
    payload = {"dimensionless": sweep.to_dict(), "lab": lab.to_dict()}
    text = "\n".join([
        f"lambda = {sweep.lam!r}   eta4 = {sweep.eta_n!r}   tau0 = {sweep.tau0!r}",
        f"omega1 = {lab.omega1!r}   A = {lab.A!r}   calB = {lab.calB!r}",
        f"T0 = {lab.T0!r}   omega0 = {lab.omega0!r}",
    ])
    _emit(args, payload, text)
    return EXIT_OK


def cmd_targets(args) -> int:
    names = [gate_name(args.gate)] if args.gate else list(GateName)
    payload = {g.value: matrix_to_json(target_unitary(g)) for g in names}
    lines = []
    for g in names:
        u = target_unitary(g)
        lines.append(f"{g.value}{' (composite)' if g.composite else ''}")
        lines += _matrix_text(u).replace("U_a", "U").splitlines()
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


def cmd_reproduce(args) -> int:
    report = reproduce_all(args.out, threads=args.threads)
    payload = {k: report[k] for k in ("calibration_passed", "property_passed")}
    payload["out"] = str(args.out)
    text = "\n".join(summary_lines(report) + [
        f"calibration: {'PASS' if report['calibration_passed'] else 'FAIL'}",
        f"properties:  {'PASS' if report['property_passed'] else 'FAIL'}",
        f"bundle written to {args.out}",
    ])
    _emit(args, payload, text)
    if not report["property_passed"]:
        return EXIT_NUMERICAL
    if not report["calibration_passed"]:
        return EXIT_CALIBRATION
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable JSON on stdout")
    common.add_argument("--threads", type=int, default=1,
                        help="cap on concurrent objective evaluations")

    parser = argparse.ArgumentParser(
        prog="trpgates",
        description="Single-qubit gates from twisted rapid passage sweeps.",
    )
    parser.add_argument("--version", action="version", version=f"trpgates {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="propagate one sweep and score it")
    _add_sweep_flags(p)
    p.add_argument("--target", default=GateName.HADAMARD.value,
                   choices=[g.value for g in GateName])
    p.add_argument("--trace", type=Path, default=None, help="write eigenbasis trajectory CSV")
    p.add_argument("--convention", choices=CONVENTIONS, default="eigenbasis")
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES,
                   help="Haar-random states for the sampled error probability")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _add_tolerances(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", parents=[common], help="Nelder-Mead search for a gate")
    p.add_argument("--target", required=True, choices=[g.value for g in GateName])
    p.add_argument("--simplex", required=True, help="JSON simplex config file")
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--max-evals", type=int, default=None)
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--ledger", type=Path, default=None,
                   help="JSON Lines results ledger (default: $TRPGATES_LEDGER or trp_results.jsonl)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("scan", parents=[common], help="vary lambda or eta4 about a sweep")
    _add_sweep_flags(p)
    p.add_argument("--target", required=True, choices=[g.value for g in GateName])
    p.add_argument("--vary", required=True, choices=("lambda", "eta4"))
    grid = p.add_mutually_exclusive_group()
    grid.add_argument("--values", type=float, nargs="+", help="explicit scan values")
    grid.add_argument("--step", type=float, default=None,
                      help="uniform step about the fixed point (with --steps)")
    p.add_argument("--steps", type=int, default=1, help="points on each side when using --step")
    p.add_argument("--out", type=Path, default=None, help="CSV output path")
    _add_tolerances(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("resonances", parents=[common], help="resonance times of a sweep")
    _add_sweep_flags(p, need_lambda=False)
    p.set_defaults(func=cmd_resonances)

    p = sub.add_parser("translate", parents=[common],
                       help="convert between dimensionless and laboratory parameters")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--eta4", type=float, default=None)
    p.add_argument("--tau0", type=float, default=DEFAULT_TAU0)
    p.add_argument("--omega1", type=float, required=True)
    p.add_argument("--A", type=float, default=None)
    p.add_argument("--calB", type=float, default=None)
    p.add_argument("--T0", type=float, default=None)
    p.add_argument("--omega0", type=float, default=0.0)
    p.add_argument("--phase-csv", type=Path, default=None, help="write phase programs CSV")
    p.add_argument("--samples", type=int, default=1001)
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("targets", parents=[common], help="print target gate matrices")
    p.add_argument("--gate", choices=[g.value for g in GateName], default=None)
    p.set_defaults(func=cmd_targets)

    p = sub.add_parser("reproduce", parents=[common], help="rerun every published comparison")
    p.add_argument("--out", type=Path, default=Path("trp_reproduction"))
    p.set_defaults(func=cmd_reproduce)
    return parser


def _join_negative_values(argv: list[str]) -> list[str]:
    """Rewrite ``--opt -1e-4`` as ``--opt=-1e-4``.

    argparse only recognises plain negative decimals as values, so negative
    numbers in scientific notation would otherwise be read as flags.
    """
    out: list[str] = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and tok.startswith("-"):
            try:
                float(tok)
            except ValueError:
                pass
            else:
                out[-1] = f"{out[-1]}={tok}"
                continue
        out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(_join_negative_values(argv))
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help/--version
        return int(exc.code or 0)
    if getattr(args, "threads", 1) < 1:
        print("trpgates: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"trpgates: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateSimplexError as exc:
        print(f"trpgates: degenerate simplex: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (IntegrationError, ScanError, NonUnitaryError, FloatingPointError) as exc:
        print(f"trpgates: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, SweepDomainError, UnsupportedTwistOrder) as exc:
        print(f"trpgates: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
