"""Command-line front end.

Exit codes: 0 ok, 2 validation, 3 unsupported alphabet, 4 solver, 5 I/O.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import kernels
from .chain import ctmc_to_dtmc, validate, validate_generator
from .codebook import assign_codewords, check_alphabet, complete_code_array
from .errors import MarkovCodeError, NonErgodicError, ValidationError
from .io import policy_document, read_matrix, read_policy, report_document, write_json
from .mdp import SolveReport, as_model, long_run_average, policy_iteration
from .policies import PolicyKind, myopic_policy, solve_all, steady_state_policy
from .sim import CSV_HEADER, simulate

log = logging.getLogger("markovcode")

EXIT_IO = 5


def parse_grid(text: str) -> list[float]:
    """``"0,0.1,0.5"`` or ``"start:stop:step"`` (stop inclusive)."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ValueError
            k = int(np.floor((stop - start) / step + 1e-9))
            return [round(start + i * step, 10) for i in range(k + 1)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"cannot parse grid {text!r}") from None


def _unit_grid(values: list[float], name: str) -> list[float]:
    if not values or any(not 0.0 <= v <= 1.0 for v in values):
        raise ValidationError(f"{name} values must lie in [0, 1]")
    return values


def _open_out(path):
    if path in (None, "-"):
        return contextlib.nullcontext(sys.stdout)
    return open(path, "w", newline="")


def _write_csv(path, columns, rows) -> None:
    with _open_out(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([ex.fmt(r.get(c, "")) for c in columns])


def _print_etas(reports: dict) -> None:
    for kind in ex.KINDS:
        rep = reports[kind]
        val = f"{rep.eta:.6g}" if isinstance(rep, SolveReport) else f"error ({rep})"
        print(f"{ex.COLUMN[kind]}\t{val}")


def _solve_and_report(P, args, extra=None) -> int:
    model = as_model(P)
    reports = solve_all(model, eps=args.eps, d_max=args.d_max)
    _print_etas(reports)
    if args.out:
        doc = report_document(reports, model.P.rows)
        if extra:
            doc.update(extra)
        write_json(args.out, doc)
    failed = [r for r in reports.values() if isinstance(r, Exception)]
    return failed[0].exit_code if failed else 0


def cmd_solve(args) -> int:
    raw = read_matrix(args.matrix)
    check_alphabet(raw.shape[0])
    return _solve_and_report(validate(raw), args)


def cmd_ctmc(args) -> int:
    Q = validate_generator(read_matrix(args.generator))
    check_alphabet(Q.n_states)
    P = ctmc_to_dtmc(Q, args.d)
    extra = {"d": args.d, "generator": Q.to_dict()}
    if args.check_semigroup:
        twice = ctmc_to_dtmc(Q, 2 * args.d).rows
        gap = float(np.abs(twice - P.rows @ P.rows).max())
        extra["semigroup_gap"] = gap
        print(f"semigroup_gap\t{gap:.3g}")
        if gap > 1e-8:
            log.error("exp(2Qd) and exp(Qd)^2 differ by %.3g", gap)
    if not P.ergodic:
        raise NonErgodicError(f"exp(Q d) with d={args.d} is not ergodic")
    return _solve_and_report(P, args, extra)


def cmd_enumerate(args) -> int:
    n = check_alphabet(args.n)
    codes = complete_code_array(n)
    print(len(codes))
    if args.full or args.words:
        for row in codes.tolist():
            line = "[" + ",".join(map(str, row)) + "]"
            if args.words:
                line += " " + " ".join(assign_codewords(row).words)
            print(line)
    return 0


def cmd_beta_sweep(args) -> int:
    n = check_alphabet(args.n)
    betas = _unit_grid(parse_grid(args.beta_grid) if args.beta_grid else ex.default_beta_grid(), "beta")
    R = read_matrix(args.matrix) if args.matrix else None
    sim_n = args.transmissions if args.simulate else 0
    rows = ex.beta_sweep(n, args.alpha, betas, R, simulate_transmissions=sim_n,
                         seed=args.seed, workers=args.workers)
    _write_csv(args.out, ex.sweep_columns(bool(sim_n)), rows)
    return 0


def _ensemble_rows(args):
    n = check_alphabet(args.n)
    if args.matrices < 1:
        raise ValidationError("--matrices must be >= 1")
    _unit_grid([args.beta], "beta")
    return ex.ensemble(n, args.matrices, args.seed, beta=args.beta, alpha=args.alpha, workers=args.workers)


def summary_path(out) -> Path | None:
    if out in (None, "-"):
        return None
    p = Path(out)
    return p.with_name(p.stem + "_summary" + (p.suffix or ".csv"))


def cmd_ensemble(args) -> int:
    rows = _ensemble_rows(args)
    _write_csv(args.out, ex.ENSEMBLE_COLUMNS, rows)
    summary = ex.summarize(rows)
    stream = sys.stderr if args.out in (None, "-") else sys.stdout
    for key, val in summary.as_rows():
        print(f"{key}\t{val}", file=stream)
    target = summary_path(args.out)
    if target is not None:
        with open(target, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["statistic", "value"])
            w.writerows(summary.as_rows())
    return 0


def cmd_gain_cdf(args) -> int:
    rows = _ensemble_rows(args)
    taus = parse_grid(args.tau_grid) if args.tau_grid else ex.default_tau_grid()
    _write_csv(args.out, ex.GAIN_COLUMNS, ex.gain_tail(rows, taus))
    return 0


def cmd_simulate(args) -> int:
    raw = read_matrix(args.matrix)
    check_alphabet(raw.shape[0])
    model = as_model(validate(raw))
    if args.policy_file:
        policy, kind = read_policy(args.policy_file), "file"
    elif args.policy == PolicyKind.MYOPIC.value:
        policy, kind = myopic_policy(model), args.policy
    elif args.policy == PolicyKind.STEADY_STATE.value:
        policy, kind = steady_state_policy(model), args.policy
    else:
        policy, kind = policy_iteration(model, eps=args.eps, d_max=args.d_max).policy, args.policy
    eta = long_run_average(model, policy)
    res = simulate(model, policy, args.transmissions, args.seed)
    with _open_out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        w.writerow(res.csv_row(kind, eta))
    if args.policy_out:
        write_json(args.policy_out, policy_document(policy, model.P.rows, eta))
    return 0


def _positive_int(text: str) -> int:
    try:
        v = int(float(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1 or v != float(text):
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="markovcode", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def solver_flags(sp):
        sp.add_argument("--eps", type=float, default=None,
                        help="stop policy iteration once |eta change| <= EPS (default: exact fixed point)")
        sp.add_argument("--d-max", type=int, default=30, help="policy-iteration cap (default 30)")

    def ensemble_flags(sp):
        sp.add_argument("--n", type=int, default=4)
        sp.add_argument("--matrices", type=_positive_int, default=2000)
        sp.add_argument("--seed", type=int, default=0, help="master seed; matrix i uses seed+i")
        sp.add_argument("--beta", type=float, default=1.0,
                        help="mix each draw with H(alpha): (1-beta) H + beta R (default 1: pure R)")
        sp.add_argument("--alpha", type=float, default=0.5)
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--out", default=None, help="CSV path (default stdout)")

    sp = sub.add_parser("solve", help="solve all three policies for a matrix file")
    sp.add_argument("matrix")
    sp.add_argument("--out", help="write the JSON report here")
    solver_flags(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("ctmc", help="solve the per-slot chain exp(Q d) of a CTMC generator")
    sp.add_argument("generator")
    sp.add_argument("--d", type=float, required=True, help="seconds per bit")
    sp.add_argument("--out")
    sp.add_argument("--check-semigroup", action="store_true",
                    help="also compare exp(2Qd) against exp(Qd)^2")
    solver_flags(sp)
    sp.set_defaults(func=cmd_ctmc)

    sp = sub.add_parser("enumerate", help="count (and list) complete codes")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--full", action="store_true", help="list every length vector")
    sp.add_argument("--words", action="store_true", help="list canonical codewords too")
    sp.set_defaults(func=cmd_enumerate)

    sp = sub.add_parser("beta-sweep", help="sweep P = (1-beta) H(alpha) + beta R")
    sp.add_argument("--n", type=int, default=4)
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.add_argument("--beta-grid", default=None, help='"0,0.5,1" or "0:1:0.05" (default 0:1:0.05)')
    sp.add_argument("--matrix", default=None, help="R matrix JSON (default: built-in R0 for n=4)")
    sp.add_argument("--simulate", action="store_true")
    sp.add_argument("--transmissions", type=_positive_int, default=10**6)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_beta_sweep)

    sp = sub.add_parser("ensemble", help="average the three policies over random matrices")
    ensemble_flags(sp)
    sp.set_defaults(func=cmd_ensemble)

    sp = sub.add_parser("gain-cdf", help="tail probabilities of the optimal policy's gain")
    ensemble_flags(sp)
    sp.add_argument("--tau-grid", default=None, help="default 0:0.3:0.005")
    sp.set_defaults(func=cmd_gain_cdf)

    sp = sub.add_parser("simulate", help="Monte-Carlo run of one policy")
    sp.add_argument("matrix")
    sp.add_argument("--policy", choices=[k.value for k in PolicyKind], default="optimal")
    sp.add_argument("--policy-file", default=None, help="policy JSON to simulate instead")
    sp.add_argument("--policy-out", default=None, help="write the simulated policy as JSON")
    sp.add_argument("--transmissions", type=_positive_int, default=10**6)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    solver_flags(sp)
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    log.debug("kernel backend: %s", kernels.backend())
    try:
        return args.func(args)
    except MarkovCodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
