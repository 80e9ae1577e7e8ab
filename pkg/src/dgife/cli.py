"""Command-line entry point: ``dgife solve`` and ``dgife convergence``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .exceptions import DgIfeError
from .harness import RunConfig, emit_table, run_convergence, run_single, write_manifest
from .linsolve import METHODS
from .problems import EXAMPLES


def _common(p):
    p.add_argument("--example", default="1", choices=sorted(EXAMPLES))
    p.add_argument("--beta", nargs=2, type=float, metavar=("MINUS", "PLUS"),
                   help="custom coefficient pair (overrides --example)")
    p.add_argument("--dt-ratio", type=float, default=2.0, help="time step as a multiple of h")
    p.add_argument("--theta", type=float, default=0.5, help="1 = backward Euler, 0.5 = Crank-Nicolson")
    p.add_argument("--epsilon", type=int, default=1, choices=(-1, 0, 1))
    p.add_argument("--sigma", type=float, default=None,
                   help="penalty (default 100 for epsilon=-1, else 1)")
    p.add_argument("--init", choices=("interp", "projection"), default="interp")
    p.add_argument("--simplex", action="store_true", help="split cells into triangles")
    p.add_argument("--solver", choices=METHODS, default="splu")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--final-time", type=float, default=1.0)
    p.add_argument("--energy", action="store_true", help="also compute the energy-norm error")
    p.add_argument("--resolve-curve", type=int, default=0, metavar="M",
                   help="split cut pieces along the true curve with M subdivisions when measuring errors")
    p.add_argument("--out", type=Path, help="output table path (stdout if omitted)")
    p.add_argument("--format", choices=("csv", "markdown"), default=None)
    p.add_argument("-v", "--verbose", action="store_true")


def _config(args, ns):
    sigma = args.sigma if args.sigma is not None else (100.0 if args.epsilon == -1 else 1.0)
    return RunConfig(
        example=args.example, beta=tuple(args.beta) if args.beta else None, ns=ns,
        dt_ratio=args.dt_ratio, theta=args.theta, epsilon=args.epsilon, sigma=sigma,
        init=args.init, simplex=args.simplex, solver=args.solver, tol=args.tol,
        T=args.final_time, energy=args.energy, resolve_curve=args.resolve_curve,
    )


def _emit(args, config, reports, result=None):
    fmt = args.format or ("markdown" if args.out and args.out.suffix == ".md" else "csv")
    text = emit_table(reports, args.out, fmt)
    if args.out is None:
        sys.stdout.write(text)
    else:
        write_manifest(args.out.with_suffix(args.out.suffix + ".json"), config, result)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="dgife", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_solve = sub.add_parser("solve", help="one resolution")
    p_solve.add_argument("--ns", type=int, default=20)
    p_solve.add_argument("--dump-matrices", type=Path, help="write A and M as Matrix Market files")
    p_solve.add_argument("--checkpoint-dir", type=Path, help="write every time level as binary")
    _common(p_solve)
    p_conv = sub.add_parser("convergence", help="refinement ladder with rates")
    p_conv.add_argument("--ns", type=int, nargs="+", default=[10, 20, 40, 80])
    _common(p_conv)
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s"
    )
    try:
        if args.command == "solve":
            config = _config(args, [args.ns])
            report = run_single(config, args.ns, args.dump_matrices, args.checkpoint_dir)
            _emit(args, config, [report])
        else:
            config = _config(args, args.ns)
            result = run_convergence(config)
            _emit(args, config, result.reports, result)
            for ns, msg in result.failures.items():
                print(f"Ns={ns} failed: {msg}", file=sys.stderr)
            if result.failures:
                return 1
    except (DgIfeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
