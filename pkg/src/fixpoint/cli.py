"""Command line entry point: ``fixpoint <subcommand> [flags]``.

Exit codes: 0 success, 1 refused or failed (certificate witness, violated
precondition, no fixed point found), 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import expr
from .errors import CertificationError, FixpointError, InvalidArgument, PreconditionViolation
from .scenarios import (
    make_config,
    run_certify_command,
    run_egoroff_command,
    run_example41,
    run_pipeline_command,
    run_solve_command,
    run_zolezzi_command,
)
from .solver import FIXED_POINT_FOUND

SCENARIO_FLAGS = (
    ("--domain", "a,b interval"),
    ("--grid-n", "number of atoms"),
    ("--grid-kind", "interior|node"),
    ("--operator", "expression in x and u"),
    ("--lower", "lower bound, constant or expression in x"),
    ("--upper", "upper bound, constant or expression in x"),
    ("--schedule", "geometric|harmonic|list:l1,l2,..."),
    ("--steps", "schedule length"),
    ("--inner-tol", "inner Picard tolerance"),
    ("--pointwise-tol", "final residual tolerance"),
    ("--samples", "certificate sample pairs"),
    ("--seed", "RNG seed (default $FIXPOINT_SEED or 0)"),
    ("--out", "output CSV path"),
    ("--plot", "plot-data output path"),
    ("--epsilon", "exceptional-set measure bound"),
    ("--tail", "number of trailing iterates used for limits"),
)


def _scenario_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    for flag, help_ in SCENARIO_FLAGS:
        p.add_argument(flag, help=help_)
    p.add_argument("--pin", action="append", metavar="IDX=VAL", help="pin an atom (repeatable)")
    p.add_argument("--config", help="key=value config file")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fixpoint", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    parent = _scenario_parent()
    sub.add_parser("certify", parents=[parent], help="sample the pointwise 1-Lipschitz inequality")
    solve = sub.add_parser("solve", parents=[parent], help="one damped resolvent solve")
    solve.add_argument("--lambda", dest="lam", help="damping factor in (0, 1)")
    sub.add_parser("pipeline", parents=[parent], help="damped path toward a fixed point")
    ex = sub.add_parser("example41", help="pinned-set counterexample on C[0,1]")
    ex.add_argument("--grid-n", type=int, default=64)
    ex.add_argument("--picard-steps", type=int, default=200)
    ex.add_argument("--samples", type=int, default=1000)
    ex.add_argument("--seed", type=int)
    ex.add_argument("--out")
    ex.add_argument("--plot")
    sub.add_parser("egoroff", parents=[parent], help="exceptional set of the pipeline tail")
    z = sub.add_parser("zolezzi", parents=[parent], help="pairing gaps vs L^p distances")
    z.add_argument("--densities", type=int, default=16)
    z.add_argument("--p", default="1,2", help="comma-separated exponents")
    return parser


def _config(args):
    overrides = {
        k: getattr(args, k, None)
        for k in (
            "domain", "grid_n", "grid_kind", "operator", "lower", "upper", "schedule",
            "steps", "inner_tol", "pointwise_tol", "samples", "seed", "out", "plot",
            "epsilon", "tail", "lam",
        )
    }
    if args.pin:
        overrides["pins"] = args.pin
    return make_config(args.config, **overrides)


def _run(args) -> int:
    if args.command == "example41":
        from .scenarios import _default_seed

        seed = args.seed if args.seed is not None else _default_seed()
        art = run_example41(args.grid_n, args.picard_steps, args.out, args.plot, samples=args.samples, seed=seed)
        print(art.summary)
        return 0

    config = _config(args)
    if args.command == "certify":
        report = run_certify_command(config)
        print(report)
        if report.witness is not None:
            w = report.witness
            print(f"witness u: {w.u.values.tolist()}")
            print(f"witness v: {w.v.values.tolist()}")
        return 0 if report.passed else 1
    if args.command == "solve":
        res, sol, text = run_solve_command(config)
        print(f"lambda={config.lam} iterations={res.iterations} "
              f"a_posteriori_error={res.a_posteriori_error:.3e} converged={res.converged}")
        if not config.out:
            sys.stdout.write(text)
        return 0
    if args.command == "pipeline":
        art = run_pipeline_command(config)
        print(art.summary)
        return 0 if art.status == FIXED_POINT_FOUND else 1
    if args.command == "egoroff":
        report, text = run_egoroff_command(config)
        print(f"exceptional atoms: {list(report.exceptional_atoms)}")
        print(f"exceptional measure: {report.exceptional_measure!r}")
        print(f"uniform tail deviation off the exceptional set: {report.uniform_tail_deviation!r}")
        if not config.out:
            sys.stdout.write(text)
        return 0
    if args.command == "zolezzi":
        p_list = tuple(float(p) for p in args.p.split(","))
        report, text = run_zolezzi_command(config, args.densities, p_list)
        print(report)
        if not config.out:
            sys.stdout.write(text)
        return 0
    raise AssertionError(args.command)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return _run(args)
    except expr.ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except (InvalidArgument, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CertificationError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        w = exc.report.witness
        print(f"witness at atom {w.atom}: lhs={w.lhs!r} rhs={w.rhs!r}", file=sys.stderr)
        return 1
    except (PreconditionViolation, FixpointError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
