"""Command-line harness: generate, solve, conditioning, verify, benchmark.

Exit codes: 0 success, 1 invalid input, 2 numerical failure,
3 verification failure.
"""

from __future__ import annotations

import argparse
import sys

from . import harness
from .conditioning import report_for_problem
from .diagnostics import check_firm_nonexpansive, check_operator_contraction, check_sandwich
from .errors import InvalidInputError, NumericalFailureError, RandprojError
from .solvers import SolverConfig, StepsizePolicy

EXIT_OK = 0
EXIT_INVALID_INPUT = 1
EXIT_NUMERICAL_FAILURE = 2
EXIT_VERIFICATION_FAILURE = 3


def _parse_stepsize(spec: str) -> StepsizePolicy:
    if spec == "optimal":
        return StepsizePolicy.optimal()
    if spec.startswith("const:"):
        return StepsizePolicy.constant(float(spec.split(":", 1)[1]))
    if spec.startswith("adaptive:"):
        return StepsizePolicy.adaptive(float(spec.split(":", 1)[1]))
    if spec == "adaptive":
        return StepsizePolicy.adaptive()
    raise InvalidInputError(f"cannot parse stepsize spec {spec!r}")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="randproj",
        description="Randomized projection methods for convex feasibility problems.",
    )
    ap.add_argument("--seed", type=int, default=0, help="master random seed")
    ap.add_argument("--out", default=None, help="output file or directory")
    ap.add_argument("--format", choices=("csv", "text"), default="text",
                    help="tabular output format")
    # the global flags are also accepted after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS)
    common.add_argument("--format", choices=("csv", "text"), default=argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a feasible problem file", parents=[common])
    g.add_argument("--kind", required=True, choices=harness.PROBLEM_KINDS)
    g.add_argument("--m", type=int, default=10, help="rows / set count")
    g.add_argument("--n", type=int, default=5, help="ambient dimension")
    g.add_argument("--slack", type=float, default=1.0,
                   help="slack scale for inequality kinds")
    g.add_argument("--p", type=float, default=2.0,
                   help="exponent of the pathological pair")
    g.add_argument("--zkind", default="ball", choices=("ball", "box", "orthant"))
    g.add_argument("--probe-mode", default="iterate", choices=("iterate", "gaussian"))

    s = sub.add_parser("solve", help="run a solver on a problem file", parents=[common])
    s.add_argument("problem")
    s.add_argument("--algorithm", required=True, choices=("spa", "sap", "avp", "bap"))
    s.add_argument("--n", type=int, default=1, help="minibatch size")
    s.add_argument("--stepsize", default="const:1.0",
                   help="const:x | optimal | adaptive:x")
    s.add_argument("--max-iters", type=int, default=1000)
    s.add_argument("--tol", type=float, default=1e-16, help="termination threshold on F")
    s.add_argument("--trace", default=None, help="trace CSV path")
    s.add_argument("--manifest", default=None, help="run manifest JSON path")
    s.add_argument("--order", default="cyclic", choices=("cyclic", "random"),
                   help="set order for the alternating baseline")
    s.add_argument("--gamma", type=float, default=None,
                   help="alignment constant, if known")

    c = sub.add_parser("conditioning", help="report gamma/kappa for a problem file",
                       parents=[common])
    c.add_argument("problem")
    c.add_argument("--n", type=int, default=1, help="minibatch size for gamma_N")
    c.add_argument("--hoffman", type=float, default=None)
    c.add_argument("--probes", type=int, default=300)
    c.add_argument("--manifest", default=None, help="write the report as JSON too")

    v = sub.add_parser("verify", help="run the theorem-check suite on a problem file",
                       parents=[common])
    v.add_argument("problem")
    v.add_argument("--probes", type=int, default=100)

    b = sub.add_parser("benchmark", help="run an algorithm grid over problem files",
                       parents=[common])
    b.add_argument("--problems", nargs="+", required=True)
    b.add_argument("--algorithms", nargs="+", required=True,
                   help="e.g. sap spa:4 avp bap:cyclic")
    b.add_argument("--seeds", type=int, default=3, help="seeds per cell")
    b.add_argument("--max-iters", type=int, default=2000)
    return ap


def _cmd_generate(args) -> int:
    if args.out is None:
        raise InvalidInputError("generate needs --out")
    pf = harness.generate(args.kind, args.seed, m=args.m, n=args.n,
                          slack=args.slack, p=args.p, zkind=args.zkind,
                          probe_mode=args.probe_mode)
    harness.save_problem(args.out, pf)
    print(f"wrote {args.kind} problem to {args.out}")
    return EXIT_OK


def _cmd_solve(args) -> int:
    cfg = SolverConfig(
        N=args.n,
        policy=_parse_stepsize(args.stepsize),
        max_iters=args.max_iters,
        tol_F=args.tol,
        seed=args.seed,
        gamma=args.gamma,
        trace_iterates=False,
    )
    trace = harness.solve_problem(args.problem, args.algorithm, cfg,
                                  order=args.order, trace_path=args.trace,
                                  manifest_path=args.manifest)
    print(f"status={trace.status} iterations={trace.iterations} "
          f"final_F={trace.F_hat[-1]:.3e}")
    return EXIT_OK


def _cmd_conditioning(args) -> int:
    problem = harness.load_problem(args.problem).build()
    report = report_for_problem(problem, N=args.n, rng=args.seed,
                                probe_count=args.probes, hoffman=args.hoffman)
    text = report.as_text()
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    if args.manifest:
        import json

        with open(args.manifest, "w") as fh:
            json.dump(report.as_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def _cmd_verify(args) -> int:
    problem = harness.load_problem(args.problem).build()
    report = report_for_problem(problem, rng=args.seed)
    kwargs = dict(probe_count=args.probes, rng=args.seed)
    results = [
        check_sandwich(problem, report.kappa, report.gamma, **kwargs),
        check_operator_contraction(problem, report.kappa, report.gamma, **kwargs),
        check_firm_nonexpansive(problem, **kwargs),
    ]
    header = ("name", "holds", "worst_slack", "probes")
    rows = [(r.name, "pass" if r.holds else "FAIL", f"{r.worst_slack:.6e}",
             str(r.probe_count)) for r in results]
    if args.format == "csv":
        lines = [",".join(header)] + [",".join(r) for r in rows]
    else:
        widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
        lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
        lines += ["  ".join(v.ljust(w) for v, w in zip(r, widths)) for r in rows]
    out = "\n".join(lines)
    print(out)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out + "\n")
    if not all(r.holds for r in results):
        return EXIT_VERIFICATION_FAILURE
    return EXIT_OK


def _cmd_benchmark(args) -> int:
    if args.out is None:
        raise InvalidInputError("benchmark needs --out")
    rows = harness.run_benchmark(args.problems, args.algorithms,
                                 seeds=range(args.seeds), out_dir=args.out,
                                 master_seed=args.seed, max_iters=args.max_iters)
    print(f"{len(rows)} cells written under {args.out}")
    return EXIT_OK


_COMMANDS = {
    "generate": _cmd_generate,
    "solve": _cmd_solve,
    "conditioning": _cmd_conditioning,
    "verify": _cmd_verify,
    "benchmark": _cmd_benchmark,
}


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors; map to 1
        code = exc.code if isinstance(exc.code, int) else 1
        return EXIT_OK if code == 0 else EXIT_INVALID_INPUT
    try:
        return _COMMANDS[args.command](args)
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL_FAILURE
    except (InvalidInputError, FileNotFoundError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except RandprojError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL_FAILURE


if __name__ == "__main__":
    sys.exit(main())
