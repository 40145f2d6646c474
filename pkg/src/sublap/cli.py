"""Command-line interface.

Subcommands cover the solver (solve, check), demand correction (regress),
label propagation (semisup), and network analysis (resistance, centrality,
lattice).  All output is deterministic for identical inputs and flags.

Exit codes: 0 success, 2 infeasible (certificate in the output document),
3 iteration limit, 64 usage errors, 65 invalid input documents, 74 I/O
failures.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import io as docio
from .analysis import (
    betweenness_report,
    closeness_report,
    effective_resistance,
    resistance_matrix,
)
from .laplacian import (
    STATUS_INFEASIBLE,
    STATUS_ITERATION_LIMIT,
    Problem,
    SolverConfig,
    check_feasible,
    solve_system,
)
from .lattice import IdealLimitError, kernel
from .regression import brute_force_regress, regress_combinatorial, regress_frank_wolfe
from .semisup import LabeledProblem, predict_labels, solve_labeled

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_ITERATION_LIMIT = 3
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_IO = 74

_STATUS_EXIT = {
    STATUS_INFEASIBLE: EXIT_INFEASIBLE,
    STATUS_ITERATION_LIMIT: EXIT_ITERATION_LIMIT,
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems as exit code 64."""

    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="recorded in output metadata")
    common.add_argument("--threads", type=int, default=1, help="worker pool size for all-pairs work")
    common.add_argument("--quiet", action="store_true", help="suppress informational messages")

    parser = _Parser(prog="sublap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", parents=[common], help="solve the system for the demand b")
    p_solve.add_argument("--input", required=True)
    p_solve.add_argument("--output")
    p_solve.add_argument("--tol", type=float, default=1e-8)
    p_solve.add_argument("--max-iter", type=int, default=None)

    p_check = sub.add_parser("check", parents=[common], help="feasibility verdict for b")
    p_check.add_argument("--input", required=True)
    p_check.add_argument("--output")

    p_reg = sub.add_parser("regress", parents=[common], help="correct an infeasible demand")
    p_reg.add_argument("--input", required=True)
    p_reg.add_argument("--output")
    p_reg.add_argument("--method", choices=("fw", "exact", "oracle"), default="exact")
    p_reg.add_argument("--iters", type=int, default=2000)
    p_reg.add_argument("--tol", type=float, default=1e-8)

    p_semi = sub.add_parser("semisup", parents=[common], help="solve with pinned labels")
    p_semi.add_argument("--input", required=True)
    p_semi.add_argument("--output")
    p_semi.add_argument("--predictions", help="write a vertex,potential,label CSV here")
    p_semi.add_argument("--tol", type=float, default=1e-8)

    p_res = sub.add_parser("resistance", parents=[common], help="effective resistance")
    p_res.add_argument("--input", required=True)
    p_res.add_argument("--output")
    p_res.add_argument("--source", type=int)
    p_res.add_argument("--target", type=int)
    p_res.add_argument("--all-pairs", action="store_true")
    p_res.add_argument("--tol", type=float, default=1e-8)

    p_cent = sub.add_parser("centrality", parents=[common], help="current-flow centrality scores")
    p_cent.add_argument("--input", required=True)
    p_cent.add_argument("--output")
    p_cent.add_argument("--measure", choices=("closeness", "betweenness"), required=True)
    p_cent.add_argument("--format", choices=("json", "csv"), default="json")
    p_cent.add_argument("--tol", type=float, default=1e-8)

    p_lat = sub.add_parser("lattice", parents=[common], help="kernel lattice of the transformation")
    p_lat.add_argument("--input", required=True)
    p_lat.add_argument("--output")
    p_lat.add_argument("--dump", action="store_true", help="emit the Birkhoff representation")

    return parser


def _write(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
            if not text.endswith("\n"):
                handle.write("\n")


def _solver_meta(args) -> dict:
    meta = {"tolerance": float(getattr(args, "tol", 1e-8)), "method": "descent"}
    if getattr(args, "max_iter", None) is not None:
        meta["max_iterations"] = int(args.max_iter)
    meta["seed"] = int(args.seed)
    return meta


def _need_b(doc) -> np.ndarray:
    if doc.b is None:
        raise docio.DocumentError("this command requires a demand vector 'b'")
    return doc.b


def _config(args) -> SolverConfig:
    return SolverConfig(
        tolerance=float(getattr(args, "tol", 1e-8)),
        max_iterations=getattr(args, "max_iter", None),
    )


def _cmd_solve(args) -> int:
    doc = docio.parse_problem(args.input)
    sol = solve_system(Problem(doc.transformation, _need_b(doc)), _config(args))
    _write(docio.json_dumps(docio.solution_to_document(sol, _solver_meta(args))), args.output)
    return _STATUS_EXIT.get(sol.status, EXIT_OK)


def _cmd_check(args) -> int:
    doc = docio.parse_problem(args.input)
    feasible, witness = check_feasible(Problem(doc.transformation, _need_b(doc)))
    out = {"feasible": bool(feasible)}
    if witness is not None:
        out["certificate"] = sorted(int(v) for v in witness)
    _write(docio.json_dumps(out), args.output)
    return EXIT_OK if feasible else EXIT_INFEASIBLE


def _cmd_regress(args) -> int:
    doc = docio.parse_problem(args.input)
    b = _need_b(doc)
    lattice = kernel(doc.transformation)
    if args.method == "fw":
        result = regress_frank_wolfe(lattice, b, args.iters)
    elif args.method == "oracle":
        result = brute_force_regress(lattice, b)
    else:
        result = regress_combinatorial(lattice, b)
    sol = solve_system(Problem(doc.transformation, result.b_prime), _config(args))
    out = {
        "regression": docio.regression_to_document(result),
        "solution": docio.solution_to_document(sol, _solver_meta(args)),
    }
    _write(docio.json_dumps(out), args.output)
    return _STATUS_EXIT.get(sol.status, EXIT_OK)


def _cmd_semisup(args) -> int:
    doc = docio.parse_problem(args.input)
    if doc.fixed is None:
        raise docio.DocumentError("semisup requires a 'labels' block")
    lp = LabeledProblem(doc.transformation, doc.fixed, doc.boundary)
    sol = solve_labeled(lp, _config(args))
    unlabeled = lp.unlabeled
    out = docio.solution_to_document(sol, _solver_meta(args))
    if sol.status != STATUS_INFEASIBLE:
        labels = predict_labels(sol.x, unlabeled)
        out["predictions"] = [
            {"vertex": int(v), "potential": float(sol.x[v]), "label": int(lab)}
            for v, lab in zip(unlabeled, labels)
        ]
        if args.predictions:
            csv_text = docio.predictions_csv(unlabeled, [sol.x[v] for v in unlabeled], labels)
            _write(csv_text, args.predictions)
    _write(docio.json_dumps(out), args.output)
    return _STATUS_EXIT.get(sol.status, EXIT_OK)


def _cmd_resistance(args) -> int:
    doc = docio.parse_problem(args.input)
    cfg = _config(args)
    if args.all_pairs:
        if args.source is not None or args.target is not None:
            raise _UsageError("--all-pairs excludes --source/--target")
        mat = resistance_matrix(doc.transformation, cfg, threads=args.threads)
        _write(docio.matrix_csv(mat), args.output)
        return EXIT_OK
    if args.source is None or args.target is None:
        raise _UsageError("pass --source and --target, or --all-pairs")
    rv = effective_resistance(doc.transformation, args.source, args.target, cfg)
    _write(docio.json_dumps(docio.resistance_to_document(args.source, args.target, rv)), args.output)
    return EXIT_OK


def _cmd_centrality(args) -> int:
    doc = docio.parse_problem(args.input)
    cfg = _config(args)
    if args.measure == "closeness":
        report = closeness_report(doc.transformation, cfg, threads=args.threads)
    else:
        report = betweenness_report(doc.transformation, cfg, threads=args.threads)
    if args.format == "csv":
        _write(docio.centrality_csv(report), args.output)
    else:
        _write(docio.json_dumps(docio.report_to_document(report)), args.output)
    return EXIT_OK


def _cmd_lattice(args) -> int:
    if not args.dump:
        raise _UsageError("nothing to do: pass --dump")
    doc = docio.parse_problem(args.input)
    lattice = kernel(doc.transformation)
    _write(docio.json_dumps(docio.lattice_to_document(lattice)), args.output)
    return EXIT_OK


_COMMANDS = {
    "solve": _cmd_solve,
    "check": _cmd_check,
    "regress": _cmd_regress,
    "semisup": _cmd_semisup,
    "resistance": _cmd_resistance,
    "centrality": _cmd_centrality,
    "lattice": _cmd_lattice,
}


def run_command(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"sublap: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except docio.DocumentError as exc:
        print(f"sublap: invalid document: {exc}", file=sys.stderr)
        return EXIT_DATA
    except IdealLimitError as exc:
        print(f"sublap: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"sublap: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"sublap: {exc}", file=sys.stderr)
        return EXIT_IO


def main():
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
