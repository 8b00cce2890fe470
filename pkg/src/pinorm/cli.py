"""Command-line front end: norm brackets, separability verdicts, covering stats.

Subcommands
    norm      bracket the projective norm of a tensor file
    certify   walk a resolution schedule over a state file
    covering  emit covering statistics
    debug     oracle access (nuclear / injective norms)

Exit codes: norm 0 = certified bracket, 3 = uncertified (budget), 2 = input
error.  certify 0 = entangled, 1 = not detected, 2 = invalid input,
3 = budget exceeded before any certified step.
"""

from __future__ import annotations

import argparse
import json
import os
import sys


def _set_threads(n: int | None):
    # Honored only if numpy has not been imported yet in this process.
    if n is None:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pinorm", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="write the result JSON here as well as stdout")
        sp.add_argument("--covering", choices=["grid", "circle", "ring"], default="grid")
        sp.add_argument("--guarantee", choices=["linear", "tight"], default=None)
        sp.add_argument("--separation", choices=["exact", "heuristic-then-exact"],
                        default="heuristic-then-exact")
        sp.add_argument("--budget-rows", type=int, default=2_000_000)
        sp.add_argument("--budget-evals", type=int, default=1_000_000_000)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("norm", help="bracket the projective norm of a tensor file")
    sp.add_argument("--input", required=True)
    sp.add_argument("--m", type=int, required=True)
    common(sp)

    sp = sub.add_parser("certify", help="certify entanglement of a state file")
    sp.add_argument("--input", required=True)
    sp.add_argument("--m-schedule", type=int, nargs="+", default=[2, 4, 8, 16])
    common(sp)

    sp = sub.add_parser("covering", help="emit covering statistics")
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--construction", choices=["grid", "circle", "ring"], default="grid")
    sp.add_argument("--guarantee", choices=["linear", "tight"], default="linear")
    sp.add_argument("--out")
    sp.add_argument("--threads", type=int, default=None)

    sp = sub.add_parser("debug", help="oracle access")
    dsub = sp.add_subparsers(dest="debug_command", required=True)
    dn = dsub.add_parser("nuclear", help="sum of singular values of an order-2 tensor")
    dn.add_argument("--input", required=True)
    dn.add_argument("--out")
    di = dsub.add_parser("injective", help="brute-force injective norm lower bound")
    di.add_argument("--input", required=True)
    di.add_argument("--restarts", type=int, default=64)
    di.add_argument("--iterations", type=int, default=200)
    di.add_argument("--seed", type=int, default=0)
    di.add_argument("--out")
    return p


def _emit(result: dict, out_path: str | None) -> None:
    text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _config_echo(args, extra: dict) -> dict:
    echo = {"command": args.command}
    for key in ("input", "m", "m_schedule", "covering", "guarantee", "separation",
                "budget_rows", "budget_evals", "threads", "seed", "dim",
                "construction"):
        if hasattr(args, key):
            echo[key] = getattr(args, key)
    echo.update(extra)
    return echo


def _solver_config(args):
    from .lp_solver import SolverConfig

    return SolverConfig(
        max_rows=args.budget_rows,
        eval_budget=args.budget_evals,
        seed=args.seed,
        separation_mode=args.separation.replace("-", "_"),
    )


def cmd_norm(args) -> int:
    from . import certify as _certify
    from . import errors, tensor_core

    guarantee = args.guarantee or "linear"
    try:
        tensor = tensor_core.load_tensor(args.input)
        est = _certify.estimate_pi_norm(
            tensor,
            args.m,
            construction=args.covering,
            guarantee=guarantee,
            cfg=_solver_config(args),
        )
    except (errors.InvalidState, errors.InvalidField, errors.ShapeMismatch,
            FileNotFoundError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return 2
    except errors.BudgetExceeded as exc:
        sys.stderr.write(f"budget exceeded: {exc}\n")
        return 3
    result = est.to_json_dict()
    result["config"] = _config_echo(args, {"guarantee": guarantee})
    _emit(result, args.out)
    return 0 if est.certified else 3


def cmd_certify(args) -> int:
    from . import certify as _certify
    from . import errors, tensor_core

    guarantee = args.guarantee or "tight"
    try:
        rho = tensor_core.load_state(args.input)
    except (errors.InvalidState, FileNotFoundError) as exc:
        result = {
            "verdict": "invalid_state",
            "reason": str(exc),
            "config": _config_echo(args, {"guarantee": guarantee}),
        }
        _emit(result, args.out)
        sys.stderr.write(f"input error: {exc}\n")
        return 2
    try:
        verdict = _certify.certify_state(
            rho,
            args.m_schedule,
            construction=args.covering,
            guarantee=guarantee,
            cfg=_solver_config(args),
        )
    except errors.BudgetExceeded as exc:
        sys.stderr.write(f"budget exceeded: {exc}\n")
        return 3
    result = verdict.to_json_dict()
    result["config"] = _config_echo(args, {"guarantee": guarantee})
    _emit(result, args.out)
    if verdict.kind == "entangled":
        return 0
    if verdict.budget_limited:
        return 3
    return 1


def cmd_covering(args) -> int:
    from . import covering as _covering
    from . import errors

    try:
        cov = _covering.get_covering(args.dim, args.m, args.construction)
    except errors.BudgetExceeded as exc:
        sys.stderr.write(f"budget exceeded: {exc}\n")
        return 3
    except errors.ShapeMismatch as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return 2
    result = _covering.covering_stats(cov, args.guarantee)
    result["config"] = _config_echo(args, {})
    _emit(result, args.out)
    return 0


def cmd_debug(args) -> int:
    from . import errors, oracles, tensor_core

    try:
        tensor = tensor_core.load_tensor(args.input)
        if args.debug_command == "nuclear":
            value = oracles.nuclear_norm(tensor)
            result = {"method": "nuclear_norm", "value": value}
        else:
            value = oracles.injective_norm_bruteforce(
                tensor, restarts=args.restarts, iterations=args.iterations,
                seed=args.seed,
            )
            result = {"method": "injective_norm_bruteforce", "value": value,
                      "restarts": args.restarts, "iterations": args.iterations}
    except (errors.InvalidState, errors.InvalidField, errors.ShapeMismatch,
            FileNotFoundError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return 2
    result["config"] = {"command": "debug", "input": args.input}
    _emit(result, args.out)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _set_threads(getattr(args, "threads", None))
    if args.command == "norm":
        return cmd_norm(args)
    if args.command == "certify":
        return cmd_certify(args)
    if args.command == "covering":
        return cmd_covering(args)
    return cmd_debug(args)


if __name__ == "__main__":
    sys.exit(main())
