"""Command-line driver: ``riphard <subcommand> ...``.

Exit codes: 0 success, 1 a check failed, 2 bad input, 3 over a capacity limit.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from riphard import oracle, transforms
from riphard.construction import ReductionParams, build_reduction_matrix, build_scaled_matrix
from riphard.errors import CapacityError, InputError, RipHardError
from riphard.gadget import reduce
from riphard.generators import KINDS, generate_instance
from riphard.rational import dumps_matrix, read_matrix
from riphard.sat import (
    Assignment,
    Cnf3Instance,
    dumps_e13,
    dumps_instance,
    max_val,
    max_val_cnf,
    read_instance,
    val,
    val_cnf,
)
from riphard.verify import report_emit, run_pipeline

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_CAPACITY = 0, 1, 2, 3


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _emit(args, text: str | bytes) -> None:
    data = text.encode() if isinstance(text, str) else text
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.write(data.decode())


def _as_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _params(args) -> ReductionParams:
    if args.preset == "hardness":
        return ReductionParams.hardness(args.alpha)
    base = ReductionParams.demo(args.alpha)
    eps = args.epsilon if args.epsilon is not None else base.epsilon
    xi = args.xi if args.xi is not None else base.xi
    return ReductionParams(eps, xi, args.alpha, check_order=not args.allow_any_order)


def _load_e13(path):
    inst = read_instance(path)
    if isinstance(inst, Cnf3Instance):
        raise InputError(f"{path}: expected a positive 1-in-3 instance ('p e13' header)")
    return inst


# --------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    inst = generate_instance(args.kind, args.n, args.seed, m=args.m, planted=args.planted)
    _emit(args, dumps_instance(inst))
    return EXIT_OK


def cmd_reduce(args) -> int:
    psi = read_instance(args.input)
    if not isinstance(psi, Cnf3Instance):
        raise InputError(f"{args.input}: expected DIMACS CNF input")
    phi, wmap = reduce(psi)
    _emit(args, dumps_e13(phi))
    sidecar = args.map or (args.out + ".map.json" if args.out else None)
    if sidecar:
        Path(sidecar).write_text(wmap.to_json() + "\n")
    return EXIT_OK


def cmd_build(args) -> int:
    phi = _load_e13(args.input)
    params = _params(args)
    X = build_scaled_matrix(phi, params) if args.scaled else build_reduction_matrix(phi, params)
    _emit(args, dumps_matrix(X))
    return EXIT_OK


def cmd_rip(args) -> int:
    X = read_matrix(args.matrix)
    rep = oracle.restricted_extremes(X, args.k, budget=args.budget, workers=args.workers)
    out = rep.to_dict()
    code = EXIT_OK
    if args.delta is not None:
        out["delta"] = str(args.delta)
        out["is_rip"] = rep.delta_star <= float(args.delta) + rep.tolerance
        code = EXIT_OK if out["is_rip"] else EXIT_CHECK
    if args.format == "text":
        lines = [f"{k}: {v}" for k, v in out.items()]
        _emit(args, "\n".join(lines) + "\n")
    else:
        _emit(args, _as_json(out))
    return code


def cmd_gap(args) -> int:
    X = read_matrix(args.matrix)
    verdict = oracle.gap_decide(
        X, args.k, args.delta, args.lambda1, args.lambda2,
        exact=args.exact, budget=args.budget, **({} if args.exact else {"workers": args.workers}),
    )
    out = {
        "k": str(args.k),
        "delta": str(args.delta),
        "lambda1": str(args.lambda1),
        "lambda2": str(args.lambda2),
        "exact": args.exact,
        "verdict": verdict.value,
    }
    _emit(args, _as_json(out) if args.format == "json" else verdict.value + "\n")
    return EXIT_OK


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise InputError(f"--op {args.op} needs " + ", ".join("--" + n.replace("_", "-") for n in missing))


def cmd_transform(args) -> int:
    X = read_matrix(args.matrix)
    info: dict = {"op": args.op}
    if args.op == "shift-down":
        _require(args, "delta", "delta_prime", "lambda2")
        Y, sp = transforms.shift_delta_down(X, args.delta, args.delta_prime, args.lambda2, tau=args.tau)
        info.update(sp.to_dict())
    elif args.op == "shift-up":
        _require(args, "delta", "delta_prime", "lambda2")
        Y, sp = transforms.shift_delta_up(X, args.delta, args.delta_prime, args.lambda2)
        info.update(sp.to_dict())
    elif args.op == "square":
        Y = transforms.squarify(X, args.tau)
    elif args.op == "blockdiag":
        _require(args, "matrix2")
        Y = transforms.block_diag(X, read_matrix(args.matrix2))
    else:  # widen
        _require(args, "matrix2", "certificate", "k", "delta")
        cert = oracle.RipReport.from_dict(json.loads(Path(args.certificate).read_text()))
        Y, ratio = transforms.widen_rectangular(X, read_matrix(args.matrix2), cert, args.k, args.delta)
        info["aspect_ratio"] = ratio
    if not args.out:
        raise InputError("transform needs --out")
    Path(args.out).write_text(dumps_matrix(Y))
    sys.stderr.write(_as_json(info))
    return EXIT_OK


def cmd_val(args) -> int:
    inst = read_instance(args.input)
    cnf = isinstance(inst, Cnf3Instance)
    if args.assignment is not None:
        a = Assignment.parse(args.assignment)
        value = val_cnf(inst, a) if cnf else val(inst, a)
        out = {"assignment": str(a), "val": str(value)}
    else:
        value, a = (max_val_cnf if cnf else max_val)(inst, max_vars=args.max_vars)
        out = {"max_val": str(value), "witness": str(a)}
    _emit(args, _as_json(out) if args.format == "json" else " ".join(f"{k}={v}" for k, v in out.items()) + "\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    inst = read_instance(args.input)
    report = run_pipeline(
        inst,
        _params(args),
        budget=args.budget,
        workers=args.workers,
        max_n=args.max_n,
        seed=args.seed,
        artifacts_dir=args.artifacts,
    )
    _emit(args, report_emit(report, args.format))
    return EXIT_OK if report.passed else EXIT_CHECK


# --------------------------------------------------------------------------
# parser


def _add_params(p):
    p.add_argument("--preset", choices=("demo", "hardness"), default="demo",
                   help="demo: eps=1/5, xi=1/200; hardness: eps=1/5, xi=1/ceil(1e5/alpha)")
    p.add_argument("--epsilon", type=_rational)
    p.add_argument("--xi", type=_rational)
    p.add_argument("--alpha", type=_rational, default=Fraction(1, 100))
    p.add_argument("--allow-any-order", action="store_true", help="accept xi >= epsilon")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--budget", type=int, default=oracle.DEFAULT_BUDGET)
    common.add_argument("--workers", type=int, default=1)

    parser = argparse.ArgumentParser(prog="riphard", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate a random instance")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--planted", action="store_true")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("reduce", parents=[common], help="3-CNF to positive 1-in-3 SAT")
    p.add_argument("--input", required=True)
    p.add_argument("--map", help="witness-map JSON path (default: <out>.map.json)")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("build", parents=[common], help="build the reduction matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--scaled", action="store_true", help="divide by c1")
    _add_params(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("rip", parents=[common], help="exact restricted extremes")
    p.add_argument("--matrix", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--delta", type=_rational)
    p.set_defaults(func=cmd_rip)

    p = sub.add_parser("gap", parents=[common], help="decide the RIP gap problem")
    p.add_argument("--matrix", required=True)
    p.add_argument("--k", type=_rational, required=True)
    p.add_argument("--delta", type=_rational, required=True)
    p.add_argument("--lambda1", type=_rational, required=True)
    p.add_argument("--lambda2", type=_rational, required=True)
    p.add_argument("--exact", action="store_true", help="rational tests (rational matrix files only)")
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("transform", parents=[common], help="delta shifts, squarification, block assembly")
    p.add_argument("--op", choices=("shift-down", "shift-up", "square", "blockdiag", "widen"), required=True)
    p.add_argument("--matrix", required=True)
    p.add_argument("--matrix2")
    p.add_argument("--delta", type=_rational)
    p.add_argument("--delta-prime", type=_rational)
    p.add_argument("--lambda2", type=_rational)
    p.add_argument("--tau", type=_rational)
    p.add_argument("--certificate", help="RipReport JSON for the --matrix2 block (widen)")
    p.add_argument("--k", type=int)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("val", parents=[common], help="evaluate or maximize val")
    p.add_argument("--input", required=True)
    p.add_argument("--assignment", help="e.g. TFT or 101")
    p.add_argument("--max-vars", type=int, default=24)
    p.set_defaults(func=cmd_val)

    p = sub.add_parser("verify", parents=[common], help="run the verification pipeline")
    p.add_argument("--input", required=True)
    p.add_argument("--max-n", type=int, default=6)
    p.add_argument("--artifacts", help="directory for matrix and report files")
    _add_params(p)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"riphard: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (RipHardError, ValueError) as exc:
        print(f"riphard: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"riphard: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
