"""Command line interface: ``onlinefair <subcommand>``."""
from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from . import harness
from .advice import decode_tape, oracle
from .axioms import AXIOMS
from .core import Instance, Objective, dump_instance, load_instance
from .evaluation import ENGINES, EngineConfig, evaluate
from .instances import FAMILIES, enumerate_binary, family, random_instance
from .mechanisms import KINDS, get_mechanism


def _parse_k_range(text: str) -> list[int]:
    """``3`` -> [3]; ``0:5`` -> 0..5 inclusive; ``0,2,4`` -> listed."""
    if ":" in text:
        lo, hi = text.split(":", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",")]


def _instance_from_args(args) -> Instance:
    if getattr(args, "instance", None):
        return load_instance(args.instance)
    if args.family == "random":
        return random_instance(args.n, args.m or args.n, args.regime, seed=args.seed)
    return family(args.family, args.n)


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_rows(args, rows) -> None:
    _emit(args, harness.write_rows(rows, args.format))


def _config(args) -> EngineConfig:
    return EngineConfig(args.engine, samples=args.samples, seed=args.seed)


def cmd_gen(args) -> int:
    inst = _instance_from_args(args)
    if args.out:
        dump_instance(inst, args.out)
    else:
        sys.stdout.write(json.dumps(inst.to_dict(), indent=2) + "\n")
    return 0


def cmd_evaluate(args) -> int:
    inst = _instance_from_args(args)
    tape = None
    if args.mechanism.startswith("advised:"):
        if args.tape is not None:
            tape = decode_tape(args.tape, inst.n, args.k)
        elif args.oracle:
            tape = oracle(args.oracle.upper(), inst, args.k)
        else:
            raise SystemExit("advised mechanisms need --oracle or --tape")
    mech = get_mechanism(args.mechanism, tape)
    result = evaluate(inst, mech, _config(args))
    payload = {"instance": inst.name, "mechanism": mech.name, "engine": args.engine, **result.to_dict()}
    if tape is not None:
        payload["advice"] = tape.to_dict()
    if args.objective:
        opt = harness.optimum(inst, args.objective)
        payload["optimum"] = harness._fmt(opt)
        payload["reciprocal_ratio"] = harness._fmt(result.value(Objective(args.objective)) / opt if opt else 1)
    _emit(args, json.dumps(payload, indent=2) + "\n")
    return 0


def cmd_sweep(args) -> int:
    rows = harness.sweep_advice(args.family, args.n, args.objective, args.mechanism,
                                _parse_k_range(args.k_range), _config(args))
    _emit_rows(args, rows)
    return 0


def cmd_figure1(args) -> int:
    rows = harness.figure1_data(args.n, measured=not args.closed_form_only, samples=args.samples, seed=args.seed)
    _emit_rows(args, rows)
    return 0


def cmd_table1(args) -> int:
    sizes = [tuple(int(x) for x in s.split("x")) for s in args.sizes.split(",")]
    report = harness.table1_check(sizes, general_count=args.general_count, seed=args.seed)
    rows = report.rows
    if args.format == "csv":
        rows = [{**r, "witness": json.dumps(harness._jsonable(r["witness"]))} for r in rows]
    _emit_rows(args, rows)
    return 0 if report.passed else 1


def cmd_examples(args) -> int:
    report = harness.run_examples()
    _emit_rows(args, report.rows)
    return 0 if report.passed else 1


def cmd_axioms(args) -> int:
    checks = list(AXIOMS) if args.axiom == "all" else [args.axiom]
    mech = get_mechanism(args.mechanism)
    rows = []
    for n in range(1, args.max_n + 1):
        for inst in enumerate_binary(n, n):
            for name in checks:
                verdict = AXIOMS[name](inst, mech)
                rows.append({"instance": inst.name, "mechanism": mech.name,
                             **{k: json.dumps(v) if isinstance(v, (dict, list)) else v
                                for k, v in verdict.to_dict().items()}})
    if args.violations_only:
        rows = [r for r in rows if r["status"] != "SATISFIED"]
    _emit_rows(args, rows)
    return 0


def cmd_dominance(args) -> int:
    report = harness.dominance_scan(args.max_n)
    _emit_rows(args, report.rows)
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--engine", choices=ENGINES, default="exact-compressed")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=10_000)
    common.add_argument("--out", help="write output to this file instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument("--instance", help="instance JSON file")
    source.add_argument("--family", default="upper-triangular", choices=sorted(FAMILIES) + ["random"])
    source.add_argument("--n", type=int, default=4)
    source.add_argument("--m", type=int, help="items (random family only; default n)")
    source.add_argument("--regime", choices=("binary", "general"), default="binary")

    parser = argparse.ArgumentParser(prog="onlinefair", description="Online fair division laboratory.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common, source], help="generate an instance as JSON")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("evaluate", parents=[common, source], help="evaluate one mechanism")
    p.add_argument("--mechanism", default="ranking",
                   help=f"one of {', '.join(KINDS)}, optionally prefixed by 'advised:'")
    p.add_argument("--oracle", choices=("es", "uw", "ew"), help="fill the tape with this oracle")
    p.add_argument("--tape", help="advice bits as a 0/1 string")
    p.add_argument("--k", type=int, default=0, help="number of advised items")
    p.add_argument("--objective", choices=[o.value for o in Objective],
                   help="also report the offline optimum and reciprocal ratio")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", parents=[common], help="advice sweep over k")
    p.add_argument("--family", default="upper-triangular", choices=sorted(FAMILIES))
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--objective", choices=[o.value for o in Objective], default="ES")
    p.add_argument("--mechanism", default="ranking", choices=KINDS)
    p.add_argument("--k-range", default="0:6", help="'lo:hi' inclusive or a comma list")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figure1", parents=[common], help="partial-advice ES curves")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--closed-form-only", action="store_true")
    p.set_defaults(func=cmd_figure1)

    p = sub.add_parser("table1", parents=[common], help="check the partial-advice guarantee table")
    p.add_argument("--sizes", default="2x2,3x3,2x3,2x4,3x4", help="comma list of NxM")
    p.add_argument("--general-count", type=int, default=40)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("examples", parents=[common], help="worked-example regression")
    p.set_defaults(func=cmd_examples)

    p = sub.add_parser("axioms", parents=[common], help="axiom checks on binary n=m instances")
    p.add_argument("--mechanism", default="like", choices=KINDS)
    p.add_argument("--axiom", default="all", choices=["all"] + list(AXIOMS))
    p.add_argument("--max-n", type=int, default=2)
    p.add_argument("--violations-only", action="store_true")
    p.set_defaults(func=cmd_axioms)

    p = sub.add_parser("dominance", parents=[common], help="pointwise mechanism comparisons")
    p.add_argument("--max-n", type=int, default=3)
    p.set_defaults(func=cmd_dominance)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
