"""Command-line surface.

Subcommands: solve (full pipeline), oracle (brute force), verify (operation
and per-term multimorphism checks), consistency (stage 1 network dump), and
reduce (stages 1-2, final operations plus iteration trace).

Exit codes: 0 success (an infeasible instance is a successful answer), 1 for
failed verification or violated solver hypotheses, 2 for malformed input,
bad usage, or an exceeded enumeration cap.
"""

from __future__ import annotations

import argparse
import json
import sys

from .consistency import decompose_instance, enforce_strong_3_consistency
from .costs import FLOAT_TOL, format_cost
from .errors import CapExceeded, FormatError, StageError, ValidationError, VcspError
from .io_formats import parse_instance, parse_ops, serialize_ops
from .model import DEFAULT_CAP
from .operations import check_instance_multimorphism
from .reduction import run_stage2
from .solvers import solve_bruteforce, solve_pipeline


def _add_common(parser):
    parser.add_argument("--float", action="store_true", dest="float_mode",
                        help="use floating-point costs (tolerant comparisons)")
    parser.add_argument("--cap", type=int, default=DEFAULT_CAP,
                        help="enumeration cap in tuples")
    parser.add_argument("--json", action="store_true",
                        help="machine-readable output")
    parser.add_argument("--paranoid", action="store_true",
                        help="run the expensive diagnostic network scans")
    parser.add_argument("--trace", metavar="PATH",
                        help="write the stage-2 iteration trace to a file")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="vcsp",
        description="Exact solver for valued CSPs with a mixed "
                    "commutative/majority operation structure.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, need_ops, help_text in (
            ("solve", True, "run the full three-stage pipeline"),
            ("oracle", False, "brute-force minimum by enumeration"),
            ("verify", True, "validate the operation system and every term"),
            ("consistency", False, "stage 1 only; dump the relation network"),
            ("reduce", True, "stages 1-2; dump final operations and trace")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("instance", help="instance file")
        if need_ops:
            p.add_argument("ops", help="operation-system file")
        _add_common(p)
    return parser


def _result_payload(result):
    payload = {
        "optimum": format_cost(result.optimum),
        "argmin": list(result.argmin) if result.argmin is not None else None,
    }
    stats = {k: v for k, v in result.stats.items()
             if k in ("path", "reduce_iterations", "reason", "cycles")}
    payload["stats"] = stats
    return payload


def _emit_result(result, as_json):
    payload = _result_payload(result)
    if as_json:
        print(json.dumps(payload, sort_keys=True))
        return
    print(f"optimum {payload['optimum']}")
    if payload["argmin"] is None:
        print("argmin none")
    else:
        print("argmin " + " ".join(str(v) for v in payload["argmin"]))
    for key in sorted(payload["stats"]):
        print(f"stat {key} {payload['stats'][key]}")


def _write_trace(args, lines):
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))


def main(argv=None):
    args = build_parser().parse_args(argv)
    tol = FLOAT_TOL if args.float_mode else 0
    try:
        instance = parse_instance(args.instance, float_mode=args.float_mode)
        if args.command == "oracle":
            _emit_result(solve_bruteforce(instance, cap=args.cap), args.json)
            return 0
        if args.command == "consistency":
            net = decompose_instance(instance, cap=args.cap)
            net, empty = enforce_strong_3_consistency(net)
            if args.json:
                print(json.dumps({"empty": empty,
                                  "network": net.dump().splitlines()}))
            else:
                print(f"empty {'true' if empty else 'false'}")
                print(net.dump())
            return 0
        ops = parse_ops(args.ops, instance.domains, validate=False)
        if args.command == "verify":
            try:
                ops.validate()
            except ValidationError as exc:
                print(f"violation ops {exc}")
                return 1
            ok, term, witness = check_instance_multimorphism(instance, ops, tol)
            if not ok:
                print(f"violation term {term + 1} {witness[0]} {witness[1]}")
                return 1
            print("ok")
            return 0
        if args.command == "solve":
            trace = []
            result = solve_pipeline(instance, ops, cap=args.cap,
                                    paranoid=args.paranoid, trace=trace,
                                    tol=tol)
            _write_trace(args, trace)
            _emit_result(result, args.json)
            return 0
        if args.command == "reduce":
            from .consistency import (restrict_instance, restrict_network,
                                      restrict_operation_system, support_maps,
                                      certify_decomposition)
            ops.validate()
            net = decompose_instance(instance, cap=args.cap)
            net, empty = enforce_strong_3_consistency(net)
            if empty:
                print("empty true")
                _write_trace(args, [])
                return 0
            if not certify_decomposition(net, instance, cap=args.cap):
                raise StageError("consistency",
                                 "decomposition certification failed")
            keep = support_maps(net)
            trace = []
            final = run_stage2(
                restrict_instance(instance, keep),
                restrict_operation_system(ops, keep).normalized(),
                restrict_network(net, keep),
                paranoid=args.paranoid, trace=trace, tol=tol)
            _write_trace(args, trace)
            for line in trace:
                print(line)
            print(serialize_ops(final), end="")
            return 0
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, StageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except VcspError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable command")


if __name__ == "__main__":
    sys.exit(main())
