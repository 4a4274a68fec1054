"""
Instance commands.

Handles:
- gen: write a benchmark instance
- verify: check separation and validity, print the assumption report
"""
import argparse
import json
import sys

from models.instance import Family
from services.instance import generate_paper_instance, load_instance, save_instance, verify_assumptions


def register(subparsers) -> None:
    gen = subparsers.add_parser("gen", help="Generate a benchmark instance")
    gen.add_argument("--hypotheses", type=int, required=True, help="Number of hypotheses H (>= 2)")
    gen.add_argument("--family", default="normal", type=Family.from_cli,
                     help="normal or exponential")
    gen.add_argument("--seed", type=int, default=0, help="Seed for the random means")
    gen.add_argument("--out", required=True, help="Instance JSON path")
    gen.set_defaults(handler=cmd_gen)

    verify = subparsers.add_parser("verify", help="Check assumptions of an instance")
    verify.add_argument("instance", help="Instance JSON path")
    verify.add_argument("--alpha-floor", type=float, default=0.0,
                        help="Separation fails unless the smallest non-zero KLD exceeds this")
    verify.set_defaults(handler=cmd_verify)


def cmd_gen(args: argparse.Namespace) -> int:
    inst = generate_paper_instance(args.hypotheses, args.family, args.seed)
    path = save_instance(inst, args.out)
    print(json.dumps({
        "hypotheses": inst.hypotheses,
        "actions": inst.num_actions,
        "family": args.family.value,
        "out": str(path),
    }))
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    report = verify_assumptions(inst, alpha_floor=args.alpha_floor)
    print(report.model_dump_json())
    if report.holds:
        return 0
    if not report.a3_holds:
        print(f"[CLI] Validity fails for pairs {report.violating_pairs}", file=sys.stderr)
    if not report.a1_holds:
        print(f"[CLI] Separation fails (alpha={report.alpha}, "
              f"uninformative actions {report.uninformative_actions})", file=sys.stderr)
    return 1
