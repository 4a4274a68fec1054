"""
Single-run command: one trial of either algorithm with an optional stage trace.
"""
import argparse
import math
import sys
from typing import Optional

from config import settings
from models.policy import ClusteringConfig, PolicyConfig
from services.clustering import get_cluster_map, validate_all
from services.elimination import EliminationPolicy, delay_bounds
from services.errors import AssumptionViolation
from services.gjl import run_gjl
from services.instance import cached_assumptions, draw_true_hypothesis, load_instance
from services.streams import make_stream
from services.trace import StageTraceLogger


def register(subparsers) -> None:
    run = subparsers.add_parser("run", help="Run one trial and print the result as JSON")
    run.add_argument("instance", help="Instance JSON path")
    run.add_argument("--algo", choices=["elim", "gjl"], default="elim")
    run.add_argument("--delta", type=float, required=True, help="Target error scale in (0, 1)")
    run.add_argument("--epsilon", type=float, default=0.0, help="Proximity threshold (squared distance)")
    run.add_argument("--min-pts", type=int, default=1)
    run.add_argument("--max-samples", type=int, default=None, help="Per-stage sample limit")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--trace", action="store_true", help="Print one JSON line per stage")
    run.set_defaults(handler=cmd_run)


def _finite(value: Optional[float]) -> Optional[float]:
    """JSON has no infinity; unbounded values are written as null."""
    return value if value is not None and math.isfinite(value) else None


def cmd_run(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    report = cached_assumptions(inst)
    if not report.a3_holds:
        raise AssumptionViolation(
            "instance violates validity: some pair is never separated",
            f"violating pairs: {report.violating_pairs}",
        )

    rng = make_stream(args.seed)
    true_h = draw_true_hypothesis(inst, rng)
    tracer = StageTraceLogger(sys.stdout) if args.trace else None
    on_stage = tracer.on_stage if tracer else None
    extra = {"delta": args.delta, "seed": args.seed}

    if args.algo == "gjl":
        result = run_gjl(inst, args.delta, true_h, rng, on_stage=on_stage)
    else:
        cfg = PolicyConfig(
            delta=args.delta,
            clustering=ClusteringConfig.uniform(args.epsilon, args.min_pts),
            max_samples_per_stage=(
                settings.max_samples_per_stage if args.max_samples is None else args.max_samples
            ),
        )
        cluster_map = get_cluster_map(inst, cfg.clustering)
        for check in validate_all(inst, cluster_map):
            if not check.uninformative and not check.certified:
                print(f"[CLI] Warning: epsilon={check.epsilon:g} on action {check.action} is not certified "
                      f"(min ΔD margin {check.margin:.4g} bits); stages on it may overrun", file=sys.stderr)

        policy = EliminationPolicy(inst, cfg, cluster_map)
        result = policy.run(true_h, rng, on_stage=on_stage)
        bounds = delay_bounds(inst, cfg, report)
        extra.update({
            "epsilon": args.epsilon,
            "gamma": bounds.gamma,
            "delay_lower_bound": _finite(bounds.lower),
            "delay_upper_bound": _finite(bounds.upper),
        })

    print(StageTraceLogger.result_line(result, extra))
    return 0
