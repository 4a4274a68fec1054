"""
Experiment commands.

Handles:
- sweep: Monte-Carlo sweep over algorithms and a δ grid, written as CSV
- report: comparison table of an existing sweep CSV
"""
import argparse
import sys
from pathlib import Path
from typing import List

from pydantic import ValidationError

from models.experiment import AlgorithmSpec, ExperimentConfig
from services.errors import InstanceFormatError, UsageError
from services.harness import BENCHMARK_DELTAS, benchmark_sweep_config, sweep
from services.instance import load_instance
from services.reporting import compare_report, format_report, read_csv, write_csv

DEFAULT_ALGOS = "elim,elim:0.1,gjl"


def register(subparsers) -> None:
    sw = subparsers.add_parser("sweep", help="Run a Monte-Carlo sweep and write a CSV")
    sw.add_argument("instance", nargs="?", help="Instance JSON path (optional with --config)")
    sw.add_argument("--config", help="Experiment JSON (mirrors ExperimentConfig)")
    sw.add_argument("--preset", action="store_true",
                    help="Use the benchmark algorithm set for the instance's H")
    sw.add_argument("--deltas", default=",".join(repr(d) for d in BENCHMARK_DELTAS),
                    help="Comma-separated δ grid")
    sw.add_argument("--algos", default=DEFAULT_ALGOS, help="Comma-separated: gjl, elim, elim:<epsilon>")
    sw.add_argument("--trials", type=int, default=None, help="Trials per cell")
    sw.add_argument("--seed", type=int, default=0, help="Master seed")
    sw.add_argument("--workers", type=int, default=None,
                    help="Worker processes (default: HYPOELIM_WORKERS, then CPU count)")
    sw.add_argument("--cap", type=int, default=None, help="Per-trial sample cap")
    sw.add_argument("--out", required=True, help="CSV path")
    sw.add_argument("--force", action="store_true", help="Overwrite --out")
    sw.set_defaults(handler=cmd_sweep)

    rep = subparsers.add_parser("report", help="Compare algorithms in a sweep CSV")
    rep.add_argument("csv", help="Sweep CSV path")
    rep.add_argument("--hypotheses", type=int, default=None,
                     help="H of the swept instance (inferred from the abr column when omitted)")
    rep.set_defaults(handler=cmd_report)


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise UsageError("--deltas must be comma-separated numbers", str(e))


def _algorithms(text: str) -> List[AlgorithmSpec]:
    try:
        return [AlgorithmSpec.parse(token) for token in text.split(",") if token.strip()]
    except (ValueError, ValidationError) as e:
        raise UsageError("invalid --algos", str(e))


def _experiment(args: argparse.Namespace) -> ExperimentConfig:
    if args.config:
        path = Path(args.config)
        try:
            config = ExperimentConfig.model_validate_json(path.read_text(encoding="utf-8"))
        except OSError as e:
            raise UsageError(f"cannot read {path}", str(e))
        except ValidationError as e:
            raise InstanceFormatError(f"{path} is not a valid experiment", str(e))
        if args.instance:
            config = config.model_copy(update={"instance_path": args.instance})
        return config

    if not args.instance:
        raise UsageError("sweep needs an instance path or --config")
    if args.preset:
        inst = load_instance(args.instance)
        return benchmark_sweep_config(
            hypotheses=inst.hypotheses,
            instance_path=args.instance,
            delta_grid=_floats(args.deltas),
            master_seed=args.seed,
            trials_per_cell=args.trials,
            trial_cap_runtime=args.cap,
        )
    try:
        return ExperimentConfig(
            instance_path=args.instance,
            algorithms=_algorithms(args.algos),
            delta_grid=_floats(args.deltas),
            trials_per_cell=args.trials,
            master_seed=args.seed,
            trial_cap_runtime=args.cap,
        )
    except ValidationError as e:
        raise UsageError("invalid sweep flags", str(e))


def cmd_sweep(args: argparse.Namespace) -> int:
    out = Path(args.out)
    if out.exists() and not args.force:
        raise UsageError(f"refusing to overwrite {out}", "pass --force to overwrite")

    config = _experiment(args)
    result = sweep(config, workers=args.workers)
    write_csv(result, out, force=True)
    print(f"[CLI] Wrote {len(result.cells)} rows to {out}", file=sys.stderr)
    if result.cells:
        print(format_report(compare_report(result)))
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    result = read_csv(args.csv, hypotheses=args.hypotheses)
    print(format_report(compare_report(result)))
    return 0
