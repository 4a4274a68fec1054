"""
Stage trace logger - one JSON line per stage of a run.

Pass `StageTraceLogger.on_stage` as the stage callback of a run; it writes
each stage as it completes. Cells are timed with TaskTimer.
"""
import json
import sys
import time
from typing import Any, Dict, List, Optional, TextIO

from models.policy import RunResult, StageRecord


class StageTraceLogger:
    """Write stage records as JSON lines."""

    def __init__(self, stream: Optional[TextIO] = None, run_label: Optional[str] = None):
        self.stream = stream or sys.stdout
        self.run_label = run_label
        self.records: List[StageRecord] = []

    def on_stage(self, record: StageRecord) -> None:
        self.records.append(record)
        self.log_stage(record)

    def log_stage(self, record: StageRecord) -> None:
        """
        One trace line with the stage's action, τ, winner and alive sets.

        The run label is added when set, so traces of several runs can share
        one stream.
        """
        line: Dict[str, Any] = {"type": "stage", **record.model_dump()}
        if self.run_label:
            line["run"] = self.run_label
        self.stream.write(json.dumps(line) + "\n")
        self.stream.flush()

    @staticmethod
    def result_line(result: RunResult, extra: Optional[Dict[str, Any]] = None) -> str:
        """Summary line of a finished run (stages omitted; they are traced separately)."""
        payload: Dict[str, Any] = {
            "type": "result",
            "algorithm": result.algorithm,
            "declared": result.declared,
            "true_hypothesis": result.true_hypothesis,
            "total_samples": result.total_samples,
            "correct": result.correct,
            "stages": len(result.stages),
        }
        if extra:
            payload.update(extra)
        return json.dumps(payload)


class TaskTimer:
    """Context manager for timing a cell or a run."""

    def __init__(self):
        self.start_time = None
        self.execution_time_ms = 0

    def __enter__(self):
        self.start_time = time.perf_counter()
        return self

    def __exit__(self, *args):
        self.execution_time_ms = int((time.perf_counter() - self.start_time) * 1000)
