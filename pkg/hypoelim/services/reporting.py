"""
Sweep output: the CSV artifact and the per-δ comparison report.
"""
import csv
import io
import math
from pathlib import Path
from typing import Dict, List, Optional

from pydantic import ValidationError

from models.experiment import (
    CellStats, CompareReport, DeltaComparison, ExperimentResult, RankedEntry,
)
from services.errors import InstanceFormatError, UsageError

CSV_COLUMNS = [
    "algorithm", "family", "delta", "epsilon", "trials", "errors", "p_e_hat",
    "p_e_wilson_upper", "mean_n", "stderr_n", "abr", "capped",
]
GJL_LABEL = "gjl-as-described"


# ─────────────────────────────────────────────────────────────────────────────
# CSV
# ─────────────────────────────────────────────────────────────────────────────

def _fmt(value) -> str:
    """Shortest round-trip text for floats; lowercase booleans."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_csv(result: ExperimentResult) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for cell in result.cells:
        writer.writerow([_fmt(getattr(cell, column)) for column in CSV_COLUMNS])
    return buffer.getvalue()


def write_csv(result: ExperimentResult, path: str | Path, force: bool = False) -> Path:
    target = Path(path)
    if target.exists() and not force:
        raise UsageError(f"refusing to overwrite {target}", "pass --force to overwrite")
    try:
        target.write_text(to_csv(result), encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot write {target}", str(e))
    return target


def _infer_hypotheses(rows: List[Dict[str, str]]) -> Optional[int]:
    """Recover H from abr = (δ/H²)·mean_n + p_e_hat on the first usable row."""
    for row in rows:
        delta, mean_n = float(row["delta"]), float(row["mean_n"])
        cost = float(row["abr"]) - float(row["p_e_hat"])
        if math.isfinite(mean_n) and cost > 0:
            return round(math.sqrt(delta * mean_n / cost))
    return None


def ordering_rank(algorithm: str, epsilon: float) -> int:
    """Expected mean-N order: clustered elimination 0, plain elimination 1, GJL 2."""
    if algorithm.startswith("gjl"):
        return 2
    return 0 if epsilon > 0 else 1


def read_csv(path: str | Path, hypotheses: Optional[int] = None) -> ExperimentResult:
    """Load a sweep CSV back into an ExperimentResult."""
    source = Path(path)
    try:
        text = source.read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {source}", str(e))

    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != CSV_COLUMNS:
        raise InstanceFormatError(f"{source} is not a sweep CSV", f"header: {reader.fieldnames}")
    rows = list(reader)
    H = hypotheses or _infer_hypotheses(rows)
    if H is None:
        if rows:
            raise UsageError(
                f"cannot infer the number of hypotheses from {source}",
                "no row has completed trials with a positive sample cost; pass --hypotheses",
            )
        H = 2

    cells = []
    try:
        for row in rows:
            epsilon = float(row["epsilon"])
            cells.append(CellStats(
                algorithm=row["algorithm"],
                family=row["family"],
                delta=float(row["delta"]),
                epsilon=epsilon,
                hypotheses=H,
                ordering_rank=ordering_rank(row["algorithm"], epsilon),
                trials=int(row["trials"]),
                errors=int(row["errors"]),
                p_e_hat=float(row["p_e_hat"]),
                p_e_wilson_upper=float(row["p_e_wilson_upper"]),
                mean_n=float(row["mean_n"]),
                stderr_n=float(row["stderr_n"]),
                abr=float(row["abr"]),
                capped=row["capped"] == "true",
            ))
    except (ValueError, ValidationError) as e:
        raise InstanceFormatError(f"{source} has an invalid row", str(e))

    family = cells[0].family if cells else ""
    return ExperimentResult(hypotheses=H, family=family, cells=cells)


# ─────────────────────────────────────────────────────────────────────────────
# COMPARISON
# ─────────────────────────────────────────────────────────────────────────────

def compare_report(result: ExperimentResult) -> CompareReport:
    """
    Per δ: algorithms sorted by mean_n with ratios to the best, and a note for
    every pair that breaks the expected order clustered < plain < GJL.
    Cells without completed trials are left out.
    """
    deltas: List[float] = []
    for cell in result.cells:
        if cell.delta not in deltas:
            deltas.append(cell.delta)

    comparisons = []
    for delta in deltas:
        cells = [c for c in result.cells if c.delta == delta and not math.isnan(c.mean_n)]
        if not cells:
            continue
        ranked = sorted(cells, key=lambda c: c.mean_n)
        best = ranked[0].mean_n
        comparisons.append(DeltaComparison(
            delta=delta,
            ranking=[
                RankedEntry(algorithm=c.algorithm, mean_n=c.mean_n, ratio_to_best=c.mean_n / best)
                for c in ranked
            ],
            ordering_violations=_violations(cells),
        ))
    return CompareReport(comparisons=comparisons)


def _violations(cells: List[CellStats]) -> List[str]:
    notes = []
    for low in cells:
        for high in cells:
            if low.ordering_rank < high.ordering_rank and low.mean_n >= high.mean_n:
                notes.append(
                    f"{low.algorithm} (mean N {low.mean_n:.4g}) is not below "
                    f"{high.algorithm} (mean N {high.mean_n:.4g})"
                )
    return notes


def format_report(report: CompareReport) -> str:
    """Plain-text table of a comparison report."""
    lines = []
    for comparison in report.comparisons:
        lines.append(f"delta = {comparison.delta:g}")
        width = max(len(e.algorithm) for e in comparison.ranking)
        for entry in comparison.ranking:
            lines.append(f"  {entry.algorithm:<{width}}  mean N {entry.mean_n:>14.6g}  x{entry.ratio_to_best:.4g}")
        for note in comparison.ordering_violations:
            lines.append(f"  ordering violated: {note}")
    verdict = "holds" if report.ordering_holds else "VIOLATED"
    lines.append(f"expected ordering (clustered < non-clustered < GJL): {verdict}")
    return "\n".join(lines)
