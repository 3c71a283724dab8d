from pathlib import Path
from typing import Iterable, Optional

from pydantic import BaseModel
from rich.console import Console
from rich.table import Table

from crossbid.base.errors import CrossbidIOError
from crossbid.harness.ablate import AblationReport
from crossbid.harness.evaluate import EvalReport
from crossbid.harness.xcorr import XCorrReport

console = Console()


def _num(x: Optional[float], digits: int = 3) -> str:
    return "-" if x is None else f"{x:.{digits}f}"


def _improve(x: Optional[float]) -> str:
    return "-" if x is None else f"{x:+.1f}%"


def write_jsonl(path: Path, records: Iterable[BaseModel]) -> Path:
    """One JSON object per line."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for record in records:
                f.write(record.model_dump_json() + "\n")
    except OSError as e:
        raise CrossbidIOError(f"cannot write report {path}: {e}") from e
    return path


def eval_table(report: EvalReport) -> Table:
    title = f"Evaluation of {report.checkpoint}"
    if report.baseline:
        title += f" against {report.baseline}"
    table = Table(title=title)
    for column in ("Budget", "Variant", "Loss", "Score", "Std", "Improve", "Value", "Cost", "CPA", "BC", "Penalty"):
        table.add_column(column, justify="right")
    for row in report.rows:
        table.add_row(
            f"{row.budget_ratio:.0%}",
            row.variant,
            row.loss_kind,
            _num(row.score),
            _num(row.score_std),
            _improve(row.improve),
            _num(row.total_value),
            _num(row.total_cost),
            _num(row.cpa),
            _num(row.bc),
            _num(min(row.penalties.values())),
        )
    return table


def ablation_table(report: AblationReport) -> Table:
    table = Table(title=f"Ablation at {report.budget_ratio:.0%} budget")
    for column in ("Row", "Variant", "Loss", "Params", "Score", "Improve", "Status", "Fingerprint"):
        table.add_column(column)
    for row in report.rows:
        table.add_row(
            f"({row.label})", row.variant, row.loss_kind, str(row.parameters),
            _num(row.score), _improve(row.improve), row.status, row.fingerprint,
        )
    return table


def xcorr_table(report: XCorrReport) -> Table:
    table = Table(title="Matched vs shuffled first-block embeddings")
    for column in ("Variant", "Samples", "Mean", "Median", "Std", "Min", "Max", "Replacement"):
        table.add_column(column)
    for summary in (report.clb, report.vanilla):
        table.add_row(
            summary.variant, str(summary.samples), _num(summary.mean), _num(summary.median),
            _num(summary.std), _num(summary.min), _num(summary.max), str(summary.with_replacement),
        )
    return table


def show(table: Table, note: Optional[str] = None) -> None:
    console.print(table)
    if note:
        console.print(note)
