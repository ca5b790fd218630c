"""
Report and trace files.

report.csv has one row per event x method x task with the columns in
REPORT_COLUMNS; metric cells of the other task stay blank. Each row also gets
trace_event{e}_{method}_{task}.csv with one line per test window in
(episode_id, minute) order. Floats are written with repr precision so metrics
recompute exactly from a trace.
"""

import logging
from pathlib import Path
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Union

import pandas as pd

from ..core.types import Task
from ..errors import EmptyInput, IoFailure
from ..learn.metrics import classification_scores, rmse_mae

if TYPE_CHECKING:
    from .experiment import ReportRow

logger = logging.getLogger(__name__)

REPORT_COLUMNS = [
    "event",
    "method",
    "task",
    "precision",
    "recall",
    "f1",
    "rmse",
    "mae",
    "n_train",
    "n_val",
    "n_test",
    "seed",
]
TRACE_COLUMNS = ["episode_id", "minute", "target", "prediction"]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    if isinstance(value, Task):
        return value.value
    return str(value)


def trace_filename(row: "ReportRow") -> str:
    return f"trace_event{row.event}_{row.method.lower()}_{Task(row.task).value}.csv"


def _write_csv(frame: pd.DataFrame, path: Path) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, lineterminator="\n")
    except OSError as e:
        raise IoFailure(f"Could not write {path}: {e}", {"path": str(path)}) from e


def emit_report(rows: Sequence["ReportRow"], out_dir: Union[str, Path]) -> Dict[str, str]:
    """Write report.csv and one trace per row; returns {name: path}."""
    if not rows:
        raise EmptyInput("emit_report needs at least one row")
    out_dir = Path(out_dir)
    ordered = sorted(rows, key=lambda r: (r.event, r.method, Task(r.task).value))

    table = pd.DataFrame(
        [[_cell(getattr(row, column)) for column in REPORT_COLUMNS] for row in ordered],
        columns=REPORT_COLUMNS,
        dtype=str,
    )
    report_path = out_dir / "report.csv"
    _write_csv(table, report_path)
    files = {"report": str(report_path)}

    for row in ordered:
        trace = pd.DataFrame(
            [
                [t.episode_id, str(t.minute), repr(float(t.target)), repr(float(t.prediction))]
                for t in row.trace
            ],
            columns=TRACE_COLUMNS,
            dtype=str,
        )
        path = out_dir / trace_filename(row)
        _write_csv(trace, path)
        files[path.stem] = str(path)
    logger.info(f"Wrote report with {len(ordered)} rows to {report_path}")
    return files


def read_report(path: Union[str, Path]) -> pd.DataFrame:
    """Report as strings, so rewriting it reproduces the same bytes."""
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False)
    except OSError as e:
        raise IoFailure(f"Could not read {path}: {e}", {"path": str(path)}) from e



def read_trace(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(
        path,
        dtype={"episode_id": str, "minute": int, "target": float, "prediction": float},
        float_precision="round_trip",
    )


def recompute_metrics(trace: pd.DataFrame, task: Task) -> Dict[str, float]:
    """Metrics from a trace, computed the way the report row was."""
    predictions = trace["prediction"].to_numpy()
    targets = trace["target"].to_numpy()
    if Task(task) == Task.CLASSIFY:
        _, (p, r, f1) = classification_scores(predictions, targets >= 0.5)
        return {"precision": p, "recall": r, "f1": f1}
    rmse, mae = rmse_mae(predictions, targets)
    return {"rmse": rmse, "mae": mae}


def aggregate_reports(
    paths: Sequence[Union[str, Path]], out: Optional[Union[str, Path]] = None
) -> pd.DataFrame:
    """Concatenate per-event reports into one table sorted by (event, method, task)."""
    frames: List[pd.DataFrame] = []
    for path in paths:
        frame = read_report(path)
        missing = [c for c in REPORT_COLUMNS if c not in frame.columns]
        if missing:
            raise IoFailure(f"{path} is not a report file, missing {missing}", {"path": str(path)})
        frames.append(frame[REPORT_COLUMNS])
    if not frames:
        raise EmptyInput("aggregate_reports needs at least one report file")
    table = pd.concat(frames, ignore_index=True)
    table = table.assign(_event=table["event"].astype(int))
    table = table.sort_values(["_event", "method", "task"], kind="stable").drop(columns="_event")
    table = table.drop_duplicates().reset_index(drop=True)
    if out is not None:
        _write_csv(table, Path(out))
        logger.info(f"Aggregated {len(paths)} reports ({len(table)} rows) into {out}")
    return table
