"""
Predict tool: stream an episode CSV through a saved model.

The file is read in chunks into a single window buffer; every completed
window is scored and written at once, so memory stays bounded by one window.
Scores match batch evaluation of the same windows bit for bit; the only
difference from batch preparation is that a gap at the very start of a
channel takes the training median instead of the first later reading.
"""

import csv
import logging
from collections import deque
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..api.model_store import Model, load_model, model_method, model_task
from ..core.types import SECONDS_PER_MINUTE, WINDOW_LEN
from ..data.ingestion import ColumnMapping, parse_numeric
from ..errors import EmptyFile, EpisodeTooShort, LengthMismatch, MalformedHeader
from ..harness.report import TRACE_COLUMNS
from ..learn import tcn
from ..learn.features import N_STATS, apply_normalizer, extract_stats
from ..learn.forest import ForestModel, predict_batch
from .base import BaseTool, config_from_params

logger = logging.getLogger(__name__)


def model_channels(
    model: Model, mapping: ColumnMapping
) -> Tuple[Tuple[str, ...], Dict[str, float]]:
    """Channels the model reads, in order, and their fill values."""
    if model.feature_mask is not None:
        kept, fill_values = model.feature_mask.kept, dict(model.feature_mask.fill_values)
    else:
        kept, fill_values = tuple(mapping.channels), {}
    expected = model.n_features // N_STATS if isinstance(model, ForestModel) else model.n_inputs
    if len(kept) != expected:
        raise LengthMismatch(
            f"Model reads {expected} channels but its feature mask lists {len(kept)}",
            {"expected": expected, "kept": list(kept)},
        )
    return kept, fill_values


def window_scorer(model: Model) -> Callable[[np.ndarray], float]:
    """Score one raw T x C window the way batch evaluation does."""
    if isinstance(model, ForestModel):

        def score(window: np.ndarray) -> float:
            x = extract_stats(window)[None, :]
            if model.normalizer is not None:
                x = apply_normalizer(model.normalizer, x)
            return float(predict_batch(model, x)[0])

        return score

    def score_tcn(window: np.ndarray) -> float:
        return tcn.score_window(model, window)

    return score_tcn


def _check_header(path: Path, mapping: ColumnMapping, kept: Tuple[str, ...]) -> None:
    try:
        header = [str(c).strip() for c in pd.read_csv(path, nrows=0).columns]
    except pd.errors.EmptyDataError:
        raise EmptyFile(f"{path} is empty", {"path": str(path)}) from None
    if mapping.timestamp not in header:
        raise MalformedHeader(
            f"{path}: header needs a '{mapping.timestamp}' column",
            {"path": str(path), "header": header},
        )
    columns = [mapping.channels.get(name, name) for name in kept]
    absent = [c for c in columns if c not in header]
    if absent:
        raise LengthMismatch(
            f"{path}: model channels {absent} are not in the CSV header",
            {"path": str(path), "missing": absent, "header": header},
        )


class _Timestamps:
    """Seconds since the first row, parsed chunk by chunk like load_episode_csv."""

    def __init__(self, path: Path):
        self.path = path
        self.origin = None
        self.numeric: Optional[bool] = None
        self.rows = 0

    def __call__(self, column: pd.Series) -> np.ndarray:
        numeric = pd.to_numeric(column, errors="coerce")
        if self.numeric is None:
            self.numeric = not numeric.isna().any()
        if self.numeric:
            if numeric.isna().any():
                self._bad(numeric.isna())
            seconds = numeric.to_numpy(dtype=np.float64).round().astype(np.int64)
            if self.origin is None:
                self.origin = seconds[0]
            result = seconds - self.origin
        else:
            parsed = pd.to_datetime(column, errors="coerce")
            if parsed.isna().any():
                self._bad(parsed.isna())
            if self.origin is None:
                self.origin = parsed.iloc[0]
            result = np.round((parsed - self.origin).dt.total_seconds().to_numpy()).astype(np.int64)
        self.rows += len(column)
        return result

    def _bad(self, flags: pd.Series) -> None:
        row = self.rows + int(flags.to_numpy().argmax())
        raise MalformedHeader(
            f"{self.path}: unparsable timestamp at row {row}", {"path": str(self.path), "row": row}
        )


def predict_stream(
    model_path: Union[str, Path],
    csv_path: Union[str, Path],
    out_path: Union[str, Path],
    mapping: Optional[ColumnMapping] = None,
    window_len: int = WINDOW_LEN,
    stride: int = WINDOW_LEN,
) -> Dict[str, Any]:
    """
    Write one (episode_id, minute, target, prediction) row per completed
    window in arrival order; target stays blank.

    A header that does not carry the model's channels raises LengthMismatch
    before anything is written. Fewer samples than one window raises
    EpisodeTooShort and leaves no output file.
    """
    model = load_model(model_path)
    csv_path, out_path = Path(csv_path), Path(out_path)
    mapping = mapping or ColumnMapping()
    kept, fill_values = model_channels(model, mapping)
    _check_header(csv_path, mapping, kept)
    score = window_scorer(model)

    columns = [mapping.channels.get(name, name) for name in kept]
    last = np.array([fill_values.get(name, 0.0) for name in kept], dtype=np.float64)
    seen = np.zeros(len(kept), dtype=bool)
    buffer: deque = deque(maxlen=window_len)
    starts: deque = deque(maxlen=window_len)
    timestamps = _Timestamps(csv_path)
    episode_id = csv_path.stem
    n_rows = n_windows = 0

    out_path.parent.mkdir(parents=True, exist_ok=True)
    partial = out_path.with_name(out_path.name + ".part")
    try:
        with open(partial, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(TRACE_COLUMNS)
            reader = pd.read_csv(csv_path, dtype=str, keep_default_na=False, chunksize=window_len)
            for chunk in reader:
                chunk.columns = [str(c).strip() for c in chunk.columns]
                seconds = timestamps(chunk[mapping.timestamp])
                block = np.empty((len(chunk), len(kept)))
                for j, column in enumerate(columns):
                    block[:, j] = parse_numeric(chunk[column])

                for t, row in zip(seconds, block):
                    observed = np.isfinite(row)
                    last = np.where(observed, row, last)
                    seen |= observed
                    buffer.append(last)
                    starts.append(int(t))
                    n_rows += 1
                    if n_rows >= window_len and (n_rows - window_len) % stride == 0:
                        prediction = score(np.array(buffer))
                        minute = starts[0] // SECONDS_PER_MINUTE
                        writer.writerow([episode_id, minute, "", repr(float(prediction))])
                        n_windows += 1

        if n_windows == 0:
            raise EpisodeTooShort(
                f"Episode '{episode_id}' has {n_rows} samples, needs {window_len}",
                {"episode_id": episode_id, "length": n_rows, "window_len": window_len},
            )
        partial.replace(out_path)
    finally:
        if partial.exists():
            partial.unlink()

    unseen = [name for name, flag in zip(kept, seen) if not flag]
    if unseen:
        logger.warning(f"{episode_id}: channels {unseen} never observed, used the training median")
    logger.info(f"Scored {n_windows} windows of {episode_id} into {out_path}")
    return {
        "episode_id": episode_id,
        "method": model_method(model),
        "task": model_task(model).value,
        "samples": n_rows,
        "windows": n_windows,
        "path": str(out_path),
    }


class PredictTool(BaseTool):
    """Stream an episode CSV through a saved model."""

    name = "predict"

    def run(self, params: Dict[str, Any]) -> Dict[str, Any]:
        config = config_from_params(params)
        csv_path = Path(params["input"])
        out = Path(params.get("out") or ".")
        out_path = out if out.suffix == ".csv" else out / f"predict_{csv_path.stem}.csv"
        return predict_stream(
            params["model"],
            csv_path,
            out_path,
            mapping=config.columns,
            window_len=config.experiment.window_len,
            stride=config.experiment.stride,
        )
