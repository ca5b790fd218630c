"""
Per-event experiments.

For one event: assemble the binary window dataset (event episodes plus normal
episodes), split it, train RF and TCN models for classification and
regression, score them on held-out windows and write models, report and
traces.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..api.model_store import ModelStore
from ..core.types import WINDOW_LEN, Episode, EventType, Source, Task, Window, validate_episode
from ..data.ingestion import (
    Catalog,
    ColumnMapping,
    FeatureMask,
    load_catalog_episodes,
    prepare_episode,
    select_features,
)
from ..data.labeling import segment
from ..errors import EpisodeTooShort, EventKiwiError, InsufficientData
from ..learn import tcn
from ..learn.features import apply_normalizer, extract_batch, fit_normalizer
from ..learn.forest import ForestParams, fit_forest, predict_batch
from ..learn.metrics import classification_scores, rmse_mae
from ..learn.tcn import TcnConfig
from .report import emit_report

logger = logging.getLogger(__name__)

Method = Literal["rf", "tcn"]
DataSource = Literal["real", "simulated", "synthetic", "all"]

SPLIT_TOL = 1e-9
SPLIT_DRAWS = 100


def _check_fractions(value: Tuple[float, ...]) -> Tuple[float, ...]:
    if any(f <= 0 for f in value):
        raise ValueError("split fractions must be positive")
    if abs(sum(value) - 1.0) > SPLIT_TOL:
        raise ValueError(f"split fractions must sum to 1, got {sum(value)}")
    return value


class ExperimentSettings(BaseModel):
    """The [experiment] section of a config file."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    event: EventType = EventType.SPURIOUS_DHSV_CLOSURE
    source: DataSource = "all"
    seed: int = 0
    output_dir: Optional[Path] = None
    data_root: Optional[Path] = None
    methods: Tuple[Method, ...] = ("rf", "tcn")
    tasks: Tuple[Task, ...] = (Task.CLASSIFY, Task.REGRESS)
    group_by_episode: bool = False
    window_len: int = Field(default=WINDOW_LEN, ge=2)
    stride: int = Field(default=WINDOW_LEN, ge=1)
    rf_split: Tuple[float, float] = (0.8, 0.2)
    tcn_split: Tuple[float, float, float] = (0.7, 0.1, 0.2)

    @field_validator("rf_split", "tcn_split")
    @classmethod
    def _fractions(cls, value: Tuple[float, ...]) -> Tuple[float, ...]:
        return _check_fractions(value)

    @property
    def sources(self) -> Optional[List[Source]]:
        return None if self.source == "all" else [Source(self.source)]


class ExperimentConfig(ExperimentSettings):
    forest: ForestParams = Field(default_factory=ForestParams)
    tcn: TcnConfig = Field(default_factory=TcnConfig)
    columns: ColumnMapping = Field(default_factory=ColumnMapping)


@dataclass(frozen=True)
class TraceRow:
    episode_id: str
    minute: int
    target: float
    prediction: float


@dataclass
class ReportRow:
    event: int
    method: str
    task: Task
    n_train: int
    n_val: int
    n_test: int
    seed: int
    precision: Optional[float] = None
    recall: Optional[float] = None
    f1: Optional[float] = None
    rmse: Optional[float] = None
    mae: Optional[float] = None
    trace: List[TraceRow] = field(default_factory=list, repr=False)

    @property
    def key(self) -> Tuple[int, str, str]:
        return self.event, self.method, self.task.value


@dataclass
class ExperimentResult:
    rows: List[ReportRow]
    failures: List[Dict[str, Any]]
    mask: FeatureMask
    counts: Dict[str, int]
    files: Dict[str, str] = field(default_factory=dict)
    train_reports: Dict[str, Dict[str, Any]] = field(default_factory=dict)


def load_event_episodes(
    source: Union[Catalog, Sequence[Episode]],
    event: EventType,
    mapping: Optional[ColumnMapping] = None,
    sources: Optional[Sequence[Source]] = None,
) -> List[Episode]:
    """This event's episodes plus normal episodes that pass validation."""
    if isinstance(source, Catalog):
        episodes = load_catalog_episodes(source, mapping, events=[event, None], sources=sources)
    else:
        episodes = [
            ep
            for ep in source
            if ep.event in (event, None) and (sources is None or ep.source in sources)
        ]
    valid = []
    for ep in episodes:
        violations = validate_episode(ep)
        if violations:
            logger.warning(f"Skipping invalid episode {ep.id}: {[str(v) for v in violations[:3]]}")
            continue
        valid.append(ep)
    return valid


def _class_counts(windows: Sequence[Window]) -> Dict[str, int]:
    positives = sum(1 for w in windows if w.class_label)
    return {"positive": positives, "negative": len(windows) - positives}


def _has_both_classes(windows: Sequence[Window]) -> bool:
    counts = _class_counts(windows)
    return counts["positive"] > 0 and counts["negative"] > 0


def build_event_dataset(
    source: Union[Catalog, Sequence[Episode]],
    event: EventType,
    mask: Optional[FeatureMask] = None,
    mapping: Optional[ColumnMapping] = None,
    window_len: int = WINDOW_LEN,
    stride: int = WINDOW_LEN,
    sources: Optional[Sequence[Source]] = None,
) -> List[Window]:
    """
    Windows of the event's episodes and of normal episodes, labeled by their
    last second. Pre-transient minutes of event episodes are negatives.
    """
    event = EventType(event)
    episodes = load_event_episodes(source, event, mapping, sources)
    n_event = sum(1 for ep in episodes if ep.event == event)
    if n_event == 0:
        raise InsufficientData(
            f"No usable episodes for event {event.code}",
            {"event_episodes": 0, "normal_episodes": len(episodes)},
        )
    mask = mask or select_features(episodes, (mapping or ColumnMapping()).empty_threshold)

    windows: List[Window] = []
    for ep in episodes:
        try:
            windows.extend(segment(prepare_episode(ep, mask), window_len, stride))
        except EpisodeTooShort as e:
            logger.warning(f"Skipping {ep.id}: {e.message}")
    counts = _class_counts(windows)
    if counts["positive"] == 0 or counts["negative"] == 0:
        raise InsufficientData(
            f"Event {event.code} dataset needs both classes, got {counts}", counts
        )
    logger.info(
        f"Event {event.code} dataset: {len(windows)} windows {counts} "
        f"from {len(episodes)} episodes"
    )
    return windows


def prepare_event_windows(
    config: ExperimentConfig, source: Union[Catalog, Sequence[Episode]]
) -> Tuple[FeatureMask, List[Window]]:
    """The feature mask and window dataset an experiment trains on."""
    event_episodes = load_event_episodes(source, config.event, config.columns, config.sources)
    mask = select_features(event_episodes, config.columns.empty_threshold)
    windows = build_event_dataset(
        event_episodes, config.event, mask, config.columns, config.window_len, config.stride
    )
    return mask, windows


def _split_sizes(n: int, fractions: Sequence[float]) -> List[int]:
    sizes = [int(np.floor(f * n + SPLIT_TOL)) for f in fractions[:-1]]
    sizes.append(n - sum(sizes))
    return sizes


def split_windows(
    windows: Sequence[Window],
    fractions: Sequence[float],
    seed: int,
    group_by_episode: bool = False,
    both_classes: bool = False,
) -> List[List[Window]]:
    """
    Seeded shuffle then contiguous partition. With group_by_episode the unit
    being shuffled and partitioned is the episode, so no episode spans splits.

    With both_classes, a draw that leaves some part without a positive or a
    negative window is discarded and the next permutation of the same seeded
    stream is tried, up to SPLIT_DRAWS times. The first draw is the one taken
    without the flag. No valid draw raises InsufficientData.
    """
    _check_fractions(tuple(fractions))
    rng = np.random.Generator(np.random.PCG64(seed))

    if group_by_episode:
        ids = sorted({w.episode_id for w in windows})
        by_episode: Dict[str, List[Window]] = {}
        for w in windows:
            by_episode.setdefault(w.episode_id, []).append(w)
        units = [by_episode[eid] for eid in ids]
    else:
        units = [[w] for w in windows]
    sizes = _split_sizes(len(units), fractions)

    for draw in range(SPLIT_DRAWS if both_classes else 1):
        order = rng.permutation(len(units))
        splits, at = [], 0
        for size in sizes:
            splits.append([w for i in order[at : at + size] for w in units[i]])
            at += size

        if any(len(s) == 0 for s in splits):
            raise InsufficientData(
                f"Split {list(fractions)} of {len(windows)} windows leaves an empty part",
                {f"split_{i}": len(s) for i, s in enumerate(splits)},
            )
        if not both_classes or all(_has_both_classes(s) for s in splits):
            if draw:
                logger.info(f"Split seed {seed}: draw {draw + 1} has both classes in every part")
            return splits

    raise InsufficientData(
        f"No split {list(fractions)} of {len(windows)} windows in {SPLIT_DRAWS} draws "
        "gives every part both classes",
        {**_class_counts(windows), "draws": SPLIT_DRAWS},
    )


def _time_ordered(windows: Sequence[Window]) -> List[Window]:
    return sorted(windows, key=lambda w: (w.episode_id, w.start))


def window_targets(windows: Sequence[Window], task: Task) -> np.ndarray:
    if task == Task.CLASSIFY:
        return np.array([1.0 if w.class_label else 0.0 for w in windows])
    return np.array([w.prob_target for w in windows], dtype=np.float64)


def score_row(
    event: EventType,
    method: str,
    task: Task,
    test: Sequence[Window],
    predictions: np.ndarray,
    sizes: Tuple[int, int, int],
    seed: int,
) -> ReportRow:
    targets = window_targets(test, task)
    row = ReportRow(
        event=EventType(event).code,
        method=method,
        task=task,
        n_train=sizes[0],
        n_val=sizes[1],
        n_test=sizes[2],
        seed=seed,
        trace=[
            TraceRow(w.episode_id, w.minute, float(t), float(p))
            for w, t, p in zip(test, targets, predictions)
        ],
    )
    if task == Task.CLASSIFY:
        _, (row.precision, row.recall, row.f1) = classification_scores(predictions, targets >= 0.5)
    else:
        row.rmse, row.mae = rmse_mae(predictions, targets)
    return row


def forest_params_for(config: ExperimentConfig, task: Task) -> ForestParams:
    return config.forest.model_copy(update={"task": task, "seed": config.seed})


def tcn_config_for(config: ExperimentConfig, task: Task) -> TcnConfig:
    return config.tcn.model_copy(update={"task": task, "seed": config.seed})


def run_forest_arm(
    config: ExperimentConfig, task: Task, windows: Sequence[Window], mask: FeatureMask
):
    train, test = split_windows(
        windows, config.rf_split, config.seed, config.group_by_episode, both_classes=True
    )
    test = _time_ordered(test)

    x_train = extract_batch(train)
    normalizer = fit_normalizer(x_train)
    model = fit_forest(
        apply_normalizer(normalizer, x_train),
        window_targets(train, task),
        forest_params_for(config, task),
        normalizer=normalizer,
        feature_mask=mask,
    )
    predictions = predict_batch(model, apply_normalizer(normalizer, extract_batch(test)))
    sizes = (len(train), 0, len(test))
    row = score_row(config.event, "RF", task, test, predictions, sizes, config.seed)
    return model, row, None


def run_tcn_arm(config: ExperimentConfig, task: Task, windows: Sequence[Window], mask: FeatureMask):
    train, val, test = split_windows(
        windows, config.tcn_split, config.seed, config.group_by_episode, both_classes=True
    )
    test = _time_ordered(test)

    model, report = tcn.train(train, val, tcn_config_for(config, task), feature_mask=mask)
    predictions = tcn.predict_windows(model, test)
    row = score_row(
        config.event, "TCN", task, test, predictions, (len(train), len(val), len(test)), config.seed
    )
    return model, row, report


ARMS = {"rf": run_forest_arm, "tcn": run_tcn_arm}


def run_experiment(
    config: ExperimentConfig,
    episodes: Optional[Sequence[Episode]] = None,
    catalog: Optional[Catalog] = None,
    output_dir: Optional[Union[str, Path]] = None,
) -> ExperimentResult:
    """
    Train and score every configured (method, task) arm for one event.

    A failing arm is logged and recorded in failures.json; the other arms
    still run and are written.
    """
    source = episodes if episodes is not None else catalog
    if source is None:
        raise InsufficientData("run_experiment needs episodes or a catalog", {})
    mask, windows = prepare_event_windows(config, source)

    out = Path(output_dir or config.output_dir or ".")
    store = ModelStore(out / "models")
    rows: List[ReportRow] = []
    failures: List[Dict[str, Any]] = []
    train_reports: Dict[str, Dict[str, Any]] = {}

    for method in config.methods:
        for task in config.tasks:
            arm = f"{method}_{task.value}"
            try:
                model, row, report = ARMS[method](config, task, windows, mask)
            except EventKiwiError as e:
                logger.error(f"Arm {arm} failed: {e.message}")
                failures.append({"method": method, "task": task.value, **e.to_dict()})
                continue
            except Exception as e:
                logger.error(f"Arm {arm} failed unexpectedly: {e}")
                failures.append(
                    {
                        "method": method,
                        "task": task.value,
                        "code": "EXECUTION_ERROR",
                        "message": str(e),
                    }
                )
                continue
            store.save(model, config.event)
            rows.append(row)
            if report is not None:
                train_reports[arm] = report.to_dict()

    result = ExperimentResult(
        rows=rows,
        failures=failures,
        mask=mask,
        counts=_class_counts(windows),
        train_reports=train_reports,
    )
    if rows:
        result.files = emit_report(rows, out)
    if failures:
        failures_path = out / "failures.json"
        failures_path.write_text(json.dumps(failures, indent=2) + "\n", encoding="utf-8")
        result.files["failures"] = str(failures_path)
    if train_reports:
        reports_path = out / "train_reports.json"
        reports_path.write_text(json.dumps(train_reports, indent=2) + "\n", encoding="utf-8")
        result.files["train_reports"] = str(reports_path)
    logger.info(
        f"Experiment for event {config.event.code}: {len(rows)} rows, {len(failures)} failures"
    )
    return result
