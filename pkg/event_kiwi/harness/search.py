"""
Hyper-parameter search on the validation split.

Points are scored on the train/validation parts of the TCN split (f1 for
classification, rmse for regression). The leaderboard is ordered best first;
ties keep grid order.
"""

import itertools
import logging
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..core.types import Task, Window
from ..errors import ConfigError, EmptyGrid
from ..learn import tcn
from ..learn.features import apply_normalizer, extract_batch, fit_normalizer
from ..learn.forest import ForestParams, fit_forest, predict_batch
from ..learn.metrics import classification_scores, rmse_mae
from .experiment import (
    ExperimentConfig,
    forest_params_for,
    split_windows,
    tcn_config_for,
    window_targets,
)

logger = logging.getLogger(__name__)


class GridSettings(BaseModel):
    """The [grid] section: parameter lists per method/task."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    method: Literal["rf", "tcn"] = "rf"
    task: Task = Task.CLASSIFY
    params: Dict[str, List[Any]] = Field(default_factory=dict)
    random_iter: int = Field(default=0, ge=0)


def grid_points(space: Dict[str, Sequence[Any]]) -> List[Dict[str, Any]]:
    if not space or any(len(values) == 0 for values in space.values()):
        raise EmptyGrid("Search space is empty", {"space": {k: list(v) for k, v in space.items()}})
    keys = list(space)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(space[k] for k in keys))]


def _validation_parts(config: ExperimentConfig, windows: Sequence[Window]):
    train, val, _ = split_windows(
        windows, config.tcn_split, config.seed, config.group_by_episode, both_classes=True
    )
    return train, val


def _apply(model_cls, base: BaseModel, point: Dict[str, Any]):
    try:
        return model_cls.model_validate({**base.model_dump(), **point})
    except ValidationError as e:
        message = e.errors()[0]["msg"]
        raise ConfigError(f"Invalid search point {point}: {message}", {"point": point}) from None


def _score(task: Task, predictions: np.ndarray, targets: np.ndarray) -> Dict[str, float]:
    if task == Task.CLASSIFY:
        _, (p, r, f1) = classification_scores(predictions, targets >= 0.5)
        return {"precision": p, "recall": r, "f1": f1}
    rmse, mae = rmse_mae(predictions, targets)
    return {"rmse": rmse, "mae": mae}


class _Evaluator:
    """Scores points for one (method, task); feature extraction is done once."""

    def __init__(
        self, config: ExperimentConfig, method: str, task: Task, windows: Sequence[Window]
    ):
        self.config = config
        self.method = method
        self.task = task
        self.train, self.val = _validation_parts(config, windows)
        self.y_val = window_targets(self.val, task)
        if method == "rf":
            x_train = extract_batch(self.train)
            normalizer = fit_normalizer(x_train)
            self.x_train = apply_normalizer(normalizer, x_train)
            self.x_val = apply_normalizer(normalizer, extract_batch(self.val))
            self.y_train = window_targets(self.train, task)

    def __call__(self, point: Dict[str, Any]) -> Dict[str, float]:
        if self.method == "rf":
            params = _apply(ForestParams, forest_params_for(self.config, self.task), point)
            model = fit_forest(self.x_train, self.y_train, params)
            predictions = predict_batch(model, self.x_val)
            return _score(self.task, predictions, self.y_val)
        tcn_config = _apply(tcn.TcnConfig, tcn_config_for(self.config, self.task), point)
        model, report = tcn.train(self.train, self.val, tcn_config)
        scores = _score(self.task, tcn.predict_windows(model, self.val), self.y_val)
        scores["val_loss"] = report.val_loss[report.selected_epoch - 1]
        return scores


def _rank(task: Task, leaderboard: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
    def key(entry: Dict[str, Any]):
        if task == Task.CLASSIFY:
            return -entry["scores"]["f1"], entry["order"]
        return entry["scores"]["rmse"], entry["order"]

    return sorted(leaderboard, key=key)


def _search(
    config: ExperimentConfig,
    points: List[Dict[str, Any]],
    method: str,
    task: Task,
    windows: Sequence[Window],
) -> Tuple[Dict[str, Any], List[Dict[str, Any]]]:
    evaluate = _Evaluator(config, method, task, windows)
    leaderboard = []
    for order, point in enumerate(points):
        scores = evaluate(point)
        logger.info(f"{method}/{task.value} point {point}: {scores}")
        leaderboard.append({"order": order, "params": point, "scores": scores})
    ranked = _rank(task, leaderboard)
    return ranked[0]["params"], ranked


def grid_search(
    config: ExperimentConfig,
    grid: GridSettings,
    windows: Sequence[Window],
) -> Tuple[Dict[str, Any], List[Dict[str, Any]]]:
    """Exhaustive search; returns (best point, leaderboard)."""
    points = grid_points(grid.params)
    return _search(config, points, grid.method, Task(grid.task), windows)


def random_search(
    config: ExperimentConfig,
    grid: GridSettings,
    windows: Sequence[Window],
    n_iter: Optional[int] = None,
    seed: Optional[int] = None,
) -> Tuple[Dict[str, Any], List[Dict[str, Any]]]:
    """
    Draw n_iter points from the grid lists (seeded, duplicates dropped) and
    rank them like grid_search.
    """
    grid_points(grid.params)
    n_iter = n_iter if n_iter is not None else grid.random_iter
    if n_iter < 1:
        raise EmptyGrid("random_search needs n_iter >= 1", {"n_iter": n_iter})
    rng = np.random.Generator(np.random.PCG64(config.seed if seed is None else seed))
    points: List[Dict[str, Any]] = []
    for _ in range(n_iter):
        point = {key: values[int(rng.integers(len(values)))] for key, values in grid.params.items()}
        if point not in points:
            points.append(point)
    return _search(config, points, grid.method, Task(grid.task), windows)
