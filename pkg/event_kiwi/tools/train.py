"""Train tool: one event, one method, one task."""

import json
import logging
from pathlib import Path
from typing import Any, Dict

from ..api.model_store import ModelStore
from ..core.types import Task
from ..errors import InsufficientData
from ..harness.experiment import ARMS, prepare_event_windows
from ..utils.shared.preflight import validate_inputs
from .base import BaseTool, config_from_params
from .evaluate import episode_source, experiment_overrides

logger = logging.getLogger(__name__)

VALIDATION_RULES = [
    {"field": "event", "required": True, "type": "integer", "min": 1, "max": 8},
    {"field": "method", "required": True, "enum": ["rf", "tcn"]},
    {"field": "task", "required": True, "enum": [t.value for t in Task]},
]


class TrainTool(BaseTool):
    """
    Train and save a single model with the experiment's split protocol; the
    held-out scores come back in the result.
    """

    name = "train"

    def run(self, params: Dict[str, Any]) -> Dict[str, Any]:
        checks = validate_inputs(params, VALIDATION_RULES)
        if checks["status"] == "fail":
            return {
                "status": "error",
                "error": {
                    "code": "INVALID_INPUT",
                    "message": "; ".join(checks["errors"]),
                    "details": checks,
                },
            }

        config = config_from_params(params, experiment_overrides(params))
        experiment = config.experiment_config()
        method, task = params["method"], Task(params["task"])
        episodes, catalog = episode_source(config)
        source = episodes if episodes is not None else catalog
        if source is None:
            raise InsufficientData(
                f"No data: data root {experiment.data_root} does not exist "
                "and experiment.source is not 'synthetic'"
            )

        mask, windows = prepare_event_windows(experiment, source)
        model, row, report = ARMS[method](experiment, task, windows, mask)
        out = Path(params.get("out") or experiment.output_dir or ".")
        path = ModelStore(out / "models").save(model, experiment.event)

        result = {
            "event": experiment.event.code,
            "method": method,
            "task": task.value,
            "model": str(path),
            "n_train": row.n_train,
            "n_val": row.n_val,
            "n_test": row.n_test,
            "scores": {
                k: getattr(row, k)
                for k in ("precision", "recall", "f1", "rmse", "mae")
                if getattr(row, k) is not None
            },
        }
        if report is not None:
            report_path = out / "models" / f"{path.stem}_train_report.json"
            report_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
            result["selected_epoch"] = report.selected_epoch
            result["train_report"] = str(report_path)
        logger.info(f"Trained {path.name}")
        return result
