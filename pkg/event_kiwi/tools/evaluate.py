"""Evaluate tool: the full per-event experiment."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..core.types import Episode
from ..data.ingestion import Catalog, build_catalog
from ..data.synthgen import generate_dataset
from ..harness.experiment import ExperimentConfig, prepare_event_windows, run_experiment
from ..harness.search import grid_search, random_search
from ..learn.forest import ForestParams
from ..learn.tcn import TcnConfig
from ..utils.config import AppConfig
from ..utils.shared.preflight import run_preflight
from .base import BaseTool, config_from_params

logger = logging.getLogger(__name__)

TIME_FORMULA = "windows * (rf_arms * n_trees * 0.0004 + tcn_arms * epochs * 0.004)"
TIME_WARN_SECONDS = 600

VALIDATION_RULES = [
    {"field": "event", "type": "integer", "min": 1, "max": 8},
    {"field": "seed", "type": "integer"},
    {"field": "source", "enum": ["real", "simulated", "synthetic", "all"]},
]


def experiment_overrides(params: Dict[str, Any]) -> List[str]:
    overrides = []
    if params.get("seed") is not None:
        overrides.append(f"experiment.seed={int(params['seed'])}")
    if params.get("event") is not None:
        overrides.append(f"experiment.event={int(params['event'])}")
    if params.get("source"):
        overrides.append(f"experiment.source={json.dumps(str(params['source']))}")
    return overrides


def generates_data(config: AppConfig) -> bool:
    return config.experiment.data_root is None and config.experiment.source == "synthetic"


def episode_source(config: AppConfig) -> Tuple[Optional[Sequence[Episode]], Optional[Catalog]]:
    """
    Synthetic source without a data root: generate the [synth] dataset for the
    experiment's event in memory. Otherwise catalog the data root, or return
    (None, None) when it does not exist so preflight can report it.
    """
    experiment = config.experiment
    if generates_data(config):
        synth = config.synth.model_copy(update={"event": experiment.event})
        episodes = generate_dataset(
            synth.specs(), synth.normals, synth.master_seed, synth.template()
        )
        return episodes, None
    if experiment.data_root is None or not Path(experiment.data_root).is_dir():
        return None, None
    return None, build_catalog(experiment.data_root, n_jobs=config.forest.n_jobs)


def window_estimate(
    config: AppConfig, episodes: Optional[Sequence[Episode]], catalog: Optional[Catalog]
) -> int:
    experiment = config.experiment
    if episodes is not None:
        lengths = [len(ep) for ep in episodes]
    elif catalog is not None:
        lengths = [e.sample_count for e in catalog.entries if e.event in (experiment.event, None)]
    else:
        return 0
    return sum(max((n - experiment.window_len) // experiment.stride + 1, 0) for n in lengths)


def preflight(params: Dict[str, Any], config: AppConfig, windows: int) -> Dict[str, Any]:
    experiment = config.experiment
    needs_root = not generates_data(config)
    inputs = {
        **{k: v for k, v in params.items() if k in ("event", "seed", "source")},
        "windows": windows,
        "rf_arms": len(experiment.tasks) if "rf" in experiment.methods else 0,
        "tcn_arms": len(experiment.tasks) if "tcn" in experiment.methods else 0,
        "n_trees": config.forest.n_trees,
        "epochs": config.tcn.epochs,
    }
    return run_preflight(
        inputs=inputs,
        required_paths={"data_root": experiment.data_root} if needs_root else None,
        validation_rules=VALIDATION_RULES,
        splits={"rf_split": experiment.rf_split, "tcn_split": experiment.tcn_split},
        time_formula=TIME_FORMULA if inputs["windows"] else None,
        time_warn_threshold=TIME_WARN_SECONDS,
    )


def apply_search(
    config: AppConfig,
    experiment: ExperimentConfig,
    source,
    out: Path,
) -> Tuple[ExperimentConfig, Dict[str, Any]]:
    """Run the [grid] search and fold the best point into the method's section."""
    grid = config.grid
    _, windows = prepare_event_windows(experiment, source)
    if grid.random_iter:
        best, leaderboard = random_search(experiment, grid, windows)
    else:
        best, leaderboard = grid_search(experiment, grid, windows)

    if grid.method == "rf":
        section = ForestParams.model_validate({**experiment.forest.model_dump(), **best})
        experiment = experiment.model_copy(update={"forest": section})
    else:
        section = TcnConfig.model_validate({**experiment.tcn.model_dump(), **best})
        experiment = experiment.model_copy(update={"tcn": section})

    out.mkdir(parents=True, exist_ok=True)
    search_path = out / "search.json"
    summary = {
        "method": grid.method,
        "task": grid.task.value,
        "best": best,
        "leaderboard": leaderboard,
    }
    search_path.write_text(json.dumps(summary, indent=2, default=str) + "\n", encoding="utf-8")
    logger.info(f"Search picked {best} for {grid.method}/{grid.task.value}")
    return experiment, {"best": best, "points": len(leaderboard), "file": str(search_path)}


class EvaluateTool(BaseTool):
    """Preflight, optional hyper-parameter search, then run_experiment."""

    name = "evaluate"

    def run(self, params: Dict[str, Any]) -> Dict[str, Any]:
        config = config_from_params(params, experiment_overrides(params))
        episodes, catalog = episode_source(config)
        checks = preflight(params, config, window_estimate(config, episodes, catalog))
        if not checks["pass"]:
            return {
                "status": "error",
                "error": {
                    "code": "PREFLIGHT_FAILED",
                    "message": "; ".join(checks["blockers"]),
                    "details": {"preflight": checks},
                },
            }

        experiment = config.experiment_config()
        out = Path(params.get("out") or experiment.output_dir or ".")
        source = episodes if episodes is not None else catalog

        search = None
        if config.grid.params:
            experiment, search = apply_search(config, experiment, source, out)

        result = run_experiment(experiment, episodes=episodes, catalog=catalog, output_dir=out)
        rows = [
            {
                "method": row.method,
                "task": row.task.value,
                "n_train": row.n_train,
                "n_val": row.n_val,
                "n_test": row.n_test,
                **{
                    k: getattr(row, k)
                    for k in ("precision", "recall", "f1", "rmse", "mae")
                    if getattr(row, k) is not None
                },
            }
            for row in result.rows
        ]
        return {
            "status": "partial_success" if result.failures else "success",
            "event": experiment.event.code,
            "seed": experiment.seed,
            "windows": result.counts,
            "features": result.mask.to_dict(),
            "rows": rows,
            "failures": result.failures,
            "search": search,
            "warnings": checks["warnings"],
            "files": result.files,
        }
