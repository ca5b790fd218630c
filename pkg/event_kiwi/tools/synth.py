"""Synth tool: write a seeded synthetic dataset in the data-root layout."""

import logging
from pathlib import Path
from typing import Any, Dict, List

from ..data.ingestion import event_stage_counts, write_episode_csv
from ..data.synthgen import generate_dataset
from .base import BaseTool, config_from_params

logger = logging.getLogger(__name__)


def synth_overrides(params: Dict[str, Any]) -> List[str]:
    overrides = []
    if params.get("seed") is not None:
        overrides.append(f"synth.master_seed={int(params['seed'])}")
    for key in ("event", "episodes", "normals"):
        if params.get(key) is not None:
            overrides.append(f"synth.{key}={int(params[key])}")
    return overrides


class SynthTool(BaseTool):
    """
    Generate [synth] episodes and write them to `out/<code>/SYNTH_*.csv`
    (normal episodes under `out/0`), ready for `catalog` and `evaluate`.
    """

    name = "synth"

    def run(self, params: Dict[str, Any]) -> Dict[str, Any]:
        config = config_from_params(params, synth_overrides(params))
        settings = config.synth
        out = Path(params.get("out") or ".")

        episodes = generate_dataset(
            settings.specs(), settings.normals, settings.master_seed, settings.template()
        )
        counts = {"event": 0, "normal": 0}
        stage_seconds = {"normal": 0, "transient": 0, "faulty": 0}
        for ep in episodes:
            folder = str(ep.event.code) if ep.event is not None else "0"
            write_episode_csv(ep, out / folder / f"{ep.id}.csv", config.columns)
            counts["event" if ep.event is not None else "normal"] += 1
            for stage, seconds in event_stage_counts(ep).items():
                stage_seconds[stage] += seconds

        logger.info(f"Wrote {len(episodes)} synthetic episodes under {out}")
        return {
            "data_root": str(out),
            "event": settings.event.code,
            "master_seed": settings.master_seed,
            "episodes": counts,
            "samples_per_episode": settings.template().total_len,
            "stage_seconds": stage_seconds,
        }
