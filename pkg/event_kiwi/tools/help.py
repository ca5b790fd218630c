"""Help tool for Event Kiwi."""

import json
from typing import Any, Dict

from ..core.types import EVENT_NAMES
from ..utils.analytics import command_stats


class HelpTool:
    """Provide workflow guidance and troubleshooting"""

    name = "help"

    async def execute(self, params: Dict[str, Any]) -> str:
        """
        Get help with commands and workflows

        Args:
            query: What you need help with

        Returns:
            Guidance and examples as JSON
        """
        query = params.get("query") or ""
        if isinstance(query, (list, tuple)):
            query = " ".join(query)
        query = query.lower()

        if "predict" in query or "stream" in query:
            return self._help_predict()
        elif "config" in query or "toml" in query:
            return self._help_config()
        elif "stats" in query or "history" in query:
            return self._help_stats()
        elif "workflow" in query or "synth" in query or "evaluate" in query:
            return self._help_workflow()
        else:
            return self._help_general()

    def _help_workflow(self) -> str:
        return json.dumps(
            {
                "topic": "Synthetic end-to-end workflow",
                "workflow": [
                    "1. Generate data: event-kiwi synth --seed 0 --out data",
                    "2. Evaluate: event-kiwi evaluate --set experiment.data_root='data' "
                    "--out runs/e2",
                    "3. Stream a file: event-kiwi predict "
                    "--model runs/e2/models/event2_rf_regress.json "
                    "--input data/2/SYNTH_event2_0000.csv --out runs/e2",
                    "4. Combine events: event-kiwi report runs/*/report.csv --out runs",
                ],
                "tips": [
                    "evaluate with experiment.source='synthetic' and no data root generates "
                    "the [synth] dataset in memory",
                    "The same seed gives byte-identical report and trace files",
                    "Add -v for progress logs on stderr; stdout carries only the JSON result",
                ],
            },
            indent=2,
        )

    def _help_predict(self) -> str:
        return json.dumps(
            {
                "topic": "Per-minute prediction",
                "usage": "event-kiwi predict --model MODEL.json --input EPISODE.csv --out DIR",
                "output": "DIR/predict_<episode>.csv with columns "
                "episode_id,minute,target,prediction",
                "notes": [
                    "One row per completed 60-second window, in arrival order",
                    "The CSV header must contain every channel the model was trained on",
                    "Gaps are forward filled; leading gaps take the training median",
                    "The target column is blank: labels are not read while streaming",
                ],
            },
            indent=2,
        )

    def _help_config(self) -> str:
        return json.dumps(
            {
                "topic": "Configuration",
                "sections": {
                    "experiment": "event, source, seed, data_root, output_dir, methods, tasks, "
                    "group_by_episode, window_len, stride, rf_split, tcn_split",
                    "forest": "n_trees, max_depth, min_leaf, features_per_split, n_jobs",
                    "tcn": "kernel_size, dilations, channels, dropout, epochs, batch_size, "
                    "learning_rate, beta1, beta2, epsilon, standardize",
                    "synth": "event, episodes, normals, master_seed, normal_len, transient_len, "
                    "faulty_len, baselines, noise_sd, fault_shift",
                    "columns": "timestamp, label, channels, empty_threshold",
                    "grid": "method, task, params, random_iter",
                },
                "overrides": "--set section.key=value (TOML value syntax), repeatable, "
                "wins over the file",
                "environment": {
                    "EVENT_KIWI_DATA_ROOT": "default experiment.data_root",
                    "EVENT_KIWI_HOME": "run history location (default ~/.event-kiwi)",
                },
            },
            indent=2,
        )

    def _help_stats(self, days: int = 30) -> str:
        return json.dumps(
            {
                "topic": "Run history",
                "days": days,
                "commands": command_stats(days=days),
                "notes": [
                    "Every command is logged to $EVENT_KIWI_HOME/.runs/history.jsonl",
                    "partial_success counts runs where one experiment arm failed",
                ],
            },
            indent=2,
        )

    def _help_general(self) -> str:
        return json.dumps(
            {
                "available_commands": [
                    "synth - Generate a seeded synthetic dataset",
                    "catalog - Scan a data root and count minutes per event and source",
                    "train - Train one event/method/task model",
                    "evaluate - Full per-event experiment with report and traces",
                    "predict - Stream a CSV through a saved model",
                    "report - Aggregate per-event report files",
                    "help - Get guidance (this command)",
                ],
                "events": {str(int(code)): name for code, name in EVENT_NAMES.items()},
                "help_topics": ["workflow", "predict", "config", "stats"],
            },
            indent=2,
        )
