"""
Run history and analytics utilities for Event Kiwi.

Every CLI command is logged to ~/.event-kiwi/.runs/history.jsonl (or
$EVENT_KIWI_HOME/.runs/history.jsonl): one "running" entry at start and one
entry on completion.
"""

import json
import logging
import os
from collections import defaultdict
from datetime import datetime, timedelta
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)


def _get_event_kiwi_home() -> Path:
    """Get event-kiwi home from EVENT_KIWI_HOME or default to ~/.event-kiwi."""
    home = os.getenv("EVENT_KIWI_HOME")
    if home:
        return Path(home)
    return Path.home() / ".event-kiwi"


def _get_history_file() -> Path:
    return _get_event_kiwi_home() / ".runs" / "history.jsonl"


def _summarize(data: Any, max_items: int = 8) -> Any:
    if not data:
        return None
    if isinstance(data, dict):
        return {k: v for i, (k, v) in enumerate(data.items()) if i < max_items}
    return data


def _append(entry: Dict[str, Any]) -> bool:
    history_file = _get_history_file()
    try:
        history_file.parent.mkdir(parents=True, exist_ok=True)
        with open(history_file, "a") as f:
            f.write(json.dumps(entry, default=str) + "\n")
        return True
    except Exception as e:
        logger.error(f"Failed to write run history: {e}")
        return False


def log_run(
    command: str,
    status: str,
    duration_sec: float,
    inputs: Dict,
    outputs: Optional[Dict] = None,
    error: Optional[str] = None,
    run_id: Optional[str] = None,
    event: Optional[int] = None,
) -> Dict:
    """
    Log a completed command run.

    Args:
        command: CLI subcommand ("train", "evaluate", ...)
        status: "success", "error" or "partial_success"
        duration_sec: How long the run took
        inputs: Input parameters (summarized)
        outputs: Output data (summarized)
        error: Error message if failed
        run_id: Id shared with the start entry
        event: Event code the run worked on

    Returns:
        The logged entry summary

    Example:
        log_run(
            command="evaluate",
            status="success",
            duration_sec=95.2,
            inputs={"event": 2, "source": "synthetic"},
            outputs={"rows": 4},
        )
    """
    entry = {
        "timestamp": datetime.now().isoformat(),
        "run_id": run_id,
        "command": command,
        "status": status,
        "duration_sec": round(duration_sec, 2),
        "event": event,
        "inputs": _summarize(inputs),
        "outputs": _summarize(outputs),
        "error": error,
    }
    entry = {k: v for k, v in entry.items() if v is not None}
    if _append(entry):
        logger.debug(f"Logged run: {command} -> {status}")
    return {"run_id": run_id, "command": command, "status": status, "duration_sec": duration_sec}


def log_run_start(command: str, run_id: str, inputs: Dict, event: Optional[int] = None) -> None:
    """Log the start of a command so long experiments show up while running."""
    entry = {
        "timestamp": datetime.now().isoformat(),
        "run_id": run_id,
        "command": command,
        "status": "running",
        "event": event,
        "inputs": _summarize(inputs),
    }
    entry = {k: v for k, v in entry.items() if v is not None}
    if _append(entry):
        logger.debug(f"Logged run start: {command} (ID: {run_id})")


def get_run_history(days: int = 30, command: Optional[str] = None) -> List[Dict]:
    """
    Load run history from the last N days, most recent first.

    Lines that are not valid JSON are skipped.
    """
    history_file = _get_history_file()
    if not history_file.exists():
        return []

    cutoff = datetime.now() - timedelta(days=days)
    runs = []
    with open(history_file, "r") as f:
        for line in f:
            if not line.strip():
                continue
            try:
                run = json.loads(line)
                run_time = datetime.fromisoformat(run["timestamp"])
            except (ValueError, KeyError) as e:
                logger.debug(f"Skipping bad history line: {e}")
                continue
            if run_time > cutoff and (command is None or run.get("command") == command):
                runs.append(run)
    return sorted(runs, key=lambda x: x["timestamp"], reverse=True)


def command_stats(days: int = 30) -> Dict[str, Dict[str, Any]]:
    """
    Success rate and duration per command over completed runs.

    Returns:
        {command: {total_runs, success_rate, partial_rate, error_rate,
                   avg_duration_sec, common_errors}}
    """
    stats: Dict[str, Dict[str, Any]] = defaultdict(
        lambda: {"success": 0, "error": 0, "partial": 0, "total_duration": 0.0, "errors": []}
    )
    for run in get_run_history(days=days):
        if run.get("status") == "running":
            continue
        s = stats[run.get("command", "unknown")]
        s["total_duration"] += run.get("duration_sec", 0)
        if run["status"] == "success":
            s["success"] += 1
        elif run["status"] == "partial_success":
            s["partial"] += 1
        else:
            s["error"] += 1
            if run.get("error"):
                s["errors"].append(run["error"])

    result = {}
    for command, s in stats.items():
        total = s["success"] + s["error"] + s["partial"]
        result[command] = {
            "total_runs": total,
            "success_rate": s["success"] / total if total else 0,
            "partial_rate": s["partial"] / total if total else 0,
            "error_rate": s["error"] / total if total else 0,
            "avg_duration_sec": s["total_duration"] / total if total else 0,
            "common_errors": sorted(set(s["errors"]))[:3],
        }
    return result
