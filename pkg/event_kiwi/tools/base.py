"""Shared plumbing for the command tools."""

import asyncio
import json
import logging
import time
import traceback
import uuid
from typing import Any, Dict, List, Optional

from ..errors import EventKiwiError
from ..utils.analytics import log_run, log_run_start
from ..utils.config import AppConfig, load_config

logger = logging.getLogger(__name__)

MAX_TRACEBACK_CHARS = 2000


def error_envelope(error: Exception, duration_sec: Optional[float] = None) -> Dict[str, Any]:
    """The JSON error shape every tool returns."""
    if isinstance(error, EventKiwiError):
        response: Dict[str, Any] = {"status": "error", "error": error.to_dict()}
    else:
        error_traceback = traceback.format_exc()
        if len(error_traceback) >= MAX_TRACEBACK_CHARS:
            error_traceback = error_traceback[:MAX_TRACEBACK_CHARS] + "\n... (truncated)"
        response = {
            "status": "error",
            "error": {
                "code": "EXECUTION_ERROR",
                "message": str(error) or type(error).__name__,
                "details": {},
            },
            "error_type": type(error).__name__,
            "traceback": error_traceback,
        }
    if duration_sec is not None:
        response["metadata"] = {"duration_sec": round(duration_sec, 3)}
    return response


def config_from_params(params: Dict[str, Any], extra: Optional[List[str]] = None) -> AppConfig:
    """Config file plus `--set` overrides, then the tool's own flag overrides."""
    overrides = list(params.get("set") or [])
    overrides.extend(extra or [])
    return load_config(params.get("config"), overrides)


class BaseTool:
    """
    A command. Subclasses implement `run(params) -> dict`; `execute` runs it
    off the event loop, records run history and wraps the result in the
    status envelope.
    """

    name = "tool"

    def run(self, params: Dict[str, Any]) -> Dict[str, Any]:
        raise NotImplementedError

    def event_of(self, params: Dict[str, Any]) -> Optional[int]:
        event = params.get("event")
        return int(event) if isinstance(event, int) else None

    async def execute(self, params: Dict[str, Any]) -> str:
        run_id = str(uuid.uuid4())
        inputs = {k: v for k, v in params.items() if v is not None}
        event = self.event_of(params)
        log_run_start(self.name, run_id, inputs, event=event)
        start_time = time.time()

        try:
            result = await asyncio.to_thread(self.run, params)
        except Exception as e:
            duration_sec = time.time() - start_time
            response = error_envelope(e, duration_sec)
            if isinstance(e, EventKiwiError):
                logger.error(f"{self.name} failed: [{e.code}] {e.message}")
            else:
                logger.exception(f"{self.name} failed unexpectedly")
            log_run(
                command=self.name,
                status="error",
                duration_sec=duration_sec,
                inputs=inputs,
                error=response["error"]["message"],
                run_id=run_id,
                event=event,
            )
            return json.dumps(response, indent=2, default=str)

        duration_sec = time.time() - start_time
        status = result.pop("status", "success")
        log_run(
            command=self.name,
            status=status,
            duration_sec=duration_sec,
            inputs=inputs,
            outputs=result,
            error=(result.get("error") or {}).get("message"),
            run_id=run_id,
            event=event,
        )
        response = {
            "status": status,
            **result,
            "metadata": {"duration_sec": round(duration_sec, 3)},
        }
        return json.dumps(response, indent=2, default=str)
