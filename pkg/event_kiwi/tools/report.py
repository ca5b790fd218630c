"""Report tool: combine per-event report files."""

import logging
from pathlib import Path
from typing import Any, Dict

from ..errors import EmptyInput
from ..harness.report import aggregate_reports
from .base import BaseTool

logger = logging.getLogger(__name__)


class ReportTool(BaseTool):
    """Aggregate report.csv files into one table sorted by (event, method, task)."""

    name = "report"

    def run(self, params: Dict[str, Any]) -> Dict[str, Any]:
        paths = [Path(p) for p in params.get("paths") or []]
        if not paths:
            raise EmptyInput("report needs at least one report.csv path")
        out = Path(params.get("out") or ".")
        out_path = out if out.suffix == ".csv" else out / "report_all.csv"

        table = aggregate_reports(paths, out_path)
        return {
            "path": str(out_path),
            "rows": len(table),
            "events": sorted({int(e) for e in table["event"]}),
            "table": table.to_dict(orient="records"),
        }
