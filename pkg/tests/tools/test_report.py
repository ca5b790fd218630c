"""
Tests for report tool.
"""

import json

import pytest

from event_kiwi.core.types import Task
from event_kiwi.harness.experiment import ReportRow, TraceRow
from event_kiwi.harness.report import emit_report
from event_kiwi.tools.report import ReportTool


def write_report(out_dir, event):
    row = ReportRow(
        event=event,
        method="RF",
        task=Task.REGRESS,
        n_train=8,
        n_val=0,
        n_test=1,
        seed=0,
        rmse=0.25,
        mae=0.25,
        trace=[TraceRow("a", 0, 1.0, 0.75)],
    )
    return emit_report([row], out_dir)["report"]


class TestReportTool:
    """Tests for ReportTool"""

    @pytest.mark.asyncio
    async def test_aggregate(self, tmp_path):
        paths = [write_report(tmp_path / "e8", 8), write_report(tmp_path / "e1", 1)]

        result = await ReportTool().execute({"paths": paths, "out": str(tmp_path)})

        result_data = json.loads(result)
        assert result_data["status"] == "success"
        assert result_data["path"] == str(tmp_path / "report_all.csv")
        assert result_data["events"] == [1, 8]
        assert [r["event"] for r in result_data["table"]] == ["1", "8"]

    @pytest.mark.asyncio
    async def test_csv_out_path(self, tmp_path):
        paths = [write_report(tmp_path / "e2", 2)]
        result_data = json.loads(
            await ReportTool().execute({"paths": paths, "out": str(tmp_path / "all.csv")})
        )
        assert (tmp_path / "all.csv").exists()
        assert result_data["rows"] == 1

    @pytest.mark.asyncio
    async def test_no_paths(self):
        result_data = json.loads(await ReportTool().execute({"paths": []}))
        assert result_data["error"]["code"] == "EMPTY_INPUT"
