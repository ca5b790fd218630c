"""
Tests for the shared tool envelope and run logging.
"""

import json

import pytest

from event_kiwi.errors import EmptyInput
from event_kiwi.tools.base import MAX_TRACEBACK_CHARS, BaseTool, config_from_params
from event_kiwi.utils.analytics import get_run_history


class EchoTool(BaseTool):
    name = "echo"

    def run(self, params):
        if params.get("fail") == "known":
            raise EmptyInput("nothing to do", {"why": "test"})
        if params.get("fail") == "unknown":
            raise RuntimeError("x" * (MAX_TRACEBACK_CHARS * 2))
        return {"status": params.get("status", "success"), "echo": params.get("value")}


class TestBaseTool:
    """Tests for BaseTool.execute"""

    @pytest.mark.asyncio
    async def test_success(self):
        result_data = json.loads(await EchoTool().execute({"value": 3, "event": 2}))

        assert result_data["status"] == "success"
        assert result_data["echo"] == 3
        assert result_data["metadata"]["duration_sec"] >= 0

    @pytest.mark.asyncio
    async def test_history_has_start_and_end(self):
        """Test one running entry and one completed entry share a run id"""
        await EchoTool().execute({"value": 1, "event": 5})

        runs = get_run_history(command="echo")
        assert sorted(r["status"] for r in runs) == ["running", "success"]
        assert len({r["run_id"] for r in runs}) == 1
        assert all(r["event"] == 5 for r in runs)

    @pytest.mark.asyncio
    async def test_partial_status_passes_through(self):
        result_data = json.loads(await EchoTool().execute({"status": "partial_success"}))
        assert result_data["status"] == "partial_success"

    @pytest.mark.asyncio
    async def test_known_error(self):
        result_data = json.loads(await EchoTool().execute({"fail": "known"}))

        assert result_data["status"] == "error"
        assert result_data["error"] == {
            "code": "EMPTY_INPUT",
            "message": "nothing to do",
            "details": {"why": "test"},
        }
        assert "traceback" not in result_data
        ended = [r for r in get_run_history(command="echo") if r["status"] == "error"]
        assert ended[0]["error"] == "nothing to do"

    @pytest.mark.asyncio
    async def test_unexpected_error_is_truncated(self):
        """Test unexpected exceptions carry their type and a capped traceback"""
        result_data = json.loads(await EchoTool().execute({"fail": "unknown"}))

        assert result_data["error"]["code"] == "EXECUTION_ERROR"
        assert result_data["error_type"] == "RuntimeError"
        assert result_data["traceback"].endswith("... (truncated)")
        assert len(result_data["traceback"]) <= MAX_TRACEBACK_CHARS + len("\n... (truncated)")


class TestConfigFromParams:
    """Tests for config_from_params"""

    def test_flags_win_over_set(self, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text("[experiment]\nseed = 1\n")

        config = config_from_params(
            {"config": str(path), "set": ["experiment.seed=2"]}, ["experiment.seed=3"]
        )

        assert config.experiment.seed == 3
