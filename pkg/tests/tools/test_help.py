"""
Tests for help tool.
"""

import json

import pytest

from event_kiwi.tools.help import HelpTool
from event_kiwi.utils.analytics import log_run


class TestHelpTool:
    """Tests for HelpTool"""

    def test_tool_initialization(self):
        """Test tool initialization"""
        tool = HelpTool()
        assert hasattr(tool, "execute")
        assert tool.name == "help"

    @pytest.mark.asyncio
    async def test_help_workflow(self):
        """Test help for the synthetic workflow"""
        tool = HelpTool()

        result = await tool.execute({"query": "synthetic workflow"})

        result_data = json.loads(result)
        assert result_data["topic"] == "Synthetic end-to-end workflow"
        assert "workflow" in result_data
        assert "tips" in result_data

    @pytest.mark.asyncio
    async def test_help_predict(self):
        """Test help for streaming prediction, query given as words"""
        tool = HelpTool()

        result = await tool.execute({"query": ["stream", "a", "file"]})

        result_data = json.loads(result)
        assert result_data["topic"] == "Per-minute prediction"
        assert "usage" in result_data

    @pytest.mark.asyncio
    async def test_help_config(self):
        """Test help for configuration"""
        tool = HelpTool()

        result = await tool.execute({"query": "toml config"})

        result_data = json.loads(result)
        assert result_data["topic"] == "Configuration"
        assert "grid" in result_data["sections"]

    @pytest.mark.asyncio
    async def test_help_stats(self):
        """Test the run history summary per command"""
        log_run("train", "success", 3.0, {})
        log_run("train", "error", 1.0, {}, error="No data")

        result_data = json.loads(await HelpTool().execute({"query": "stats"}))

        assert result_data["topic"] == "Run history"
        train = result_data["commands"]["train"]
        assert train["total_runs"] == 2
        assert train["success_rate"] == 0.5
        assert train["avg_duration_sec"] == 2.0

    @pytest.mark.asyncio
    async def test_help_general(self):
        """Test general help"""
        tool = HelpTool()

        result = await tool.execute({"query": "how do I use this"})

        result_data = json.loads(result)
        assert len(result_data["available_commands"]) == 7
        assert result_data["events"]["2"] == "Spurious downhole safety valve closure"
        assert "help_topics" in result_data

    @pytest.mark.asyncio
    async def test_help_empty_query(self):
        result_data = json.loads(await HelpTool().execute({}))
        assert "available_commands" in result_data
