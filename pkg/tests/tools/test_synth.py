"""
Tests for synth tool.
"""

import json

import pytest

from event_kiwi.data.ingestion import build_catalog
from event_kiwi.tools.synth import SynthTool, synth_overrides


class TestSynthOverrides:
    """Tests for synth_overrides"""

    def test_seed_maps_to_master_seed(self):
        assert synth_overrides({"seed": 4, "event": 6, "episodes": None}) == [
            "synth.master_seed=4",
            "synth.event=6",
        ]


class TestSynthTool:
    """Tests for SynthTool"""

    @pytest.mark.asyncio
    async def test_writes_data_root_layout(self, tmp_path, small_run):
        """Test event files land in the event folder and normals in 0"""
        tool = SynthTool()

        result = await tool.execute({"set": small_run, "seed": 1, "out": str(tmp_path / "data")})

        result_data = json.loads(result)
        assert result_data["status"] == "success"
        assert result_data["episodes"] == {"event": 4, "normal": 4}
        assert result_data["master_seed"] == 1
        assert result_data["samples_per_episode"] == 600
        assert result_data["stage_seconds"] == {"normal": 3360, "transient": 480, "faulty": 960}
        assert len(list((tmp_path / "data" / "2").glob("SYNTH_event2_*.csv"))) == 4
        assert len(list((tmp_path / "data" / "0").glob("SYNTH_normal_*.csv"))) == 4

        catalog = build_catalog(tmp_path / "data")
        assert len(catalog) == 8 and not catalog.warnings

    @pytest.mark.asyncio
    async def test_same_seed_same_bytes(self, tmp_path, small_run):
        tool = SynthTool()
        await tool.execute({"set": small_run, "seed": 9, "out": str(tmp_path / "a")})
        await tool.execute({"set": small_run, "seed": 9, "out": str(tmp_path / "b")})

        name = "2/SYNTH_event2_0000.csv"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    @pytest.mark.asyncio
    async def test_other_event(self, tmp_path, small_run):
        result = await SynthTool().execute(
            {"set": small_run, "event": 7, "episodes": 1, "normals": 0, "out": str(tmp_path)}
        )
        result_data = json.loads(result)
        assert result_data["event"] == 7
        assert (tmp_path / "7" / "SYNTH_event7_0000.csv").exists()

    @pytest.mark.asyncio
    async def test_bad_override(self, tmp_path):
        result = await SynthTool().execute({"set": ["synth.nope=1"], "out": str(tmp_path)})
        result_data = json.loads(result)
        assert result_data["error"]["code"] == "CONFIG_ERROR"
