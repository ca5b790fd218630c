"""
Shared pytest fixtures for Event Kiwi tests

Tiny seeded episodes and datasets, a raw CSV writer and an isolated run
history home, so no test touches ~/.event-kiwi or needs real 3W data.
"""

from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pytest

from event_kiwi.core.types import Episode, EventType, Source, stages_from_codes
from event_kiwi.data.synthgen import SynthSpec, generate_dataset
from event_kiwi.harness.experiment import ExperimentConfig
from event_kiwi.learn.forest import ForestParams
from event_kiwi.learn.tcn import TcnConfig

# ============================================================================
# Environment
# ============================================================================


@pytest.fixture(autouse=True)
def event_kiwi_home(tmp_path, monkeypatch):
    """Run history goes to a per-test directory; no data root leaks in from the shell."""
    home = tmp_path / "event-kiwi-home"
    monkeypatch.setenv("EVENT_KIWI_HOME", str(home))
    monkeypatch.delenv("EVENT_KIWI_DATA_ROOT", raising=False)
    return home


# ============================================================================
# Episodes
# ============================================================================


def make_episode(
    codes: Sequence[int],
    values: Optional[np.ndarray] = None,
    episode_id: str = "ep",
    channels: Sequence[str] = ("P1", "T1"),
    missing: Optional[np.ndarray] = None,
    source: Source = Source.SYNTHETIC,
    seed: int = 0,
) -> Episode:
    """
    Episode from 3W class codes. Values default to seeded noise around a
    channel-specific level; `missing` marks cells as NaN.
    """
    n = len(codes)
    if values is None:
        rng = np.random.default_rng(seed)
        values = rng.standard_normal((n, len(channels))) + np.arange(1, len(channels) + 1) * 10.0
    values = np.array(values, dtype=np.float64)
    if missing is None:
        missing = np.zeros(values.shape, dtype=bool)
    values[missing] = np.nan
    stages = stages_from_codes(codes)
    events = {s.event for s in stages if s.event is not None}
    return Episode(
        id=episode_id,
        source=source,
        event=events.pop() if len(events) == 1 else None,
        timestamps=np.arange(n),
        values=values,
        missing=missing,
        stages=stages,
        channel_names=tuple(channels),
    )


@pytest.fixture
def episode_factory():
    """
    Usage:
        def test_something(episode_factory):
            ep = episode_factory([0] * 60 + [102] * 4 + [2] * 56)
    """
    return make_episode


def tiny_spec(**overrides) -> SynthSpec:
    fields = dict(
        event=EventType.SPURIOUS_DHSV_CLOSURE, normal_len=240, transient_len=120, faulty_len=240
    )
    fields.update(overrides)
    return SynthSpec(**fields)


@pytest.fixture
def tiny_dataset() -> List[Episode]:
    """8 short Event-2 episodes and 8 normals, 600 s each."""
    return generate_dataset([tiny_spec() for _ in range(8)], normals=8, master_seed=7)


@pytest.fixture
def fast_config(tmp_path) -> ExperimentConfig:
    """Small models so a full experiment runs in seconds."""
    return ExperimentConfig(
        event=EventType.SPURIOUS_DHSV_CLOSURE,
        source="synthetic",
        seed=3,
        output_dir=tmp_path / "run",
        forest=ForestParams(n_trees=15, max_depth=6),
        tcn=TcnConfig(channels=4, epochs=3, batch_size=16, learning_rate=1e-2),
    )


# ============================================================================
# Files
# ============================================================================


def write_raw_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> Path:
    """Write rows verbatim (cells are str()-ed, None becomes an empty cell)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    lines += [",".join("" if c is None else str(c) for c in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def csv_writer():
    """
    Usage:
        def test_something(csv_writer, tmp_path):
            path = csv_writer(tmp_path / "a.csv", ["timestamp", "P-PDG", "class"], rows)
    """
    return write_raw_csv


# ============================================================================
# Command runs
# ============================================================================

SMALL_RUN = [
    "synth.episodes=4",
    "synth.normals=4",
    "synth.normal_len=240",
    "synth.transient_len=120",
    "synth.faulty_len=240",
    "forest.n_trees=5",
    "forest.max_depth=4",
    "tcn.channels=2",
    "tcn.epochs=2",
    "tcn.batch_size=16",
]


@pytest.fixture
def small_run() -> List[str]:
    """`--set` overrides for a synthetic run that finishes in seconds."""
    return list(SMALL_RUN)
