"""
Per-second probability targets and per-minute windows.
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..core.types import WINDOW_LEN, Episode, StageKind, Window, validate_episode
from ..errors import EpisodeTooShort, InvalidEpisode

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ProbSeries:
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)


def interpolate_probabilities(episode: Episode) -> ProbSeries:
    """
    Normal -> 0, Faulty -> 1, and a transient run of length L -> i/(L+1).

    A transient that ends the episode is treated as if a faulty sample followed.
    """
    violations = validate_episode(episode)
    if violations:
        raise InvalidEpisode(episode.id, violations)

    kinds = episode.stage_kinds
    probs = np.where(kinds == StageKind.FAULTY, 1.0, 0.0)
    transient = np.flatnonzero(kinds == StageKind.TRANSIENT)
    if transient.size:
        # stage monotonicity makes the transient a single contiguous run
        length = transient.size
        probs[transient] = np.arange(1, length + 1, dtype=np.float64) / (length + 1)
    probs.setflags(write=False)
    return ProbSeries(values=probs)


def assign_targets(stage_kinds: np.ndarray, probs: np.ndarray) -> Tuple[bool, float]:
    """Targets of a window come from its last second."""
    return bool(stage_kinds[-1] != StageKind.NORMAL), float(probs[-1])


def segment(
    episode: Episode, window_len: int = WINDOW_LEN, stride: int = WINDOW_LEN
) -> List[Window]:
    """Cut [0, w), [s, s+w), ...; a trailing remainder shorter than w is dropped."""
    if window_len < 1 or stride < 1:
        raise ValueError("window_len and stride must be >= 1")
    n = len(episode)
    if n < window_len:
        raise EpisodeTooShort(
            f"Episode '{episode.id}' has {n} samples, needs {window_len}",
            {"episode_id": episode.id, "length": n, "window_len": window_len},
        )
    probs = interpolate_probabilities(episode).values
    kinds = episode.stage_kinds

    windows = []
    for start in range(0, n - window_len + 1, stride):
        stop = start + window_len
        class_label, prob_target = assign_targets(kinds[start:stop], probs[start:stop])
        windows.append(
            Window(
                episode_id=episode.id,
                start=int(episode.timestamps[start] - episode.timestamps[0]),
                values=episode.values[start:stop],
                class_label=class_label,
                prob_target=prob_target,
            )
        )
    logger.debug(f"Segmented {episode.id} into {len(windows)} windows")
    return windows
