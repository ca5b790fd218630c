"""
Core domain types: events, stages, samples, episodes and windows.

Episodes store their samples column-wise (timestamps, a value matrix and a
missing mask) so the numeric stages can work on arrays; `Episode.sample(i)`
and iteration give the per-sample view.
"""

from dataclasses import dataclass
from enum import Enum, IntEnum
from functools import lru_cache
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import UnknownLabelCode

TRANSIENT_OFFSET = 100
WINDOW_LEN = 60
SECONDS_PER_MINUTE = 60


class EventType(IntEnum):
    """The eight undesired events of the 3W taxonomy."""

    ABRUPT_BSW_INCREASE = 1
    SPURIOUS_DHSV_CLOSURE = 2
    SEVERE_SLUGGING = 3
    FLOW_INSTABILITY = 4
    RAPID_PRODUCTIVITY_LOSS = 5
    QUICK_CHOKE_RESTRICTION = 6
    SCALING_IN_CHOKE = 7
    HYDRATE_IN_PRODUCTION_LINE = 8

    @property
    def code(self) -> int:
        return int(self)

    @property
    def display_name(self) -> str:
        return EVENT_NAMES[self]

    @classmethod
    def from_code(cls, code: int) -> "EventType":
        try:
            return cls(int(code))
        except (ValueError, TypeError):
            raise UnknownLabelCode(code) from None


EVENT_NAMES = {
    EventType.ABRUPT_BSW_INCREASE: "Abrupt basic sediment water increase",
    EventType.SPURIOUS_DHSV_CLOSURE: "Spurious downhole safety valve closure",
    EventType.SEVERE_SLUGGING: "Severe slugging",
    EventType.FLOW_INSTABILITY: "Flow instability",
    EventType.RAPID_PRODUCTIVITY_LOSS: "Rapid productivity loss",
    EventType.QUICK_CHOKE_RESTRICTION: "Quick production choke restriction",
    EventType.SCALING_IN_CHOKE: "Scaling in production choke",
    EventType.HYDRATE_IN_PRODUCTION_LINE: "Hydrate in production line",
}


class StageKind(IntEnum):
    NORMAL = 0
    TRANSIENT = 1
    FAULTY = 2


@dataclass(frozen=True)
class Stage:
    """Normal, or Transient/Faulty of one event."""

    kind: StageKind
    event: Optional[EventType] = None

    def __post_init__(self):
        if self.kind == StageKind.NORMAL and self.event is not None:
            raise ValueError("Normal stage cannot carry an event")
        if self.kind != StageKind.NORMAL and self.event is None:
            raise ValueError(f"{self.kind.name.title()} stage requires an event")

    @classmethod
    def normal(cls) -> "Stage":
        return _NORMAL

    @classmethod
    def transient(cls, event: EventType) -> "Stage":
        return _stage(StageKind.TRANSIENT, EventType(event))

    @classmethod
    def faulty(cls, event: EventType) -> "Stage":
        return _stage(StageKind.FAULTY, EventType(event))

    @property
    def is_event(self) -> bool:
        return self.kind != StageKind.NORMAL

    def __str__(self) -> str:
        if self.event is None:
            return "Normal"
        return f"{self.kind.name.title()}({self.event.code})"


@lru_cache(maxsize=None)
def _stage(kind: StageKind, event: Optional[EventType]) -> Stage:
    return Stage(kind, event)


_NORMAL = Stage(StageKind.NORMAL)


class Source(str, Enum):
    REAL = "real"
    SIMULATED = "simulated"
    SYNTHETIC = "synthetic"


class Task(str, Enum):
    CLASSIFY = "classify"
    REGRESS = "regress"


def decode_3w_class(code: int) -> Stage:
    """Decode a 3W label: 0 normal, k faulty, 100+k transient (k in 1..8)."""
    try:
        value = int(code)
    except (ValueError, TypeError, OverflowError):
        raise UnknownLabelCode(code) from None
    if value != code:
        raise UnknownLabelCode(code)
    if value == 0:
        return Stage.normal()
    if 1 <= value <= 8:
        return Stage.faulty(EventType(value))
    if TRANSIENT_OFFSET + 1 <= value <= TRANSIENT_OFFSET + 8:
        return Stage.transient(EventType(value - TRANSIENT_OFFSET))
    raise UnknownLabelCode(code)


def encode_3w_class(stage: Stage) -> int:
    if stage.kind == StageKind.NORMAL:
        return 0
    if stage.kind == StageKind.FAULTY:
        return stage.event.code
    return TRANSIENT_OFFSET + stage.event.code


@dataclass(frozen=True)
class Sample:
    timestamp: int
    channels: Tuple[float, ...]
    stage: Stage
    missing_mask: Tuple[bool, ...]


@dataclass(frozen=True, eq=False)
class Episode:
    """
    One labeled per-second multivariate time series.

    Arrays are made read-only on construction. Values at masked positions are
    NaN until `prepare_episode` fills them; the mask always records what was
    originally missing.
    """

    id: str
    source: Source
    event: Optional[EventType]
    timestamps: np.ndarray
    values: np.ndarray
    missing: np.ndarray
    stages: Tuple[Stage, ...]
    channel_names: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "timestamps", _frozen(np.asarray(self.timestamps, dtype=np.int64)))
        object.__setattr__(self, "values", _frozen(np.asarray(self.values, dtype=np.float64)))
        object.__setattr__(self, "missing", _frozen(np.asarray(self.missing, dtype=bool)))
        object.__setattr__(self, "stages", tuple(self.stages))
        object.__setattr__(self, "channel_names", tuple(self.channel_names))

    def __len__(self) -> int:
        return len(self.stages)

    @property
    def n_channels(self) -> int:
        return len(self.channel_names)

    @property
    def stage_kinds(self) -> np.ndarray:
        return np.fromiter((s.kind for s in self.stages), dtype=np.int8, count=len(self.stages))

    def sample(self, i: int) -> Sample:
        return Sample(
            timestamp=int(self.timestamps[i]),
            channels=tuple(float(v) for v in self.values[i]),
            stage=self.stages[i],
            missing_mask=tuple(bool(m) for m in self.missing[i]),
        )

    @property
    def samples(self) -> List[Sample]:
        return [self.sample(i) for i in range(len(self))]

    def __iter__(self) -> Iterator[Sample]:
        for i in range(len(self)):
            yield self.sample(i)

    def replace(self, **changes) -> "Episode":
        fields = {
            "id": self.id,
            "source": self.source,
            "event": self.event,
            "timestamps": self.timestamps,
            "values": self.values,
            "missing": self.missing,
            "stages": self.stages,
            "channel_names": self.channel_names,
        }
        fields.update(changes)
        return Episode(**fields)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Window:
    """
    A window_len×F slice of an episode with its two targets.

    `start` is the elapsed time in seconds from the first sample of the
    episode to the first sample of the window.
    """

    episode_id: str
    start: int
    values: np.ndarray
    class_label: bool
    prob_target: float

    @property
    def minute(self) -> int:
        """Whole minutes elapsed before the window starts."""
        return self.start // SECONDS_PER_MINUTE


@dataclass(frozen=True)
class Violation:
    kind: str
    index: int
    message: str = ""

    def __str__(self) -> str:
        return f"{self.kind}@{self.index}"


def validate_episode(episode: Episode) -> List[Violation]:
    """
    Check every Episode invariant. Never raises; returns one record per breach.

    Kinds: ChannelCountMismatch, LengthMismatch, NonMonotonicTime, TimeGap,
    StageRegression, MixedEvents, EventMismatch.
    """
    violations: List[Violation] = []
    n = len(episode.stages)
    width = len(episode.channel_names)

    if episode.values.ndim != 2 or episode.values.shape[1] != width:
        violations.append(
            Violation("ChannelCountMismatch", 0, f"values shape {episode.values.shape}")
        )
    if episode.missing.shape != episode.values.shape:
        violations.append(
            Violation("ChannelCountMismatch", 0, f"mask shape {episode.missing.shape}")
        )
    if len(episode.timestamps) != n or (episode.values.ndim == 2 and episode.values.shape[0] != n):
        violations.append(
            Violation("LengthMismatch", 0, f"{len(episode.timestamps)} timestamps for {n} stages")
        )
        return violations

    if n > 1:
        steps = np.diff(episode.timestamps)
        for k in np.flatnonzero(steps != 1):
            kind = "NonMonotonicTime" if steps[k] <= 0 else "TimeGap"
            violations.append(Violation(kind, int(k) + 1, f"step of {int(steps[k])} s"))

    highest = StageKind.NORMAL
    seen_event: Optional[EventType] = None
    for i, stage in enumerate(episode.stages):
        if stage.kind < highest:
            violations.append(
                Violation("StageRegression", i, f"{stage} after {highest.name.title()}")
            )
        highest = max(highest, stage.kind)
        if stage.event is not None:
            if seen_event is None:
                seen_event = stage.event
            elif stage.event != seen_event:
                violations.append(
                    Violation("MixedEvents", i, f"{stage} after event {seen_event.code}")
                )

    if seen_event is not None and episode.event is not None and seen_event != episode.event:
        violations.append(
            Violation(
                "EventMismatch",
                0,
                f"labels carry event {seen_event.code}, episode {episode.event.code}",
            )
        )
    return violations


def stages_from_codes(codes: Sequence[int]) -> Tuple[Stage, ...]:
    return tuple(decode_3w_class(c) for c in codes)
