"""
3W-style CSV ingestion.

Reads one episode per CSV file, selects the meaningful (non-empty,
non-constant) channels across a pool of episodes, fills remaining gaps and
builds a catalog of a data root laid out in event folders 0..8.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field

from ..core.types import (
    Episode,
    EventType,
    Source,
    StageKind,
    decode_3w_class,
    encode_3w_class,
)
from ..errors import EmptyFile, MalformedHeader, MissingRoot, NoUsableChannels, UnknownLabelCode

logger = logging.getLogger(__name__)

DEFAULT_CHANNELS = {
    "P1": "P-PDG",
    "T1": "T-TPT",
    "P2": "P-TPT",
    "P3": "P-MON-CKP",
    "T2": "T-JUS-CKP",
}

# 3W file name prefixes
SOURCE_PREFIXES = {
    "WELL-": Source.REAL,
    "SIMULATED_": Source.SIMULATED,
    "DRAWN_": Source.SIMULATED,
    "SYNTH_": Source.SYNTHETIC,
}


class ColumnMapping(BaseModel):
    """Canonical channel name -> CSV header, plus timestamp/label columns."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    timestamp: str = "timestamp"
    label: str = "class"
    channels: Dict[str, str] = Field(default_factory=lambda: dict(DEFAULT_CHANNELS))
    empty_threshold: float = Field(default=0.5, ge=0.0, le=1.0)


@dataclass(frozen=True)
class FeatureMask:
    kept: Tuple[str, ...]
    dropped: Tuple[Tuple[str, str], ...]
    fill_values: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            "kept": list(self.kept),
            "dropped": [list(d) for d in self.dropped],
            "fill_values": {k: float(v) for k, v in self.fill_values.items()},
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "FeatureMask":
        return cls(
            kept=tuple(data["kept"]),
            dropped=tuple((str(name), str(reason)) for name, reason in data["dropped"]),
            fill_values={k: float(v) for k, v in data.get("fill_values", {}).items()},
        )


@dataclass(frozen=True)
class CatalogEntry:
    path: Path
    event: Optional[EventType]
    source: Source
    sample_count: int


@dataclass(frozen=True)
class Catalog:
    entries: Tuple[CatalogEntry, ...]
    warnings: Tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def for_event(self, event: Optional[EventType]) -> List[CatalogEntry]:
        return [e for e in self.entries if e.event == event]


def source_from_name(name: str, default: Source = Source.REAL) -> Source:
    for prefix, source in SOURCE_PREFIXES.items():
        if name.startswith(prefix):
            return source
    return default


def parse_numeric(cells: pd.Series) -> np.ndarray:
    """
    Parse string cells to float64 with correctly rounded conversion.

    Blank or unparsable cells come back as NaN.
    """
    text = cells.str.strip()
    parsed = pd.to_numeric(text.replace("", np.nan), errors="coerce").notna().to_numpy()
    out = np.full(len(text), np.nan)
    out[parsed] = text.to_numpy(dtype=object)[parsed].astype(np.float64)
    return out


def _parse_timestamps(column: pd.Series, path: Path) -> np.ndarray:
    numeric = pd.to_numeric(column, errors="coerce")
    if not numeric.isna().any():
        return numeric.to_numpy(dtype=np.float64).round().astype(np.int64)
    parsed = pd.to_datetime(column, errors="coerce")
    if parsed.isna().any():
        bad = int(parsed.isna().to_numpy().argmax())
        raise MalformedHeader(
            f"{path}: unparsable timestamp at row {bad}", {"path": str(path), "row": bad}
        )
    seconds = (parsed - parsed.iloc[0]).dt.total_seconds().to_numpy()
    return np.round(seconds).astype(np.int64)


def load_episode_csv(
    path: Union[str, Path],
    mapping: Optional[ColumnMapping] = None,
    source: Optional[Source] = None,
    event: Optional[EventType] = None,
) -> Episode:
    """
    Load one CSV episode.

    Channels come out in mapping order; a mapped channel absent from the
    header is fully masked. Unparsable numeric cells become masked-missing.
    Blank class cells are filled from their neighbours; any other class cell
    that is not a number raises UnknownLabelCode.
    """
    path = Path(path)
    mapping = mapping or ColumnMapping()
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise EmptyFile(f"{path} is empty", {"path": str(path)}) from None

    header = [str(c).strip() for c in frame.columns]
    frame.columns = header
    if mapping.timestamp not in header or mapping.label not in header:
        raise MalformedHeader(
            f"{path}: header needs '{mapping.timestamp}' and '{mapping.label}' columns",
            {"path": str(path), "header": header},
        )
    present = [name for name, column in mapping.channels.items() if column in header]
    if not present:
        raise MalformedHeader(
            f"{path}: no sensor columns from mapping {list(mapping.channels.values())}",
            {"path": str(path), "header": header},
        )
    if frame.empty:
        raise EmptyFile(f"{path} has a header but no rows", {"path": str(path)})

    raw_labels = frame[mapping.label].str.strip()
    blank = (raw_labels == "").to_numpy()
    labels = pd.Series(parse_numeric(raw_labels))
    bad = ~blank & labels.isna().to_numpy()
    if bad.any():
        raise UnknownLabelCode(raw_labels.iloc[int(bad.argmax())])
    if labels.isna().all():
        raise EmptyFile(f"{path} has no class labels", {"path": str(path)})
    if labels.isna().any():
        unlabeled = int(labels.isna().sum())
        logger.warning(f"{path.name}: {unlabeled} unlabeled rows filled from neighbours")
        labels = labels.ffill().bfill()
    stages = tuple(decode_3w_class(code) for code in labels.to_numpy())

    timestamps = _parse_timestamps(frame[mapping.timestamp], path)
    timestamps = timestamps - timestamps[0]

    values = np.full((len(frame), len(mapping.channels)), np.nan)
    for j, (name, column) in enumerate(mapping.channels.items()):
        if column in header:
            values[:, j] = parse_numeric(frame[column])
    missing = ~np.isfinite(values)
    values[missing] = np.nan

    events = {s.event for s in stages if s.event is not None}
    if event is None and len(events) == 1:
        event = events.pop()

    episode = Episode(
        id=path.stem,
        source=source or source_from_name(path.name),
        event=event,
        timestamps=timestamps,
        values=values,
        missing=missing,
        stages=stages,
        channel_names=tuple(mapping.channels),
    )
    logger.debug(f"Loaded {path.name}: {len(episode)} samples, event={event}")
    return episode


def write_episode_csv(
    episode: Episode, path: Union[str, Path], mapping: Optional[ColumnMapping] = None
) -> Path:
    """Write an episode in the schema load_episode_csv reads."""
    path = Path(path)
    mapping = mapping or ColumnMapping()
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = {mapping.timestamp: episode.timestamps}
    for j, name in enumerate(episode.channel_names):
        column = mapping.channels.get(name, name)
        cells = episode.values[:, j].astype(object)
        cells[episode.missing[:, j]] = None
        columns[column] = cells
    columns[mapping.label] = [encode_3w_class(s) for s in episode.stages]
    pd.DataFrame(columns).to_csv(path, index=False, float_format="%.17g")
    return path


def select_features(
    episodes: Sequence[Episode], empty_threshold: float = 0.5
) -> FeatureMask:
    """
    Pick channels that are neither Empty (> threshold missing, pooled) nor
    Constant (zero range over observed values). Kept order follows input order.
    """
    if not episodes:
        raise NoUsableChannels("select_features needs at least one episode")
    names = episodes[0].channel_names
    for ep in episodes:
        if ep.channel_names != names:
            raise MalformedHeader(
                f"Episode '{ep.id}' channels {ep.channel_names} differ from {names}",
                {"episode_id": ep.id},
            )

    total = sum(len(ep) for ep in episodes)
    missing = np.zeros(len(names), dtype=np.int64)
    lows = np.full(len(names), np.inf)
    highs = np.full(len(names), -np.inf)
    for ep in episodes:
        missing += ep.missing.sum(axis=0)
        observed = np.where(ep.missing, np.nan, ep.values)
        if len(ep) and (~ep.missing).any():
            with np.errstate(all="ignore"):
                col_has = (~ep.missing).any(axis=0)
                lows[col_has] = np.minimum(lows[col_has], np.nanmin(observed[:, col_has], axis=0))
                highs[col_has] = np.maximum(highs[col_has], np.nanmax(observed[:, col_has], axis=0))

    kept, dropped = [], []
    for j, name in enumerate(names):
        if total == 0 or missing[j] / total > empty_threshold or not np.isfinite(lows[j]):
            dropped.append((name, "Empty"))
        elif highs[j] - lows[j] == 0:
            dropped.append((name, "Constant"))
        else:
            kept.append(name)

    if not kept:
        raise NoUsableChannels(
            "Every channel is empty or constant", {"dropped": [list(d) for d in dropped]}
        )

    fill_values = {}
    for name in kept:
        j = names.index(name)
        observed = np.concatenate([ep.values[~ep.missing[:, j], j] for ep in episodes])
        fill_values[name] = float(np.median(observed))

    logger.info(f"Feature selection kept {kept}, dropped {dropped}")
    return FeatureMask(kept=tuple(kept), dropped=tuple(dropped), fill_values=fill_values)


def prepare_episode(episode: Episode, mask: FeatureMask) -> Episode:
    """
    Restrict to kept channels and fill gaps forward then backward.

    A channel with no observation in this episode takes the pooled median.
    """
    index = [episode.channel_names.index(name) for name in mask.kept]
    values = episode.values[:, index]
    missing = episode.missing[:, index]
    if missing.any():
        frame = pd.DataFrame(np.where(missing, np.nan, values), columns=list(mask.kept))
        frame = frame.ffill().bfill()
        for name in mask.kept:
            if frame[name].isna().any():
                logger.warning(
                    f"{episode.id}: channel {name} has no observations, using pooled median"
                )
                frame[name] = frame[name].fillna(mask.fill_values.get(name, 0.0))
        values = frame.to_numpy(dtype=np.float64)
    return episode.replace(values=values, missing=missing, channel_names=tuple(mask.kept))


def _count_rows(path: Path) -> int:
    with open(path, "rb") as f:
        lines = sum(1 for line in f if line.strip())
    return max(lines - 1, 0)


def _scan_file(
    path: Path, event: Optional[EventType]
) -> Tuple[Optional[CatalogEntry], Optional[str]]:
    try:
        count = _count_rows(path)
    except OSError as e:
        return None, f"Unreadable file {path}: {e}"
    if count <= 0:
        return None, f"Skipping {path}: no data rows"
    entry = CatalogEntry(
        path=path, event=event, source=source_from_name(path.name), sample_count=count
    )
    return entry, None


def build_catalog(root: Union[str, Path], n_jobs: int = 1) -> Catalog:
    """
    Scan `root/<0..8>/*.csv`. Folder 0 is normal operation; anything else
    that is not an event code is skipped with a warning.
    """
    root = Path(root)
    if not root.is_dir():
        raise MissingRoot(f"Data root {root} does not exist", {"root": str(root)})

    warnings: List[str] = []
    jobs = []
    for folder in sorted(p for p in root.iterdir() if p.is_dir()):
        if not folder.name.isdigit() or int(folder.name) > 8:
            message = f"Skipping folder '{folder.name}': not an event code 0..8"
            logger.warning(message)
            warnings.append(message)
            continue
        code = int(folder.name)
        event = EventType(code) if code else None
        jobs.extend((path, event) for path in sorted(folder.glob("*.csv")))

    results = Parallel(n_jobs=n_jobs, prefer="threads")(delayed(_scan_file)(p, e) for p, e in jobs)
    entries = []
    for entry, warning in results:
        if warning:
            logger.warning(warning)
            warnings.append(warning)
        if entry:
            entries.append(entry)
    entries.sort(key=lambda e: str(e.path))
    logger.info(f"Catalog of {root}: {len(entries)} files, {len(warnings)} warnings")
    return Catalog(entries=tuple(entries), warnings=tuple(warnings))


def load_catalog_episodes(
    catalog: Catalog,
    mapping: Optional[ColumnMapping] = None,
    events: Optional[Sequence[Optional[EventType]]] = None,
    sources: Optional[Sequence[Source]] = None,
) -> List[Episode]:
    """Load the catalog files matching the event/source filters, skipping bad files."""
    episodes = []
    for entry in catalog.entries:
        if events is not None and entry.event not in events:
            continue
        if sources is not None and entry.source not in sources:
            continue
        try:
            episodes.append(load_episode_csv(entry.path, mapping, entry.source, entry.event))
        except Exception as e:
            logger.warning(f"Skipping {entry.path}: {e}")
    return episodes


def dataset_stats(catalog: Catalog) -> Dict[str, Dict[str, int]]:
    """Whole minutes per event and source, in the layout of the dataset summary table."""
    table: Dict[str, Dict[str, int]] = defaultdict(lambda: {s.value: 0 for s in Source})
    for entry in catalog.entries:
        key = "normal" if entry.event is None else f"event{entry.event.code}"
        table[key][entry.source.value] += entry.sample_count // 60
    rows = {}
    for key in sorted(table, key=lambda k: (k != "normal", k)):
        row = dict(table[key])
        row["total"] = sum(row.values())
        rows[key] = row
    return rows


def event_stage_counts(episode: Episode) -> Dict[str, int]:
    kinds = episode.stage_kinds
    return {kind.name.lower(): int((kinds == kind).sum()) for kind in StageKind}
