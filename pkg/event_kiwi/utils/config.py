"""
Configuration loading.

A TOML file with the sections [experiment], [forest], [tcn], [synth],
[columns] and [grid]. Every section is a pydantic model that rejects unknown
keys. Command-line overrides look like `section.key=value` (the value is read
as a TOML scalar or array, falling back to a plain string) and win over the
file. EVENT_KIWI_DATA_ROOT supplies experiment.data_root when neither sets it.
"""

import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..core.types import EventType
from ..data.ingestion import ColumnMapping
from ..data.synthgen import (
    CHANNELS,
    DEFAULT_BASELINES,
    DEFAULT_FAULT_SHIFT,
    DEFAULT_NOISE_SD,
    SynthSpec,
)
from ..errors import ConfigError
from ..harness.experiment import ExperimentConfig, ExperimentSettings
from ..harness.search import GridSettings
from ..learn.forest import ForestParams
from ..learn.tcn import TcnConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

load_dotenv()

logger = logging.getLogger(__name__)


class SynthSettings(BaseModel):
    """The [synth] section: a seeded synthetic dataset of one event."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    event: EventType = EventType.SPURIOUS_DHSV_CLOSURE
    episodes: int = Field(default=20, ge=0)
    normals: int = Field(default=20, ge=0)
    master_seed: int = 0
    normal_len: int = Field(default=1200, ge=0)
    transient_len: int = Field(default=600, ge=0)
    faulty_len: int = Field(default=900, ge=0)
    baselines: Tuple[float, ...] = DEFAULT_BASELINES
    noise_sd: Tuple[float, ...] = DEFAULT_NOISE_SD
    fault_shift: Tuple[float, ...] = DEFAULT_FAULT_SHIFT
    channel_names: Tuple[str, ...] = CHANNELS

    def specs(self) -> List[SynthSpec]:
        fields = self.model_dump(exclude={"episodes", "normals", "master_seed"})
        return [SynthSpec(**fields) for _ in range(self.episodes)]

    def template(self) -> SynthSpec:
        return SynthSpec(**self.model_dump(exclude={"episodes", "normals", "master_seed"}))


class AppConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    experiment: ExperimentSettings = Field(default_factory=ExperimentSettings)
    forest: ForestParams = Field(default_factory=ForestParams)
    tcn: TcnConfig = Field(default_factory=TcnConfig)
    synth: SynthSettings = Field(default_factory=SynthSettings)
    columns: ColumnMapping = Field(default_factory=ColumnMapping)
    grid: GridSettings = Field(default_factory=GridSettings)

    def experiment_config(self) -> ExperimentConfig:
        return ExperimentConfig(
            **self.experiment.model_dump(),
            forest=self.forest,
            tcn=self.tcn,
            columns=self.columns,
        )


def parse_value(text: str) -> Any:
    """TOML scalar/array if it parses, else the raw string."""
    try:
        return tomllib.loads(f"value = {text}")["value"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(data: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """Apply `a.b.c=value` overrides to a nested dict (copied, not mutated)."""
    merged = _deep_copy(data)
    for item in overrides:
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep or not key or "." not in key:
            raise ConfigError(
                f"Override '{item}' must look like section.key=value", {"override": item}
            )
        *parents, leaf = key.split(".")
        node = merged
        for part in parents:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(
                    f"Override '{item}' descends into a non-table '{part}'", {"override": item}
                )
            node = child
        node[leaf] = parse_value(raw.strip())
    return merged


def _deep_copy(data: Dict[str, Any]) -> Dict[str, Any]:
    return {k: _deep_copy(v) if isinstance(v, dict) else v for k, v in data.items()}


def read_toml(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"Config file {path} not found", {"path": str(path)}) from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(
            f"Config file {path} is not valid TOML: {e}", {"path": str(path)}
        ) from None


def load_config(
    path: Optional[Union[str, Path]] = None, overrides: Sequence[str] = ()
) -> AppConfig:
    data = read_toml(path) if path else {}
    data = apply_overrides(data, overrides)

    experiment = data.setdefault("experiment", {})
    if isinstance(experiment, dict) and "data_root" not in experiment:
        env_root = os.getenv("EVENT_KIWI_DATA_ROOT")
        if env_root:
            experiment["data_root"] = env_root

    try:
        config = AppConfig.model_validate(data)
    except ValidationError as e:
        errors = [
            {"field": ".".join(str(p) for p in err["loc"]), "message": err["msg"]}
            for err in e.errors()
        ]
        first = errors[0]
        raise ConfigError(
            f"Invalid config at '{first['field']}': {first['message']}", {"errors": errors}
        ) from None
    logger.debug(f"Loaded config from {path or 'defaults'} with {len(overrides)} overrides")
    return config
