"""
Seeded synthetic episodes with normal -> transient -> faulty structure.

Noise comes from numpy's PCG64 bit generator (`np.random.Generator`), so runs
are bit-identical for a seed on one platform; other implementations can only
be expected to match the noise moments.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..core.types import WINDOW_LEN, Episode, EventType, Source, Stage

logger = logging.getLogger(__name__)

CHANNELS = ("P1", "T1", "P2", "P3", "T2")

# Event-2-like signature: the DHSV closes, so flow stops and the pressures
# downstream of the valve collapse while the downhole pressure builds up.
DEFAULT_BASELINES = (2.5e7, 117.0, 1.2e7, 6.0e6, 75.0)
DEFAULT_NOISE_SD = (2.0e4, 0.05, 2.0e4, 2.0e4, 0.1)
DEFAULT_FAULT_SHIFT = (5.0e5, -1.0, -2.0e6, -1.5e6, -3.0)


class SynthSpec(BaseModel):
    """Stage lengths and per-channel signal shape of one synthetic episode."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    event: EventType = EventType.SPURIOUS_DHSV_CLOSURE
    normal_len: int = Field(default=1200, ge=0)
    transient_len: int = Field(default=600, ge=0)
    faulty_len: int = Field(default=900, ge=0)
    baselines: Tuple[float, ...] = DEFAULT_BASELINES
    noise_sd: Tuple[float, ...] = DEFAULT_NOISE_SD
    fault_shift: Tuple[float, ...] = DEFAULT_FAULT_SHIFT
    channel_names: Tuple[str, ...] = CHANNELS
    seed: int = 0

    @model_validator(mode="after")
    def _check(self) -> "SynthSpec":
        width = len(self.baselines)
        if width == 0:
            raise ValueError("at least one channel is required")
        for name in ("noise_sd", "fault_shift", "channel_names"):
            if len(getattr(self, name)) != width:
                raise ValueError(f"{name} has {len(getattr(self, name))} entries, expected {width}")
        if any(sd < 0 for sd in self.noise_sd):
            raise ValueError("noise_sd must be >= 0")
        if self.total_len < WINDOW_LEN:
            raise ValueError(f"episode must span at least {WINDOW_LEN} s, got {self.total_len}")
        return self

    @property
    def total_len(self) -> int:
        return self.normal_len + self.transient_len + self.faulty_len


def normal_spec(spec: SynthSpec) -> SynthSpec:
    """Same channels and length as `spec` with no event segment."""
    return spec.model_copy(
        update={"normal_len": spec.total_len, "transient_len": 0, "faulty_len": 0}
    )


def ramp_profile(normal_len: int, transient_len: int, faulty_len: int) -> np.ndarray:
    """0 over normal, i/(L+1) for i=1..L over the transient, 1 over faulty."""
    interior = np.arange(1, transient_len + 1, dtype=np.float64) / (transient_len + 1)
    return np.concatenate([np.zeros(normal_len), interior, np.ones(faulty_len)])


def generate_episode(spec: SynthSpec, episode_id: Optional[str] = None) -> Episode:
    is_event = spec.transient_len + spec.faulty_len > 0
    n = spec.total_len
    rng = np.random.Generator(np.random.PCG64(spec.seed))

    ramp = ramp_profile(spec.normal_len, spec.transient_len, spec.faulty_len)
    baselines = np.asarray(spec.baselines, dtype=np.float64)
    shifts = np.asarray(spec.fault_shift, dtype=np.float64)
    noise = rng.standard_normal((n, len(baselines))) * np.asarray(spec.noise_sd)
    values = baselines + ramp[:, None] * shifts + noise

    stages = (
        (Stage.normal(),) * spec.normal_len
        + (Stage.transient(spec.event),) * spec.transient_len
        + (Stage.faulty(spec.event),) * spec.faulty_len
    )
    prefix = f"SYNTH_event{spec.event.code}" if is_event else "SYNTH_normal"
    return Episode(
        id=episode_id or f"{prefix}_seed{spec.seed}",
        source=Source.SYNTHETIC,
        event=spec.event if is_event else None,
        timestamps=np.arange(n, dtype=np.int64),
        values=values,
        missing=np.zeros(values.shape, dtype=bool),
        stages=stages,
        channel_names=spec.channel_names,
    )


def generate_dataset(
    specs: Sequence[SynthSpec],
    normals: int,
    master_seed: int,
    normal_template: Optional[SynthSpec] = None,
    n_jobs: int = 1,
) -> List[Episode]:
    """
    Event episodes first (one per spec), then `normals` pure-normal episodes.

    Episode i is generated with seed master_seed + i; normal episodes reuse the
    first spec's channels and length unless a template is given.
    """
    template = normal_template or (specs[0] if specs else SynthSpec())
    jobs = []
    for i, spec in enumerate(specs):
        seed = master_seed + i
        episode_id = f"SYNTH_event{spec.event.code}_{i:04d}"
        jobs.append((spec.model_copy(update={"seed": seed}), episode_id))
    for j in range(normals):
        i = len(specs) + j
        spec = normal_spec(template).model_copy(update={"seed": master_seed + i})
        jobs.append((spec, f"SYNTH_normal_{i:04d}"))

    episodes = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(generate_episode)(spec, episode_id) for spec, episode_id in jobs
    )
    logger.info(
        f"Generated {len(specs)} event and {normals} normal episodes (master_seed={master_seed})"
    )
    return list(episodes)
