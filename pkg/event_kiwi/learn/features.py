"""
Window statistics and z-score normalization.

Nine statistics per channel, grouped by channel:
mean, std, skewness, kurtosis, min, max, median, q1, q3.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np
from scipy import stats

from ..core.types import Window
from ..errors import LengthMismatch, TooFewSamples

logger = logging.getLogger(__name__)

STAT_NAMES = ("mean", "std", "skew", "kurt", "min", "max", "median", "q1", "q3")
N_STATS = len(STAT_NAMES)


def feature_names(channels: Sequence[str]) -> List[str]:
    return [f"{channel}.{stat}" for channel in channels for stat in STAT_NAMES]


def extract_stats(window: np.ndarray) -> np.ndarray:
    """
    Statistics of an n x F window (no NaNs) as a flat 9*F vector.

    Sample std uses n-1. Skewness and excess kurtosis are the biased
    (divisor-n) estimates from scipy.stats and are 0 for a constant column.
    Quantiles interpolate linearly at rank (n-1)p.
    """
    # C order: batch and streamed windows must reduce identically
    x = np.ascontiguousarray(window, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise LengthMismatch(f"Expected an n x F window with n >= 2, got shape {x.shape}")

    mean = x.mean(axis=0)
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    std = x.std(axis=0, ddof=1)

    flat = hi == lo
    skew = np.zeros(x.shape[1])
    kurt = np.zeros(x.shape[1])
    if not flat.all():
        varying = np.ascontiguousarray(x[:, ~flat])
        skew[~flat] = stats.skew(varying, axis=0, bias=True)
        kurt[~flat] = stats.kurtosis(varying, axis=0, fisher=True, bias=True)
    std = np.where(flat, 0.0, std)

    q1, median, q3 = np.quantile(x, [0.25, 0.5, 0.75], axis=0, method="linear")
    table = np.stack([mean, std, skew, kurt, lo, hi, median, q1, q3], axis=1)
    return table.reshape(-1)


def extract_batch(windows: Sequence[Window]) -> np.ndarray:
    """Row i is extract_stats(windows[i].values)."""
    if not windows:
        return np.zeros((0, 0))
    return np.stack([extract_stats(w.values) for w in windows])


@dataclass(frozen=True, eq=False)
class Normalizer:
    mean: np.ndarray
    std: np.ndarray

    def __len__(self) -> int:
        return len(self.mean)

    def to_dict(self) -> Dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, data: Dict) -> "Normalizer":
        mean = np.asarray(data["mean"], dtype=np.float64)
        std = np.asarray(data["std"], dtype=np.float64)
        if mean.shape != std.shape or mean.ndim != 1:
            raise LengthMismatch("normalizer mean/std shapes differ")
        return cls(mean=mean, std=std)


def fit_normalizer(vectors: np.ndarray) -> Normalizer:
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise TooFewSamples(
            f"Normalizer needs at least 2 training vectors, got {x.shape[0] if x.ndim else 0}",
            {"n": int(x.shape[0]) if x.ndim else 0},
        )
    return Normalizer(mean=x.mean(axis=0), std=x.std(axis=0, ddof=1))


def apply_normalizer(normalizer: Normalizer, vectors: np.ndarray) -> np.ndarray:
    """(x - mean) / std; zero-std features map to 0. Accepts one vector or a batch."""
    x = np.asarray(vectors, dtype=np.float64)
    if x.shape[-1] != len(normalizer):
        raise LengthMismatch(
            f"Feature vector has {x.shape[-1]} entries, normalizer expects {len(normalizer)}",
            {"got": int(x.shape[-1]), "expected": len(normalizer)},
        )
    degenerate = normalizer.std == 0
    scale = np.where(degenerate, 1.0, normalizer.std)
    return np.where(degenerate, 0.0, (x - normalizer.mean) / scale)
