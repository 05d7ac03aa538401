"""Five-band normalization of raw parameter values.

A quantitative parameter carries four expert thresholds ``a1 < a2 < a3 < a4``.
The normalized scale maps raw values piecewise-linearly so that the
thresholds land exactly on 1, 2, 3 and 4, which puts every reading into one
of five intervals: [0,1) strong-low, [1,2) abnormal-low, [2,3) normal,
[3,4) abnormal-high, [4,inf) strong-high.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels


@dataclass(frozen=True)
class ThresholdSet:
    """Four strictly increasing positive thresholds in the parameter's unit."""

    a1: float
    a2: float
    a3: float
    a4: float

    def __post_init__(self) -> None:
        if not (0.0 < self.a1 < self.a2 < self.a3 < self.a4):
            raise ValueError(
                f"thresholds must satisfy 0 < a1 < a2 < a3 < a4, "
                f"got ({self.a1}, {self.a2}, {self.a3}, {self.a4})"
            )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a1, self.a2, self.a3, self.a4)


class Band(Enum):
    """The five intervals of the normalized scale."""

    STRONG_LOW = "strong_low"
    ABNORMAL_LOW = "abnormal_low"
    NORMAL = "normal"
    ABNORMAL_HIGH = "abnormal_high"
    STRONG_HIGH = "strong_high"


def normalize(x: float, t: ThresholdSet) -> float:
    """Map a raw value onto the normalized scale.

    Piecewise linear: x/a1 below a1, then one unit per threshold interval,
    and 3 + x/a4 from a4 upward.  Negative raw values clamp to 0 so the
    result always lies in [0, inf).
    """
    if not np.isfinite(x):
        raise ValueError(f"cannot normalize non-finite value {x!r}")
    if x < t.a1:
        v = x / t.a1
    elif x < t.a2:
        v = 1.0 + (x - t.a1) / (t.a2 - t.a1)
    elif x < t.a3:
        v = 2.0 + (x - t.a2) / (t.a3 - t.a2)
    elif x < t.a4:
        v = 3.0 + (x - t.a3) / (t.a4 - t.a3)
    else:
        v = 3.0 + x / t.a4
    return max(v, 0.0)


def normalize_array(x: np.ndarray, t: ThresholdSet) -> np.ndarray:
    """Vectorized :func:`normalize` over a 1-D array of raw values."""
    return _kernels.normalize_batch(
        np.ascontiguousarray(x, dtype=np.float64), t.a1, t.a2, t.a3, t.a4
    )


def band_of(v: float) -> Band:
    """Interval membership of a normalized value; 4.0 is strong-high."""
    if v < 1.0:
        return Band.STRONG_LOW
    if v < 2.0:
        return Band.ABNORMAL_LOW
    if v < 3.0:
        return Band.NORMAL
    if v < 4.0:
        return Band.ABNORMAL_HIGH
    return Band.STRONG_HIGH


def severity_distance(v: float) -> float:
    """Distance of a normalized value from the normal band [2, 3]."""
    return max(0.0, 2.0 - v, v - 3.0)


def severity_distance_array(v: np.ndarray) -> np.ndarray:
    """Vectorized :func:`severity_distance`."""
    return _kernels.severity_distance_batch(
        np.ascontiguousarray(v, dtype=np.float64)
    )
