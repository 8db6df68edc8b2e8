"""Sampled-signal container used across the package."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParams


@dataclass
class Waveform:
    """A mono float64 signal with its sample rate."""

    samples: np.ndarray
    fs_hz: float

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise InvalidParams(f"expected a 1-D signal, got shape {arr.shape}")
        if not self.fs_hz > 0:
            raise InvalidParams(f"sample rate must be positive, got {self.fs_hz}")
        self.samples = arr
        self.fs_hz = float(self.fs_hz)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.fs_hz


def check_same_rate(*waves: Waveform) -> float:
    """Return the common sample rate or raise on mismatch."""
    rates = {w.fs_hz for w in waves}
    if len(rates) != 1:
        raise InvalidParams(f"sample rates differ: {sorted(rates)}")
    return rates.pop()
