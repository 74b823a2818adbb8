"""Phase point of the transformed radial system."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class FowlerState:
    """State (t, w1, w2, w1', w2') of the autonomous second-order system.

    t is the logarithmic radial variable t = -ln r; w1, w2 are the scaled
    radial profiles r^delta * u(r), r^delta * v(r).
    """

    t: float
    w1: float
    w2: float
    dw1: float
    dw2: float

    def __post_init__(self):
        for name in ("t", "w1", "w2", "dw1", "dw2"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"FowlerState.{name} must be finite")

    def as_array(self) -> np.ndarray:
        """Phase vector [w1, w2, w1', w2'] without the time coordinate."""
        return np.array([self.w1, self.w2, self.dw1, self.dw2], dtype=float)

    @classmethod
    def from_array(cls, t: float, y) -> "FowlerState":
        return cls(float(t), float(y[0]), float(y[1]), float(y[2]), float(y[3]))
