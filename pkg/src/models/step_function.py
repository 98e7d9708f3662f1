"""
Right-continuous step function stored as an exact jump list
"""

from dataclasses import dataclass, field
from typing import Iterable, Tuple, Union

import numpy as np

ArrayLike = Union[float, Iterable[float], np.ndarray]


@dataclass(frozen=True, eq=False)
class StepFunction:
    """F(t) = sum of jump_sizes at jump_times u <= t; F(t) = 0 below the first jump."""

    jump_times: np.ndarray
    jump_sizes: np.ndarray
    _cumulative: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        times = np.asarray(self.jump_times, dtype=float).reshape(-1)
        sizes = np.asarray(self.jump_sizes, dtype=float).reshape(-1)
        if times.shape != sizes.shape:
            raise ValueError("jump_times and jump_sizes must have the same length")
        if times.size and (np.any(times < 0) or not np.all(np.isfinite(times))):
            raise ValueError("jump_times must be finite and nonnegative")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("jump_times must be strictly increasing")
        times.setflags(write=False)
        sizes.setflags(write=False)
        cumulative = np.cumsum(sizes)
        cumulative.setflags(write=False)
        object.__setattr__(self, "jump_times", times)
        object.__setattr__(self, "jump_sizes", sizes)
        object.__setattr__(self, "_cumulative", cumulative)

    @classmethod
    def empty(cls) -> "StepFunction":
        """The zero function"""
        return cls(np.empty(0), np.empty(0))

    @classmethod
    def from_events(cls, times: ArrayLike, sizes: ArrayLike) -> "StepFunction":
        """Build from possibly unsorted, possibly tied jumps by summing sizes at equal times"""
        times = np.asarray(times, dtype=float).reshape(-1)
        sizes = np.asarray(sizes, dtype=float).reshape(-1)
        if times.size == 0:
            return cls.empty()
        unique, inverse = np.unique(times, return_inverse=True)
        summed = np.zeros(unique.size)
        np.add.at(summed, inverse, sizes)
        return cls(unique, summed)

    @property
    def is_empty(self) -> bool:
        return self.jump_times.size == 0

    @property
    def is_monotone(self) -> bool:
        """True when every jump is nonnegative (cumulative hazard shape)"""
        return bool(np.all(self.jump_sizes >= 0))

    def __call__(self, t: ArrayLike) -> Union[float, np.ndarray]:
        """Vectorised right-continuous evaluation"""
        t_arr = np.asarray(t, dtype=float)
        if self.is_empty:
            values = np.zeros_like(t_arr, dtype=float)
        else:
            idx = np.searchsorted(self.jump_times, t_arr, side="right") - 1
            values = np.where(idx >= 0, self._cumulative[np.maximum(idx, 0)], 0.0)
        if values.ndim == 0:
            return float(values)
        return values

    def total(self) -> float:
        """Value after the last jump"""
        return float(self._cumulative[-1]) if not self.is_empty else 0.0

    def merge(self, other: "StepFunction") -> "StepFunction":
        """Union of jumps; the result evaluates to self(t) + other(t)"""
        return StepFunction.from_events(
            np.concatenate([self.jump_times, other.jump_times]),
            np.concatenate([self.jump_sizes, other.jump_sizes]),
        )

    def scaled(self, factor: float) -> "StepFunction":
        """Same jump times with every jump multiplied by factor"""
        return StepFunction(self.jump_times, self.jump_sizes * factor)

    def restricted(self, upper: float) -> "StepFunction":
        """Keep jumps at times <= upper"""
        keep = self.jump_times <= upper
        return StepFunction(self.jump_times[keep], self.jump_sizes[keep])

    def pairs(self) -> Tuple[Tuple[float, float], ...]:
        """(jump time, jump size) tuples"""
        return tuple(zip(self.jump_times.tolist(), self.jump_sizes.tolist()))

    def to_dict(self) -> dict:
        return {
            "jump_times": self.jump_times.tolist(),
            "jump_sizes": self.jump_sizes.tolist(),
        }


def step_eval(f: StepFunction, t: float) -> float:
    """Evaluate f at a single nonnegative time"""
    if t < 0:
        raise ValueError(f"step_eval requires t >= 0, got {t}")
    return float(f(t))
