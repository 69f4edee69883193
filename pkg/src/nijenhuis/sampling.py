"""Seeded uniform samplers over coordinate boxes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

DEFAULT_COUNT = 64
DEFAULT_SEED = 42


@dataclass(frozen=True)
class Sampler:
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    count: int = DEFAULT_COUNT
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(a) for a in self.lo))
        object.__setattr__(self, "hi", tuple(float(b) for b in self.hi))
        if len(self.lo) != len(self.hi) or not self.lo:
            raise DimensionError("sampler box needs matching, non-empty lo/hi")
        for a, b in zip(self.lo, self.hi):
            if not a < b:
                raise ValueError(f"sampler box requires lo < hi, got [{a}, {b}]")
        if self.count < 1:
            raise ValueError("sampler count must be >= 1")

    @classmethod
    def box(cls, n: int, lo: float = -1.0, hi: float = 1.0, count: int = DEFAULT_COUNT,
            seed: int = DEFAULT_SEED) -> "Sampler":
        return cls((lo,) * n, (hi,) * n, count, seed)

    @property
    def dim(self) -> int:
        return len(self.lo)

    def points(self) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        return rng.uniform(self.lo, self.hi, size=(self.count, self.dim))

    def doubled(self) -> "Sampler":
        """Sampler on the tangent chart ``(x, v)``; velocities reuse the base box."""
        return Sampler(self.lo + self.lo, self.hi + self.hi, self.count, self.seed)


def as_points(samples, n: int) -> np.ndarray:
    """Accept a :class:`Sampler` or an explicit ``(m, n)`` array of points."""
    pts = samples.points() if isinstance(samples, Sampler) else np.atleast_2d(np.asarray(samples, dtype=float))
    if pts.shape[-1] != n:
        raise DimensionError(f"samples have dimension {pts.shape[-1]}, chart has {n}")
    return pts
