"""Sampled scalar functions on strictly increasing grids."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from os import PathLike
from typing import Callable

import numpy as np

INTERPOLATIONS = ("linear", "constant_left")


@dataclass(frozen=True)
class SampledFunction:
    """Values of a function on a strictly increasing grid.

    ``interpolation`` is ``"linear"`` (piecewise linear) or
    ``"constant_left"`` (each cell takes the value at its left node).
    """

    grid: np.ndarray
    values: np.ndarray
    interpolation: str = "linear"
    name: str = field(default="value", compare=False)

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise ValueError("grid and values must be 1-D arrays of equal length")
        if grid.size == 0:
            raise ValueError("empty grid")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if not np.all(np.isfinite(values)) or not np.all(np.isfinite(grid)):
            raise ValueError("grid and values must be finite")
        if self.interpolation not in INTERPOLATIONS:
            raise ValueError(f"interpolation must be one of {INTERPOLATIONS}")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, fn: Callable, grid, **kwargs) -> "SampledFunction":
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.asarray(fn(grid), dtype=float) * np.ones_like(grid), **kwargs)

    def __len__(self) -> int:
        return self.grid.size

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.interpolation == "linear":
            return np.interp(t, self.grid, self.values)
        idx = np.clip(np.searchsorted(self.grid, t, side="right") - 1, 0, self.grid.size - 1)
        return self.values[idx]

    def __add__(self, other: "SampledFunction") -> "SampledFunction":
        self._check_same_grid(other)
        return SampledFunction(self.grid, self.values + other.values, self.interpolation)

    def __sub__(self, other: "SampledFunction") -> "SampledFunction":
        self._check_same_grid(other)
        return SampledFunction(self.grid, self.values - other.values, self.interpolation)

    def __mul__(self, c: float) -> "SampledFunction":
        return SampledFunction(self.grid, c * self.values, self.interpolation)

    __rmul__ = __mul__

    def _check_same_grid(self, other: "SampledFunction") -> None:
        if self.grid.shape != other.grid.shape or np.any(self.grid != other.grid):
            raise ValueError("sampled functions live on different grids")

    @property
    def is_uniform(self) -> bool:
        if self.grid.size < 3:
            return True
        h = np.diff(self.grid)
        return bool(np.all(np.abs(h - h[0]) <= 1e-9 * h[0]))

    def to_csv(self, path: str | PathLike | None = None, header: str = "t") -> str:
        """Write ``t,value`` rows with a header; returns the text."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([header, self.name])
        for x, y in zip(self.grid, self.values):
            writer.writerow([repr(float(x)), repr(float(y))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path: str | PathLike, **kwargs) -> "SampledFunction":
        with open(path, encoding="utf-8") as fh:
            return cls.parse_csv(fh.read(), **kwargs)

    @classmethod
    def parse_csv(cls, text: str, **kwargs) -> "SampledFunction":
        """Parse two-column CSV text with a header row."""
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if len(rows) < 2 or any(len(r) != 2 for r in rows):
            raise ValueError("expected a header row and exactly two columns")
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
        return cls(data[:, 0], data[:, 1], name=rows[0][1].strip(), **kwargs)


def uniform_grid(t_max: float, h: float, *, start: float = 0.0) -> np.ndarray:
    """Uniform grid ``start, start+h, ..., t_max`` (``t_max`` included)."""
    n = int(round((t_max - start) / h))
    if n < 1 or not np.isclose(start + n * h, t_max, rtol=1e-9, atol=0.0):
        raise ValueError("t_max - start must be a positive multiple of h")
    return start + h * np.arange(n + 1)


def graded_grid(t_max: float, n: int, *, power: float = 2.0) -> np.ndarray:
    """Grid ``t_max (j/n)^power`` clustered towards the origin."""
    if n < 1 or power < 1:
        raise ValueError("graded grid needs n >= 1 and power >= 1")
    return t_max * (np.arange(n + 1) / n) ** power


def log_grid(t_min: float, t_max: float, n: int) -> np.ndarray:
    return np.geomspace(t_min, t_max, n)
