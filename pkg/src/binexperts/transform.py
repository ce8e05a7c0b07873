"""Discrete shift/rotation transforms on image-shaped templates.

Transforms are enumerated row-major over ``rotations x shifts_y x shifts_x``
(rotation slowest, x-shift fastest).  A transform rotates about the
geometric image centre ``((W-1)/2, (H-1)/2)`` with nearest-neighbour
resampling and then shifts.  Positive shifts move content right (x) and
down (y); positive angles turn content counter-clockwise on screen.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TransformGrid:
    shifts_x: tuple[int, ...] = (0,)
    shifts_y: tuple[int, ...] = (0,)
    rotations: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        object.__setattr__(self, "shifts_x", tuple(int(s) for s in self.shifts_x))
        object.__setattr__(self, "shifts_y", tuple(int(s) for s in self.shifts_y))
        object.__setattr__(self, "rotations", tuple(float(r) for r in self.rotations))
        for name in ("shifts_x", "shifts_y", "rotations"):
            values = getattr(self, name)
            if not values:
                raise ValueError(f"{name} must be nonempty")
            if len(set(values)) != len(values):
                raise ValueError(f"{name} has repeated entries")
        if 0 not in self.shifts_x or 0 not in self.shifts_y or 0.0 not in self.rotations:
            raise ValueError("transform grid must contain the identity")

    @classmethod
    def identity_grid(cls) -> "TransformGrid":
        return cls()

    @classmethod
    def letters_default(cls) -> "TransformGrid":
        shifts = tuple(range(-8, 9, 2))
        return cls(shifts, shifts, (-20.0, -10.0, 0.0, 10.0, 20.0))

    def __len__(self) -> int:
        return len(self.shifts_x) * len(self.shifts_y) * len(self.rotations)

    def params(self, t: int) -> tuple[int, int, float]:
        """Return ``(shift_x, shift_y, rotation)`` for transform index ``t``."""
        if not 0 <= t < len(self):
            raise IndexError(f"transform {t} out of range for grid of size {len(self)}")
        nx, ny = len(self.shifts_x), len(self.shifts_y)
        r, rest = divmod(t, nx * ny)
        iy, ix = divmod(rest, nx)
        return self.shifts_x[ix], self.shifts_y[iy], self.rotations[r]

    def index(self, shift_x: int, shift_y: int, rotation: float = 0.0) -> int:
        nx, ny = len(self.shifts_x), len(self.shifts_y)
        r = self.rotations.index(float(rotation))
        return (r * ny + self.shifts_y.index(int(shift_y))) * nx + self.shifts_x.index(int(shift_x))

    @property
    def identity(self) -> int:
        return self.index(0, 0, 0.0)

    def nearest(self, shift_x: float, shift_y: float, rotation: float) -> int:
        """Index of the grid element closest to the given parameters, axis by axis."""
        def pick(values, v):
            return values[int(np.argmin(np.abs(np.asarray(values, dtype=float) - v)))]
        return self.index(pick(self.shifts_x, shift_x), pick(self.shifts_y, shift_y),
                          pick(self.rotations, rotation))

    def all_params(self) -> list[tuple[int, int, float]]:
        return [(sx, sy, r) for r, sy, sx in itertools.product(self.rotations, self.shifts_y, self.shifts_x)]

    def to_dict(self) -> dict:
        return {"shifts_x": list(self.shifts_x), "shifts_y": list(self.shifts_y),
                "rotations": list(self.rotations)}

    @classmethod
    def from_dict(cls, d: dict) -> "TransformGrid":
        return cls(tuple(d["shifts_x"]), tuple(d["shifts_y"]), tuple(d["rotations"]))


def _coords(shape):
    h, w = shape
    rows, cols = np.mgrid[0:h, 0:w]
    return rows.ravel().astype(float), cols.ravel().astype(float)


def _rotate(rows, cols, angle, shape):
    h, w = shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    a = np.deg2rad(angle)
    x, y = cols - cx, rows - cy
    # y grows downwards, so this turns content counter-clockwise on screen
    xr = np.cos(a) * x + np.sin(a) * y
    yr = -np.sin(a) * x + np.cos(a) * y
    return np.rint(yr + cy).astype(np.int64), np.rint(xr + cx).astype(np.int64)


def _flat(r, c, shape):
    h, w = shape
    inside = (r >= 0) & (r < h) & (c >= 0) & (c < w)
    return np.where(inside, r * w + c, -1)


@functools.lru_cache(maxsize=4096)
def source_map(grid: TransformGrid, t: int, shape: tuple[int, int]) -> np.ndarray:
    """For each output pixel, the flat template index it copies (-1 for fill)."""
    sx, sy, angle = grid.params(t)
    rows, cols = _coords(shape)
    r, c = _rotate(rows - sy, cols - sx, -angle, shape)
    out = _flat(r, c, shape)
    out.setflags(write=False)
    return out


@functools.lru_cache(maxsize=4096)
def forward_map(grid: TransformGrid, t: int, shape: tuple[int, int]) -> np.ndarray:
    """For each template pixel, the flat image index it lands on (-1 if off-grid)."""
    sx, sy, angle = grid.params(t)
    rows, cols = _coords(shape)
    r, c = _rotate(rows, cols, angle, shape)
    out = _flat(r + sy, c + sx, shape)
    out.setflags(write=False)
    return out


def _require_shape(shape):
    if shape is None:
        raise ValueError("transforms need an (H, W) image shape")
    return (int(shape[0]), int(shape[1]))


def apply(grid: TransformGrid, t: int, mu, shape, fill: float) -> np.ndarray:
    """Transformed template; pixels without a source take ``fill``."""
    shape = _require_shape(shape)
    mu = np.asarray(mu, dtype=float)
    if t == grid.identity:
        return mu.copy()
    src = source_map(grid, t, shape)
    return np.where(src >= 0, mu[np.maximum(src, 0)], fill)


def apply_inverse_to_data(grid: TransformGrid, t: int, x, shape) -> tuple[np.ndarray, np.ndarray]:
    """Pull observed data back into the template frame.

    Returns ``(values, mask)``; ``values`` is meaningless where ``mask`` is 0.
    """
    shape = _require_shape(shape)
    x = np.asarray(x)
    fwd = forward_map(grid, t, shape)
    mask = (fwd >= 0).astype(np.uint8)
    values = np.where(mask == 1, x[np.maximum(fwd, 0)], 0).astype(x.dtype)
    return values, mask


def transform_stack(grid: TransformGrid, templates, shape, fill: float) -> np.ndarray:
    """All transformed versions, shape ``(K, T, D)``."""
    templates = np.asarray(templates, dtype=float)
    k, d = templates.shape
    if shape is None:
        if len(grid) != 1:
            raise ValueError("transforms need an (H, W) image shape")
        return templates[:, None, :].copy()
    shape = _require_shape(shape)
    srcs = np.stack([source_map(grid, t, shape) for t in range(len(grid))])
    padded = np.concatenate([templates, np.full((k, 1), fill)], axis=1)
    idx = np.where(srcs >= 0, srcs, d)
    return padded[:, idx]
