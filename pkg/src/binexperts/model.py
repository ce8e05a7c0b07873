"""Model containers shared by inference, learning and the file formats."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .compose import Rule, compose_template
from .transform import TransformGrid, apply, transform_stack


@dataclass
class GeometricModel:
    """Gaussian over concatenated per-expert (shift_x, shift_y, rotation)."""

    mean: np.ndarray
    cov: np.ndarray
    n: int

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.cov = np.asarray(self.cov, dtype=float)
        m = self.mean.size
        if self.cov.shape != (m, m):
            raise ValueError(f"covariance must be {m}x{m}, got {self.cov.shape}")
        if not np.isfinite(self.mean).all():
            raise ValueError("geometry mean must be finite")


@dataclass
class ExpertModel:
    """K Bernoulli templates plus everything needed to compose and update them.

    ``counts`` holds N_k(d), the number of (pseudo-)observations behind each
    template entry.  ``fill`` is the value used for pixels shifted in from
    outside the image; it defaults to the rule's abstention value.
    """

    rule: Rule
    templates: np.ndarray
    epsilon: float = 1.0
    shape: tuple[int, int] | None = None
    grid: TransformGrid = field(default_factory=TransformGrid)
    counts: np.ndarray | None = None
    geometry: GeometricModel | None = None
    one_transform_per_expert: bool = True
    fill: float | None = None

    def __post_init__(self):
        self.templates = np.atleast_2d(np.asarray(self.templates, dtype=float))
        if self.templates.shape[0] == 0:
            self.templates = self.templates.reshape(0, self.templates.shape[-1])
        if self.templates.size and (self.templates.min() < 0 or self.templates.max() > 1
                                    or np.isnan(self.templates).any()):
            raise ValueError("templates must lie in [0, 1]")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.counts is None:
            self.counts = np.zeros_like(self.templates)
        self.counts = np.asarray(self.counts, dtype=float)
        if self.counts.shape != self.templates.shape:
            raise ValueError("counts must match the template array")
        if self.shape is not None:
            self.shape = (int(self.shape[0]), int(self.shape[1]))
            if self.shape[0] * self.shape[1] != self.dim:
                raise ValueError(f"shape {self.shape} does not match D={self.dim}")
        elif len(self.grid) != 1:
            raise ValueError("a transform grid needs an image shape")

    @property
    def n_experts(self) -> int:
        return self.templates.shape[0]

    @property
    def dim(self) -> int:
        return self.templates.shape[1]

    @property
    def background(self) -> float:
        if self.fill is not None:
            return self.fill
        a = self.rule.abstention
        return 0.5 if a is None else a

    @cached_property
    def transformed(self) -> np.ndarray:
        """Every expert under every transform, shape ``(K, T, D)``."""
        out = transform_stack(self.grid, self.templates, self.shape, self.background)
        out.setflags(write=False)
        return out

    def transformed_template(self, k: int, t: int) -> np.ndarray:
        if self.shape is None:
            return self.templates[k].copy()
        return apply(self.grid, t, self.templates[k], self.shape, self.background)

    def composed(self, picks) -> np.ndarray:
        stack = [self.transformed[k, t] for k, t in picks]
        arr = np.asarray(stack, dtype=float).reshape(len(stack), self.dim)
        return compose_template(self.rule, arr)

    def replace(self, **changes) -> "ExpertModel":
        return dataclasses.replace(self, **changes)


@dataclass
class Representation:
    """Ordered (expert, transform) picks with the achieved log-likelihood."""

    picks: list[tuple[int, int]]
    loglik: float
    trace: list[float]

    def experts(self) -> list[int]:
        return [k for k, _ in self.picks]

    def to_dict(self) -> dict:
        return {"picks": [[int(k), int(t)] for k, t in self.picks],
                "loglik": float(self.loglik), "trace": [float(v) for v in self.trace]}

    @classmethod
    def from_dict(cls, d: dict) -> "Representation":
        return cls([(int(k), int(t)) for k, t in d["picks"]], float(d["loglik"]),
                   [float(v) for v in d["trace"]])
