"""Composition rules for product-Bernoulli experts.

A rule maps the opinions of K experts about one binary variable to a single
probability.  ``compose_template`` applies a rule along axis 0 of an array,
so the same code composes scalars, templates, and stacks of candidate
templates.

Opinions are sorted along the expert axis before any arithmetic and all
reductions accumulate sequentially.  That makes every rule exactly
permutation invariant and makes appending an abstaining opinion a bit-exact
no-op for the rules that have one.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

DELTA = 1e-7
MAX_EXACT_EXPERTS = 16


class RuleKind(enum.Enum):
    NOISY_OR = "noisyor"
    SUM_OF_ODDS = "sumofodds"
    MAX = "max"
    ARITHMETIC_MEAN = "mean"
    SUM_OF_LOG_ODDS = "sumoflogodds"
    NORMALIZED_SUM_EXACT = "normsum-exact"
    NORMALIZED_SUM_APPROX = "normsum-approx"
    MAX_MINUS_MIN = "maxminusmin"


_ASYMMETRIC = {RuleKind.NOISY_OR, RuleKind.SUM_OF_ODDS, RuleKind.MAX}


@dataclass(frozen=True)
class Rule:
    kind: RuleKind
    q: float = 0.5

    def __post_init__(self):
        if self.kind is RuleKind.MAX_MINUS_MIN and not 0.0 <= self.q < 1.0:
            raise ValueError(f"q must lie in [0, 1) for max-minus-min, got {self.q}")

    @classmethod
    def parse(cls, name: str, q: float = 0.5) -> "Rule":
        try:
            kind = RuleKind(name.lower())
        except ValueError:
            names = ", ".join(k.value for k in RuleKind)
            raise ValueError(f"unknown rule {name!r}; expected one of {names}") from None
        return cls(kind, q)

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def symmetric(self) -> bool:
        return self.kind not in _ASYMMETRIC

    @property
    def abstention(self) -> float | None:
        """Opinion value that leaves the composition unchanged (None if no such value)."""
        if self.kind is RuleKind.ARITHMETIC_MEAN:
            return None
        if self.kind is RuleKind.MAX_MINUS_MIN:
            return self.q
        return 0.5 if self.symmetric else 0.0

    @property
    def extremal(self) -> bool:
        return self.kind in (RuleKind.MAX, RuleKind.MAX_MINUS_MIN)

    @property
    def pivot(self) -> float:
        """Threshold separating "on" and "off" votes when assigning responsibilities.

        The max rule behaves like max-minus-min with q = 0.
        """
        if self.kind is RuleKind.MAX_MINUS_MIN:
            return self.q
        return 0.0 if not self.symmetric else 0.5

    @property
    def write_black(self) -> bool:
        """True for models whose abstention value is 0 (max, or max-minus-min with q = 0)."""
        return self.abstention == 0.0


def _check(p: np.ndarray) -> None:
    if p.size and (np.isnan(p).any() or p.min() < 0.0 or p.max() > 1.0):
        raise ValueError("opinions must lie in [0, 1]")


def _seq_sum(a: np.ndarray) -> np.ndarray:
    acc = np.zeros(a.shape[1:])
    for row in a:
        acc = acc + row
    return acc


def _seq_prod(a: np.ndarray) -> np.ndarray:
    acc = np.ones(a.shape[1:])
    for row in a:
        acc = acc * row
    return acc


def max_minus_min(hi, lo, q: float = 0.5):
    """Max-minus-min rule from the largest and smallest opinion.

    ``q + (hi - q)_+ - (q - lo)_+`` evaluated piecewise so that agreeing
    opinions return the extreme value itself.
    """
    hi = np.asarray(hi, dtype=float)
    lo = np.asarray(lo, dtype=float)
    out = (hi + lo) - q
    out = np.where(lo >= q, hi, out)
    out = np.where(hi <= q, lo, out)
    return out


def _lattice(corner: np.ndarray) -> np.ndarray:
    dev = corner - 0.5
    num = _seq_sum(dev)
    den = _seq_sum(np.abs(dev))
    with np.errstate(invalid="ignore", divide="ignore"):
        val = 0.5 * (num / den + 1.0)
    return np.where(den == 0.0, 0.5, val)


def _normalized_sum_exact(p: np.ndarray) -> np.ndarray:
    k = p.shape[0]
    if k > MAX_EXACT_EXPERTS:
        raise ValueError(
            f"exact normalized sum enumerates 2^K corners; K={k} exceeds "
            f"{MAX_EXACT_EXPERTS}, use the approximate rule"
        )
    upper_cell = p > 0.5
    base = np.where(upper_cell, 0.5, 0.0)
    t = np.where(upper_cell, (p - 0.5) / 0.5, p / 0.5)
    out = np.zeros(p.shape[1:])
    for bits in itertools.product((0, 1), repeat=k):
        w = np.ones(p.shape[1:])
        corner = np.empty_like(p)
        for i, b in enumerate(bits):
            w = w * (t[i] if b else 1.0 - t[i])
            corner[i] = base[i] + 0.5 * b
        out = out + w * _lattice(corner)
    # The corner weights sum to 1 only up to rounding.
    return np.clip(out, 0.0, 1.0)


def _normalized_sum_approx(p: np.ndarray) -> np.ndarray:
    return _lattice(p)


def compose_template(rule: Rule, templates) -> np.ndarray:
    """Compose expert opinions along axis 0.

    ``templates`` has shape ``(K, ...)``; the result has the trailing shape.
    With K = 0 the rule's abstention value is returned (q for
    max-minus-min).
    """
    p = np.asarray(templates, dtype=float)
    if p.ndim == 0:
        raise ValueError("compose_template needs an expert axis")
    _check(p)
    kind = rule.kind
    shape = p.shape[1:]
    if p.shape[0] == 0:
        if kind is RuleKind.ARITHMETIC_MEAN:
            raise ValueError("arithmetic mean of zero experts is undefined")
        return np.full(shape, rule.abstention, dtype=float)
    p = np.sort(p, axis=0)

    if kind is RuleKind.NOISY_OR:
        return 1.0 - _seq_prod(1.0 - p)
    if kind is RuleKind.SUM_OF_ODDS:
        # only the upper end needs clipping; zero odds keep 0 an exact abstention
        c = np.minimum(p, 1.0 - DELTA)
        return 1.0 - 1.0 / (1.0 + _seq_sum(c / (1.0 - c)))
    if kind is RuleKind.MAX:
        return p[-1].copy()
    if kind is RuleKind.ARITHMETIC_MEAN:
        return _seq_sum(p) / p.shape[0]
    if kind is RuleKind.SUM_OF_LOG_ODDS:
        c = np.clip(p, DELTA, 1.0 - DELTA)
        s = _seq_sum(np.log(c) - np.log1p(-c))
        return 1.0 / (1.0 + np.exp(-s))
    if kind is RuleKind.NORMALIZED_SUM_EXACT:
        return _normalized_sum_exact(p)
    if kind is RuleKind.NORMALIZED_SUM_APPROX:
        return _normalized_sum_approx(p)
    return max_minus_min(p[-1], p[0], rule.q)


def compose(rule: Rule, opinions) -> float:
    """Compose a single vector of K opinions into one probability."""
    p = np.asarray(opinions, dtype=float).reshape(-1)
    return float(compose_template(rule, p))


def normalized_sum_exact(opinions) -> float:
    return compose(Rule(RuleKind.NORMALIZED_SUM_EXACT), opinions)


def normalized_sum_approx(opinions) -> float:
    return compose(Rule(RuleKind.NORMALIZED_SUM_APPROX), opinions)
