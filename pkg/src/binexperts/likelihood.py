"""Bernoulli log-likelihoods (in nats) and template robustification."""

from __future__ import annotations

import numpy as np

from .compose import DELTA


def _as_bits(x) -> np.ndarray:
    x = np.asarray(x)
    if x.size and not np.isin(x, (0, 1)).all():
        raise ValueError("binary data must contain only 0 and 1")
    return x.astype(bool)


def log_likelihood(x, mu) -> float | np.ndarray:
    """Product-Bernoulli log-likelihood of ``x`` under ``mu``.

    ``mu`` may carry leading batch axes; the sum runs over the last axis.
    Template entries are clipped to ``[DELTA, 1 - DELTA]`` first.
    """
    bits = _as_bits(x)
    mu = np.asarray(mu, dtype=float)
    if mu.shape[-1] != bits.shape[-1]:
        raise ValueError(f"dimension mismatch: data {bits.shape[-1]}, template {mu.shape[-1]}")
    c = np.clip(mu, DELTA, 1.0 - DELTA)
    terms = np.where(bits, np.log(c), np.log1p(-c))
    out = terms.sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def pixel_likelihood(x, mu) -> np.ndarray:
    """Per-dimension probability P(x(d) | mu(d)), unclipped."""
    bits = _as_bits(x)
    mu = np.asarray(mu, dtype=float)
    return np.where(bits, mu, 1.0 - mu)


def truncate_template(mu) -> np.ndarray:
    """Raise every entry below 1/2 to 1/2 so only the support is scored."""
    return np.maximum(0.5, np.asarray(mu, dtype=float))


def mix_uniform(mu, alpha: float) -> np.ndarray:
    """Convex combination ``alpha * mu + (1 - alpha) / 2``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha * np.asarray(mu, dtype=float) + (1.0 - alpha) / 2.0
