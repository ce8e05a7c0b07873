"""Hard-EM learning of extremal-rule expert models.

The E-step is likelihood matching pursuit.  The M-step re-estimates each
template entry from the data values for which that expert held the most
extreme opinion, with a Beta(eps, eps) pseudocount.  The online variant
keeps running counts N_k(d) and grows the model one expert at a time.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .compose import Rule, RuleKind, compose_template
from .inference import extremal_responsibilities, lmp_infer
from .likelihood import pixel_likelihood
from .model import ExpertModel, GeometricModel, Representation
from .rng import Stream
from .transform import TransformGrid, apply_inverse_to_data, forward_map

log = logging.getLogger(__name__)

GEOMETRY_JITTER = 1e-6


@dataclass
class TrainConfig:
    rule: Rule = field(default_factory=lambda: Rule(RuleKind.MAX_MINUS_MIN))
    epsilon: float = 1.0
    k_max: int = 8
    epochs: int = 5
    theta_add: float = math.log(0.6)
    seed: int = 0
    init: str = "random"
    init_low: float = 0.3
    init_high: float = 0.7
    shape: tuple[int, int] | None = None
    grid: TransformGrid = field(default_factory=TransformGrid)
    strict_eq1: bool = False
    workers: int | None = None

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        if self.init not in ("random", "online"):
            raise ValueError(f"unknown init {self.init!r}")


def _workers(requested: int | None) -> int:
    if requested is not None:
        return max(1, requested)
    env = os.environ.get("BE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _assignments(model: ExpertModel, x, rep: Representation):
    """Yield ``(expert, values, responsible)`` per pick, in the template frame."""
    k_star, l_star = extremal_responsibilities(model, rep)
    for j, (k, t) in enumerate(rep.picks):
        if model.shape is None:
            values = np.asarray(x)
            mask = np.ones(model.dim, dtype=bool)
            image_idx = np.arange(model.dim)
        else:
            values, mask = apply_inverse_to_data(model.grid, t, x, model.shape)
            mask = mask.astype(bool)
            image_idx = np.maximum(forward_map(model.grid, t, model.shape), 0)
        responsible = mask & ((k_star[image_idx] == j) | (l_star[image_idx] == j))
        yield k, values.astype(float), responsible


def e_step(model: ExpertModel, data, workers: int | None = None,
           robustify_first: bool | None = None) -> list[Representation]:
    data = list(data)
    if not data:
        return []

    def one(x):
        return lmp_infer(model, x, robustify_first=robustify_first)

    n = _workers(workers)
    if n == 1 or len(data) < 2:
        return [one(x) for x in data]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(one, data))


def m_step_batch(model: ExpertModel, data, reps, strict_eq1: bool = False) -> ExpertModel:
    """Closed-form template update from hard extremal assignments.

    Entries no example was assigned to keep their value unless
    ``strict_eq1`` is set, in which case they fall back to the prior mean.
    """
    data = list(data)
    reps = list(reps)
    if len(data) != len(reps):
        raise ValueError(f"{len(data)} examples but {len(reps)} representations")
    eps = model.epsilon
    num = np.zeros_like(model.templates)
    cnt = np.zeros_like(model.templates)
    for x, rep in zip(data, reps):
        for k, values, responsible in _assignments(model, x, rep):
            num[k] += np.where(responsible, values, 0.0)
            cnt[k] += responsible
    fresh = (num + eps) / (cnt + 2.0 * eps)
    if strict_eq1:
        templates = fresh
        counts = cnt + 2.0 * eps
    else:
        touched = cnt > 0
        templates = np.where(touched, fresh, model.templates)
        counts = np.where(touched, cnt + 2.0 * eps, model.counts)
    return model.replace(templates=templates, counts=counts)


def online_update(model: ExpertModel, x, rep: Representation) -> ExpertModel:
    """Running-average update of every entry the picks are responsible for."""
    x = np.asarray(x)
    if x.shape != (model.dim,):
        raise ValueError(f"dimension mismatch: data {x.shape}, model D={model.dim}")
    templates = model.templates.copy()
    counts = model.counts.copy()
    for k, values, responsible in list(_assignments(model, x, rep)):
        n = counts[k]
        updated = (n * templates[k] + values) / (n + 1.0)
        templates[k] = np.where(responsible, updated, templates[k])
        counts[k] = np.where(responsible, n + 1.0, n)
    return model.replace(templates=templates, counts=counts)


def smoothed_example(x, epsilon: float) -> np.ndarray:
    """(x + eps) / (1 + 2 eps): a template built from a single example."""
    return (np.asarray(x, dtype=float) + epsilon) / (1.0 + 2.0 * epsilon)


def first_expert_model(x, cfg: TrainConfig) -> ExpertModel:
    template = smoothed_example(x, cfg.epsilon)[None, :]
    counts = np.full_like(template, 1.0 + 2.0 * cfg.epsilon)
    return ExpertModel(rule=cfg.rule, templates=template, epsilon=cfg.epsilon, shape=cfg.shape,
                       grid=cfg.grid, counts=counts)


def _new_expert(model: ExpertModel, x, rep: Representation | None):
    x = np.asarray(x)
    tilde = smoothed_example(x, model.epsilon)
    if rep is None:
        rep = lmp_infer(model, x)
    composed = model.composed(rep.picks)
    explained = pixel_likelihood(x, composed)
    if model.rule.write_black:
        keep = explained >= 0.5
        abstain = 0.5
    else:
        keep = explained >= pixel_likelihood(x, tilde)
        abstain = model.rule.pivot
    template = np.where(keep, abstain, tilde)
    return template, ~keep


def init_new_expert(model: ExpertModel, x, rep: Representation | None = None) -> np.ndarray:
    """Template for an extra expert covering what the current model misses.

    Dimensions already explained at least as well as by the smoothed example
    abstain; the rest copy the smoothed example.  For write-black models the
    comparison is against probability 1/2 instead.
    """
    return _new_expert(model, x, rep)[0]


def train_online(data, cfg: TrainConfig, history: list | None = None) -> ExpertModel:
    """Sequential initialization followed by online updates, one pass.

    The first example becomes a single global expert.  Every later example
    is explained with the current experts; if its mean per-dimension
    log-likelihood falls below ``cfg.theta_add`` (and room is left) a
    correcting expert is appended at the identity transform before the
    update.  ``history`` receives one ``(index, K, loglik_per_dim, added)``
    row per example.
    """
    it = iter(data)
    try:
        first = np.asarray(next(it))
    except StopIteration:
        raise ValueError("online training needs at least one example") from None
    model = first_expert_model(first, cfg)
    if history is not None:
        history.append((0, 1, float("nan"), True))
    for i, x in enumerate(it, start=1):
        x = np.asarray(x)
        rep = lmp_infer(model, x)
        per_dim = rep.loglik / model.dim
        added = model.n_experts < cfg.k_max and per_dim < cfg.theta_add
        if added:
            template, taken = _new_expert(model, x, rep)
            counts = np.where(taken, 1.0 + 2.0 * cfg.epsilon, 2.0 * cfg.epsilon)
            model = model.replace(templates=np.vstack([model.templates, template]),
                                  counts=np.vstack([model.counts, counts]))
            rep = Representation(rep.picks + [(model.n_experts - 1, model.grid.identity)],
                                 rep.loglik, rep.trace)
        model = online_update(model, x, rep)
        if history is not None:
            history.append((i, model.n_experts, per_dim, added))
    return model


def random_model(cfg: TrainConfig, dim: int) -> ExpertModel:
    """K templates drawn i.i.d. uniform on ``[init_low, init_high]``."""
    u = Stream(cfg.seed, stream=1).uniform((cfg.k_max, dim))
    templates = cfg.init_low + (cfg.init_high - cfg.init_low) * u
    return ExpertModel(rule=cfg.rule, templates=templates, epsilon=cfg.epsilon, shape=cfg.shape,
                       grid=cfg.grid, counts=np.zeros_like(templates))


def mean_loglik(reps) -> float:
    return float(np.mean([r.loglik for r in reps]))


def train_batch(data, cfg: TrainConfig, init: ExpertModel | None = None,
                history: list | None = None) -> ExpertModel:
    """Alternate E- and M-steps for ``cfg.epochs`` iterations.

    Without ``init`` the starting point is random (``cfg.init == "random"``)
    or the result of ``train_online``.  ``history`` receives the mean train
    log-likelihood after each epoch.
    """
    data = [np.asarray(x) for x in data]
    if not data:
        raise ValueError("batch training needs data")
    if init is not None:
        model = init
    elif cfg.init == "online":
        model = train_online(data, cfg)
    else:
        model = random_model(cfg, data[0].size)
    if cfg.epochs == 0:
        return model
    reps = e_step(model, data, workers=cfg.workers)
    previous = mean_loglik(reps)
    for epoch in range(cfg.epochs):
        model = m_step_batch(model, data, reps, strict_eq1=cfg.strict_eq1)
        reps = e_step(model, data, workers=cfg.workers)
        current = mean_loglik(reps)
        if current < previous - 1e-6:
            log.info("epoch %d: mean log-likelihood dropped %.6g -> %.6g", epoch + 1, previous, current)
        previous = current
        if history is not None:
            history.append((epoch + 1, current))
    return model


def fit_geometry(reps, grid: TransformGrid, n_experts: int) -> GeometricModel:
    """Sample mean/covariance of per-expert transforms over complete representations."""
    rows = []
    for rep in reps:
        ks = rep.experts()
        if sorted(ks) != list(range(n_experts)):
            continue
        by_expert = dict(rep.picks)
        row = []
        for k in range(n_experts):
            row.extend(grid.params(by_expert[k]))
        rows.append(row)
    if len(rows) < 2:
        raise ValueError(f"need at least 2 representations using all {n_experts} experts once, got {len(rows)}")
    configs = np.asarray(rows, dtype=float)
    cov = np.atleast_2d(np.cov(configs, rowvar=False, ddof=1))
    cov = (cov + cov.T) / 2.0
    return GeometricModel(mean=configs.mean(axis=0), cov=cov, n=len(rows))


def draw_configurations(g: GeometricModel, n: int, seed: int) -> np.ndarray:
    """Raw Gaussian draws of the concatenated transform parameters, shape ``(n, 3K)``."""
    m = g.mean.size
    chol = np.linalg.cholesky(g.cov + GEOMETRY_JITTER * np.eye(m))
    z = Stream(seed, stream=2).normal((n, m))
    return g.mean + z @ chol.T


def snap_configuration(model: ExpertModel, params) -> list[tuple[int, int]]:
    params = np.asarray(params, dtype=float).reshape(-1, 3)
    return [(k, model.grid.nearest(*p)) for k, p in enumerate(params)]


def sample_configuration(g: GeometricModel | None, model: ExpertModel, seed: int) -> np.ndarray:
    """Composed template for one configuration drawn from the geometry model."""
    if g is None:
        raise ValueError("model has no fitted geometry")
    if g.mean.size != 3 * model.n_experts:
        raise ValueError("geometry does not match the number of experts")
    params = draw_configurations(g, 1, seed)[0]
    picks = snap_configuration(model, params)
    stack = np.stack([model.transformed_template(k, t) for k, t in picks])
    return compose_template(model.rule, stack)


def sample_configurations(g: GeometricModel | None, model: ExpertModel, n: int,
                          seed: int) -> np.ndarray:
    """``n`` composed templates from consecutive substreams ``seed, seed+1, ...``."""
    return np.stack([sample_configuration(g, model, seed + i) for i in range(n)])


def per_example_loglik(model: ExpertModel, data) -> np.ndarray:
    return np.array([r.loglik for r in e_step(model, data)])

