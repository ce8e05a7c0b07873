"""Likelihood matching pursuit.

Greedy inference: start from the single (expert, transform) candidate that
best explains the data, then keep adding whichever candidate raises the
composed log-likelihood most, until nothing improves it by more than
``TAU`` nats or the pick budget is spent.
"""

from __future__ import annotations

import numpy as np

from .compose import RuleKind, compose_template, max_minus_min
from .likelihood import log_likelihood, truncate_template
from .model import ExpertModel, Representation

TAU = 1e-9
_CHUNK_ELEMENTS = 4_000_000


def default_max_picks(model: ExpertModel) -> int:
    k = model.n_experts
    return k if model.one_transform_per_expert else 2 * k


def _score_extremal(model, x, hi, lo, cands):
    new_hi = np.maximum(hi, cands)
    if model.rule.kind is RuleKind.MAX:
        composed = new_hi
    else:
        composed = max_minus_min(new_hi, np.minimum(lo, cands), model.rule.q)
    return log_likelihood(x, composed)


def _score_generic(model, x, picked, cands):
    scores = np.empty(len(cands))
    step = max(1, _CHUNK_ELEMENTS // max(1, (len(picked) + 1) * model.dim))
    for start in range(0, len(cands), step):
        block = cands[start:start + step]
        stack = np.concatenate(
            [np.broadcast_to(picked[:, None, :], (len(picked), len(block), model.dim)),
             block[None]], axis=0)
        scores[start:start + step] = log_likelihood(x, compose_template(model.rule, stack))
    return scores


def lmp_infer(model: ExpertModel, x, robustify_first: bool | None = None,
              max_picks: int | None = None, tol: float = TAU) -> Representation:
    """Greedy representation of ``x`` as a set of transformed experts.

    ``robustify_first`` scores the first pick with truncated templates; it
    defaults to on for rules whose abstention value is 0.  The reported
    log-likelihood always uses the untruncated composition.
    """
    if model.n_experts == 0:
        raise ValueError("cannot infer with an empty model")
    x = np.asarray(x)
    if x.shape != (model.dim,):
        raise ValueError(f"dimension mismatch: data {x.shape}, model D={model.dim}")
    if robustify_first is None:
        robustify_first = model.rule.write_black
    if max_picks is None:
        max_picks = default_max_picks(model)

    stack = model.transformed
    n_t = stack.shape[1]
    flat = stack.reshape(-1, model.dim)

    first = truncate_template(flat) if robustify_first else flat
    c0 = int(np.argmax(log_likelihood(x, first)))
    picks = [divmod(c0, n_t)]
    chosen = [c0]
    current = log_likelihood(x, flat[c0])
    trace = [current]

    available = np.ones(len(flat), dtype=bool)
    available[c0] = False
    if model.one_transform_per_expert:
        available[picks[0][0] * n_t:(picks[0][0] + 1) * n_t] = False
    hi = flat[c0].copy()
    lo = flat[c0].copy()

    while len(picks) < max_picks and available.any():
        idx = np.flatnonzero(available)
        if model.rule.extremal:
            scores = _score_extremal(model, x, hi, lo, flat[idx])
        else:
            scores = _score_generic(model, x, flat[chosen], flat[idx])
        best = int(np.argmax(scores))
        if not scores[best] - current > tol:
            break
        c = int(idx[best])
        k, t = divmod(c, n_t)
        picks.append((k, t))
        chosen.append(c)
        current = float(scores[best])
        trace.append(current)
        hi = np.maximum(hi, flat[c])
        lo = np.minimum(lo, flat[c])
        available[c] = False
        if model.one_transform_per_expert:
            available[k * n_t:(k + 1) * n_t] = False

    return Representation(picks=picks, loglik=float(current), trace=[float(v) for v in trace])


def extremal_responsibilities(model: ExpertModel, rep: Representation) -> tuple[np.ndarray, np.ndarray]:
    """Per image pixel, the pick holding the largest and smallest opinion.

    Returns two integer arrays of pick positions; -1 marks an undefined
    entry (max not above the pivot, or min not below it).  Ties go to the
    earliest pick.
    """
    if not rep.picks:
        undefined = np.full(model.dim, -1)
        return undefined, undefined.copy()
    opinions = np.stack([model.transformed[k, t] for k, t in rep.picks])
    q = model.rule.pivot
    k_star = np.argmax(opinions, axis=0)
    l_star = np.argmin(opinions, axis=0)
    k_star = np.where(opinions.max(axis=0) > q, k_star, -1)
    l_star = np.where(opinions.min(axis=0) < q, l_star, -1)
    return k_star, l_star
