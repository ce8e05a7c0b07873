"""Audit of every likelihood-matching-pursuit call made while tests run.

``install`` wraps ``lmp_infer`` in every module that bound it, so inferences
made by learning, synthetic scenes and the CLI are all checked.
"""

import threading

import binexperts
from binexperts import inference, learning, synthetic

_lock = threading.Lock()
STATS = {"calls": 0, "violations": 0}
_original = inference.lmp_infer


def trace_ok(rep) -> bool:
    t = rep.trace
    return bool(t) and t[-1] == rep.loglik and all(b > a for a, b in zip(t, t[1:]))


def _audited(*args, **kwargs):
    rep = _original(*args, **kwargs)
    ok = trace_ok(rep)
    with _lock:
        STATS["calls"] += 1
        STATS["violations"] += not ok
    return rep


_audited.__wrapped__ = _original


def install() -> None:
    for mod in (inference, learning, synthetic, binexperts):
        mod.lmp_infer = _audited
