import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from binexperts.compose import (DELTA, MAX_EXACT_EXPERTS, Rule, RuleKind, compose, compose_template,
                                max_minus_min, normalized_sum_approx, normalized_sum_exact)

ALL_RULES = [Rule(k) for k in RuleKind]
ASYMMETRIC = [Rule(RuleKind.NOISY_OR), Rule(RuleKind.SUM_OF_ODDS), Rule(RuleKind.MAX)]
MMM = Rule(RuleKind.MAX_MINUS_MIN)

prob = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
opinions = st.lists(prob, min_size=1, max_size=6)


def lattice(corner):
    """The normalised-sum formula at a lattice point, written out by hand."""
    dev = [p - 0.5 for p in corner]
    den = sum(abs(v) for v in dev)
    return 0.5 if den == 0 else (sum(dev) / den + 1) / 2


# Hand-derived values at the two reference opinion pairs.
REFERENCE = {
    (0.5, 0.7): {
        "noisyor": 1 - 0.5 * 0.3,
        "sumofodds": 10 / 13,
        "max": 0.7,
        "mean": 0.6,
        "sumoflogodds": 0.7,
        "normsum-exact": 0.7,
        "normsum-approx": 1.0,
        "maxminusmin": 0.7,
    },
    (0.7, 0.01): {
        "noisyor": 1 - 0.3 * 0.99,
        "sumofodds": 232 / 331,
        "max": 0.7,
        "mean": 0.355,
        "sumoflogodds": 7 / 304,
        "normsum-exact": 0.21,
        "normsum-approx": 20 / 69,
        "maxminusmin": 0.21,
    },
}


@pytest.mark.parametrize("pair", list(REFERENCE))
@pytest.mark.parametrize("rule", ALL_RULES, ids=lambda r: r.name)
def test_reference_values(pair, rule):
    assert compose(rule, pair) == pytest.approx(REFERENCE[pair][rule.name], abs=1e-12)


def test_rule_tags():
    assert [r.symmetric for r in ASYMMETRIC] == [False] * 3
    assert all(Rule(k).symmetric for k in RuleKind if Rule(k) not in ASYMMETRIC)
    assert Rule(RuleKind.MAX).abstention == 0.0
    assert MMM.abstention == 0.5
    assert Rule(RuleKind.ARITHMETIC_MEAN).abstention is None
    assert Rule(RuleKind.MAX_MINUS_MIN, 0.0).write_black
    assert not MMM.write_black


def test_rule_parse_and_validation():
    assert Rule.parse("MaxMinusMin", 0.3) == Rule(RuleKind.MAX_MINUS_MIN, 0.3)
    with pytest.raises(ValueError, match="unknown rule"):
        Rule.parse("median")
    with pytest.raises(ValueError):
        Rule(RuleKind.MAX_MINUS_MIN, 1.0)


def test_empty_composition_is_abstention():
    for rule in ALL_RULES:
        if rule.kind is RuleKind.ARITHMETIC_MEAN:
            with pytest.raises(ValueError):
                compose(rule, [])
        else:
            assert compose(rule, []) == rule.abstention


def test_out_of_range_opinion_rejected():
    with pytest.raises(ValueError):
        compose(MMM, [0.2, 1.2])
    with pytest.raises(ValueError):
        compose(MMM, [float("nan")])


def test_compose_template_examples():
    out = compose_template(MMM, np.array([[0.5, 0.7], [0.7, 0.01]]).T)
    np.testing.assert_allclose(out, [0.7, 0.21], atol=1e-15)
    np.testing.assert_array_equal(compose_template(Rule(RuleKind.MAX), [[0.9, 0.0], [0.0, 0.8]]),
                                  [0.9, 0.8])
    with pytest.raises(ValueError):
        compose_template(MMM, [[0.1, 0.2], [0.3]])


@pytest.mark.parametrize("rule", ALL_RULES, ids=lambda r: r.name)
def test_single_template_identity(rule):
    t = np.array([0.0, 0.2, 0.5, 0.9, 1.0])
    out = compose_template(rule, t[None, :])
    if rule.kind in (RuleKind.SUM_OF_LOG_ODDS,):
        np.testing.assert_allclose(out, np.clip(t, DELTA, 1 - DELTA), atol=1e-15)
    elif rule.kind is RuleKind.NORMALIZED_SUM_APPROX:
        # The algebraic extension is a step function of a single opinion.
        np.testing.assert_array_equal(out, [0.0, 0.0, 0.5, 1.0, 1.0])
    elif rule.kind is RuleKind.SUM_OF_ODDS:
        np.testing.assert_allclose(out, t, atol=1e-6)
    else:
        np.testing.assert_allclose(out, t, atol=1e-15)


@settings(max_examples=300, deadline=None)
@given(opinions, st.sampled_from(ALL_RULES), st.randoms(use_true_random=False))
def test_range_and_permutation(ops, rule, rnd):
    v = compose(rule, ops)
    assert 0.0 <= v <= 1.0
    shuffled = list(ops)
    rnd.shuffle(shuffled)
    assert compose(rule, shuffled) == v


@settings(max_examples=300, deadline=None)
@given(opinions, st.integers(min_value=0, max_value=6))
def test_abstention_exact(ops, where):
    for rule in ALL_RULES:
        a = rule.abstention
        if a is None:
            continue
        extended = list(ops)
        extended.insert(min(where, len(extended)), a)
        assert compose(rule, extended) == compose(rule, ops), rule.name


def test_mean_has_no_abstention_value():
    rng = np.random.default_rng(3)
    rule = Rule(RuleKind.ARITHMETIC_MEAN)
    vectors = rng.uniform(size=(20, 3))
    for v in np.linspace(0, 1, 101):
        unchanged = [compose(rule, list(p) + [v]) == pytest.approx(compose(rule, p)) for p in vectors]
        assert not all(unchanged)


@settings(max_examples=300, deadline=None)
@given(opinions, st.data())
def test_duplication(ops, data):
    i = data.draw(st.integers(min_value=0, max_value=len(ops) - 1))
    dup = list(ops) + [ops[i]]
    for rule in (Rule(RuleKind.MAX), MMM):
        assert compose(rule, dup) == compose(rule, ops)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.05, 0.95), min_size=1, max_size=4), st.data())
def test_duplication_changes_cumulative_rules(ops, data):
    i = data.draw(st.integers(min_value=0, max_value=len(ops) - 1))
    p = ops[i]
    for rule in (Rule(RuleKind.NOISY_OR), Rule(RuleKind.SUM_OF_ODDS), Rule(RuleKind.SUM_OF_LOG_ODDS)):
        if abs(p - rule.abstention) < 1e-3:
            continue
        base = compose(rule, ops)
        if base in (0.0, 1.0) or min(base, 1 - base) < 1e-6:
            continue
        assert compose(rule, list(ops) + [p]) != base, rule.name


@settings(max_examples=500, deadline=None)
@given(opinions, st.floats(0.0, 0.99))
def test_max_minus_min_agreement(ops, q):
    rule = Rule(RuleKind.MAX_MINUS_MIN, q)
    v = compose(rule, ops)
    hi, lo = max(ops), min(ops)
    if lo >= q:
        assert v == hi
    elif hi <= q:
        assert v == lo
    else:
        assert v == pytest.approx(hi + lo - q, abs=1e-15)


@given(prob)
def test_max_minus_min_opposition(p):
    assert compose(MMM, [p, 1 - p]) == pytest.approx(0.5, abs=1e-15)


def test_max_minus_min_scalar_helper():
    assert max_minus_min(0.9, 0.6) == 0.9
    assert max_minus_min(0.4, 0.1) == 0.1
    assert max_minus_min(0.7, 0.01) == pytest.approx(0.21)


@settings(max_examples=200, deadline=None)
@given(st.lists(prob, min_size=2, max_size=4), st.data())
def test_monotone(ops, data):
    i = data.draw(st.integers(min_value=0, max_value=len(ops) - 1))
    bump = data.draw(st.floats(0.0, 1.0))
    up = list(ops)
    up[i] = ops[i] + (1 - ops[i]) * bump
    for kind in (RuleKind.NOISY_OR, RuleKind.SUM_OF_ODDS, RuleKind.MAX,
                 RuleKind.ARITHMETIC_MEAN, RuleKind.SUM_OF_LOG_ODDS):
        rule = Rule(kind)
        assert compose(rule, up) >= compose(rule, ops) - 1e-12, kind


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_normalized_sum_exact_matches_lattice_at_corners(k):
    for corner in itertools.product((0.0, 0.5, 1.0), repeat=k):
        assert normalized_sum_exact(corner) == pytest.approx(lattice(corner), abs=1e-15)


def test_normalized_sum_examples():
    assert normalized_sum_exact([0.5] * 5) == 0.5
    assert normalized_sum_exact([1.0, 0.0]) == 0.5
    assert normalized_sum_exact([0.5, 0.7]) == pytest.approx(0.7)
    assert normalized_sum_approx([0.7, 0.01]) == pytest.approx(0.2899, abs=1e-4)
    assert normalized_sum_approx([0.8, 0.8]) == 1.0
    assert normalized_sum_approx([0.3, 0.7]) == pytest.approx(0.5, abs=1e-15)
    assert normalized_sum_approx([0.5, 0.5]) == 0.5


def test_normalized_sum_exact_interpolates_multilinearly():
    # Brute-force multilinear interpolation over the enclosing lattice cell.
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = rng.uniform(size=3)
        lo = np.where(p < 0.5, 0.0, 0.5)
        w = (p - lo) / 0.5
        expected = 0.0
        for bits in itertools.product((0, 1), repeat=3):
            corner = lo + 0.5 * np.array(bits)
            weight = np.prod([wi if b else 1 - wi for wi, b in zip(w, bits)])
            expected += weight * lattice(corner)
        assert normalized_sum_exact(p) == pytest.approx(expected, abs=1e-12)


def test_normalized_sum_exact_size_limit():
    normalized_sum_exact(np.full(MAX_EXACT_EXPERTS, 0.6))
    with pytest.raises(ValueError):
        normalized_sum_exact(np.full(MAX_EXACT_EXPERTS + 1, 0.6))
