from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rfdlab import (
    InvalidParams,
    RescaleInPrefix,
    RfdModel,
    RfdParams,
    closed_form_predict,
    code_length,
    init_state,
    predict,
    rescale_partition,
    run_trace,
    update,
    validate_params,
)
from rfdlab.estimator import RfdState, parse_fraction


def P(N, d, c, T, s0=None):
    return RfdParams.create(N, d, c, T, initial_counts=s0)


# ---------------------------------------------------------------- validation

def test_validate_ok():
    assert validate_params(P(2, 2, "1/2", 10, (1, 1))) == []


def test_validate_c3():
    bad = validate_params(P(2, 5, "1/2", 10, (1, 1)))
    assert len(bad) == 1 and bad[0].startswith("C3")


def test_validate_c4_sum():
    bad = validate_params(P(3, 1, 0, 3, (2, 1, 1)))
    assert any(v.startswith("C4") for v in bad)


@pytest.mark.parametrize("params, tag", [
    (RfdParams(2, 0, 0, 1, 10), "C1"),
    (RfdParams(2, 1, 1, 1, 10), "C2"),
    (RfdParams(2, 1, 3, 2, 10), "C2"),
    (RfdParams(2, 1, 0, 1, 10, (0, 1)), "C4"),
    (RfdParams(2, 1, 0, 1, 10, (1, 1, 1)), "C4"),
    (RfdParams(1, 1, 0, 1, 10), "alphabet"),
    (RfdParams(2, 1, 0, 1, 2**31 + 1), "range"),
])
def test_validate_tags(params, tag):
    assert any(v.startswith(tag) for v in validate_params(params))
    with pytest.raises(InvalidParams):
        init_state(params)


def test_c3_is_exact_at_boundary():
    # d = (1 - c)(T - N) exactly
    assert validate_params(P(2, 4, "1/2", 10)) == []
    assert validate_params(P(2, 5, "1/2", 10)) != []
    assert validate_params(P(2, 1, "2/3", 5)) == []
    assert validate_params(P(2, 2, "2/3", 5)) != []


def test_float_discount_rejected():
    with pytest.raises(TypeError):
        parse_fraction(0.5)
    assert parse_fraction("3/4") == Fraction(3, 4)


def test_create_needs_exactly_one_of_T_and_L():
    with pytest.raises(ValueError):
        RfdParams.create(2, 1, 0)
    with pytest.raises(ValueError):
        RfdParams.create(2, 1, 0, 10, L=3)
    assert RfdParams.create(4, 2, 0, L=5).threshold == 14


def test_derived():
    der = P(2, 2, "1/2", 10).derived()
    assert der.L == 4 and der.A == 1 + 2 and der.floor_one_minus_c_L == 2


# ---------------------------------------------------------------- state machine

def test_init():
    st_ = init_state(P(2, 1, 0, 10))
    assert st_.counts == [1, 1] and st_.total == 2
    st_ = init_state(P(3, 1, 0, 10, (2, 1, 1)))
    assert st_.counts == [2, 1, 1] and st_.total == 4
    # sum(s0) == T is allowed
    assert init_state(P(2, 1, 0, 3, (2, 1))).total == 3


def test_predict():
    p = predict(RfdState([1, 1], 2)).probabilities()
    assert p == (Fraction(1, 2), Fraction(1, 2))
    assert predict(RfdState([5, 1], 6)).probabilities() == (Fraction(5, 6), Fraction(1, 6))
    assert predict(RfdState([3, 2, 5], 10)).probabilities() == (
        Fraction(3, 10), Fraction(1, 5), Fraction(1, 2))


def test_update_plain():
    s = update(RfdState([1, 1], 2), 1, P(2, 1, 0, 10))
    assert (s.counts, s.total, s.rescale_steps) == ([1, 2], 3, [])


def test_update_rescale():
    s = update(RfdState([6, 3], 9), 0, P(2, 2, "1/2", 10))
    assert (s.counts, s.total, s.rescale_steps) == ([5, 1], 6, [1])
    assert s.post_rescale_totals == [6]


def test_update_zero_fixup():
    s = update(RfdState([1, 8], 9), 0, P(2, 2, "1/2", 10))
    assert (s.counts, s.total) == ([3, 4], 7)


def test_update_rejects_bad_symbol():
    with pytest.raises(ValueError):
        update(RfdState([1, 1], 2), 2, P(2, 1, 0, 10))


def test_run_trace_empty():
    preds, state = run_trace(P(2, 1, 0, 10), [])
    assert preds == [] and state.counts == [1, 1] and state.step == 0


def test_run_trace_simple():
    preds, _ = run_trace(P(2, 1, 0, 100, (1, 1)), [0, 0, 1])
    assert [p.prob(0) for p in preds] == [Fraction(1, 2), Fraction(2, 3), Fraction(3, 4)]


def test_rescale_partition():
    assert rescale_partition([], 5) == [(1, 5)]
    assert rescale_partition([3, 7], 10) == [(1, 3), (4, 7), (8, 10)]
    assert rescale_partition([3, 7], 7) == [(1, 3), (4, 7)]
    assert rescale_partition([], 0) == []


def test_closed_form():
    p = P(2, 1, 0, 100)
    assert closed_form_predict(p, [], 0) == Fraction(1, 2)
    assert closed_form_predict(p, [0, 0], 0) == Fraction(3, 4)
    assert closed_form_predict(P(2, 3, 0, 100), [0, 1], 1) == Fraction(4, 8)
    with pytest.raises(RescaleInPrefix):
        closed_form_predict(P(2, 1, 0, 4), [0, 0, 0], 0)


def test_model_wrapper_matches_trace():
    params = P(3, 2, "1/3", 11)
    seq = [0, 2, 2, 1, 0, 0, 0, 2, 1, 1, 1, 1, 0]
    preds, _ = run_trace(params, seq)
    m = RfdModel(params)
    for x, p in zip(seq, preds):
        assert m.predict() == p
        m.update(x)


# ---------------------------------------------------------------- properties

@st.composite
def params_and_seq(draw, max_n=300):
    N = draw(st.integers(2, 6))
    d = draw(st.integers(1, 5))
    den = draw(st.integers(1, 8))
    num = draw(st.integers(0, den - 1))
    # smallest T - N meeting d <= (1-c)(T-N), plus slack
    need = -(-d * den // (den - num))
    T = N + need + draw(st.integers(0, 30))
    s0 = None
    if draw(st.booleans()):
        s0 = tuple(draw(st.lists(st.integers(1, 3), min_size=N, max_size=N)))
        if sum(s0) > T:
            s0 = None
    params = RfdParams(N, d, num, den, T, s0)
    seq = draw(st.lists(st.integers(0, N - 1), max_size=max_n))
    return params, seq


@settings(max_examples=200, deadline=None)
@given(params_and_seq())
def test_trace_invariants(ps):
    params, seq = ps
    assert validate_params(params) == []
    state = init_state(params)
    for x in seq:
        assert state.total == sum(state.counts)
        assert min(state.counts) >= 1
        dist = predict(state)
        assert sum(dist.probabilities()) == 1
        update(state, x, params)
        assert state.total <= params.threshold
    assert state.step == len(seq)


@settings(max_examples=150, deadline=None)
@given(params_and_seq())
def test_code_length_matches_trace(ps):
    params, seq = ps
    preds, state = run_trace(params, seq)
    bits, lean = code_length(params, seq)
    assert lean.rescale_steps == state.rescale_steps
    assert lean.counts == state.counts and lean.total == state.total
    assert lean.peak_total == state.peak_total
    assert lean.post_rescale_totals == state.post_rescale_totals
    assert bits == pytest.approx(sum(p.bits(x) for p, x in zip(preds, seq)), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(params_and_seq())
def test_deterministic(ps):
    params, seq = ps
    assert run_trace(params, seq)[1].rescale_steps == run_trace(params, seq)[1].rescale_steps


@settings(max_examples=100, deadline=None)
@given(params_and_seq())
def test_rescale_partition_covers(ps):
    params, seq = ps
    _, state = run_trace(params, seq)
    parts = rescale_partition(state, len(seq))
    if not seq:
        assert parts == []
        return
    assert parts[0][0] == 1 and parts[-1][1] == len(seq)
    assert all(b + 1 == a for (_, b), (a, _) in zip(parts, parts[1:]))
    assert all(a <= b for a, b in parts)


@settings(max_examples=100, deadline=None)
@given(params_and_seq(max_n=60))
def test_closed_form_on_rescale_free_prefixes(ps):
    params, seq = ps
    preds, state = run_trace(params, seq)
    first = state.rescale_steps[0] if state.rescale_steps else len(seq) + 1
    # predictions for steps 1..first are computed before the first rescale
    for k in range(min(first, len(seq))):
        for x in range(params.alphabet_size):
            assert preds[k].prob(x) == closed_form_predict(params, seq[:k], x)
