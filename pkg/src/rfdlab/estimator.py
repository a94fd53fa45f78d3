"""Relative frequencies with periodic discount (RFD): the exact state machine.

All state evolution uses Python integers only.  The discount ``c`` is held as
an integer pair ``num/den`` and ``floor(c * s)`` is computed as
``(num * s) // den`` so every platform produces the same trajectory.

Letters are 0-based (``0 .. N-1``); steps are 1-based, so the first
Predict/Update pair is step 1 and ``rescale_steps`` lists the steps whose
Update performed a rescale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

# keeps num * s inside 64 bits for s <= T
T_CAP = 2**31
U32_MAX = 2**32 - 1


class InvalidParams(ValueError):
    """Raised when parameters violate the operating conditions."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("invalid RFD parameters: " + "; ".join(self.violations))


class RescaleInPrefix(ValueError):
    """The closed form was requested for a prefix that contains a rescale."""


@dataclass(frozen=True)
class DerivedParams:
    L: Fraction
    A: Fraction
    floor_one_minus_c_L: int


@dataclass(frozen=True)
class RfdParams:
    """Parameters of the estimator.

    ``initial_counts=None`` means every letter starts at frequency 1.
    Instances may hold invalid values; :func:`validate_params` reports them and
    :func:`init_state` refuses to build a state from them.
    """

    alphabet_size: int
    increment: int
    discount_num: int
    discount_den: int
    threshold: int
    initial_counts: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.initial_counts is not None and not isinstance(self.initial_counts, tuple):
            object.__setattr__(self, "initial_counts", tuple(int(v) for v in self.initial_counts))

    @classmethod
    def create(cls, alphabet_size, increment, discount, threshold=None, *, L=None,
               initial_counts=None) -> "RfdParams":
        """Build params from a discount given as Fraction, str ("1/2") or number.

        Exactly one of ``threshold`` and ``L`` must be given; ``L`` sets
        ``T = N + d * L``.
        """
        if (threshold is None) == (L is None):
            raise ValueError("give exactly one of threshold and L")
        c = parse_fraction(discount)
        if threshold is None:
            threshold = alphabet_size + increment * int(L)
        return cls(alphabet_size, increment, c.numerator, c.denominator, threshold,
                   None if initial_counts is None else tuple(initial_counts))

    @property
    def discount(self) -> Fraction:
        return Fraction(self.discount_num, self.discount_den)

    @property
    def s0(self) -> tuple[int, ...]:
        if self.initial_counts is None:
            return (1,) * self.alphabet_size
        return self.initial_counts

    @property
    def t0(self) -> int:
        if self.initial_counts is None:
            return self.alphabet_size
        return sum(self.initial_counts)

    @property
    def L(self) -> Fraction:
        return Fraction(self.threshold - self.alphabet_size, self.increment)

    def derived(self) -> DerivedParams:
        L = self.L
        c = self.discount
        return DerivedParams(
            L=L,
            A=Fraction(self.alphabet_size, self.increment) + c * L,
            floor_one_minus_c_L=math.floor((1 - c) * L),
        )


def parse_fraction(value) -> Fraction:
    if isinstance(value, tuple):
        return Fraction(*value)
    if isinstance(value, float):
        # floats would smuggle binary rounding into the state machine
        raise TypeError("discount must be exact: use Fraction, int or 'num/den'")
    return Fraction(value)


def validate_params(params: RfdParams) -> list[str]:
    """Return the list of violated conditions; an empty list means valid."""
    out = []
    N, d, num, den, T = (params.alphabet_size, params.increment, params.discount_num,
                         params.discount_den, params.threshold)
    if not isinstance(N, int) or N < 2:
        out.append(f"alphabet: N={N} must be an integer >= 2")
    if not isinstance(d, int) or d < 1:
        out.append(f"C1: increment d={d} must be an integer >= 1")
    c_ok = isinstance(num, int) and isinstance(den, int) and den >= 1 and 0 <= num < den
    if not c_ok:
        out.append(f"C2: discount {num}/{den} must satisfy 0 <= c < 1")
    if not isinstance(T, int):
        out.append(f"C3: threshold T={T} must be an integer")
    elif c_ok and isinstance(d, int) and isinstance(N, int):
        # d <= (1 - c)(T - N), cleared of denominators
        if d * den > (den - num) * (T - N):
            out.append(f"C3: d={d} exceeds (1-c)(T-N) = {Fraction(den - num, den) * (T - N)}")
    s0 = params.initial_counts
    if s0 is not None:
        if isinstance(N, int) and len(s0) != N:
            out.append(f"C4: {len(s0)} initial counts given for alphabet of size {N}")
        if any(not isinstance(v, int) or v < 1 for v in s0):
            out.append("C4: every initial count must be a positive integer")
    if isinstance(T, int) and isinstance(N, int):
        total = sum(s0) if s0 is not None else N
        if total > T:
            out.append(f"C4: initial total {total} exceeds T={T}")
    if isinstance(T, int) and T > T_CAP:
        out.append(f"range: T={T} exceeds the 2^31 cap")
    if isinstance(den, int) and den > U32_MAX:
        out.append(f"range: discount denominator {den} exceeds 32 bits")
    return out


@dataclass
class RfdState:
    """Counts, their total and the rescale log.

    ``peak_total`` is the largest total seen after Init or a non-rescaling
    Update; ``post_rescale_totals[i]`` is the total at the end of the Update
    in step ``rescale_steps[i]``.
    """

    counts: list[int]
    total: int
    step: int = 0
    rescale_steps: list[int] = field(default_factory=list)
    post_rescale_totals: list[int] = field(default_factory=list)
    peak_total: int = 0

    def __post_init__(self):
        self.peak_total = max(self.peak_total, self.total)

    def copy(self) -> "RfdState":
        return RfdState(list(self.counts), self.total, self.step, list(self.rescale_steps),
                        list(self.post_rescale_totals), self.peak_total)


@dataclass(frozen=True)
class CategoricalDist:
    """Integer frequencies over their total; ``p(x) = freqs[x] / total``."""

    freqs: tuple[int, ...]
    total: int

    def prob(self, x: int) -> Fraction:
        return Fraction(self.freqs[x], self.total)

    def probabilities(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(f, self.total) for f in self.freqs)

    def bits(self, x: int) -> float:
        """Ideal code length of ``x`` in bits."""
        f = self.freqs[x]
        if f == 0:
            return math.inf
        return math.log2(self.total / f)

    def __len__(self):
        return len(self.freqs)


def init_state(params: RfdParams) -> RfdState:
    violations = validate_params(params)
    if violations:
        raise InvalidParams(violations)
    s0 = list(params.s0)
    return RfdState(s0, sum(s0))


def predict(state: RfdState) -> CategoricalDist:
    return CategoricalDist(tuple(state.counts), state.total)


def _check_symbol(x, N):
    if not isinstance(x, int) and hasattr(x, "__index__"):
        x = x.__index__()
    if not 0 <= x < N:
        raise ValueError(f"symbol {x} outside alphabet 0..{N - 1}")
    return x


def update(state: RfdState, symbol: int, params: RfdParams) -> RfdState:
    """Apply one Update in place and return ``state``."""
    s = state.counts
    x = _check_symbol(symbol, len(s))
    d = params.increment
    state.step += 1
    rescaled = state.total + d > params.threshold
    if rescaled:
        num, den = params.discount_num, params.discount_den
        s[:] = [max(1, num * v // den) for v in s]
        state.total = sum(s)
        state.rescale_steps.append(state.step)
    s[x] += d
    state.total += d
    if rescaled:
        state.post_rescale_totals.append(state.total)
    elif state.total > state.peak_total:
        state.peak_total = state.total
    return state


def run_trace(params: RfdParams, sequence: Iterable[int]) -> tuple[list[CategoricalDist], RfdState]:
    """Run Predict/Update pairs over ``sequence``.

    Element ``k`` of the returned list is the prediction used for step ``k+1``.
    """
    state = init_state(params)
    preds = []
    for x in sequence:
        preds.append(predict(state))
        update(state, x, params)
    return preds, state


def code_length(params: RfdParams, sequence: Sequence[int]) -> tuple[float, RfdState]:
    """Ideal code length in bits of ``sequence`` under RFD, plus the final state.

    Same trajectory as :func:`run_trace`, without materialising predictions.
    """
    state = init_state(params)
    s = state.counts
    t = state.total
    N = len(s)
    d, T = params.increment, params.threshold
    num, den = params.discount_num, params.discount_den
    rescales = state.rescale_steps
    after = state.post_rescale_totals
    peak = t
    log2 = math.log2
    terms = []
    k = 0
    for k, x in enumerate(sequence, 1):
        if not 0 <= x < N:
            raise ValueError(f"symbol {x} outside alphabet 0..{N - 1}")
        terms.append(log2(t / s[x]))
        if t + d > T:
            s[:] = [max(1, num * v // den) for v in s]
            t = sum(s) + d
            s[x] += d
            rescales.append(k)
            after.append(t)
        else:
            s[x] += d
            t += d
            if t > peak:
                peak = t
    state.total = t
    state.step = k
    state.peak_total = peak
    return math.fsum(terms), state


def rescale_partition(trace: RfdState | Sequence[int], n: int) -> list[tuple[int, int]]:
    """Split steps ``1..n`` into inclusive intervals ending at rescale steps.

    ``trace`` is a final state from :func:`run_trace` or its list of rescale
    steps.  A rescale in step ``n`` stays inside the last interval.
    """
    steps = trace.rescale_steps if isinstance(trace, RfdState) else trace
    if n <= 0:
        return []
    out = []
    start = 1
    for r in steps:
        if r >= n:
            break
        out.append((start, r))
        start = r + 1
    out.append((start, n))
    return out


def closed_form_predict(params: RfdParams, prefix: Sequence[int], symbol: int) -> Fraction:
    """Prediction for ``symbol`` after ``prefix`` when no rescale has occurred."""
    k = len(prefix)
    d = params.increment
    t0 = params.t0
    if t0 + k * d > params.threshold:
        raise RescaleInPrefix(f"a rescale occurs within the first {k} steps")
    hits = sum(1 for x in prefix if x == symbol)
    return Fraction(params.s0[symbol] + d * hits, t0 + d * k)


class RfdModel:
    """Model-interface wrapper: ``predict()`` then ``update(x)`` per step."""

    def __init__(self, params: RfdParams):
        self.params = params
        self.state = init_state(params)

    @property
    def alphabet_size(self) -> int:
        return self.params.alphabet_size

    def predict(self) -> CategoricalDist:
        return predict(self.state)

    def update(self, symbol: int) -> None:
        update(self.state, symbol, self.params)
