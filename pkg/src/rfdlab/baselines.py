"""Reference estimators sharing RFD's ``predict()`` / ``update(x)`` interface.

The counting models predict exact integer frequencies (a
:class:`~rfdlab.estimator.CategoricalDist`), so they can drive the range coder
and compare with RFD as rationals.  :class:`PwsOracleModel` predicts real
probabilities and is only meant for code-length accounting.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from typing import Protocol, Sequence

from .estimator import CategoricalDist, _check_symbol


class Dist(Protocol):
    def prob(self, x: int): ...

    def bits(self, x: int) -> float: ...


class Model(Protocol):
    alphabet_size: int

    def predict(self) -> Dist: ...

    def update(self, symbol: int) -> None: ...


class StaticModel:
    """Fixed integer frequencies; never adapts."""

    def __init__(self, freqs: Sequence[int]):
        if len(freqs) < 2 or any(f < 1 for f in freqs):
            raise ValueError("need at least two positive frequencies")
        self.alphabet_size = len(freqs)
        self._dist = CategoricalDist(tuple(freqs), sum(freqs))

    def predict(self) -> CategoricalDist:
        return self._dist

    def update(self, symbol: int) -> None:
        _check_symbol(symbol, self.alphabet_size)


class LaplaceModel:
    """``(count(x) + 1) / (k + N)``."""

    def __init__(self, alphabet_size: int):
        if alphabet_size < 2:
            raise ValueError("alphabet size must be >= 2")
        self.alphabet_size = alphabet_size
        self.counts = [0] * alphabet_size
        self.k = 0

    def predict(self) -> CategoricalDist:
        return CategoricalDist(tuple(c + 1 for c in self.counts), self.k + self.alphabet_size)

    def update(self, symbol: int) -> None:
        self.counts[_check_symbol(symbol, self.alphabet_size)] += 1
        self.k += 1


class KTModel:
    """Krichevsky-Trofimov: ``(count(x) + 1/2) / (k + N/2)``.

    Kept exact by doubling: frequencies ``2 count(x) + 1`` over ``2k + N``.
    """

    def __init__(self, alphabet_size: int):
        if alphabet_size < 2:
            raise ValueError("alphabet size must be >= 2")
        self.alphabet_size = alphabet_size
        self.counts = [0] * alphabet_size
        self.k = 0

    def predict(self) -> CategoricalDist:
        return CategoricalDist(tuple(2 * c + 1 for c in self.counts),
                               2 * self.k + self.alphabet_size)

    def update(self, symbol: int) -> None:
        self.counts[_check_symbol(symbol, self.alphabet_size)] += 1
        self.k += 1

    def reset(self) -> None:
        self.counts = [0] * self.alphabet_size
        self.k = 0


class ResetKTModel(KTModel):
    """KT estimator whose counts are zeroed in the Update of each scheduled step.

    As with an RFD rescale, a reset in step ``k`` first affects the prediction
    for step ``k + 1``.
    """

    def __init__(self, alphabet_size: int, schedule: Sequence[int] = ()):
        super().__init__(alphabet_size)
        schedule = list(schedule)
        if any(b <= a for a, b in zip(schedule, schedule[1:])):
            raise ValueError("reset schedule must be strictly increasing")
        self.schedule = frozenset(schedule)
        self.step = 0

    def update(self, symbol: int) -> None:
        super().update(symbol)
        self.step += 1
        if self.step in self.schedule:
            self.reset()


class RealDist:
    """Real-valued probability vector; zeros allowed."""

    def __init__(self, probs: Sequence[float]):
        self.probs = tuple(probs)

    def prob(self, x: int) -> float:
        return self.probs[x]

    def bits(self, x: int) -> float:
        p = self.probs[x]
        return math.inf if p <= 0 else -math.log2(p)

    def __len__(self):
        return len(self.probs)


class PwsOracleModel:
    """Emits the competitor's distribution for the segment containing the step."""

    def __init__(self, spec):
        self.spec = spec
        self.alphabet_size = len(spec.dists[0])
        self._dists = [RealDist(p) for p in spec.dists]
        self._ends = list(spec.breakpoints[1:])
        self.step = 0

    def predict(self) -> RealDist:
        k = self.step + 1
        if k > self.spec.n:
            raise IndexError(f"step {k} beyond competitor length {self.spec.n}")
        return self._dists[bisect_left(self._ends, k)]

    def update(self, symbol: int) -> None:
        _check_symbol(symbol, self.alphabet_size)
        self.step += 1


def model_code_length(model: Model, sequence: Sequence[int]) -> float:
    """Ideal code length in bits; ``inf`` once any observed letter has probability 0."""
    terms = []
    for x in sequence:
        terms.append(model.predict().bits(x))
        model.update(x)
    if any(math.isinf(v) for v in terms):
        return math.inf
    return math.fsum(terms)
