"""Piecewise stationary competitors: construction, sampling and code length.

Randomness comes from ``numpy.random.default_rng(seed)`` (PCG64), so a seed
fixes a competitor and its sampled sequence on every platform.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Sequence

import numpy as np

_SUM_TOL = 1e-12


class InfeasibleCap(ValueError):
    """No distribution over N letters keeps every probability <= 1 - eps."""


@dataclass(frozen=True)
class PwsSpec:
    """Partition of steps ``1..n`` with one distribution per segment.

    ``breakpoints`` is ``(0, i_1, ..., n)``; segment ``j`` covers steps
    ``breakpoints[j] + 1 .. breakpoints[j + 1]``.
    """

    n: int
    breakpoints: tuple[int, ...]
    dists: tuple[tuple[float, ...], ...]
    eps: float | None = None
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(int(b) for b in self.breakpoints))
        object.__setattr__(self, "dists", tuple(tuple(float(v) for v in p) for p in self.dists))
        problems = self.problems()
        if problems:
            raise ValueError("invalid PWS spec: " + "; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        b = self.breakpoints
        if len(b) < 2 or b[0] != 0 or b[-1] != self.n:
            out.append("breakpoints must run from 0 to n")
        if self.n > 0 and any(v <= u for u, v in zip(b, b[1:])):
            out.append("breakpoints must be strictly increasing")
        if len(self.dists) != len(b) - 1:
            out.append(f"{len(self.dists)} distributions for {len(b) - 1} segments")
        if len({len(p) for p in self.dists}) > 1:
            out.append("distributions over different alphabets")
        for j, p in enumerate(self.dists):
            if any(v < 0 for v in p) or abs(math.fsum(p) - 1.0) > _SUM_TOL:
                out.append(f"segment {j + 1}: not a probability vector")
            elif self.eps is not None and max(p) > 1 - self.eps + _SUM_TOL:
                out.append(f"segment {j + 1}: max probability {max(p)} above 1 - eps")
        return out

    @property
    def alphabet_size(self) -> int:
        return len(self.dists[0])

    def segments(self) -> list[tuple[int, int]]:
        """Inclusive 1-based step intervals."""
        b = self.breakpoints
        return [(b[j] + 1, b[j + 1]) for j in range(len(b) - 1)]

    def segment_of(self, k: int) -> int:
        """Index of the segment holding step ``k`` (1-based)."""
        if not 1 <= k <= self.n:
            raise IndexError(k)
        return bisect_left(self.breakpoints, k) - 1

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "breakpoints": list(self.breakpoints),
                           "dists": [list(p) for p in self.dists], "eps": self.eps,
                           "seed": self.seed})

    @classmethod
    def from_json(cls, text: str) -> "PwsSpec":
        obj = json.loads(text)
        return cls(obj["n"], tuple(obj["breakpoints"]), tuple(map(tuple, obj["dists"])),
                   obj.get("eps"), obj.get("seed"))


def sample_sequence(spec: PwsSpec, seed) -> np.ndarray:
    """Draw letters i.i.d. from each segment's distribution."""
    rng = np.random.default_rng(seed)
    N = spec.alphabet_size
    parts = []
    for (a, b), p in zip(spec.segments(), spec.dists):
        probs = np.asarray(p, dtype=float)
        parts.append(rng.choice(N, size=b - a + 1, p=probs / probs.sum()))
    if not parts:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(parts).astype(np.int64)


def capped_dirichlet(rng: np.random.Generator, N: int, eps: float, tries: int = 1000) -> np.ndarray:
    """Dirichlet(1) draw whose largest probability is at most ``1 - eps``.

    Rejection first; if that keeps failing (caps near 1/N), mix the last draw
    with the uniform distribution just enough to meet the cap.
    """
    cap = 1.0 - eps
    if cap < 1.0 / N:
        raise InfeasibleCap(f"1 - eps = {cap} < 1/N = {1.0 / N}")
    p = rng.dirichlet(np.ones(N))
    for _ in range(tries):
        if p.max() <= cap:
            return p
        p = rng.dirichlet(np.ones(N))
    top = p.max()
    lam = (cap - 1.0 / N) / (top - 1.0 / N)
    return lam * p + (1 - lam) / N


def random_pws(n: int, s: int, N: int, eps: float = 0.0, seed=None) -> PwsSpec:
    """``s`` segments with cut points uniform without replacement over 1..n-1."""
    if not 1 <= s <= n:
        raise ValueError(f"need 1 <= s <= n, got s={s}, n={n}")
    if not 0 <= eps < 1:
        raise ValueError("eps must lie in [0, 1)")
    if 1 - eps < 1 / N:
        raise InfeasibleCap(f"1 - eps = {1 - eps} < 1/N = {1 / N}")
    rng = np.random.default_rng(seed)
    cuts = np.sort(rng.choice(np.arange(1, n), size=s - 1, replace=False)) if s > 1 else []
    breakpoints = (0, *(int(c) for c in cuts), n)
    dists = tuple(tuple(capped_dirichlet(rng, N, eps)) for _ in range(s))
    return PwsSpec(n, breakpoints, dists, eps if eps > 0 else None, seed)


def recency_scenario(m: int, N: int = 2, eps: float | None = None) -> tuple[list[int], PwsSpec]:
    """``m`` copies of letter 0 then ``m`` copies of letter 1, with the matching
    two-segment competitor (point masses, or ``1 - eps`` on the repeated letter)."""
    if m < 1 or N < 2:
        raise ValueError("need m >= 1 and N >= 2")

    def mass(letter):
        if eps is None:
            return tuple(1.0 if x == letter else 0.0 for x in range(N))
        rest = eps / (N - 1)
        return tuple(1 - eps if x == letter else rest for x in range(N))

    seq = [0] * m + [1] * m
    return seq, PwsSpec(2 * m, (0, m, 2 * m), (mass(0), mass(1)), eps)


def ideal_code_length(spec: PwsSpec, sequence: Sequence[int]) -> float:
    """Bits the competitor needs for ``sequence``; ``inf`` on a zero-probability letter."""
    if len(sequence) != spec.n:
        raise ValueError(f"sequence length {len(sequence)} != competitor length {spec.n}")
    total = []
    for (a, b), p in zip(spec.segments(), spec.dists):
        logs = [-math.log2(v) if v > 0 else math.inf for v in p]
        for x in sequence[a - 1:b]:
            total.append(logs[x])
    if any(math.isinf(v) for v in total):
        return math.inf
    return math.fsum(total)


def hindsight_pws(breakpoints: Sequence[int], sequence: Sequence[int], N: int) -> PwsSpec:
    """Best competitor on a fixed partition: each segment's empirical distribution."""
    seq = np.asarray(sequence)
    dists = []
    for a, b in zip(breakpoints, breakpoints[1:]):
        counts = np.bincount(seq[a:b], minlength=N).astype(float)
        dists.append(tuple(counts / counts.sum()))
    return PwsSpec(len(seq), tuple(breakpoints), tuple(dists))
