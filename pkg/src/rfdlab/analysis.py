"""Redundancy bounds for RFD and checks of measured traces against them.

Every bound is in bits.  Structural checks on traces (segment lengths, rescale
counts, totals) are exact rational comparisons; comparisons between real code
lengths and bounds allow a relative slack of ``REL_TOL``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .estimator import RfdParams, RfdState, code_length, rescale_partition
from .pws import PwsSpec, ideal_code_length, random_pws, sample_sequence

LOG2E = 1.0 / math.log(2.0)
REL_TOL = 1e-6


class NotApplicable(ValueError):
    """A bound's hypotheses do not hold for the given inputs."""


def leq(a: float, b: float, scale: float = 1.0, rel: float = REL_TOL) -> bool:
    """``a <= b`` up to ``rel`` times the largest magnitude involved."""
    if math.isinf(b) and b > 0:
        return True
    return a <= b + rel * max(1.0, abs(a), abs(b), abs(scale))


# ------------------------------------------------------------------ bounds

def r_function(params: RfdParams, z: float) -> float:
    """Per-segment redundancy term ``(N+A) log z + log((A+1) e^(A+1)) + N log d``."""
    if z <= 0:
        raise ValueError("z must be positive")
    N, d = params.alphabet_size, params.increment
    A = float(params.derived().A)
    return (N + A) * math.log2(z) + math.log2(A + 1) + (A + 1) * LOG2E + N * math.log2(d)


def bound_prop1(params: RfdParams, n: int, t0: int | None = None) -> float:
    """Redundancy bound against any fixed distribution for a rescale-free run."""
    if n < 1:
        return 0.0
    N, d = params.alphabet_size, params.increment
    t0 = params.t0 if t0 is None else t0
    b = t0 / d
    return (((N - 1) * d + t0 - 1) / d) * math.log2(n) + math.log2(b) + b * LOG2E \
        + N * math.log2(d)


def worst_case_rescale_count(params: RfdParams, n: int) -> int:
    """Largest |R| the segment-count lemma allows for length ``n``."""
    return n // params.derived().floor_one_minus_c_L + 2


def theorem2_gamma(params: RfdParams) -> int | None:
    """``c * L`` when it is an integer, else ``None``."""
    g = params.discount * params.L
    return int(g) if g.denominator == 1 else None


@dataclass
class BoundInputs:
    params: RfdParams
    n: int
    S_size: int
    R_size: int | None = None
    t0: int | None = None
    eps: float | None = None
    gamma: int | None = None

    def __post_init__(self):
        if self.gamma is not None and self.params.discount * self.params.L != self.gamma:
            raise NotApplicable(f"c * L = {self.params.discount * self.params.L} != gamma {self.gamma}")

    @property
    def rescales(self) -> int:
        if self.R_size is not None:
            return self.R_size
        return worst_case_rescale_count(self.params, self.n)


def bound_thm1(inputs: BoundInputs) -> float:
    """``|S| [(1-c)L log(e(L+1)) + log((1-c)L) + r(L+1)] + (|R|-1) r(L+1)``."""
    p = inputs.params
    L = p.L
    w = float((1 - p.discount) * L)
    Lf = float(L)
    r = r_function(p, Lf + 1)
    R = max(inputs.rescales, 1)
    return inputs.S_size * (w * math.log2(math.e * (Lf + 1)) + math.log2(w) + r) + (R - 1) * r


def bound_thm2(inputs: BoundInputs) -> tuple[float, float]:
    """``(delta, rhs)`` with ``l(RFD) <= (1 + delta) l(PWS) + rhs``."""
    p = inputs.params
    eps = inputs.eps
    if eps is None or not 0 < eps < 1:
        raise NotApplicable("needs a competitor cap eps in (0, 1)")
    gamma = inputs.gamma if inputs.gamma is not None else theorem2_gamma(p)
    if gamma is None:
        raise NotApplicable(f"c * L = {p.discount * p.L} is not an integer")
    Lf = float(p.L)
    r = r_function(p, Lf + 1)
    delta = r / (eps * (Lf - gamma) * LOG2E)
    rhs = inputs.S_size * ((Lf - gamma) * math.log2(math.e * (Lf + 1))
                           + math.log2(Lf - gamma) + r) + r
    return delta, rhs


# ------------------------------------------------------------------ checks

def check_lemma_structure(trace: RfdState, params: RfdParams, n: int) -> dict[str, bool]:
    """One verdict per clause of the total, segment-length and segment-count lemmas."""
    d, N, T = params.increment, params.alphabet_size, params.threshold
    c, L = params.discount, params.L
    post_cap = d + N + c * d * L
    floor_w = params.derived().floor_one_minus_c_L
    parts = rescale_partition(trace, n)
    lengths = [b - a + 1 for a, b in parts]
    verdicts = {
        "lemma1_cap_below_T": post_cap <= T,
        "lemma1_total_max": trace.peak_total <= T,
        "lemma1_post_rescale": all(t <= post_cap for t in trace.post_rescale_totals),
        "lemma2_first": not lengths or 1 <= lengths[0] <= L + 1,
        "lemma2_middle": all(floor_w <= m <= L for m in lengths[1:-1]),
        "lemma2_last": len(lengths) <= 1 or 1 <= lengths[-1] <= L,
        "lemma3_count": (len(parts) - 2) * floor_w <= n,
    }
    return verdicts


def induced_partition(R: Sequence[tuple[int, int]], segment: tuple[int, int]) -> list[tuple[int, int]]:
    """Restriction of partition ``R`` to ``segment`` (inclusive bounds)."""
    a, b = segment
    return [(max(a, j1), min(b, j2)) for j1, j2 in R if j1 <= b and j2 >= a]


def check_partition_sum(R: Sequence[tuple[int, int]], S: Sequence[tuple[int, int]]) -> dict[str, bool]:
    """``|R| <= sum_I |R_I| <= |R| + |S| - 1``; vacuous for the empty sequence."""
    if not S:
        return {"lemma8_lower": True, "lemma8_upper": True}
    total = sum(len(induced_partition(R, seg)) for seg in S)
    return {
        "lemma8_lower": len(R) <= total,
        "lemma8_upper": total <= len(R) + len(S) - 1,
    }


@dataclass(frozen=True)
class Inequality:
    lhs: float
    rhs: float
    holds: bool


def log2_multinomial(counts: Sequence[int]) -> float:
    n = sum(counts)
    return (math.lgamma(n + 1) - sum(math.lgamma(c + 1) for c in counts)) * LOG2E


def check_multinomial_inequality(counts: Sequence[int], p: Sequence[float],
                                 tol: float = 1e-9) -> Inequality:
    """``log multinomial(n; counts) <= sum_x counts[x] log(1/p[x])``."""
    if sum(counts) <= 0:
        raise ValueError("counts must have a positive sum")
    lhs = log2_multinomial(counts)
    rhs = 0.0
    for c, q in zip(counts, p):
        if c:
            rhs = math.inf if q <= 0 else rhs + c * -math.log2(q)
    return Inequality(lhs, rhs, lhs <= rhs + tol * max(1.0, abs(rhs)))


def empirical_code_length(sequence: Sequence[int], N: int) -> float:
    """Code length under the best fixed distribution in hindsight."""
    n = len(sequence)
    if n == 0:
        return 0.0
    counts = np.bincount(np.asarray(sequence, dtype=np.int64), minlength=N)
    return math.fsum(float(c) * math.log2(n / c) for c in counts if c)


# ------------------------------------------------------------------ reports

REPORT_COLUMNS = ("n", "seed", "S_size", "R_size", "ell_rfd", "ell_pws", "redundancy",
                  "bound_thm1", "delta", "bound_thm2_rhs", "verdicts")


@dataclass
class RedundancyReport:
    n: int
    S_size: int
    R_size: int
    ell_rfd: float
    ell_competitor: float
    redundancy: float
    bound_thm1: float
    bound_thm1_worst: float
    thm2_delta: float | None
    bound_thm2_rhs: float | None
    lemma_verdicts: dict[str, bool]
    segment_lengths: list[int] = field(repr=False)
    seed: int | None = None
    note: str = ""

    @property
    def ok(self) -> bool:
        return all(self.lemma_verdicts.values())

    def verdict_string(self) -> str:
        failed = [k for k, v in self.lemma_verdicts.items() if not v]
        return "pass" if not failed else "fail:" + "|".join(failed)

    def csv_row(self) -> dict:
        return {
            "n": self.n, "seed": self.seed, "S_size": self.S_size, "R_size": self.R_size,
            "ell_rfd": self.ell_rfd, "ell_pws": self.ell_competitor,
            "redundancy": self.redundancy, "bound_thm1": self.bound_thm1,
            "delta": self.thm2_delta, "bound_thm2_rhs": self.bound_thm2_rhs,
            "verdicts": self.verdict_string(),
        }

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def redundancy_report(params: RfdParams, sequence: Sequence[int], spec: PwsSpec,
                      seed: int | None = None) -> RedundancyReport:
    """Measure RFD against ``spec`` and evaluate every applicable bound."""
    seq = list(sequence)
    n = len(seq)
    ell_rfd, state = code_length(params, seq)
    ell_pws = ideal_code_length(spec, seq) if n else 0.0
    parts = rescale_partition(state, n)
    R_size = max(len(parts), 1)
    S = spec.segments() if n else []
    S_size = max(len(S), 1)

    thm1 = bound_thm1(BoundInputs(params, n, S_size, R_size))
    thm1_worst = bound_thm1(BoundInputs(params, n, S_size))
    redundancy = ell_rfd - ell_pws
    verdicts = check_lemma_structure(state, params, n)
    verdicts.update(check_partition_sum(parts, S))
    verdicts["thm1"] = leq(redundancy, thm1, scale=max(ell_rfd, ell_pws if n else 0.0))
    verdicts["thm1_worst_case"] = leq(redundancy, thm1_worst, scale=ell_rfd)

    delta = rhs = None
    note = ""
    if spec.eps is not None and theorem2_gamma(params) is not None and spec.eps > 0:
        delta, rhs = bound_thm2(BoundInputs(params, n, S_size, R_size, eps=spec.eps))
        verdicts["thm2"] = leq(ell_rfd, (1 + delta) * ell_pws + rhs, scale=ell_rfd)
    if math.isinf(ell_pws):
        note = "competitor assigns probability 0 to an observed letter; bounds hold trivially"
    return RedundancyReport(n, S_size, R_size, ell_rfd, ell_pws, redundancy, thm1, thm1_worst,
                            delta, rhs, verdicts, [b - a + 1 for a, b in parts], seed, note)


def example1_params(n: int, N: int, gamma: int = 0, d: int = 1) -> RfdParams:
    """``L = ceil(sqrt(n))`` and ``c = gamma / L``, so ``T = N + d L``."""
    L = math.isqrt(n - 1) + 1 if n > 1 else 1
    c = Fraction(gamma, L)
    return RfdParams(N, d, c.numerator, c.denominator, N + d * L)


def run_trial(params: RfdParams, n: int, S_size: int, N: int, eps: float, seed: int) -> RedundancyReport:
    """One randomized competitor, one sampled sequence, one report."""
    spec = random_pws(n, S_size, N, eps, seed)
    seq = sample_sequence(spec, seed).tolist()
    return redundancy_report(params, seq, spec, seed=seed)


def example1_sweep(S_size: int, n_list: Sequence[int], gamma: int, N: int = 2,
                   seeds: Sequence[int] = range(30)) -> list[dict]:
    """Redundancy under the square-root recipe, normalised by ``|S| sqrt(n) log n``."""
    rows = []
    for n in n_list:
        params = example1_params(n, N, gamma)
        scale = S_size * math.sqrt(n) * math.log2(n)
        for seed in seeds:
            rep = run_trial(params, n, S_size, N, 0.0, seed)
            rows.append({
                "n": n, "seed": seed, "gamma": gamma, "L": int(params.L),
                "redundancy": rep.redundancy, "normalized": rep.redundancy / scale,
                "thm1_normalized": rep.bound_thm1_worst / scale,
                "verdicts": rep.verdict_string(),
            })
    return rows


def summarize_sweep(rows: Sequence[dict]) -> dict[int, float]:
    """Mean normalised redundancy per ``n``."""
    by_n: dict[int, list[float]] = {}
    for row in rows:
        by_n.setdefault(row["n"], []).append(row["normalized"])
    return {n: float(np.mean(v)) for n, v in sorted(by_n.items())}
