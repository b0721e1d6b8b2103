"""Fixed-budget step selection: the importance-diversity objective, the
seeded greedy solver, an exact enumeration oracle, and baseline selectors.

The objective for an index set J is::

    sum_{j in J} phi(j)  +  lam * sum_{i < j in J} D(i, j)

maximized subject to |J| = T0. The greedy solver seeds with the best pair
(argmax phi(i) + phi(j) + lam * D(i, j)) and then repeatedly adds the index
with the largest marginal gain phi(k) + lam * sum_{i in J} D(k, i). Running
per-candidate distance sums keep the expansion phase at O(T0 * T) gain
evaluations once pair scores are cached.

All argmax ties break to the lexicographically smallest index or pair, which
makes every selector a pure function of (cache, config).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterator, Sequence

import numpy as np

from .similarity import ScoreCache

METHOD_GREEDY = "greedy"
METHOD_EXACT = "exact"
METHOD_RANDOM = "random"
METHOD_IMPORTANCE = "importance_only"
METHOD_DIVERSITY = "diversity_only"

METHODS = (METHOD_GREEDY, METHOD_EXACT, METHOD_RANDOM,
           METHOD_IMPORTANCE, METHOD_DIVERSITY)

DEFAULT_ENUMERATION_GUARD = 1_000_000


class EnumerationGuardError(RuntimeError):
    def __init__(self, count: int, guard: int):
        self.count = count
        self.guard = guard
        super().__init__(
            f"exact enumeration would evaluate {count} subsets, "
            f"exceeding the guard of {guard}")


@dataclass(frozen=True, slots=True)
class SelectionConfig:
    budget: int = 3
    lam: float = 1.0
    method: str = METHOD_GREEDY
    seed: int = 0
    max_enumeration: int = DEFAULT_ENUMERATION_GUARD

    def validate(self) -> None:
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.method not in METHODS:
            raise ValueError(f"unknown selection method {self.method!r}")


@dataclass(frozen=True, slots=True)
class SelectionResult:
    indices: tuple[int, ...]
    objective_value: float
    gain_trace: tuple[tuple[int, float], ...]
    method: str
    evaluated_subsets: int | None = None


def objective(indices: Sequence[int], cache: ScoreCache, lam: float) -> float:
    """Unary importance plus lam-weighted summed pairwise diversity."""
    idx = list(indices)
    for t in idx:
        if not 0 <= t < cache.size:
            raise IndexError(f"step index {t} outside 0..{cache.size - 1}")
    total = sum(cache.phi(t) for t in idx)
    for a in range(len(idx)):
        for b in range(a + 1, len(idx)):
            total += lam * cache.d(idx[a], idx[b])
    return total


def _greedy_indices(phi: Sequence[float], cache: ScoreCache, lam: float,
                    t0: int) -> tuple[list[int], list[tuple[int, float]]]:
    """Greedy selection over a phi vector (possibly zeroed for the
    diversity-only baseline); returns selection order and per-pick gains."""
    t = cache.size
    if t0 == 1:
        best = max(range(t), key=lambda k: (phi[k], -k))
        return [best], [(best, phi[best])]

    best_pair = None
    best_score = -math.inf
    for i in range(t):
        for j in range(i + 1, t):
            score = phi[i] + phi[j] + lam * cache.d(i, j)
            if score > best_score:
                best_score = score
                best_pair = (i, j)
    assert best_pair is not None
    i1, i2 = best_pair
    chosen = [i1, i2]
    trace = [(i1, phi[i1]), (i2, phi[i2] + lam * cache.d(i1, i2))]

    sums = {k: cache.d(k, i1) + cache.d(k, i2)
            for k in range(t) if k not in (i1, i2)}
    while len(chosen) < t0:
        best_k = None
        best_gain = -math.inf
        for k in sorted(sums):
            gain = phi[k] + lam * sums[k]
            if gain > best_gain:
                best_gain = gain
                best_k = k
        assert best_k is not None
        chosen.append(best_k)
        trace.append((best_k, best_gain))
        del sums[best_k]
        for k in sums:
            sums[k] += cache.d(k, best_k)
    return chosen, trace


def select_greedy(cache: ScoreCache, config: SelectionConfig) -> SelectionResult:
    """Seed-pair greedy maximization of the importance-diversity objective."""
    t = cache.size
    if t < 1:
        raise ValueError("cannot select from an empty trajectory")
    t0 = min(config.budget, t)
    if t0 == t:
        indices = tuple(range(t))
        return SelectionResult(indices=indices,
                               objective_value=objective(indices, cache, config.lam),
                               gain_trace=(), method=METHOD_GREEDY)
    chosen, trace = _greedy_indices(cache.phi_vector(), cache, config.lam, t0)
    return SelectionResult(
        indices=tuple(sorted(chosen)),
        objective_value=math.fsum(gain for _, gain in trace),
        gain_trace=tuple(trace),
        method=METHOD_GREEDY,
    )


def _enumerate_objectives(cache: ScoreCache, lam: float,
                          t0: int) -> Iterator[tuple[tuple[int, ...], float]]:
    for subset in combinations(range(cache.size), t0):
        yield subset, objective(subset, cache, lam)


def select_exact(cache: ScoreCache, config: SelectionConfig,
                 max_enumeration: int | None = None) -> SelectionResult:
    """Exhaustive optimum over all C(T, T0) subsets, guarded by size."""
    t = cache.size
    if t < 1:
        raise ValueError("cannot select from an empty trajectory")
    t0 = min(config.budget, t)
    guard = config.max_enumeration if max_enumeration is None else max_enumeration
    count = math.comb(t, t0)
    if count > guard:
        raise EnumerationGuardError(count, guard)
    best_subset: tuple[int, ...] | None = None
    best_value = -math.inf
    for subset, value in _enumerate_objectives(cache, config.lam, t0):
        if value > best_value:  # first max wins: combinations are lex-ordered
            best_value = value
            best_subset = subset
    assert best_subset is not None
    return SelectionResult(
        indices=best_subset,
        objective_value=best_value,
        gain_trace=(),
        method=METHOD_EXACT,
        evaluated_subsets=count,
    )


def select_random(t: int, config: SelectionConfig,
                  cache: ScoreCache | None = None) -> SelectionResult:
    """Uniform T0-subset from a seeded generator."""
    if t < 1:
        raise ValueError("cannot select from an empty trajectory")
    t0 = min(config.budget, t)
    rng = random.Random(config.seed)
    indices = tuple(sorted(rng.sample(range(t), t0)))
    value = objective(indices, cache, config.lam) if cache is not None else float("nan")
    return SelectionResult(indices=indices, objective_value=value,
                           gain_trace=(), method=METHOD_RANDOM)


def select_importance_only(cache: ScoreCache,
                           config: SelectionConfig) -> SelectionResult:
    """Top-T0 steps by importance; ties keep the earlier step."""
    t0 = min(config.budget, cache.size)
    ranked = sorted(range(cache.size), key=lambda k: (-cache.phi(k), k))
    indices = tuple(sorted(ranked[:t0]))
    return SelectionResult(
        indices=indices,
        objective_value=objective(indices, cache, config.lam),
        gain_trace=(), method=METHOD_IMPORTANCE,
    )


def select_diversity_only(cache: ScoreCache,
                          config: SelectionConfig) -> SelectionResult:
    """Greedy with the importance term zeroed out."""
    t = cache.size
    t0 = min(config.budget, t)
    if t0 == t:
        indices = tuple(range(t))
    else:
        chosen, _ = _greedy_indices([0.0] * t, cache, config.lam, t0)
        indices = tuple(sorted(chosen))
    return SelectionResult(
        indices=indices,
        objective_value=objective(indices, cache, config.lam),
        gain_trace=(), method=METHOD_DIVERSITY,
    )


def select(cache: ScoreCache, config: SelectionConfig) -> SelectionResult:
    if config.method == METHOD_GREEDY:
        return select_greedy(cache, config)
    if config.method == METHOD_EXACT:
        return select_exact(cache, config)
    if config.method == METHOD_RANDOM:
        return select_random(cache.size, config, cache)
    if config.method == METHOD_IMPORTANCE:
        return select_importance_only(cache, config)
    if config.method == METHOD_DIVERSITY:
        return select_diversity_only(cache, config)
    raise ValueError(f"unknown selection method {config.method!r}")


# ---------------------------------------------------------------------------
# greedy-vs-exact approximation study


@dataclass(frozen=True, slots=True)
class StudySpec:
    """Synthetic-instance generator settings for the approximation study.

    Per instance: T is drawn uniformly from [t_min, t_max], importance
    scores are i.i.d. uniform [0, 1], and pair scores are i.i.d. uniform
    [0, 1] drawn on the upper triangle then mirrored (zero diagonal). The
    Python ``random`` module keeps the stream stable across platforms.
    """

    instances: int = 200
    t_min: int = 8
    t_max: int = 12
    t0: int = 3
    lam: float = 1.0
    seed: int = 0
    guard: int = DEFAULT_ENUMERATION_GUARD

    def validate(self) -> None:
        if self.instances < 1:
            raise ValueError("instances must be >= 1")
        if not 1 <= self.t_min <= self.t_max:
            raise ValueError("need 1 <= t_min <= t_max")
        if self.t0 < 1:
            raise ValueError("t0 must be >= 1")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")


@dataclass(slots=True)
class StudyReport:
    instances: int = 0
    match_rate: float = 0.0
    mean_ratio: float = 0.0
    std_ratio: float = 0.0
    top1pct_rate: float = 0.0
    skipped: int = 0
    ratios: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "instances": self.instances,
            "match_rate": self.match_rate,
            "mean_ratio": self.mean_ratio,
            "std_ratio": self.std_ratio,
            "top1pct_rate": self.top1pct_rate,
            "skipped": self.skipped,
        }


def generate_instance(rng: random.Random, t_min: int, t_max: int) -> ScoreCache:
    t = rng.randint(t_min, t_max)
    phi = [rng.random() for _ in range(t)]
    d = np.zeros((t, t))
    for i in range(t):
        for j in range(i + 1, t):
            value = rng.random()
            d[i, j] = value
            d[j, i] = value
    return ScoreCache.from_matrix(phi, d)


def approximation_study(spec: StudySpec) -> StudyReport:
    """Run greedy against the exact enumeration oracle on synthetic
    instances; reports exact-match rate, objective ratio statistics, and how
    often greedy lands in the top 1% of all candidate subsets."""
    spec.validate()
    rng = random.Random(spec.seed)
    config = SelectionConfig(budget=spec.t0, lam=spec.lam)

    matches = 0
    top1 = 0
    skipped = 0
    ratios: list[float] = []
    for _ in range(spec.instances):
        cache = generate_instance(rng, spec.t_min, spec.t_max)
        t0 = min(spec.t0, cache.size)
        if math.comb(cache.size, t0) > spec.guard:
            skipped += 1
            continue
        greedy = select_greedy(cache, config)
        greedy_value = objective(greedy.indices, cache, spec.lam)

        best_subset: tuple[int, ...] | None = None
        best_value = -math.inf
        total = 0
        greater = 0
        for subset, value in _enumerate_objectives(cache, spec.lam, t0):
            total += 1
            if value > best_value:
                best_value = value
                best_subset = subset
            if value > greedy_value:
                greater += 1
        assert best_subset is not None

        if set(greedy.indices) == set(best_subset):
            matches += 1
        ratios.append(greedy_value / best_value if best_value > 0 else 1.0)
        rank = greater + 1
        if rank <= max(1, math.ceil(0.01 * total)):
            top1 += 1

    evaluated = len(ratios)
    mean = math.fsum(ratios) / evaluated if evaluated else 0.0
    var = (math.fsum((r - mean) ** 2 for r in ratios) / evaluated
           if evaluated else 0.0)
    return StudyReport(
        instances=evaluated,
        match_rate=matches / evaluated if evaluated else 0.0,
        mean_ratio=mean,
        std_ratio=math.sqrt(var),
        top1pct_rate=top1 / evaluated if evaluated else 0.0,
        skipped=skipped,
        ratios=ratios,
    )
