"""Coverage-maximizing subset selection under length-bucket quotas.

The selector greedily picks, n times, the example adding the most uncovered
APIs, visiting buckets by descending remaining quota so underrepresented
length ranges are served first. The random baseline and the Jensen-Shannon
divergence between length distributions round out the module.

All tie-breaking is frozen (lower bucket index, lower corpus index), so
identical inputs give byte-identical results.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field

from .corpus import Corpus

logger = logging.getLogger(__name__)

DEFAULT_BUCKETS = 40


@dataclass
class SelectionConfig:
    n: float  # absolute count when >= 1, fraction of the corpus when < 1
    buckets: int = DEFAULT_BUCKETS
    tau: float | None = None
    seed: int = 0

    def resolve_budget(self, population: int) -> int:
        if self.n <= 0:
            raise ValueError(f"budget must be positive, got {self.n}")
        if self.n < 1:
            return int(self.n * population)
        return int(self.n)


@dataclass
class BucketPlan:
    edges: list[float]
    quota: list[int]

    def bucket_of(self, length: float) -> int:
        return _bucket_index(length, self.edges)


@dataclass
class SelectionResult:
    indices: list[str]  # selected example ids, in selection order
    api_coverage: float
    jsd: float
    per_iteration_gain: list[int] = field(default_factory=list)


def _bucket_index(value: float, edges: list[float]) -> int:
    lo, hi = edges[0], edges[-1]
    k = len(edges) - 1
    if hi <= lo:
        return 0  # degenerate range: one effective bucket
    idx = int((value - lo) / (hi - lo) * k)
    return min(max(idx, 0), k - 1)


def _largest_remainder(total: int, weights: list[float], slots: list[int]) -> list[int]:
    """Apportion ``total`` over ``slots`` proportionally to ``weights``.

    Floor first, then hand out the remainder by largest fractional part,
    ties to the lower slot index.
    """
    wsum = sum(weights)
    alloc = [0] * len(slots)
    if wsum <= 0 or total <= 0:
        return alloc
    exact = [total * w / wsum for w in weights]
    base = [int(math.floor(x)) for x in exact]
    remainder = total - sum(base)
    order = sorted(range(len(slots)), key=lambda i: (-(exact[i] - base[i]), slots[i]))
    for i in range(len(slots)):
        alloc[i] = base[i]
    for i in order[:remainder]:
        alloc[i] += 1
    return alloc


def plan_buckets(corpus: Corpus, config: SelectionConfig) -> BucketPlan:
    """Equal-width length bins plus a per-bucket selection quota.

    Quotas are proportional to bucket population (largest-remainder rule);
    quota beyond a bucket's population is released and redistributed over
    buckets that still have room.
    """
    if len(corpus) == 0:
        raise ValueError("cannot plan buckets for an empty corpus")
    if config.buckets < 1:
        raise ValueError(f"buckets must be >= 1, got {config.buckets}")
    n = min(config.resolve_budget(len(corpus)), len(corpus))
    k = config.buckets
    lengths = corpus.lengths()
    lo, hi = float(min(lengths)), float(max(lengths))
    edges = [lo + (hi - lo) * i / k for i in range(k + 1)]

    counts = [0] * k
    for length in lengths:
        counts[_bucket_index(length, edges)] += 1

    quota = _largest_remainder(n, [float(c) for c in counts], list(range(k)))
    # release overdrawn quota and re-apportion it among buckets with room
    while True:
        overflow = sum(max(0, quota[b] - counts[b]) for b in range(k))
        if overflow == 0:
            break
        quota = [min(quota[b], counts[b]) for b in range(k)]
        open_buckets = [b for b in range(k) if quota[b] < counts[b]]
        extra = _largest_remainder(
            overflow, [float(counts[b]) for b in open_buckets], open_buckets
        )
        for pos, b in enumerate(open_buckets):
            quota[b] += extra[pos]
    return BucketPlan(edges=edges, quota=quota)


def _coverage_state(corpus: Corpus) -> tuple[list[frozenset[int]], int]:
    """Intern API names to ints for fast gain computation."""
    intern: dict[str, int] = {}
    api_sets: list[frozenset[int]] = []
    for ex in corpus:
        ids = []
        for name in ex.api_set:
            if name not in intern:
                intern[name] = len(intern)
            ids.append(intern[name])
        api_sets.append(frozenset(ids))
    return api_sets, len(intern)


def _finish_result(
    corpus: Corpus,
    picked: list[int],
    gains: list[int],
    covered_count: int,
    universe: int,
    config: SelectionConfig,
) -> SelectionResult:
    coverage = covered_count / universe if universe else 1.0
    subset_lengths = [corpus.examples[i].length_tokens for i in picked]
    jsd = js_divergence(subset_lengths, corpus.lengths(), config.buckets) if picked else 1.0
    return SelectionResult(
        indices=[corpus.examples[i].id for i in picked],
        api_coverage=coverage,
        jsd=jsd,
        per_iteration_gain=gains,
    )


def select_top_api(corpus: Corpus, config: SelectionConfig) -> SelectionResult:
    """Greedy coverage-maximal selection respecting bucket quotas.

    Each round visits buckets by descending remaining quota (ties to the
    lower bucket index) and takes, from the first bucket with an eligible
    example, the one covering the most new APIs (ties to the lowest corpus
    index). Zero-gain examples stay eligible so quotas can always fill.
    """
    if len(corpus) == 0:
        raise ValueError("cannot select from an empty corpus")
    n = config.resolve_budget(len(corpus))
    if n > len(corpus):
        logger.warning("budget %d exceeds population %d; selecting all", n, len(corpus))
        n = len(corpus)
    plan = plan_buckets(corpus, config)
    k = len(plan.quota)

    api_sets, universe = _coverage_state(corpus)
    members: list[list[int]] = [[] for _ in range(k)]
    for i, ex in enumerate(corpus.examples):
        members[plan.bucket_of(ex.length_tokens)].append(i)

    remaining = list(plan.quota)
    selected = [False] * len(corpus.examples)
    covered: set[int] = set()
    picked: list[int] = []
    gains: list[int] = []

    for _ in range(n):
        bucket_order = sorted(
            (b for b in range(k) if remaining[b] > 0), key=lambda b: (-remaining[b], b)
        )
        best = -1
        best_gain = -1
        best_bucket = -1
        for b in bucket_order:
            for i in members[b]:
                if selected[i]:
                    continue
                apis = api_sets[i]
                if len(apis) <= best_gain:
                    continue  # cannot beat the incumbent
                gain = sum(1 for a in apis if a not in covered)
                if gain > best_gain:
                    best_gain = gain
                    best = i
            if best != -1:
                best_bucket = b
                break  # first bucket with an eligible case wins the round
        if best == -1:
            logger.warning("no eligible example left after %d picks; stopping early", len(picked))
            break
        selected[best] = True
        covered |= api_sets[best]
        remaining[best_bucket] -= 1
        picked.append(best)
        gains.append(best_gain)

    return _finish_result(corpus, picked, gains, len(covered), universe, config)


def select_random(corpus: Corpus, config: SelectionConfig) -> SelectionResult:
    """Seeded uniform sample without replacement; the baseline selector."""
    if len(corpus) == 0:
        raise ValueError("cannot select from an empty corpus")
    n = config.resolve_budget(len(corpus))
    if n > len(corpus):
        logger.warning("budget %d exceeds population %d; selecting all", n, len(corpus))
        n = len(corpus)
    rng = random.Random(config.seed)
    picked = rng.sample(range(len(corpus.examples)), n)

    api_sets, universe = _coverage_state(corpus)
    covered: set[int] = set()
    gains: list[int] = []
    for i in picked:
        gain = sum(1 for a in api_sets[i] if a not in covered)
        covered |= api_sets[i]
        gains.append(gain)
    return _finish_result(corpus, picked, gains, len(covered), universe, config)


def js_divergence_hist(p: list[float], q: list[float]) -> float:
    """Jensen-Shannon divergence between two histograms (counts or
    probabilities; normalized here). Base-2 logs bound the result to
    [0, 1]; zero-probability terms contribute 0."""
    if len(p) != len(q):
        raise ValueError("histograms must have the same number of bins")
    p_sum, q_sum = sum(p), sum(q)
    if p_sum <= 0 or q_sum <= 0:
        raise ValueError("histograms must have positive mass")
    divergence = 0.0
    for pi_raw, qi_raw in zip(p, q):
        pi, qi = pi_raw / p_sum, qi_raw / q_sum
        mi = (pi + qi) / 2.0
        if pi > 0:
            divergence += 0.5 * pi * math.log2(pi / mi)
        if qi > 0:
            divergence += 0.5 * qi * math.log2(qi / mi)
    return divergence


def js_divergence(subset_lengths: list[int], full_lengths: list[int], bins: int) -> float:
    """JS divergence between binned length distributions, with equal-width
    bins spanning the full-corpus range."""
    if not subset_lengths or not full_lengths:
        raise ValueError("length lists must be non-empty")
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    lo, hi = float(min(full_lengths)), float(max(full_lengths))
    edges = [lo + (hi - lo) * i / bins for i in range(bins + 1)]

    def hist(values: list[int]) -> list[float]:
        counts = [0.0] * bins
        for v in values:
            counts[_bucket_index(v, edges)] += 1.0
        return counts

    return js_divergence_hist(hist(subset_lengths), hist(full_lengths))
