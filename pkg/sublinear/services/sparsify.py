"""Set and element sparsification.

``sparsify_sets`` walks the family once and drops every set whose sampled
intersection with the surviving universe is large, together with its surviving
elements. ``sparsify_elements`` samples surviving sets and splits the surviving
elements into low-degree and high-degree ones. Afterwards every surviving set
holds O(alpha log n) surviving elements and every low element sits in
O(beta log n / eps) surviving sets, with high probability.
"""
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from sublinear.core.config import settings
from sublinear.core.exceptions import ConfigurationError
from sublinear.services.oracles import MembershipOracle

logger = structlog.get_logger(__name__)

SPARSIFY_SETS_PHASE = "sparsify_sets"
SPARSIFY_ELEMENTS_PHASE = "sparsify_elements"


@dataclass(frozen=True)
class SetRemoval:
    set_index: int
    removed_elements: Tuple[int, ...]
    sampled_hits: int
    universe_before: int


@dataclass(frozen=True)
class SetSparsifyResult:
    surviving_sets: Tuple[int, ...]
    surviving_elements: Tuple[int, ...]
    removed_count: int
    removals: Tuple[SetRemoval, ...] = ()
    stopped_early: bool = False
    alpha: float = 1.0

    @property
    def c(self) -> int:
        return self.removed_count


@dataclass(frozen=True)
class ElementPartition:
    low: Tuple[int, ...]
    high: Tuple[int, ...]
    sampled_sets: Tuple[int, ...] = ()
    hit_counts: Dict[int, int] = field(default_factory=dict)
    threshold: float = 0.0
    early_return: bool = False

    @property
    def low_set(self) -> FrozenSet[int]:
        return frozenset(self.low)


def _log_n(n: int) -> float:
    return math.log(max(n, 2))


def sparsify_sets(oracle: MembershipOracle, alpha: float, seed: int) -> SetSparsifyResult:
    """One pass over the family in index order.

    Stop once |U^| < 10 alpha ln n. For each set S draw r1 = ceil(|U^| / alpha)
    elements of U^ with replacement; if at least 10 ln n of them lie in S, drop S
    and remove S ∩ U^ by querying all of U^ against S.
    """
    if alpha < 1:
        raise ConfigurationError(f"alpha must be >= 1, got {alpha}")

    rng = np.random.default_rng(seed)
    n = oracle.n_sets
    log_n = _log_n(n)
    stop_below = settings.SET_SPARSIFY_STOP_FACTOR * alpha * log_n
    hit_threshold = settings.SET_SPARSIFY_HIT_FACTOR * log_n

    universe = np.arange(oracle.universe_size, dtype=np.int64)
    surviving_sets: List[int] = []
    removals: List[SetRemoval] = []
    stopped_early = False

    with oracle.ledger.phase(SPARSIFY_SETS_PHASE):
        for set_index in range(n):
            if universe.size < stop_below:
                # sets from here on survive untouched
                surviving_sets.extend(range(set_index, n))
                stopped_early = True
                break

            r1 = int(math.ceil(universe.size / alpha))
            sample = universe[rng.integers(0, universe.size, size=r1)]
            hits = int(np.count_nonzero(oracle.query_elements(sample, set_index)))

            if hits >= hit_threshold:
                inside = oracle.query_elements(universe, set_index)
                removed = tuple(int(e) for e in universe[inside])
                removals.append(SetRemoval(set_index, removed, hits, int(universe.size)))
                universe = universe[~inside]
            else:
                surviving_sets.append(set_index)

    logger.info(
        "Set sparsification finished",
        alpha=alpha,
        removed_sets=len(removals),
        surviving_elements=int(universe.size),
        stopped_early=stopped_early,
    )
    return SetSparsifyResult(
        surviving_sets=tuple(surviving_sets),
        surviving_elements=tuple(int(e) for e in universe),
        removed_count=len(removals),
        removals=tuple(removals),
        stopped_early=stopped_early,
        alpha=alpha,
    )


def sparsify_elements(
    oracle: MembershipOracle,
    surviving_sets: Sequence[int],
    surviving_elements: Sequence[int],
    beta: float,
    epsilon: float,
    seed: int,
) -> ElementPartition:
    """Split U^ into (U_low, U_high).

    r2 = ceil(|U^| / beta). Below 20 ln n / eps samples every element is low.
    Otherwise r2 sets of F^ are drawn with replacement, all of U^ is queried
    against each, and an element is low iff it appeared in at most
    20 ln n / eps sampled sets. An empty F^ leaves every element low.
    """
    if beta < 1:
        raise ConfigurationError(f"beta must be >= 1, got {beta}")
    if not 0 < epsilon < 1:
        raise ConfigurationError(f"epsilon must lie in (0, 1), got {epsilon}")

    elements = np.asarray(sorted(surviving_elements), dtype=np.int64)
    threshold = settings.ELEMENT_SPARSIFY_FACTOR * _log_n(oracle.n_sets) / epsilon
    r2 = int(math.ceil(elements.size / beta))

    if r2 < threshold or not surviving_sets:
        if r2 >= threshold:
            logger.warning("No surviving sets to sample; every element stays low")
        return ElementPartition(
            low=tuple(int(e) for e in elements),
            high=(),
            threshold=threshold,
            early_return=True,
        )

    rng = np.random.default_rng(seed)
    family = np.asarray(surviving_sets, dtype=np.int64)
    sampled = family[rng.integers(0, family.size, size=r2)]
    counts = np.zeros(elements.size, dtype=np.int64)

    with oracle.ledger.phase(SPARSIFY_ELEMENTS_PHASE):
        for set_index in sampled:
            counts += oracle.query_elements(elements, int(set_index))

    low_mask = counts <= threshold
    partition = ElementPartition(
        low=tuple(int(e) for e in elements[low_mask]),
        high=tuple(int(e) for e in elements[~low_mask]),
        sampled_sets=tuple(int(s) for s in sampled),
        hit_counts={int(e): int(c) for e, c in zip(elements, counts)},
        threshold=threshold,
    )
    logger.info(
        "Element sparsification finished",
        beta=beta,
        sampled_sets=r2,
        low=len(partition.low),
        high=len(partition.high),
    )
    return partition


def claimed_cover_of_high(
    partition: ElementPartition,
    surviving_sets: Sequence[int],
    universe_size: int,
    epsilon: float,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[int, ...]:
    """A uniform subfamily of F^ of size ceil(eps k / 5); w.h.p. it covers U_high"""
    rng = rng or np.random.default_rng()
    size = min(int(math.ceil(epsilon * universe_size / 5)), len(surviving_sets))
    if size == 0:
        return ()
    chosen = rng.choice(np.asarray(surviving_sets, dtype=np.int64), size=size, replace=False)
    return tuple(int(s) for s in chosen)
