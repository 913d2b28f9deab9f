from typing import Iterator, List, Set

import numpy as np


def random_order(total: int, rng: np.random.Generator) -> Iterator[int]:
    """Yield 0..total-1 in a uniformly random order without materializing it up front.

    Draws by rejection while fewer than half of the indices have been seen, then
    shuffles the untried remainder. Callers usually stop after a few draws.
    """
    if total <= 0:
        return
    if total <= 64:
        for index in rng.permutation(total):
            yield int(index)
        return

    seen: Set[int] = set()
    while 2 * len(seen) < total:
        index = int(rng.integers(total))
        if index in seen:
            continue
        seen.add(index)
        yield index

    remaining = np.setdiff1d(np.arange(total, dtype=np.int64), np.fromiter(seen, dtype=np.int64))
    for index in rng.permutation(remaining):
        yield int(index)


def derive_seeds(seed: int, count: int) -> List[int]:
    """Independent child seeds for the phases of one run"""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1, dtype=np.uint64)[0] >> 1) for child in children]
