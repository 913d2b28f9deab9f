import hashlib
import struct
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from sublinear.core.exceptions import ContractViolationError
from sublinear.models.edges import EdgeId

_MASK64 = (1 << 64) - 1
_UNIT = 1.0 / float(1 << 53)

RankKey = Tuple[float, EdgeId]


class RankFunction:
    """Lazy uniform ranks realizing a random permutation of the edges of H.

    rank(e) is a keyed 64-bit hash of (u, v, set_index) mapped to [0, 1); sorting
    by (rank, edge id) is the greedy order. Nothing is materialized up front.
    """

    def __init__(self, seed: int, cache: bool = True):
        self.seed = int(seed) & _MASK64
        self._key = struct.pack("<Q", self.seed)
        self._cache: Dict[EdgeId, float] = {} if cache else None  # type: ignore[assignment]

    def peek(self, edge: EdgeId) -> float:
        """rank(e) without storing it; candidate edges that may not exist go through here"""
        if not edge.is_canonical:
            raise ContractViolationError(f"edge {edge} is not canonical (u < v required)")
        digest = hashlib.blake2b(
            struct.pack("<qqq", edge.u, edge.v, edge.set_index),
            digest_size=8,
            key=self._key,
        ).digest()
        # top 53 bits -> exactly representable double in [0, 1)
        return (int.from_bytes(digest, "little") >> 11) * _UNIT

    def rank(self, edge: EdgeId) -> float:
        if self._cache is not None:
            cached = self._cache.get(edge)
            if cached is not None:
                return cached
        value = self.peek(edge)
        if self._cache is not None:
            self._cache[edge] = value
        return value

    def key(self, edge: EdgeId) -> RankKey:
        return (self.rank(edge), edge)

    def sort(self, edges: Iterable[EdgeId]) -> List[EdgeId]:
        return sorted(edges, key=self.key)

    def __repr__(self) -> str:
        return f"RankFunction(seed={self.seed})"


def edge_rank(rank_function: RankFunction, edge: EdgeId) -> float:
    return rank_function.rank(edge)


class RankedScan:
    """Candidate edges of one vertex visited in increasing (rank, id) order.

    Ranking a candidate is free; ``confirm`` decides whether it is a real edge
    and is only called once the cursor reaches it. The rank order of distinct
    candidates is a uniformly random order, so every confirmed edge is a random
    neighbor drawn without replacement from the edges not revealed yet.
    """

    def __init__(
        self,
        candidates: Sequence[EdgeId],
        rank_function: RankFunction,
        confirm: Optional[Callable[[EdgeId], bool]] = None,
    ):
        self._candidates = list(candidates)
        self._ranks = np.fromiter(
            (rank_function.peek(e) for e in self._candidates), dtype=np.float64, count=len(self._candidates)
        )
        if self._candidates:
            ids = np.asarray(self._candidates, dtype=np.int64)
            self._order = np.lexsort((ids[:, 2], ids[:, 1], ids[:, 0], self._ranks))
        else:
            self._order = np.empty(0, dtype=np.int64)
        self._confirm = confirm
        self._cursor = 0

    @property
    def size(self) -> int:
        return len(self._candidates)

    @property
    def examined(self) -> int:
        """Candidates confirmed or rejected so far"""
        return self._cursor

    @property
    def exhausted(self) -> bool:
        return self._cursor >= self._order.size

    def next_below(self, bound: Optional[RankKey] = None) -> Optional[EdgeId]:
        """Next confirmed edge ranked below ``bound``; candidates at or past the bound stay untouched"""
        while self._cursor < self._order.size:
            index = int(self._order[self._cursor])
            edge = self._candidates[index]
            if bound is not None and (float(self._ranks[index]), edge) >= bound:
                return None
            self._cursor += 1
            if self._confirm is None or self._confirm(edge):
                return edge
        return None
