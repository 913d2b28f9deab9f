"""Local oracles for random greedy maximal matching (RGMM) on multigraphs.

The greedy order is the rank order of a RankFunction. ``vertex_oracle`` and
``edge_oracle`` decide matched status by exploring only lower-ranked incident
edges; answers equal the offline greedy matching under the same ranks.

``ImplicitMultigraph`` is the auxiliary multigraph H of a sparsified set system:
vertices are the low elements, and every surviving set containing two low
elements contributes one parallel edge between them. It is never built. The
oracles reveal a vertex's edges one random neighbor at a time, lowest rank
first, and stop as soon as the greedy decision is known.
"""
import heapq
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import partial
from typing import (
    Callable,
    DefaultDict,
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Optional,
    Protocol,
    Sequence,
    Set,
    Tuple,
)

import numpy as np
import structlog

from sublinear.core.config import settings
from sublinear.core.exceptions import ConfigurationError, ContractViolationError
from sublinear.models.edges import EdgeId
from sublinear.schemas.reports import QueryStatsExport, RgmmEstimate
from sublinear.services.oracles import MembershipOracle
from sublinear.services.ranking import RankedScan, RankFunction, RankKey
from sublinear.utils.random_order import random_order

logger = structlog.get_logger(__name__)

RGMM_PHASE = "rgmm"


class MultigraphView(Protocol):
    """What the local oracles need from a multigraph"""

    @property
    def vertices(self) -> Sequence[int]: ...

    def has_vertex(self, vertex: int) -> bool: ...

    def ranked_scan(self, vertex: int, rank_function: RankFunction) -> RankedScan: ...

    def degree(self, vertex: int) -> int: ...


class ImplicitMultigraph:
    """H over (F^, U_low), read lazily through a MembershipOracle.

    Touching a vertex v for the first time costs |F^| queries to learn F^_v.
    After that its edges come from pairs (u, S), u in U_low \\ {v}, S in F^_v,
    one membership query per pair. Answers are kept, so no pair is paid twice.
    """

    def __init__(
        self,
        oracle: MembershipOracle,
        surviving_sets: Sequence[int],
        low_elements: Sequence[int],
        exclude_size_two: bool = False,
        seed: int = 0,
    ):
        self.oracle = oracle
        self.surviving_sets = tuple(int(s) for s in surviving_sets)
        self._vertices = tuple(sorted(int(e) for e in low_elements))
        self._vertex_set = frozenset(self._vertices)
        self._vertex_array = np.asarray(self._vertices, dtype=np.int64)
        self.exclude_size_two = exclude_size_two
        self._rng = np.random.default_rng(seed)

        self._sets_of: Dict[int, Tuple[int, ...]] = {}
        self._set_lookup: Dict[int, FrozenSet[int]] = {}
        self._answers: Dict[Tuple[int, int], bool] = {}
        self._known_members: DefaultDict[int, Set[int]] = defaultdict(set)
        self._size_not_two: Dict[int, bool] = {}

    @property
    def vertices(self) -> Tuple[int, ...]:
        return self._vertices

    def has_vertex(self, vertex: int) -> bool:
        return vertex in self._vertex_set

    def _require_vertex(self, vertex: int) -> None:
        if vertex not in self._vertex_set:
            raise ContractViolationError(f"{vertex} is not a vertex of H (not in U_low)")

    def _others(self, vertex: int) -> np.ndarray:
        return self._vertex_array[self._vertex_array != vertex]

    def sets_containing(self, vertex: int) -> Tuple[int, ...]:
        """F^_v, one full pass of |F^| queries on first touch"""
        self._require_vertex(vertex)
        cached = self._sets_of.get(vertex)
        if cached is None:
            hits = self.oracle.query_sets(vertex, self.surviving_sets)
            cached = tuple(s for s, hit in zip(self.surviving_sets, hits) if hit)
            self._sets_of[vertex] = cached
            self._set_lookup[vertex] = frozenset(cached)
            for set_index in cached:
                self._known_members[set_index].add(vertex)
        return cached

    def contains(self, element: int, set_index: int) -> bool:
        """Whether a low element lies in a surviving set; free when already known"""
        lookup = self._set_lookup.get(element)
        if lookup is not None:
            return set_index in lookup
        answer = self._answers.get((element, set_index))
        if answer is None:
            answer = self.oracle.query(element, set_index)
            self._answers[(element, set_index)] = answer
            if answer:
                self._known_members[set_index].add(element)
        return answer

    def _candidates(self, vertex: int) -> List[EdgeId]:
        others = [int(u) for u in self._others(vertex)]
        return [EdgeId.canonical(vertex, u, s) for s in self.sets_containing(vertex) for u in others]

    def _confirm(self, vertex: int, edge: EdgeId) -> bool:
        if not self.contains(edge.other(vertex), edge.set_index):
            return False
        return not self.exclude_size_two or self.validate_edge_not_size_two(edge)

    def ranked_scan(self, vertex: int, rank_function: RankFunction) -> RankedScan:
        """Edges of ``vertex`` revealed lowest rank first, one query per candidate pair reached"""
        self._require_vertex(vertex)
        return RankedScan(self._candidates(vertex), rank_function, partial(self._confirm, vertex))

    def incident_edges(self, vertex: int) -> Tuple[EdgeId, ...]:
        """Every edge at ``vertex``; reads all of its candidate pairs"""
        self._require_vertex(vertex)
        return tuple(e for e in self._candidates(vertex) if self._confirm(vertex, e))

    def degree(self, vertex: int) -> int:
        """deg_H(v), parallel edges counted separately"""
        return len(self.incident_edges(vertex))

    def sample_random_neighbor(
        self,
        vertex: int,
        exclusion: Optional[Set[EdgeId]] = None,
        rng: Optional[np.random.Generator] = None,
    ) -> Optional[Tuple[int, EdgeId]]:
        """Scan pairs (u, S), u in U_low \\ {v}, S in F^_v, in a fresh random order.

        Returns the first pair with u in S whose edge is not excluded (and, in the
        sizes-not-two mode, whose set has a third element). Every non-excluded
        incident edge is equally likely. None once all pairs are exhausted.
        """
        rng = rng or self._rng
        exclusion = exclusion or set()
        sets = self.sets_containing(vertex)
        if not sets:
            return None
        others = self._others(vertex)
        width = len(sets)

        for pair in random_order(int(others.size) * width, rng):
            u = int(others[pair // width])
            set_index = sets[pair % width]
            if not self.contains(u, set_index):
                continue
            edge = EdgeId.canonical(vertex, u, set_index)
            if edge in exclusion:
                continue
            if self.exclude_size_two and not self.validate_edge_not_size_two(edge):
                continue
            return u, edge
        return None

    def validate_edge_not_size_two(
        self,
        edge: EdgeId,
        rng: Optional[np.random.Generator] = None,
        use_cache: bool = True,
    ) -> bool:
        """True iff the set behind ``edge`` holds an element besides its endpoints.

        Scans U \\ {u, v} against the set in random order and stops at the first
        hit. The answer depends on the set only, so it is cached per set.
        """
        if not self.exclude_size_two:
            raise ContractViolationError("size-two validation needs exclude_size_two enabled")
        set_index = edge.set_index
        if use_cache:
            cached = self._size_not_two.get(set_index)
            if cached is not None:
                return cached
            if len(self._known_members.get(set_index, ())) >= 3:
                self._size_not_two[set_index] = True
                return True

        rng = rng or self._rng
        universe = self.oracle.universe_size
        candidates = np.setdiff1d(
            np.arange(universe, dtype=np.int64), np.asarray([edge.u, edge.v], dtype=np.int64)
        )
        found = False
        for position in random_order(int(candidates.size), rng):
            if self.oracle.query(int(candidates[position]), set_index):
                found = True
                break

        if use_cache:
            self._size_not_two[set_index] = found
        return found


class OracleMemo:
    """EdgeId -> matched answers of one estimation run; entries never change"""

    def __init__(self) -> None:
        self._answers: Dict[EdgeId, bool] = {}

    def get(self, edge: EdgeId) -> Optional[bool]:
        return self._answers.get(edge)

    def record(self, edge: EdgeId, matched: bool) -> None:
        previous = self._answers.get(edge)
        if previous is not None and previous != matched:
            raise ContractViolationError(f"memo entry for {edge} would flip to {matched}")
        self._answers[edge] = matched

    def __contains__(self, edge: object) -> bool:
        return edge in self._answers

    def __len__(self) -> int:
        return len(self._answers)


@dataclass
class QueryStats:
    """T(v, pi) per vertex-oracle call, Q(e, pi) per edge, Q(v) per vertex, recursion depths"""

    vertex_calls: List[int] = field(default_factory=list)
    edge_calls: Counter = field(default_factory=Counter)
    neighbor_requests: Counter = field(default_factory=Counter)
    depth_histogram: Counter = field(default_factory=Counter)

    def export(self) -> QueryStatsExport:
        calls = list(self.vertex_calls)
        edge_counts = list(self.edge_calls.values())
        return QueryStatsExport(
            probes=len(calls),
            recursive_calls=calls,
            mean_recursive_calls=float(np.mean(calls)) if calls else 0.0,
            max_edge_calls=max(edge_counts) if edge_counts else 0,
            mean_edge_calls=float(np.mean(edge_counts)) if edge_counts else 0.0,
            neighbor_requests={int(v): int(c) for v, c in self.neighbor_requests.items()},
            depth_histogram={int(d): int(c) for d, c in sorted(self.depth_histogram.items())},
        )


@dataclass
class RevealedEdges:
    """Prefix of one vertex's edges in rank order, grown on demand from its scan"""

    scan: RankedScan
    edges: List[EdgeId] = field(default_factory=list)
    keys: List[RankKey] = field(default_factory=list)


class LocalMatchingOracle:
    """Vertex and edge oracles of RGMM(H, pi) for one fixed rank function.

    The recursion of the edge oracle runs on an explicit stack, so query paths of
    any length are fine. With ``use_memo=False`` every top-level call starts from
    an empty memo, so nothing carries over between calls. Revealed edges are
    graph knowledge, not answers, and are kept either way.
    """

    def __init__(
        self,
        graph: MultigraphView,
        rank_function: RankFunction,
        memo: Optional[OracleMemo] = None,
        stats: Optional[QueryStats] = None,
        use_memo: bool = True,
    ):
        self.graph = graph
        self.rank_function = rank_function
        self.memo = memo if memo is not None else OracleMemo()
        self.stats = stats if stats is not None else QueryStats()
        self.use_memo = use_memo
        self._revealed: Dict[int, RevealedEdges] = {}
        self._vertex_answers: Dict[int, bool] = {}
        self._calls_in_probe = 0
        self._active = self.memo

    def _begin_call(self) -> None:
        self._active = self.memo if self.use_memo else OracleMemo()

    def revealed(self, vertex: int) -> RevealedEdges:
        entry = self._revealed.get(vertex)
        if entry is None:
            entry = RevealedEdges(self.graph.ranked_scan(vertex, self.rank_function))
            self._revealed[vertex] = entry
        return entry

    def _walk(self, vertex: int, below: Optional[RankKey], skip_endpoint: Optional[int]) -> Iterator[EdgeId]:
        entry = self.revealed(vertex)
        position = 0
        while True:
            if position < len(entry.edges):
                if below is not None and entry.keys[position] >= below:
                    return
            else:
                fresh = entry.scan.next_below(below)
                if fresh is None:
                    return
                entry.edges.append(fresh)
                entry.keys.append(self.rank_function.key(fresh))
            edge = entry.edges[position]
            position += 1
            self.stats.neighbor_requests[vertex] += 1
            if skip_endpoint is not None and edge.touches(skip_endpoint):
                # parallel copies of the root edge were already seen from the other side
                continue
            yield edge

    def _lower_edges(self, edge: EdgeId) -> Iterator[EdgeId]:
        """Edges sharing an endpoint with ``edge`` and ranked strictly below it, ascending"""
        key = self.rank_function.key(edge)
        return heapq.merge(
            self._walk(edge.u, key, None),
            self._walk(edge.v, key, edge.u),
            key=self.rank_function.key,
        )

    def _lookup(self, edge: EdgeId) -> Optional[bool]:
        return self._active.get(edge)

    def _store(self, edge: EdgeId, matched: bool) -> None:
        self._active.record(edge, matched)

    def _count_call(self, edge: EdgeId, depth: int) -> None:
        self.stats.edge_calls[edge] += 1
        self.stats.depth_histogram[depth] += 1
        self._calls_in_probe += 1

    def _resolve(self, root: EdgeId, depth: int) -> bool:
        self._count_call(root, depth)
        known = self._lookup(root)
        if known is not None:
            return known

        stack: List[Tuple[EdgeId, Iterator[EdgeId]]] = [(root, self._lower_edges(root))]
        child: Optional[bool] = None
        while stack:
            edge, candidates = stack[-1]
            if child is True:
                # a lower-ranked neighbouring edge is in the matching
                self._store(edge, False)
                stack.pop()
                child = False
                continue
            child = None

            blocked = False
            descended = False
            for candidate in candidates:
                self._count_call(candidate, depth + len(stack))
                answer = self._lookup(candidate)
                if answer is None:
                    stack.append((candidate, self._lower_edges(candidate)))
                    descended = True
                    break
                if answer:
                    blocked = True
                    break
            if descended:
                continue

            self._store(edge, not blocked)
            stack.pop()
            child = not blocked

        assert child is not None
        return child

    def edge_oracle(self, edge: EdgeId, endpoint: Optional[int] = None) -> bool:
        """True iff ``edge`` is in RGMM(H, pi)"""
        if not edge.is_canonical:
            raise ContractViolationError(f"edge {edge} is not canonical")
        if endpoint is not None and not edge.touches(endpoint):
            raise ContractViolationError(f"{endpoint} is not an endpoint of {edge}")
        self._begin_call()
        return self._resolve(edge, 0)

    def vertex_oracle(self, vertex: int) -> bool:
        """True iff ``vertex`` is matched in RGMM(H, pi)"""
        if not self.graph.has_vertex(vertex):
            raise ContractViolationError(f"{vertex} is not a vertex of the multigraph")
        if self.use_memo and vertex in self._vertex_answers:
            self.stats.vertex_calls.append(0)
            return self._vertex_answers[vertex]

        self._begin_call()
        self._calls_in_probe = 0
        matched = False
        for edge in self._walk(vertex, None, None):
            if self._resolve(edge, 1):
                matched = True
                break
        self.stats.vertex_calls.append(self._calls_in_probe)
        if self.use_memo:
            self._vertex_answers[vertex] = matched
        return matched


def vertex_oracle(
    graph: MultigraphView, vertex: int, rank_function: RankFunction, memo: Optional[OracleMemo] = None
) -> bool:
    return LocalMatchingOracle(graph, rank_function, memo).vertex_oracle(vertex)


def edge_oracle(
    graph: MultigraphView,
    edge: EdgeId,
    endpoint: int,
    rank_function: RankFunction,
    memo: Optional[OracleMemo] = None,
) -> bool:
    return LocalMatchingOracle(graph, rank_function, memo).edge_oracle(edge, endpoint)


def rgmm_sample_count(epsilon: float, size: int) -> int:
    """s = ceil(48 ln k / eps^2)"""
    return int(math.ceil(settings.RGMM_SAMPLE_CONSTANT * math.log(max(size, 2)) / epsilon**2))


def estimate_rgmm_size(
    graph: MultigraphView,
    epsilon: float,
    seed: int,
    universe_size: Optional[int] = None,
    rank_seed: Optional[int] = None,
    vertex_sampler: Optional[Callable[[np.random.Generator], int]] = None,
    oracle_factory: Optional[Callable[[RankFunction], LocalMatchingOracle]] = None,
) -> RgmmEstimate:
    """mu~ = |V| / (2 s) * matched - eps |V| / 4 from s uniform vertex probes.

    One rank function and one memo are shared by all probes. The shift makes the
    estimate one-sided: w.h.p. mu~ lies in [E|RGMM| - eps k / 2, E|RGMM|].
    """
    if not 0 < epsilon < 1:
        raise ConfigurationError(f"epsilon must lie in (0, 1), got {epsilon}")

    vertices = list(graph.vertices)
    if not vertices:
        return RgmmEstimate(
            mu_tilde=0.0, samples=0, matched=0, vertex_count=0, epsilon=epsilon,
            stats=QueryStats().export(),
        )

    size = universe_size if universe_size is not None else len(vertices)
    samples = rgmm_sample_count(epsilon, size)
    rng = np.random.default_rng(seed)
    rank_function = RankFunction(seed if rank_seed is None else rank_seed)
    oracle = oracle_factory(rank_function) if oracle_factory else LocalMatchingOracle(graph, rank_function)

    if vertex_sampler is None:
        picks: Iterable[int] = (vertices[i] for i in rng.integers(0, len(vertices), size=samples))
    else:
        picks = (vertex_sampler(rng) for _ in range(samples))

    matched = sum(1 for v in picks if oracle.vertex_oracle(v))
    count = len(vertices)
    mu_tilde = count / (2.0 * samples) * matched - epsilon * count / 4.0

    logger.info(
        "RGMM size estimated",
        vertices=count,
        samples=samples,
        matched=matched,
        mu_tilde=round(mu_tilde, 3),
        memo_entries=len(oracle.memo),
    )
    return RgmmEstimate(
        mu_tilde=mu_tilde,
        samples=samples,
        matched=matched,
        vertex_count=count,
        epsilon=epsilon,
        stats=oracle.stats.export(),
    )


@dataclass
class QueryCostSample:
    """Recursive-call counts of the local oracles under one rank function"""

    probes: int
    mean_vertex_calls: float
    max_vertex_calls: int
    max_edge_calls: int
    mean_edge_calls: float
    average_degree: float

    @property
    def vertex_ratio(self) -> float:
        """T(v) over 1 + d_bar"""
        return self.mean_vertex_calls / (1.0 + self.average_degree)


def measure_query_costs(graph: MultigraphView, seed: int, probes: Optional[int] = None) -> QueryCostSample:
    """T(v, pi) over uniform vertex probes and Q(e, pi) over a whole-graph sweep.

    Each probe starts from an empty memo, so T counts the full recursion behind
    one vertex answer. Q(e) comes from resolving every vertex once against a
    single shared memo, counting memo hits as calls.
    """
    vertices = list(graph.vertices)
    if not vertices:
        return QueryCostSample(0, 0.0, 0, 0, 0.0, 0.0)

    rank_function = RankFunction(seed)
    rng = np.random.default_rng(seed)
    count = probes if probes is not None else len(vertices)
    picks = rng.integers(0, len(vertices), size=count)

    fresh = LocalMatchingOracle(graph, rank_function, use_memo=False)
    for index in picks:
        fresh.vertex_oracle(vertices[int(index)])

    sweep = LocalMatchingOracle(graph, rank_function)
    for vertex in vertices:
        sweep.vertex_oracle(vertex)

    calls = fresh.stats.vertex_calls
    edge_counts = list(sweep.stats.edge_calls.values())
    degrees = [graph.degree(v) for v in vertices]
    return QueryCostSample(
        probes=count,
        mean_vertex_calls=float(np.mean(calls)) if calls else 0.0,
        max_vertex_calls=max(calls) if calls else 0,
        max_edge_calls=max(edge_counts) if edge_counts else 0,
        mean_edge_calls=float(np.mean(edge_counts)) if edge_counts else 0.0,
        average_degree=float(np.mean(degrees)),
    )
