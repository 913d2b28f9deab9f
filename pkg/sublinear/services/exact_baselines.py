"""Ground-truth solvers for tests and the bench harness.

Everything here reads instances directly and is exponential or quadratic on
purpose; size limits are enforced from settings.
"""
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx
import numpy as np
import structlog
from scipy import stats
from scipy.sparse.csgraph import shortest_path

from sublinear.core.config import settings
from sublinear.core.exceptions import (
    ConfigurationError,
    ContractViolationError,
    SizeLimitExceededError,
)
from sublinear.models.edges import EdgeId
from sublinear.models.instances import MetricInstance, SetSystem
from sublinear.services.oracles import DistanceOracle
from sublinear.services.ranking import RankedScan, RankFunction

logger = structlog.get_logger(__name__)


class ExplicitMultigraph:
    """Materialized multigraph with the same view the local oracles use"""

    def __init__(self, vertices: Iterable[int], edges: Iterable[EdgeId]):
        self._vertices = tuple(sorted(set(int(v) for v in vertices)))
        self._vertex_set = frozenset(self._vertices)
        self.edges: Tuple[EdgeId, ...] = tuple(edges)
        self._incident: Dict[int, List[EdgeId]] = {v: [] for v in self._vertices}

        seen: Set[EdgeId] = set()
        for edge in self.edges:
            if not edge.is_canonical:
                raise ContractViolationError(f"edge {edge} is not canonical")
            if edge in seen:
                raise ContractViolationError(f"duplicate edge id {edge}")
            if edge.u not in self._vertex_set or edge.v not in self._vertex_set:
                raise ContractViolationError(f"edge {edge} leaves the vertex set")
            seen.add(edge)
            self._incident[edge.u].append(edge)
            self._incident[edge.v].append(edge)

    @property
    def vertices(self) -> Tuple[int, ...]:
        return self._vertices

    def has_vertex(self, vertex: int) -> bool:
        return vertex in self._vertex_set

    def incident_edges(self, vertex: int) -> Tuple[EdgeId, ...]:
        return tuple(self._incident[vertex])

    def degree(self, vertex: int) -> int:
        return len(self._incident[vertex])

    def ranked_scan(self, vertex: int, rank_function: RankFunction) -> RankedScan:
        return RankedScan(self._incident[vertex], rank_function)

    @property
    def average_degree(self) -> float:
        return 2.0 * len(self.edges) / len(self._vertices) if self._vertices else 0.0

    def edge_multiset(self) -> List[EdgeId]:
        return sorted(self.edges)

    def to_networkx(self) -> nx.MultiGraph:
        graph = nx.MultiGraph()
        graph.add_nodes_from(self._vertices)
        for edge in self.edges:
            graph.add_edge(edge.u, edge.v, key=edge.set_index)
        return graph

    @classmethod
    def from_set_system(
        cls,
        system: SetSystem,
        set_indices: Optional[Sequence[int]] = None,
        elements: Optional[Sequence[int]] = None,
        exclude_size_two: bool = False,
    ) -> "ExplicitMultigraph":
        """H over (F^, U_low) built eagerly from ground truth"""
        sets = range(system.n) if set_indices is None else set_indices
        vertices = range(system.universe_size) if elements is None else elements
        keep = frozenset(int(v) for v in vertices)
        edges = []
        for s in sets:
            if exclude_size_two and system.set_size(s) == 2:
                continue
            members = [e for e in system.family[s] if e in keep]
            for u, v in itertools.combinations(members, 2):
                edges.append(EdgeId.canonical(u, v, int(s)))
        return cls(keep, edges)

    @classmethod
    def random(
        cls,
        n_vertices: int,
        n_edges: int,
        seed: int,
        parallel_fraction: float = 0.2,
    ) -> "ExplicitMultigraph":
        """Uniform random pairs; a fraction of edges repeats an earlier pair as a parallel copy"""
        if n_vertices < 2 and n_edges > 0:
            raise ConfigurationError("edges need at least two vertices")
        rng = np.random.default_rng(seed)
        pairs: List[Tuple[int, int]] = []
        edges: List[EdgeId] = []
        for label in range(n_edges):
            if pairs and rng.random() < parallel_fraction:
                u, v = pairs[int(rng.integers(len(pairs)))]
            else:
                u, v = (int(x) for x in rng.choice(n_vertices, size=2, replace=False))
                pairs.append((u, v))
            edges.append(EdgeId.canonical(u, v, label))
        return cls(range(n_vertices), edges)


@dataclass(frozen=True)
class ExactCover:
    """Minimum cover size, or None when some element lies in no eligible set"""

    size: Optional[int]
    universe_size: int

    @property
    def coverable(self) -> bool:
        return self.size is not None

    @property
    def chi(self) -> Optional[int]:
        return None if self.size is None else self.universe_size - self.size


def exact_set_cover(system: SetSystem, restrict_no_pairs: bool = False) -> ExactCover:
    """Exact SC by DP over element subsets: dp[mask] = fewest sets whose union contains mask"""
    k = system.universe_size
    if k > settings.EXACT_SET_COVER_MAX_K:
        raise SizeLimitExceededError(
            f"exact set cover limited to k <= {settings.EXACT_SET_COVER_MAX_K}, got {k}"
        )
    if k == 0:
        return ExactCover(0, 0)

    masks = set()
    for members in system.family:
        if restrict_no_pairs and len(members) == 2:
            continue
        mask = 0
        for e in members:
            mask |= 1 << e
        if mask:
            masks.add(mask)

    full = (1 << k) - 1
    covered = 0
    for mask in masks:
        covered |= mask
    if covered != full:
        return ExactCover(None, k)

    unreachable = np.iinfo(np.int32).max // 2
    index = np.arange(1 << k, dtype=np.int64)
    dp = np.full(1 << k, unreachable, dtype=np.int32)
    dp[0] = 0
    for mask in sorted(masks):
        # reads the previous table only, so every set is used at most once
        dp = np.minimum(dp, dp[index & ~mask] + 1)
    return ExactCover(int(dp[full]), k)


def offline_greedy_matching(graph: ExplicitMultigraph, rank_function: RankFunction) -> FrozenSet[EdgeId]:
    """Greedy matching in increasing (rank, id) order"""
    matched: Set[int] = set()
    chosen: List[EdgeId] = []
    for edge in rank_function.sort(graph.edges):
        if edge.u in matched or edge.v in matched:
            continue
        matched.update((edge.u, edge.v))
        chosen.append(edge)
    return frozenset(chosen)


def matched_vertices(matching: Iterable[EdgeId]) -> FrozenSet[int]:
    return frozenset(v for edge in matching for v in (edge.u, edge.v))


def greedy_matching_size(endpoints: np.ndarray, order: np.ndarray) -> int:
    """Size of the greedy matching over the rows of an (m, 2) endpoint array taken in ``order``"""
    matched: Set[int] = set()
    size = 0
    for row in order:
        u, v = int(endpoints[row, 0]), int(endpoints[row, 1])
        if u in matched or v in matched:
            continue
        matched.add(u)
        matched.add(v)
        size += 1
    return size


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    half_width: float
    trials: int


def mc_rgmm_expectation(graph: ExplicitMultigraph, trials: int, seed: int = 0) -> MonteCarloEstimate:
    """Mean RGMM size over ``trials`` independent uniform edge orders, with a 99% half-width"""
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    if not graph.edges:
        return MonteCarloEstimate(0.0, 0.0, trials)

    rng = np.random.default_rng(seed)
    endpoints = np.asarray([(e.u, e.v) for e in graph.edges], dtype=np.int64)
    sizes = np.empty(trials, dtype=np.float64)
    for trial in range(trials):
        sizes[trial] = greedy_matching_size(endpoints, rng.permutation(len(endpoints)))

    mean = float(sizes.mean())
    if trials == 1:
        return MonteCarloEstimate(mean, 0.0, 1)
    half_width = float(stats.norm.ppf(0.995) * sizes.std(ddof=1) / math.sqrt(trials))
    return MonteCarloEstimate(mean, half_width, trials)


@dataclass(frozen=True)
class SpanningTree:
    weight: float
    edges: Tuple[Tuple[int, int, float], ...]


def prim_mst(size: int, row: Callable[[int, np.ndarray], np.ndarray]) -> SpanningTree:
    """Prim over a complete graph on 0..size-1; ``row(u, vs)`` supplies w(u, vs).

    Each pair is read at most once.
    """
    if size <= 1:
        return SpanningTree(0.0, ())
    outside = np.arange(1, size)
    best = row(0, outside).astype(np.float64)
    parent = np.zeros(size - 1, dtype=np.int64)
    edges = []
    total = 0.0
    while outside.size:
        pick = int(np.argmin(best))
        vertex = int(outside[pick])
        weight = float(best[pick])
        edges.append((int(parent[pick]), vertex, weight))
        total += weight

        outside = np.delete(outside, pick)
        best = np.delete(best, pick)
        parent = np.delete(parent, pick)
        if outside.size:
            fresh = row(vertex, outside)
            closer = fresh < best
            best = np.where(closer, fresh, best)
            parent = np.where(closer, vertex, parent)
    return SpanningTree(total, tuple(edges))


def mst_from_matrix(matrix: np.ndarray) -> SpanningTree:
    return prim_mst(len(matrix), lambda u, vs: matrix[u, vs])


def exact_mst(
    source: Union[MetricInstance, DistanceOracle], points: Optional[Sequence[int]] = None
) -> SpanningTree:
    """MST over ``points`` (every point by default); charged when ``source`` is an oracle"""
    n_points = source.n_points
    chosen = np.arange(n_points) if points is None else np.asarray(points, dtype=np.int64)
    if chosen.size < 1:
        raise ConfigurationError("exact_mst needs at least one point")

    if isinstance(source, DistanceOracle):
        fetch = source.query_row
    else:
        fetch = source.distance_row

    tree = prim_mst(int(chosen.size), lambda u, vs: fetch(int(chosen[u]), chosen[vs]))
    mapped = tuple((int(chosen[a]), int(chosen[b]), w) for a, b, w in tree.edges)
    return SpanningTree(tree.weight, mapped)


def _closure(metric: MetricInstance) -> np.ndarray:
    return shortest_path(metric.full_matrix(), method="FW", directed=False)


def exact_steiner(metric: MetricInstance, terminals: Optional[Sequence[int]] = None) -> float:
    """ST(V, T, w) as the minimum of MST(T ∪ A) over all Steiner subsets A"""
    if metric.n_points > settings.EXACT_STEINER_MAX_POINTS:
        raise SizeLimitExceededError(
            f"exact Steiner limited to {settings.EXACT_STEINER_MAX_POINTS} points, got {metric.n_points}"
        )
    terminal_list = list(metric.terminals if terminals is None else terminals)
    if len(terminal_list) <= 1:
        return 0.0

    matrix = _closure(metric)
    terminal_set = set(terminal_list)
    steiner = [p for p in range(metric.n_points) if p not in terminal_set]

    best = math.inf
    # in a metric closure an optimal tree uses at most k - 2 Steiner points
    for size in range(min(len(steiner), len(terminal_list) - 2) + 1):
        for extra in itertools.combinations(steiner, size):
            idx = np.asarray(terminal_list + list(extra), dtype=np.int64)
            weight = mst_from_matrix(matrix[np.ix_(idx, idx)]).weight
            best = min(best, weight)
    return float(best)


def dreyfus_wagner(metric: MetricInstance, terminals: Optional[Sequence[int]] = None) -> float:
    """Steiner tree weight by the Dreyfus-Wagner subset DP"""
    if metric.n_points > settings.DREYFUS_WAGNER_MAX_POINTS:
        raise SizeLimitExceededError(
            f"Dreyfus-Wagner limited to {settings.DREYFUS_WAGNER_MAX_POINTS} points, got {metric.n_points}"
        )
    terminal_list = list(metric.terminals if terminals is None else terminals)
    k = len(terminal_list)
    if k <= 1:
        return 0.0

    dist = _closure(metric)
    # dp[S][v]: cheapest tree spanning terminals S plus point v
    dp = np.full((1 << k, metric.n_points), math.inf)
    for i, t in enumerate(terminal_list):
        dp[1 << i] = dist[t]

    for subset in range(1, 1 << k):
        if subset & (subset - 1) == 0:
            continue
        merged = np.full(metric.n_points, math.inf)
        part = (subset - 1) & subset
        while part:
            rest = subset ^ part
            if part < rest:
                merged = np.minimum(merged, dp[part] + dp[rest])
            part = (part - 1) & subset
        dp[subset] = (merged[:, None] + dist).min(axis=0)

    return float(dp[(1 << k) - 1].min())
