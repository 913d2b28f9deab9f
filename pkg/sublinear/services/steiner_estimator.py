"""(2 - eta)-estimator for the metric Steiner tree weight under distance queries.

1. w(T*) from an exact Prim MST over the terminals (every terminal pair read once).
2. For each level i = 1..L, elements are the small components of the threshold
   graph below t_(i-1) and sets are Steiner vertices within tau_i of one of a
   component's representatives. Sets of size exactly two are dropped; every
   component keeps an implicit singleton. The level's improvement chi_i is
   estimated and weighted by the bucket width eps * t_(i-1).
3. If the total gain exceeds c_eta * eta * w(T*) the answer is
   (1 - c'_eta * eta) * w(T*), otherwise w(T*).

Levels are explicit (dense branch, Case 1), skipped (light), or solved by
sampling (heavy).
"""
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple

import numpy as np
import structlog

from sublinear.core.exceptions import ConfigurationError, ContractViolationError
from sublinear.models.edges import EdgeId
from sublinear.models.instances import SetSystem
from sublinear.schemas.common import EstimateBranch, LevelClass
from sublinear.schemas.params import SteinerParams
from sublinear.schemas.reports import LevelDiagnostics, SteinerReport
from sublinear.services.exact_baselines import mst_from_matrix
from sublinear.services.oracles import DistanceOracle, MemoizedDistances
from sublinear.services.ranking import RankedScan, RankFunction
from sublinear.services.rgmm_local import estimate_rgmm_size
from sublinear.services.setcover_estimator import thsc_from_explicit
from sublinear.services.terminal_levels import (
    LevelSetCover,
    LevelState,
    TerminalLevels,
    bfs_representatives,
    classify_level,
    find_representative,
)
from sublinear.utils.random_order import derive_seeds, random_order

logger = structlog.get_logger(__name__)

TERMINAL_MST_PHASE = "terminal_mst"
STEINER_DENSE_PHASE = "dense_scan"


def explicit_level_gain(
    cover: LevelSetCover,
    distances: MemoizedDistances,
    steiner_points: Sequence[int],
    exclude_size_two: bool,
    seed: int,
) -> float:
    """chi_i of the level instance read in full (all Steiner vertices against all representatives)"""
    if cover.size == 0:
        return 0.0
    family = cover.explicit_family(distances, steiner_points)
    system = SetSystem.from_sets(cover.size, family)
    return thsc_from_explicit(system, exclude_pairs=exclude_size_two, seed=seed).value


class LevelComponentGraph:
    """Implicit multigraph of one heavy level: vertices are small components, one edge per Steiner vertex near both.

    Touching a component reads its representatives against every W_1 vertex to
    find the Steiner vertices near it. Its edges are then revealed pair by pair:
    a candidate (w, C') costs the distances from w to the representatives of C'.
    """

    def __init__(
        self,
        state: LevelState,
        distances: MemoizedDistances,
        vertices: Sequence[int],
        steiner_sets: Sequence[int],
        exclude_size_two: bool = True,
        cover: Optional[LevelSetCover] = None,
        seed: int = 0,
    ):
        self.state = state
        self.cover = cover if cover is not None else LevelSetCover.from_state(state)
        self.distances = distances
        self._vertices = tuple(sorted(int(v) for v in vertices))
        self._vertex_set = frozenset(self._vertices)
        self.steiner_sets = tuple(int(v) for v in steiner_sets)
        self.exclude_size_two = exclude_size_two
        self._rng = np.random.default_rng(seed)
        self._near: Dict[int, Tuple[int, ...]] = {}
        self._size_not_two: Dict[int, bool] = {}

        owners = self.cover.rep_component
        order = np.argsort(owners, kind="stable")
        bounds = np.searchsorted(owners[order], np.arange(self.cover.size + 1))
        self._rep_slices = [
            self.cover.rep_positions[order[bounds[c]:bounds[c + 1]]] for c in range(self.cover.size)
        ]
        self._owner = {int(p): int(c) for p, c in zip(self.cover.rep_positions, owners)}
        in_graph = np.isin(owners, np.asarray(self._vertices, dtype=np.int64))
        self._graph_reps = self.cover.rep_positions[in_graph]
        self._graph_owners = owners[in_graph]

    @property
    def vertices(self) -> Tuple[int, ...]:
        return self._vertices

    def has_vertex(self, vertex: int) -> bool:
        return vertex in self._vertex_set

    def _require_vertex(self, vertex: int) -> None:
        if vertex not in self._vertex_set:
            raise ContractViolationError(f"component {vertex} is not a vertex of this level graph")

    def _near_rep(self, steiner_vertex: int, position: int) -> bool:
        return bool(self.distances.to_terminals(steiner_vertex, [position])[0] < self.cover.tau)

    def covers(self, steiner_vertex: int, component: int) -> bool:
        reps = self._rep_slices[component]
        return bool(np.any(self.distances.to_terminals(steiner_vertex, reps) < self.cover.tau))

    def sets_containing(self, vertex: int) -> Tuple[int, ...]:
        """W_1 vertices near the component; |W_1| x z distance reads on first touch"""
        self._require_vertex(vertex)
        cached = self._near.get(vertex)
        if cached is None:
            cached = tuple(w for w in self.steiner_sets if self.covers(w, vertex))
            self._near[vertex] = cached
        return cached

    def validate_edge_not_size_two(self, edge: EdgeId) -> bool:
        """True iff the Steiner vertex behind ``edge`` is near a third small component.

        Reads the other representatives in random order and stops at the first
        near one; cached per Steiner vertex.
        """
        steiner_vertex = edge.set_index
        cached = self._size_not_two.get(steiner_vertex)
        if cached is None:
            owners = self.cover.rep_component
            others = self.cover.rep_positions[(owners != edge.u) & (owners != edge.v)]
            cached = any(
                self._near_rep(steiner_vertex, int(others[i])) for i in random_order(int(others.size), self._rng)
            )
            self._size_not_two[steiner_vertex] = cached
        return cached

    def _candidates(self, vertex: int) -> List[EdgeId]:
        others = [c for c in self._vertices if c != vertex]
        return [EdgeId.canonical(vertex, c, w) for w in self.sets_containing(vertex) for c in others]

    def _confirm(self, vertex: int, edge: EdgeId) -> bool:
        if not self.covers(edge.set_index, edge.other(vertex)):
            return False
        return not self.exclude_size_two or self.validate_edge_not_size_two(edge)

    def ranked_scan(self, vertex: int, rank_function: RankFunction) -> RankedScan:
        self._require_vertex(vertex)
        return RankedScan(self._candidates(vertex), rank_function, partial(self._confirm, vertex))

    def incident_edges(self, vertex: int) -> Tuple[EdgeId, ...]:
        """Every edge at the component; reads all of its candidate pairs"""
        self._require_vertex(vertex)
        return tuple(e for e in self._candidates(vertex) if self._confirm(vertex, e))

    def degree(self, vertex: int) -> int:
        return len(self.incident_edges(vertex))

    def sample_random_neighbor(
        self,
        vertex: int,
        exclusion: Optional[Set[EdgeId]] = None,
        rng: Optional[np.random.Generator] = None,
    ) -> Optional[Tuple[int, EdgeId]]:
        """Scan pairs (w, t), w near the component and t a representative of another one, in random order.

        A near pair identifies the neighbor by a BFS from t. It counts only when t
        is the first representative of its net near w, so every edge has exactly
        one accepting pair and all non-excluded edges are equally likely.
        """
        rng = rng or self._rng
        exclusion = exclusion or set()
        near = self.sets_containing(vertex)
        targets = self._graph_reps[self._graph_owners != vertex]
        width = int(targets.size)
        if not near or width == 0:
            return None

        for pair in random_order(len(near) * width, rng):
            steiner_vertex = near[pair // width]
            position = int(targets[pair % width])
            if not self._near_rep(steiner_vertex, position):
                continue
            found = bfs_representatives(self.state, self.state.terminals[position])
            if found.overflow:
                continue
            first = next(
                self.state.position(rep)
                for rep in found.representatives
                if self._near_rep(steiner_vertex, self.state.position(rep))
            )
            if first != position:
                continue
            edge = EdgeId.canonical(vertex, self._owner[position], steiner_vertex)
            if edge in exclusion:
                continue
            if self.exclude_size_two and not self.validate_edge_not_size_two(edge):
                continue
            return edge.other(vertex), edge
        return None


@dataclass
class HeavyLevelResult:
    improvement: float
    mu_tilde: float = 0.0
    high_components: int = 0
    w2_size: int = 0
    covered_by_w2: float = 0.0
    matching_vertices: int = 0
    extras: Dict[str, float] = field(default_factory=dict)


def component_sampler(
    state: LevelState,
    cover: LevelSetCover,
    allowed: Sequence[int],
    attempts: Optional[int] = None,
) -> Callable[[np.random.Generator], int]:
    """Uniform allowed small component.

    Draws a uniform terminal, runs a BFS from it and keeps its component with
    probability 1/z when the terminal is one of the z representatives.
    """
    local_of = {c: i for i, c in enumerate(cover.components)}
    allowed_set = frozenset(allowed)
    allowed_list = sorted(allowed_set)
    k = len(state.terminals)
    budget = 64 * max(k, 1) if attempts is None else attempts

    def draw(rng: np.random.Generator) -> int:
        for _ in range(budget):
            terminal = state.terminals[int(rng.integers(k))]
            found = bfs_representatives(state, terminal)
            if found.overflow or terminal not in found.representatives:
                continue
            local = local_of.get(state.component_of(terminal))
            if local is None or local not in allowed_set:
                continue
            if rng.random() < 1.0 / found.count:
                return local
        logger.warning(
            "Component sampler fell back to a uniform pick",
            level=state.level,
            attempts=budget,
            allowed=len(allowed_list),
        )
        return allowed_list[int(rng.integers(len(allowed_list)))]

    return draw


def solve_level_heavy(
    state: LevelState,
    distances: MemoizedDistances,
    steiner_points: Sequence[int],
    params: SteinerParams,
    n_points: int,
    seed: int,
) -> HeavyLevelResult:
    """Sampling estimate of chi_i for a heavy level.

    chi~_i = clamp(mu~ + |C_high| + |cover(W_2)| - |W_2| - eps |U_i| / 2, 0, |U_i|)
    """
    violations = params.sampling_violations(n_points, distances.k)
    if violations:
        raise ConfigurationError("heavy-level sampling conditions fail: " + "; ".join(violations))

    cover = LevelSetCover.from_state(state)
    size = cover.size
    if size == 0 or not steiner_points:
        return HeavyLevelResult(0.0)

    split_seed, w_seed, union_seed, rgmm_seed = derive_seeds(seed, 4)
    rng = np.random.default_rng(split_seed)
    steiner = np.asarray(steiner_points, dtype=np.int64)
    log_n = math.log(max(n_points, 2))
    k = distances.k
    log_k = math.log(max(k, 2))

    # (a) high components: some representative close to many sampled Steiner vertices
    samples = int(math.ceil(steiner.size / params.r_threshold(n_points) * log_n))
    hits = np.zeros(cover.rep_positions.size, dtype=np.int64)
    for v in steiner[rng.integers(0, steiner.size, size=samples)]:
        hits += distances.to_terminals(int(v), cover.rep_positions) < cover.tau
    high = np.unique(cover.rep_component[hits > log_n])
    high_set = frozenset(int(c) for c in high)

    # (b) sequential split of Steiner vertices against the shrinking low terminals
    w_rng = np.random.default_rng(w_seed)
    low_mask = ~np.isin(cover.rep_component, high)
    low_positions = cover.rep_positions[low_mask]
    low_owner = cover.rep_component[low_mask]
    alive = np.ones(low_positions.size, dtype=bool)
    covered_by_w2 = np.zeros(size, dtype=bool)
    probe = int(math.ceil(k / params.p_threshold(n_points) * log_k))
    w2: List[int] = []
    w1: List[int] = []
    for v in steiner:
        remaining = np.flatnonzero(alive)
        if remaining.size == 0:
            w1.append(int(v))
            continue
        picks = low_positions[remaining[w_rng.integers(0, remaining.size, size=probe)]]
        if np.count_nonzero(distances.to_terminals(int(v), picks) < cover.tau) >= log_k:
            near = remaining[distances.to_terminals(int(v), low_positions[remaining]) < cover.tau]
            alive[near] = False
            covered_by_w2[low_owner[near]] = True
            w2.append(int(v))
        else:
            w1.append(int(v))

    # (c) |cover(W_2)| by terminal sampling: a BFS from the terminal, kept with weight 1/z when it is a representative
    union_rng = np.random.default_rng(union_seed)
    union_samples = int(math.ceil(k / params.m_threshold(n_points) * log_k))
    covered_estimate = 0.0
    if w2 and union_samples:
        matrix = distances.terminal_matrix()
        local_of = {c: i for i, c in enumerate(cover.components)}
        total = 0.0
        for t in union_rng.integers(0, k, size=union_samples):
            terminal = state.terminals[int(t)]
            local = local_of.get(state.component_of(terminal))
            if local is None or not covered_by_w2[local]:
                continue
            found = bfs_representatives(state, terminal)
            if found.overflow or find_representative(state, matrix, terminal) != terminal:
                continue
            total += 1.0 / found.count
        covered_estimate = float(k * total / union_samples)

    # (d) matching over the remaining low components with W_1 sets
    remaining_components = [
        c for c in range(size) if c not in high_set and not covered_by_w2[c]
    ]
    mu_tilde = 0.0
    if remaining_components:
        graph = LevelComponentGraph(
            state,
            distances,
            remaining_components,
            w1,
            exclude_size_two=params.exclude_size_two,
            cover=cover,
            seed=rgmm_seed,
        )
        rgmm = estimate_rgmm_size(
            graph,
            params.epsilon,
            rgmm_seed,
            vertex_sampler=component_sampler(state, cover, remaining_components),
        )
        mu_tilde = rgmm.mu_tilde

    raw = mu_tilde + len(high_set) + covered_estimate - len(w2) - params.epsilon * size / 2.0
    improvement = float(min(max(raw, 0.0), size))
    return HeavyLevelResult(
        improvement=improvement,
        mu_tilde=mu_tilde,
        high_components=len(high_set),
        w2_size=len(w2),
        covered_by_w2=covered_estimate,
        matching_vertices=len(remaining_components),
    )


def _report(
    oracle: DistanceOracle,
    params: SteinerParams,
    estimate: float,
    mst_weight: float,
    branch: EstimateBranch,
    **extra,
) -> SteinerReport:
    return SteinerReport(
        estimate=estimate,
        mst_weight=mst_weight,
        n_points=oracle.n_points,
        k=len(oracle.terminals),
        branch=branch,
        ledger=oracle.ledger.snapshot(),
        params=params,
        seed=params.seed,
        **extra,
    )


def estimate_steiner(oracle: DistanceOracle, params: Optional[SteinerParams] = None) -> SteinerReport:
    """(2 - eta)-estimate of ST(V, T, w); the answer is always w(T*) or (1 - c'_eta eta) w(T*)"""
    params = params or SteinerParams()
    ledger = oracle.ledger
    n = oracle.n_points
    terminals = oracle.terminals
    k = len(terminals)
    steiner_points = oracle.steiner_points
    log = logger.bind(n=n, k=k, seed=params.seed)

    distances = MemoizedDistances(oracle)
    with ledger.phase(TERMINAL_MST_PHASE):
        matrix = distances.terminal_matrix()
    tree = mst_from_matrix(matrix)
    mst_weight = tree.weight

    if k <= 1 or mst_weight == 0.0 or not steiner_points:
        log.info("No Steiner improvement possible", mst_weight=mst_weight)
        return _report(
            oracle, params, mst_weight, mst_weight, EstimateBranch.DENSE,
            total_gain=0.0, fired=False, dense_reason="trivial instance",
        )

    base_scale = params.epsilon * mst_weight / (k - 1)
    levels = TerminalLevels(terminals, matrix, tree.edges, base_scale, params)
    violations = params.sampling_violations(n, k)
    dense_reason: Optional[str] = None
    if k <= params.kappa(n):
        dense_reason = f"k={k} <= kappa={params.kappa(n):.2f}"
    elif violations:
        dense_reason = "; ".join(violations)

    if dense_reason is not None:
        with ledger.phase(STEINER_DENSE_PHASE):
            for v in steiner_points:
                distances.to_terminals(v)

    classify_rng = np.random.default_rng(derive_seeds(params.seed, 1)[0])
    level_seeds = derive_seeds(params.seed + 1, levels.levels)
    diagnostics: List[LevelDiagnostics] = []
    total_gain = 0.0

    for i in range(1, levels.levels + 1):
        state = levels.state(i)
        phase = f"level_{i}"
        before = ledger.distance_queries
        with ledger.phase(phase):
            cover = LevelSetCover.from_state(state)
            u_estimate: Optional[float] = None
            if cover.size == 0:
                improvement = 0.0
            elif dense_reason is not None:
                improvement = explicit_level_gain(
                    cover, distances, steiner_points, params.exclude_size_two, level_seeds[i - 1]
                )
            else:
                classification = classify_level(state, params, n, classify_rng)
                u_estimate = state.u_estimate
                if classification == LevelClass.CASE1:
                    improvement = explicit_level_gain(
                        cover, distances, steiner_points, params.exclude_size_two, level_seeds[i - 1]
                    )
                elif classification == LevelClass.LIGHT:
                    improvement = 0.0
                else:
                    improvement = solve_level_heavy(
                        state, distances, steiner_points, params, n, level_seeds[i - 1]
                    ).improvement

        weighted = improvement * params.epsilon * state.previous_threshold
        total_gain += weighted
        diagnostics.append(
            LevelDiagnostics(
                level=i,
                threshold=state.threshold,
                tau=state.tau,
                classification=state.classification,
                components=len(state.components),
                small_components=cover.size,
                representatives=state.representative_count,
                u_estimate=u_estimate,
                improvement=improvement,
                weighted_gain=weighted,
                distance_queries=ledger.distance_queries - before,
            )
        )
        log.debug("Level finished", level=i, improvement=improvement, weighted_gain=weighted)

    fired = total_gain > params.c_eta * params.eta * mst_weight
    estimate = (1.0 - params.c_eta_prime * params.eta) * mst_weight if fired else mst_weight
    log.info(
        "Steiner estimate finished",
        mst_weight=round(mst_weight, 6),
        total_gain=round(total_gain, 6),
        fired=fired,
        branch="dense" if dense_reason else "sparse",
        distance_queries=ledger.distance_queries,
    )
    return _report(
        oracle,
        params,
        estimate,
        mst_weight,
        EstimateBranch.DENSE if dense_reason else EstimateBranch.SPARSE,
        total_gain=total_gain,
        fired=fired,
        dense_reason=dense_reason,
        base_scale=base_scale,
        levels=diagnostics,
    )
