"""Per-level terminal structure for the Steiner estimator.

Level i has threshold t_i = b (1 + eps)^i. Its elements are the components of
the threshold graph over terminals with edges lighter than t_(i-1); they come
from a union-find over MST edges, which gives the threshold components exactly.
Each component keeps a net: a maximal set of representatives that are pairwise
at least eps * t_i apart, built by scanning the component's terminals in
ascending index.
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from sublinear.core.exceptions import ContractViolationError
from sublinear.schemas.common import LevelClass
from sublinear.schemas.params import SteinerParams
from sublinear.services.oracles import MemoizedDistances
from sublinear.utils.union_find import UnionFind

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class BfsResult:
    representatives: Optional[Tuple[int, ...]]
    count: int

    @property
    def overflow(self) -> bool:
        return self.representatives is None


@dataclass
class LevelState:
    level: int
    threshold: float
    previous_threshold: float
    tau: float
    net_radius: float
    cap: int
    terminals: Tuple[int, ...]
    labels: np.ndarray
    components: List[Tuple[int, ...]]
    nets: List[Tuple[int, ...]]
    classification: Optional[LevelClass] = None
    u_estimate: Optional[float] = None
    _position: Dict[int, int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._position = {t: i for i, t in enumerate(self.terminals)}

    def position(self, terminal: int) -> int:
        try:
            return self._position[terminal]
        except KeyError:
            raise ContractViolationError(f"{terminal} is not a terminal") from None

    def component_of(self, terminal: int) -> int:
        return int(self.labels[self.position(terminal)])

    @property
    def small_components(self) -> List[int]:
        """Components whose net fits under the cap; the elements of the level"""
        return [c for c, net in enumerate(self.nets) if len(net) <= self.cap]

    @property
    def representative_count(self) -> int:
        return sum(len(net) for net in self.nets)


@dataclass(frozen=True)
class LevelSetCover:
    """Elements: small components. Sets: Steiner vertices, v covering C iff w(v, rep) < tau for a rep of C"""

    components: Tuple[int, ...]
    rep_positions: np.ndarray
    rep_component: np.ndarray
    tau: float

    @classmethod
    def from_state(cls, state: LevelState) -> "LevelSetCover":
        components = tuple(state.small_components)
        positions: List[int] = []
        owners: List[int] = []
        for local, c in enumerate(components):
            for rep in state.nets[c]:
                positions.append(state.position(rep))
                owners.append(local)
        return cls(
            components=components,
            rep_positions=np.asarray(positions, dtype=np.int64),
            rep_component=np.asarray(owners, dtype=np.int64),
            tau=state.tau,
        )

    @property
    def size(self) -> int:
        return len(self.components)

    def members(self, distances: MemoizedDistances, steiner_vertex: int) -> Tuple[int, ...]:
        """Local indices of the components covered by ``steiner_vertex``"""
        if self.rep_positions.size == 0:
            return ()
        row = distances.to_terminals(steiner_vertex, self.rep_positions)
        return tuple(int(c) for c in np.unique(self.rep_component[row < self.tau]))

    def explicit_family(
        self, distances: MemoizedDistances, steiner_points: Sequence[int]
    ) -> List[Tuple[int, ...]]:
        return [m for m in (self.members(distances, v) for v in steiner_points) if m]


def build_net(members: Sequence[int], matrix: np.ndarray, position: Dict[int, int], radius: float) -> Tuple[int, ...]:
    """Greedy maximal radius-separated subset of ``members`` in ascending terminal index"""
    reps: List[int] = []
    rep_positions: List[int] = []
    for terminal in sorted(members):
        p = position[terminal]
        if rep_positions and np.min(matrix[p, rep_positions]) < radius:
            continue
        reps.append(terminal)
        rep_positions.append(p)
    return tuple(reps)


class TerminalLevels:
    """Builds LevelState objects from the terminal matrix and its MST"""

    def __init__(
        self,
        terminals: Sequence[int],
        matrix: np.ndarray,
        mst_edges: Sequence[Tuple[int, int, float]],
        base_scale: float,
        params: SteinerParams,
    ):
        self.terminals = tuple(int(t) for t in terminals)
        self.matrix = matrix
        self.base_scale = base_scale
        self.params = params
        self.levels = params.level_count(len(self.terminals))
        self.cap = params.net_cap(self.levels)
        self._position = {t: i for i, t in enumerate(self.terminals)}
        # MST edges over terminal positions, lightest first
        self._edges = sorted(mst_edges, key=lambda e: e[2])

    def threshold(self, level: int) -> float:
        return self.base_scale * (1.0 + self.params.epsilon) ** level

    def components_below(self, threshold: float) -> np.ndarray:
        """Component label per terminal position for the graph of edges lighter than ``threshold``"""
        forest = UnionFind(len(self.terminals))
        for a, b, weight in self._edges:
            if weight >= threshold:
                break
            forest.union(a, b)
        return forest.labels()

    def state(self, level: int) -> LevelState:
        if level < 1:
            raise ContractViolationError("levels start at 1")
        threshold = self.threshold(level)
        previous = self.threshold(level - 1)
        radius = self.params.epsilon * threshold
        labels = self.components_below(previous)

        count = int(labels.max()) + 1 if labels.size else 0
        groups: List[List[int]] = [[] for _ in range(count)]
        for p, label in enumerate(labels):
            groups[int(label)].append(self.terminals[p])
        components = [tuple(g) for g in groups]
        nets = [build_net(c, self.matrix, self._position, radius) for c in components]

        return LevelState(
            level=level,
            threshold=threshold,
            previous_threshold=previous,
            tau=self.params.tau_fraction * threshold,
            net_radius=radius,
            cap=self.cap,
            terminals=self.terminals,
            labels=labels,
            components=components,
            nets=nets,
        )


def find_representative(state: LevelState, matrix: np.ndarray, terminal: int) -> int:
    """First representative of the terminal's component within the net radius"""
    p = state.position(terminal)
    for rep in state.nets[state.component_of(terminal)]:
        if matrix[p, state.position(rep)] < state.net_radius:
            return rep
    raise ContractViolationError(f"net of terminal {terminal} is not maximal")


def bfs_representatives(state: LevelState, terminal: int, cap: Optional[int] = None) -> BfsResult:
    """All representatives of the terminal's component, or overflow past ``cap``"""
    cap = state.cap if cap is None else cap
    net = state.nets[state.component_of(terminal)]
    if len(net) > cap:
        return BfsResult(None, len(net))
    return BfsResult(net, len(net))


def sample_small_component_count(
    state: LevelState, rng: np.random.Generator, samples: int
) -> float:
    """k * mean(1[t represents a small component] / z) over uniform terminals t, z = that net's size"""
    k = len(state.terminals)
    if k == 0 or samples <= 0:
        return 0.0
    total = 0.0
    for p in rng.integers(0, k, size=samples):
        terminal = state.terminals[int(p)]
        found = bfs_representatives(state, terminal)
        if not found.overflow and terminal in found.representatives:
            total += 1.0 / found.count
    return float(k * total / samples)


def classify_level(
    state: LevelState, params: SteinerParams, n_points: int, rng: np.random.Generator
) -> LevelClass:
    """case1 when the total representative count stays within M / eps; otherwise light or heavy by |U_i|"""
    m = params.m_threshold(n_points)
    if state.representative_count <= math.ceil(m / params.epsilon):
        state.classification = LevelClass.CASE1
        return LevelClass.CASE1

    k = len(state.terminals)
    samples = int(math.ceil(k / m * math.log(max(k, 2))))
    state.u_estimate = sample_small_component_count(state, rng, samples)
    state.classification = LevelClass.LIGHT if state.u_estimate < m else LevelClass.HEAVY
    logger.debug(
        "Level classified",
        level=state.level,
        classification=state.classification.value,
        u_estimate=round(state.u_estimate, 2),
        samples=samples,
    )
    return state.classification
