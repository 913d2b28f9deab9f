import math
import os
import sys
from typing import Dict

import numpy as np
import pytest

# Add project root to sys.path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from sublinear.core.config import Settings
from sublinear.models.edges import EdgeId
from sublinear.models.instances import MetricInstance, SetSystem
from sublinear.schemas.params import SteinerParams
from sublinear.services.exact_baselines import ExplicitMultigraph, mst_from_matrix
from sublinear.services.oracles import DistanceOracle, MembershipOracle, MemoizedDistances
from sublinear.services.ranking import RankFunction
from sublinear.services.terminal_levels import TerminalLevels


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long statistical sweeps")


class FixedRanks(RankFunction):
    """Rank function with hand-picked ranks, for tests that need a known greedy order"""

    def __init__(self, ranks: Dict[EdgeId, float]):
        super().__init__(seed=0)
        self.ranks = dict(ranks)

    def peek(self, edge: EdgeId) -> float:
        return self.ranks[edge]


@pytest.fixture
def bench_settings():
    """Settings read with defaults only"""
    return Settings(_env_file=None)


@pytest.fixture
def three_set_system():
    """S1 = {e1, e2, e3}, S2 = {e1, e2, e4}, S3 = {e1, e2, e5} with e_i -> i - 1"""
    return SetSystem.from_sets(5, [[0, 1, 2], [0, 1, 3], [0, 1, 4]], {"name": "three-sets"})


@pytest.fixture
def three_set_oracle(three_set_system):
    return MembershipOracle(three_set_system)


@pytest.fixture
def path_graph():
    """P4: 0 - 1 - 2 - 3"""
    edges = [EdgeId.canonical(0, 1, 0), EdgeId.canonical(1, 2, 1), EdgeId.canonical(2, 3, 2)]
    return ExplicitMultigraph(range(4), edges)


@pytest.fixture
def triangle_graph():
    edges = [EdgeId.canonical(0, 1, 0), EdgeId.canonical(1, 2, 1), EdgeId.canonical(0, 2, 2)]
    return ExplicitMultigraph(range(3), edges)


@pytest.fixture
def star_graph():
    """K_{1,10} with center 0"""
    return ExplicitMultigraph(range(11), [EdgeId.canonical(0, leaf, leaf) for leaf in range(1, 11)])


@pytest.fixture
def unit_square():
    coords = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    return MetricInstance.from_coords(coords, terminals=[0, 1, 2, 3])


@pytest.fixture
def fermat_metric():
    """Unit equilateral triangle of terminals with the center as the only Steiner point"""
    height = math.sqrt(3.0) / 2.0
    coords = [[0.0, 0.0], [1.0, 0.0], [0.5, height], [0.5, height / 3.0]]
    return MetricInstance.from_coords(coords, terminals=[0, 1, 2])


@pytest.fixture
def midpoint_metric():
    """Two terminals on a line with their midpoint as a Steiner point"""
    return MetricInstance.from_coords([[0.0], [1.0], [2.0]], terminals=[0, 2])


@pytest.fixture
def fermat_oracle(fermat_metric):
    return DistanceOracle(fermat_metric)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def build_levels(metric, params=None):
    """TerminalLevels of a metric plus the memoized distances and terminal matrix behind it"""
    params = params or SteinerParams()
    distances = MemoizedDistances(DistanceOracle(metric))
    matrix = distances.terminal_matrix()
    tree = mst_from_matrix(matrix)
    base = params.epsilon * tree.weight / (len(metric.terminals) - 1)
    return TerminalLevels(metric.terminals, matrix, tree.edges, base, params), distances, matrix
