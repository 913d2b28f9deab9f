import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from sublinear.core.exceptions import (
    ConfigurationError,
    ContractViolationError,
    SizeLimitExceededError,
)
from sublinear.models.edges import EdgeId
from sublinear.models.instances import MetricInstance, SetSystem
from sublinear.services.exact_baselines import (
    ExplicitMultigraph,
    dreyfus_wagner,
    exact_mst,
    exact_set_cover,
    exact_steiner,
    greedy_matching_size,
    matched_vertices,
    mc_rgmm_expectation,
    mst_from_matrix,
    offline_greedy_matching,
)
from sublinear.services.generators import generate_metric
from sublinear.services.oracles import DistanceOracle
from sublinear.services.ranking import RankFunction

from tests.conftest import FixedRanks


def brute_force_cover(system: SetSystem, restrict_no_pairs: bool = False):
    family = [set(s) for s in system.family if not (restrict_no_pairs and len(s) == 2)]
    universe = set(range(system.universe_size))
    for size in range(len(family) + 1):
        for chosen in itertools.combinations(family, size):
            if set().union(*chosen) >= universe:
                return size
    return None


families = st.integers(min_value=1, max_value=7).flatmap(
    lambda k: st.tuples(
        st.just(k),
        st.lists(st.sets(st.integers(min_value=0, max_value=k - 1), max_size=k), min_size=0, max_size=7),
    )
)


class TestExactSetCover:

    def test_three_sets_example(self, three_set_system):
        """Test all three sets are needed"""
        cover = exact_set_cover(three_set_system)
        assert cover.size == 3
        assert cover.chi == 2

    def test_uncoverable(self):
        """Test an element outside every set gives no cover"""
        cover = exact_set_cover(SetSystem.from_sets(3, [[0, 1]]))
        assert not cover.coverable
        assert cover.chi is None

    def test_pairs_can_be_ignored(self):
        """Test restrict_no_pairs drops size-two sets"""
        system = SetSystem.from_sets(4, [[0, 1], [2, 3], [0], [1], [2], [3]])
        assert exact_set_cover(system).size == 2
        assert exact_set_cover(system, restrict_no_pairs=True).size == 4

    def test_size_limit(self):
        """Test universes past the limit are refused"""
        with pytest.raises(SizeLimitExceededError):
            exact_set_cover(SetSystem.from_sets(23, [list(range(23))]))

    def test_empty_universe(self):
        """Test k = 0 is covered by nothing"""
        assert exact_set_cover(SetSystem.from_sets(0, [])).size == 0

    @hyp_settings(max_examples=150, deadline=None)
    @given(families, st.booleans())
    def test_matches_brute_force(self, instance, restrict_no_pairs):
        """Test the subset DP equals exhaustive search"""
        k, sets = instance
        system = SetSystem.from_sets(k, [sorted(s) for s in sets])
        assert exact_set_cover(system, restrict_no_pairs).size == brute_force_cover(system, restrict_no_pairs)


class TestGreedyMatching:

    def test_offline_path(self, path_graph):
        """Test greedy order picks the lowest-ranked edge first"""
        ranks = FixedRanks({EdgeId(0, 1, 0): 0.5, EdgeId(1, 2, 1): 0.1, EdgeId(2, 3, 2): 0.9})
        matching = offline_greedy_matching(path_graph, ranks)
        assert matching == frozenset({EdgeId(1, 2, 1)})
        assert matched_vertices(matching) == frozenset({1, 2})

    def test_matching_is_maximal(self):
        """Test no edge of the graph has both endpoints free"""
        graph = ExplicitMultigraph.random(50, 150, seed=3)
        matched = matched_vertices(offline_greedy_matching(graph, RankFunction(2)))
        assert all(e.u in matched or e.v in matched for e in graph.edges)

    def test_array_greedy(self):
        """Test the array version follows the given order"""
        endpoints = np.asarray([[0, 1], [1, 2], [2, 3]])
        assert greedy_matching_size(endpoints, np.asarray([1, 0, 2])) == 1
        assert greedy_matching_size(endpoints, np.asarray([0, 2, 1])) == 2

    def test_monte_carlo_on_the_path(self, path_graph):
        """Test the Monte Carlo mean of the path is close to 5/3"""
        estimate = mc_rgmm_expectation(path_graph, trials=60000, seed=1)
        assert abs(estimate.mean - 5.0 / 3.0) <= estimate.half_width + 0.01
        assert estimate.trials == 60000

    def test_monte_carlo_edge_cases(self):
        """Test trial counts below one and edgeless graphs"""
        with pytest.raises(ConfigurationError):
            mc_rgmm_expectation(ExplicitMultigraph([0], []), trials=0)
        assert mc_rgmm_expectation(ExplicitMultigraph([0, 1], []), trials=5).mean == 0.0


class TestExplicitMultigraph:

    def test_rejects_bad_edges(self):
        """Test non-canonical, duplicate and dangling edges are refused"""
        with pytest.raises(ContractViolationError):
            ExplicitMultigraph(range(3), [EdgeId(2, 1, 0)])
        with pytest.raises(ContractViolationError):
            ExplicitMultigraph(range(3), [EdgeId(0, 1, 0), EdgeId(0, 1, 0)])
        with pytest.raises(ContractViolationError):
            ExplicitMultigraph(range(2), [EdgeId(0, 5, 0)])

    def test_from_set_system(self, three_set_system):
        """Test every set contributes one edge per pair of its elements"""
        graph = ExplicitMultigraph.from_set_system(three_set_system)
        assert len(graph.edges) == 9
        assert graph.degree(0) == 6
        assert graph.average_degree == pytest.approx(18 / 5)
        assert graph.to_networkx().number_of_edges(0, 1) == 3

    def test_from_set_system_without_pairs(self):
        """Test size-two sets add no edges when excluded"""
        system = SetSystem.from_sets(4, [[0, 1], [1, 2, 3]])
        graph = ExplicitMultigraph.from_set_system(system, exclude_size_two=True)
        assert len(graph.edges) == 3
        assert all(e.set_index == 1 for e in graph.edges)

    def test_random_has_parallel_edges(self):
        """Test the random generator repeats endpoint pairs"""
        graph = ExplicitMultigraph.random(30, 200, seed=0, parallel_fraction=0.5)
        pairs = [(e.u, e.v) for e in graph.edges]
        assert len(graph.edges) == 200
        assert len(set(pairs)) < len(pairs)


class TestSpanningTrees:

    def test_matches_networkx(self):
        """Test Prim over the complete graph equals networkx's MST weight"""
        metric = generate_metric("euclidean", 25, terminal_fraction=1.0, seed=4)
        matrix = metric.full_matrix()
        graph = nx.from_numpy_array(matrix)
        expected = nx.minimum_spanning_tree(graph).size(weight="weight")
        assert exact_mst(metric).weight == pytest.approx(expected)
        assert mst_from_matrix(matrix).weight == pytest.approx(expected)

    def test_oracle_reads_each_pair_once(self):
        """Test an oracle-backed MST charges n(n-1)/2 distances"""
        metric = generate_metric("random_closure", 12, seed=2)
        oracle = DistanceOracle(metric)
        tree = exact_mst(oracle)
        assert len(tree.edges) == 11
        assert oracle.ledger.distance_queries == 12 * 11 // 2

    def test_subset_of_points(self, unit_square):
        """Test MST over a point subset maps edges back to point ids"""
        tree = exact_mst(unit_square, points=[0, 2, 3])
        assert tree.weight == pytest.approx(2.0)
        assert {p for a, b, _ in tree.edges for p in (a, b)} == {0, 2, 3}

    def test_needs_a_point(self, unit_square):
        """Test an empty point list is a configuration error"""
        with pytest.raises(ConfigurationError):
            exact_mst(unit_square, points=[])

    def test_single_point(self):
        """Test one point spans with weight zero"""
        assert mst_from_matrix(np.zeros((1, 1))).weight == 0.0


class TestSteinerTrees:

    def test_fermat_point(self, fermat_metric):
        """Test the equilateral triangle's Steiner tree goes through its center"""
        assert exact_steiner(fermat_metric) == pytest.approx(math.sqrt(3.0), abs=1e-5)
        assert dreyfus_wagner(fermat_metric) == pytest.approx(math.sqrt(3.0), abs=1e-5)

    def test_midpoint_gives_nothing(self, midpoint_metric):
        """Test a collinear midpoint does not shorten the direct edge"""
        assert exact_steiner(midpoint_metric) == pytest.approx(2.0)

    def test_all_terminals(self, unit_square):
        """Test without Steiner points the tree is the MST"""
        assert exact_steiner(unit_square) == pytest.approx(3.0)

    def test_single_terminal(self):
        """Test one terminal needs no tree"""
        metric = MetricInstance.from_coords([[0.0], [1.0]], terminals=[1])
        assert exact_steiner(metric) == 0.0
        assert dreyfus_wagner(metric) == 0.0

    @pytest.mark.parametrize("seed", range(8))
    def test_gilbert_pollak_bounds(self, seed):
        """Test w(T*) / 2 <= ST <= w(T*)"""
        metric = generate_metric("euclidean", 10, terminal_fraction=0.5, seed=seed)
        mst = exact_mst(metric, metric.terminals).weight
        st_weight = exact_steiner(metric)
        assert mst / 2.0 <= st_weight + 1e-9
        assert st_weight <= mst + 1e-9

    @pytest.mark.parametrize("kind,seed", [("euclidean", s) for s in range(4)] + [("random_closure", s) for s in range(4)])
    def test_dreyfus_wagner_agrees(self, kind, seed):
        """Test the subset DP matches subset enumeration"""
        metric = generate_metric(kind, 9, terminal_fraction=0.5, seed=seed)
        assert dreyfus_wagner(metric) == pytest.approx(exact_steiner(metric), rel=1e-9, abs=1e-9)

    def test_size_limits(self):
        """Test exact Steiner solvers refuse large instances"""
        metric = generate_metric("euclidean", 17, seed=0)
        with pytest.raises(SizeLimitExceededError):
            exact_steiner(metric)
        with pytest.raises(SizeLimitExceededError):
            dreyfus_wagner(metric)
