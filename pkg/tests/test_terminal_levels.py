import math

import networkx as nx
import numpy as np
import pytest

from sublinear.core.exceptions import ContractViolationError
from sublinear.schemas.common import LevelClass
from sublinear.schemas.params import SteinerParams
from sublinear.services.generators import generate_metric
from sublinear.services.terminal_levels import (
    LevelSetCover,
    bfs_representatives,
    build_net,
    classify_level,
    find_representative,
    sample_small_component_count,
)

from tests.conftest import build_levels


@pytest.fixture
def random_levels():
    metric = generate_metric("euclidean", 60, terminal_fraction=0.5, seed=21)
    return build_levels(metric)


@pytest.fixture
def fermat_levels(fermat_metric):
    return build_levels(fermat_metric)


class TestThresholdComponents:

    def test_level_count_and_thresholds(self, fermat_levels):
        """Test L levels of geometric thresholds from the base scale"""
        levels, _, _ = fermat_levels
        assert levels.levels == 33
        assert levels.threshold(2) == pytest.approx(levels.base_scale * 1.1 ** 2)
        with pytest.raises(ContractViolationError):
            levels.state(0)

    @pytest.mark.parametrize("quantile", [0.05, 0.2, 0.5, 0.8, 1.0])
    def test_components_match_the_threshold_graph(self, random_levels, quantile):
        """Test union-find over MST edges gives the threshold graph's components"""
        levels, _, matrix = random_levels
        off_diagonal = matrix[np.triu_indices(len(matrix), k=1)]
        threshold = float(np.quantile(off_diagonal, quantile)) + 1e-12

        graph = nx.Graph()
        graph.add_nodes_from(range(len(matrix)))
        rows, cols = np.nonzero(np.triu(matrix < threshold, k=1))
        graph.add_edges_from(zip(rows.tolist(), cols.tolist()))
        expected = {frozenset(c) for c in nx.connected_components(graph)}

        labels = levels.components_below(threshold)
        found = {}
        for position, label in enumerate(labels):
            found.setdefault(int(label), set()).add(position)
        assert {frozenset(c) for c in found.values()} == expected

    def test_singleton_components_at_low_levels(self, fermat_levels):
        """Test the triangle stays split until the threshold passes its side length"""
        levels, _, _ = fermat_levels
        assert len(levels.state(25).components) == 3
        assert len(levels.state(26).components) == 1


class TestNets:

    @pytest.mark.parametrize("level", [5, 20, 35, 50])
    def test_nets_are_separated_and_maximal(self, random_levels, level):
        """Test representatives are eps t_i apart and every terminal has one within eps t_i"""
        levels, _, matrix = random_levels
        state = levels.state(min(level, levels.levels))
        position = {t: i for i, t in enumerate(state.terminals)}

        for component, net in zip(state.components, state.nets):
            assert set(net) <= set(component)
            reps = [position[r] for r in net]
            for a in range(len(reps)):
                for b in range(a + 1, len(reps)):
                    assert matrix[reps[a], reps[b]] >= state.net_radius
            for terminal in component:
                rep = find_representative(state, matrix, terminal)
                assert rep in net
                assert matrix[position[terminal], position[rep]] < state.net_radius

    def test_build_net_scans_in_index_order(self):
        """Test the smallest index always becomes a representative"""
        matrix = np.asarray([[0.0, 1.0, 3.0], [1.0, 0.0, 2.5], [3.0, 2.5, 0.0]])
        position = {10: 0, 11: 1, 12: 2}
        assert build_net([12, 11, 10], matrix, position, radius=2.0) == (10, 12)
        assert build_net([12, 11, 10], matrix, position, radius=0.5) == (10, 11, 12)

    def test_bfs_overflow(self, random_levels):
        """Test BFS returns the whole net under the cap and overflows past it"""
        levels, _, _ = random_levels
        state = levels.state(levels.levels)
        terminal = state.terminals[0]
        net = state.nets[state.component_of(terminal)]

        full = bfs_representatives(state, terminal, cap=len(net))
        assert not full.overflow
        assert full.representatives == net
        capped = bfs_representatives(state, terminal, cap=len(net) - 1)
        assert capped.overflow
        assert capped.count == len(net)

    def test_unknown_terminal(self, fermat_levels):
        """Test a Steiner point has no component"""
        levels, _, _ = fermat_levels
        with pytest.raises(ContractViolationError):
            levels.state(3).component_of(3)


class TestLevelSetCover:

    def test_center_covers_every_corner(self, fermat_levels):
        """Test at level 24 the center lies within tau of all three corners"""
        levels, distances, _ = fermat_levels
        state = levels.state(24)
        cover = LevelSetCover.from_state(state)
        assert cover.size == 3
        assert state.tau > 1.0 / math.sqrt(3.0)
        assert cover.members(distances, 3) == (0, 1, 2)
        assert cover.explicit_family(distances, [3]) == [(0, 1, 2)]

    def test_center_too_far_below_level_24(self, fermat_levels):
        """Test at level 23 tau is shorter than the center's distance"""
        levels, distances, _ = fermat_levels
        cover = LevelSetCover.from_state(levels.state(23))
        assert cover.members(distances, 3) == ()
        assert cover.explicit_family(distances, [3]) == []


class TestClassification:

    def test_small_levels_are_case_one(self, random_levels):
        """Test few representatives keep a level explicit"""
        levels, _, _ = random_levels
        state = levels.state(levels.levels)
        params = SteinerParams(c_m=10.0)
        assert classify_level(state, params, 60, np.random.default_rng(0)) == LevelClass.CASE1
        assert state.classification == LevelClass.CASE1

    def test_large_levels_are_light_or_heavy(self, random_levels):
        """Test a tiny M forces the sampled |U_i| test"""
        levels, _, _ = random_levels
        state = levels.state(1)
        params = SteinerParams(c_m=0.01)
        result = classify_level(state, params, 60, np.random.default_rng(0))
        assert result in (LevelClass.LIGHT, LevelClass.HEAVY)
        assert state.u_estimate is not None
        expected = LevelClass.LIGHT if state.u_estimate < params.m_threshold(60) else LevelClass.HEAVY
        assert result == expected

    def test_component_count_is_exact_on_singletons(self, fermat_levels):
        """Test with singleton components every sample weighs 1"""
        levels, _, _ = fermat_levels
        state = levels.state(10)
        estimate = sample_small_component_count(state, np.random.default_rng(3), samples=50)
        assert estimate == pytest.approx(3.0)

    def test_component_count_is_unbiased(self, random_levels):
        """Test the 1/z weighting estimates the number of small components"""
        levels, _, _ = random_levels
        state = levels.state(levels.levels // 2)
        truth = len(state.small_components)
        estimate = sample_small_component_count(state, np.random.default_rng(5), samples=40000)
        assert estimate == pytest.approx(truth, rel=0.1, abs=1.0)
