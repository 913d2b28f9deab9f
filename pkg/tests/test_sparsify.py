import math

import numpy as np
import pytest

from sublinear.core.exceptions import ConfigurationError
from sublinear.models.instances import SetSystem
from sublinear.services.oracles import MembershipOracle
from sublinear.services.sparsify import (
    SPARSIFY_ELEMENTS_PHASE,
    SPARSIFY_SETS_PHASE,
    ElementPartition,
    claimed_cover_of_high,
    sparsify_elements,
    sparsify_sets,
)


@pytest.fixture
def full_set_system():
    """Set 0 is the whole universe, the rest are singletons"""
    k = 2000
    return SetSystem.from_sets(k, [list(range(k))] + [[e] for e in range(49)])


@pytest.fixture
def heavy_element_system():
    """Element 0 lies in every set; each set adds one random partner"""
    k, n = 30000, 5000
    rng = np.random.default_rng(17)
    partners = rng.integers(1, k, size=n)
    return SetSystem.from_sets(k, [[0, int(p)] for p in partners])


class TestSparsifySets:

    def test_alpha_below_one(self, three_set_oracle):
        """Test alpha < 1 is rejected"""
        with pytest.raises(ConfigurationError):
            sparsify_sets(three_set_oracle, 0.5, seed=0)

    def test_small_universe_stops_immediately(self, three_set_oracle):
        """Test a universe below 10 alpha ln n keeps every set without queries"""
        result = sparsify_sets(three_set_oracle, 1.0, seed=0)
        assert result.stopped_early
        assert result.surviving_sets == (0, 1, 2)
        assert result.surviving_elements == (0, 1, 2, 3, 4)
        assert result.c == 0
        assert three_set_oracle.ledger.membership_queries == 0

    def test_large_set_is_removed(self, full_set_system):
        """Test a set covering the universe is removed with all its elements"""
        oracle = MembershipOracle(full_set_system)
        alpha = 2.0
        result = sparsify_sets(oracle, alpha, seed=3)

        assert result.removed_count == 1
        removal = result.removals[0]
        assert removal.set_index == 0
        assert removal.removed_elements == tuple(range(2000))
        assert removal.universe_before == 2000
        assert removal.sampled_hits >= 10 * math.log(full_set_system.n)
        assert result.surviving_elements == ()
        assert result.surviving_sets == tuple(range(1, full_set_system.n))
        assert result.stopped_early

        r1 = math.ceil(2000 / alpha)
        spent = oracle.ledger.phase_counts()[SPARSIFY_SETS_PHASE]["membership"]
        assert spent == r1 + 2000

    def test_small_sets_survive(self):
        """Test singletons over a large universe are never removed"""
        system = SetSystem.from_sets(2000, [[e] for e in range(0, 2000, 40)])
        result = sparsify_sets(MembershipOracle(system), 2.0, seed=1)
        assert result.removed_count == 0
        assert result.surviving_sets == tuple(range(system.n))
        assert len(result.surviving_elements) == 2000

    def test_removed_sets_are_large_in_the_live_universe(self):
        """Test every removed set held at least alpha live elements when dropped"""
        rng = np.random.default_rng(4)
        k = 3000
        sets = [rng.choice(k, size=int(rng.integers(1, 800)), replace=False).tolist() for _ in range(60)]
        system = SetSystem.from_sets(k, sets)
        alpha = 3.0
        result = sparsify_sets(MembershipOracle(system), alpha, seed=9)

        alive = np.ones(k, dtype=bool)
        for removal in result.removals:
            members = system.set_array(removal.set_index)
            live = members[alive[members]]
            assert live.size >= alpha
            assert tuple(int(e) for e in live) == removal.removed_elements
            alive[live] = False
        assert tuple(np.flatnonzero(alive).tolist()) == result.surviving_elements
        assert result.removed_count <= k / alpha


class TestSparsifyElements:

    def test_parameter_ranges(self, three_set_oracle):
        """Test beta < 1 and epsilon outside (0, 1) are rejected"""
        with pytest.raises(ConfigurationError):
            sparsify_elements(three_set_oracle, [0], [0, 1], 0.5, 0.1, seed=0)
        with pytest.raises(ConfigurationError):
            sparsify_elements(three_set_oracle, [0], [0, 1], 2.0, 1.5, seed=0)

    def test_few_samples_keep_everything_low(self, three_set_oracle):
        """Test r2 below the threshold returns every element as low"""
        partition = sparsify_elements(three_set_oracle, [0, 1, 2], [4, 0, 2], 1.0, 0.1, seed=0)
        assert partition.early_return
        assert partition.low == (0, 2, 4)
        assert partition.high == ()
        assert three_set_oracle.ledger.membership_queries == 0

    def test_no_surviving_sets(self, heavy_element_system):
        """Test an empty family leaves every element low"""
        oracle = MembershipOracle(heavy_element_system)
        partition = sparsify_elements(oracle, [], range(30000), 1.0, 0.1, seed=0)
        assert partition.early_return
        assert len(partition.low) == 30000

    def test_heavy_element_is_high(self, heavy_element_system):
        """Test an element inside every set is classified high and random partners stay low"""
        n, k = heavy_element_system.n, heavy_element_system.universe_size
        beta = n ** (1.0 / 3.0)
        oracle = MembershipOracle(heavy_element_system)
        partition = sparsify_elements(oracle, range(n), range(k), beta, 0.1, seed=2)

        r2 = math.ceil(k / beta)
        assert r2 >= partition.threshold
        assert not partition.early_return
        assert partition.high == (0,)
        assert len(partition.low) == k - 1
        assert partition.hit_counts[0] == r2
        assert len(partition.sampled_sets) == r2
        spent = oracle.ledger.phase_counts()[SPARSIFY_ELEMENTS_PHASE]["membership"]
        assert spent == r2 * k


class TestClaimedCover:

    def test_size_and_membership(self):
        """Test the claimed cover draws ceil(eps k / 5) distinct surviving sets"""
        partition = ElementPartition(low=(1, 2), high=(0,))
        chosen = claimed_cover_of_high(partition, list(range(10, 60)), 100, 0.1, np.random.default_rng(0))
        assert len(chosen) == 2
        assert len(set(chosen)) == 2
        assert all(10 <= s < 60 for s in chosen)

    def test_capped_by_family(self):
        """Test the cover never asks for more sets than survive"""
        partition = ElementPartition(low=(), high=(0,))
        assert len(claimed_cover_of_high(partition, [3], 1000, 0.5)) == 1
        assert claimed_cover_of_high(partition, [], 1000, 0.5) == ()
