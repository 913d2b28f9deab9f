import networkx as nx
from hypothesis import given, settings as hyp_settings, strategies as st

from sublinear.utils.union_find import UnionFind

edge_lists = st.integers(min_value=1, max_value=30).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=60),
    )
)


class TestUnionFind:

    def test_union_reports_merges(self):
        """Test union returns False for already joined elements"""
        uf = UnionFind(4)
        assert uf.union(0, 1)
        assert uf.union(2, 3)
        assert not uf.union(1, 0)
        assert uf.union(1, 3)
        assert uf.num_components == 1
        assert uf.component_size(2) == 4

    def test_labels_are_dense_and_ordered(self):
        """Test labels number components by first appearance"""
        uf = UnionFind(5)
        uf.union(3, 4)
        uf.union(1, 4)
        assert uf.labels().tolist() == [0, 1, 2, 1, 1]

    @hyp_settings(max_examples=200, deadline=None)
    @given(edge_lists)
    def test_matches_networkx_components(self, instance):
        """Test components agree with networkx on random edge lists"""
        n, edges = instance
        uf = UnionFind(n)
        graph = nx.Graph()
        graph.add_nodes_from(range(n))
        for a, b in edges:
            uf.union(a, b)
            graph.add_edge(a, b)

        expected = {frozenset(c) for c in nx.connected_components(graph)}
        assert {frozenset(c) for c in uf.components()} == expected
        assert uf.num_components == len(expected)
        for a, b in edges:
            assert uf.connected(a, b)
