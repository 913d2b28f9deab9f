from typing import Dict, List

import numpy as np


class UnionFind:
    """Disjoint sets over 0..size-1 with path halving and union by size"""

    def __init__(self, size: int):
        self.size = size
        self.parents = list(range(size))
        self._sizes = [1] * size
        self.num_components = size

    def find(self, element: int) -> int:
        parents = self.parents
        while parents[element] != element:
            parents[element] = parents[parents[element]]
            element = parents[element]
        return element

    def union(self, a: int, b: int) -> bool:
        """Merge the sets of a and b; False if they were already joined"""
        root_a, root_b = self.find(a), self.find(b)
        if root_a == root_b:
            return False
        if self._sizes[root_a] < self._sizes[root_b]:
            root_a, root_b = root_b, root_a
        self.parents[root_b] = root_a
        self._sizes[root_a] += self._sizes[root_b]
        self.num_components -= 1
        return True

    def connected(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)

    def component_size(self, element: int) -> int:
        return self._sizes[self.find(element)]

    def labels(self) -> np.ndarray:
        """Dense component label per element, numbered by first appearance"""
        mapping: Dict[int, int] = {}
        out = np.empty(self.size, dtype=np.int64)
        for element in range(self.size):
            out[element] = mapping.setdefault(self.find(element), len(mapping))
        return out

    def components(self) -> List[List[int]]:
        groups: Dict[int, List[int]] = {}
        for element in range(self.size):
            groups.setdefault(self.find(element), []).append(element)
        return list(groups.values())
