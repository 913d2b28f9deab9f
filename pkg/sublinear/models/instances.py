from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from sublinear.core.config import settings
from sublinear.core.exceptions import InstanceValidationError
from sublinear.utils.validators import InstanceValidator


@dataclass(frozen=True, eq=False)
class SetSystem:
    """Ground-truth set system: universe 0..k-1 and a family of n sorted sets.

    Immutable after construction and safe to share between threads. Estimators
    never see this object; they read it through a MembershipOracle.
    """

    universe_size: int
    family: Tuple[Tuple[int, ...], ...]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        family = InstanceValidator.normalize_family(self.universe_size, self.family)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "_members", tuple(frozenset(s) for s in family))
        object.__setattr__(
            self, "_arrays", tuple(np.asarray(s, dtype=np.int64) for s in family)
        )

    @classmethod
    def from_sets(
        cls, universe_size: int, sets: Iterable[Iterable[int]], metadata: Optional[Dict[str, Any]] = None
    ) -> "SetSystem":
        return cls(universe_size, tuple(tuple(s) for s in sets), dict(metadata or {}))

    @property
    def k(self) -> int:
        return self.universe_size

    @property
    def n(self) -> int:
        return len(self.family)

    def contains(self, element: int, set_index: int) -> bool:
        return element in self._members[set_index]  # type: ignore[attr-defined]

    def set_size(self, set_index: int) -> int:
        return len(self.family[set_index])

    def set_array(self, set_index: int) -> np.ndarray:
        return self._arrays[set_index]  # type: ignore[attr-defined]

    def membership_mask(self, elements: np.ndarray, set_index: int) -> np.ndarray:
        return np.isin(elements, self.set_array(set_index), assume_unique=False)

    def element_degrees(self) -> np.ndarray:
        degrees = np.zeros(self.universe_size, dtype=np.int64)
        for members in self._arrays:  # type: ignore[attr-defined]
            degrees[members] += 1
        return degrees

    def is_coverable(self) -> bool:
        return bool(np.all(self.element_degrees() > 0))

    def padded_with_singletons(self) -> "SetSystem":
        """Append one singleton per element; set cover value is unchanged on coverable inputs"""
        singletons = tuple((e,) for e in range(self.universe_size))
        metadata = dict(self.metadata, padded_singletons=self.universe_size)
        return SetSystem(self.universe_size, self.family + singletons, metadata)

    def without_pairs(self) -> "SetSystem":
        """The family F restricted to sets whose size is not exactly 2"""
        kept = tuple(s for s in self.family if len(s) != 2)
        return SetSystem(self.universe_size, kept, dict(self.metadata, pairs_removed=True))

    def restricted(self, set_indices: Sequence[int], elements: Sequence[int]) -> "SetSystem":
        """Sub-instance (elements, {S ∩ elements}) re-indexed densely; used by exact checks"""
        position = {e: i for i, e in enumerate(sorted(elements))}
        sets = []
        for s in set_indices:
            sets.append(tuple(position[e] for e in self.family[s] if e in position))
        return SetSystem(len(position), tuple(sets), {"restricted_from": self.metadata.get("name")})


def _euclidean_rows(origin: np.ndarray, targets: np.ndarray) -> np.ndarray:
    # single code path for scalar and batched reads keeps values bit-identical
    diff = targets - origin[None, :]
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


@dataclass(frozen=True, eq=False)
class MetricInstance:
    """Points 0..n-1 with a metric w and a terminal set T.

    Either a full distance matrix or coordinates (Euclidean, evaluated lazily) back
    the distances. Immutable after construction.
    """

    n_points: int
    terminals: Tuple[int, ...]
    matrix: Optional[np.ndarray] = None
    coords: Optional[np.ndarray] = None
    metadata: Dict[str, Any] = field(default_factory=dict)
    check_triangle: Optional[bool] = None

    def __post_init__(self) -> None:
        if self.n_points < 1:
            raise InstanceValidationError("a metric instance needs at least one point")
        if (self.matrix is None) == (self.coords is None):
            raise InstanceValidationError("provide exactly one of a distance matrix or coordinates")

        terminals = InstanceValidator.validate_terminals(self.n_points, self.terminals)
        object.__setattr__(self, "terminals", terminals)
        object.__setattr__(self, "_terminal_set", frozenset(terminals))

        if self.matrix is not None:
            matrix = np.array(self.matrix, dtype=np.float64)
            if matrix.shape != (self.n_points, self.n_points):
                raise InstanceValidationError(
                    f"matrix shape {matrix.shape} does not match n_points={self.n_points}"
                )
            InstanceValidator.validate_distance_matrix(matrix, self.check_triangle)
            matrix.setflags(write=False)
            object.__setattr__(self, "matrix", matrix)
        else:
            coords = np.array(self.coords, dtype=np.float64)
            if coords.ndim != 2 or coords.shape[0] != self.n_points:
                raise InstanceValidationError(
                    f"coords shape {coords.shape} does not match n_points={self.n_points}"
                )
            if not np.all(np.isfinite(coords)):
                raise InstanceValidationError("coordinates must be finite")
            coords.setflags(write=False)
            object.__setattr__(self, "coords", coords)

    @classmethod
    def from_coords(
        cls,
        coords: Any,
        terminals: Sequence[int],
        decimals: Optional[int] = None,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> "MetricInstance":
        decimals = settings.DISTANCE_DECIMALS if decimals is None else decimals
        rounded = np.round(np.asarray(coords, dtype=np.float64), decimals)
        return cls(len(rounded), tuple(terminals), coords=rounded, metadata=dict(metadata or {}))

    @classmethod
    def from_matrix(
        cls, matrix: Any, terminals: Sequence[int], metadata: Optional[Dict[str, Any]] = None
    ) -> "MetricInstance":
        array = np.asarray(matrix, dtype=np.float64)
        return cls(len(array), tuple(terminals), matrix=array, metadata=dict(metadata or {}))

    @property
    def k(self) -> int:
        return len(self.terminals)

    @property
    def steiner_points(self) -> Tuple[int, ...]:
        return tuple(p for p in range(self.n_points) if p not in self._terminal_set)  # type: ignore[attr-defined]

    def is_terminal(self, point: int) -> bool:
        return point in self._terminal_set  # type: ignore[attr-defined]

    def distance(self, u: int, v: int) -> float:
        if self.matrix is not None:
            return float(self.matrix[u, v])
        assert self.coords is not None
        return float(_euclidean_rows(self.coords[u], self.coords[[v]])[0])

    def distance_row(self, u: int, targets: Sequence[int]) -> np.ndarray:
        idx = np.asarray(targets, dtype=np.int64)
        if self.matrix is not None:
            return self.matrix[u, idx].astype(np.float64, copy=True)
        assert self.coords is not None
        return _euclidean_rows(self.coords[u], self.coords[idx])

    def full_matrix(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix
        everyone = np.arange(self.n_points)
        return np.vstack([self.distance_row(u, everyone) for u in range(self.n_points)])

    def submetric(self, points: Sequence[int]) -> np.ndarray:
        idx = np.asarray(points, dtype=np.int64)
        return np.vstack([self.distance_row(int(u), idx) for u in idx]) if len(idx) else np.zeros((0, 0))
