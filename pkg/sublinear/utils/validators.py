from typing import Iterable, Optional, Sequence, Tuple
import logging

import numpy as np

from sublinear.core.config import settings
from sublinear.core.exceptions import InstanceValidationError

logger = logging.getLogger(__name__)

class InstanceValidator:
    """Invariant checks shared by the instance containers and the file loader"""

    @staticmethod
    def normalize_family(universe_size: int, sets: Iterable[Iterable[int]]) -> Tuple[Tuple[int, ...], ...]:
        """Sort every set and reject out-of-range or duplicate elements"""
        if universe_size < 0:
            raise InstanceValidationError(f"universe size must be non-negative, got {universe_size}")

        normalized = []
        for index, members in enumerate(sets):
            ordered = sorted(int(e) for e in members)
            for e in ordered:
                if not 0 <= e < universe_size:
                    raise InstanceValidationError(
                        f"set {index} holds element {e} outside [0, {universe_size})"
                    )
            if any(a == b for a, b in zip(ordered, ordered[1:])):
                raise InstanceValidationError(f"set {index} holds a duplicate element")
            normalized.append(tuple(ordered))
        return tuple(normalized)

    @staticmethod
    def validate_terminals(n_points: int, terminals: Sequence[int]) -> Tuple[int, ...]:
        ordered = sorted(int(t) for t in terminals)
        if not ordered:
            raise InstanceValidationError("terminal set must not be empty")
        if ordered[0] < 0 or ordered[-1] >= n_points:
            raise InstanceValidationError(f"terminal index outside [0, {n_points})")
        if len(set(ordered)) != len(ordered):
            raise InstanceValidationError("terminal set holds duplicates")
        return tuple(ordered)

    @staticmethod
    def validate_distance_matrix(matrix: np.ndarray, check_triangle: Optional[bool] = None) -> None:
        """Symmetry, zero diagonal, non-negativity and (up to a size limit) the triangle inequality"""
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise InstanceValidationError(f"distance matrix must be square, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise InstanceValidationError("distance matrix holds non-finite values")
        if np.any(matrix < 0):
            raise InstanceValidationError("distance matrix holds negative values")
        if np.any(np.diag(matrix) != 0):
            raise InstanceValidationError("distance matrix diagonal must be zero")
        if not np.array_equal(matrix, matrix.T):
            raise InstanceValidationError("distance matrix must be symmetric")

        n_points = matrix.shape[0]
        if check_triangle is None:
            check_triangle = n_points <= settings.TRIANGLE_CHECK_MAX_POINTS
        if not check_triangle:
            logger.info(f"Skipping triangle check for {n_points} points")
            return

        violation = InstanceValidator.find_triangle_violation(matrix)
        if violation is not None:
            u, v, z = violation
            raise InstanceValidationError(
                f"triangle inequality fails: w({u},{v})={matrix[u, v]} > "
                f"w({u},{z})+w({z},{v})={matrix[u, z] + matrix[z, v]}"
            )

    @staticmethod
    def find_triangle_violation(matrix: np.ndarray) -> Optional[Tuple[int, int, int]]:
        """Exhaustive O(n^3) check, one vectorized pass per intermediate point"""
        scale = max(float(matrix.max(initial=0.0)), 1.0)
        tolerance = settings.TRIANGLE_TOLERANCE * scale
        for z in range(matrix.shape[0]):
            through_z = matrix[:, z][:, None] + matrix[z, :][None, :]
            bad = matrix > through_z + tolerance
            if bad.any():
                u, v = np.argwhere(bad)[0]
                return int(u), int(v), z
        return None
