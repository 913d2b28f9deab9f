from typing import NamedTuple

from sublinear.core.exceptions import ContractViolationError


class EdgeId(NamedTuple):
    """One parallel edge of the auxiliary multigraph: elements u < v joined by set_index.

    Tuple ordering is the lexicographic tiebreak used after ranks.
    """

    u: int
    v: int
    set_index: int

    @classmethod
    def canonical(cls, a: int, b: int, set_index: int) -> "EdgeId":
        if a == b:
            raise ContractViolationError(f"self-loop ({a}, {b}) is not an edge")
        return cls(a, b, set_index) if a < b else cls(b, a, set_index)

    @property
    def is_canonical(self) -> bool:
        return self.u < self.v

    def other(self, endpoint: int) -> int:
        if endpoint == self.u:
            return self.v
        if endpoint == self.v:
            return self.u
        raise ContractViolationError(f"{endpoint} is not an endpoint of {self}")

    def touches(self, vertex: int) -> bool:
        return vertex == self.u or vertex == self.v
