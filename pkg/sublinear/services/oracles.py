import threading
from contextlib import contextmanager
from enum import Enum
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from sublinear.core.exceptions import ContractViolationError, RunCancelledError
from sublinear.models.instances import MetricInstance, SetSystem
from sublinear.schemas.reports import LedgerSnapshot

logger = structlog.get_logger(__name__)

UNSCOPED_PHASE = "unscoped"


class QueryCategory(str, Enum):
    MEMBERSHIP = "membership"
    DISTANCE = "distance"


class QueryLedger:
    """Exact per-category count of oracle calls for one estimation run.

    Counts are attributed to the innermost open phase (or "unscoped"), so the
    per-phase counts always sum to the totals. A ledger belongs to one run; the
    lock only makes increments atomic for the racing workers that poll it.
    """

    def __init__(self, cancel_event: Optional[threading.Event] = None):
        self._lock = threading.Lock()
        self._totals: Dict[QueryCategory, int] = {c: 0 for c in QueryCategory}
        self._phases: Dict[str, Dict[QueryCategory, int]] = {}
        self._phase_stack: List[str] = []
        self.cancel_event = cancel_event

    @property
    def membership_queries(self) -> int:
        return self._totals[QueryCategory.MEMBERSHIP]

    @property
    def distance_queries(self) -> int:
        return self._totals[QueryCategory.DISTANCE]

    @property
    def current_phase(self) -> str:
        return self._phase_stack[-1] if self._phase_stack else UNSCOPED_PHASE

    def charge(self, category: QueryCategory, count: int = 1) -> None:
        if count < 0:
            raise ContractViolationError("query counts cannot decrease")
        if self.cancel_event is not None and self.cancel_event.is_set():
            raise RunCancelledError("run cancelled between oracle calls")
        with self._lock:
            self._totals[category] += count
            bucket = self._phases.setdefault(self.current_phase, {c: 0 for c in QueryCategory})
            bucket[category] += count

    @contextmanager
    def phase(self, label: str) -> Iterator["QueryLedger"]:
        self._phase_stack.append(label)
        before = dict(self._totals)
        try:
            yield self
        finally:
            self._phase_stack.pop()
            logger.debug(
                "Phase finished",
                phase=label,
                membership=self._totals[QueryCategory.MEMBERSHIP] - before[QueryCategory.MEMBERSHIP],
                distance=self._totals[QueryCategory.DISTANCE] - before[QueryCategory.DISTANCE],
            )

    def phase_counts(self) -> Dict[str, Dict[str, int]]:
        with self._lock:
            return {
                label: {c.value: n for c, n in counts.items()}
                for label, counts in self._phases.items()
            }

    def snapshot(self) -> LedgerSnapshot:
        return LedgerSnapshot(
            membership_queries=self.membership_queries,
            distance_queries=self.distance_queries,
            phases=self.phase_counts(),
        )


class MembershipOracle:
    """The only read path to a SetSystem: "is element e in set s?", one charge per pair."""

    def __init__(self, system: SetSystem, ledger: Optional[QueryLedger] = None):
        self._system = system
        self.ledger = ledger if ledger is not None else QueryLedger()

    @property
    def universe_size(self) -> int:
        return self._system.universe_size

    @property
    def n_sets(self) -> int:
        return self._system.n

    def _check_element(self, element: int) -> None:
        if not 0 <= element < self._system.universe_size:
            raise ContractViolationError(
                f"element {element} outside [0, {self._system.universe_size})"
            )

    def _check_set(self, set_index: int) -> None:
        if not 0 <= set_index < self._system.n:
            raise ContractViolationError(f"set {set_index} outside [0, {self._system.n})")

    def query(self, element: int, set_index: int) -> bool:
        self._check_element(element)
        self._check_set(set_index)
        self.ledger.charge(QueryCategory.MEMBERSHIP)
        return self._system.contains(element, set_index)

    def query_elements(self, elements: Sequence[int], set_index: int) -> np.ndarray:
        """Membership of many elements in one set; charges len(elements)"""
        array = np.asarray(elements, dtype=np.int64)
        self._check_set(set_index)
        if array.size:
            self._check_element(int(array.min()))
            self._check_element(int(array.max()))
        self.ledger.charge(QueryCategory.MEMBERSHIP, int(array.size))
        return self._system.membership_mask(array, set_index)

    def query_sets(self, element: int, set_indices: Sequence[int]) -> np.ndarray:
        """Membership of one element in many sets; charges len(set_indices)"""
        self._check_element(element)
        indices = [int(s) for s in set_indices]
        for s in indices:
            self._check_set(s)
        self.ledger.charge(QueryCategory.MEMBERSHIP, len(indices))
        return np.fromiter(
            (self._system.contains(element, s) for s in indices), dtype=bool, count=len(indices)
        )

    def fork(self, ledger: Optional[QueryLedger] = None) -> "MembershipOracle":
        """Same instance, separate ledger (independent or racing runs)"""
        return MembershipOracle(self._system, ledger if ledger is not None else QueryLedger())

    def with_singleton_padding(self) -> "MembershipOracle":
        """n >= k view: appends {e} for every element; padding itself charges nothing"""
        if self._system.n >= self._system.universe_size:
            return self
        logger.info(
            "Padding family with singletons",
            n=self._system.n,
            k=self._system.universe_size,
        )
        return MembershipOracle(self._system.padded_with_singletons(), self.ledger)


class DistanceOracle:
    """Counted access to a MetricInstance: w(u, v) at one charge per pair."""

    def __init__(self, metric: MetricInstance, ledger: Optional[QueryLedger] = None):
        self._metric = metric
        self.ledger = ledger if ledger is not None else QueryLedger()

    @property
    def n_points(self) -> int:
        return self._metric.n_points

    @property
    def terminals(self) -> Tuple[int, ...]:
        return self._metric.terminals

    @property
    def steiner_points(self) -> Tuple[int, ...]:
        return self._metric.steiner_points

    def is_terminal(self, point: int) -> bool:
        return self._metric.is_terminal(point)

    def _check_point(self, point: int) -> None:
        if not 0 <= point < self._metric.n_points:
            raise ContractViolationError(f"point {point} outside [0, {self._metric.n_points})")

    def query(self, u: int, v: int) -> float:
        self._check_point(u)
        self._check_point(v)
        self.ledger.charge(QueryCategory.DISTANCE)
        return self._metric.distance(u, v)

    def query_row(self, u: int, targets: Sequence[int]) -> np.ndarray:
        """w(u, t) for every target; charges len(targets)"""
        self._check_point(u)
        idx = np.asarray(targets, dtype=np.int64)
        if idx.size:
            self._check_point(int(idx.min()))
            self._check_point(int(idx.max()))
        self.ledger.charge(QueryCategory.DISTANCE, int(idx.size))
        return self._metric.distance_row(u, idx)

    def fork(self, ledger: Optional[QueryLedger] = None) -> "DistanceOracle":
        return DistanceOracle(self._metric, ledger if ledger is not None else QueryLedger())


class MemoizedDistances:
    """Point-to-terminal distances of one run over a DistanceOracle.

    Every (point, terminal) pair is charged at most once; later reads reuse the
    stored value. Terminal-terminal reads fill both directions.
    """

    def __init__(self, oracle: DistanceOracle):
        self.oracle = oracle
        self.terminals = np.asarray(oracle.terminals, dtype=np.int64)
        self._position = {int(t): i for i, t in enumerate(self.terminals)}
        self._cache = np.full((oracle.n_points, self.terminals.size), np.nan)
        self._cache[self.terminals, np.arange(self.terminals.size)] = 0.0

    @property
    def k(self) -> int:
        return int(self.terminals.size)

    def position(self, terminal: int) -> int:
        try:
            return self._position[terminal]
        except KeyError:
            raise ContractViolationError(f"{terminal} is not a terminal") from None

    def to_terminals(self, point: int, positions: Optional[Sequence[int]] = None) -> np.ndarray:
        """w(point, T[p]) for every terminal position p (all terminals by default)"""
        columns = (
            np.arange(self.terminals.size)
            if positions is None
            else np.asarray(positions, dtype=np.int64)
        )
        row = self._cache[point, columns]
        missing = np.isnan(row)
        if missing.any():
            fetch = np.unique(columns[missing])
            values = self.oracle.query_row(point, self.terminals[fetch])
            self._cache[point, fetch] = values
            own = self._position.get(point)
            if own is not None:
                self._cache[self.terminals[fetch], own] = values
            row = self._cache[point, columns]
        return row

    def terminal_matrix(self) -> np.ndarray:
        """k x k terminal distances; k(k-1)/2 charged queries on a cold cache"""
        for i, terminal in enumerate(self.terminals):
            self.to_terminals(int(terminal), np.arange(i + 1, self.terminals.size))
        return self._cache[self.terminals, :].copy()
