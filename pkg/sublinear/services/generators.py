"""Seeded instance generators for set systems, metrics and explicit multigraphs"""
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
import structlog
from scipy.sparse.csgraph import shortest_path

from sublinear.core.config import settings
from sublinear.core.exceptions import ConfigurationError
from sublinear.models.instances import MetricInstance, SetSystem
from sublinear.services.exact_baselines import ExplicitMultigraph

logger = structlog.get_logger(__name__)


class SetSystemKind(str, Enum):
    UNIFORM_RANDOM = "uniform_random"
    PLANTED_COVER = "planted_cover"
    SINGLETON_HEAVY = "singleton_heavy"
    PAIRS_AND_TRIPLES = "pairs_and_triples"


class MetricKind(str, Enum):
    EUCLIDEAN = "euclidean"
    RANDOM_CLOSURE = "random_closure"


def _cover_leftovers(family: List[List[int]], k: int, rng: np.random.Generator) -> int:
    """Put every element that no set contains into a random set; returns how many moved"""
    if not family:
        return 0
    seen = np.zeros(k, dtype=bool)
    for members in family:
        seen[members] = True
    missing = np.flatnonzero(~seen)
    for e in missing:
        family[int(rng.integers(len(family)))].append(int(e))
    return int(missing.size)


def _random_sets(k: int, count: int, size: int, rng: np.random.Generator) -> List[List[int]]:
    size = max(1, min(size, k))
    return [rng.choice(k, size=size, replace=False).tolist() for _ in range(count)]


def generate_set_system(kind: str, k: int, n: int, seed: int, **options: Any) -> SetSystem:
    """Deterministic set system per (kind, k, n, seed, options)"""
    try:
        kind = SetSystemKind(kind)
    except ValueError:
        raise ConfigurationError(f"unknown set system kind: {kind}") from None
    if k < 0 or n < 0:
        raise ConfigurationError("k and n must be non-negative")
    if n == 0 and k > 0:
        raise ConfigurationError("a non-empty universe needs at least one set")

    rng = np.random.default_rng(seed)
    metadata: Dict[str, Any] = {"kind": kind.value, "k": k, "n": n, "seed": seed, **options}
    family: List[List[int]]

    if kind == SetSystemKind.UNIFORM_RANDOM:
        p = float(options.get("p", 0.01))
        if not 0.0 <= p <= 1.0:
            raise ConfigurationError(f"p must lie in [0, 1], got {p}")
        family = [np.flatnonzero(rng.random(k) < p).tolist() for _ in range(n)]
        metadata["patched_elements"] = _cover_leftovers(family, k, rng)

    elif kind == SetSystemKind.PLANTED_COVER:
        cover_size = int(options.get("cover_size", 1))
        overlap = float(options.get("overlap", 0.0))
        filler = str(options.get("filler", "random"))
        filler_size = int(options.get("filler_size", 3))
        if not 1 <= cover_size <= min(n, max(k, 1)):
            raise ConfigurationError(f"cover_size must lie in [1, min(n, k)], got {cover_size}")
        blocks = np.array_split(rng.permutation(k), cover_size)
        planted = []
        for block in blocks:
            members = set(block.tolist())
            extra = int(round(overlap * k / cover_size))
            if extra:
                members.update(rng.choice(k, size=min(extra, k), replace=False).tolist())
            planted.append(sorted(members))
        fill_count = n - cover_size
        if filler == "singletons":
            fill = [[int(e)] for e in rng.integers(0, k, size=fill_count)] if k else [[] for _ in range(fill_count)]
            if fill_count >= k:
                fill = [[e] for e in range(k)] + fill[: fill_count - k]
        else:
            fill = _random_sets(k, fill_count, filler_size, rng)
        slots = rng.permutation(n)
        family = [[] for _ in range(n)]
        for i, members in enumerate(planted):
            family[int(slots[i])] = members
        for i, members in enumerate(fill):
            family[int(slots[cover_size + i])] = members
        metadata["planted_sets"] = sorted(int(s) for s in slots[:cover_size])
        metadata["planted_cover_bound"] = cover_size

    elif kind == SetSystemKind.SINGLETON_HEAVY:
        if n < k:
            raise ConfigurationError(f"singleton_heavy needs n >= k, got n={n}, k={k}")
        extra_size = int(options.get("extra_size", 3))
        family = [[e] for e in range(k)] + _random_sets(k, n - k, extra_size, rng)

    else:
        if n < k:
            raise ConfigurationError(f"pairs_and_triples needs n >= k, got n={n}, k={k}")
        if k < 3 and n > k:
            raise ConfigurationError("pairs_and_triples needs k >= 3")
        pair_fraction = float(options.get("pair_fraction", 0.5))
        family = [[e] for e in range(k)]
        for _ in range(n - k):
            size = 2 if rng.random() < pair_fraction else 3
            family.append(rng.choice(k, size=size, replace=False).tolist())

    system = SetSystem.from_sets(k, (sorted(set(s)) for s in family), metadata)
    logger.debug("Set system generated", kind=kind.value, k=k, n=n, seed=seed)
    return system


def generate_metric(
    kind: str,
    n_pts: int,
    terminal_fraction: float = 0.5,
    seed: int = 0,
    n_terminals: Optional[int] = None,
    **options: Any,
) -> MetricInstance:
    """Deterministic metric with a terminal set; triangle inequality holds by construction"""
    try:
        kind = MetricKind(kind)
    except ValueError:
        raise ConfigurationError(f"unknown metric kind: {kind}") from None
    if n_pts < 2:
        raise ConfigurationError("a metric instance needs n_pts >= 2")
    if not 0.0 < terminal_fraction <= 1.0:
        raise ConfigurationError(f"terminal_fraction must lie in (0, 1], got {terminal_fraction}")

    rng = np.random.default_rng(seed)
    k = n_terminals if n_terminals is not None else max(1, int(round(terminal_fraction * n_pts)))
    if not 1 <= k <= n_pts:
        raise ConfigurationError(f"terminal count {k} outside [1, {n_pts}]")
    terminals = sorted(int(t) for t in rng.choice(n_pts, size=k, replace=False))
    metadata = {"kind": kind.value, "n_pts": n_pts, "k": k, "seed": seed, **options}
    decimals = settings.DISTANCE_DECIMALS

    if kind == MetricKind.EUCLIDEAN:
        dim = int(options.get("dim", 2))
        scale = float(options.get("scale", 1.0))
        coords = rng.random((n_pts, dim)) * scale
        return MetricInstance.from_coords(coords, terminals, decimals=decimals, metadata=metadata)

    low = float(options.get("min_weight", 1.0))
    high = float(options.get("max_weight", 10.0))
    weights = np.round(rng.uniform(low, high, size=(n_pts, n_pts)), decimals)
    weights = np.triu(weights, 1)
    weights = weights + weights.T
    closed = np.round(shortest_path(weights, method="auto", directed=False), decimals)
    return MetricInstance.from_matrix(closed, terminals, metadata)


def generate_multigraph(
    n_vertices: int, average_degree: float, seed: int, parallel_fraction: float = 0.2
) -> ExplicitMultigraph:
    """Random explicit multigraph with about ``average_degree`` incident edges per vertex"""
    if average_degree < 0:
        raise ConfigurationError("average_degree must be non-negative")
    n_edges = int(round(average_degree * n_vertices / 2.0))
    return ExplicitMultigraph.random(n_vertices, n_edges, seed, parallel_fraction)
