"""Estimator for chi = k - SC(U, F) under membership queries.

Sparse regime: sparsify sets, sparsify elements, estimate the random greedy
maximal matching of the auxiliary multigraph over the low elements, and report

    chi~ = clamp(mu~ + |U \\ U_low| - eps k / 2, 0, k)

which satisfies chi / 2 - eps k <= chi~ <= chi with high probability. When
k <= n^(2/3) every membership is read and the value comes from the explicit
instance instead.
"""
import asyncio
import threading
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import structlog

from sublinear.core.config import settings
from sublinear.core.exceptions import ConfigurationError, RunCancelledError
from sublinear.models.instances import SetSystem
from sublinear.schemas.common import EstimateBranch
from sublinear.schemas.params import SetCoverParams
from sublinear.schemas.reports import EstimateReport
from sublinear.services.exact_baselines import exact_set_cover, greedy_matching_size
from sublinear.services.oracles import MembershipOracle, QueryLedger
from sublinear.services.rgmm_local import RGMM_PHASE, ImplicitMultigraph, estimate_rgmm_size
from sublinear.services.sparsify import sparsify_elements, sparsify_sets
from sublinear.utils.random_order import derive_seeds

logger = structlog.get_logger(__name__)

DENSE_SCAN_PHASE = "dense_scan"


@dataclass(frozen=True)
class ExplicitThsc:
    """chi of an explicit instance: exact, or a greedy maximal matching size |M| with chi in [|M|, 2|M|]"""

    value: float
    exact: bool
    matching_size: Optional[int] = None


def thsc_from_explicit(system: SetSystem, exclude_pairs: bool = False, seed: int = 0) -> ExplicitThsc:
    """chi = k - SC for a fully known instance.

    Singletons are added first, which leaves SC unchanged on coverable inputs and
    defines it otherwise. Sets of size exactly two are dropped when
    ``exclude_pairs`` is set.
    """
    k = system.universe_size
    if k == 0:
        return ExplicitThsc(0.0, True)
    padded = system.padded_with_singletons()

    if k <= settings.EXACT_SET_COVER_MAX_K:
        cover = exact_set_cover(padded, restrict_no_pairs=exclude_pairs)
        return ExplicitThsc(float(cover.chi), True)

    codes = set()
    for members in system.family:
        if len(members) < 2 or (exclude_pairs and len(members) == 2):
            continue
        array = np.asarray(members, dtype=np.int64)
        upper, lower = np.triu_indices(array.size, k=1)
        codes.update((array[upper] * k + array[lower]).tolist())

    if not codes:
        return ExplicitThsc(0.0, False, 0)
    pairs = np.asarray(sorted(codes), dtype=np.int64)
    endpoints = np.stack([pairs // k, pairs % k], axis=1)
    order = np.random.default_rng(seed).permutation(len(endpoints))
    size = greedy_matching_size(endpoints, order)
    return ExplicitThsc(float(size), False, size)


def _clamp(value: float, upper: float) -> float:
    return float(min(max(value, 0.0), upper))


def _estimate(oracle: MembershipOracle, params: SetCoverParams, variant: str) -> EstimateReport:
    padded = oracle.with_singleton_padding()
    ledger = padded.ledger
    n, k = padded.n_sets, padded.universe_size
    eps = params.epsilon
    sets_seed, elements_seed, graph_seed, rgmm_seed, dense_seed = derive_seeds(params.seed, 5)
    log = logger.bind(variant=variant, n=n, k=k, seed=params.seed)

    if k == 0 or k <= n ** (2.0 / 3.0):
        with ledger.phase(DENSE_SCAN_PHASE):
            everyone = np.arange(k, dtype=np.int64)
            family = [everyone[padded.query_elements(everyone, s)] for s in range(n)]
        explicit = thsc_from_explicit(
            SetSystem.from_sets(k, (f.tolist() for f in family)),
            exclude_pairs=params.exclude_size_two,
            seed=dense_seed,
        )
        log.info("Dense branch finished", value=explicit.value, exact=explicit.exact)
        return EstimateReport(
            estimate=_clamp(explicit.value, k),
            raw_estimate=explicit.value,
            low_size=k,
            k=k,
            n=n,
            branch=EstimateBranch.DENSE,
            variant=variant,
            ledger=ledger.snapshot(),
            params=params,
            seed=params.seed,
        )

    alpha = params.alpha(n)
    beta = params.beta(n, k)
    sparse_sets = sparsify_sets(padded, alpha, sets_seed)
    partition = sparsify_elements(
        padded, sparse_sets.surviving_sets, sparse_sets.surviving_elements, beta, eps, elements_seed
    )
    graph = ImplicitMultigraph(
        padded,
        sparse_sets.surviving_sets,
        partition.low,
        exclude_size_two=params.exclude_size_two,
        seed=graph_seed,
    )
    with ledger.phase(RGMM_PHASE):
        rgmm = estimate_rgmm_size(graph, eps, rgmm_seed, universe_size=k)

    outside_low = k - len(partition.low)
    raw = rgmm.mu_tilde + outside_low - eps * k / 2.0
    estimate = _clamp(raw, k)
    log.info(
        "Sparse branch finished",
        removed_sets=sparse_sets.removed_count,
        low=len(partition.low),
        high=len(partition.high),
        mu_tilde=round(rgmm.mu_tilde, 3),
        estimate=round(estimate, 3),
        membership_queries=ledger.membership_queries,
    )
    return EstimateReport(
        estimate=estimate,
        raw_estimate=raw,
        mu_tilde=rgmm.mu_tilde,
        outside_low=outside_low,
        removed_sets=sparse_sets.removed_count,
        low_size=len(partition.low),
        high_size=len(partition.high),
        k=k,
        n=n,
        alpha=alpha,
        beta=beta,
        rgmm_samples=rgmm.samples,
        branch=EstimateBranch.SPARSE,
        variant=variant,
        ledger=ledger.snapshot(),
        params=params,
        seed=params.seed,
    )


def estimate_thsc(oracle: MembershipOracle, params: Optional[SetCoverParams] = None) -> EstimateReport:
    """(1/2, eps k)-estimate of k - SC(U, F)"""
    params = params or SetCoverParams()
    if params.exclude_size_two:
        raise ConfigurationError("use estimate_thsc_no_pairs for the sizes-not-two variant")
    if params.racing_runs > 1:
        return asyncio.run(race_estimates(oracle, params, params.racing_runs))
    return _estimate(oracle, params, "thsc")


def estimate_thsc_no_pairs(oracle: MembershipOracle, params: Optional[SetCoverParams] = None) -> EstimateReport:
    """(1/2, eps k)-estimate of k - SC(U, F without sets of size two)"""
    params = (params or SetCoverParams()).model_copy(update={"exclude_size_two": True})
    if params.racing_runs > 1:
        return asyncio.run(race_estimates(oracle, params, params.racing_runs))
    return _estimate(oracle, params, "thsc_no_pairs")


def _race_entry(oracle: MembershipOracle, params: SetCoverParams) -> EstimateReport:
    variant = "thsc_no_pairs" if params.exclude_size_two else "thsc"
    return _estimate(oracle, params, variant)


async def race_estimates(
    oracle: MembershipOracle, params: SetCoverParams, runs: int
) -> EstimateReport:
    """Run ``runs`` independently seeded estimates and keep the first to finish.

    Losers stop at their next oracle call. Each run charges a forked ledger; the
    report carries the winner's ledger.
    """
    if runs < 1:
        raise ConfigurationError("racing needs at least one run")
    loop = asyncio.get_running_loop()
    cancel = threading.Event()
    seeds = derive_seeds(params.seed, runs)

    with ThreadPoolExecutor(max_workers=runs, thread_name_prefix="race") as pool:
        pending = {
            loop.run_in_executor(
                pool,
                _race_entry,
                oracle.fork(QueryLedger(cancel_event=cancel)),
                params.model_copy(update={"seed": seed, "racing_runs": 0}),
            )
            for seed in seeds
        }
        winner: Optional[EstimateReport] = None
        failures: List[BaseException] = []
        while pending and winner is None:
            done, pending = await asyncio.wait(pending, return_when=FIRST_COMPLETED)
            for future in done:
                error = future.exception()
                if error is None and winner is None:
                    winner = future.result()
                elif error is not None:
                    failures.append(error)
        cancel.set()
        if pending:
            await asyncio.gather(*pending, return_exceptions=True)

    if winner is None:
        raise failures[0] if failures else RunCancelledError("no racing run finished")
    logger.info("Racing finished", runs=runs, winner_seed=winner.seed, failed=len(failures))
    return winner.model_copy(update={"racing_runs": runs})
