"""Experiment runner: expands an ExperimentSpec into (instance, seed) runs,
executes them in a process pool, and writes one JSON report per run plus an
aggregate CSV and a summary with the acceptance verdict.

A run that raises is recorded as an ``error`` row and the sweep continues.
"""
import asyncio
import math
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import structlog
from pydantic import ValidationError

from sublinear.core.config import settings
from sublinear.core.exceptions import DegenerateDataError, ExperimentError, SublinearError
from sublinear.models.edges import EdgeId
from sublinear.models.instances import MetricInstance, SetSystem
from sublinear.schemas.common import parse_schema
from sublinear.schemas.experiment import (
    AcceptanceSpec,
    ExperimentSpec,
    ExperimentSummary,
    ExponentFit,
    InstanceSource,
    TaskKind,
)
from sublinear.schemas.params import SetCoverParams, SteinerParams
from sublinear.services.exact_baselines import (
    ExplicitMultigraph,
    dreyfus_wagner,
    exact_steiner,
    matched_vertices,
    mc_rgmm_expectation,
    offline_greedy_matching,
)
from sublinear.services.exponent_fit import fit_exponent
from sublinear.services.generators import generate_metric, generate_multigraph, generate_set_system
from sublinear.services.oracles import DistanceOracle, MembershipOracle
from sublinear.services.ranking import RankFunction
from sublinear.services.rgmm_local import (
    LocalMatchingOracle,
    estimate_rgmm_size,
    measure_query_costs,
)
from sublinear.services.setcover_estimator import (
    estimate_thsc,
    estimate_thsc_no_pairs,
    thsc_from_explicit,
)
from sublinear.services.sparsify import (
    SPARSIFY_ELEMENTS_PHASE,
    SPARSIFY_SETS_PHASE,
    claimed_cover_of_high,
    sparsify_elements,
    sparsify_sets,
)
from sublinear.services.steiner_estimator import estimate_steiner
from sublinear.utils.file_utils import FileManager
from sublinear.utils.random_order import derive_seeds

logger = structlog.get_logger(__name__)

BASE_COLUMNS = [
    "n",
    "k",
    "seed",
    "estimate",
    "exact_or_bound",
    "queries_membership",
    "queries_distance",
    "wall_ms",
]
RUN_COLUMNS = ["instance", "task", "status", "passed", "error"]

GRAPH_TASKS = (TaskKind.RGMM, TaskKind.ORACLE_EQUIV)
RANDOM_MULTIGRAPH = "random_multigraph"
EXPLICIT_MULTIGRAPH = "explicit_multigraph"

Instance = Union[SetSystem, MetricInstance, ExplicitMultigraph]


@dataclass(frozen=True)
class RunTask:
    """One (instance, seed) cell of a sweep; picklable for the process pool"""

    index: int
    task: TaskKind
    source: InstanceSource
    copy_index: int
    seed: int
    params: Dict[str, Any]

    @property
    def instance_name(self) -> str:
        return self.source.name(self.copy_index)

    @property
    def report_name(self) -> str:
        return f"{self.index:05d}_{self.instance_name}_seed{self.seed}.json"


def expand_runs(spec: ExperimentSpec, seeds: Optional[Sequence[int]] = None) -> List[RunTask]:
    """Instances in spec order, each crossed with every seed"""
    seed_list = list(seeds) if seeds is not None else list(spec.seeds)
    runs: List[RunTask] = []
    for source in spec.instances:
        for copy_index in range(source.count):
            for seed in seed_list:
                runs.append(
                    RunTask(len(runs), TaskKind(spec.task), source, copy_index, seed, dict(spec.params))
                )
    return runs


def _require(params: Dict[str, Any], key: str) -> Any:
    if key not in params:
        raise ExperimentError(f"instance params need {key!r}")
    return params.pop(key)


def load_instance(task: TaskKind, source: InstanceSource, copy_index: int) -> Instance:
    """File or generator instance for one copy; copy i uses instance_seed + i"""
    task = TaskKind(task)
    if source.path is not None:
        if task == TaskKind.STEINER:
            return FileManager.load_metric(source.path)
        system = FileManager.load_set_system(source.path)
        return ExplicitMultigraph.from_set_system(system) if task in GRAPH_TASKS else system

    seed = source.instance_seed + copy_index
    params = dict(source.params)
    kind = str(source.kind)

    if task in GRAPH_TASKS:
        if kind == RANDOM_MULTIGRAPH:
            return generate_multigraph(
                int(_require(params, "n_vertices")),
                float(params.pop("average_degree", 4.0)),
                seed,
                float(params.pop("parallel_fraction", 0.2)),
            )
        if kind == EXPLICIT_MULTIGRAPH:
            pairs = _require(params, "edges")
            edges = [EdgeId.canonical(int(u), int(v), label) for label, (u, v) in enumerate(pairs)]
            vertices = params.pop("vertices", None)
            if vertices is None:
                vertices = sorted({x for edge in edges for x in (edge.u, edge.v)})
            return ExplicitMultigraph(vertices, edges)
        k = int(_require(params, "k"))
        system = generate_set_system(kind, k, int(params.pop("n", k)), seed, **params)
        return ExplicitMultigraph.from_set_system(system)

    if task == TaskKind.STEINER:
        n_pts = int(_require(params, "n_pts"))
        exponent = params.pop("terminal_exponent", None)
        if exponent is not None:
            params["n_terminals"] = max(1, min(n_pts, int(round(n_pts ** float(exponent)))))
        return generate_metric(kind, n_pts, seed=seed, **params)

    k = int(_require(params, "k"))
    return generate_set_system(kind, k, int(params.pop("n", k)), seed, **params)


def _split(params: Dict[str, Any], runner_keys: Dict[str, Any]) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    """Runner-only options (with defaults) and the estimator parameters left over"""
    estimator = dict(params)
    options = {key: estimator.pop(key, default) for key, default in runner_keys.items()}
    return options, estimator


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)


def _tolerance(scale: float) -> float:
    return 1e-9 * max(1.0, abs(scale))


def _thsc_bounds(system: SetSystem, exclude_pairs: bool, seed: int) -> Tuple[float, float, bool]:
    """(chi_low, chi_high, exact); matching bounds are tightened by a planted cover when known"""
    truth = thsc_from_explicit(system, exclude_pairs=exclude_pairs, seed=seed)
    if truth.exact:
        return truth.value, truth.value, True
    low, high = truth.value, 2.0 * truth.value
    planted = system.metadata.get("planted_cover_bound")
    if planted is not None and not exclude_pairs:
        low = max(low, float(system.universe_size - int(planted)))
    return low, high, False


def _sandwich(estimate: float, low: float, high: float, epsilon: float, k: int) -> bool:
    """chi / 2 - eps k <= estimate <= chi for some chi in [low, high]; exact when low == high"""
    slack = _tolerance(k)
    return estimate <= high + slack and estimate >= low / 2.0 - epsilon * k - slack


def _run_thsc(task: RunTask, system: SetSystem) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    no_pairs = task.task == TaskKind.THSC_NO_PAIRS
    options, raw = _split(task.params, {"extra_pairs": 0})
    params = parse_schema(SetCoverParams, {**raw, "seed": task.seed})
    estimator = estimate_thsc_no_pairs if no_pairs else estimate_thsc

    report = estimator(MembershipOracle(system), params)
    low, high, exact = _thsc_bounds(system, no_pairs, task.seed)
    passed = _sandwich(report.estimate, low, high, params.epsilon, system.universe_size)

    row: Dict[str, Any] = {
        "n": system.n,
        "k": system.universe_size,
        "estimate": report.estimate,
        "exact_or_bound": low if exact else high,
        "queries_membership": report.ledger.membership_queries,
        "queries_distance": 0,
        "chi_low": low,
        "chi_high": high,
        "exact": exact,
        "branch": report.branch,
        "mu_tilde": report.mu_tilde,
        "low_size": report.low_size,
        "high_size": report.high_size,
        "removed_sets": report.removed_sets,
        "sandwich": passed,
    }
    payload: Dict[str, Any] = {"report": report.model_dump(mode="json")}

    extra_pairs = int(options["extra_pairs"])
    if no_pairs and extra_pairs > 0 and system.universe_size >= 2:
        # pairs are invisible to the sizes-not-two objective
        rng = np.random.default_rng(derive_seeds(task.seed, 1)[0])
        pairs = [sorted(rng.choice(system.universe_size, size=2, replace=False).tolist()) for _ in range(extra_pairs)]
        augmented = SetSystem.from_sets(system.universe_size, list(system.family) + pairs, system.metadata)
        aug_low, aug_high, _ = _thsc_bounds(augmented, True, task.seed)
        aug_report = estimate_thsc_no_pairs(MembershipOracle(augmented), params)
        aug_passed = _sandwich(aug_report.estimate, aug_low, aug_high, params.epsilon, system.universe_size)
        invariant = _close(aug_low, low) and _close(aug_high, high) and aug_passed == passed
        row.update(augmented_estimate=aug_report.estimate, pairs_invariant=invariant)
        payload["augmented_report"] = aug_report.model_dump(mode="json")
        passed = passed and invariant

    row["passed"] = passed
    return row, payload


def _run_rgmm(task: RunTask, graph: ExplicitMultigraph) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    options, raw = _split(
        task.params,
        {
            "epsilon": settings.DEFAULT_EPSILON,
            "mc_trials": 2000,
            "probes": None,
            "expected_mean": None,
            "expected_tolerance": 0.01,
        },
    )
    if raw:
        raise ExperimentError(f"unknown rgmm params: {sorted(raw)}")
    epsilon = float(options["epsilon"])
    estimate_seed, mc_seed, cost_seed = derive_seeds(task.seed, 3)

    estimate = estimate_rgmm_size(graph, epsilon, estimate_seed)
    truth = mc_rgmm_expectation(graph, int(options["mc_trials"]), mc_seed)
    costs = measure_query_costs(graph, cost_seed, options["probes"])
    # the estimate probes one permutation; its window is checked against that permutation
    realized = len(offline_greedy_matching(graph, RankFunction(estimate_seed)))

    count = len(graph.vertices)
    log_n = math.log(max(count, 2))
    slack = _tolerance(count)
    passed = realized - epsilon * count / 2.0 - slack <= estimate.mu_tilde <= realized + slack

    row: Dict[str, Any] = {
        "n": count,
        "k": len(graph.edges),
        "estimate": estimate.mu_tilde,
        "exact_or_bound": truth.mean,
        "queries_membership": 0,
        "queries_distance": 0,
        "realized_matching": realized,
        "mc_half_width": truth.half_width,
        "average_degree": graph.average_degree,
        "mean_vertex_calls": costs.mean_vertex_calls,
        "max_vertex_calls": costs.max_vertex_calls,
        "max_edge_calls": costs.max_edge_calls,
        "t_ratio": costs.mean_vertex_calls / ((1.0 + costs.average_degree) * log_n),
        "q_ratio": costs.max_edge_calls / log_n,
        "estimate_within": passed,
    }
    expected = options["expected_mean"]
    if expected is not None:
        error = abs(truth.mean - float(expected))
        row.update(expected_mean=float(expected), mc_error=error)
        passed = passed and error <= float(options["expected_tolerance"])
    row["passed"] = passed
    payload = {
        "rgmm": estimate.model_dump(mode="json"),
        "monte_carlo": {"mean": truth.mean, "half_width": truth.half_width, "trials": truth.trials},
    }
    return row, payload


def _run_oracle_equiv(task: RunTask, graph: ExplicitMultigraph) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    options, raw = _split(task.params, {"fresh_probes": 20})
    if raw:
        raise ExperimentError(f"unknown oracle_equiv params: {sorted(raw)}")
    rank_function = RankFunction(task.seed)
    offline = offline_greedy_matching(graph, rank_function)
    matched = matched_vertices(offline)

    shared = LocalMatchingOracle(graph, rank_function)
    vertex_mismatches = sum(1 for v in graph.vertices if shared.vertex_oracle(v) != (v in matched))
    local_matching = [e for e in graph.edges if shared.edge_oracle(e, e.u)]
    edge_mismatches = len(set(local_matching) ^ offline)

    # same answers with nothing carried between calls
    fresh = LocalMatchingOracle(graph, rank_function, use_memo=False)
    rng = np.random.default_rng(derive_seeds(task.seed, 1)[0])
    fresh_mismatches = 0
    if graph.vertices:
        probes = rng.integers(0, len(graph.vertices), size=int(options["fresh_probes"]))
        for position in probes:
            v = graph.vertices[int(position)]
            fresh_mismatches += int(fresh.vertex_oracle(v) != (v in matched))
    if graph.edges:
        probes = rng.integers(0, len(graph.edges), size=int(options["fresh_probes"]))
        for position in probes:
            edge = graph.edges[int(position)]
            fresh_mismatches += int(fresh.edge_oracle(edge, edge.v) != (edge in offline))

    mismatches = vertex_mismatches + edge_mismatches + fresh_mismatches
    row = {
        "n": len(graph.vertices),
        "k": len(graph.edges),
        "estimate": len(local_matching),
        "exact_or_bound": len(offline),
        "queries_membership": 0,
        "queries_distance": 0,
        "vertex_mismatches": vertex_mismatches,
        "edge_mismatches": edge_mismatches,
        "fresh_mismatches": fresh_mismatches,
        "mismatches": mismatches,
        "passed": mismatches == 0,
    }
    return row, {"matching": sorted(list(e) for e in offline)}


def _run_steiner(task: RunTask, metric: MetricInstance) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    options, raw = _split(task.params, {"cross_check": False})
    params = parse_schema(SteinerParams, {**raw, "seed": task.seed})
    report = estimate_steiner(DistanceOracle(metric), params)
    w = report.mst_weight
    shrunk = (1.0 - params.c_eta_prime * params.eta) * w
    two_valued = _close(report.estimate, w) or _close(report.estimate, shrunk)

    row: Dict[str, Any] = {
        "n": metric.n_points,
        "k": metric.k,
        "estimate": report.estimate,
        "exact_or_bound": w,
        "queries_membership": 0,
        "queries_distance": report.ledger.distance_queries,
        "mst_weight": w,
        "fired": report.fired,
        "total_gain": report.total_gain,
        "branch": report.branch,
        "two_valued": two_valued,
    }
    passed = two_valued
    if metric.n_points <= settings.EXACT_STEINER_MAX_POINTS:
        st = exact_steiner(metric)
        slack = _tolerance(w)
        gilbert_pollak = w / 2.0 <= st + slack and st <= w + slack
        sandwich = (1.0 - params.c_eta_prime * params.eta) * st - slack <= report.estimate <= 2.0 * st + slack
        row.update(exact_or_bound=st, steiner_weight=st, gilbert_pollak=gilbert_pollak, sandwich=sandwich)
        if options["cross_check"] and metric.n_points <= settings.DREYFUS_WAGNER_MAX_POINTS:
            row["dp_agrees"] = abs(dreyfus_wagner(metric) - st) <= slack
        passed = passed and gilbert_pollak and sandwich and row.get("dp_agrees", True)
    row["passed"] = passed
    return row, {"report": report.model_dump(mode="json")}


def _run_sparsify_props(task: RunTask, system: SetSystem) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    options, raw = _split(task.params, {"alpha": None, "beta": None})
    params = parse_schema(SetCoverParams, {**raw, "seed": task.seed})
    n, k = system.n, system.universe_size
    alpha = float(options["alpha"]) if options["alpha"] is not None else params.alpha(n)
    beta = float(options["beta"]) if options["beta"] is not None else params.beta(n, k)
    sets_seed, elements_seed, cover_seed = derive_seeds(task.seed, 3)
    log_n = math.log(max(n, 2))

    oracle = MembershipOracle(system)
    sparse = sparsify_sets(oracle, alpha, sets_seed)
    partition = sparsify_elements(
        oracle, sparse.surviving_sets, sparse.surviving_elements, beta, params.epsilon, elements_seed
    )

    # replay every removal against ground truth
    alive = np.ones(k, dtype=bool)
    legitimate = True
    exact_removals = True
    for removal in sparse.removals:
        members = system.set_array(removal.set_index)
        inside = members[alive[members]]
        legitimate = legitimate and inside.size >= alpha
        exact_removals = exact_removals and tuple(int(e) for e in inside) == removal.removed_elements
        alive[inside] = False
    surviving = np.flatnonzero(alive)
    exact_removals = exact_removals and tuple(int(e) for e in surviving) == sparse.surviving_elements

    largest_set = max((int(alive[system.set_array(s)].sum()) for s in sparse.surviving_sets), default=0)
    set_degree = largest_set <= 20.0 * alpha * log_n

    degrees = np.zeros(k, dtype=np.int64)
    for s in sparse.surviving_sets:
        degrees[system.set_array(s)] += 1
    low = np.asarray(partition.low, dtype=np.int64)
    largest_degree = int(degrees[low].max()) if low.size else 0
    element_degree = largest_degree <= 40.0 * beta * log_n / params.epsilon

    chosen = claimed_cover_of_high(
        partition, sparse.surviving_sets, k, params.epsilon, np.random.default_rng(cover_seed)
    )
    covered = np.zeros(k, dtype=bool)
    for s in chosen:
        covered[system.set_array(s)] = True
    high = np.asarray(partition.high, dtype=np.int64)
    high_covered = bool(covered[high].all()) if high.size else True

    checks = {
        "removal_legitimate": legitimate and exact_removals,
        "removal_count": sparse.removed_count <= k / alpha + _tolerance(k),
        "set_degree": set_degree,
        "element_degree": element_degree,
        "high_covered": high_covered,
    }
    phases = oracle.ledger.phase_counts()
    row: Dict[str, Any] = {
        "n": n,
        "k": k,
        "estimate": sparse.removed_count,
        "exact_or_bound": k / alpha,
        "queries_membership": oracle.ledger.membership_queries,
        "queries_distance": 0,
        "alpha": alpha,
        "beta": beta,
        "low_size": len(partition.low),
        "high_size": len(partition.high),
        "largest_set": largest_set,
        "largest_low_degree": largest_degree,
        "queries_sparsify_sets": phases.get(SPARSIFY_SETS_PHASE, {}).get("membership", 0),
        "queries_sparsify_elements": phases.get(SPARSIFY_ELEMENTS_PHASE, {}).get("membership", 0),
        **checks,
        "passed": all(checks.values()),
    }
    payload = {
        "removed_sets": [r.set_index for r in sparse.removals],
        "stopped_early": sparse.stopped_early,
        "element_threshold": partition.threshold,
        "early_return": partition.early_return,
        "high": list(partition.high),
    }
    return row, payload


TASK_RUNNERS = {
    TaskKind.THSC: _run_thsc,
    TaskKind.THSC_NO_PAIRS: _run_thsc,
    TaskKind.RGMM: _run_rgmm,
    TaskKind.ORACLE_EQUIV: _run_oracle_equiv,
    TaskKind.STEINER: _run_steiner,
    TaskKind.SPARSIFY_PROPS: _run_sparsify_props,
}


def execute_run(task: RunTask) -> Dict[str, Any]:
    """Run one cell; never raises, failures come back as an error row"""
    started = time.perf_counter()
    base = {"instance": task.instance_name, "task": TaskKind(task.task).value, "seed": task.seed}
    try:
        instance = load_instance(task.task, task.source, task.copy_index)
        row, payload = TASK_RUNNERS[TaskKind(task.task)](task, instance)
        row = {**base, **row, "status": "ok", "error": None}
    except Exception as e:
        logger.warning("Run failed", instance=task.instance_name, seed=task.seed, error=str(e))
        row = {**base, "status": "error", "passed": None, "error": f"{type(e).__name__}: {e}"}
        payload = {"traceback": traceback.format_exc()}
    row["wall_ms"] = round((time.perf_counter() - started) * 1000.0, 3)
    return {"row": row, "payload": payload, "report_name": task.report_name}


def csv_columns(rows: Sequence[Dict[str, Any]]) -> List[str]:
    """Base columns, then run bookkeeping, then task columns in first-seen order"""
    columns = list(BASE_COLUMNS) + list(RUN_COLUMNS)
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    return columns


class ExperimentRunner:
    """Executes one ExperimentSpec and evaluates its acceptance block"""

    def __init__(self, spec: ExperimentSpec, output: Optional[Union[str, Path]] = None, jobs: Optional[int] = None):
        self.spec = spec
        self.output = Path(output or spec.output or Path(settings.OUTPUT_DIR) / spec.name)
        self.jobs = jobs if jobs is not None else settings.DEFAULT_JOBS
        self.log = logger.bind(experiment=spec.name, task=TaskKind(spec.task).value)

    @property
    def csv_path(self) -> Path:
        return self.output / "results.csv"

    @property
    def report_dir(self) -> Path:
        return self.output / "runs"

    async def execute(self, runs: Sequence[RunTask]) -> List[Dict[str, Any]]:
        if self.jobs <= 1:
            return [execute_run(run) for run in runs]

        loop = asyncio.get_running_loop()
        with ProcessPoolExecutor(max_workers=self.jobs) as pool:
            outcomes = await asyncio.gather(
                *(loop.run_in_executor(pool, execute_run, run) for run in runs),
                return_exceptions=True,
            )

        results = []
        for run, outcome in zip(runs, outcomes):
            if isinstance(outcome, BaseException):
                # the worker process itself died
                row = {
                    "instance": run.instance_name,
                    "task": TaskKind(run.task).value,
                    "seed": run.seed,
                    "status": "error",
                    "passed": None,
                    "error": f"{type(outcome).__name__}: {outcome}",
                    "wall_ms": 0.0,
                }
                outcome = {"row": row, "payload": {}, "report_name": run.report_name}
            results.append(outcome)
        return results

    def write(self, results: Sequence[Dict[str, Any]]) -> List[Dict[str, Any]]:
        rows = [result["row"] for result in results]
        for result in results:
            FileManager.write_json(
                {"row": result["row"], **result["payload"]}, self.report_dir / result["report_name"]
            )
        FileManager.write_csv(rows, self.csv_path, csv_columns(rows))
        return rows

    def _fit(self, frame: pd.DataFrame, acceptance: AcceptanceSpec, messages: List[str]) -> Tuple[List[ExponentFit], bool]:
        fits: List[ExponentFit] = []
        holds = True
        for check in acceptance.slopes:
            try:
                fit = fit_exponent(frame, check.x_col, check.y_col, check.deflate_power)
            except DegenerateDataError as e:
                messages.append(f"fit {check.y_col}~{check.x_col}: {e}")
                holds = False
                continue
            fits.append(fit)
            if check.max_slope is not None and fit.slope > check.max_slope:
                messages.append(f"slope {fit.slope:.3f} of {check.y_col} exceeds {check.max_slope}")
                holds = False
            if check.reference_csv is not None:
                try:
                    reference = fit_exponent(check.reference_csv, check.x_col, check.y_col, check.deflate_power)
                except SublinearError as e:
                    messages.append(f"reference fit failed: {e}")
                    holds = False
                    continue
                if not fit.slope < reference.slope:
                    messages.append(f"slope {fit.slope:.3f} not below reference {reference.slope:.3f}")
                    holds = False
        return fits, holds

    def summarize(self, rows: Sequence[Dict[str, Any]]) -> ExperimentSummary:
        frame = pd.DataFrame(list(rows), columns=csv_columns(rows))
        ok = frame[frame["status"] == "ok"]
        failures = int((frame["status"] == "error").sum())
        verdicts = ok["passed"].dropna().astype(bool)
        checked = int(verdicts.size)
        passed = int(verdicts.sum())
        pass_rate = passed / checked if checked else None

        messages: List[str] = []
        fits: List[ExponentFit] = []
        assertion: Optional[bool] = None
        acceptance = self.spec.acceptance
        if acceptance is not None:
            assertion = True
            if failures > acceptance.max_errors:
                messages.append(f"{failures} runs failed, at most {acceptance.max_errors} allowed")
                assertion = False
            if acceptance.min_pass_rate is not None and pass_rate is not None and pass_rate < acceptance.min_pass_rate:
                messages.append(f"pass rate {pass_rate:.4f} below {acceptance.min_pass_rate}")
                assertion = False
            for column in acceptance.required_checks:
                values = ok[column].dropna().astype(bool) if column in ok.columns else pd.Series([], dtype=bool)
                if values.empty or not values.all():
                    messages.append(f"check {column} failed on {int((~values).sum())} of {values.size} rows")
                    assertion = False
            fits, slopes_hold = self._fit(ok, acceptance, messages)
            assertion = assertion and slopes_hold

        return ExperimentSummary(
            name=self.spec.name,
            task=self.spec.task,
            runs=len(frame),
            failures=failures,
            passed=passed,
            checked=checked,
            pass_rate=pass_rate,
            csv_path=str(self.csv_path),
            report_dir=str(self.report_dir),
            fits=fits,
            assertion_passed=assertion,
            messages=messages,
        )

    async def run(self, seeds: Optional[Sequence[int]] = None) -> ExperimentSummary:
        runs = expand_runs(self.spec, seeds)
        self.log.info("Experiment started", runs=len(runs), jobs=self.jobs, output=str(self.output))
        started = time.perf_counter()

        results = await self.execute(runs)
        rows = self.write(results)
        summary = self.summarize(rows)
        FileManager.write_json(summary, self.output / "summary.json")

        self.log.info(
            "Experiment finished",
            runs=summary.runs,
            failures=summary.failures,
            pass_rate=summary.pass_rate,
            assertion_passed=summary.assertion_passed,
            seconds=round(time.perf_counter() - started, 2),
        )
        return summary


async def run_experiment_async(
    spec: ExperimentSpec,
    jobs: Optional[int] = None,
    output: Optional[Union[str, Path]] = None,
    seeds: Optional[Sequence[int]] = None,
) -> ExperimentSummary:
    return await ExperimentRunner(spec, output, jobs).run(seeds)


def run_experiment(
    spec: ExperimentSpec,
    jobs: Optional[int] = None,
    output: Optional[Union[str, Path]] = None,
    seeds: Optional[Sequence[int]] = None,
) -> ExperimentSummary:
    """Blocking wrapper around run_experiment_async"""
    return asyncio.run(run_experiment_async(spec, jobs, output, seeds))


def load_spec(path: Union[str, Path]) -> ExperimentSpec:
    """ExperimentSpec from a JSON file; a missing ``output`` defaults under OUTPUT_DIR"""
    try:
        raw = FileManager.read_json(path)
    except SublinearError as e:
        raise ExperimentError(str(e)) from e
    if not isinstance(raw, dict):
        raise ExperimentError(f"{path}: an experiment spec is a JSON object")
    try:
        return ExperimentSpec(**raw)
    except ValidationError as e:
        raise ExperimentError(f"invalid experiment spec {path}: {e}") from e
