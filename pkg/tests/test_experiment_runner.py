import json
from pathlib import Path

import pandas as pd
import pytest

from sublinear.core.exceptions import ExperimentError
from sublinear.schemas.experiment import ExperimentSpec
from sublinear.services.experiment_runner import (
    BASE_COLUMNS,
    ExperimentRunner,
    execute_run,
    expand_runs,
    load_spec,
    run_experiment,
    run_experiment_async,
)


def make_spec(**overrides) -> ExperimentSpec:
    raw = {
        "name": "small_thsc",
        "task": "thsc",
        "instances": [{"label": "uniform", "kind": "uniform_random", "params": {"k": 12, "n": 20, "p": 0.2}}],
        "seeds": [0, 1, 2],
        "params": {"epsilon": 0.1},
    }
    raw.update(overrides)
    return ExperimentSpec(**raw)


def read_rows(summary) -> pd.DataFrame:
    return pd.read_csv(summary.csv_path)


class TestExpandRuns:

    def test_instances_cross_seeds(self):
        """Test each copy of each source is paired with every seed"""
        spec = make_spec(
            instances=[
                {"kind": "uniform_random", "params": {"k": 5, "n": 5}, "count": 2},
                {"kind": "singleton_heavy", "params": {"k": 5, "n": 8}},
            ],
            seeds=[3, 4],
        )
        runs = expand_runs(spec)
        assert len(runs) == 6
        assert [r.index for r in runs] == list(range(6))
        assert [r.instance_name for r in runs[:4]] == ["uniform_random-0"] * 2 + ["uniform_random-1"] * 2
        assert [r.seed for r in runs] == [3, 4, 3, 4, 3, 4]

    def test_seed_override(self):
        """Test an explicit seed list replaces the spec's seeds"""
        assert [r.seed for r in expand_runs(make_spec(), seeds=[9])] == [9]


class TestRunExperiment:

    def test_writes_one_report_per_run(self, tmp_path):
        """Test three seeds give three JSON reports, a three-row CSV and a summary"""
        summary = run_experiment(make_spec(), jobs=1, output=tmp_path)

        reports = sorted((tmp_path / "runs").glob("*.json"))
        assert len(reports) == 3
        assert (tmp_path / "summary.json").exists()
        frame = read_rows(summary)
        assert len(frame) == 3
        assert list(frame.columns[: len(BASE_COLUMNS)]) == BASE_COLUMNS
        assert set(frame["status"]) == {"ok"}
        assert summary.runs == 3
        assert summary.failures == 0

        payload = json.loads(reports[0].read_text())
        assert payload["row"]["seed"] == 0
        assert payload["report"]["variant"] == "thsc"

    def test_same_seeds_same_rows(self, tmp_path):
        """Test a rerun reproduces every column but the wall time"""
        first = read_rows(run_experiment(make_spec(), jobs=1, output=tmp_path / "a"))
        second = read_rows(run_experiment(make_spec(), jobs=1, output=tmp_path / "b"))
        pd.testing.assert_frame_equal(first.drop(columns="wall_ms"), second.drop(columns="wall_ms"))

    def test_failed_run_becomes_an_error_row(self, tmp_path):
        """Test a run that raises is recorded and fails the acceptance block"""
        spec = make_spec(
            instances=[
                {"label": "good", "kind": "uniform_random", "params": {"k": 8, "n": 10, "p": 0.3}},
                {"label": "broken", "kind": "uniform_random", "params": {"n": 10}},
            ],
            seeds=[0],
            acceptance={"min_pass_rate": None, "max_errors": 0},
        )
        summary = run_experiment(spec, jobs=1, output=tmp_path)
        frame = read_rows(summary)

        assert list(frame["status"]) == ["ok", "error"]
        assert "ExperimentError" in frame.loc[1, "error"]
        assert summary.failures == 1
        assert summary.assertion_passed is False
        assert any("runs failed" in m for m in summary.messages)

    def test_no_acceptance_means_no_verdict(self, tmp_path):
        """Test assertion_passed stays None without an acceptance block"""
        summary = run_experiment(make_spec(seeds=[0]), jobs=1, output=tmp_path)
        assert summary.assertion_passed is None

    @pytest.mark.asyncio
    async def test_async_entry_point(self, tmp_path):
        """Test the coroutine form runs inside an existing loop"""
        summary = await run_experiment_async(make_spec(seeds=[5]), jobs=1, output=tmp_path)
        assert summary.runs == 1
        assert read_rows(summary).loc[0, "seed"] == 5

    def test_process_pool(self, tmp_path):
        """Test jobs > 1 produces the same rows as the serial path"""
        serial = read_rows(run_experiment(make_spec(), jobs=1, output=tmp_path / "serial"))
        pooled = read_rows(run_experiment(make_spec(), jobs=2, output=tmp_path / "pooled"))
        pd.testing.assert_frame_equal(serial.drop(columns="wall_ms"), pooled.drop(columns="wall_ms"))


class TestTasks:

    def test_oracle_equivalence(self, tmp_path):
        """Test local oracles agree with the offline greedy matching"""
        spec = make_spec(
            name="equiv",
            task="oracle_equiv",
            instances=[{"kind": "random_multigraph", "params": {"n_vertices": 40, "average_degree": 4.0}, "count": 2}],
            seeds=[0, 1],
            params={},
        )
        frame = read_rows(run_experiment(spec, jobs=1, output=tmp_path))
        assert (frame["mismatches"] == 0).all()
        assert frame["passed"].all()

    def test_path_expectation(self, tmp_path):
        """Test the Monte Carlo mean of the 3-edge path matches 5/3"""
        spec = make_spec(
            name="path",
            task="rgmm",
            instances=[{"kind": "explicit_multigraph", "params": {"edges": [[0, 1], [1, 2], [2, 3]]}}],
            seeds=[0],
            params={"epsilon": 0.1, "mc_trials": 100000, "expected_mean": 5.0 / 3.0},
            acceptance={"min_pass_rate": 1.0, "required_checks": ["passed"]},
        )
        summary = run_experiment(spec, jobs=1, output=tmp_path)
        row = read_rows(summary).iloc[0]
        assert row["n"] == 4
        assert row["k"] == 3
        assert row["realized_matching"] in (1, 2)
        assert row["mc_error"] <= 0.01
        assert summary.assertion_passed is True

    def test_rgmm_rejects_unknown_params(self):
        """Test a typo in rgmm params fails the run instead of being ignored"""
        spec = make_spec(
            task="rgmm",
            instances=[{"kind": "explicit_multigraph", "params": {"edges": [[0, 1]]}}],
            seeds=[0],
            params={"epsilonn": 0.1},
        )
        outcome = execute_run(expand_runs(spec)[0])
        assert outcome["row"]["status"] == "error"
        assert "epsilonn" in outcome["row"]["error"]

    def test_steiner_sandwich(self, tmp_path):
        """Test small metrics get exact Steiner weights and pass the window"""
        spec = make_spec(
            name="steiner",
            task="steiner",
            instances=[{"kind": "euclidean", "params": {"n_pts": 10, "terminal_fraction": 0.5}, "count": 2}],
            seeds=[0],
            params={"cross_check": True},
        )
        frame = read_rows(run_experiment(spec, jobs=1, output=tmp_path))
        assert frame["two_valued"].all()
        assert frame["gilbert_pollak"].all()
        assert frame["dp_agrees"].all()
        assert frame["passed"].all()
        assert (frame["queries_distance"] > 0).all()

    def test_sparsify_properties(self, tmp_path):
        """Test the sparsifier task reports its checks per run"""
        spec = make_spec(
            name="sparsify",
            task="sparsify_props",
            instances=[{"kind": "singleton_heavy", "params": {"k": 300, "n": 400}}],
            seeds=[0],
        )
        frame = read_rows(run_experiment(spec, jobs=1, output=tmp_path))
        assert frame.loc[0, "status"] == "ok"
        assert bool(frame.loc[0, "removal_legitimate"])
        assert frame.loc[0, "queries_membership"] >= 0


class TestLoadSpec:

    def test_bundled_specs_parse(self):
        """Test every spec shipped in specs/ validates"""
        specs = sorted((Path(__file__).parent.parent / "specs").glob("*.json"))
        assert specs
        for path in specs:
            assert load_spec(path).name == path.stem

    def test_unreadable_file(self, tmp_path):
        """Test broken JSON is an experiment error"""
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ExperimentError):
            load_spec(path)

    def test_invalid_spec(self, tmp_path):
        """Test a spec without instances is refused"""
        path = tmp_path / "empty.json"
        path.write_text(json.dumps({"name": "x", "task": "thsc", "instances": [], "seeds": [0]}))
        with pytest.raises(ExperimentError):
            load_spec(path)

    def test_source_needs_kind_or_path(self):
        """Test an instance source must name exactly one origin"""
        with pytest.raises(ValueError):
            make_spec(instances=[{"kind": "uniform_random", "path": "x.json"}])

    def test_runner_paths(self, tmp_path):
        """Test CSV and report locations under the output directory"""
        runner = ExperimentRunner(make_spec(), output=tmp_path, jobs=1)
        assert runner.csv_path == tmp_path / "results.csv"
        assert runner.report_dir == tmp_path / "runs"
