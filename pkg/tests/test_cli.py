import json

import pytest

from sublinear.cli import EXIT_ASSERTION, EXIT_ERROR, EXIT_OK, build_parser, main


@pytest.fixture
def set_file(tmp_path):
    path = tmp_path / "sets.json"
    code = main(["gen-sets", "--kind", "uniform_random", "--k", "12", "--n", "20",
                 "--seed", "3", "--param", "p=0.2", "--out", str(path)])
    assert code == EXIT_OK
    return path


@pytest.fixture
def metric_file(tmp_path):
    path = tmp_path / "metric.json"
    code = main(["gen-metric", "--kind", "euclidean", "--n-pts", "10", "--n-terminals", "4",
                 "--seed", "1", "--out", str(path)])
    assert code == EXIT_OK
    return path


def write_spec(tmp_path, **overrides):
    spec = {
        "name": "cli_thsc",
        "task": "thsc",
        "instances": [{"kind": "uniform_random", "params": {"k": 10, "n": 15, "p": 0.2}}],
        "seeds": [0],
        "output": str(tmp_path / "out"),
    }
    spec.update(overrides)
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec))
    return path


class TestGenerate:

    def test_gen_sets_writes_the_instance(self, set_file):
        """Test the set system file carries k, sets and generator metadata"""
        payload = json.loads(set_file.read_text())
        assert payload["k"] == 12
        assert len(payload["sets"]) == 20
        assert payload["metadata"]["kind"] == "uniform_random"

    def test_gen_metric_writes_the_instance(self, metric_file):
        """Test the metric file carries points and terminals"""
        payload = json.loads(metric_file.read_text())
        assert payload["n"] == 10
        assert len(payload["terminals"]) == 4

    def test_unknown_kind_is_a_usage_error(self, tmp_path):
        """Test argparse rejects kinds outside the choices"""
        with pytest.raises(SystemExit):
            main(["gen-sets", "--kind", "zipf", "--k", "3", "--n", "3", "--out", str(tmp_path / "x.json")])

    def test_bad_option_format(self, tmp_path):
        """Test a --param without '=' exits with 1"""
        code = main(["gen-sets", "--kind", "uniform_random", "--k", "3", "--n", "3",
                     "--param", "p", "--out", str(tmp_path / "x.json")])
        assert code == EXIT_ERROR


class TestEstimate:

    def test_thsc_prints_a_report(self, set_file, capsys):
        """Test the report JSON goes to stdout"""
        assert main(["thsc", "--instance", str(set_file), "--seed", "2"]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["k"] == 12
        assert 0.0 <= report["estimate"] <= 12.0
        assert report["variant"] == "thsc"

    def test_thsc_without_pairs(self, set_file, capsys):
        """Test --no-pairs selects the sizes-not-two variant"""
        assert main(["thsc", "--instance", str(set_file), "--no-pairs"]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["variant"] == "thsc_no_pairs"

    def test_thsc_bad_parameter(self, set_file):
        """Test an out-of-range epsilon exits with 1"""
        assert main(["thsc", "--instance", str(set_file), "--param", "epsilon=2.0"]) == EXIT_ERROR

    def test_steiner_prints_a_report(self, metric_file, capsys):
        """Test the Steiner report is printed with its MST weight"""
        assert main(["steiner", "--instance", str(metric_file)]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["estimate"] <= report["mst_weight"] + 1e-9

    def test_missing_instance(self, tmp_path):
        """Test a missing file exits with 1"""
        assert main(["thsc", "--instance", str(tmp_path / "nope.json")]) == EXIT_ERROR


class TestRun:

    def test_run_succeeds(self, tmp_path, capsys):
        """Test run prints the summary and writes the CSV"""
        spec = write_spec(tmp_path)
        assert main(["run", "--spec", str(spec), "--jobs", "1"]) == EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        assert summary["runs"] == 1
        assert (tmp_path / "out" / "results.csv").exists()

    def test_assert_exit_code(self, tmp_path):
        """Test --assert exits 2 when acceptance fails and 0 without --assert"""
        spec = write_spec(
            tmp_path,
            instances=[{"kind": "uniform_random", "params": {"n": 15}}],
            acceptance={"max_errors": 0},
        )
        assert main(["run", "--spec", str(spec), "--jobs", "1", "--assert"]) == EXIT_ASSERTION
        assert main(["run", "--spec", str(spec), "--jobs", "1"]) == EXIT_OK

    def test_seed_override(self, tmp_path, capsys):
        """Test --seed runs a single seed"""
        spec = write_spec(tmp_path, seeds=[0, 1, 2])
        assert main(["run", "--spec", str(spec), "--jobs", "1", "--seed", "7"]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["runs"] == 1

    def test_bad_spec(self, tmp_path):
        """Test an unreadable spec exits with 1"""
        path = tmp_path / "spec.json"
        path.write_text("[]")
        assert main(["run", "--spec", str(path)]) == EXIT_ERROR

    def test_fit(self, tmp_path, capsys):
        """Test fit reads a CSV and prints the slope"""
        path = tmp_path / "q.csv"
        path.write_text("n,q\n" + "".join(f"{x},{x * x}\n" for x in (2, 4, 8, 16, 32)))
        assert main(["fit", "--csv", str(path), "--y", "q", "--deflate", "0"]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["slope"] == pytest.approx(2.0)

    def test_parser_requires_a_command(self):
        """Test a bare invocation is a usage error"""
        with pytest.raises(SystemExit):
            build_parser().parse_args([])
