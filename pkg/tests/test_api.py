import orjson
import pandas as pd
import pytest
from prometheus_client.parser import text_string_to_metric_families

from bitrel.main import main
from bitrel.models.schemas import Statistic


def _error(capsys) -> dict:
    return orjson.loads(capsys.readouterr().err.strip().splitlines()[-1])


@pytest.fixture(name="corpus")
def corpus_fixture(tmp_path, settings_env):
    out = tmp_path / "corpus"
    assert main(["gen", "--seed", "4", "--systems", "5", "--out", str(out)]) == 0
    return out


def test_gen_writes_one_spec_per_system(capsys, corpus):
    specs = sorted((corpus / "specs").glob("*.spec"))
    assert [p.name for p in specs] == [f"sys_{i:04d}.spec" for i in range(5)]
    types = [orjson.loads(p.read_bytes())["system_type"] for p in specs]
    assert types == ["AND", "OR", "XOR", "MIX", "LHA"]
    assert "total" in capsys.readouterr().out


def test_gen_is_byte_identical(corpus, tmp_path):
    again = tmp_path / "again"
    assert main(["gen", "--seed", "4", "--systems", "5", "--out", str(again)]) == 0
    for path in (corpus / "specs").glob("*.spec"):
        assert (again / "specs" / path.name).read_bytes() == path.read_bytes()


def test_sim_writes_header_and_is_reproducible(corpus, tmp_path):
    spec = corpus / "specs" / "sys_0002.spec"
    assert main(["sim", str(spec), "--samples", "100", "--format", "csv", "--out", str(corpus)]) == 0
    trace = corpus / "traces" / "sys_0002.csv"
    m = orjson.loads(spec.read_bytes())
    assert trace.read_text().splitlines()[0] == f"{m['m_src'] + m['m_dst']},100"

    other = tmp_path / "other"
    assert main(["sim", str(spec), "--samples", "100", "--format", "csv", "--out", str(other)]) == 0
    assert (other / "traces" / "sys_0002.csv").read_bytes() == trace.read_bytes()


def test_est_matrix_values(tmp_path, settings_env):
    trace = tmp_path / "pair.csv"
    trace.write_text("4,4\n1,1,1,0\n1,1,0,0\n0,0,0,0\n0,0,0,0\n")
    assert main(["est", str(trace), "--metrics", "Cov,Ham,Tmt", "--out", str(tmp_path)]) == 0
    cov = (tmp_path / "matrices" / "pair.Cov.csv").read_text().splitlines()
    assert cov[0].split(",")[1] == "0.5"
    tmt = (tmp_path / "matrices" / "pair.Tmt.csv").read_text().splitlines()
    assert tmt[2] == "0.0,0.0,,nan"
    assert not (tmp_path / "matrices" / "pair.Dep.csv").exists()


def test_est_identical_rows_and_json(tmp_path, settings_env):
    trace = tmp_path / "same.csv"
    trace.write_text("2,3\n1,0,1\n1,0,1\n")
    assert main(["est", str(trace), "--metrics", "Ham", "--json", "--out", str(tmp_path)]) == 0
    payload = orjson.loads((tmp_path / "matrices" / "same.Ham.json").read_bytes())
    assert payload == {"metric": "Ham", "m": 2, "values": [None, 1.0, 1.0, None]}


def test_est_window(tmp_path, settings_env):
    trace = tmp_path / "w.csv"
    trace.write_text("2,4\n1,1,0,1\n1,1,1,0\n")
    assert main(["est", str(trace), "--metrics", "Ham", "--window", "0:2", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "matrices" / "w.Ham.csv").read_text().splitlines()[0] == ",1.0"
    assert main(["est", str(trace), "--window", "2:9", "--out", str(tmp_path)]) == 2
    assert main(["est", str(trace), "--window", "nonsense", "--out", str(tmp_path)]) == 2


def test_est_needs_two_nodes(tmp_path, settings_env, capsys):
    trace = tmp_path / "one.csv"
    trace.write_text("1,3\n1,0,1\n")
    assert main(["est", str(trace), "--out", str(tmp_path)]) == 2
    assert _error(capsys)["code"] == "USAGE_ERROR"


def test_score_pipeline_by_hand(corpus):
    out = str(corpus)
    spec = corpus / "specs" / "sys_0000.spec"
    assert main(["sim", str(spec), "--samples", "400", "--out", out]) == 0
    assert main(["est", str(corpus / "traces" / "sys_0000.btr"), "--out", out]) == 0
    matrices = sorted(str(p) for p in (corpus / "matrices").glob("sys_0000.*.csv"))
    assert len(matrices) == 6
    assert main(["score", str(spec), *matrices, "--out", out]) == 0

    record = orjson.loads((corpus / "results" / "sys_0000.results.json").read_bytes())
    assert [r["metric"] for r in record["results"]] == ["Ham", "Tmt", "Cls", "Cos", "Cov", "Dep"]
    table = pd.read_csv(corpus / "results" / "sys_0000.results.csv")
    assert len(table) == 6


def test_score_dimension_mismatch(corpus, capsys):
    out = str(corpus)
    specs = [orjson.loads(p.read_bytes()) for p in sorted((corpus / "specs").glob("*.spec"))]
    sizes = [s["m_src"] + s["m_dst"] for s in specs]
    first, second = next((i, j) for i in range(5) for j in range(5) if sizes[i] != sizes[j])
    spec_path = corpus / "specs" / f"sys_{first:04d}.spec"
    other_path = corpus / "specs" / f"sys_{second:04d}.spec"
    assert main(["sim", str(other_path), "--samples", "50", "--out", out]) == 0
    assert main(["est", str(corpus / "traces" / f"sys_{second:04d}.btr"), "--metrics", "Ham", "--out", out]) == 0
    capsys.readouterr()
    matrix = corpus / "matrices" / f"sys_{second:04d}.Ham.csv"
    assert main(["score", str(spec_path), str(matrix), "--out", out]) == 2
    error = _error(capsys)
    assert error["details"]["matrix"] == sizes[second]
    assert error["details"]["spec"] == sizes[first]


def test_parse_and_io_exit_codes(tmp_path, settings_env, capsys):
    bad = tmp_path / "bad.spec"
    bad.write_text("{ not json")
    assert main(["sim", str(bad), "--out", str(tmp_path)]) == 3
    assert _error(capsys)["code"] == "PARSE_ERROR"
    assert main(["est", str(tmp_path / "absent.btr"), "--out", str(tmp_path)]) == 4
    assert _error(capsys)["code"] == "IO_ERROR"
    assert main(["frobnicate"]) == 2


@pytest.fixture(name="run_dir")
def run_dir_fixture(tmp_path, settings_env):
    out = tmp_path / "run"
    argv = ["run", "--seed", "11", "--systems", "10", "--samples", "500", "--jobs", "1", "--out", str(out)]
    assert main(argv) == 0
    return out


def test_run_emits_all_artifacts(run_dir):
    for statistic in Statistic:
        curve = pd.read_csv(run_dir / "curves" / f"curves_{statistic.value}.csv")
        assert list(curve.columns) == ["grid", "Ham", "Tmt", "Cls", "Cos", "Cov", "Dep"]
        assert curve["grid"].iloc[0] == statistic.domain[0]
        assert (run_dir / "curves" / f"curves_{statistic.value}.svg").exists()
    results = pd.read_csv(run_dir / "results.csv")
    assert len(results) == 60
    assert results["ordinal"].tolist() == sorted(results["ordinal"].tolist())
    assert len(list((run_dir / "specs").glob("*.spec"))) == 10
    assert len(list((run_dir / "matrices").glob("*.csv"))) == 60
    assert (run_dir / "summary.csv").exists()
    assert "bitrel_systems_processed_total" in (run_dir / "metrics.prom").read_text()
    assert not (run_dir / "FAILED").exists()


def test_run_is_deterministic(run_dir, tmp_path):
    again = tmp_path / "again"
    argv = ["run", "--seed", "11", "--systems", "10", "--samples", "500", "--jobs", "2", "--out", str(again)]
    assert main(argv) == 0
    assert (again / "results.csv").read_bytes() == (run_dir / "results.csv").read_bytes()


def test_report_from_results(run_dir, tmp_path, capsys):
    out = tmp_path / "report"
    argv = ["report", str(run_dir / "results.csv"), "--statistic", "MCC", "--by-type", "--out", str(out)]
    assert main(argv) == 0
    curve = pd.read_csv(out / "curves" / "curves_mcc.csv")
    assert curve["grid"].iloc[0] == -1.0 and curve["grid"].iloc[-1] == 1.0
    for system_type in ("AND", "OR", "XOR", "MIX", "LHA"):
        assert (out / "curves" / f"curves_mcc_{system_type}.csv").exists()
    summary = pd.read_csv(out / "summary.csv")
    assert summary["metric"].tolist() == ["Ham", "Tmt", "Cls", "Cos", "Cov", "Dep"]

    assert main(["report", str(run_dir / "results.csv"), "--statistic", "f1", "--out", str(out)]) == 2
    error = _error(capsys)
    assert error["code"] == "USAGE_ERROR"
    assert "bacc" in error["message"]


def test_config_file_and_env(tmp_path, settings_env):
    config_file = tmp_path / "bitrel.env"
    config_file.write_text("BITREL_SYSTEMS=3\nBITREL_SEED=9\n")
    settings_env.setenv("BITREL_SYSTEMS", "4")
    out = tmp_path / "cfg"
    assert main(["gen", "--config", str(config_file), "--out", str(out)]) == 0
    assert len(list((out / "specs").glob("*.spec"))) == 4
    assert main(["gen", "--config", str(config_file), "--systems", "2", "--out", str(tmp_path / "flag")]) == 0
    assert len(list((tmp_path / "flag" / "specs").glob("*.spec"))) == 2


def test_failed_run_leaves_marker(tmp_path, settings_env, mocker, capsys):
    mocker.patch("bitrel.services.pipeline.report", side_effect=RuntimeError("disk on fire"))
    out = tmp_path / "broken"
    argv = ["run", "--systems", "2", "--samples", "100", "--jobs", "1", "--out", str(out)]
    assert main(argv) == 1
    marker = orjson.loads((out / "FAILED").read_bytes())
    assert marker["code"] == "INTERNAL_ERROR"
    assert "disk on fire" in marker["message"]
    # partial outputs stay on disk
    assert (out / "results.csv").exists()
    assert _error(capsys)["code"] == "INTERNAL_ERROR"


def _systems_processed(path) -> float:
    families = text_string_to_metric_families(path.read_text())
    family = next(f for f in families if f.name.startswith("bitrel_systems_processed"))
    return sum(sample.value for sample in family.samples if sample.name.endswith("_total"))


def test_each_run_reports_its_own_metrics(tmp_path, settings_env):
    for name in ("first", "second"):
        out = tmp_path / name
        argv = ["run", "--systems", "3", "--samples", "64", "--jobs", "1", "--out", str(out)]
        assert main(argv) == 0
        assert _systems_processed(out / "metrics.prom") == 3.0


def test_score_half_matrix_is_uninformed(corpus):
    spec_path = corpus / "specs" / "sys_0001.spec"
    m = orjson.loads(spec_path.read_bytes())
    m = m["m_src"] + m["m_dst"]
    matrix = corpus / "matrices" / "half.Ham.csv"
    matrix.parent.mkdir(parents=True, exist_ok=True)
    matrix.write_text("\n".join(",".join("" if i == j else "0.5" for j in range(m)) for i in range(m)) + "\n")
    assert main(["score", str(spec_path), str(matrix), "--out", str(corpus)]) == 0
    record = orjson.loads((corpus / "results" / "sys_0001.results.json").read_bytes())
    stats = record["results"][0]["stats"]
    assert stats["tpr"] == 0.5 and stats["tnr"] == 0.5
    assert stats["bmi"] == 0.0


def test_window_from_environment(tmp_path, settings_env):
    trace = tmp_path / "w.csv"
    trace.write_text("2,4\n1,1,0,1\n1,1,1,0\n")
    settings_env.setenv("BITREL_WINDOW", "0:2")
    assert main(["est", str(trace), "--metrics", "Ham", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "matrices" / "w.Ham.csv").read_text().splitlines()[0] == ",1.0"
    # the flag still wins over the environment
    assert main(["est", str(trace), "--metrics", "Ham", "--window", "0:4", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "matrices" / "w.Ham.csv").read_text().splitlines()[0] == ",0.5"
