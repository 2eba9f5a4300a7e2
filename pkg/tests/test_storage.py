import numpy as np
import orjson
import pandas as pd
import pytest

from bitrel.core import storage
from bitrel.exceptions.custom_exceptions import ParseError, StorageError, UsageError
from bitrel.models.schemas import MetricKind, Statistic
from bitrel.services.bitseries import BitSeries, Weighting
from bitrel.services.evaluation import score_system
from bitrel.services.metrics import score_matrices
from bitrel.services.sysgen import draw_system, sample_traces


def test_spec_round_trip(tmp_path):
    spec = draw_system(3, 9)
    path = tmp_path / "sys_0009.spec"
    storage.write_spec(spec, path)
    assert storage.read_spec(path) == spec
    # indented, key-sorted text
    text = path.read_text()
    assert text.startswith("{\n")
    assert list(orjson.loads(text)) == sorted(orjson.loads(text))


def test_malformed_spec_reports_position(tmp_path):
    path = tmp_path / "bad.spec"
    path.write_text('{\n  "m_src": 2,\n  oops\n}\n')
    with pytest.raises(ParseError) as excinfo:
        storage.read_spec(path)
    assert excinfo.value.details["line"] == 3


def test_invalid_spec_reports_field(tmp_path):
    payload = orjson.loads(orjson.dumps(draw_system(0, 0).model_dump(mode="json")))
    payload["m_src"] = 0
    path = tmp_path / "bad.spec"
    path.write_bytes(orjson.dumps(payload))
    with pytest.raises(ParseError) as excinfo:
        storage.read_spec(path)
    assert excinfo.value.details["field"] == "m_src"


@pytest.mark.parametrize("suffix", [".csv", ".btr"])
def test_trace_round_trip(tmp_path, suffix):
    traces = sample_traces(draw_system(1, 2), 77)
    path = tmp_path / f"t{suffix}"
    storage.write_traces(traces, path)
    assert storage.read_traces(path) == traces


def test_trace_headers(tmp_path, series):
    traces = [series("10110"), series("00001")]
    storage.write_traces(traces, tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text() == "2,5\n1,0,1,1,0\n0,0,0,0,1\n"
    storage.write_traces(traces, tmp_path / "t.btr")
    raw = (tmp_path / "t.btr").read_bytes()
    assert raw[:4] == b"BTR1"
    assert raw[4:16] == (2).to_bytes(4, "little") + (5).to_bytes(8, "little")
    assert raw[16:] == bytes([0b01101, 0b10000])


def test_trace_parse_errors(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("2,3\n1,0,1\n1,2,1\n")
    with pytest.raises(ParseError) as excinfo:
        storage.read_traces(path)
    assert excinfo.value.details["line"] == 3

    path.write_text("x,3\n1,0,1\n")
    with pytest.raises(ParseError):
        storage.read_traces(path)

    btr = tmp_path / "t.btr"
    btr.write_bytes(b"NOPE" + bytes(12))
    with pytest.raises(ParseError) as excinfo:
        storage.read_traces(btr)
    assert excinfo.value.details["field"] == "magic"


def test_trace_extension_and_missing_file(tmp_path):
    with pytest.raises(UsageError):
        storage.read_traces(tmp_path / "t.txt")
    with pytest.raises(StorageError):
        storage.read_traces(tmp_path / "missing.btr")


@pytest.mark.parametrize("suffix", [".csv", ".json"])
def test_matrix_round_trip(tmp_path, series, suffix):
    traces = [series("0000"), series("0000"), series("1100"), series("1110")]
    matrix = score_matrices(traces, Weighting.uniform(4), [MetricKind.TMT])[MetricKind.TMT]
    path = storage.matrix_path(tmp_path, "sys_0000", MetricKind.TMT, suffix)
    assert path.name == f"sys_0000.Tmt{suffix}"
    storage.write_matrix(matrix, path)
    restored = storage.read_matrix(path)
    assert restored.kind == MetricKind.TMT
    assert np.array_equal(restored.values, matrix.values, equal_nan=True)


def test_matrix_csv_layout(tmp_path, series):
    matrix = score_matrices([series("1110"), series("1100"), series("0000")], Weighting.uniform(4),
                            [MetricKind.COV, MetricKind.DEP])
    path = tmp_path / "s.Dep.csv"
    storage.write_matrix(matrix[MetricKind.DEP], path)
    rows = path.read_text().splitlines()
    assert rows[0] == ",0.25,nan"
    assert rows[1].split(",")[1] == ""


def test_matrix_must_be_symmetric(tmp_path):
    path = tmp_path / "s.Ham.csv"
    path.write_text(",0.5\n0.25,\n")
    with pytest.raises(ParseError):
        storage.read_matrix(path)
    path = tmp_path / "s.Bogus.csv"
    path.write_text(",0.5\n0.5,\n")
    with pytest.raises(ParseError):
        storage.read_matrix(path)


def test_results_round_trip(tmp_path, drawn_system):
    spec, traces = drawn_system
    record = score_system(spec, traces, Weighting.uniform(traces[0].n))
    path = tmp_path / "r.results.json"
    storage.write_system_results(record, path)
    assert storage.read_system_results(path) == record

    frame = storage.results_frame([record])
    assert list(frame.columns) == storage.RESULT_COLUMNS
    assert frame["metric"].tolist() == [k.value for k in MetricKind]
    storage.write_csv(frame, tmp_path / "results.csv")
    table = storage.read_results_csv([tmp_path / "results.csv"])
    assert table["tp"].tolist() == frame["tp"].tolist()


def test_results_csv_missing_columns(tmp_path):
    path = tmp_path / "results.csv"
    path.write_text("ordinal,type,metric\n0,AND,Ham\n")
    with pytest.raises(ParseError) as excinfo:
        storage.read_results_csv([path])
    assert excinfo.value.details["field"] == "tp"


def test_curve_path(tmp_path):
    assert storage.curve_path(tmp_path, Statistic.MCC, ".svg").name == "curves_mcc.svg"
    assert storage.curve_path(tmp_path, Statistic.ACC, ".csv", "LHA").name == "curves_acc_LHA.csv"


def test_unwritable_path_is_storage_error(tmp_path, series):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(StorageError) as excinfo:
        storage.write_traces([series("1")], blocker / "t.csv")
    assert excinfo.value.details["path"].endswith("t.csv")


def test_results_csv_floats_are_exact(tmp_path):
    awkward = [113.45200000000001, 0.1 + 0.2, 1 / 3, 2.0 ** -40]
    rows = [{column: 0 for column in storage.RESULT_COLUMNS} for _ in awkward]
    for row, value in zip(rows, awkward):
        row.update(type="XOR", metric="Cov", tp=value, mcc=value)
    storage.write_csv(pd.DataFrame(rows, columns=storage.RESULT_COLUMNS), tmp_path / "results.csv")
    table = storage.read_results_csv([tmp_path / "results.csv"])
    assert table["tp"].tolist() == awkward
    assert table["mcc"].tolist() == awkward


def test_matrix_csv_cell_errors(tmp_path):
    path = tmp_path / "s.Cov.csv"
    path.write_text(",0.5,0.1\n0.5,,x\n0.1,x,\n")
    with pytest.raises(ParseError) as excinfo:
        storage.read_matrix(path)
    assert excinfo.value.details["line"] == 2
    assert excinfo.value.details["field"] == 3

    path.write_text(",0.5,0.1\n0.5,\n0.1,0.2,\n")
    with pytest.raises(ParseError):
        storage.read_matrix(path)

    path.write_text(",0.5\n0.5,\n0.5,0.5\n")
    with pytest.raises(ParseError):
        storage.read_matrix(path)
