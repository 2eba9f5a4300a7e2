"""Reading and writing every artifact the pipeline materializes.

* ``.spec``   SystemSpec as indented, key-sorted JSON
* ``.csv``    traces: a ``m,n`` header line, then one row of n 0/1 values per node
* ``.btr``    traces: ``b"BTR1"``, uint32 m, uint64 n (little-endian), then
              ceil(n/8) LSB-first bytes per node with zero pad bits
* ``<stem>.<Metric>.csv`` / ``.json``  score matrices
* ``.json``   per-system results records; corpus results and curves as CSV
"""

import io
import struct
from pathlib import Path
from typing import Iterable, List, Tuple

import numpy as np
import orjson
import pandas as pd
from pydantic import ValidationError

from bitrel.exceptions.custom_exceptions import ParseError, StorageError, UsageError
from bitrel.models.schemas import MetricKind, Statistic, SystemResults, SystemSpec, TraceFormat
from bitrel.services.bitseries import BitSeries
from bitrel.services.metrics import ScoreMatrix

BTR_MAGIC = b"BTR1"
_BTR_HEADER = struct.Struct("<4sIQ")

RESULT_COLUMNS = [
    "ordinal", "type", "metric", "tp", "fp", "fn", "tn",
    "tpr", "tnr", "ppv", "npv", "acc", "bacc", "bmi", "mcc",
]


def _read_bytes(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as e:
        raise StorageError(message=f"Cannot read {path}: {e.strerror}", details={"path": str(path)}) from e


def write_bytes(path: Path, data: bytes):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    except OSError as e:
        raise StorageError(message=f"Cannot write {path}: {e.strerror}", details={"path": str(path)}) from e


def _dump_json(model) -> bytes:
    return orjson.dumps(model, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS) + b"\n"


# SystemSpec

def write_spec(spec: SystemSpec, path: Path):
    write_bytes(path, _dump_json(spec.model_dump(mode="json")))


def read_spec(path: Path) -> SystemSpec:
    raw = _read_bytes(path)
    try:
        payload = orjson.loads(raw)
    except orjson.JSONDecodeError as e:
        raise ParseError(message=f"Malformed spec file {path}: {e.msg}",
                         details={"path": str(path), "line": e.lineno, "column": e.colno}) from e
    try:
        return SystemSpec.model_validate(payload)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(p) for p in first["loc"]) or "<root>"
        raise ParseError(message=f"Invalid spec file {path}: {field}: {first['msg']}",
                         details={"path": str(path), "field": field}) from e


# Traces

def trace_format(path: Path) -> TraceFormat:
    suffix = path.suffix.lower().lstrip(".")
    try:
        return TraceFormat(suffix)
    except ValueError:
        raise UsageError(message=f"Unknown trace file extension '{path.suffix}', expected .csv or .btr",
                         details={"path": str(path)})


def write_traces(traces: List[BitSeries], path: Path):
    if not traces:
        raise UsageError(message="No traces to write")
    n = traces[0].n
    if any(t.n != n for t in traces):
        raise UsageError(message="All traces in a file must have the same length")
    if trace_format(path) == TraceFormat.BTR:
        body = b"".join(t.to_bytes() for t in traces)
        write_bytes(path, _BTR_HEADER.pack(BTR_MAGIC, len(traces), n) + body)
        return
    lines = [f"{len(traces)},{n}"]
    lines.extend(",".join(t.to_bits().astype(str)) for t in traces)
    write_bytes(path, ("\n".join(lines) + "\n").encode("ascii"))


def _parse_header(line: str, path: Path) -> Tuple[int, int]:
    fields = line.strip().split(",")
    try:
        m, n = (int(value) for value in fields)
    except ValueError:
        raise ParseError(message=f"Trace header must be 'm,n' in {path}",
                         details={"path": str(path), "line": 1}) from None
    if m < 1 or n < 1:
        raise ParseError(message=f"Trace header needs m >= 1 and n >= 1 in {path}",
                         details={"path": str(path), "line": 1})
    return m, n


def read_traces(path: Path) -> List[BitSeries]:
    fmt = trace_format(path)
    raw = _read_bytes(path)
    if fmt == TraceFormat.BTR:
        if len(raw) < _BTR_HEADER.size:
            raise ParseError(message=f"Truncated trace header in {path}", details={"path": str(path), "field": "header"})
        magic, m, n = _BTR_HEADER.unpack_from(raw)
        if magic != BTR_MAGIC:
            raise ParseError(message=f"Not a bitrel trace file: {path}", details={"path": str(path), "field": "magic"})
        record = (n + 7) // 8
        if m < 1 or n < 1 or len(raw) != _BTR_HEADER.size + m * record:
            raise ParseError(message=f"Trace body does not match its header (m={m}, n={n}) in {path}",
                             details={"path": str(path), "field": "body"})
        traces = []
        for node in range(m):
            offset = _BTR_HEADER.size + node * record
            try:
                traces.append(BitSeries.from_bytes(raw[offset:offset + record], n))
            except UsageError as e:
                raise ParseError(message=f"Node {node} in {path}: {e.message}",
                                 details={"path": str(path), "field": f"node {node}"}) from e
        return traces

    lines = raw.decode("ascii", errors="replace").splitlines()
    if not lines:
        raise ParseError(message=f"Empty trace file {path}", details={"path": str(path), "line": 1})
    m, n = _parse_header(lines[0], path)
    rows = [line for line in lines[1:] if line.strip()]
    if len(rows) != m:
        raise ParseError(message=f"Header announces {m} nodes but {path} holds {len(rows)}",
                         details={"path": str(path), "line": len(lines)})
    traces = []
    for index, row in enumerate(rows):
        values = row.strip().split(",")
        if len(values) != n or any(v not in ("0", "1") for v in values):
            raise ParseError(message=f"Row {index + 2} of {path} must hold {n} comma-separated 0/1 values",
                             details={"path": str(path), "line": index + 2})
        traces.append(BitSeries.from_bits(np.array(values) == "1"))
    return traces


# Score matrices

def matrix_path(directory: Path, stem: str, kind: MetricKind, suffix: str = ".csv") -> Path:
    return directory / f"{stem}.{kind.value}{suffix}"


def write_matrix(matrix: ScoreMatrix, path: Path):
    m = matrix.m
    if path.suffix.lower() == ".json":
        values = [
            None if i == j or np.isnan(matrix.values[i, j]) else float(matrix.values[i, j])
            for i in range(m) for j in range(m)
        ]
        write_bytes(path, orjson.dumps({"metric": matrix.kind.value, "m": m, "values": values}) + b"\n")
        return
    # python floats print shortest round-trip; the diagonal stays an empty cell
    cells = matrix.values.astype(object)
    cells[np.diag_indices(m)] = ""
    text = pd.DataFrame(cells).to_csv(header=False, index=False, na_rep="nan", lineterminator="\n")
    write_bytes(path, text.encode("ascii"))


def _kind_from_path(path: Path) -> MetricKind:
    try:
        return MetricKind.parse(Path(path.stem).suffix.lstrip("."))
    except ValueError:
        raise ParseError(message=f"Cannot tell the metric from file name {path.name}; expected <stem>.<Metric>.csv",
                         details={"path": str(path), "field": "name"}) from None


def _read_matrix_csv(raw: bytes, path: Path) -> np.ndarray:
    try:
        frame = pd.read_csv(io.BytesIO(raw), header=None, dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ParseError(message=f"Malformed matrix file {path}: {e}", details={"path": str(path)}) from e
    m = len(frame)
    if frame.shape[1] != m:
        raise ParseError(message=f"{path} has {m} rows of {frame.shape[1]} cells; a score matrix is square",
                         details={"path": str(path)})
    values = np.full((m, m), np.nan)
    for (i, j), cell in np.ndenumerate(frame.to_numpy(dtype=object)):
        if i == j:
            continue
        try:
            if not isinstance(cell, str):
                raise ValueError(cell)
            values[i, j] = float(cell)
        except ValueError:
            raise ParseError(message=f"Cell {j + 1} on row {i + 1} of {path} is not a number: '{cell}'",
                             details={"path": str(path), "line": i + 1, "field": j + 1}) from None
    return values


def read_matrix(path: Path) -> ScoreMatrix:
    raw = _read_bytes(path)
    if path.suffix.lower() == ".json":
        try:
            payload = orjson.loads(raw)
            kind = MetricKind.parse(payload["metric"])
            m = int(payload["m"])
            values = np.array([np.nan if v is None else float(v) for v in payload["values"]]).reshape(m, m)
        except (orjson.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise ParseError(message=f"Malformed matrix file {path}: {e}", details={"path": str(path)}) from e
    else:
        kind = _kind_from_path(path)
        values = _read_matrix_csv(raw, path)
        m = values.shape[0]
    defined = values[~np.isnan(values)]
    if ((defined < 0) | (defined > 1)).any() or not np.array_equal(values, values.T, equal_nan=True):
        raise ParseError(message=f"Score matrix in {path} must be symmetric with scores in [0, 1]",
                         details={"path": str(path)})
    values[np.diag_indices(m)] = np.nan
    values.flags.writeable = False
    return ScoreMatrix(kind=kind, values=values)


# Results

def write_system_results(record: SystemResults, path: Path):
    write_bytes(path, _dump_json(record.model_dump(mode="json")))


def read_system_results(path: Path) -> SystemResults:
    raw = _read_bytes(path)
    try:
        return SystemResults.model_validate_json(raw)
    except ValidationError as e:
        raise ParseError(message=f"Invalid results record {path}", details={"path": str(path)}) from e


def results_frame(records: Iterable[SystemResults]) -> pd.DataFrame:
    rows = []
    for record in sorted(records, key=lambda r: r.ordinal):
        for result in record.results:
            row = {"ordinal": record.ordinal, "type": record.system_type.value, "metric": result.metric.value}
            row.update(result.counts.model_dump())
            row.update(result.stats.model_dump())
            rows.append(row)
    return pd.DataFrame(rows, columns=RESULT_COLUMNS)


def write_csv(frame: pd.DataFrame, path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format="%.17g")
    except OSError as e:
        raise StorageError(message=f"Cannot write {path}: {e.strerror}", details={"path": str(path)}) from e


def read_results_csv(paths: Iterable[Path]) -> pd.DataFrame:
    frames = []
    for path in paths:
        try:
            frame = pd.read_csv(path, float_precision="round_trip")
        except OSError as e:
            raise StorageError(message=f"Cannot read {path}: {e.strerror}", details={"path": str(path)}) from e
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise ParseError(message=f"Malformed results file {path}: {e}", details={"path": str(path)}) from e
        missing = [column for column in RESULT_COLUMNS if column not in frame.columns]
        if missing:
            raise ParseError(message=f"Results file {path} lacks columns: {', '.join(missing)}",
                             details={"path": str(path), "field": missing[0]})
        frames.append(frame[RESULT_COLUMNS])
    if not frames:
        raise UsageError(message="No results files given")
    return pd.concat(frames, ignore_index=True)


def curve_path(directory: Path, statistic: Statistic, suffix: str, system_type: str = "") -> Path:
    tag = f"_{system_type}" if system_type else ""
    return directory / f"curves_{statistic.value}{tag}{suffix}"

