"""File-backed pipeline stages and the corpus run that chains them.

Every stage reads its inputs from disk and writes its outputs to disk, so a
corpus run leaves a complete, re-readable trail:

    <out>/specs/sys_NNNN.spec
    <out>/traces/sys_NNNN.{btr,csv}
    <out>/matrices/sys_NNNN.<Metric>.csv
    <out>/results/sys_NNNN.results.json
    <out>/results.csv
    <out>/curves/curves_<statistic>[_<TYPE>].{csv,svg}
    <out>/summary.csv, <out>/metrics.prom
"""

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import orjson
import pandas as pd
import structlog

from bitrel.core import storage
from bitrel.exceptions.custom_exceptions import BitrelException, InternalError, UsageError
from bitrel.models.schemas import (
    MetricKind,
    RunConfig,
    Statistic,
    SystemResults,
    TraceFormat,
    UndefinedPolicy,
)
from bitrel.services.bitseries import Weighting
from bitrel.services.evaluation import score_matrices_against, summarize
from bitrel.services.kde import CurveSet, curves_report
from bitrel.services.metrics import score_matrices
from bitrel.services.sysgen import draw_system, sample_traces
from bitrel.ui.charts import LinePlot
from bitrel.utils import monitoring
from bitrel.utils.logging import active_options, configure_logging

logger = structlog.get_logger(__name__)

FAILURE_MARKER = "FAILED"


def system_stem(ordinal: int) -> str:
    return f"sys_{ordinal:04d}"


@dataclass(frozen=True)
class RunLayout:
    root: Path

    @property
    def specs(self) -> Path:
        return self.root / "specs"

    @property
    def traces(self) -> Path:
        return self.root / "traces"

    @property
    def matrices(self) -> Path:
        return self.root / "matrices"

    @property
    def results(self) -> Path:
        return self.root / "results"

    @property
    def curves(self) -> Path:
        return self.root / "curves"

    @property
    def results_csv(self) -> Path:
        return self.root / "results.csv"

    @property
    def failure_marker(self) -> Path:
        return self.root / FAILURE_MARKER


def make_weighting(n: int, window: Optional[Tuple[int, int]] = None) -> Weighting:
    if window is None:
        return Weighting.uniform(n)
    return Weighting.window(n, window[0], window[1])


# Stages

def generate(seed: int, ordinals: Sequence[int], out_dir: Path) -> List[Path]:
    paths = []
    for ordinal in ordinals:
        spec = draw_system(seed, ordinal)
        path = out_dir / f"{system_stem(ordinal)}.spec"
        storage.write_spec(spec, path)
        paths.append(path)
    return paths


def simulate(spec_path: Path, samples: int, fmt: TraceFormat, out_dir: Path) -> Path:
    spec = storage.read_spec(spec_path)
    traces = sample_traces(spec, samples)
    path = out_dir / f"{spec_path.stem}.{fmt.value}"
    storage.write_traces(traces, path)
    logger.debug("traces_written", path=str(path), m=len(traces), n=samples)
    return path


def estimate(
    trace_path: Path,
    kinds: Sequence[MetricKind],
    out_dir: Path,
    window: Optional[Tuple[int, int]] = None,
    as_json: bool = False,
    undefined: Optional[Dict[str, int]] = None,
) -> List[Path]:
    """Write one score matrix per metric; undefined cell counts are added to ``undefined``."""
    traces = storage.read_traces(trace_path)
    if len(traces) < 2:
        raise UsageError(message=f"{trace_path} holds {len(traces)} node; estimation needs at least 2",
                         details={"path": str(trace_path), "m": len(traces)})
    matrices = score_matrices(traces, make_weighting(traces[0].n, window), kinds)
    paths = []
    for kind, matrix in matrices.items():
        if undefined is not None:
            undefined[kind.value] = undefined.get(kind.value, 0) + matrix.undefined_cells()
        path = storage.matrix_path(out_dir, trace_path.stem, kind, ".json" if as_json else ".csv")
        storage.write_matrix(matrix, path)
        paths.append(path)
    return paths


def score(spec_path: Path, matrix_paths: Sequence[Path], policy: UndefinedPolicy, out_dir: Path) -> Tuple[SystemResults, Path]:
    spec = storage.read_spec(spec_path)
    matrices = {}
    for path in matrix_paths:
        matrix = storage.read_matrix(path)
        if matrix.m != spec.m:
            raise UsageError(
                message=f"Matrix {path.name} is {matrix.m}x{matrix.m} but {spec_path.name} has {spec.m} nodes",
                details={"matrix": matrix.m, "spec": spec.m, "path": str(path)},
            )
        matrices[matrix.kind] = matrix
    record = score_matrices_against(spec, matrices, policy)
    path = out_dir / f"{spec_path.stem}.results.json"
    storage.write_system_results(record, path)
    storage.write_csv(storage.results_frame([record]), out_dir / f"{spec_path.stem}.results.csv")
    return record, path


@dataclass
class ReportOutput:
    curve_set: CurveSet
    csv_path: Path
    svg_path: Path


def report(
    results: pd.DataFrame,
    statistic: Statistic,
    out_dir: Path,
    gridpoints: int = 256,
    by_type: bool = False,
    clip_negative: bool = False,
) -> List[ReportOutput]:
    groups = [("", results)]
    if by_type:
        groups += [(system_type, frame) for system_type, frame in results.groupby("type", sort=True)]
    outputs = []
    plot = LinePlot()
    for system_type, frame in groups:
        curve_set = curves_report(frame, statistic, gridpoints)
        csv_path = storage.curve_path(out_dir, statistic, ".csv", system_type)
        svg_path = storage.curve_path(out_dir, statistic, ".svg", system_type)
        storage.write_csv(curve_set.to_frame(), csv_path)
        title = f"{statistic.value.upper()} density, {system_type or 'all'} systems"
        plot.write(curve_set, svg_path, title=title, clip_negative=clip_negative)
        outputs.append(ReportOutput(curve_set=curve_set, csv_path=csv_path, svg_path=svg_path))
    return outputs


# Corpus run

SystemOutcome = Tuple[SystemResults, Dict[str, float], Dict[str, int]]


def run_system(config: RunConfig, ordinal: int) -> SystemOutcome:
    """gen -> sim -> est -> score for one system, through files."""
    layout = RunLayout(config.out)
    timings: Dict[str, float] = {}
    undefined: Dict[str, int] = {}
    with monitoring.stage_timer(timings, "gen"):
        spec_path = generate(config.seed, [ordinal], layout.specs)[0]
    with monitoring.stage_timer(timings, "sim"):
        trace_path = simulate(spec_path, config.samples, config.format, layout.traces)
    with monitoring.stage_timer(timings, "est"):
        matrix_paths = estimate(trace_path, config.metrics, layout.matrices, config.window, undefined=undefined)
    with monitoring.stage_timer(timings, "score"):
        record, _ = score(spec_path, matrix_paths, config.policy, layout.results)
    logger.debug("system_done", ordinal=ordinal, system_type=record.system_type.value)
    return record, timings, undefined


def _run_system_job(args) -> SystemOutcome:
    config, ordinal = args
    return run_system(config, ordinal)


def _iter_systems(config: RunConfig):
    jobs = [(config, ordinal) for ordinal in range(config.systems)]
    if config.jobs == 1:
        yield from map(_run_system_job, jobs)
        return
    with ProcessPoolExecutor(
        max_workers=config.jobs,
        initializer=configure_logging,
        initargs=active_options(),
    ) as executor:
        yield from executor.map(_run_system_job, jobs, chunksize=max(1, config.systems // (4 * config.jobs)))


@dataclass
class RunOutput:
    results_csv: Path
    summary: pd.DataFrame
    reports: Dict[Statistic, List[ReportOutput]]
    type_counts: Dict[str, int]


def run(config: RunConfig, by_type: bool = False) -> RunOutput:
    layout = RunLayout(config.out)
    layout.failure_marker.unlink(missing_ok=True)
    try:
        return _run(config, layout, by_type)
    except Exception as e:
        error = e if isinstance(e, BitrelException) else InternalError(message=str(e))
        storage.write_bytes(layout.failure_marker, orjson.dumps(error.to_response().model_dump()) + b"\n")
        logger.error("run_failed", out=str(config.out), code=error.code, error=error.message)
        raise


def _run(config: RunConfig, layout: RunLayout, by_type: bool) -> RunOutput:
    monitoring.reset_metrics()
    logger.info("run_started", seed=config.seed, systems=config.systems, samples=config.samples,
                metrics=[k.value for k in config.metrics], jobs=config.jobs, out=str(config.out))
    records: List[SystemResults] = []
    # join point: all per-system work finishes before any aggregation
    for record, timings, undefined in _iter_systems(config):
        monitoring.observe_timings(timings)
        for metric, cells in undefined.items():
            monitoring.UNDEFINED_CELLS.labels(metric=metric).inc(cells)
        monitoring.SYSTEMS_PROCESSED.labels(system_type=record.system_type.value).inc()
        records.append(record)

    frame = storage.results_frame(records)
    storage.write_csv(frame, layout.results_csv)
    type_counts = dict(sorted(Counter(r.system_type.value for r in records).items()))
    logger.info("corpus_scored", systems=len(records), rows=len(frame), path=str(layout.results_csv))

    # reports read the on-disk table
    table = storage.read_results_csv([layout.results_csv])
    reports = {}
    for statistic in Statistic:
        timings: Dict[str, float] = {}
        with monitoring.stage_timer(timings, "report"):
            reports[statistic] = report(table, statistic, layout.curves, config.gridpoints, by_type)
        monitoring.observe_timings(timings)
    summary = summarize(table)
    storage.write_csv(summary, layout.root / "summary.csv")
    monitoring.write_metrics(layout.root / "metrics.prom")
    logger.info("run_finished", out=str(config.out), curves=sum(len(r) for r in reports.values()))
    return RunOutput(results_csv=layout.results_csv, summary=summary, reports=reports, type_counts=type_counts)
