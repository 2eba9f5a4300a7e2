from pathlib import Path
from typing import List, Sequence

import structlog

from bitrel.core import storage
from bitrel.exceptions.custom_exceptions import UsageError
from bitrel.models.schemas import RunConfig, Statistic
from bitrel.services import pipeline
from bitrel.services.evaluation import summarize
from bitrel.ui.tables import console, corpus_table, summary_table

logger = structlog.get_logger(__name__)


def parse_statistic(name: str) -> Statistic:
    try:
        return Statistic(name.lower())
    except ValueError:
        valid = ", ".join(s.value for s in Statistic)
        raise UsageError(message=f"Unknown statistic '{name}'; valid names: {valid}",
                         details={"statistic": name, "valid": [s.value for s in Statistic]}) from None


def _require(paths: Sequence[Path], what: str):
    if not paths:
        raise UsageError(message=f"No {what} given")


# Commands

def cmd_gen(config: RunConfig) -> List[Path]:
    layout = pipeline.RunLayout(config.out)
    paths = pipeline.generate(config.seed, range(config.systems), layout.specs)
    counts = {}
    for path in paths:
        spec = storage.read_spec(path)
        counts[spec.system_type.value] = counts.get(spec.system_type.value, 0) + 1
    logger.info("corpus_generated", systems=len(paths), seed=config.seed, directory=str(layout.specs))
    console.print(corpus_table(counts))
    return paths


def cmd_sim(spec_paths: Sequence[Path], config: RunConfig) -> List[Path]:
    _require(spec_paths, "spec files")
    layout = pipeline.RunLayout(config.out)
    paths = [pipeline.simulate(path, config.samples, config.format, layout.traces) for path in spec_paths]
    for path in paths:
        console.print(str(path), soft_wrap=True)
    return paths


def cmd_est(trace_paths: Sequence[Path], config: RunConfig, as_json: bool = False) -> List[Path]:
    _require(trace_paths, "trace files")
    layout = pipeline.RunLayout(config.out)
    paths = []
    for trace_path in trace_paths:
        undefined = {}
        paths.extend(pipeline.estimate(trace_path, config.metrics, layout.matrices, config.window, as_json, undefined))
        if any(undefined.values()):
            logger.info("undefined_cells", trace=trace_path.name, **undefined)
    for path in paths:
        console.print(str(path), soft_wrap=True)
    return paths


def cmd_score(spec_path: Path, matrix_paths: Sequence[Path], config: RunConfig) -> Path:
    _require(matrix_paths, "matrix files")
    layout = pipeline.RunLayout(config.out)
    record, path = pipeline.score(spec_path, matrix_paths, config.policy, layout.results)
    console.print(summary_table(summarize(storage.results_frame([record])), title=f"System {record.ordinal}"))
    console.print(str(path), soft_wrap=True)
    return path


def cmd_report(
    results_paths: Sequence[Path],
    statistic: Statistic,
    config: RunConfig,
    by_type: bool = False,
    clip_negative: bool = False,
) -> List[pipeline.ReportOutput]:
    _require(results_paths, "results files")
    layout = pipeline.RunLayout(config.out)
    table = storage.read_results_csv(results_paths)
    if table.empty:
        raise UsageError(message="Results files hold no rows")
    outputs = pipeline.report(table, statistic, layout.curves, config.gridpoints, by_type, clip_negative)
    summary = summarize(table)
    storage.write_csv(summary, layout.root / "summary.csv")
    console.print(summary_table(summary))
    for output in outputs:
        console.print(str(output.csv_path), soft_wrap=True)
    return outputs


def cmd_run(config: RunConfig, by_type: bool = False) -> pipeline.RunOutput:
    output = pipeline.run(config, by_type)
    console.print(corpus_table(output.type_counts))
    console.print(summary_table(output.summary))
    console.print(str(output.results_csv), soft_wrap=True)
    return output
