import time
from contextlib import contextmanager
from pathlib import Path

from prometheus_client import CollectorRegistry, Counter, Histogram, write_to_textfile

# Batch-job metrics live in their own registry and are dumped to a textfile
REGISTRY = CollectorRegistry()

SYSTEMS_PROCESSED = Counter(
    'bitrel_systems_processed_total',
    'Systems taken through the full pipeline',
    ['system_type'],
    registry=REGISTRY,
)

UNDEFINED_CELLS = Counter(
    'bitrel_undefined_cells_total',
    'Off-diagonal score matrix cells with an undefined metric value',
    ['metric'],
    registry=REGISTRY,
)

STAGE_DURATION = Histogram(
    'bitrel_stage_duration_seconds',
    'Pipeline stage duration in seconds',
    ['stage'],
    registry=REGISTRY,
)


@contextmanager
def stage_timer(timings: dict, stage: str):
    """Accumulate the wall time of a block into timings[stage]."""
    start_time = time.perf_counter()
    try:
        yield
    finally:
        timings[stage] = timings.get(stage, 0.0) + time.perf_counter() - start_time


def observe_timings(timings: dict):
    for stage, seconds in timings.items():
        STAGE_DURATION.labels(stage=stage).observe(seconds)


def write_metrics(path: Path):
    write_to_textfile(str(path), REGISTRY)


def reset_metrics():
    """Drop every labelled sample so a run's textfile holds only that run."""
    for collector in (SYSTEMS_PROCESSED, UNDEFINED_CELLS, STAGE_DURATION):
        collector.clear()
