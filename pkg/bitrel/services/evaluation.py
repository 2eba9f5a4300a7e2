"""Soft confusion counts of an estimated adjacency against the known one.

Each ordered off-diagonal cell contributes min(K, E) to TP, min(1-K, E) to
FP, min(K, 1-E) to FN and min(1-K, 1-E) to TN, so no threshold is needed.
"""

import math
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import structlog

from bitrel.exceptions.custom_exceptions import UsageError
from bitrel.models.schemas import (
    ConfusionCounts,
    MetricKind,
    MetricResult,
    StatSet,
    Statistic,
    SystemResults,
    SystemSpec,
    UndefinedPolicy,
)
from bitrel.services.bitseries import BitSeries, Weighting
from bitrel.services.metrics import ScoreMatrix, score_matrices
from bitrel.services.sysgen import KnownAdjacency, known_adjacency

logger = structlog.get_logger(__name__)


def confusion(
    known: KnownAdjacency,
    estimate: ScoreMatrix,
    policy: UndefinedPolicy = UndefinedPolicy.ZERO,
) -> ConfusionCounts:
    if known.m != estimate.m:
        raise UsageError(
            message=f"Known adjacency is {known.m}x{known.m} but the score matrix is {estimate.m}x{estimate.m}",
            details={"known": known.m, "estimate": estimate.m},
        )
    cells = ~np.eye(known.m, dtype=bool)
    k = known.entries[cells].astype(np.float64)
    e = estimate.values[cells]
    undefined = np.isnan(e)
    if policy == UndefinedPolicy.SKIP:
        k, e = k[~undefined], e[~undefined]
    else:
        # an undefined score is "no evidence of connection"
        e = np.where(undefined, 0.0, e)
    return ConfusionCounts(
        tp=float(np.minimum(k, e).sum()),
        fp=float(np.minimum(1.0 - k, e).sum()),
        fn=float(np.minimum(k, 1.0 - e).sum()),
        tn=float(np.minimum(1.0 - k, 1.0 - e).sum()),
    )


def _ratio(numerator: float, denominator: float) -> Optional[float]:
    if denominator == 0:
        return None
    return numerator / denominator


def statistics(c: ConfusionCounts) -> StatSet:
    tpr = _ratio(c.tp, c.tp + c.fn)
    tnr = _ratio(c.tn, c.tn + c.fp)
    both = tpr is not None and tnr is not None
    denominator = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    mcc = None
    if denominator > 0:
        mcc = (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denominator)
        mcc = min(max(mcc, -1.0), 1.0)
    return StatSet(
        tpr=tpr,
        tnr=tnr,
        ppv=_ratio(c.tp, c.tp + c.fp),
        npv=_ratio(c.tn, c.tn + c.fn),
        acc=_ratio(c.tp + c.tn, c.tp + c.fn + c.tn + c.fp),
        bacc=(tpr + tnr) / 2 if both else None,
        bmi=tpr + tnr - 1 if both else None,
        mcc=mcc,
    )


def score_matrices_against(
    spec: SystemSpec,
    matrices: Dict[MetricKind, ScoreMatrix],
    policy: UndefinedPolicy = UndefinedPolicy.ZERO,
) -> SystemResults:
    known = known_adjacency(spec)
    results: List[MetricResult] = []
    for kind in MetricKind:
        if kind not in matrices:
            continue
        counts = confusion(known, matrices[kind], policy)
        results.append(MetricResult(metric=kind, counts=counts, stats=statistics(counts)))
    return SystemResults(
        ordinal=spec.ordinal,
        system_type=spec.system_type,
        m_src=spec.m_src,
        m_dst=spec.m_dst,
        seed=spec.seed,
        results=results,
    )


def score_system(
    spec: SystemSpec,
    traces: List[BitSeries],
    w: Weighting,
    policy: UndefinedPolicy = UndefinedPolicy.ZERO,
    kinds: Sequence[MetricKind] = tuple(MetricKind),
) -> SystemResults:
    if len(traces) != spec.m:
        raise UsageError(message=f"System has {spec.m} nodes but {len(traces)} traces were given",
                         details={"m": spec.m, "traces": len(traces)})
    matrices = score_matrices(traces, w, kinds)
    record = score_matrices_against(spec, matrices, policy)
    logger.debug("system_scored", ordinal=spec.ordinal, system_type=spec.system_type.value, m=spec.m)
    return record


def summarize(results: pd.DataFrame) -> pd.DataFrame:
    """Per-metric mean of every statistic, with the usefulness criterion.

    A metric is useful when its mean PPV and mean NPV are positive and its
    mean ACC exceeds 0.5. Undefined statistics are left out of the means.
    """
    columns = [s.value for s in Statistic]
    numeric = results[["metric"] + columns].copy()
    numeric[columns] = numeric[columns].apply(pd.to_numeric, errors="coerce")
    summary = numeric.groupby("metric", sort=False)[columns].mean()
    order = [kind.value for kind in MetricKind if kind.value in summary.index]
    summary = summary.loc[order]
    summary.insert(0, "systems", results.groupby("metric", sort=False).size().loc[order])
    summary["useful"] = (summary["ppv"] > 0) & (summary["npv"] > 0) & (summary["acc"] > 0.5)
    return summary.reset_index()
