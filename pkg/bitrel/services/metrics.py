"""The six pairwise relationship metrics and the score matrix built from them.

All metrics are functions of three weighted expectations: E[fx], E[fy] and
E[fx*fy] (for binary data E[|fx-fy|] = E[fx] + E[fy] - 2 E[fx*fy]). The same
array formulas serve both the per-pair functions and the all-pairs score
matrix, so both paths agree cell for cell. Undefined outcomes are ``None`` in
the scalar API and NaN inside a :class:`ScoreMatrix`.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import structlog

from bitrel.exceptions.custom_exceptions import UsageError
from bitrel.models.schemas import MetricKind
from bitrel.services.bitseries import (
    BitSeries,
    Weighting,
    WeightingKind,
    expectation,
    expectation_absdiff,
    expectation_product,
)

logger = structlog.get_logger(__name__)

MetricValue = Optional[float]


# Array formulas. Arguments broadcast; NaN marks an undefined cell.

def _ham(ex, ey, exy, eabs):
    return 1.0 - eabs


def _tmt(ex, ey, exy, eabs):
    union = ex + ey - exy
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(union > 0, exy / np.where(union > 0, union, 1.0), np.nan)


def _cls(ex, ey, exy, eabs):
    # |fx - fy|^2 == |fx - fy| for binary samples
    return 1.0 - np.sqrt(eabs)


def _cos(ex, ey, exy, eabs):
    # f^2 == f for binary samples
    norm = np.sqrt(ex * ey)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where((ex > 0) & (ey > 0), exy / np.where(norm > 0, norm, 1.0), np.nan)


def _cov(ex, ey, exy, eabs):
    return 4.0 * np.abs(exy - ex * ey)


def _dep(ex, ey, exy, eabs):
    with np.errstate(divide="ignore", invalid="ignore"):
        value = 1.0 - (ex * ey) / np.where(exy > 0, exy, 1.0)
    # negative dependence is clamped to keep the [0, 1] codomain
    return np.where(exy > 0, np.maximum(value, 0.0), np.nan)


FORMULAS: Dict[MetricKind, Callable] = {
    MetricKind.HAM: _ham,
    MetricKind.TMT: _tmt,
    MetricKind.CLS: _cls,
    MetricKind.COS: _cos,
    MetricKind.COV: _cov,
    MetricKind.DEP: _dep,
}


def _evaluate(kind: MetricKind, ex, ey, exy, eabs) -> np.ndarray:
    values = np.asarray(FORMULAS[kind](ex, ey, exy, eabs), dtype=np.float64)
    # rounding can push a defined score a few ulps outside [0, 1]
    return np.clip(values, 0.0, 1.0)


def _as_value(value) -> MetricValue:
    value = float(value)
    return None if np.isnan(value) else value


def metric(kind: MetricKind, fx: BitSeries, fy: BitSeries, w: Weighting) -> MetricValue:
    """Score one pair with the packed expectations."""
    ex = expectation(fx, w)
    ey = expectation(fy, w)
    exy = expectation_product(fx, fy, w)
    eabs = expectation_absdiff(fx, fy, w)
    return _as_value(_evaluate(kind, ex, ey, exy, eabs))


def cond_expectation(fx: BitSeries, fy: BitSeries, w: Weighting) -> MetricValue:
    """E[fx | fy] = E[fx*fy] / E[fy]; undefined when E[fy] = 0."""
    ey = expectation(fy, w)
    if ey == 0:
        return None
    return min(expectation_product(fx, fy, w) / ey, 1.0)


def ham(fx: BitSeries, fy: BitSeries, w: Weighting) -> MetricValue:
    return metric(MetricKind.HAM, fx, fy, w)


def tmt(fx: BitSeries, fy: BitSeries, w: Weighting) -> MetricValue:
    return metric(MetricKind.TMT, fx, fy, w)


def cls(fx: BitSeries, fy: BitSeries, w: Weighting) -> MetricValue:
    return metric(MetricKind.CLS, fx, fy, w)


def cos(fx: BitSeries, fy: BitSeries, w: Weighting) -> MetricValue:
    return metric(MetricKind.COS, fx, fy, w)


def cov(fx: BitSeries, fy: BitSeries, w: Weighting) -> MetricValue:
    return metric(MetricKind.COV, fx, fy, w)


def dep(fx: BitSeries, fy: BitSeries, w: Weighting) -> MetricValue:
    return metric(MetricKind.DEP, fx, fy, w)


def naive_metric(kind: MetricKind, x: Sequence[int], y: Sequence[int], weights: Sequence[float]) -> MetricValue:
    """Reference evaluation straight from the per-sample definitions."""
    total = sum(weights)
    if len(x) != len(y) or len(x) != len(weights) or total <= 0:
        raise UsageError(message="Samples and weights must have equal length and a positive weight sum")
    ex = sum(w * a for w, a in zip(weights, x)) / total
    ey = sum(w * b for w, b in zip(weights, y)) / total
    exy = sum(w * a * b for w, a, b in zip(weights, x, y)) / total
    eabs = sum(w * abs(a - b) for w, a, b in zip(weights, x, y)) / total
    esq = sum(w * (a - b) ** 2 for w, a, b in zip(weights, x, y)) / total
    ex2 = sum(w * a * a for w, a in zip(weights, x)) / total
    ey2 = sum(w * b * b for w, b in zip(weights, y)) / total

    if kind == MetricKind.HAM:
        return 1.0 - eabs
    if kind == MetricKind.TMT:
        union = ex + ey - exy
        return None if union == 0 else exy / union
    if kind == MetricKind.CLS:
        return 1.0 - esq ** 0.5
    if kind == MetricKind.COS:
        if ex2 == 0 or ey2 == 0:
            return None
        return exy / (ex2 ** 0.5 * ey2 ** 0.5)
    if kind == MetricKind.COV:
        return 4.0 * abs(exy - ex * ey)
    if exy == 0:
        return None
    return max(0.0, 1.0 - ex * ey / exy)


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    """Symmetric m x m estimated adjacency. The diagonal is excluded and stored as NaN."""

    kind: MetricKind
    values: np.ndarray

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def off_diagonal(self) -> np.ndarray:
        return ~np.eye(self.m, dtype=bool)

    def undefined_cells(self) -> int:
        """Number of unordered pairs with an undefined score."""
        return int(np.isnan(self.values[np.triu_indices(self.m, k=1)]).sum())

    def get(self, i: int, j: int) -> MetricValue:
        if i == j:
            raise UsageError(message="The diagonal of a score matrix is excluded", details={"i": i})
        return _as_value(self.values[i, j])


def _moments(traces: Sequence[BitSeries], w: Weighting):
    """Weighted first moments and the upper-triangle Gram matrix of a trace set."""
    bits = np.stack([t.to_bits() for t in traces]).astype(np.float64)
    if w.kind == WeightingKind.UNIFORM:
        weighted = bits
    else:
        weighted = bits * w.weights
    total = w.total
    singles = weighted.sum(axis=1)
    gram = np.triu(bits @ weighted.T)
    # mirror so each unordered pair is computed exactly once
    gram = gram + np.triu(gram, 1).T
    absdiff = np.maximum(singles[:, None] + singles[None, :] - 2.0 * gram, 0.0)
    return singles / total, gram / total, absdiff / total


def score_matrices(traces: List[BitSeries], w: Weighting, kinds: Sequence[MetricKind]) -> Dict[MetricKind, ScoreMatrix]:
    """Score every pair of traces with each requested metric from one moment pass."""
    if len(traces) < 2:
        raise UsageError(message="Scoring needs at least two nodes", details={"m": len(traces)})
    for trace in traces:
        if trace.n != w.n:
            raise UsageError(message="Series and weighting lengths differ",
                             details={"lengths": sorted({t.n for t in traces} | {w.n})})
    e, exy, eabs = _moments(traces, w)
    ex, ey = e[:, None], e[None, :]
    m = len(traces)
    matrices = {}
    for kind in kinds:
        values = _evaluate(kind, ex, ey, exy, eabs)
        values[np.diag_indices(m)] = np.nan
        values.flags.writeable = False
        matrices[kind] = ScoreMatrix(kind=kind, values=values)
        logger.debug("score_matrix_built", metric=kind.value, m=m, undefined=matrices[kind].undefined_cells())
    return matrices


def score_matrix(traces: List[BitSeries], w: Weighting, kind: MetricKind) -> ScoreMatrix:
    return score_matrices(traces, w, [kind])[kind]
