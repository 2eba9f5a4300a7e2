"""Gaussian kernel density curves of per-system statistics."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import structlog

from bitrel.exceptions.custom_exceptions import UsageError
from bitrel.models.schemas import MetricKind, Statistic

logger = structlog.get_logger(__name__)

DEFAULT_GRIDPOINTS = 256
MIN_BANDWIDTH = 1e-3
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
# numpy 2 renamed trapz
_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True, eq=False)
class DensityCurve:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float
    samples: int = 0

    def integral(self) -> float:
        return float(_trapezoid(self.density, self.grid))

    def mean(self) -> float:
        return float(_trapezoid(self.grid * self.density, self.grid))

    def argmax(self) -> float:
        return float(self.grid[int(np.argmax(self.density))])


def bw_silverman(x: np.ndarray) -> float:
    """Silverman's rule, floored so that constant samples still give a finite kernel."""
    x_std = np.std(x)
    q75, q25 = np.percentile(x, [75, 25])
    x_iqr = q75 - q25
    a = min(x_std, x_iqr / 1.34) if x_iqr > 0 else x_std
    bw = 0.9 * a * len(x) ** (-0.2)
    return max(float(bw), MIN_BANDWIDTH)


def kde_estimate(
    samples: Sequence[float],
    domain: Tuple[float, float] = (0.0, 1.0),
    gridpoints: int = DEFAULT_GRIDPOINTS,
    bandwidth: Optional[float] = None,
) -> DensityCurve:
    lo, hi = domain
    if not lo < hi:
        raise UsageError(message="KDE domain must satisfy lo < hi", details={"domain": [lo, hi]})
    if gridpoints < 2:
        raise UsageError(message="KDE needs at least two grid points", details={"gridpoints": gridpoints})
    x = np.asarray(samples, dtype=np.float64)
    x = x[np.isfinite(x)]
    if x.size == 0:
        raise UsageError(message="KDE needs at least one finite sample")

    bw = bw_silverman(x) if bandwidth is None else float(bandwidth)
    grid = np.linspace(lo, hi, gridpoints)
    # reflect the samples about both edges so no mass leaks out of the domain
    centres = np.concatenate([x, 2.0 * lo - x, 2.0 * hi - x])
    z = (grid[:, None] - centres[None, :]) / bw
    density = np.exp(-0.5 * z * z).sum(axis=1) * _INV_SQRT_2PI / (x.size * bw)
    area = _trapezoid(density, grid)
    if area > 0:
        density = density / area
    return DensityCurve(grid=grid, density=density, bandwidth=bw, samples=int(x.size))


@dataclass
class CurveSet:
    statistic: Statistic
    grid: np.ndarray
    curves: Dict[MetricKind, DensityCurve] = field(default_factory=dict)
    missing: List[MetricKind] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"grid": self.grid})
        for kind, curve in self.curves.items():
            frame[kind.value] = curve.density
        return frame


def curves_report(
    results: pd.DataFrame,
    statistic: Statistic,
    gridpoints: int = DEFAULT_GRIDPOINTS,
) -> CurveSet:
    """One density curve per metric over the statistic's natural domain.

    ``results`` is a corpus results table with ``metric`` and statistic
    columns; undefined (NaN) values are left out of each metric's sample.
    """
    if results.empty:
        raise UsageError(message="No scored systems to report on")
    domain = statistic.domain
    curve_set = CurveSet(statistic=statistic, grid=np.linspace(domain[0], domain[1], gridpoints))
    for kind in MetricKind:
        rows = results[results["metric"] == kind.value]
        if rows.empty:
            continue
        values = pd.to_numeric(rows[statistic.value], errors="coerce").dropna().to_numpy()
        if values.size == 0:
            curve_set.missing.append(kind)
            logger.warning("curve_missing", metric=kind.value, statistic=statistic.value,
                           reason="all values undefined")
            continue
        curve_set.curves[kind] = kde_estimate(values, domain, gridpoints)
    return curve_set
