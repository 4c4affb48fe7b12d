"""Log-binned friend-distance distributions and power-law fits in log-log space.

The double power law is fitted by exhaustive search over bin edges for the
separation point, with an independent least-squares line on each side. A
single power law over all bins is always fitted as well, and the double law
is only reported when it cuts the residual sum of squares by more than the
improvement threshold.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
import numpy as np

DEFAULT_BINS_PER_DECADE = 10
DEFAULT_MIN_BINS_PER_SEGMENT = 5
DEFAULT_IMPROVEMENT_THRESHOLD = 0.5
# Bins with fewer samples than this carry log-density noise large enough to
# drag the tail exponent; they are kept in the table but not regressed.
DEFAULT_MIN_COUNT = 5
# A single-law RSS at or below this is rounding noise: the data are an exact
# power law and no split can genuinely improve on it.
EXACT_RSS = 1e-20


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class BinnedDistribution:
    edges: np.ndarray
    centers: np.ndarray
    counts: np.ndarray
    densities: np.ndarray
    n_total: int

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def n_bins(self) -> int:
        return len(self.centers)

    def eligible(self, min_count: int = DEFAULT_MIN_COUNT) -> np.ndarray:
        """Indices of bins that enter a regression; empty bins never do."""
        return np.flatnonzero((self.counts >= max(min_count, 1)) & (self.densities > 0))


@dataclass(frozen=True)
class PowerLawSegment:
    gamma: float
    log_c: float
    rss: float
    n_bins: int
    gamma_stderr: float = float("nan")

    def density(self, d):
        return 10.0 ** (self.log_c - self.gamma * np.log10(d))


@dataclass(frozen=True)
class DoublePowerLawFit:
    intra: PowerLawSegment
    inter: PowerLawSegment
    d_s: float
    d_s_index: int
    rss_total: float
    single_fallback: PowerLawSegment
    model_choice: str
    improvement_threshold: float = DEFAULT_IMPROVEMENT_THRESHOLD

    @property
    def gamma1(self) -> float:
        return self.intra.gamma

    @property
    def gamma2(self) -> float:
        return self.inter.gamma

    def density(self, d):
        d = np.asarray(d, dtype=float)
        return np.where(d < self.d_s, self.intra.density(d), self.inter.density(d))


def log_edges(bins_per_decade: int, d_min: float, d_max: float) -> np.ndarray:
    if bins_per_decade < 1:
        raise ValueError("bins_per_decade must be >= 1")
    if not (0 < d_min < d_max) or not math.isfinite(d_max):
        raise ValueError(f"invalid range d_min={d_min}, d_max={d_max}")
    n = max(1, math.ceil(math.log10(d_max / d_min) * bins_per_decade - 1e-9))
    edges = d_min * 10.0 ** (np.arange(n + 1) / bins_per_decade)
    edges[0] = d_min
    edges[-1] = max(edges[-1], d_max)
    return edges


def log_bin(distances, bins_per_decade: int = DEFAULT_BINS_PER_DECADE, d_min: float = 0.1,
            d_max: float = 1000.0) -> BinnedDistribution:
    """Histogram distances on geometric bins and normalise to a per-km density.

    Values below ``d_min`` fall in the first bin and values above ``d_max`` in
    the last. Bins are closed on the left; the last bin is closed on both sides.
    """
    d = np.asarray(distances, dtype=float).ravel()
    if d.size == 0:
        raise ValueError("no distances to bin")
    if not np.all(np.isfinite(d)) or np.any(d < 0):
        raise ValueError("distances must be finite and non-negative")
    edges = log_edges(bins_per_decade, d_min, d_max)
    n_bins = len(edges) - 1
    idx = np.clip(np.searchsorted(edges, d, side="right") - 1, 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    densities = counts / (d.size * np.diff(edges))
    centers = np.sqrt(edges[:-1] * edges[1:])
    return BinnedDistribution(edges, centers, counts, densities, int(d.size))


def _ols(x: np.ndarray, y: np.ndarray) -> PowerLawSegment:
    m = len(x)
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    slope = float(dx @ (y - ym)) / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    rss = float(resid @ resid)
    stderr = math.sqrt(rss / (m - 2) / sxx) if m > 2 else float("nan")
    return PowerLawSegment(-slope, float(intercept), rss, m, stderr)


def _loglog(binned: BinnedDistribution, idx: np.ndarray):
    return np.log10(binned.centers[idx]), np.log10(binned.densities[idx])


def fit_single_power_law(binned: BinnedDistribution, bin_range: tuple[int, int] | None = None,
                         min_count: int = DEFAULT_MIN_COUNT) -> PowerLawSegment:
    """Least-squares line through log10(density) vs log10(center) over ``bin_range`` (half-open)."""
    lo, hi = bin_range if bin_range is not None else (0, binned.n_bins)
    idx = binned.eligible(min_count)
    idx = idx[(idx >= lo) & (idx < hi)]
    if len(idx) < 2:
        raise FitError(f"need at least 2 usable bins in [{lo}, {hi}), found {len(idx)}")
    return _ols(*_loglog(binned, idx))


def model_selection(single: PowerLawSegment, double: "DoublePowerLawFit | float",
                    improvement_threshold: float = DEFAULT_IMPROVEMENT_THRESHOLD) -> str:
    """Pick ``"double"`` only if its total RSS beats the single fit by the threshold fraction."""
    rss = double.rss_total if isinstance(double, DoublePowerLawFit) else float(double)
    if single.rss <= EXACT_RSS:
        return "single"
    return "double" if rss < (1.0 - improvement_threshold) * single.rss else "single"


def fit_double_power_law(binned: BinnedDistribution,
                         min_bins_per_segment: int = DEFAULT_MIN_BINS_PER_SEGMENT,
                         improvement_threshold: float = DEFAULT_IMPROVEMENT_THRESHOLD,
                         min_count: int = DEFAULT_MIN_COUNT) -> DoublePowerLawFit:
    if min_bins_per_segment < 2:
        raise ValueError("min_bins_per_segment must be >= 2")
    idx = binned.eligible(min_count)
    if len(idx) < 2 * min_bins_per_segment:
        raise FitError(f"need at least {2 * min_bins_per_segment} usable bins, found {len(idx)}")
    x, y = _loglog(binned, idx)

    best = None
    for k in range(1, binned.n_bins):
        split = int(np.searchsorted(idx, k))  # eligible bins left of edge k
        if split < min_bins_per_segment or len(idx) - split < min_bins_per_segment:
            continue
        left, right = _ols(x[:split], y[:split]), _ols(x[split:], y[split:])
        total = left.rss + right.rss
        if best is None or total < best[0]:
            best = (total, k, left, right)
    total, k, left, right = best

    single = _ols(x, y)
    return DoublePowerLawFit(
        intra=left, inter=right, d_s=float(binned.edges[k]), d_s_index=k, rss_total=total,
        single_fallback=single, model_choice=model_selection(single, total, improvement_threshold),
        improvement_threshold=improvement_threshold,
    )


def write_distribution(binned: BinnedDistribution, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("edge_lo\tedge_hi\tcenter\tcount\tdensity\n")
        for i in range(binned.n_bins):
            fh.write(f"{binned.edges[i]!r}\t{binned.edges[i + 1]!r}\t{binned.centers[i]!r}\t"
                     f"{int(binned.counts[i])}\t{binned.densities[i]!r}\n")


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    return value


def fit_record(fit: DoublePowerLawFit, **settings) -> dict:
    """Plain-dict form of a fit, ready for JSON."""
    rec = {
        "model_choice": fit.model_choice,
        "gamma1": fit.gamma1,
        "gamma2": fit.gamma2,
        "d_s_km": fit.d_s,
        "intra": asdict(fit.intra),
        "inter": asdict(fit.inter),
        "rss_total": fit.rss_total,
        "single": asdict(fit.single_fallback),
        "improvement_threshold": fit.improvement_threshold,
    }
    rec.update(settings)
    return _clean(rec)


def write_fit(fit: DoublePowerLawFit, path: str | Path, **settings) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(fit_record(fit, **settings), fh, indent=2, sort_keys=True)
        fh.write("\n")
