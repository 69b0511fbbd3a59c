"""Aggregation of CPA records: percentiles, group means and spacing sensitivity."""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .ingest.features import FeatureClass
from .pipeline import CellKey, CellResult, CpaRecord
from .units import NM_TO_M

LEVELS = (0, 5, 25, 50, 75, 95, 100)
PERCENTILE_METHOD = "linear"
HISTOGRAM_BINS = 60


def percentiles(values: Sequence[float], levels: Sequence[float] = LEVELS) -> np.ndarray:
    """Linear interpolation between closest ranks (rank = p/100 * (n - 1))."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("percentiles of an empty sequence are undefined")
    lv = np.asarray(levels, dtype=np.float64)
    if lv.size and (lv.min() < 0 or lv.max() > 100):
        raise ValueError("percentile levels must lie in [0, 100]")
    out = np.percentile(v, lv, method=PERCENTILE_METHOD)
    # interpolation can wobble by an ulp between adjacent equal values
    order = np.argsort(lv, kind="stable")
    out[order] = np.maximum.accumulate(out[order])
    return out


@dataclass(frozen=True)
class PercentileRow:
    location: str
    source_class: FeatureClass
    target_class: FeatureClass
    records: int
    censored: int
    point_pairs: int
    mean_nm: float
    values_nm: tuple[float, ...]
    elapsed_s: float = 0.0

    @property
    def median_nm(self) -> float:
        return self.values_nm[LEVELS.index(50)]


def _distances_nm(cell, include_censored: bool) -> tuple[np.ndarray, int, int]:
    if isinstance(cell, CellResult):
        d = cell.distance_m
        cens = cell.censored
        pairs = cell.point_pairs
    else:
        recs = list(cell)
        d = np.array([r.cpa_distance_m for r in recs], dtype=np.float64)
        cens = np.array([r.censored for r in recs], dtype=bool)
        pairs = sum(r.candidate_count for r in recs)
    if not include_censored:
        d = d[~cens]
    return d / NM_TO_M, int(cens.sum()), int(pairs)


def cell_stats(cell: CellResult | Sequence[CpaRecord], include_censored: bool = True,
               key: CellKey | None = None) -> PercentileRow:
    """Mean and percentile row of one cell, in nautical miles.

    Censored records sit at the range cutoff and are included unless
    ``include_censored`` is false.
    """
    if isinstance(cell, CellResult):
        key = cell.key
        elapsed = cell.elapsed_s
    else:
        cell = list(cell)
        if not cell:
            raise ValueError("a cell with no records has no statistics")
        r0 = cell[0]
        key = key or CellKey(r0.location, r0.source_class, r0.target_class)
        elapsed = 0.0
    nm, ncens, pairs = _distances_nm(cell, include_censored)
    if nm.size == 0:
        raise ValueError(f"cell {key.name} has no records to aggregate")
    mean = math.fsum(nm.tolist()) / nm.size
    vals = percentiles(nm)
    return PercentileRow(key.location, key.source_class, key.target_class, int(len(cell)),
                         ncens, pairs, mean, tuple(float(v) for v in vals), elapsed)


@dataclass(frozen=True)
class MeansRow:
    group: str
    cells: int
    total_point_pairs: int
    weighted_mean_nm: float
    unweighted_mean_nm: float


def group_means(group: str, rows: Sequence[PercentileRow]) -> MeansRow:
    """Unweighted mean of cell means, and the mean weighted by point pairs.

    The weighted mean is NaN when no cell has any point pair in range.
    """
    if not rows:
        raise ValueError("group_means needs at least one cell")
    means = [r.mean_nm for r in rows]
    weights = [r.point_pairs for r in rows]
    wsum = sum(weights)
    weighted = (math.fsum(w * m for w, m in zip(weights, means)) / wsum) if wsum else math.nan
    return MeansRow(group, len(rows), wsum, weighted, math.fsum(means) / len(means))


def pair_label(source: FeatureClass, target: FeatureClass) -> str:
    return f"{source.label}/{target.label}"


def location_means(rows: Iterable[PercentileRow]) -> list[MeansRow]:
    groups: dict[str, list[PercentileRow]] = defaultdict(list)
    for r in rows:
        groups[r.location].append(r)
    return [group_means(k, v) for k, v in sorted(groups.items())]


def pair_means(rows: Iterable[PercentileRow]) -> list[MeansRow]:
    """Means per directed feature pair, across locations."""
    groups: dict[tuple[str, str], list[PercentileRow]] = defaultdict(list)
    for r in rows:
        groups[(r.source_class.name, r.target_class.name)].append(r)
    return [group_means(pair_label(v[0].source_class, v[0].target_class), v)
            for _, v in sorted(groups.items())]


def percent_difference(a: float, b: float) -> float:
    """100 * (a - b) / b."""
    if b == 0:
        raise ValueError("percent difference is undefined for a zero baseline")
    return 100.0 * (a - b) / b


@dataclass(frozen=True)
class SensitivityRow:
    location: str
    source_class: FeatureClass
    target_class: FeatureClass
    pct_diff_point_pairs: float
    pct_diff_compute_time: float
    pct_diff_mean: float
    pct_diff_median: float


def _pct_or_nan(a: float, b: float) -> float:
    return percent_difference(a, b) if b != 0 else math.nan


def sensitivity_compare(cells_a: Mapping[CellKey, CellResult], cells_b: Mapping[CellKey, CellResult],
                        include_censored: bool = True) -> list[SensitivityRow]:
    """Per-cell percent differences of run a relative to baseline run b.

    Columns with a zero baseline (e.g. no recorded timing) are NaN.
    """
    ka, kb = set(cells_a), set(cells_b)
    if ka != kb:
        only_a = sorted(k.name for k in ka - kb)
        only_b = sorted(k.name for k in kb - ka)
        raise ValueError(f"cell sets differ; only in a: {only_a}; only in b: {only_b}")
    out = []
    for key in sorted(ka, key=CellKey.sort_key):
        ra = cell_stats(cells_a[key], include_censored)
        rb = cell_stats(cells_b[key], include_censored)
        out.append(SensitivityRow(
            key.location, key.source_class, key.target_class,
            _pct_or_nan(ra.point_pairs, rb.point_pairs),
            _pct_or_nan(ra.elapsed_s, rb.elapsed_s),
            _pct_or_nan(ra.mean_nm, rb.mean_nm),
            _pct_or_nan(ra.median_nm, rb.median_nm)))
    return out


def histogram(cell: CellResult, include_censored: bool = True) -> np.ndarray:
    """Counts in 1 nm bins over [0, 60] nm; the last bin includes 60."""
    nm, _, _ = _distances_nm(cell, include_censored)
    counts, _ = np.histogram(nm, bins=HISTOGRAM_BINS, range=(0.0, 60.0))
    return counts


# -- table writers ---------------------------------------------------------

def _fmt(v: float, precise: bool) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if math.isnan(v):
        return "nan"
    return repr(float(v)) if precise else f"{v:.2f}"


def _table(header: Sequence[str], rows: Iterable[Sequence], precise: bool) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([x if isinstance(x, str) else _fmt(x, precise) for x in r])
    return buf.getvalue().encode()


def percentile_table(rows: Sequence[PercentileRow], precise: bool = False) -> bytes:
    header = ["location", "source_class", "target_class", "records", "censored", "point_pairs",
              "mean_nm"] + [f"p{lv}_nm" for lv in LEVELS]
    return _table(header, ([r.location, r.source_class.name, r.target_class.name, r.records,
                            r.censored, r.point_pairs, r.mean_nm, *r.values_nm] for r in rows),
                  precise)


def means_table(rows: Sequence[MeansRow], group_name: str, precise: bool = False) -> bytes:
    header = [group_name, "cells", "total_point_pairs", "weighted_mean_nm", "unweighted_mean_nm"]
    return _table(header, ([r.group, r.cells, r.total_point_pairs, r.weighted_mean_nm,
                            r.unweighted_mean_nm] for r in rows), precise)


def sensitivity_table(rows: Sequence[SensitivityRow], precise: bool = False) -> bytes:
    header = ["location", "source_class", "target_class", "pct_diff_point_pairs",
              "pct_diff_compute_time", "pct_diff_mean", "pct_diff_median"]
    return _table(header, ([r.location, r.source_class.name, r.target_class.name,
                            r.pct_diff_point_pairs, r.pct_diff_compute_time, r.pct_diff_mean,
                            r.pct_diff_median] for r in rows), precise)


def histogram_table(cells: Iterable[CellResult], include_censored: bool = True) -> bytes:
    """Plot-ready long format: one row per (cell, 1 nm bin)."""
    header = ["location", "source_class", "target_class", "bin_lo_nm", "bin_hi_nm", "count"]
    rows = []
    for c in cells:
        k = c.key
        for b, n in enumerate(histogram(c, include_censored).tolist()):
            rows.append([k.location, k.source_class.name, k.target_class.name, str(b),
                         str(b + 1), str(n)])
    return _table(header, rows, True)
