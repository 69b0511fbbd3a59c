"""Closest-point-of-approach computation across (location, feature pair) cells."""

from __future__ import annotations

import csv
import enum
import io
import itertools
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .geodesy import GeoPoint
from .ingest.features import FeatureClass
from .ingest.pointset import PointSet
from .spatial_index import DEFAULT_CELL_M, SpatialIndex, build_index, nearest_many
from .units import FT_TO_M, NM_TO_M

log = logging.getLogger(__name__)

POINT_PAIR_DEFINITION = (
    "sum over source points of the number of target points within max_range_m "
    "(pairs inside the range cutoff, counted exactly)")


class Direction(enum.Enum):
    FORWARD = "forward"
    BOTH = "both"


@dataclass(frozen=True)
class PipelineConfig:
    spacing_m: float = 500 * FT_TO_M
    max_range_m: float = 60 * NM_TO_M
    min_obstacle_height_ft: float = 50.0
    locations: tuple[str, ...] = ()
    classes: tuple[FeatureClass, ...] = tuple(FeatureClass)
    direction: Direction = Direction.BOTH
    worker_count: int = 1
    block_size: int = 4096
    index_cell_m: float = DEFAULT_CELL_M

    def __post_init__(self):
        object.__setattr__(self, "locations", tuple(self.locations))
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "direction", Direction(self.direction))
        if not (self.spacing_m > 0 and math.isfinite(self.spacing_m)):
            raise ValueError(f"spacing_m must be positive, got {self.spacing_m}")
        if not (self.max_range_m > self.spacing_m and math.isfinite(self.max_range_m)):
            raise ValueError("max_range_m must be finite and larger than spacing_m")
        if self.min_obstacle_height_ft < 0:
            raise ValueError("min_obstacle_height_ft must be >= 0")
        if len(set(self.classes)) != len(self.classes):
            raise ValueError("classes must be distinct")
        if self.worker_count < 1 or self.block_size < 1:
            raise ValueError("worker_count and block_size must be positive")

    def snapshot(self) -> dict:
        return {
            "spacing_m": self.spacing_m,
            "max_range_m": self.max_range_m,
            "min_obstacle_height_ft": self.min_obstacle_height_ft,
            "locations": list(self.locations),
            "classes": [c.name for c in self.classes],
            "direction": self.direction.value,
        }


def enumerate_pairs(classes: Sequence[FeatureClass]) -> list[tuple[FeatureClass, FeatureClass]]:
    """All unordered class pairs, each and overall sorted by class name."""
    if len(set(classes)) != len(classes):
        raise ValueError("classes must be distinct")
    ordered = sorted(classes, key=lambda c: c.name)
    return list(itertools.combinations(ordered, 2))


@dataclass(frozen=True)
class CellKey:
    location: str
    source_class: FeatureClass
    target_class: FeatureClass
    pair_rank: int = 0
    reverse: bool = False

    def sort_key(self) -> tuple:
        return (self.location, self.pair_rank, self.reverse)

    @property
    def name(self) -> str:
        return f"{self.location}__{self.source_class.name}__{self.target_class.name}"


def plan_cells(config: PipelineConfig) -> list[CellKey]:
    """Every cell of the run, in canonical order."""
    cells = []
    for loc in sorted(config.locations):
        for rank, (a, b) in enumerate(enumerate_pairs(config.classes)):
            cells.append(CellKey(loc, a, b, rank, False))
            if config.direction is Direction.BOTH:
                cells.append(CellKey(loc, b, a, rank, True))
    return cells


@dataclass(frozen=True, slots=True)
class CpaRecord:
    location: str
    source_class: FeatureClass
    target_class: FeatureClass
    source_ordinal: int
    source_point: GeoPoint
    cpa_distance_m: float
    target_point: GeoPoint | None
    target_ordinal: int | None
    fwd_azimuth_deg: float | None
    censored: bool
    candidate_count: int


@dataclass(frozen=True, eq=False)
class CellResult:
    """Column-wise records of one cell; index i is source ordinal i."""

    key: CellKey
    source_lat: np.ndarray
    source_lon: np.ndarray
    distance_m: np.ndarray
    target_ordinal: np.ndarray
    target_lat: np.ndarray
    target_lon: np.ndarray
    fwd_azimuth_deg: np.ndarray
    candidate_count: np.ndarray
    max_range_m: float
    elapsed_s: float = 0.0

    def __len__(self) -> int:
        return self.distance_m.shape[0]

    @property
    def censored(self) -> np.ndarray:
        return self.target_ordinal < 0

    @property
    def point_pairs(self) -> int:
        return int(self.candidate_count.sum())

    def records(self) -> list[CpaRecord]:
        k = self.key
        out = []
        for i in range(len(self)):
            cens = bool(self.target_ordinal[i] < 0)
            out.append(CpaRecord(
                k.location, k.source_class, k.target_class, i,
                GeoPoint(self.source_lat[i], self.source_lon[i]), float(self.distance_m[i]),
                None if cens else GeoPoint(self.target_lat[i], self.target_lon[i]),
                None if cens else int(self.target_ordinal[i]),
                None if cens else float(self.fwd_azimuth_deg[i]),
                cens, int(self.candidate_count[i])))
        return out

    def same_records(self, other: "CellResult") -> bool:
        names = ("source_lat", "source_lon", "distance_m", "target_ordinal", "target_lat",
                 "target_lon", "fwd_azimuth_deg", "candidate_count")
        return self.key == other.key and all(
            np.array_equal(getattr(self, n), getattr(other, n), equal_nan=True)
            for n in names)


def _block(index: SpatialIndex, target: PointSet, lat: np.ndarray, lon: np.ndarray,
           max_range_m: float):
    res = nearest_many(index, lat, lon, max_range_m)
    found = res.ordinal >= 0
    safe = np.where(found, res.ordinal, 0)
    tlat = np.where(found, target.lat[safe] if len(target) else np.nan, np.nan)
    tlon = np.where(found, target.lon[safe] if len(target) else np.nan, np.nan)
    az = np.where(found, np.mod(res.fwd_azimuth_deg, 360.0), np.nan)
    az = np.where(az >= 360.0, 0.0, az) + 0.0
    dist = np.where(found, res.distance_m, max_range_m)
    return dist, res.ordinal, tlat, tlon, az, res.in_range_count


def _assemble(key: CellKey, source: PointSet, blocks: list, max_range_m: float,
              elapsed: float) -> CellResult:
    if blocks:
        cols = [np.concatenate([b[i] for b in blocks]) for i in range(6)]
    else:
        cols = [np.empty(0), np.empty(0, dtype=np.int64), np.empty(0), np.empty(0),
                np.empty(0), np.empty(0, dtype=np.int64)]
    return CellResult(key, source.lat.copy(), source.lon.copy(), cols[0], cols[1].astype(np.int64),
                      cols[2], cols[3], cols[4], cols[5].astype(np.int64), max_range_m, elapsed)


def compute_cell(key: CellKey, source: PointSet, target: PointSet, max_range_m: float,
                 index: SpatialIndex | None = None, block_size: int = 1 << 30) -> CellResult:
    t0 = time.perf_counter()
    index = index if index is not None else build_index(target)
    blocks = [_block(index, target, source.lat[s:s + block_size], source.lon[s:s + block_size],
                     max_range_m)
              for s in range(0, len(source), block_size)]
    return _assemble(key, source, blocks, max_range_m, time.perf_counter() - t0)


def closest_approaches(source: PointSet, target: PointSet,
                       max_range_m: float = 60 * NM_TO_M) -> list[CpaRecord]:
    """One record per source point: nearest target point within ``max_range_m``.

    Sources with nothing in range are censored at exactly ``max_range_m``.
    """
    if not (max_range_m > 0 and math.isfinite(max_range_m)):
        raise ValueError(f"max_range_m must be positive, got {max_range_m}")
    if source.location != target.location:
        raise ValueError(f"source/target locations differ: {source.location} vs {target.location}")
    if source.feature_class == target.feature_class:
        raise ValueError("source and target must be different classes")
    key = CellKey(source.location, source.feature_class, target.feature_class)
    return compute_cell(key, source, target, max_range_m).records()


@dataclass
class ResultSet:
    config: PipelineConfig
    cells: dict[CellKey, CellResult]
    failures: dict[CellKey, str] = field(default_factory=dict)
    missing: list[CellKey] = field(default_factory=list)
    wall_time_s: float = 0.0
    input_digests: dict[str, str] = field(default_factory=dict)

    @property
    def total_point_pairs(self) -> int:
        return sum(c.point_pairs for c in self.cells.values())

    @property
    def record_count(self) -> int:
        return sum(len(c) for c in self.cells.values())


def _index_pointsets(pointsets: Mapping | Iterable[PointSet]) -> dict[tuple[str, FeatureClass], PointSet]:
    if isinstance(pointsets, Mapping):
        return dict(pointsets)
    out = {}
    for ps in pointsets:
        k = (ps.location, ps.feature_class)
        if k in out:
            raise ValueError(f"duplicate point set for {ps.location}/{ps.feature_class.name}")
        out[k] = ps
    return out


def run_pipeline(config: PipelineConfig, pointsets) -> ResultSet:
    """Compute every planned cell; output does not depend on worker count.

    Work is split into (cell, source block) units run on a thread pool (the
    compiled kernels release the GIL).  Results are merged in canonical cell
    order and source order.  A unit that raises marks only its own cell as
    failed.
    """
    t0 = time.perf_counter()
    sets = _index_pointsets(pointsets)
    plan = plan_cells(config)
    runnable, missing = [], []
    for key in plan:
        src = sets.get((key.location, key.source_class))
        tgt = sets.get((key.location, key.target_class))
        if src is None or tgt is None:
            log.warning("skipping %s: point set missing", key.name)
            missing.append(key)
        else:
            runnable.append((key, src, tgt))

    failures: dict[CellKey, str] = {}
    indexes: dict[tuple[str, FeatureClass], SpatialIndex] = {}
    units = []
    for key, src, tgt in runnable:
        ik = (key.location, key.target_class)
        if ik not in indexes:
            try:
                indexes[ik] = build_index(tgt, config.index_cell_m)
            except Exception as exc:  # noqa: BLE001 - isolate per cell
                failures[key] = f"index build failed: {exc}"
                continue
        for s in range(0, len(src), config.block_size):
            units.append((key, src, tgt, s))

    def work(unit):
        key, src, tgt, s = unit
        t = time.perf_counter()
        sl = slice(s, s + config.block_size)
        out = _block(indexes[(key.location, key.target_class)], tgt, src.lat[sl], src.lon[sl],
                     config.max_range_m)
        return out, time.perf_counter() - t

    results: dict[tuple[CellKey, int], object] = {}
    with ThreadPoolExecutor(max_workers=config.worker_count) as pool:
        futures = [(u, pool.submit(work, u)) for u in units]
        for (key, _, _, s), fut in futures:
            try:
                results[(key, s)] = fut.result()
            except Exception as exc:  # noqa: BLE001 - isolate per cell
                log.error("cell %s failed: %s", key.name, exc)
                failures.setdefault(key, f"{type(exc).__name__}: {exc}")

    cells: dict[CellKey, CellResult] = {}
    for key, src, tgt in runnable:
        if key in failures:
            continue
        starts = range(0, len(src), config.block_size)
        blocks = [results[(key, s)][0] for s in starts]
        elapsed = sum(results[(key, s)][1] for s in starts)
        cells[key] = _assemble(key, src, blocks, config.max_range_m, elapsed)
    digests = sorted({d for ps in sets.values() for d in ps.provenance})
    return ResultSet(config, cells, failures, missing, time.perf_counter() - t0,
                     {str(i): d for i, d in enumerate(digests)})


# -- persistence -----------------------------------------------------------

RECORD_HEADER = (
    "location", "source_class", "target_class", "source_ordinal", "source_lat_deg",
    "source_lon_deg", "cpa_distance_m", "target_ordinal", "target_lat_deg", "target_lon_deg",
    "fwd_azimuth_deg", "censored", "candidate_count")


def _f(v: float) -> str:
    return "" if math.isnan(v) else repr(float(v))


def write_cell(cell: CellResult) -> bytes:
    k = cell.key
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_HEADER)
    cols = zip(cell.source_lat.tolist(), cell.source_lon.tolist(), cell.distance_m.tolist(),
               cell.target_ordinal.tolist(), cell.target_lat.tolist(), cell.target_lon.tolist(),
               cell.fwd_azimuth_deg.tolist(), cell.candidate_count.tolist())
    for i, (sla, slo, d, to, tla, tlo, az, c) in enumerate(cols):
        w.writerow((k.location, k.source_class.name, k.target_class.name, i, repr(sla), repr(slo),
                    repr(d), "" if to < 0 else to, _f(tla), _f(tlo), _f(az),
                    "1" if to < 0 else "0", c))
    return buf.getvalue().encode()


def read_cell(data: bytes, key: CellKey, max_range_m: float, elapsed_s: float = 0.0) -> CellResult:
    rows = list(csv.reader(io.StringIO(data.decode(), newline="")))
    if not rows or tuple(rows[0]) != RECORD_HEADER:
        raise ValueError("unexpected record file header")
    body = rows[1:]

    def col(i, conv, empty):
        return [conv(r[i]) if r[i] != "" else empty for r in body]

    return CellResult(
        key,
        np.array(col(4, float, np.nan)), np.array(col(5, float, np.nan)),
        np.array(col(6, float, np.nan)), np.array(col(7, int, -1), dtype=np.int64),
        np.array(col(8, float, np.nan)), np.array(col(9, float, np.nan)),
        np.array(col(10, float, np.nan)), np.array(col(12, int, 0), dtype=np.int64),
        max_range_m, elapsed_s)


def write_results(result: ResultSet, outdir: str | Path) -> dict[str, str]:
    """Write per-cell record files, ``manifest.json`` and ``timings.json``.

    Everything except ``timings.json`` is byte-deterministic for identical
    inputs and configuration.  Returns name -> sha256 of the record files.
    """
    import hashlib

    out = Path(outdir)
    (out / "records").mkdir(parents=True, exist_ok=True)
    digests = {}
    cells_meta = []
    for key, cell in result.cells.items():
        data = write_cell(cell)
        name = f"records/{key.name}.csv"
        (out / name).write_bytes(data)
        digests[name] = hashlib.sha256(data).hexdigest()
        cells_meta.append({
            "file": name, "location": key.location, "source_class": key.source_class.name,
            "target_class": key.target_class.name, "pair_rank": key.pair_rank,
            "reverse": key.reverse, "records": len(cell),
            "censored": int(cell.censored.sum()), "point_pairs": cell.point_pairs,
            "sha256": digests[name]})
    manifest = {
        "tool": "uascpa", "version": __version__,
        "config": result.config.snapshot(),
        "input_digests": result.input_digests,
        "point_pair_definition": POINT_PAIR_DEFINITION,
        "total_point_pairs": result.total_point_pairs,
        "record_count": result.record_count,
        "cells": cells_meta,
        "failures": [{"cell": k.name, "error": v} for k, v in sorted(result.failures.items(), key=lambda kv: kv[0].sort_key())],
        "missing": [k.name for k in result.missing],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    timings = {"compute_wall_s": result.wall_time_s,
               "cells": {k.name: c.elapsed_s for k, c in result.cells.items()}}
    (out / "timings.json").write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n")
    return digests


@dataclass
class LoadedRun:
    config: dict
    cells: dict[CellKey, CellResult]
    timings: dict[str, float]
    manifest: dict


def load_results(run_dir: str | Path) -> LoadedRun:
    run = Path(run_dir)
    manifest = json.loads((run / "manifest.json").read_text())
    tpath = run / "timings.json"
    timings = json.loads(tpath.read_text())["cells"] if tpath.exists() else {}
    max_range = float(manifest["config"]["max_range_m"])
    cells = {}
    for meta in manifest["cells"]:
        key = CellKey(meta["location"], FeatureClass[meta["source_class"]],
                      FeatureClass[meta["target_class"]], meta["pair_rank"], meta["reverse"])
        cells[key] = read_cell((run / meta["file"]).read_bytes(), key, max_range,
                               float(timings.get(key.name, 0.0)))
    return LoadedRun(manifest["config"],
                     dict(sorted(cells.items(), key=lambda kv: kv[0].sort_key())), timings, manifest)
