"""Per-(location, class) point clouds and their delimited file format."""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..geodesy import GeoPoint, interpolate_polyline
from .boundary import LocationBoundary, clip_features
from .features import Feature, FeatureClass, GeometryKind

POINTSET_HEADER = ("iso_code", "class", "lat_deg", "lon_deg", "provenance")


@dataclass(frozen=True, eq=False)
class PointSet:
    location: str
    feature_class: FeatureClass
    lat: np.ndarray
    lon: np.ndarray
    provenance: tuple[str, ...] = ()
    dropped: int = 0

    def __post_init__(self):
        lat = np.ascontiguousarray(self.lat, dtype=np.float64)
        lon = np.ascontiguousarray(self.lon, dtype=np.float64)
        if lat.shape != lon.shape or lat.ndim != 1:
            raise ValueError("lat/lon must be 1-d arrays of equal length")
        lat.setflags(write=False)
        lon.setflags(write=False)
        object.__setattr__(self, "lat", lat)
        object.__setattr__(self, "lon", lon)
        object.__setattr__(self, "provenance", tuple(self.provenance))

    def __len__(self) -> int:
        return self.lat.shape[0]

    @property
    def points(self) -> list[GeoPoint]:
        return [GeoPoint(a, b) for a, b in zip(self.lat.tolist(), self.lon.tolist())]

    def same_points(self, other: "PointSet") -> bool:
        return bool(np.array_equal(self.lat, other.lat) and np.array_equal(self.lon, other.lon))


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def bytes_digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def feature_points(f: Feature, spacing_m: float) -> list[GeoPoint]:
    """Resampled points for one feature.

    Points pass through; polylines are resampled end to end; rings are
    resampled as closed paths and the repeated start vertex is dropped.
    """
    if f.kind is GeometryKind.POINT:
        return list(f.points)
    pts = interpolate_polyline(f.points, spacing_m)
    if f.kind is GeometryKind.RING:
        pts = pts[:-1]
    return pts


def build_pointset(features: Sequence[Feature], boundary: LocationBoundary, spacing_m: float,
                   feature_class: FeatureClass | None = None,
                   provenance: Iterable[str] = ()) -> PointSet:
    """Clip, resample and re-check features into one PointSet.

    Resampled points that fall outside the boundary (a chord can cut across
    a concave edge) are removed and counted in ``dropped``.
    """
    classes = {f.feature_class for f in features}
    if feature_class is not None:
        classes.add(feature_class)
    if len(classes) != 1:
        raise ValueError(f"features must share exactly one class, got {sorted(c.name for c in classes)}")
    cls = classes.pop()
    pts = [p for f in clip_features(features, boundary) for p in feature_points(f, spacing_m)]
    lat = np.array([p.lat_deg for p in pts], dtype=np.float64)
    lon = np.array([p.lon_deg for p in pts], dtype=np.float64)
    keep = boundary.contains(lat, lon)
    return PointSet(boundary.iso_code, cls, lat[keep], lon[keep], tuple(provenance),
                    int((~keep).sum()))


def write_pointset(ps: PointSet) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(POINTSET_HEADER)
    prov = "+".join(ps.provenance)
    for a, b in zip(ps.lat.tolist(), ps.lon.tolist()):
        w.writerow((ps.location, ps.feature_class.name, repr(a), repr(b), prov))
    return buf.getvalue().encode()


def read_pointset(data: bytes, location: str | None = None,
                  feature_class: FeatureClass | None = None) -> PointSet:
    """Parse the format written by :func:`write_pointset`.

    An empty file (header only) needs ``location`` and ``feature_class``.
    """
    rows = list(csv.reader(io.StringIO(data.decode(), newline="")))
    if not rows or tuple(rows[0]) != POINTSET_HEADER:
        raise ValueError(f"point-set header must be {','.join(POINTSET_HEADER)}")
    body = rows[1:]
    if body:
        location = location or body[0][0]
        feature_class = feature_class or FeatureClass[body[0][1]]
    if location is None or feature_class is None:
        raise ValueError("empty point set needs an explicit location and class")
    prov = tuple(body[0][4].split("+")) if body and body[0][4] else ()
    for r in body:
        if r[0] != location or r[1] != feature_class.name:
            raise ValueError(f"mixed cells in one point-set file: {r[0]}/{r[1]}")
    lat = np.array([float(r[2]) for r in body], dtype=np.float64)
    lon = np.array([float(r[3]) for r in body], dtype=np.float64)
    return PointSet(location, feature_class, lat, lon, prov)
