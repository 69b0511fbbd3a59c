"""Administrative boundaries, containment tests and clipping."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

import numpy as np
from numba import njit

from ..geodesy import GeoPoint
from .features import Feature, GeometryKind, close_ring

Ring = tuple[GeoPoint, ...]


@njit(cache=True, nogil=True)
def _ring_test(px, py, xs, ys, start, end):
    """(inside by even-odd, on an edge) for one closed ring xs[start:end]."""
    inside = False
    for k in range(start, end - 1):
        x1 = xs[k]
        y1 = ys[k]
        x2 = xs[k + 1]
        y2 = ys[k + 1]
        if (min(x1, x2) <= px <= max(x1, x2) and min(y1, y2) <= py <= max(y1, y2)
                and (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1) == 0.0):
            return True, True
        if (y1 > py) != (y2 > py):
            xcross = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            if px < xcross:
                inside = not inside
    return inside, False


@njit(cache=True, nogil=True)
def _contains(lat, lon, xs, ys, ring_start, ring_end, bbox, poly_first, poly_last):
    n = lat.shape[0]
    out = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        px = lon[i]
        py = lat[i]
        for p in range(poly_first.shape[0]):
            r = poly_first[p]
            if px < bbox[r, 0] or px > bbox[r, 1] or py < bbox[r, 2] or py > bbox[r, 3]:
                continue
            ins, _ = _ring_test(px, py, xs, ys, ring_start[r], ring_end[r])
            if not ins:
                continue
            for h in range(r + 1, poly_last[p]):
                if px < bbox[h, 0] or px > bbox[h, 1] or py < bbox[h, 2] or py > bbox[h, 3]:
                    continue
                hin, hedge = _ring_test(px, py, xs, ys, ring_start[h], ring_end[h])
                if hin and not hedge:
                    ins = False
                    break
            if ins:
                out[i] = True
                break
    return out


@dataclass(frozen=True)
class Polygon:
    outer: Ring
    holes: tuple[Ring, ...] = ()


@dataclass(frozen=True, eq=False)
class LocationBoundary:
    """One location's area as polygons with optional holes.

    Containment is planar even-odd in (lon, lat); a point on any edge counts
    as inside.
    """

    iso_code: str
    polygons: tuple[Polygon, ...]

    def __post_init__(self):
        polys = tuple(Polygon(close_ring(p.outer), tuple(close_ring(h) for h in p.holes))
                      for p in self.polygons)
        if not polys:
            raise ValueError(f"boundary {self.iso_code} has no polygons")
        rings = [r for p in polys for r in (p.outer, *p.holes)]
        for r in rings:
            if len(r) < 4:
                raise ValueError(f"boundary {self.iso_code} has a ring with < 3 vertices")
        object.__setattr__(self, "polygons", polys)
        xs = np.array([q.lon_deg for r in rings for q in r])
        ys = np.array([q.lat_deg for r in rings for q in r])
        sizes = np.array([len(r) for r in rings], dtype=np.int64)
        end = np.cumsum(sizes)
        start = end - sizes
        bbox = np.array([[xs[s:e].min(), xs[s:e].max(), ys[s:e].min(), ys[s:e].max()]
                         for s, e in zip(start, end)])
        counts = np.array([1 + len(p.holes) for p in polys], dtype=np.int64)
        last = np.cumsum(counts)
        object.__setattr__(self, "_arrays", (xs, ys, start, end, bbox, last - counts, last))
        for p, first in zip(polys, last - counts):
            for h in p.holes:
                hl = np.array([q.lat_deg for q in h])
                hx = np.array([q.lon_deg for q in h])
                single = _contains(hl, hx, xs, ys, start, end, bbox,
                                   np.array([first]), np.array([first + 1]))
                if not single.all():
                    raise ValueError(f"boundary {self.iso_code}: hole not inside its outer ring")

    def contains(self, lat, lon) -> np.ndarray:
        lat = np.ascontiguousarray(lat, dtype=np.float64)
        lon = np.ascontiguousarray(lon, dtype=np.float64)
        return _contains(lat, lon, *self._arrays)


def point_in_boundary(p: GeoPoint, b: LocationBoundary) -> bool:
    return bool(b.contains(np.array([p.lat_deg]), np.array([p.lon_deg]))[0])


def points_in_boundary(lat, lon, b: LocationBoundary) -> np.ndarray:
    return b.contains(lat, lon)


def _runs(mask: Sequence[bool]) -> list[tuple[int, int]]:
    out, start = [], None
    for i, m in enumerate(mask):
        if m and start is None:
            start = i
        elif not m and start is not None:
            out.append((start, i))
            start = None
    if start is not None:
        out.append((start, len(mask)))
    return out


def _pieces(f: Feature, mask: np.ndarray) -> list[tuple[GeometryKind, tuple[GeoPoint, ...]]]:
    pts = f.points
    if mask.all():
        return [(f.kind, pts)]
    if f.kind is GeometryKind.POINT:
        return []
    if f.kind is GeometryKind.RING:
        # drop the closure, rotate so the walk starts outside, and treat as a line
        open_pts, open_mask = pts[:-1], mask[:-1]
        shift = int(np.flatnonzero(~open_mask)[0])
        pts = open_pts[shift:] + open_pts[:shift]
        mask = np.concatenate((open_mask[shift:], open_mask[:shift]))
    out = []
    for s, e in _runs(mask.tolist()):
        if e - s >= 2:
            out.append((GeometryKind.POLYLINE, pts[s:e]))
        elif f.feature_class.is_point_class:
            out.append((GeometryKind.POINT, pts[s:e]))
    return out


def clip_features(features: Iterable[Feature], b: LocationBoundary) -> list[Feature]:
    """Drop vertices outside ``b``; split lines and rings into inside runs.

    Runs of two or more vertices stay polylines.  Single-vertex runs survive
    as points only for point classes.  A ring that leaves the boundary is
    opened into the polyline runs that remain inside, joined across the
    ring's start.
    """
    out: list[Feature] = []
    for f in features:
        lat = np.array([p.lat_deg for p in f.points])
        lon = np.array([p.lon_deg for p in f.points])
        mask = b.contains(lat, lon)
        if f.kind is GeometryKind.RING:
            mask[-1] = mask[0]
        pieces = _pieces(f, mask)
        if len(pieces) == 1 and pieces[0][1] == f.points:
            out.append(f)
            continue
        for k, (kind, pts) in enumerate(pieces):
            out.append(Feature(f.feature_class, kind, pts, f"{f.source_id}:{k}", f.attributes))
    return out


ISO_KEYS = ("iso_3166_2", "iso_code", "iso", "ISO_3166_2", "iso_a2")


def _polys(geom: Mapping) -> list[Polygon]:
    def ring(coords):
        return tuple(GeoPoint(float(c[1]), float(c[0])) for c in coords)

    if geom["type"] == "Polygon":
        rings = geom["coordinates"]
        return [Polygon(ring(rings[0]), tuple(ring(h) for h in rings[1:]))]
    if geom["type"] == "MultiPolygon":
        return [Polygon(ring(p[0]), tuple(ring(h) for h in p[1:])) for p in geom["coordinates"]]
    raise ValueError(f"boundary geometry must be (Multi)Polygon, got {geom['type']}")


def parse_boundaries(stream: IO[bytes] | bytes) -> dict[str, LocationBoundary]:
    """Boundaries from GeoJSON, keyed by ISO 3166-2 code; same-code features merge."""
    raw = stream if isinstance(stream, bytes) else stream.read()
    doc = json.loads(raw)
    feats = doc["features"] if doc.get("type") == "FeatureCollection" else [doc]
    grouped: dict[str, list[Polygon]] = {}
    for f in feats:
        props = f.get("properties") or {}
        code = next((str(props[k]) for k in ISO_KEYS if props.get(k)), None)
        if code is None:
            raise ValueError("boundary feature lacks an ISO code property")
        grouped.setdefault(code, []).extend(_polys(f["geometry"]))
    return {code: LocationBoundary(code, tuple(polys)) for code, polys in sorted(grouped.items())}


def serialize_boundary(b: LocationBoundary) -> bytes:
    coords = [[[[q.lon_deg, q.lat_deg] for q in r] for r in (p.outer, *p.holes)]
              for p in b.polygons]
    doc = {"type": "FeatureCollection", "features": [
        {"type": "Feature", "properties": {"iso_3166_2": b.iso_code},
         "geometry": {"type": "MultiPolygon", "coordinates": coords}}]}
    return (json.dumps(doc, sort_keys=True) + "\n").encode()
