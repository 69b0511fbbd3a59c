"""Feature classes, the normalized Feature record and its readers/writers."""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field
from typing import IO, Any, Iterable, Mapping, Sequence

from ..geodesy import GeoPoint


class FeatureClass(enum.Enum):
    FaaObstacle = "FaaObstacle"
    ElectricPower = "ElectricPower"
    GolfCourse = "GolfCourse"
    Pipeline = "Pipeline"
    Railway = "Railway"
    Road = "Road"
    WindTurbine = "WindTurbine"

    @property
    def label(self) -> str:
        return _LABELS[self]

    @property
    def is_point_class(self) -> bool:
        return self in (FeatureClass.FaaObstacle, FeatureClass.WindTurbine)

    @classmethod
    def parse(cls, text: str) -> "FeatureClass":
        key = text.strip().replace(" ", "").replace("_", "").lower()
        for member in cls:
            if member.name.lower() == key:
                return member
        raise ValueError(f"unknown feature class {text!r}")


_LABELS = {
    FeatureClass.FaaObstacle: "FAA Obstacles",
    FeatureClass.ElectricPower: "Electric Power",
    FeatureClass.GolfCourse: "Golf Course",
    FeatureClass.Pipeline: "Pipeline",
    FeatureClass.Railway: "Railway",
    FeatureClass.Road: "Road",
    FeatureClass.WindTurbine: "Wind Turbine",
}


class GeometryKind(enum.Enum):
    POINT = "Point"
    POLYLINE = "Polyline"
    RING = "PolygonRing"


@dataclass(frozen=True)
class Feature:
    feature_class: FeatureClass
    kind: GeometryKind
    points: tuple[GeoPoint, ...]
    source_id: str
    attributes: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        n = len(self.points)
        if self.kind is GeometryKind.POINT and n != 1:
            raise ValueError(f"point feature needs exactly one vertex, got {n}")
        if self.kind is GeometryKind.POLYLINE and n < 2:
            raise ValueError(f"polyline needs >= 2 vertices, got {n}")
        if self.kind is GeometryKind.RING:
            if n < 4:
                raise ValueError(f"ring needs >= 3 distinct vertices plus closure, got {n}")
            if self.points[0] != self.points[-1]:
                raise ValueError("ring is not closed")


@dataclass(frozen=True)
class Reject:
    """A record that could not be used, with its 1-based line (or feature) number."""

    line: int
    reason: str
    record: str = ""


@dataclass
class ParseResult:
    features: list[Feature]
    rejects: list[Reject]


def close_ring(points: Sequence[GeoPoint]) -> tuple[GeoPoint, ...]:
    pts = tuple(points)
    if pts and pts[0] != pts[-1]:
        pts = pts + (pts[0],)
    return pts


def _attr_value(v: Any) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True)
    return json.dumps(v)


def _position(pos: Any) -> GeoPoint:
    if not isinstance(pos, (list, tuple)) or len(pos) < 2:
        raise ValueError(f"bad position {pos!r}")
    lon, lat = float(pos[0]), float(pos[1])
    return GeoPoint(lat, lon)


def _parts(geom: Mapping[str, Any]) -> list[tuple[GeometryKind, tuple[GeoPoint, ...]]]:
    gtype = geom.get("type")
    coords = geom.get("coordinates")
    if gtype == "Point":
        return [(GeometryKind.POINT, (_position(coords),))]
    if gtype == "MultiPoint":
        return [(GeometryKind.POINT, (_position(c),)) for c in coords]
    if gtype == "LineString":
        return [(GeometryKind.POLYLINE, tuple(_position(c) for c in coords))]
    if gtype == "MultiLineString":
        return [(GeometryKind.POLYLINE, tuple(_position(c) for c in line)) for line in coords]
    if gtype == "Polygon":
        return [(GeometryKind.RING, close_ring([_position(c) for c in ring])) for ring in coords]
    if gtype == "MultiPolygon":
        return [(GeometryKind.RING, close_ring([_position(c) for c in ring]))
                for poly in coords for ring in poly]
    if gtype == "GeometryCollection":
        return [part for g in geom.get("geometries", []) for part in _parts(g)]
    raise ValueError(f"unsupported geometry type {gtype!r}")


def _geojson_features(doc: Any) -> list[Mapping[str, Any]]:
    if not isinstance(doc, Mapping):
        raise ValueError("top-level JSON value is not an object")
    if doc.get("type") == "FeatureCollection":
        return list(doc.get("features", []))
    if doc.get("type") == "Feature":
        return [doc]
    return [{"type": "Feature", "geometry": doc, "properties": {}}]


def parse_geojson(stream: IO[bytes] | bytes, feature_class: FeatureClass) -> ParseResult:
    """Read a GeoJSON document; multi-part geometries become one Feature per part.

    Polygon holes are kept as rings of their own: for perimeter sampling an
    inner boundary is as much a perimeter as the outer one.
    """
    raw = stream if isinstance(stream, bytes) else stream.read()
    out: list[Feature] = []
    rejects: list[Reject] = []
    if not raw.strip():
        return ParseResult(out, rejects)
    for i, feat in enumerate(_geojson_features(json.loads(raw)), start=1):
        base = feat.get("id")
        base = str(i - 1) if base is None else str(base)
        props = feat.get("properties") or {}
        attrs = {str(k): _attr_value(v) for k, v in sorted(props.items()) if v is not None}
        geom = feat.get("geometry")
        if geom is None:
            rejects.append(Reject(i, "feature has no geometry", base))
            continue
        try:
            parts = _parts(geom)
            built = [Feature(feature_class, kind, pts,
                             base if len(parts) == 1 else f"{base}#{k}", attrs)
                     for k, (kind, pts) in enumerate(parts)]
        except (ValueError, TypeError) as exc:
            rejects.append(Reject(i, str(exc), base))
            continue
        out.extend(built)
    return ParseResult(out, rejects)


LAT_COLUMNS = ("lat", "latitude", "ylat", "y", "lat_deg")
LON_COLUMNS = ("lon", "long", "longitude", "xlong", "lng", "x", "lon_deg")
ID_COLUMNS = ("id", "case_id", "source_id", "oid", "fid")


def _pick(header: Sequence[str], names: Sequence[str]) -> str | None:
    lowered = {h.strip().lower(): h for h in header}
    for name in names:
        if name in lowered:
            return lowered[name]
    return None


def parse_delimited(stream: IO[bytes] | bytes, feature_class: FeatureClass) -> ParseResult:
    """Read point features from a header-bearing CSV with latitude/longitude columns."""
    raw = stream if isinstance(stream, bytes) else stream.read()
    text = raw.decode("utf-8-sig")
    out: list[Feature] = []
    rejects: list[Reject] = []
    if not text.strip():
        return ParseResult(out, rejects)
    reader = csv.DictReader(io.StringIO(text, newline=""))
    header = reader.fieldnames or []
    lat_col = _pick(header, LAT_COLUMNS)
    lon_col = _pick(header, LON_COLUMNS)
    if lat_col is None or lon_col is None:
        raise ValueError(f"no latitude/longitude columns among {header}")
    id_col = _pick(header, ID_COLUMNS)
    for row in reader:
        line = reader.line_num
        try:
            lat = float(row[lat_col])
            lon = float(row[lon_col])
            if not (math.isfinite(lat) and math.isfinite(lon)):
                raise ValueError("non-finite coordinate")
            pt = GeoPoint(lat, lon)
        except (TypeError, ValueError) as exc:
            rejects.append(Reject(line, f"bad coordinate: {exc}", ",".join(map(str, row.values()))))
            continue
        sid = row[id_col].strip() if id_col and row.get(id_col) else str(line)
        attrs = {k: v for k, v in sorted(row.items())
                 if k not in (lat_col, lon_col, id_col) and k is not None and v not in (None, "")}
        out.append(Feature(feature_class, GeometryKind.POINT, (pt,), sid, attrs))
    return ParseResult(out, rejects)


def parse_features(stream: IO[bytes] | bytes, fmt: str, feature_class: FeatureClass) -> ParseResult:
    """Dispatch on ``fmt``: ``"geojson"`` or ``"csv"``."""
    fmt = fmt.lower()
    if fmt in ("geojson", "json"):
        return parse_geojson(stream, feature_class)
    if fmt in ("csv", "delimited"):
        return parse_delimited(stream, feature_class)
    raise ValueError(f"unknown feature format {fmt!r}")


def _geometry(f: Feature) -> dict[str, Any]:
    coords = [[p.lon_deg, p.lat_deg] for p in f.points]
    if f.kind is GeometryKind.POINT:
        return {"type": "Point", "coordinates": coords[0]}
    if f.kind is GeometryKind.POLYLINE:
        return {"type": "LineString", "coordinates": coords}
    return {"type": "Polygon", "coordinates": [coords]}


def serialize_features(features: Iterable[Feature]) -> bytes:
    """GeoJSON FeatureCollection readable back by :func:`parse_geojson`."""
    doc = {
        "type": "FeatureCollection",
        "features": [
            {"type": "Feature", "id": f.source_id, "properties": dict(sorted(f.attributes.items())),
             "geometry": _geometry(f)}
            for f in features
        ],
    }
    return (json.dumps(doc, sort_keys=True) + "\n").encode()
