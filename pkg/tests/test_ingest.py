from __future__ import annotations

import json
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import inside_simple_ring
from synthetic import dms, dof_record
from uascpa.geodesy import GeoPoint, direct_geodesic, distances_from, interpolate_polyline
from uascpa.ingest import (DofLayout, Feature, FeatureClass, GeometryKind, LocationBoundary,
                           ObstaclePoint, PointSet, Polygon, build_pointset, clip_features,
                           close_ring, dms_to_degrees, feature_points, filter_obstacles,
                           obstacle_to_circle, parse_boundaries, parse_delimited, parse_dof,
                           parse_features, parse_geojson, point_in_boundary, read_pointset,
                           serialize_boundary, serialize_features, write_pointset)
from uascpa.units import FT_TO_M

SPACING = 500 * FT_TO_M


def _box(x0, y0, x1, y1, code="US-ZZ", holes=()):
    ring = [GeoPoint(y0, x0), GeoPoint(y0, x1), GeoPoint(y1, x1), GeoPoint(y1, x0)]
    return LocationBoundary(code, (Polygon(tuple(ring), tuple(holes)),))


def _gj(*features) -> bytes:
    return json.dumps({"type": "FeatureCollection", "features": list(features)}).encode()


# -- DMS and the DOF reader ------------------------------------------------

def test_dms_examples():
    assert dms_to_degrees("42-30-00.00N") == 42.5
    assert dms_to_degrees("071-15-30.00W") == pytest.approx(-71.258333333333333, abs=1e-15)
    assert dms_to_degrees("00 00 00.00S") == 0.0


@pytest.mark.parametrize("text", ["42 60 00.00N", "42 30 60.00N", "91 00 00.00N",
                                  "181 00 00.00E", "42 30 00.00X", "", "4230N", "42 3O 00.00N"])
def test_dms_rejects_malformed(text):
    with pytest.raises(ValueError):
        dms_to_degrees(text)


@settings(max_examples=300, deadline=None)
@given(st.integers(-90 * 360000, 90 * 360000), st.booleans())
def test_dms_formatting_round_trip(hundredths, as_lon):
    value = hundredths / 360000 * (2 if as_lon else 1)
    text = dms(value, as_lon)
    assert abs(dms_to_degrees(text) - value) <= 0.5 / 360000 + 1e-12


def test_golden_file_details(data_dir):
    res = parse_dof((data_dir / "dof_golden.dat").read_bytes())
    assert [o.line for o in res.obstacles] == [5, 6, 7, 9, 10, 12, 13, 14]
    by_line = {o.line: o for o in res.obstacles}
    assert by_line[5].location == GeoPoint(42.5, -71.25833333333334)
    assert by_line[5].oas_number == "25-000101"
    assert by_line[5].obstacle_type == "TOWER"
    assert by_line[5].horizontal_accuracy_radius_ft == 20.0
    assert by_line[7].location.lon_deg == -(70 + 59 / 60 + 59.99 / 3600)
    assert by_line[10].accuracy_defaulted and by_line[10].horizontal_accuracy_radius_ft == 250.0
    assert by_line[12].horizontal_accuracy_radius_ft == pytest.approx(926 / 0.3048)
    assert not any(o.accuracy_defaulted for o in res.obstacles if o.line != 10)
    reasons = {r.line: r.reason for r in res.rejects}
    assert "coordinate" in reasons[8] and "AGL" in reasons[11]
    assert all(r.record for r in res.rejects)


def test_dof_without_header_and_truncated_rows():
    good = dof_record("01-000001", "40 00 00.00N", "100 00 00.00W", "TOWER", 200)
    data = "\n".join([good, good[:40], "", good]).encode()
    res = parse_dof(data)
    assert len(res.obstacles) == 2
    assert [r.line for r in res.rejects] == [2]
    assert "truncated" in res.rejects[0].reason


def test_dof_layout_validation():
    d = json.loads(json.dumps({"columns": {"latitude": [1, 2]}, "horizontal_accuracy_ft": {}}))
    with pytest.raises(ValueError):
        DofLayout.from_dict(d)
    layout = DofLayout.load()
    assert layout.default_accuracy_ft == 250.0
    assert layout.field(" " * 35 + "42 30 00.00N", "latitude") == "42 30 00.00N"


def _obstacles(heights):
    return [ObstaclePoint(GeoPoint(40.0, -100.0 + i * 0.01), float(h), 50.0, "TOWER", line=i + 1)
            for i, h in enumerate(heights)]


def test_filter_obstacles_examples():
    obs = _obstacles([10, 20, 49.9, 0, 50, 60, 100, 500, 1000, 75])
    kept = filter_obstacles(obs, 50)
    assert len(kept) == 6
    assert [o.line for o in kept] == [5, 6, 7, 8, 9, 10]
    assert filter_obstacles(obs, 0) == obs
    with pytest.raises(ValueError):
        filter_obstacles(obs, -1)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 2000), max_size=40), st.floats(0, 2000))
def test_filter_partitions_input(heights, threshold):
    obs = _obstacles(heights)
    kept = filter_obstacles(obs, threshold)
    removed = [o for o in obs if o not in kept]
    assert len(kept) + len(removed) == len(obs)
    assert all(o.agl_height_ft >= threshold for o in kept)
    assert all(o.agl_height_ft < threshold for o in removed)


def test_obstacle_validation():
    with pytest.raises(ValueError):
        ObstaclePoint(GeoPoint(0, 0), -1.0, 50.0, "X")
    with pytest.raises(ValueError):
        ObstaclePoint(GeoPoint(0, 0), 10.0, 0.0, "X")


@pytest.mark.parametrize("radius_ft,defaulted", [(50.0, False), (250.0, True)])
def test_obstacle_to_circle(radius_ft, defaulted):
    o = ObstaclePoint(GeoPoint(38.5, -105.5), 120.0, radius_ft, "TOWER", "08-000001", defaulted)
    f = obstacle_to_circle(o, SPACING)
    assert f.kind is GeometryKind.RING and f.feature_class is FeatureClass.FaaObstacle
    assert f.points[0] == f.points[-1] and len(f.points) >= 9
    ring = f.points[:-1]
    d = distances_from(o.location, [p.lat_deg for p in ring], [p.lon_deg for p in ring])
    assert np.max(np.abs(d - radius_ft * FT_TO_M)) <= 1e-3
    assert f.source_id == "08-000001"
    assert (f.attributes.get("accuracy_defaulted") == "true") is defaulted


def test_unknown_accuracy_uses_configured_default():
    line = dof_record("01-000001", "40 00 00.00N", "100 00 00.00W", "TOWER", 200, accuracy="9")
    base = DofLayout.load()
    layout = DofLayout(base.columns, base.accuracy_ft, base.unknown_codes, 500.0,
                       base.header_separator)
    o = parse_dof(line.encode(), layout).obstacles[0]
    assert o.accuracy_defaulted and o.horizontal_accuracy_radius_ft == 500.0
    f = obstacle_to_circle(o, SPACING)
    d = distances_from(o.location, [p.lat_deg for p in f.points], [p.lon_deg for p in f.points])
    assert np.max(np.abs(d - 500 * FT_TO_M)) <= 1e-3


# -- feature readers -------------------------------------------------------

def test_linestring_of_four_positions():
    coords = [[-105.0, 39.0], [-105.01, 39.01], [-105.02, 39.0], [-105.03, 39.02]]
    res = parse_geojson(_gj({"type": "Feature", "id": 7, "properties": {"name": "x", "lanes": 2},
                             "geometry": {"type": "LineString", "coordinates": coords}}),
                        FeatureClass.Road)
    assert not res.rejects and len(res.features) == 1
    f = res.features[0]
    assert f.kind is GeometryKind.POLYLINE and len(f.points) == 4
    assert f.points[1] == GeoPoint(39.01, -105.01)
    assert f.source_id == "7" and f.attributes == {"lanes": "2", "name": "x"}


def test_multilinestring_splits_into_parts():
    parts = [[[0, 0], [1, 1]], [[2, 2], [3, 3], [4, 4]], [[5, 5], [6, 6]]]
    res = parse_geojson(_gj({"type": "Feature", "id": "m", "properties": {},
                             "geometry": {"type": "MultiLineString", "coordinates": parts}}),
                        FeatureClass.Railway)
    assert [f.source_id for f in res.features] == ["m#0", "m#1", "m#2"]
    assert [len(f.points) for f in res.features] == [2, 3, 2]


def test_polygon_with_hole_becomes_two_rings():
    outer = [[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]
    hole = [[0.2, 0.2], [0.4, 0.2], [0.4, 0.4]]
    res = parse_geojson(_gj({"type": "Feature", "properties": {},
                             "geometry": {"type": "Polygon", "coordinates": [outer, hole]}}),
                        FeatureClass.GolfCourse)
    assert [f.kind for f in res.features] == [GeometryKind.RING] * 2
    assert res.features[1].points[0] == res.features[1].points[-1]
    assert res.features[0].source_id == "0#0"


def test_turbine_csv_rows(tmp_path):
    text = ("case_id,t_cap,xlong,ylat\n"
            "1,1500,-100.1,40.1\n2,1500,-100.2,40.2\n3,,-100.3,40.3\n"
            "4,2000,-100.4,40.4\n5,2000,-100.5,40.5\n")
    res = parse_features(text.encode(), "csv", FeatureClass.WindTurbine)
    assert len(res.features) == 5 and not res.rejects
    assert all(f.kind is GeometryKind.POINT for f in res.features)
    assert [f.source_id for f in res.features] == ["1", "2", "3", "4", "5"]
    assert res.features[0].attributes == {"t_cap": "1500"}
    assert res.features[2].attributes == {}


def test_csv_bad_rows_are_rejected():
    text = "lat,lon\n40,-100\nabc,-100\n95,0\nnan,1\n41,-101\n"
    res = parse_delimited(text.encode(), FeatureClass.WindTurbine)
    assert len(res.features) == 2
    assert [r.line for r in res.rejects] == [3, 4, 5]
    with pytest.raises(ValueError):
        parse_delimited(b"a,b\n1,2\n", FeatureClass.WindTurbine)


@pytest.mark.parametrize("fmt", ["geojson", "csv"])
def test_empty_file_is_empty_result(fmt):
    for blob in (b"", b"  \n"):
        res = parse_features(blob, fmt, FeatureClass.Road)
        assert res.features == [] and res.rejects == []


def test_unknown_geometry_is_rejected():
    res = parse_geojson(_gj(
        {"type": "Feature", "id": "a", "properties": {},
         "geometry": {"type": "Circle", "coordinates": [0, 0]}},
        {"type": "Feature", "id": "b", "properties": {}, "geometry": None},
        {"type": "Feature", "id": "c", "properties": {},
         "geometry": {"type": "LineString", "coordinates": [[0, 0]]}},
        {"type": "Feature", "id": "d", "properties": {},
         "geometry": {"type": "Point", "coordinates": [1, 2]}}), FeatureClass.Road)
    assert [f.source_id for f in res.features] == ["d"]
    assert [r.line for r in res.rejects] == [1, 2, 3]
    assert "Circle" in res.rejects[0].reason


def test_unknown_format():
    with pytest.raises(ValueError):
        parse_features(b"", "shapefile", FeatureClass.Road)


def test_feature_validation():
    p = GeoPoint(0, 0)
    with pytest.raises(ValueError):
        Feature(FeatureClass.Road, GeometryKind.POLYLINE, (p,), "x")
    with pytest.raises(ValueError):
        Feature(FeatureClass.Road, GeometryKind.POINT, (p, p), "x")
    with pytest.raises(ValueError):
        Feature(FeatureClass.Road, GeometryKind.RING,
                (p, GeoPoint(0, 1), GeoPoint(1, 1), GeoPoint(1, 0)), "x")


def test_feature_class_parse():
    assert FeatureClass.parse("wind_turbine") is FeatureClass.WindTurbine
    assert FeatureClass.parse("Electric Power") is FeatureClass.ElectricPower
    with pytest.raises(ValueError):
        FeatureClass.parse("canal")


_coord = st.tuples(st.floats(-89, 89), st.floats(-179.9, 180))
_feature = st.one_of(
    st.builds(lambda c, i: Feature(FeatureClass.Road, GeometryKind.POINT, (GeoPoint(*c),), i),
              _coord, st.text("abc123", min_size=1, max_size=5)),
    st.builds(lambda cs, i: Feature(FeatureClass.Road, GeometryKind.POLYLINE,
                                    tuple(GeoPoint(*c) for c in cs), i),
              st.lists(_coord, min_size=2, max_size=6), st.text("xyz", min_size=1, max_size=5)),
    st.builds(lambda cs, i, a: Feature(FeatureClass.Road, GeometryKind.RING,
                                       close_ring([GeoPoint(*c) for c in cs]), i, a),
              st.lists(_coord, min_size=3, max_size=6, unique=True),
              st.text("pq", min_size=1, max_size=5),
              st.dictionaries(st.text("kv", min_size=1, max_size=3), st.text(max_size=5),
                              max_size=3)),
)


@settings(max_examples=100, deadline=None)
@given(st.lists(_feature, max_size=6))
def test_serialize_round_trip(features):
    data = serialize_features(features)
    back = parse_geojson(data, FeatureClass.Road)
    assert back.rejects == []
    assert back.features == features
    assert serialize_features(back.features) == data


# -- boundaries ------------------------------------------------------------

U_RING = [(0, 0), (3, 0), (3, 3), (2, 3), (2, 1), (1, 1), (1, 3), (0, 3), (0, 0)]


def test_u_shaped_polygon_matches_winding_number():
    b = LocationBoundary("US-UU", (Polygon(tuple(GeoPoint(y, x) for x, y in U_RING)),))
    rng = np.random.default_rng(9)
    xs = rng.uniform(-0.5, 3.5, 1000)
    ys = rng.uniform(-0.5, 3.5, 1000)
    # points exactly on edges and vertices, and in the notch
    xs[:8] = [1.5, 2.0, 0.0, 3.0, 1.0, 1.5, 0.5, 2.5]
    ys[:8] = [1.0, 2.0, 0.0, 1.5, 3.0, 2.0, 3.0, 3.0]
    got = b.contains(ys, xs)
    expected = np.array([inside_simple_ring(x, y, U_RING) for x, y in zip(xs, ys)])
    np.testing.assert_array_equal(got, expected)
    assert got[:8].tolist() == [True, True, True, True, True, False, True, True]


def test_point_in_boundary_examples():
    b = _box(-1, -1, 1, 1)
    assert point_in_boundary(GeoPoint(0, 0), b)
    assert not point_in_boundary(GeoPoint(10, 10), b)
    assert point_in_boundary(GeoPoint(1, 0.5), b)  # on an edge


def test_holes_exclude_interior_but_keep_their_edge():
    hole = (GeoPoint(-0.5, -0.5), GeoPoint(-0.5, 0.5), GeoPoint(0.5, 0.5), GeoPoint(0.5, -0.5))
    b = _box(-1, -1, 1, 1, holes=(hole,))
    got = b.contains(np.array([0.0, 0.5, 0.9, 0.0]), np.array([0.0, 0.0, 0.0, 0.5]))
    assert got.tolist() == [False, True, True, True]
    with pytest.raises(ValueError):
        _box(-1, -1, 1, 1, holes=((GeoPoint(5, 5), GeoPoint(5, 6), GeoPoint(6, 6)),))


def test_multipolygon_boundary_round_trip():
    doc = {"type": "FeatureCollection", "features": [
        {"type": "Feature", "properties": {"iso_3166_2": "US-HI"},
         "geometry": {"type": "MultiPolygon", "coordinates": [
             [[[0, 0], [1, 0], [1, 1], [0, 0]]], [[[5, 5], [6, 5], [6, 6], [5, 5]]]]}},
        {"type": "Feature", "properties": {"iso_3166_2": "US-AK"},
         "geometry": {"type": "Polygon", "coordinates": [[[9, 9], [10, 9], [10, 10], [9, 9]]]}}]}
    bs = parse_boundaries(json.dumps(doc).encode())
    assert list(bs) == ["US-AK", "US-HI"]
    hi = bs["US-HI"]
    assert hi.contains(np.array([0.2, 5.2, 3.0]), np.array([0.8, 5.8, 3.0])).tolist() == \
        [True, True, False]
    again = parse_boundaries(serialize_boundary(hi))["US-HI"]
    assert again.polygons == hi.polygons
    with pytest.raises(ValueError):
        parse_boundaries(json.dumps({"type": "Feature", "properties": {},
                                     "geometry": doc["features"][1]["geometry"]}).encode())


def test_clip_ten_vertex_line():
    b = _box(-1, -1, 1, 1)
    lats = [0, 0, 0, 5, 5, 5, 0, 0, 0, 0]
    pts = tuple(GeoPoint(lat, -0.9 + 0.2 * i) for i, lat in enumerate(lats))
    f = Feature(FeatureClass.Road, GeometryKind.POLYLINE, pts, "r1")
    out = clip_features([f], b)
    assert [g.points for g in out] == [pts[0:3], pts[6:10]]
    assert [g.source_id for g in out] == ["r1:0", "r1:1"]


def test_clip_inside_and_outside():
    b = _box(-1, -1, 1, 1)
    inside = Feature(FeatureClass.Road, GeometryKind.POLYLINE, (GeoPoint(0, 0), GeoPoint(0.5, 0.5)), "in")
    outside = Feature(FeatureClass.Road, GeometryKind.POLYLINE, (GeoPoint(5, 0), GeoPoint(6, 0)), "out")
    assert clip_features([inside, outside], b) == [inside]


def test_clip_single_vertex_runs():
    b = _box(-1, -1, 1, 1)
    pts = (GeoPoint(5, 0), GeoPoint(0, 0), GeoPoint(5, 1))
    line = Feature(FeatureClass.Road, GeometryKind.POLYLINE, pts, "r")
    assert clip_features([line], b) == []
    turb = Feature(FeatureClass.WindTurbine, GeometryKind.POLYLINE, pts, "t")
    (only,) = clip_features([turb], b)
    assert only.kind is GeometryKind.POINT and only.points == (GeoPoint(0, 0),)


def test_clip_ring_is_opened_across_its_start():
    b = _box(-1, -1, 1, 1)
    ring = close_ring([GeoPoint(0, 0), GeoPoint(0, 5), GeoPoint(0.5, 0.5), GeoPoint(0.6, 0.0)])
    f = Feature(FeatureClass.GolfCourse, GeometryKind.RING, ring, "g")
    (piece,) = clip_features([f], b)
    assert piece.kind is GeometryKind.POLYLINE
    assert piece.points == (GeoPoint(0.5, 0.5), GeoPoint(0.6, 0.0), GeoPoint(0, 0))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), min_size=2, max_size=12))
def test_clip_never_invents_points(coords):
    b = _box(-1, -1, 1, 1)
    pts = tuple(GeoPoint(y, x) for x, y in coords)
    f = Feature(FeatureClass.Road, GeometryKind.POLYLINE, pts, "r")
    out = clip_features([f], b)
    source = Counter(pts)
    produced = Counter(p for g in out for p in g.points)
    assert all(produced[p] <= source[p] for p in produced)
    assert all(point_in_boundary(p, b) for g in out for p in g.points)


# -- point sets ------------------------------------------------------------

def test_build_pointset_one_segment():
    b = _box(-106, 38, -105, 39)
    a = GeoPoint(38.5, -105.5)
    f = Feature(FeatureClass.Road, GeometryKind.POLYLINE, (a, direct_geodesic(a, 60.0, 304.8)), "r")
    ps = build_pointset([f], b, SPACING, provenance=["abc"])
    assert len(ps) == 3 and ps.location == "US-ZZ" and ps.feature_class is FeatureClass.Road
    assert ps.provenance == ("abc",)


def test_build_pointset_empty():
    b = _box(-106, 38, -105, 39)
    ps = build_pointset([], b, SPACING, FeatureClass.Pipeline)
    assert len(ps) == 0 and ps.feature_class is FeatureClass.Pipeline
    with pytest.raises(ValueError):
        build_pointset([], b, SPACING)


def test_build_pointset_rejects_mixed_classes():
    b = _box(-106, 38, -105, 39)
    p = (GeoPoint(38.5, -105.5),)
    fs = [Feature(FeatureClass.Road, GeometryKind.POINT, p, "a"),
          Feature(FeatureClass.Railway, GeometryKind.POINT, p, "b")]
    with pytest.raises(ValueError):
        build_pointset(fs, b, SPACING)


def test_build_pointset_matches_manual_steps():
    b = _box(-106, 38, -105, 39)
    rng = np.random.default_rng(12)
    feats = []
    for i in range(6):
        start = GeoPoint(rng.uniform(37.9, 39.1), rng.uniform(-106.1, -104.9))
        pts = [start]
        for _ in range(4):
            pts.append(direct_geodesic(pts[-1], rng.uniform(0, 360), rng.uniform(100, 5000)))
        feats.append(Feature(FeatureClass.Railway, GeometryKind.POLYLINE, tuple(pts), f"r{i}"))
    ring = close_ring([direct_geodesic(GeoPoint(38.5, -105.5), az, 800.0) for az in (0, 120, 240)])
    feats.append(Feature(FeatureClass.Railway, GeometryKind.RING, ring, "loop"))
    ps = build_pointset(feats, b, SPACING)
    manual = []
    for f in feats:
        mask = [point_in_boundary(p, b) for p in f.points]
        if f.kind is GeometryKind.RING:
            assert all(mask)
            manual += interpolate_polyline(f.points, SPACING)[:-1]
            continue
        run = []
        for p, m in zip(list(f.points) + [None], mask + [False]):
            if m:
                run.append(p)
            else:
                if len(run) >= 2:
                    manual += interpolate_polyline(run, SPACING)
                run = []
    manual = [p for p in manual if point_in_boundary(p, b)]
    assert Counter(ps.points) == Counter(manual)
    assert all(point_in_boundary(p, b) for p in ps.points)


def test_feature_points_for_rings_drop_the_repeat():
    ring = close_ring([direct_geodesic(GeoPoint(10, 10), az, 1000.0) for az in (0, 90, 180, 270)])
    f = Feature(FeatureClass.GolfCourse, GeometryKind.RING, ring, "g")
    pts = feature_points(f, SPACING)
    assert pts[0] == ring[0] and pts[-1] != ring[0]
    assert len(set(pts)) == len(pts)


def test_pointset_csv_round_trip():
    ps = PointSet("US-ZZ", FeatureClass.Road, np.array([38.123456789012345, -0.0]),
                  np.array([-105.1, 180.0]), ("d1", "d2"))
    data = write_pointset(ps)
    back = read_pointset(data)
    assert back.same_points(ps) and back.provenance == ps.provenance
    assert write_pointset(back) == data
    empty = PointSet("US-ZZ", FeatureClass.Road, np.empty(0), np.empty(0))
    assert len(read_pointset(write_pointset(empty), "US-ZZ", FeatureClass.Road)) == 0
    with pytest.raises(ValueError):
        read_pointset(write_pointset(empty))
    with pytest.raises(ValueError):
        read_pointset(b"wrong,header\n")


def test_pointset_is_read_only():
    ps = PointSet("US-ZZ", FeatureClass.Road, np.array([1.0]), np.array([2.0]))
    with pytest.raises(ValueError):
        ps.lat[0] = 3.0
    with pytest.raises(ValueError):
        PointSet("US-ZZ", FeatureClass.Road, np.array([1.0, 2.0]), np.array([2.0]))
