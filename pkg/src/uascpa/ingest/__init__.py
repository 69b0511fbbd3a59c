"""Parsing, filtering and clipping of the source datasets into PointSets."""

from .boundary import (LocationBoundary, Polygon, clip_features, parse_boundaries,
                       point_in_boundary, points_in_boundary, serialize_boundary)
from .dof import (DofLayout, DofParseResult, ObstaclePoint, dms_to_degrees, filter_obstacles,
                  obstacle_to_circle, parse_dof)
from .features import (Feature, FeatureClass, GeometryKind, ParseResult, Reject, close_ring,
                       parse_delimited, parse_features, parse_geojson, serialize_features)
from .pointset import (PointSet, build_pointset, bytes_digest, feature_points, file_digest,
                       read_pointset, write_pointset)

__all__ = [
    "DofLayout", "DofParseResult", "Feature", "FeatureClass", "GeometryKind", "LocationBoundary",
    "ObstaclePoint", "ParseResult", "PointSet", "Polygon", "Reject", "build_pointset",
    "bytes_digest", "clip_features", "close_ring", "dms_to_degrees", "feature_points",
    "file_digest", "filter_obstacles", "obstacle_to_circle", "parse_boundaries",
    "parse_delimited", "parse_dof", "parse_features", "parse_geojson", "point_in_boundary",
    "points_in_boundary", "read_pointset", "serialize_boundary", "serialize_features",
    "write_pointset",
]
