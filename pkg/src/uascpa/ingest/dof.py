"""Reader for the fixed-width FAA Digital Obstacle File."""

from __future__ import annotations

import json
import re
from fractions import Fraction
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

from ..geodesy import GeoPoint, small_circle
from ..units import FT_TO_M
from .features import Feature, FeatureClass, GeometryKind, Reject, close_ring


@dataclass(frozen=True)
class DofLayout:
    columns: Mapping[str, tuple[int, int]]
    accuracy_ft: Mapping[str, float]
    unknown_codes: frozenset[str]
    default_accuracy_ft: float
    header_separator: str

    @classmethod
    def from_dict(cls, d: Mapping) -> "DofLayout":
        cols = {k: (int(v[0]), int(v[1])) for k, v in d["columns"].items()}
        for key in ("latitude", "longitude", "agl_height_ft", "horizontal_accuracy", "obstacle_type"):
            if key not in cols:
                raise ValueError(f"DOF layout lacks column {key!r}")
        default = float(d.get("default_accuracy_ft", 250.0))
        if not default > 0:
            raise ValueError("default accuracy must be positive")
        return cls(cols, {str(k): float(v) for k, v in d["horizontal_accuracy_ft"].items()},
                   frozenset(str(c) for c in d.get("unknown_accuracy_codes", [])), default,
                   d.get("header_separator", r"^-{10,}\s*$"))

    @classmethod
    def load(cls, path: str | Path | None = None) -> "DofLayout":
        if path is None:
            text = resources.files(__package__).joinpath("data/dof_layout.json").read_text()
        else:
            text = Path(path).read_text()
        return cls.from_dict(json.loads(text))

    def field(self, line: str, name: str) -> str:
        start, end = self.columns[name]
        return line[start - 1:end].strip()


@dataclass(frozen=True)
class ObstaclePoint:
    location: GeoPoint
    agl_height_ft: float
    horizontal_accuracy_radius_ft: float
    obstacle_type: str
    oas_number: str = ""
    accuracy_defaulted: bool = False
    line: int = 0

    def __post_init__(self):
        if not (self.agl_height_ft >= 0 and self.agl_height_ft != float("inf")):
            raise ValueError(f"AGL height must be finite and >= 0, got {self.agl_height_ft}")
        if not self.horizontal_accuracy_radius_ft > 0:
            raise ValueError("horizontal accuracy radius must be positive")


@dataclass
class DofParseResult:
    obstacles: list[ObstaclePoint]
    rejects: list[Reject]


_DMS = re.compile(r"^\s*(\d{1,3})[-\s]+(\d{1,2})[-\s]+(\d{1,2}(?:\.\d*)?)\s*([NSEW])\s*$")


def dms_to_degrees(text: str) -> float:
    """'42-30-00.00N' or '42 30 00.00N' to signed decimal degrees.

    Evaluated in exact rational arithmetic, so the result is the double
    nearest the true value.
    """
    m = _DMS.match(text)
    if not m:
        raise ValueError(f"malformed DMS value {text!r}")
    deg, minutes, seconds = int(m[1]), int(m[2]), Fraction(m[3])
    if minutes >= 60 or seconds >= 60:
        raise ValueError(f"minutes/seconds out of range in {text!r}")
    value = deg + Fraction(minutes, 60) + seconds / 3600
    hemi = m[4]
    limit = 90 if hemi in "NS" else 180
    if value > limit:
        raise ValueError(f"{text!r} exceeds {limit} degrees")
    return float(-value if hemi in "SW" else value)


def _data_lines(lines: Sequence[str], layout: DofLayout) -> int:
    """Index of the first data line: after the dashed header rule if present."""
    sep = re.compile(layout.header_separator)
    for i, line in enumerate(lines[:50]):
        if sep.match(line):
            return i + 1
    return 0


def parse_dof(stream: IO[bytes] | bytes, layout: DofLayout | None = None) -> DofParseResult:
    """Parse DOF records; malformed rows go to ``rejects`` and parsing continues."""
    layout = layout or DofLayout.load()
    raw = stream if isinstance(stream, bytes) else stream.read()
    lines = raw.decode("latin-1").splitlines()
    obstacles: list[ObstaclePoint] = []
    rejects: list[Reject] = []
    need = max(end for start, end in (layout.columns[k] for k in
                                      ("latitude", "longitude", "agl_height_ft")))
    for i in range(_data_lines(lines, layout), len(lines)):
        line = lines[i]
        lineno = i + 1
        if not line.strip():
            continue
        if len(line.rstrip()) < need:
            rejects.append(Reject(lineno, "truncated record", line))
            continue
        try:
            lat = dms_to_degrees(layout.field(line, "latitude"))
            lon = dms_to_degrees(layout.field(line, "longitude"))
        except ValueError as exc:
            rejects.append(Reject(lineno, f"bad coordinate: {exc}", line))
            continue
        agl_text = layout.field(line, "agl_height_ft")
        if not agl_text.isdigit():
            rejects.append(Reject(lineno, f"bad AGL height {agl_text!r}", line))
            continue
        code = layout.field(line, "horizontal_accuracy")
        radius = layout.accuracy_ft.get(code)
        defaulted = radius is None
        if defaulted:
            radius = layout.default_accuracy_ft
        obstacles.append(ObstaclePoint(
            GeoPoint(lat, lon), float(agl_text), radius, layout.field(line, "obstacle_type"),
            layout.field(line, "oas_number") if "oas_number" in layout.columns else "",
            defaulted, lineno))
    return DofParseResult(obstacles, rejects)


def filter_obstacles(obstacles: Iterable[ObstaclePoint], min_height_ft: float) -> list[ObstaclePoint]:
    """Obstacles at least ``min_height_ft`` tall, in input order."""
    if not min_height_ft >= 0:
        raise ValueError(f"minimum height must be >= 0, got {min_height_ft}")
    return [o for o in obstacles if o.agl_height_ft >= min_height_ft]


def obstacle_to_circle(o: ObstaclePoint, spacing_m: float) -> Feature:
    """Closed ring at the obstacle's horizontal-uncertainty radius."""
    ring = small_circle(o.location, o.horizontal_accuracy_radius_ft * FT_TO_M, spacing_m)
    attrs = {"agl_height_ft": repr(o.agl_height_ft), "obstacle_type": o.obstacle_type,
             "accuracy_radius_ft": repr(o.horizontal_accuracy_radius_ft)}
    if o.accuracy_defaulted:
        attrs["accuracy_defaulted"] = "true"
    return Feature(FeatureClass.FaaObstacle, GeometryKind.RING, close_ring(ring),
                   o.oas_number or f"line{o.line}", attrs)
