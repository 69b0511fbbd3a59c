"""Exact geodesic range and nearest-neighbour queries over a static point set.

Points are bucketed into cubic voxels of Earth-centred Cartesian space.
The straight-line chord between two surface points never exceeds their
geodesic distance, so every point within geodesic radius r lies inside the
voxels overlapping a cube of half-width r around the query.  That bound is
valid everywhere, poles and the antimeridian included, and the final answer
is always decided by the exact inverse geodesic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit

from . import _karney
from .geodesy import WGS84, Ellipsoid, GeoPoint

DEFAULT_CELL_M = 111_120.0
MIN_CELL_M = 25.0
CHORD_TOL_M = 1e-6
_OFFSET = 7.0e6
_BITS = 20
_MAXI = (1 << _BITS) - 1


class Neighbor(NamedTuple):
    ordinal: int
    point: GeoPoint
    distance_m: float


def to_ecef(lat, lon, ellipsoid: Ellipsoid = WGS84):
    """Surface (h = 0) geodetic coordinates to Earth-centred x, y, z."""
    phi = np.radians(np.asarray(lat, dtype=np.float64))
    lam = np.radians(np.asarray(lon, dtype=np.float64))
    sphi = np.sin(phi)
    cphi = np.cos(phi)
    e2 = ellipsoid.e2
    n = ellipsoid.semi_major_m / np.sqrt(1.0 - e2 * sphi * sphi)
    return (np.ascontiguousarray(n * cphi * np.cos(lam)),
            np.ascontiguousarray(n * cphi * np.sin(lam)),
            np.ascontiguousarray(n * (1.0 - e2) * sphi))


def certain_chord(radius_m: float, ellipsoid: Ellipsoid = WGS84) -> float:
    """Chord length below which the geodesic distance is surely <= radius.

    A surface geodesic is a space curve whose curvature is bounded by the
    largest normal curvature of the ellipsoid, kappa = 1 / (a (1 - e^2)).
    A curve of length L with curvature <= kappa spans a chord of at least
    (2 / kappa) sin(kappa L / 2), so a shorter chord implies L <= radius.
    Only used for radii well below the bound's range of validity.
    """
    if radius_m > 1_000_000.0:
        return -1.0
    kappa = 1.0 / ellipsoid.min_curvature_radius_m
    return (2.0 / kappa) * math.sin(kappa * radius_m / 2.0) * (1.0 - 1e-12) - CHORD_TOL_M


@njit(cache=True, nogil=True)
def _voxel(v, cell):
    i = int(math.floor((v + _OFFSET) / cell))
    return min(max(i, 0), _MAXI)


@njit(cache=True, nogil=True)
def _gather(x, y, z, reach, cell, ukeys, ustart, uend):
    """Positions (into the voxel-sorted arrays) of points in voxels that
    overlap the cube of half-width ``reach`` around (x, y, z)."""
    ix0 = _voxel(x - reach, cell)
    ix1 = _voxel(x + reach, cell)
    iy0 = _voxel(y - reach, cell)
    iy1 = _voxel(y + reach, cell)
    iz0 = _voxel(z - reach, cell)
    iz1 = _voxel(z + reach, cell)
    nu = ukeys.shape[0]
    nvox = (ix1 - ix0 + 1) * (iy1 - iy0 + 1) * (iz1 - iz0 + 1)
    hits = np.empty(min(nvox, nu), dtype=np.int64)
    nh = 0
    if nvox <= nu:
        for ix in range(ix0, ix1 + 1):
            for iy in range(iy0, iy1 + 1):
                base = (ix << (2 * _BITS)) | (iy << _BITS)
                lo = np.searchsorted(ukeys, base | iz0)
                for u in range(lo, nu):
                    if ukeys[u] > (base | iz1):
                        break
                    hits[nh] = u
                    nh += 1
    else:
        mask = (1 << _BITS) - 1
        for u in range(nu):
            k = ukeys[u]
            ix = k >> (2 * _BITS)
            iy = (k >> _BITS) & mask
            iz = k & mask
            if ix0 <= ix <= ix1 and iy0 <= iy <= iy1 and iz0 <= iz <= iz1:
                hits[nh] = u
                nh += 1
    total = 0
    for h in range(nh):
        total += uend[hits[h]] - ustart[hits[h]]
    pos = np.empty(total, dtype=np.int64)
    k = 0
    for h in range(nh):
        for p in range(ustart[hits[h]], uend[hits[h]]):
            pos[k] = p
            k += 1
    return pos


@njit(cache=True, nogil=True)
def _range_kernel(lat, lon, x, y, z, radius, cell, ukeys, ustart, uend,
                  slat, slon, sx, sy, sz, a, f):
    pos = _gather(x, y, z, radius + CHORD_TOL_M, cell, ukeys, ustart, uend)
    keep = np.empty(pos.shape[0], dtype=np.int64)
    dist = np.empty(pos.shape[0])
    n = 0
    for k in range(pos.shape[0]):
        p = pos[k]
        dx = sx[p] - x
        dy = sy[p] - y
        dz = sz[p] - z
        if math.sqrt(dx * dx + dy * dy + dz * dz) > radius + CHORD_TOL_M:
            continue
        d, _, _ = _karney.inverse(lat, lon, slat[p], slon[p], a, f)
        if d <= radius:
            keep[n] = p
            dist[n] = d
            n += 1
    return keep[:n], dist[:n]


@njit(cache=True, nogil=True)
def _nearest_kernel(qlat, qlon, qx, qy, qz, radius, inner, cell, ukeys, ustart, uend,
                    slat, slon, sx, sy, sz, sord, a, f):
    m = qlat.shape[0]
    out_d = np.empty(m)
    out_o = np.empty(m, dtype=np.int64)
    out_az = np.empty(m)
    out_c = np.empty(m, dtype=np.int64)
    for i in range(m):
        pos = _gather(qx[i], qy[i], qz[i], radius + CHORD_TOL_M, cell, ukeys, ustart, uend)
        d, j, az, c = _karney.nearest_in_candidates(
            qlat[i], qlon[i], qx[i], qy[i], qz[i], slat[pos], slon[pos],
            sx[pos], sy[pos], sz[pos], sord[pos], radius, inner, CHORD_TOL_M, a, f)
        out_d[i] = d
        out_o[i] = sord[pos[j]] if j >= 0 else -1
        out_az[i] = az
        out_c[i] = c
    return out_d, out_o, out_az, out_c


@dataclass(frozen=True, eq=False)
class SpatialIndex:
    """Immutable voxel index; arrays are stored sorted by (voxel, ordinal)."""

    size: int
    cell_size_m: float
    ellipsoid: Ellipsoid
    lat: np.ndarray
    lon: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    ordinal: np.ndarray
    voxel_keys: np.ndarray
    voxel_start: np.ndarray
    voxel_end: np.ndarray

    def point(self, ordinal: int) -> GeoPoint:
        pos = int(np.flatnonzero(self.ordinal == ordinal)[0])
        return GeoPoint(self.lat[pos], self.lon[pos])


def _coord_arrays(points) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(points, "lat") and hasattr(points, "lon"):
        return (np.ascontiguousarray(points.lat, dtype=np.float64),
                np.ascontiguousarray(points.lon, dtype=np.float64))
    pts = list(points)
    lat = np.array([p.lat_deg for p in pts], dtype=np.float64)
    lon = np.array([p.lon_deg for p in pts], dtype=np.float64)
    return lat, lon


def build_index(points, cell_size_m: float = DEFAULT_CELL_M,
                ellipsoid: Ellipsoid = WGS84) -> SpatialIndex:
    """Index a PointSet (or any sequence of GeoPoint).

    Ordinals are positions in the input order.  ``cell_size_m`` only
    affects speed, never results.
    """
    if not (cell_size_m >= MIN_CELL_M and math.isfinite(cell_size_m)):
        raise ValueError(f"cell size must be >= {MIN_CELL_M} m, got {cell_size_m}")
    lat, lon = _coord_arrays(points)
    x, y, z = to_ecef(lat, lon, ellipsoid)
    off = _OFFSET
    ix = np.floor((x + off) / cell_size_m).astype(np.int64)
    iy = np.floor((y + off) / cell_size_m).astype(np.int64)
    iz = np.floor((z + off) / cell_size_m).astype(np.int64)
    keys = (ix << (2 * _BITS)) | (iy << _BITS) | iz
    order = np.argsort(keys, kind="stable")
    skeys = keys[order]
    ukeys, ustart, counts = np.unique(skeys, return_index=True, return_counts=True)
    return SpatialIndex(
        size=len(lat), cell_size_m=float(cell_size_m), ellipsoid=ellipsoid,
        lat=lat[order], lon=lon[order], x=x[order], y=y[order], z=z[order],
        ordinal=order.astype(np.int64),
        voxel_keys=ukeys.astype(np.int64), voxel_start=ustart.astype(np.int64),
        voxel_end=(ustart + counts).astype(np.int64))


def _check_radius(radius_m: float) -> None:
    if not (radius_m > 0 and math.isfinite(radius_m)):
        raise ValueError(f"radius must be positive, got {radius_m}")


def range_query(index: SpatialIndex, center: GeoPoint, radius_m: float) -> list[Neighbor]:
    """All indexed points within geodesic ``radius_m`` of ``center``, by ordinal."""
    _check_radius(radius_m)
    if index.size == 0:
        return []
    cx, cy, cz = (float(v[0]) for v in to_ecef([center.lat_deg], [center.lon_deg], index.ellipsoid))
    ell = index.ellipsoid
    pos, dist = _range_kernel(center.lat_deg, center.lon_deg, cx, cy, cz, float(radius_m),
                              index.cell_size_m, index.voxel_keys, index.voxel_start,
                              index.voxel_end, index.lat, index.lon, index.x, index.y,
                              index.z, ell.semi_major_m, ell.flattening)
    out = [Neighbor(int(index.ordinal[p]), GeoPoint(index.lat[p], index.lon[p]), float(d))
           for p, d in zip(pos, dist)]
    out.sort(key=lambda n: n.ordinal)
    return out


@dataclass(frozen=True)
class NearestBatch:
    """Per-query nearest results; ``ordinal`` is -1 where nothing is in range
    (and ``distance_m`` then holds the radius)."""

    distance_m: np.ndarray
    ordinal: np.ndarray
    fwd_azimuth_deg: np.ndarray
    in_range_count: np.ndarray


def nearest_many(index: SpatialIndex, lats, lons, max_radius_m: float) -> NearestBatch:
    """Nearest indexed point within ``max_radius_m`` for each query position.

    Ties in distance go to the lowest ordinal.  Also counts, per query, how
    many indexed points lie within the radius.
    """
    _check_radius(max_radius_m)
    qlat = np.ascontiguousarray(lats, dtype=np.float64)
    qlon = np.ascontiguousarray(lons, dtype=np.float64)
    m = qlat.shape[0]
    if index.size == 0 or m == 0:
        return NearestBatch(np.full(m, float(max_radius_m)), np.full(m, -1, dtype=np.int64),
                            np.full(m, np.nan), np.zeros(m, dtype=np.int64))
    ell = index.ellipsoid
    qx, qy, qz = to_ecef(qlat, qlon, ell)
    d, o, az, c = _nearest_kernel(
        qlat, qlon, qx, qy, qz, float(max_radius_m), certain_chord(max_radius_m, ell),
        index.cell_size_m, index.voxel_keys, index.voxel_start, index.voxel_end,
        index.lat, index.lon, index.x, index.y, index.z, index.ordinal,
        ell.semi_major_m, ell.flattening)
    return NearestBatch(d, o, az, c)


def nearest_within(index: SpatialIndex, center: GeoPoint,
                   max_radius_m: float) -> Neighbor | None:
    """Closest indexed point within ``max_radius_m``, lowest ordinal on ties."""
    res = nearest_many(index, [center.lat_deg], [center.lon_deg], max_radius_m)
    o = int(res.ordinal[0])
    if o < 0:
        return None
    return Neighbor(o, index.point(o), float(res.distance_m[0]))

