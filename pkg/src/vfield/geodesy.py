"""WGS84 coordinate frames and conversions.

Frames
------
- geodetic: latitude/longitude in degrees, ellipsoidal height in meters
- ECEF: Earth-centered Earth-fixed Cartesian, meters
- ENU: local East-North-Up tangent basis at a geodetic point
- engine: ENU-aligned units relative to a declared origin, 1 unit = 1 cm

All math is 64-bit and all functions are pure. Heights are ellipsoidal
(WGS84); no geoid model is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NearCenter

# WGS84 defining constants (normative)
WGS84_A = 6378137.0
WGS84_INV_F = 298.257223563
WGS84_F = 1.0 / WGS84_INV_F
WGS84_B = WGS84_A * (1.0 - WGS84_F)
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)  # first eccentricity squared

UNITS_PER_METER = 100.0  # engine unit = exactly 1 cm


def normalize_longitude(lon_deg: float) -> float:
    """Wrap a longitude in degrees into [-180, 180)."""
    lon = math.fmod(lon_deg + 180.0, 360.0)
    if lon < 0.0:
        lon += 360.0
    return lon - 180.0


@dataclass(frozen=True)
class GeodeticCoord:
    """Position on/near the WGS84 ellipsoid: degrees, degrees, meters."""

    latitude_deg: float
    longitude_deg: float
    height_m: float = 0.0

    def __post_init__(self):
        if not (-90.0 <= self.latitude_deg <= 90.0):
            raise ValueError(f"latitude out of range: {self.latitude_deg}")
        if not math.isfinite(self.longitude_deg) or not math.isfinite(self.height_m):
            raise ValueError("non-finite geodetic component")
        object.__setattr__(
            self, "longitude_deg", normalize_longitude(self.longitude_deg)
        )


@dataclass(frozen=True)
class EcefVec:
    """Earth-centered Earth-fixed Cartesian position, meters."""

    x_m: float
    y_m: float
    z_m: float

    def __post_init__(self):
        if not all(map(math.isfinite, (self.x_m, self.y_m, self.z_m))):
            raise ValueError("non-finite ECEF component")

    def as_array(self) -> np.ndarray:
        return np.array([self.x_m, self.y_m, self.z_m], dtype=np.float64)

    @staticmethod
    def from_array(a) -> "EcefVec":
        return EcefVec(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class EnuFrame:
    """Local tangent basis at ``origin``; east/north/up are unit ECEF vectors."""

    origin: EcefVec
    east: np.ndarray
    north: np.ndarray
    up: np.ndarray

    def rotation(self) -> np.ndarray:
        """Rows are east, north, up: maps ECEF offsets into ENU coordinates."""
        return np.vstack([self.east, self.north, self.up])

    def to_enu(self, e: EcefVec | np.ndarray) -> np.ndarray:
        d = (e.as_array() if isinstance(e, EcefVec) else np.asarray(e)) - self.origin.as_array()
        return self.rotation() @ d

    def from_enu(self, enu) -> EcefVec:
        enu = np.asarray(enu, dtype=np.float64)
        return EcefVec.from_array(self.origin.as_array() + self.rotation().T @ enu)


@dataclass(frozen=True)
class EngineVec:
    """Engine-unit offsets (x=east, y=north, z=up) from an EngineOrigin."""

    x_u: float
    y_u: float
    z_u: float


@dataclass(frozen=True)
class EngineOrigin:
    """Anchor of the engine coordinate system: an ECEF point plus its ENU frame."""

    ecef: EcefVec
    frame: EnuFrame


def geodetic_to_ecef_arrays(lat_deg, lon_deg, height_m) -> np.ndarray:
    """Vectorized WGS84 closed-form geodetic -> ECEF; returns (..., 3)."""
    lat = np.deg2rad(np.asarray(lat_deg, dtype=np.float64))
    lon = np.deg2rad(np.asarray(lon_deg, dtype=np.float64))
    h = np.asarray(height_m, dtype=np.float64)
    sin_lat = np.sin(lat)
    cos_lat = np.cos(lat)
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    x = (n + h) * cos_lat * np.cos(lon)
    y = (n + h) * cos_lat * np.sin(lon)
    z = (n * (1.0 - WGS84_E2) + h) * sin_lat
    return np.stack([x, y, z], axis=-1)


def ecef_to_geodetic_arrays(xyz) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized ECEF -> geodetic (lat_deg, lon_deg, height_m).

    Bowring's initial estimate refined by fixed-point iteration until the
    height update falls below 1e-9 m (at most 10 iterations).
    """
    xyz = np.asarray(xyz, dtype=np.float64)
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    p = np.hypot(x, y)
    lon = np.degrees(np.arctan2(y, x))
    # arctan2 yields (-180, 180]; the type wants [-180, 180)
    lon = np.where(lon >= 180.0, lon - 360.0, lon)

    ep2 = (WGS84_A * WGS84_A - WGS84_B * WGS84_B) / (WGS84_B * WGS84_B)
    beta = np.arctan2(z * WGS84_A, p * WGS84_B)
    lat = np.arctan2(
        z + ep2 * WGS84_B * np.sin(beta) ** 3,
        p - WGS84_E2 * WGS84_A * np.cos(beta) ** 3,
    )

    h = np.zeros_like(p)
    for _ in range(10):
        sin_lat = np.sin(lat)
        cos_lat = np.cos(lat)
        n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
        # robust at the poles, unlike p/cos(lat) - N
        h_new = p * cos_lat + z * sin_lat - WGS84_A * np.sqrt(
            1.0 - WGS84_E2 * sin_lat * sin_lat
        )
        lat = np.arctan2(z, p * (1.0 - WGS84_E2 * n / (n + h_new)))
        if np.all(np.abs(h_new - h) < 1e-9):
            h = h_new
            break
        h = h_new

    return np.degrees(lat), lon, h


def geodetic_to_ecef(g: GeodeticCoord) -> EcefVec:
    """WGS84 closed-form conversion of a geodetic coordinate to ECEF."""
    return EcefVec.from_array(
        geodetic_to_ecef_arrays(g.latitude_deg, g.longitude_deg, g.height_m)
    )


def ecef_to_geodetic(e: EcefVec) -> GeodeticCoord:
    """Invert geodetic_to_ecef to within 1e-6 m for heights in [-11 km, 100 km].

    Raises NearCenter for points within 1 m of the Earth's center.
    """
    v = e.as_array()
    if float(np.linalg.norm(v)) <= 1.0:
        raise NearCenter(f"|ecef| = {np.linalg.norm(v):.3f} m is too close to center")
    lat, lon, h = ecef_to_geodetic_arrays(v)
    return GeodeticCoord(float(lat), float(lon), float(h))


def enu_frame_at(g: GeodeticCoord) -> EnuFrame:
    """Right-handed East-North-Up basis at ``g``; up is the ellipsoid normal.

    At the poles east degenerates; the supplied longitude still fixes it
    (for longitude 0 at the north pole, east points toward 90 degrees E).
    """
    lat = math.radians(g.latitude_deg)
    lon = math.radians(g.longitude_deg)
    sin_lat, cos_lat = math.sin(lat), math.cos(lat)
    sin_lon, cos_lon = math.sin(lon), math.cos(lon)
    east = np.array([-sin_lon, cos_lon, 0.0])
    north = np.array([-sin_lat * cos_lon, -sin_lat * sin_lon, cos_lat])
    up = np.array([cos_lat * cos_lon, cos_lat * sin_lon, sin_lat])
    return EnuFrame(origin=geodetic_to_ecef(g), east=east, north=north, up=up)


def engine_origin_at(g: GeodeticCoord) -> EngineOrigin:
    frame = enu_frame_at(g)
    return EngineOrigin(ecef=frame.origin, frame=frame)


def ecef_to_engine(e: EcefVec, origin: EngineOrigin) -> EngineVec:
    """Rigid transform into the origin's ENU frame, scaled by 100 units/m."""
    d = e.as_array() - origin.ecef.as_array()
    f = origin.frame
    return EngineVec(
        UNITS_PER_METER * float(np.dot(f.east, d)),
        UNITS_PER_METER * float(np.dot(f.north, d)),
        UNITS_PER_METER * float(np.dot(f.up, d)),
    )


def engine_to_ecef(v: EngineVec, origin: EngineOrigin) -> EcefVec:
    f = origin.frame
    d = (
        (v.x_u / UNITS_PER_METER) * f.east
        + (v.y_u / UNITS_PER_METER) * f.north
        + (v.z_u / UNITS_PER_METER) * f.up
    )
    return EcefVec.from_array(origin.ecef.as_array() + d)
