"""Interpretation toolbox: markers, polyline distance, strike & dip, clip box.

Conventions
-----------
- "Horizontal" is the local ENU tangent plane at the relevant anchor (the
  marker centroid for strike & dip, the first marker for the clip box).
- Strike follows the right-hand rule: dip direction = strike + 90 degrees;
  both are reported.
- Segment distances are straight-line 3D chords in ECEF meters, not
  geodesics and not surface-draped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import (
    CollinearMarkers,
    DegenerateBox,
    NoHit,
    TooFewMarkers,
    UnknownMarker,
)
from .geodesy import (
    EcefVec,
    EnuFrame,
    GeodeticCoord,
    ecef_to_geodetic,
    enu_frame_at,
    geodetic_to_ecef,
)
from .spatial import Footprint, Ray

AREA_EPSILON_M2 = 1e-6  # below this the three markers count as collinear
DIP_EPSILON_DEG = 0.01  # below this the plane counts as horizontal
LINE_EPSILON_M = 1e-6  # below this the third marker sits on the base line


@dataclass
class Marker:
    """A surface point: the atom of every measurement."""

    id: str
    position: GeodeticCoord
    label_visible: bool = True
    created_at: str = ""

    def ecef(self) -> np.ndarray:
        return geodetic_to_ecef(self.position).as_array()


@dataclass(frozen=True)
class PolylineSegment:
    distance_m: float
    elevation_diff_m: float


@dataclass(frozen=True)
class PolylineDistanceResult:
    total_m: float
    segments: tuple[PolylineSegment, ...]


@dataclass(frozen=True)
class StrikeDipResult:
    strike_azimuth_deg: float
    dip_deg: float
    dip_direction_deg: float
    extent_m: float
    horizontal: bool


@dataclass(frozen=True)
class ClipBox:
    """Oriented box: horizontal u/v axes from the anchor, ellipsoidal height band."""

    anchor: GeodeticCoord
    frame: EnuFrame
    axis_u: np.ndarray  # ECEF components, horizontal unit vector
    axis_v: np.ndarray
    width_m: float
    length_m: float
    h_min_m: float
    h_max_m: float


def _utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def polyline_distance(markers: list[Marker]) -> PolylineDistanceResult:
    """Multi-segment chord distance along ordered markers (N >= 2).

    Each segment carries its 3D distance and the signed ellipsoidal
    elevation difference; the total is the sum of segment distances.
    """
    if len(markers) < 2:
        raise TooFewMarkers(f"need at least 2 markers, got {len(markers)}")
    points = np.array([m.ecef() for m in markers])
    heights = [m.position.height_m for m in markers]
    segments = []
    total = 0.0
    for i in range(len(markers) - 1):
        d = float(np.linalg.norm(points[i + 1] - points[i]))
        segments.append(
            PolylineSegment(distance_m=d, elevation_diff_m=heights[i + 1] - heights[i])
        )
        total += d
    return PolylineDistanceResult(total_m=total, segments=tuple(segments))


def strike_dip(m1: Marker, m2: Marker, m3: Marker) -> StrikeDipResult:
    """Orientation of the plane through three markers, in geologic notation.

    Works in the ENU frame at the markers' ECEF centroid; the plane normal
    is oriented upward, dip is its angle from up, dip direction its compass
    azimuth, strike = dip direction - 90 (right-hand rule).  Planes dipping
    less than DIP_EPSILON_DEG are flagged horizontal with zero azimuths.
    """
    points = np.array([m1.ecef(), m2.ecef(), m3.ecef()])
    centroid = points.mean(axis=0)
    frame = enu_frame_at(ecef_to_geodetic(EcefVec.from_array(centroid)))
    local = (points - centroid) @ frame.rotation().T

    normal = np.cross(local[1] - local[0], local[2] - local[0])
    area = 0.5 * float(np.linalg.norm(normal))
    if area <= AREA_EPSILON_M2:
        raise CollinearMarkers(f"triangle area {area:.3e} m^2 below threshold")
    normal /= np.linalg.norm(normal)
    if normal[2] < 0.0:
        normal = -normal

    dip = math.degrees(math.acos(min(normal[2], 1.0)))
    extent = max(
        float(np.linalg.norm(points[i] - points[j]))
        for i in range(3)
        for j in range(i + 1, 3)
    )
    if dip < DIP_EPSILON_DEG:
        return StrikeDipResult(0.0, dip, 0.0, extent, horizontal=True)

    dip_direction = math.degrees(math.atan2(normal[0], normal[1])) % 360.0
    strike = (dip_direction - 90.0) % 360.0
    return StrikeDipResult(strike, dip, dip_direction, extent, horizontal=False)


def clip_box_from_markers(m1: Marker, m2: Marker, m3: Marker, scene) -> ClipBox:
    """Clip box: m1->m2 defines the width axis, m3 the length; the height
    band is the scene's elevation range over the footprint."""
    frame = enu_frame_at(m1.position)
    p1 = m1.ecef()
    local2 = frame.rotation() @ (m2.ecef() - p1)
    local3 = frame.rotation() @ (m3.ecef() - p1)

    u2 = np.array([local2[0], local2[1], 0.0])
    width = float(np.linalg.norm(u2))
    if width <= LINE_EPSILON_M:
        raise DegenerateBox("first two markers horizontally coincident")
    u_local = u2 / width

    v_local = np.cross(np.array([0.0, 0.0, 1.0]), u_local)
    length = float(np.dot(local3, v_local))
    if length < 0.0:
        v_local = -v_local
        length = -length
    if length <= LINE_EPSILON_M:
        raise DegenerateBox("third marker lies on the width axis")

    basis = frame.rotation().T  # columns e, n, u as ECEF vectors
    axis_u = basis @ u_local
    axis_v = basis @ v_local

    footprint = Footprint(
        anchor=EcefVec.from_array(p1),
        axis_u=axis_u,
        axis_v=axis_v,
        width_m=width,
        length_m=length,
    )
    snapshot = scene.snapshot if hasattr(scene, "snapshot") else scene
    if snapshot is None or snapshot.bvh is None:
        from .errors import NoGeometry

        raise NoGeometry("scene has no geometry")
    h_min, h_max = snapshot.bvh.elevation_range(footprint, frame)
    return ClipBox(
        anchor=m1.position,
        frame=frame,
        axis_u=axis_u,
        axis_v=axis_v,
        width_m=width,
        length_m=length,
        h_min_m=h_min,
        h_max_m=h_max,
    )


def point_in_clipbox(box: ClipBox, p: EcefVec) -> bool:
    """True iff p's (u, v, ellipsoidal height) lie inside the box volume."""
    d = p.as_array() - box.frame.origin.as_array()
    u = float(d @ box.axis_u)
    v = float(d @ box.axis_v)
    if not (0.0 <= u <= box.width_m and 0.0 <= v <= box.length_m):
        return False
    h = ecef_to_geodetic(p).height_m
    return box.h_min_m <= h <= box.h_max_m


@dataclass
class Measurement:
    """Tagged measurement record: type in {distance, strike_dip, clip_box}."""

    id: str
    type: str
    marker_ids: tuple[str, ...]
    result: PolylineDistanceResult | StrikeDipResult | ClipBox


@dataclass
class MeasurementSession:
    """Markers and measurements over one scene; mutations are serialized
    by the caller (the service holds one writer lock per session)."""

    scene: object = None
    markers: dict[str, Marker] = field(default_factory=dict)
    measurements: list[Measurement] = field(default_factory=list)
    _marker_seq: int = 0
    _measurement_seq: int = 0

    def _snapshot(self):
        return self.scene.snapshot if hasattr(self.scene, "snapshot") else self.scene

    def _next_marker_id(self) -> str:
        self._marker_seq += 1
        return f"m-{self._marker_seq}"

    def _next_measurement_id(self) -> str:
        self._measurement_seq += 1
        return f"meas-{self._measurement_seq}"

    def place_marker(self, ray: Ray) -> Marker:
        """Raycast into the scene and register a marker at the closest hit."""
        snapshot = self._snapshot()
        hit = snapshot.raycast(ray) if snapshot is not None else None
        if hit is None:
            raise NoHit("ray missed all geometry")
        return self.add_marker_at(ecef_to_geodetic(hit.point))

    def add_marker_at(self, position: GeodeticCoord,
                      label_visible: bool = True,
                      marker_id: str | None = None,
                      created_at: str | None = None) -> Marker:
        if marker_id is None:
            marker_id = self._next_marker_id()
        elif marker_id in self.markers:
            raise ValueError(f"duplicate marker id {marker_id!r}")
        else:
            # keep generated ids clear of imported ones
            try:
                num = int(marker_id.split("-", 1)[1])
                self._marker_seq = max(self._marker_seq, num)
            except (IndexError, ValueError):
                pass
        marker = Marker(
            id=marker_id,
            position=position,
            label_visible=label_visible,
            created_at=created_at or _utc_now_iso(),
        )
        self.markers[marker.id] = marker
        return marker

    def get_markers(self, marker_ids) -> list[Marker]:
        out = []
        for mid in marker_ids:
            if mid not in self.markers:
                raise UnknownMarker(f"no marker {mid!r} in session")
            out.append(self.markers[mid])
        return out

    def set_label_visible(self, marker_id: str, visible: bool) -> Marker:
        (marker,) = self.get_markers([marker_id])
        marker.label_visible = visible
        return marker

    def measure_distance(self, marker_ids) -> Measurement:
        result = polyline_distance(self.get_markers(marker_ids))
        return self._record("distance", marker_ids, result)

    def measure_strike_dip(self, marker_ids) -> Measurement:
        if len(marker_ids) != 3:
            raise CollinearMarkers("strike & dip takes exactly 3 markers")
        markers = self.get_markers(marker_ids)
        result = strike_dip(*markers)
        # all but the first-placed marker lose their label for visual clarity
        for marker in markers[1:]:
            marker.label_visible = False
        return self._record("strike_dip", marker_ids, result)

    def measure_clip_box(self, marker_ids) -> Measurement:
        if len(marker_ids) != 3:
            raise DegenerateBox("clip box takes exactly 3 markers")
        markers = self.get_markers(marker_ids)
        result = clip_box_from_markers(*markers, self.scene)
        return self._record("clip_box", marker_ids, result)

    def _record(self, mtype, marker_ids, result,
                measurement_id: str | None = None) -> Measurement:
        if measurement_id is None:
            measurement_id = self._next_measurement_id()
        else:
            try:
                num = int(measurement_id.split("-", 1)[1])
                self._measurement_seq = max(self._measurement_seq, num)
            except (IndexError, ValueError):
                pass
        m = Measurement(
            id=measurement_id, type=mtype, marker_ids=tuple(marker_ids), result=result
        )
        self.measurements.append(m)
        return m
