"""JSON session persistence: the export / re-import loop.

The document (extension ``.vfsession.json``, schema_version 1) stores tile
sources, markers and measurements.  Stored measurement results are treated
as a cache: import recomputes every result from the marker positions, warns
with StaleResults when a stored value drifted beyond 1e-6 relative, and
keeps the recomputed values.
"""

from __future__ import annotations

import importlib.resources
import json
import math
import warnings

import jsonschema

from .errors import (
    DanglingMarkerRef,
    NoGeometry,
    SchemaViolation,
    StaleResults,
    UnknownVersion,
)
from .geodesy import GeodeticCoord
from .measure import (
    ClipBox,
    Measurement,
    MeasurementSession,
    PolylineDistanceResult,
    StrikeDipResult,
)

SCHEMA_VERSION = 1
FILE_EXTENSION = ".vfsession.json"

_RESULT_REL_TOL = 1e-6


_schema_cache: dict | None = None


def session_schema() -> dict:
    global _schema_cache
    if _schema_cache is None:
        text = (
            importlib.resources.files("vfield")
            .joinpath("schemas/vfsession.schema.json")
            .read_text()
        )
        _schema_cache = json.loads(text)
    return _schema_cache


def _azimuth_deg(frame, axis) -> float:
    e = float(axis @ frame.east)
    n = float(axis @ frame.north)
    return math.degrees(math.atan2(e, n)) % 360.0


def _result_to_json(measurement: Measurement) -> dict:
    r = measurement.result
    if isinstance(r, PolylineDistanceResult):
        return {
            "total_m": r.total_m,
            "segments": [
                {"distance_m": s.distance_m, "elevation_diff_m": s.elevation_diff_m}
                for s in r.segments
            ],
        }
    if isinstance(r, StrikeDipResult):
        return {
            "strike_azimuth_deg": r.strike_azimuth_deg,
            "dip_deg": r.dip_deg,
            "dip_direction_deg": r.dip_direction_deg,
            "extent_m": r.extent_m,
            "horizontal": r.horizontal,
        }
    if isinstance(r, ClipBox):
        return {
            "anchor": {
                "lat_deg": r.anchor.latitude_deg,
                "lon_deg": r.anchor.longitude_deg,
                "height_m": r.anchor.height_m,
            },
            "azimuth_u_deg": _azimuth_deg(r.frame, r.axis_u),
            "azimuth_v_deg": _azimuth_deg(r.frame, r.axis_v),
            "width_m": r.width_m,
            "length_m": r.length_m,
            "h_min_m": r.h_min_m,
            "h_max_m": r.h_max_m,
        }
    raise TypeError(f"unknown result type {type(r).__name__}")


def session_to_document(session: MeasurementSession) -> dict:
    tilesets = []
    snapshot = session._snapshot()
    if snapshot is not None:
        tilesets = [
            {"id": ts.tileset_id, "uri": ts.uri} for ts in snapshot.tilesets
        ]
    return {
        "schema_version": SCHEMA_VERSION,
        "tilesets": tilesets,
        "markers": [
            {
                "id": m.id,
                "lat_deg": m.position.latitude_deg,
                "lon_deg": m.position.longitude_deg,
                "height_m": m.position.height_m,
                "label_visible": m.label_visible,
                "created_at": m.created_at,
            }
            for m in session.markers.values()
        ],
        "measurements": [
            {
                "id": meas.id,
                "type": meas.type,
                "marker_ids": list(meas.marker_ids),
                "results": _result_to_json(meas),
            }
            for meas in session.measurements
        ],
    }


def export_session(session: MeasurementSession) -> bytes:
    """Serialize the session deterministically (stable key and list order,
    full 64-bit float round-trip precision) as UTF-8 JSON."""
    return json.dumps(session_to_document(session), indent=2).encode("utf-8")


def _close(a, b) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return a == b
    return abs(a - b) <= _RESULT_REL_TOL * max(1.0, abs(a), abs(b))


def _results_match(stored: dict, recomputed: dict) -> bool:
    if set(stored) != set(recomputed):
        return False
    for key, sv in stored.items():
        rv = recomputed[key]
        if isinstance(sv, dict) and isinstance(rv, dict):
            if not _results_match(sv, rv):
                return False
        elif isinstance(sv, list) and isinstance(rv, list):
            if len(sv) != len(rv):
                return False
            for se, re_ in zip(sv, rv):
                if isinstance(se, dict):
                    if not _results_match(se, re_):
                        return False
                elif not _close(se, re_):
                    return False
        elif isinstance(sv, (int, float)) and isinstance(rv, (int, float)):
            if not _close(sv, rv):
                return False
        elif sv != rv:
            return False
    return True


def import_session(data: bytes, scene) -> MeasurementSession:
    """Reconstruct a session from a document; recomputation is authoritative.

    Raises SchemaViolation / UnknownVersion / DanglingMarkerRef; warns with
    StaleResults when a stored result disagrees with recomputation beyond
    1e-6 relative (import still succeeds with recomputed values).
    """
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SchemaViolation(f"not a JSON document: {exc}") from exc

    if isinstance(doc, dict) and doc.get("schema_version") != SCHEMA_VERSION:
        raise UnknownVersion(
            f"unsupported schema_version {doc.get('schema_version')!r}"
        )
    try:
        jsonschema.validate(doc, session_schema())
    except jsonschema.ValidationError as exc:
        raise SchemaViolation(exc.message) from exc

    session = MeasurementSession(scene=scene)
    seen = set()
    for m in doc["markers"]:
        if m["id"] in seen:
            raise SchemaViolation(f"duplicate marker id {m['id']!r}")
        seen.add(m["id"])
        session.add_marker_at(
            GeodeticCoord(m["lat_deg"], m["lon_deg"], m["height_m"]),
            label_visible=m["label_visible"],
            marker_id=m["id"],
            created_at=m.get("created_at", ""),
        )

    meas_seen = set()
    for meas in doc["measurements"]:
        if meas["id"] in meas_seen:
            raise SchemaViolation(f"duplicate measurement id {meas['id']!r}")
        meas_seen.add(meas["id"])
        for mid in meas["marker_ids"]:
            if mid not in session.markers:
                raise DanglingMarkerRef(
                    f"measurement {meas['id']!r} references missing marker {mid!r}"
                )
        markers = session.get_markers(meas["marker_ids"])
        mtype = meas["type"]
        if mtype == "distance":
            from .measure import polyline_distance

            result = polyline_distance(markers)
        elif mtype == "strike_dip":
            from .measure import strike_dip

            result = strike_dip(*markers)
        else:
            from .measure import clip_box_from_markers

            try:
                result = clip_box_from_markers(*markers, scene)
            except NoGeometry:
                warnings.warn(
                    f"clip box {meas['id']!r} cannot be recomputed without "
                    "scene geometry; keeping stored values",
                    StaleResults,
                )
                result = None
        recorded = session._record(
            mtype, meas["marker_ids"],
            result if result is not None else _stored_clip_box(meas, markers),
            measurement_id=meas["id"],
        )
        if result is not None and not _results_match(
            meas["results"], _result_to_json(recorded)
        ):
            warnings.warn(
                f"stored results for {meas['id']!r} differ from recomputation; "
                "recomputed values win",
                StaleResults,
            )
    return session


def _stored_clip_box(meas: dict, markers) -> ClipBox:
    """Rebuild a ClipBox from its stored fields (no scene available)."""
    from .geodesy import enu_frame_at

    r = meas["results"]
    anchor = GeodeticCoord(
        r["anchor"]["lat_deg"], r["anchor"]["lon_deg"], r["anchor"]["height_m"]
    )
    frame = enu_frame_at(anchor)

    def from_azimuth(az_deg):
        az = math.radians(az_deg)
        return math.sin(az) * frame.east + math.cos(az) * frame.north

    return ClipBox(
        anchor=anchor,
        frame=frame,
        axis_u=from_azimuth(r["azimuth_u_deg"]),
        axis_v=from_azimuth(r["azimuth_v_deg"]),
        width_m=r["width_m"],
        length_m=r["length_m"],
        h_min_m=r["h_min_m"],
        h_max_m=r["h_max_m"],
    )
