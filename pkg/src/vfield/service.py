"""HTTP facade over scene, measurement and session operations.

Plain HTTP/1.1 + JSON; mesh geometry travels as binary GLB with the 64-bit
tile origin in a response header.  Multiple clients share one session by
default (one writer lock, mutations totally ordered); ``GET /events``
streams session mutations as server-sent events so a second client sees the
first client's markers live.
"""

from __future__ import annotations

import asyncio
import json
import threading
import time
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, StreamingResponse

from . import session as session_io
from .errors import NoHit, UnknownMarker, VfError
from .geodesy import EcefVec, GeodeticCoord
from .measure import MeasurementSession
from .scene import Scene
from .spatial import Hit, Ray
from .tileset import encode_glb

_STATUS_BY_CODE = {
    "NoHit": 404,
    "UnknownMarker": 404,
    "UnknownTileset": 404,
}
EVENT_POLL_S = 0.05


class BadRequest(VfError):
    """Request body missing required fields or malformed."""


@dataclass
class SessionState:
    session: MeasurementSession
    lock: threading.Lock = field(default_factory=threading.Lock)
    events: list[dict] = field(default_factory=list)
    client_count: int = 0

    def emit(self, event_type: str, data: dict) -> None:
        self.events.append(
            {"seq": len(self.events) + 1, "type": event_type, "data": data}
        )


def marker_json(marker) -> dict:
    return {
        "id": marker.id,
        "lat_deg": marker.position.latitude_deg,
        "lon_deg": marker.position.longitude_deg,
        "height_m": marker.position.height_m,
        "label_visible": marker.label_visible,
        "created_at": marker.created_at,
    }


def hit_json(hit: Hit) -> dict:
    return {
        "t": hit.t,
        "point": [hit.point.x_m, hit.point.y_m, hit.point.z_m],
        "mesh_id": hit.mesh_id,
        "triangle_index": hit.triangle_index,
        "u": hit.u,
        "v": hit.v,
        "normal": list(map(float, hit.normal)),
    }


def measurement_json(measurement) -> dict:
    return {
        "id": measurement.id,
        "type": measurement.type,
        "marker_ids": list(measurement.marker_ids),
        "results": session_io._result_to_json(measurement),
    }


def _parse_ray(body: dict) -> Ray:
    try:
        origin = EcefVec(*map(float, body["origin"]))
        direction = np.asarray(body["direction"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise BadRequest(f"ray needs origin and direction: {exc}") from exc
    norm = float(np.linalg.norm(direction))
    if norm == 0.0:
        raise BadRequest("ray direction must be non-zero")
    t_max = float(body.get("t_max", 1e12))
    return Ray(origin, direction / norm, t_max)


def create_app(scene: Scene | None = None, multi_session: bool = False) -> FastAPI:
    """Build the service; ``multi_session`` enables the ?session= selector."""
    app = FastAPI(title="vfield service")
    app.state.scene = scene if scene is not None else Scene()
    app.state.multi_session = multi_session
    app.state.sessions = {
        "default": SessionState(session=MeasurementSession(scene=app.state.scene))
    }
    app.state.sessions_lock = threading.Lock()

    def get_state(request: Request) -> SessionState:
        name = "default"
        if app.state.multi_session:
            name = request.query_params.get("session", "default")
        with app.state.sessions_lock:
            if name not in app.state.sessions:
                app.state.sessions[name] = SessionState(
                    session=MeasurementSession(scene=app.state.scene)
                )
            return app.state.sessions[name]

    @app.exception_handler(VfError)
    async def vf_error_handler(request: Request, exc: VfError):
        status = _STATUS_BY_CODE.get(exc.code, 400)
        return JSONResponse(
            status_code=status, content={"code": exc.code, "message": str(exc)}
        )

    @app.post("/tilesets")
    def register_tileset(body: dict, request: Request):
        if "uri" not in body:
            raise BadRequest("body needs a uri")
        tileset_id = app.state.scene.register_tileset(body["uri"])
        state = get_state(request)
        with state.lock:
            state.emit("tileset_registered", {"tileset_id": tileset_id, "uri": body["uri"]})
        return {"tileset_id": tileset_id}

    @app.get("/tilesets/{tileset_id}/meshes")
    def tileset_meshes(tileset_id: str):
        snapshot = app.state.scene.snapshot
        for ts in snapshot.tilesets:
            if ts.tileset_id == tileset_id:
                break
        else:
            raise UnknownTilesetError(tileset_id)
        origin = ts.meshes[0].tile_origin if ts.meshes else np.zeros(3)
        pos_parts, idx_parts = [], []
        offset = 0
        for mesh in ts.meshes:
            pos_parts.append((mesh.tile_origin - origin) + mesh.positions)
            idx_parts.append(mesh.indices + offset)
            offset += len(mesh.positions)
        glb = encode_glb(
            np.concatenate(pos_parts) if pos_parts else np.zeros((0, 3)),
            np.concatenate(idx_parts) if idx_parts else np.zeros((0, 3), np.int64),
        )
        return Response(
            content=glb,
            media_type="model/gltf-binary",
            headers={
                "X-Tile-Origin": " ".join(repr(float(c)) for c in origin),
            },
        )

    @app.post("/raycast")
    def raycast(body: dict):
        hit = app.state.scene.snapshot.raycast(_parse_ray(body))
        if hit is None:
            raise NoHit("ray missed all geometry")
        return hit_json(hit)

    @app.post("/markers")
    def place_marker(body: dict, request: Request):
        state = get_state(request)
        with state.lock:
            if "ray" in body:
                marker = state.session.place_marker(_parse_ray(body["ray"]))
            elif "geodetic" in body:
                g = body["geodetic"]
                try:
                    pos = GeodeticCoord(
                        float(g["lat_deg"]), float(g["lon_deg"]),
                        float(g.get("height_m", 0.0)),
                    )
                except (KeyError, TypeError, ValueError) as exc:
                    raise BadRequest(f"bad geodetic coordinate: {exc}") from exc
                marker = state.session.add_marker_at(pos)
            else:
                raise BadRequest("body needs ray or geodetic")
            payload = marker_json(marker)
            state.emit("marker_added", payload)
        return payload

    @app.patch("/markers/{marker_id}")
    def patch_marker(marker_id: str, body: dict, request: Request):
        if "label_visible" not in body:
            raise BadRequest("body needs label_visible")
        state = get_state(request)
        with state.lock:
            marker = state.session.set_label_visible(
                marker_id, bool(body["label_visible"])
            )
            payload = marker_json(marker)
            state.emit("marker_updated", payload)
        return payload

    def _measure(request: Request, kind: str, marker_ids) -> dict:
        if not isinstance(marker_ids, list):
            raise BadRequest("body needs marker_ids")
        state = get_state(request)
        with state.lock:
            if kind == "distance":
                m = state.session.measure_distance(marker_ids)
            elif kind == "strike_dip":
                m = state.session.measure_strike_dip(marker_ids)
            else:
                m = state.session.measure_clip_box(marker_ids)
            payload = measurement_json(m)
            state.emit("measurement_added", payload)
        return payload

    @app.post("/measurements/distance")
    def measure_distance(body: dict, request: Request):
        return _measure(request, "distance", body.get("marker_ids"))

    @app.post("/measurements/strike-dip")
    def measure_strike_dip(body: dict, request: Request):
        return _measure(request, "strike_dip", body.get("marker_ids"))

    @app.post("/measurements/clip-box")
    def measure_clip_box(body: dict, request: Request):
        return _measure(request, "clip_box", body.get("marker_ids"))

    @app.get("/session")
    def get_session(request: Request):
        state = get_state(request)
        with state.lock:
            data = session_io.export_session(state.session)
        return Response(content=data, media_type="application/json")

    @app.put("/session")
    async def put_session(request: Request):
        data = await request.body()
        state = get_state(request)
        with state.lock:
            state.session = session_io.import_session(data, app.state.scene)
            state.emit("session_replaced", {})
        return {
            "markers": len(state.session.markers),
            "measurements": len(state.session.measurements),
        }

    @app.get("/events")
    async def events(request: Request):
        state = get_state(request)

        async def stream():
            # disconnects cancel the generator, so no liveness check needed
            state.client_count += 1
            last = 0
            try:
                while True:
                    new = state.events[last:]
                    for event in new:
                        yield f"id: {event['seq']}\ndata: {json.dumps(event)}\n\n"
                    last += len(new)
                    await asyncio.sleep(EVENT_POLL_S)
            finally:
                state.client_count -= 1

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app


class UnknownTilesetError(VfError):
    def __init__(self, tileset_id):
        super().__init__(f"no tileset {tileset_id!r}")

    @property
    def code(self):
        return "UnknownTileset"
