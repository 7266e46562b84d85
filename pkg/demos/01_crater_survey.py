"""Survey a synthetic volcanic crater: place markers by raycast, then
measure its width and the elevation band of a clip box around it."""

import tempfile

import numpy as np

from vfield import MeasurementSession, Ray, Scene, export_session
from vfield.geodesy import EcefVec, enu_frame_at
from vfield.synthetic import KOLUMBO_LIKE_ANCHOR, write_crater_tileset

# build the fixture tileset on disk and load it like any external dataset
workdir = tempfile.mkdtemp(prefix="crater_")
tileset_path = write_crater_tileset(workdir)
scene = Scene()
scene.register_tileset(tileset_path)
print(f"loaded {scene.snapshot.n_triangles} triangles from {tileset_path}")

# a local tangent frame at the crater anchor gives us east/north/up axes
frame = enu_frame_at(KOLUMBO_LIKE_ANCHOR)


def ray_down(east_m, north_m):
    origin = (
        frame.origin.as_array()
        + east_m * frame.east
        + north_m * frame.north
        + 3000.0 * frame.up
    )
    return Ray(EcefVec.from_array(origin), -frame.up, t_max=1e7)


session = MeasurementSession(scene=scene)

# two markers on opposite rim points, one straight-down ray each
west = session.place_marker(ray_down(-1250.0, 0.0))
east = session.place_marker(ray_down(1250.0, 0.0))
rim = session.measure_distance([west.id, east.id])
print(f"rim-to-rim distance: {rim.result.total_m:.1f} m")

# a clip box spanning the whole crater reports its elevation band
corners = [session.place_marker(ray_down(e, n))
           for e, n in [(-1300, -1300), (1300, -1300), (0, 1300)]]
box = session.measure_clip_box([c.id for c in corners])
print(f"clip box {box.result.width_m:.0f} x {box.result.length_m:.0f} m, "
      f"heights {box.result.h_min_m:.1f} .. {box.result.h_max_m:.1f} m")

# the whole session round-trips through JSON
doc = export_session(session)
print(f"session document: {len(doc)} bytes, "
      f"{len(session.markers)} markers, {len(session.measurements)} measurements")
