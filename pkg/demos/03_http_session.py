"""Drive the HTTP service end to end without a browser: register a tileset,
place markers over HTTP, measure, and pull the session document."""

import json
import tempfile

from fastapi.testclient import TestClient

from vfield import Scene
from vfield.geodesy import enu_frame_at
from vfield.service import create_app
from vfield.synthetic import KOLUMBO_LIKE_ANCHOR, write_crater_tileset

workdir = tempfile.mkdtemp(prefix="svc_")
tileset_path = write_crater_tileset(workdir)
frame = enu_frame_at(KOLUMBO_LIKE_ANCHOR)

app = create_app(scene=Scene())
client = TestClient(app)

r = client.post("/tilesets", json={"uri": tileset_path})
print("registered tileset:", r.json())


def ray_body(east_m, north_m):
    origin = (frame.origin.as_array() + east_m * frame.east
              + north_m * frame.north + 3000.0 * frame.up)
    return {"origin": list(origin), "direction": list(-frame.up), "t_max": 1e7}


ids = []
for east, north in [(-1250.0, 0.0), (1250.0, 0.0), (0.0, 900.0)]:
    marker = client.post("/markers", json={"ray": ray_body(east, north)}).json()
    ids.append(marker["id"])
    print(f"marker {marker['id']}: lat {marker['lat_deg']:.6f} "
          f"lon {marker['lon_deg']:.6f} h {marker['height_m']:.1f} m")

for path in ("/measurements/distance", "/measurements/strike-dip",
             "/measurements/clip-box"):
    m = client.post(path, json={"marker_ids": ids}).json()
    print(f"{m['type']}: {json.dumps(m['results'])[:100]}...")

doc = client.get("/session").json()
print(f"session: {len(doc['markers'])} markers, "
      f"{len(doc['measurements'])} measurements, schema v{doc['schema_version']}")

# mesh geometry travels as binary GLB with the 64-bit origin in a header
mesh = client.get("/tilesets/ts-1/meshes")
print(f"mesh payload: {len(mesh.content)} bytes GLB, "
      f"origin {mesh.headers['x-tile-origin']}")
