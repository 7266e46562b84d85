import json
import struct

import numpy as np
import pytest

from vfield.geodesy import GeodeticCoord, enu_frame_at
from vfield.scene import Scene
from vfield.spatial import Ray, warm_up
from vfield.synthetic import KOLUMBO_LIKE_ANCHOR, write_crater_tileset


@pytest.fixture(scope="session", autouse=True)
def jit_warm_up():
    warm_up()


def make_quad_glb(z_up_positions, indices, extra_gltf=None):
    """Hand-assemble a GLB byte-by-byte, independent of the library encoder.

    Positions are given in the tile's z-up frame and converted to the
    glTF y-up convention here, by hand.
    """
    pos = np.asarray(z_up_positions, dtype=np.float64)
    yup = np.stack([pos[:, 0], pos[:, 2], -pos[:, 1]], axis=1).astype(np.float32)
    idx = np.asarray(indices, dtype=np.uint16).reshape(-1)

    pos_bytes = yup.tobytes()
    idx_bytes = idx.tobytes()
    if len(idx_bytes) % 4:
        idx_bytes += b"\x00" * (4 - len(idx_bytes) % 4)
    bin_chunk = pos_bytes + idx_bytes

    gltf = {
        "asset": {"version": "2.0"},
        "scene": 0,
        "scenes": [{"nodes": [0]}],
        "nodes": [{"mesh": 0}],
        "meshes": [
            {"primitives": [{"attributes": {"POSITION": 0}, "indices": 1, "mode": 4}]}
        ],
        "buffers": [{"byteLength": len(bin_chunk)}],
        "bufferViews": [
            {"buffer": 0, "byteOffset": 0, "byteLength": len(pos_bytes)},
            {"buffer": 0, "byteOffset": len(pos_bytes), "byteLength": len(idx) * 2},
        ],
        "accessors": [
            {
                "bufferView": 0,
                "componentType": 5126,
                "count": len(yup),
                "type": "VEC3",
                "min": yup.min(axis=0).tolist(),
                "max": yup.max(axis=0).tolist(),
            },
            {"bufferView": 1, "componentType": 5123, "count": len(idx), "type": "SCALAR"},
        ],
    }
    if extra_gltf:
        gltf.update(extra_gltf)

    json_chunk = json.dumps(gltf).encode()
    if len(json_chunk) % 4:
        json_chunk += b" " * (4 - len(json_chunk) % 4)
    total = 12 + 8 + len(json_chunk) + 8 + len(bin_chunk)
    return (
        struct.pack("<4sII", b"glTF", 2, total)
        + struct.pack("<II", len(json_chunk), 0x4E4F534A)
        + json_chunk
        + struct.pack("<II", len(bin_chunk), 0x004E4942)
        + bin_chunk
    )


def wrap_b3dm(glb, rtc_center=None):
    """Hand-assemble a b3dm wrapper around a GLB."""
    ft = {"BATCH_LENGTH": 0}
    if rtc_center is not None:
        ft["RTC_CENTER"] = list(rtc_center)
    ftj = json.dumps(ft).encode()
    if len(ftj) % 8:
        ftj += b" " * (8 - len(ftj) % 8)
    total = 28 + len(ftj) + len(glb)
    return (
        struct.pack("<4sIIIIII", b"b3dm", 1, total, len(ftj), 0, 0, 0) + ftj + glb
    )


UNIT_QUAD_POSITIONS = [[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]]
UNIT_QUAD_INDICES = [[0, 1, 3], [0, 3, 2]]


@pytest.fixture
def quad_glb():
    return make_quad_glb(UNIT_QUAD_POSITIONS, UNIT_QUAD_INDICES)


def simple_tileset_doc(content_uri, transform=None, version="1.1"):
    root = {
        "boundingVolume": {"sphere": [0, 0, 0, 10]},
        "geometricError": 0.0,
        "refine": "REPLACE",
        "content": {"uri": content_uri},
    }
    if transform is not None:
        root["transform"] = np.asarray(transform).flatten(order="F").tolist()
    return {"asset": {"version": version}, "geometricError": 10.0, "root": root}


@pytest.fixture(scope="session")
def crater_tileset_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("crater")
    write_crater_tileset(str(d))
    return d


@pytest.fixture(scope="session")
def crater_scene(crater_tileset_dir):
    scene = Scene()
    scene.register_tileset(str(crater_tileset_dir / "tileset.json"))
    return scene


@pytest.fixture(scope="session")
def crater_frame():
    return enu_frame_at(KOLUMBO_LIKE_ANCHOR)


def ray_down(frame, east_m, north_m, height_m=3000.0):
    from vfield.geodesy import EcefVec

    origin = (
        frame.origin.as_array()
        + east_m * frame.east
        + north_m * frame.north
        + height_m * frame.up
    )
    return Ray(EcefVec.from_array(origin), -frame.up, t_max=1e7)


# flat plane at ellipsoidal height 0, 400 m across, around a known anchor
FLAT_ANCHOR = GeodeticCoord(10.0, 20.0, 0.0)


@pytest.fixture(scope="session")
def flat_scene(tmp_path_factory):
    from vfield.synthetic import heightfield_mesh, write_tileset

    d = tmp_path_factory.mktemp("flat")
    verts, indices = heightfield_mesh(
        FLAT_ANCHOR, 200.0, 20, lambda e, n: np.zeros_like(e)
    )
    write_tileset(str(d), verts, indices, name="flat")
    scene = Scene()
    scene.register_tileset(str(d / "tileset.json"))
    return scene
