"""Cesium 3D Tiles ingestion: tileset documents, GLB and b3dm payloads.

Supported subset: tileset asset versions 1.0/1.1, box/region/sphere bounding
volumes, REPLACE/ADD refinement, external child tileset documents, GLB
(glTF 2.0 binary, TRIANGLES with POSITION and optional COLOR_0/TEXCOORD_0)
and b3dm-wrapped GLB.  Everything resolves to maximum level of detail;
screen-space error never plays a role.
"""

from __future__ import annotations

import json
import math
import posixpath
import struct
import urllib.parse
import urllib.request
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    MalformedContent,
    MalformedTileset,
    MissingPositions,
    UnsupportedPrimitive,
    UnsupportedVersion,
)

GLB_MAGIC = b"glTF"
B3DM_MAGIC = b"b3dm"
_CHUNK_JSON = 0x4E4F534A
_CHUNK_BIN = 0x004E4942

# glTF tile content is y-up; tiles are z-up: (x, y, z) -> (x, -z, y)
_YUP_TO_ZUP = np.array(
    [[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]], dtype=np.float64
)

_COMPONENT_DTYPES = {
    5120: np.int8,
    5121: np.uint8,
    5122: np.int16,
    5123: np.uint16,
    5125: np.uint32,
    5126: np.float32,
}
_TYPE_COUNTS = {"SCALAR": 1, "VEC2": 2, "VEC3": 3, "VEC4": 4, "MAT4": 16}


@dataclass
class BoundingVolume:
    kind: str  # "box" | "region" | "sphere"
    values: np.ndarray


@dataclass
class TileNode:
    bounding_volume: BoundingVolume
    transform: np.ndarray  # 4x4, parent-composed (world)
    refine: str  # "REPLACE" | "ADD"
    geometric_error: float
    content_uri: str | None = None
    children: list["TileNode"] = field(default_factory=list)


@dataclass
class TilesetTree:
    root: TileNode
    source_uri: str
    geometric_error_root: float


@dataclass
class TriangleMesh:
    """Triangle geometry in ECEF: 64-bit tile origin plus per-vertex offsets."""

    tile_origin: np.ndarray  # (3,) float64
    positions: np.ndarray  # (N, 3) float64 offsets from tile_origin, meters
    indices: np.ndarray  # (M, 3) int64
    colors: np.ndarray | None = None  # (N, 3|4) float
    uvs: np.ndarray | None = None  # (N, 2) float
    base_color: tuple[float, float, float, float] | None = None
    dropped_degenerate: int = 0

    @property
    def n_triangles(self) -> int:
        return len(self.indices)

    def absolute_positions(self) -> np.ndarray:
        return self.tile_origin + self.positions


def resolve_uri(base: str, rel: str) -> str:
    """Resolve ``rel`` against ``base`` (URL or filesystem path)."""
    parsed = urllib.parse.urlparse(base)
    if parsed.scheme in ("http", "https", "file"):
        return urllib.parse.urljoin(base, rel)
    return posixpath.join(posixpath.dirname(base), rel)


def fetch_uri(uri: str) -> bytes:
    """Read bytes from a local path, file:// or http(s) URI."""
    parsed = urllib.parse.urlparse(uri)
    if parsed.scheme in ("http", "https", "file"):
        with urllib.request.urlopen(uri) as resp:
            return resp.read()
    with open(uri, "rb") as f:
        return f.read()


def _parse_transform(node: dict) -> np.ndarray:
    raw = node.get("transform")
    if raw is None:
        return np.eye(4)
    if not isinstance(raw, list) or len(raw) != 16:
        raise MalformedTileset("transform must be 16 numbers")
    m = np.array(raw, dtype=np.float64).reshape(4, 4, order="F")
    if not np.all(np.isfinite(m)) or abs(np.linalg.det(m)) < 1e-30:
        raise MalformedTileset("transform not invertible")
    return m


def _parse_bounding_volume(node: dict) -> BoundingVolume:
    bv = node.get("boundingVolume")
    if not isinstance(bv, dict):
        raise MalformedTileset("tile missing boundingVolume")
    for kind, length in (("box", 12), ("region", 6), ("sphere", 4)):
        if kind in bv:
            values = bv[kind]
            if not isinstance(values, list) or len(values) != length:
                raise MalformedTileset(f"boundingVolume.{kind} wrong arity")
            return BoundingVolume(kind, np.array(values, dtype=np.float64))
    raise MalformedTileset("unknown boundingVolume kind")


def _parse_node(
    node: dict,
    parent_transform: np.ndarray,
    parent_refine: str | None,
    parent_error: float | None,
    source_uri: str,
    resolver,
    depth: int,
) -> TileNode:
    if depth > 64:
        raise MalformedTileset("tile tree too deep (cycle?)")
    if not isinstance(node, dict):
        raise MalformedTileset("tile must be an object")

    transform = parent_transform @ _parse_transform(node)
    refine = node.get("refine", parent_refine)
    if refine is None:
        refine = "REPLACE"
    if refine not in ("REPLACE", "ADD"):
        raise MalformedTileset(f"unknown refine mode: {refine!r}")

    error = node.get("geometricError")
    if not isinstance(error, (int, float)) or not math.isfinite(error):
        raise MalformedTileset("tile missing geometricError")
    if parent_error is not None and error > parent_error + 1e-9:
        raise MalformedTileset("child geometricError exceeds parent's")

    content = node.get("content")
    content_uri = None
    if content is not None:
        if not isinstance(content, dict):
            raise MalformedTileset("content must be an object")
        content_uri = content.get("uri", content.get("url"))
        if content_uri is not None and not isinstance(content_uri, str):
            raise MalformedTileset("content uri must be a string")

    out = TileNode(
        bounding_volume=_parse_bounding_volume(node),
        transform=transform,
        refine=refine,
        geometric_error=float(error),
        content_uri=None,
    )

    children = node.get("children", [])
    if not isinstance(children, list):
        raise MalformedTileset("children must be a list")

    if content_uri is not None and content_uri.lower().endswith(".json"):
        # external tileset: splice the child document's root under this node
        if resolver is None:
            raise MalformedTileset("external tileset reference without resolver")
        child_uri = resolve_uri(source_uri, content_uri)
        child_doc = resolver(child_uri)
        child_tree = _parse_tileset(child_doc, child_uri, resolver, transform, depth + 1)
        out.children.append(child_tree.root)
    else:
        if content_uri is not None:
            out.content_uri = resolve_uri(source_uri, content_uri)

    for child in children:
        out.children.append(
            _parse_node(child, transform, refine, out.geometric_error,
                        source_uri, resolver, depth + 1)
        )
    return out


def _parse_tileset(data, source_uri, resolver, root_transform, depth) -> TilesetTree:
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedTileset(f"not a JSON document: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedTileset("tileset document must be an object")
    version = doc.get("asset", {}).get("version") if isinstance(doc.get("asset"), dict) else None
    if version not in ("1.0", "1.1"):
        raise UnsupportedVersion(f"unsupported tileset version: {version!r}")
    if "root" not in doc:
        raise MalformedTileset("tileset missing root tile")
    root = _parse_node(doc["root"], root_transform, None, None, source_uri, resolver, depth)
    return TilesetTree(
        root=root,
        source_uri=source_uri,
        geometric_error_root=float(doc.get("geometricError", root.geometric_error)),
    )


def parse_tileset(data: bytes, source_uri: str, resolver=None) -> TilesetTree:
    """Parse a tileset document into a tree with parent-composed transforms.

    ``resolver(uri) -> bytes`` is used to fetch external child tileset
    documents; when None, references to them raise MalformedTileset.
    """
    return _parse_tileset(data, source_uri, resolver, np.eye(4), 0)


def select_max_detail(tree: TilesetTree) -> list[TileNode]:
    """Content-bearing nodes at maximum level of detail.

    REPLACE: descendants supersede the node's own content; ADD: the node's
    content is kept alongside its children's.  Screen-space error is
    deliberately ignored.
    """

    def visit(node: TileNode) -> list[TileNode]:
        from_children: list[TileNode] = []
        for child in node.children:
            from_children.extend(visit(child))
        own = [node] if node.content_uri is not None else []
        if node.refine == "ADD":
            return own + from_children
        return from_children if from_children else own

    return visit(tree.root)


def _read_accessor(gltf: dict, binary: bytes, index: int) -> np.ndarray:
    accessors = gltf.get("accessors", [])
    if not (0 <= index < len(accessors)):
        raise MalformedContent(f"accessor {index} out of range")
    acc = accessors[index]
    if "sparse" in acc:
        raise MalformedContent("sparse accessors unsupported")
    dtype = _COMPONENT_DTYPES.get(acc.get("componentType"))
    ncomp = _TYPE_COUNTS.get(acc.get("type"))
    count = acc.get("count")
    if dtype is None or ncomp is None or not isinstance(count, int) or count < 0:
        raise MalformedContent("malformed accessor")
    if "bufferView" not in acc:
        return np.zeros((count, ncomp), dtype=dtype)
    views = gltf.get("bufferViews", [])
    if not (0 <= acc["bufferView"] < len(views)):
        raise MalformedContent("accessor bufferView out of range")
    view = views[acc["bufferView"]]
    if view.get("buffer") != 0:
        raise MalformedContent("only the embedded BIN buffer is supported")
    itemsize = np.dtype(dtype).itemsize * ncomp
    stride = view.get("byteStride", itemsize)
    if not isinstance(stride, int) or stride < itemsize:
        raise MalformedContent("invalid byteStride")
    offset = view.get("byteOffset", 0) + acc.get("byteOffset", 0)
    end = offset + (count - 1) * stride + itemsize if count > 0 else offset
    if offset < 0 or end > len(binary):
        raise MalformedContent("accessor reads past the BIN chunk")
    raw = np.frombuffer(binary, dtype=np.uint8)[offset:end]
    # gather possibly-interleaved elements row by row, then reinterpret
    rows = np.lib.stride_tricks.as_strided(
        raw, shape=(count, itemsize), strides=(stride, 1)
    ).copy()
    return rows.view(dtype).reshape(count, ncomp)


def _node_matrix(node: dict) -> np.ndarray:
    if "matrix" in node:
        m = node["matrix"]
        if not isinstance(m, list) or len(m) != 16:
            raise MalformedContent("node matrix must be 16 numbers")
        return np.array(m, dtype=np.float64).reshape(4, 4, order="F")
    m = np.eye(4)
    if "scale" in node:
        m[:3, :3] *= np.asarray(node["scale"], dtype=np.float64)
    if "rotation" in node:
        qx, qy, qz, qw = (float(c) for c in node["rotation"])
        r = np.array(
            [
                [1 - 2 * (qy * qy + qz * qz), 2 * (qx * qy - qz * qw), 2 * (qx * qz + qy * qw)],
                [2 * (qx * qy + qz * qw), 1 - 2 * (qx * qx + qz * qz), 2 * (qy * qz - qx * qw)],
                [2 * (qx * qz - qy * qw), 2 * (qy * qz + qx * qw), 1 - 2 * (qx * qx + qy * qy)],
            ]
        )
        m[:3, :3] = r @ m[:3, :3]
    if "translation" in node:
        m[:3, 3] = np.asarray(node["translation"], dtype=np.float64)
    return m


def _gltf_mesh_instances(gltf: dict):
    """Yield (mesh dict, world matrix) for every mesh in the default scene."""
    meshes = gltf.get("meshes", [])
    nodes = gltf.get("nodes", [])
    scenes = gltf.get("scenes")
    if not scenes:
        for mesh in meshes:
            yield mesh, np.eye(4)
        return

    scene = scenes[gltf.get("scene", 0)]

    def walk(node_index: int, parent: np.ndarray, depth: int):
        if depth > 64:
            raise MalformedContent("glTF node graph too deep (cycle?)")
        if not (0 <= node_index < len(nodes)):
            raise MalformedContent("scene node index out of range")
        node = nodes[node_index]
        world = parent @ _node_matrix(node)
        if "mesh" in node:
            if not (0 <= node["mesh"] < len(meshes)):
                raise MalformedContent("node mesh index out of range")
            yield meshes[node["mesh"]], world
        for child in node.get("children", []):
            yield from walk(child, world, depth + 1)

    for root in scene.get("nodes", []):
        yield from walk(root, np.eye(4), 0)


def _decode_glb(data: bytes):
    """Split a GLB container into (gltf json dict, bin bytes)."""
    if len(data) < 12:
        raise MalformedContent("GLB shorter than its header")
    magic, version, length = struct.unpack_from("<4sII", data, 0)
    if magic != GLB_MAGIC:
        raise MalformedContent("bad GLB magic")
    if version != 2:
        raise MalformedContent(f"unsupported glTF version {version}")
    if length > len(data):
        raise MalformedContent("GLB length exceeds payload")

    offset = 12
    gltf = None
    binary = b""
    while offset + 8 <= length:
        chunk_len, chunk_type = struct.unpack_from("<II", data, offset)
        offset += 8
        if offset + chunk_len > length:
            raise MalformedContent("GLB chunk exceeds container")
        chunk = data[offset : offset + chunk_len]
        offset += chunk_len
        if chunk_type == _CHUNK_JSON:
            try:
                gltf = json.loads(chunk)
            except (json.JSONDecodeError, UnicodeDecodeError) as exc:
                raise MalformedContent(f"bad glTF JSON: {exc}") from exc
        elif chunk_type == _CHUNK_BIN:
            binary = chunk
    if not isinstance(gltf, dict):
        raise MalformedContent("GLB without a JSON chunk")
    for buf in gltf.get("buffers", []):
        if "uri" in buf:
            raise MalformedContent("external glTF buffers unsupported")
    return gltf, binary


def _split_b3dm(data: bytes):
    """Return (embedded GLB bytes, RTC center or None)."""
    if len(data) < 28:
        raise MalformedContent("b3dm shorter than its header")
    magic, version, byte_length, ftj, ftb, btj, btb = struct.unpack_from(
        "<4sIIIIII", data, 0
    )
    if version != 1:
        raise MalformedContent(f"unsupported b3dm version {version}")
    glb_offset = 28 + ftj + ftb + btj + btb
    if byte_length > len(data) or glb_offset > byte_length:
        raise MalformedContent("b3dm table lengths exceed payload")
    rtc = None
    if ftj > 0:
        try:
            feature_table = json.loads(data[28 : 28 + ftj])
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise MalformedContent(f"bad b3dm feature table: {exc}") from exc
        center = feature_table.get("RTC_CENTER") if isinstance(feature_table, dict) else None
        if center is not None:
            if not isinstance(center, list) or len(center) != 3:
                raise MalformedContent("RTC_CENTER must be 3 numbers")
            rtc = np.array(center, dtype=np.float64)
    return data[glb_offset:byte_length], rtc


def decode_content(data: bytes, node: TileNode) -> TriangleMesh:
    """Decode tile content (GLB or b3dm) into an ECEF-positioned mesh.

    Applies, in order: glTF scene node transforms, the y-up to z-up axis
    conversion, the b3dm RTC center, and the tile's parent-composed
    transform.  Vertices are re-based onto a 64-bit tile origin.
    """
    try:
        return _decode_content(data, node)
    except (MalformedContent, UnsupportedPrimitive, MissingPositions):
        raise
    except (ValueError, KeyError, IndexError, TypeError, OverflowError,
            struct.error, RecursionError) as exc:
        # corrupted buffers must fail loudly, never crash or emit garbage
        raise MalformedContent(f"undecodable tile content: {exc}") from exc


def _decode_content(data: bytes, node: TileNode) -> TriangleMesh:
    if len(data) < 4:
        raise MalformedContent("content too short")
    rtc = None
    if data[:4] == B3DM_MAGIC:
        data, rtc = _split_b3dm(data)
        if len(data) < 4:
            raise MalformedContent("b3dm without embedded GLB")
    if data[:4] != GLB_MAGIC:
        raise MalformedContent(f"unknown content magic {data[:4]!r}")
    gltf, binary = _decode_glb(data)

    all_pos: list[np.ndarray] = []
    all_idx: list[np.ndarray] = []
    all_col: list[np.ndarray | None] = []
    all_uv: list[np.ndarray | None] = []
    base_color = None
    vertex_offset = 0
    found_primitive = False

    for mesh, world in _gltf_mesh_instances(gltf):
        for prim in mesh.get("primitives", []):
            found_primitive = True
            if prim.get("mode", 4) != 4:
                raise UnsupportedPrimitive(f"mode {prim.get('mode')} is not TRIANGLES")
            attrs = prim.get("attributes", {})
            if "POSITION" not in attrs:
                raise MissingPositions("primitive has no POSITION attribute")
            with np.errstate(invalid="ignore"):
                pos = _read_accessor(gltf, binary, attrs["POSITION"]).astype(
                    np.float64
                )
            if pos.shape[1] != 3:
                raise MalformedContent("POSITION must be VEC3")
            if not np.all(np.isfinite(pos)):
                raise MalformedContent("non-finite vertex positions")

            if "indices" in prim:
                idx = _read_accessor(gltf, binary, prim["indices"])
                if idx.shape[1] != 1 or not np.issubdtype(idx.dtype, np.integer):
                    raise MalformedContent("indices must be integer scalars")
                idx = idx.reshape(-1).astype(np.int64)
            else:
                idx = np.arange(len(pos), dtype=np.int64)
            if len(idx) % 3 != 0:
                raise MalformedContent("triangle index count not divisible by 3")
            if len(idx) and (idx.min() < 0 or idx.max() >= len(pos)):
                raise MalformedContent("index out of vertex range")

            pos = pos @ world[:3, :3].T + world[:3, 3]

            col = None
            if "COLOR_0" in attrs:
                col = _read_accessor(gltf, binary, attrs["COLOR_0"]).astype(np.float64)
                acc = gltf["accessors"][attrs["COLOR_0"]]
                if acc["componentType"] == 5121:
                    col /= 255.0
                elif acc["componentType"] == 5123:
                    col /= 65535.0
            uv = None
            if "TEXCOORD_0" in attrs:
                uv = _read_accessor(gltf, binary, attrs["TEXCOORD_0"]).astype(np.float64)

            if base_color is None and "material" in prim:
                mats = gltf.get("materials", [])
                if 0 <= prim["material"] < len(mats):
                    factor = mats[prim["material"]].get(
                        "pbrMetallicRoughness", {}
                    ).get("baseColorFactor")
                    if factor is not None:
                        base_color = tuple(float(c) for c in factor)

            all_pos.append(pos)
            all_idx.append(idx.reshape(-1, 3) + vertex_offset)
            all_col.append(col)
            all_uv.append(uv)
            vertex_offset += len(pos)

    if not found_primitive:
        raise MalformedContent("GLB contains no triangle primitives")

    pos = np.concatenate(all_pos) if all_pos else np.zeros((0, 3))
    idx = np.concatenate(all_idx) if all_idx else np.zeros((0, 3), np.int64)

    # y-up (glTF) -> z-up (tile), then RTC center, then tile transform
    pos = pos @ _YUP_TO_ZUP.T
    if rtc is not None:
        pos = pos + rtc
    pos = pos @ node.transform[:3, :3].T + node.transform[:3, 3]

    colors = None
    if all_col and all(c is not None for c in all_col):
        widths = {c.shape[1] for c in all_col}
        if len(widths) == 1:
            colors = np.concatenate(all_col)
    uvs = None
    if all_uv and all(u is not None for u in all_uv):
        uvs = np.concatenate(all_uv)

    # drop exactly-degenerate triangles, keep the count
    dropped = 0
    if len(idx):
        a, b, c = pos[idx[:, 0]], pos[idx[:, 1]], pos[idx[:, 2]]
        area2 = np.linalg.norm(np.cross(b - a, c - a), axis=1)
        keep = area2 > 0.0
        dropped = int((~keep).sum())
        idx = idx[keep]

    origin = (
        (pos.min(axis=0) + pos.max(axis=0)) * 0.5 if len(pos) else np.zeros(3)
    )
    return TriangleMesh(
        tile_origin=origin,
        positions=pos - origin,
        indices=idx,
        colors=colors,
        uvs=uvs,
        base_color=base_color,
        dropped_degenerate=dropped,
    )


def encode_glb(
    positions: np.ndarray,
    indices: np.ndarray,
    base_color: tuple[float, float, float, float] | None = None,
) -> bytes:
    """Encode z-up local positions + triangle indices as a minimal GLB."""
    pos = np.asarray(positions, dtype=np.float64)
    # inverse of the decoder's y-up -> z-up conversion
    pos_yup = (pos @ _YUP_TO_ZUP).astype(np.float32)
    idx = np.asarray(indices, dtype=np.uint32).reshape(-1)

    pos_bytes = pos_yup.tobytes()
    idx_bytes = idx.tobytes()
    bin_chunk = pos_bytes + idx_bytes
    if len(bin_chunk) % 4:
        bin_chunk += b"\x00" * (4 - len(bin_chunk) % 4)

    material = []
    prim = {
        "attributes": {"POSITION": 0},
        "indices": 1,
        "mode": 4,
    }
    if base_color is not None:
        material = [{"pbrMetallicRoughness": {"baseColorFactor": list(base_color)}}]
        prim["material"] = 0

    gltf = {
        "asset": {"version": "2.0"},
        "scene": 0,
        "scenes": [{"nodes": [0]}],
        "nodes": [{"mesh": 0}],
        "meshes": [{"primitives": [prim]}],
        "materials": material,
        "buffers": [{"byteLength": len(bin_chunk)}],
        "bufferViews": [
            {"buffer": 0, "byteOffset": 0, "byteLength": len(pos_bytes)},
            {"buffer": 0, "byteOffset": len(pos_bytes), "byteLength": len(idx_bytes)},
        ],
        "accessors": [
            {
                "bufferView": 0,
                "componentType": 5126,
                "count": len(pos_yup),
                "type": "VEC3",
                "min": pos_yup.min(axis=0).tolist() if len(pos_yup) else [0, 0, 0],
                "max": pos_yup.max(axis=0).tolist() if len(pos_yup) else [0, 0, 0],
            },
            {
                "bufferView": 1,
                "componentType": 5125,
                "count": len(idx),
                "type": "SCALAR",
            },
        ],
    }
    if not material:
        del gltf["materials"]

    json_chunk = json.dumps(gltf, separators=(",", ":")).encode()
    if len(json_chunk) % 4:
        json_chunk += b" " * (4 - len(json_chunk) % 4)

    total = 12 + 8 + len(json_chunk) + 8 + len(bin_chunk)
    out = bytearray()
    out += struct.pack("<4sII", GLB_MAGIC, 2, total)
    out += struct.pack("<II", len(json_chunk), _CHUNK_JSON)
    out += json_chunk
    out += struct.pack("<II", len(bin_chunk), _CHUNK_BIN)
    out += bin_chunk
    return bytes(out)
