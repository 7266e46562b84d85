"""Virtual fieldwork measurement engine.

Load georeferenced 3D terrain tilesets, place markers by raycasting the
mesh surface, and take interpretation-toolbox measurements (polyline
distance, strike & dip, clipping box) with JSON session persistence.
"""

from .geodesy import (
    EcefVec,
    EngineOrigin,
    EngineVec,
    EnuFrame,
    GeodeticCoord,
    ecef_to_engine,
    ecef_to_geodetic,
    engine_origin_at,
    engine_to_ecef,
    enu_frame_at,
    geodetic_to_ecef,
)
from .measure import (
    ClipBox,
    Marker,
    Measurement,
    MeasurementSession,
    PolylineDistanceResult,
    StrikeDipResult,
    clip_box_from_markers,
    point_in_clipbox,
    polyline_distance,
    strike_dip,
)
from .scene import Scene, TerrainScene, register_tileset
from .session import export_session, import_session
from .spatial import Bvh, Footprint, Hit, Ray, build_bvh
from .tileset import (
    TriangleMesh,
    TilesetTree,
    decode_content,
    encode_glb,
    parse_tileset,
    select_max_detail,
)

__all__ = [
    "Bvh",
    "ClipBox",
    "EcefVec",
    "EngineOrigin",
    "EngineVec",
    "EnuFrame",
    "Footprint",
    "GeodeticCoord",
    "Hit",
    "Marker",
    "Measurement",
    "MeasurementSession",
    "PolylineDistanceResult",
    "Ray",
    "Scene",
    "StrikeDipResult",
    "TerrainScene",
    "TilesetTree",
    "TriangleMesh",
    "build_bvh",
    "clip_box_from_markers",
    "decode_content",
    "ecef_to_engine",
    "ecef_to_geodetic",
    "encode_glb",
    "engine_origin_at",
    "engine_to_ecef",
    "enu_frame_at",
    "export_session",
    "geodetic_to_ecef",
    "import_session",
    "parse_tileset",
    "point_in_clipbox",
    "polyline_distance",
    "register_tileset",
    "select_max_detail",
    "strike_dip",
]

__version__ = "0.1.0"
