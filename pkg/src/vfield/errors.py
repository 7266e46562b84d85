"""Exception hierarchy shared across the library and the HTTP service."""


class VfError(Exception):
    """Base class for all library errors.

    The class name doubles as the machine-readable error code exposed
    by the HTTP service.
    """

    @property
    def code(self) -> str:
        return type(self).__name__


# geodesy
class NearCenter(VfError):
    """ECEF point too close to the Earth's center to invert."""


# tileset
class MalformedTileset(VfError):
    """Tileset document violates the supported 3D Tiles subset."""


class UnsupportedVersion(VfError):
    """Tileset asset version other than 1.0 / 1.1."""


class MalformedContent(VfError):
    """Tile payload (GLB / b3dm) cannot be decoded."""


class UnsupportedPrimitive(VfError):
    """glTF primitive mode other than TRIANGLES."""


class MissingPositions(VfError):
    """glTF primitive without a POSITION attribute."""


# spatial
class EmptyScene(VfError):
    """No non-degenerate triangle available to build or query."""


class NoGeometry(VfError):
    """Footprint query found no vertices inside the footprint."""


# measure
class NoHit(VfError):
    """Ray missed all scene geometry."""


class TooFewMarkers(VfError):
    """Polyline distance needs at least two markers."""


class CollinearMarkers(VfError):
    """Three markers do not span a plane."""


class DegenerateBox(VfError):
    """Clip box markers do not span a box footprint."""


class UnknownMarker(VfError):
    """Referenced marker id does not exist in the session."""


# session
class SchemaViolation(VfError):
    """Session document does not validate against the schema."""


class UnknownVersion(VfError):
    """Session document schema_version is not supported."""


class DanglingMarkerRef(VfError):
    """Measurement references a marker id missing from the document."""


class StaleResults(UserWarning):
    """Stored measurement results disagree with recomputation.

    Warning, not an error: import succeeds with recomputed values.
    """
