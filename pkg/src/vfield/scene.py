"""Terrain scenes: immutable snapshots of loaded tilesets plus runtime loading.

A ``TerrainScene`` is a value: tilesets resolved to triangle meshes with one
BVH over everything.  ``Scene`` is the mutable handle the service and CLI
hold; registration builds a fresh snapshot and publishes it atomically, so
concurrent raycasts never observe a partially loaded scene.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

from .spatial import Bvh, Hit, Ray, build_bvh
from .tileset import (
    TriangleMesh,
    decode_content,
    fetch_uri,
    parse_tileset,
    select_max_detail,
)


@dataclass(frozen=True)
class LoadedTileset:
    tileset_id: str
    uri: str
    meshes: tuple[TriangleMesh, ...]


@dataclass(frozen=True)
class TerrainScene:
    """Immutable snapshot: loaded tilesets and a BVH over all their meshes."""

    tilesets: tuple[LoadedTileset, ...] = ()
    meshes: tuple[TriangleMesh, ...] = ()
    bvh: Bvh | None = field(default=None, compare=False)

    def raycast(self, ray: Ray) -> Hit | None:
        if self.bvh is None:
            return None
        return self.bvh.raycast(ray)

    @property
    def n_triangles(self) -> int:
        return sum(m.n_triangles for m in self.meshes)


def load_tileset_meshes(uri: str, fetch=fetch_uri) -> tuple[TriangleMesh, ...]:
    """Parse a tileset URI and decode every max-detail tile's content."""
    tree = parse_tileset(fetch(uri), uri, resolver=fetch)
    meshes = []
    for node in select_max_detail(tree):
        meshes.append(decode_content(fetch(node.content_uri), node))
    return tuple(meshes)


class Scene:
    """Handle over the current TerrainScene snapshot."""

    def __init__(self):
        self._snapshot = TerrainScene()
        self._lock = threading.Lock()
        self._counter = 0

    @property
    def snapshot(self) -> TerrainScene:
        return self._snapshot

    def register_tileset(self, uri: str, fetch=fetch_uri) -> str:
        """Load a tileset and swap in a new snapshot; returns its id.

        Parse or decode failures propagate without touching the scene.
        """
        meshes = load_tileset_meshes(uri, fetch)
        with self._lock:
            self._counter += 1
            tileset_id = f"ts-{self._counter}"
            loaded = LoadedTileset(tileset_id=tileset_id, uri=uri, meshes=meshes)
            tilesets = self._snapshot.tilesets + (loaded,)
            all_meshes = self._snapshot.meshes + meshes
            bvh = build_bvh(all_meshes)
            self._snapshot = TerrainScene(
                tilesets=tilesets, meshes=all_meshes, bvh=bvh
            )
        return tileset_id


def register_tileset(scene: Scene, uri: str, fetch=fetch_uri) -> str:
    return scene.register_tileset(uri, fetch)
