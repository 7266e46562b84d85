"""Synthetic desk-scale terrain fixtures.

Real survey datasets are not shipped; these generators produce georeferenced
tilesets whose dimensions echo the magnitudes the measurements are meant to
reproduce (e.g. a 2500 m wide, 500 m deep crater) plus arbitrarily large
fractal-ish terrains for benchmarking.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .geodesy import (
    GeodeticCoord,
    ecef_to_geodetic_arrays,
    enu_frame_at,
    geodetic_to_ecef_arrays,
)
from .tileset import encode_glb

KOLUMBO_LIKE_ANCHOR = GeodeticCoord(36.5, 25.5, 0.0)

CRATER_RADIUS_M = 1250.0
CRATER_DEPTH_M = 500.0


def crater_height(r: np.ndarray) -> np.ndarray:
    """Cone crater profile: rim at 0 m, floor at -CRATER_DEPTH_M in the center."""
    inside = np.clip(1.0 - np.asarray(r) / CRATER_RADIUS_M, 0.0, 1.0)
    return -CRATER_DEPTH_M * inside


def grid_indices(n: int) -> np.ndarray:
    """Triangle indices for an (n+1) x (n+1) vertex grid, 2*n*n triangles."""
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    v00 = (i * (n + 1) + j).ravel()
    v01 = v00 + 1
    v10 = v00 + (n + 1)
    v11 = v10 + 1
    tris = np.empty((2 * n * n, 3), dtype=np.int64)
    tris[0::2] = np.stack([v00, v10, v11], axis=1)
    tris[1::2] = np.stack([v00, v11, v01], axis=1)
    return tris


def heightfield_mesh(
    anchor: GeodeticCoord,
    half_extent_m: float,
    n_cells: int,
    height_fn,
):
    """ECEF vertices + indices of a height field around ``anchor``.

    The grid is laid out on the local ENU tangent; each vertex is dropped
    onto the ellipsoid at its tangent-plane location and re-lifted to the
    exact ellipsoidal height ``height_fn(east, north)``.
    """
    frame = enu_frame_at(anchor)
    ticks = np.linspace(-half_extent_m, half_extent_m, n_cells + 1)
    east, north = np.meshgrid(ticks, ticks, indexing="ij")
    east = east.ravel()
    north = north.ravel()
    h = height_fn(east, north)

    tangent = (
        frame.origin.as_array()
        + east[:, None] * frame.east
        + north[:, None] * frame.north
    )
    lat, lon, _ = ecef_to_geodetic_arrays(tangent)
    verts = geodetic_to_ecef_arrays(lat, lon, h)
    return verts, grid_indices(n_cells)


def crater_mesh(anchor: GeodeticCoord = KOLUMBO_LIKE_ANCHOR, n_cells: int = 80,
                half_extent_m: float = 2000.0):
    """Cone crater fixture: rim at h=0, floor at h=-500 m, 2500 m across."""

    def height(east, north):
        return crater_height(np.hypot(east, north))

    return heightfield_mesh(anchor, half_extent_m, n_cells, height)


def rolling_terrain_mesh(anchor: GeodeticCoord, n_cells: int,
                         half_extent_m: float = 5000.0, seed: int = 7):
    """Smooth pseudo-random terrain with full ray coverage from above."""
    rng = np.random.default_rng(seed)
    freqs = rng.uniform(0.5, 4.0, size=(6, 2))
    phases = rng.uniform(0.0, 2 * np.pi, size=6)
    amps = rng.uniform(5.0, 40.0, size=6)

    def height(east, north):
        u = east / half_extent_m
        v = north / half_extent_m
        h = np.zeros_like(u)
        for (fu, fv), ph, a in zip(freqs, phases, amps):
            h += a * np.sin(fu * np.pi * u + fv * np.pi * v + ph)
        return h

    return heightfield_mesh(anchor, half_extent_m, n_cells, height)


def write_tileset(directory: str, verts: np.ndarray, indices: np.ndarray,
                  name: str = "fixture") -> str:
    """Write a single-tile tileset (tileset.json + GLB) and return its path.

    The tile transform carries the 64-bit offset to the mesh centroid; the
    GLB stores float32 positions relative to it.
    """
    os.makedirs(directory, exist_ok=True)
    origin = (verts.min(axis=0) + verts.max(axis=0)) * 0.5
    local = verts - origin
    glb = encode_glb(local, indices)
    glb_name = f"{name}.glb"
    with open(os.path.join(directory, glb_name), "wb") as f:
        f.write(glb)

    half = np.abs(local).max(axis=0)
    transform = np.eye(4)
    transform[:3, 3] = origin
    doc = {
        "asset": {"version": "1.1"},
        "geometricError": 1000.0,
        "root": {
            "transform": transform.flatten(order="F").tolist(),
            "boundingVolume": {
                "box": [0, 0, 0, half[0], 0, 0, 0, half[1], 0, 0, 0, half[2]]
            },
            "geometricError": 0.0,
            "refine": "REPLACE",
            "content": {"uri": glb_name},
        },
    }
    path = os.path.join(directory, "tileset.json")
    with open(path, "w") as f:
        json.dump(doc, f)
    return path


def write_crater_tileset(directory: str, n_cells: int = 80) -> str:
    verts, indices = crater_mesh(n_cells=n_cells)
    return write_tileset(directory, verts, indices, name="crater")


def write_terrain_tileset(directory: str, n_triangles: int,
                          anchor: GeodeticCoord = KOLUMBO_LIKE_ANCHOR) -> str:
    """Rolling-terrain tileset with at least ``n_triangles`` triangles.

    A few edge cells collapse under float32 quantization, so the grid is
    slightly oversized to keep the decoded count above the request.
    """
    n_cells = max(1, int(np.ceil(np.sqrt(n_triangles / 2.0) * 1.002)))
    verts, indices = rolling_terrain_mesh(anchor, n_cells)
    return write_tileset(directory, verts, indices, name="terrain")
