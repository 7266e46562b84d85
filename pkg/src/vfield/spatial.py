"""BVH over scene triangles: closest-hit raycasting and footprint queries.

The hierarchy is built with a binned surface-area heuristic (median-split
fallback, leaves of at most 4 triangles) and traversed with the watertight
ray-triangle formulation of Woop, Benthin & Wald in 64-bit floats, so rays
crossing shared edges always report a hit.  Build and traversal kernels are
numba-compiled over flat numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from .errors import EmptyScene, NoGeometry
from .geodesy import EcefVec, EnuFrame, ecef_to_geodetic_arrays

LEAF_SIZE = 4
SAH_BINS = 16


@dataclass(frozen=True)
class Ray:
    """Ray in ECEF meters; direction must be unit length within 1e-12."""

    origin: EcefVec
    direction: np.ndarray
    t_max: float = 1e12

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64)
        if abs(float(np.linalg.norm(d)) - 1.0) > 1e-12:
            raise ValueError("ray direction must be a unit vector")
        if not self.t_max > 0.0:
            raise ValueError("t_max must be positive")
        object.__setattr__(self, "direction", d)

    @staticmethod
    def through(origin: EcefVec, target: EcefVec, t_max: float = 1e12) -> "Ray":
        d = target.as_array() - origin.as_array()
        n = float(np.linalg.norm(d))
        if n == 0.0:
            raise ValueError("degenerate ray")
        return Ray(origin, d / n, t_max)


@dataclass(frozen=True)
class Hit:
    """Closest intersection: parametric distance, point, triangle reference."""

    t: float
    point: EcefVec
    mesh_id: int
    triangle_index: int
    u: float
    v: float
    normal: np.ndarray


@dataclass(frozen=True)
class Footprint:
    """Horizontal oriented rectangle in an ENU frame, anchored in ECEF.

    ``axis_u``/``axis_v`` are horizontal unit vectors (ECEF components,
    perpendicular to the frame's up); the rectangle spans
    [0, width_m] x [0, length_m] from ``anchor``.
    """

    anchor: EcefVec
    axis_u: np.ndarray
    axis_v: np.ndarray
    width_m: float
    length_m: float


@nb.njit(cache=True)
def _build_kernel(tmin, tmax, cent, leaf_size):
    n_tris = tmin.shape[0]
    max_nodes = 2 * n_tris
    node_min = np.empty((max_nodes, 3), np.float64)
    node_max = np.empty((max_nodes, 3), np.float64)
    node_left = np.full(max_nodes, -1, np.int64)
    node_right = np.full(max_nodes, -1, np.int64)
    node_start = np.full(max_nodes, -1, np.int64)
    node_count = np.zeros(max_nodes, np.int64)
    perm = np.arange(n_tris)

    # explicit stack of (node index, range lo, range hi)
    stack = np.empty((64 + 2 * n_tris, 3), np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n_tris
    sp = 1
    n_nodes = 1

    bin_count = np.empty(SAH_BINS, np.int64)
    bin_min = np.empty((SAH_BINS, 3), np.float64)
    bin_max = np.empty((SAH_BINS, 3), np.float64)

    while sp > 0:
        sp -= 1
        ni = stack[sp, 0]
        lo = stack[sp, 1]
        hi = stack[sp, 2]
        n = hi - lo

        for k in range(3):
            node_min[ni, k] = np.inf
            node_max[ni, k] = -np.inf
        cmin = np.full(3, np.inf)
        cmax = np.full(3, -np.inf)
        for i in range(lo, hi):
            t = perm[i]
            for k in range(3):
                if tmin[t, k] < node_min[ni, k]:
                    node_min[ni, k] = tmin[t, k]
                if tmax[t, k] > node_max[ni, k]:
                    node_max[ni, k] = tmax[t, k]
                if cent[t, k] < cmin[k]:
                    cmin[k] = cent[t, k]
                if cent[t, k] > cmax[k]:
                    cmax[k] = cent[t, k]

        axis = 0
        ext = cmax[0] - cmin[0]
        for k in range(1, 3):
            if cmax[k] - cmin[k] > ext:
                ext = cmax[k] - cmin[k]
                axis = k

        if n <= leaf_size or ext <= 0.0:
            node_start[ni] = lo
            node_count[ni] = n
            continue

        # binned SAH along the widest centroid axis
        inv_ext = SAH_BINS / ext
        for b in range(SAH_BINS):
            bin_count[b] = 0
            for k in range(3):
                bin_min[b, k] = np.inf
                bin_max[b, k] = -np.inf
        for i in range(lo, hi):
            t = perm[i]
            b = int((cent[t, axis] - cmin[axis]) * inv_ext)
            if b >= SAH_BINS:
                b = SAH_BINS - 1
            bin_count[b] += 1
            for k in range(3):
                if tmin[t, k] < bin_min[b, k]:
                    bin_min[b, k] = tmin[t, k]
                if tmax[t, k] > bin_max[b, k]:
                    bin_max[b, k] = tmax[t, k]

        best_cost = np.inf
        best_split = -1
        lmin = np.empty(3)
        lmax = np.empty(3)
        for split in range(1, SAH_BINS):
            lcount = 0
            rcount = 0
            for k in range(3):
                lmin[k] = np.inf
                lmax[k] = -np.inf
            larea = 0.0
            for b in range(split):
                if bin_count[b] == 0:
                    continue
                lcount += bin_count[b]
                for k in range(3):
                    if bin_min[b, k] < lmin[k]:
                        lmin[k] = bin_min[b, k]
                    if bin_max[b, k] > lmax[k]:
                        lmax[k] = bin_max[b, k]
            if lcount > 0:
                dx = lmax[0] - lmin[0]
                dy = lmax[1] - lmin[1]
                dz = lmax[2] - lmin[2]
                larea = dx * dy + dy * dz + dz * dx
            for k in range(3):
                lmin[k] = np.inf
                lmax[k] = -np.inf
            rarea = 0.0
            for b in range(split, SAH_BINS):
                if bin_count[b] == 0:
                    continue
                rcount += bin_count[b]
                for k in range(3):
                    if bin_min[b, k] < lmin[k]:
                        lmin[k] = bin_min[b, k]
                    if bin_max[b, k] > lmax[k]:
                        lmax[k] = bin_max[b, k]
            if rcount > 0:
                dx = lmax[0] - lmin[0]
                dy = lmax[1] - lmin[1]
                dz = lmax[2] - lmin[2]
                rarea = dx * dy + dy * dz + dz * dx
            if lcount == 0 or rcount == 0:
                continue
            cost = larea * lcount + rarea * rcount
            if cost < best_cost:
                best_cost = cost
                best_split = split

        if best_split < 0:
            mid = lo + n // 2
        else:
            # partition by bin index
            i = lo
            j = hi - 1
            while i <= j:
                t = perm[i]
                b = int((cent[t, axis] - cmin[axis]) * inv_ext)
                if b >= SAH_BINS:
                    b = SAH_BINS - 1
                if b < best_split:
                    i += 1
                else:
                    perm[i] = perm[j]
                    perm[j] = t
                    j -= 1
            mid = i
            if mid == lo or mid == hi:
                mid = lo + n // 2

        if best_split < 0 or mid == lo + n // 2:
            # median fallback: selection by centroid along axis
            _partial_sort(perm, cent, axis, lo, hi, lo + n // 2)
            mid = lo + n // 2

        li = n_nodes
        ri = n_nodes + 1
        n_nodes += 2
        node_left[ni] = li
        node_right[ni] = ri
        stack[sp, 0] = li
        stack[sp, 1] = lo
        stack[sp, 2] = mid
        sp += 1
        stack[sp, 0] = ri
        stack[sp, 1] = mid
        stack[sp, 2] = hi
        sp += 1

    return (
        node_min[:n_nodes].copy(),
        node_max[:n_nodes].copy(),
        node_left[:n_nodes].copy(),
        node_right[:n_nodes].copy(),
        node_start[:n_nodes].copy(),
        node_count[:n_nodes].copy(),
        perm,
    )


@nb.njit(cache=True)
def _partial_sort(perm, cent, axis, lo, hi, k):
    # quickselect so perm[lo:k] <= perm[k:hi] along the centroid axis
    left = lo
    right = hi - 1
    while left < right:
        pivot = cent[perm[(left + right) // 2], axis]
        i = left
        j = right
        while i <= j:
            while cent[perm[i], axis] < pivot:
                i += 1
            while cent[perm[j], axis] > pivot:
                j -= 1
            if i <= j:
                tmp = perm[i]
                perm[i] = perm[j]
                perm[j] = tmp
                i += 1
                j -= 1
        if k <= j:
            right = j
        elif k >= i:
            left = i
        else:
            break


@nb.njit(cache=True, inline="always")
def _slab_test(bmin, bmax, o, d, t_best):
    t_near = 0.0
    t_far = t_best
    for k in range(3):
        if d[k] != 0.0:
            inv = 1.0 / d[k]
            t1 = (bmin[k] - o[k]) * inv
            t2 = (bmax[k] - o[k]) * inv
            if t1 > t2:
                t1, t2 = t2, t1
            if t1 > t_near:
                t_near = t1
            if t2 < t_far:
                t_far = t2
        elif o[k] < bmin[k] or o[k] > bmax[k]:
            return False, 0.0
    return t_near <= t_far, t_near


@nb.njit(cache=True)
def _raycast_kernel(
    node_min, node_max, node_left, node_right, node_start, node_count,
    v0, v1, v2, mesh_ids, tri_ids, o, d, t_max,
):
    # watertight ray constants (Woop/Benthin/Wald)
    kz = 0
    if abs(d[1]) > abs(d[kz]):
        kz = 1
    if abs(d[2]) > abs(d[kz]):
        kz = 2
    kx = (kz + 1) % 3
    ky = (kx + 1) % 3
    if d[kz] < 0.0:
        kx, ky = ky, kx
    sz = 1.0 / d[kz]
    sx = d[kx] * sz
    sy = d[ky] * sz

    best_t = t_max
    best_i = -1
    best_u = 0.0
    best_v = 0.0
    best_mesh = np.int64(2**62)
    best_tri = np.int64(2**62)

    stack = np.empty(128, np.int64)
    stack[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        ni = stack[sp]
        ok, t_near = _slab_test(node_min[ni], node_max[ni], o, d, best_t)
        if not ok:
            continue
        if node_start[ni] >= 0:
            lo = node_start[ni]
            hi = lo + node_count[ni]
            for i in range(lo, hi):
                ax = v0[i, kx] - o[kx] - sx * (v0[i, kz] - o[kz])
                ay = v0[i, ky] - o[ky] - sy * (v0[i, kz] - o[kz])
                bx = v1[i, kx] - o[kx] - sx * (v1[i, kz] - o[kz])
                by = v1[i, ky] - o[ky] - sy * (v1[i, kz] - o[kz])
                cx = v2[i, kx] - o[kx] - sx * (v2[i, kz] - o[kz])
                cy = v2[i, ky] - o[ky] - sy * (v2[i, kz] - o[kz])

                uu = cx * by - cy * bx
                vv = ax * cy - ay * cx
                ww = bx * ay - by * ax
                if (uu < 0.0 or vv < 0.0 or ww < 0.0) and (
                    uu > 0.0 or vv > 0.0 or ww > 0.0
                ):
                    continue
                det = uu + vv + ww
                if det == 0.0:
                    continue
                az = sz * (v0[i, kz] - o[kz])
                bz = sz * (v1[i, kz] - o[kz])
                cz = sz * (v2[i, kz] - o[kz])
                t = (uu * az + vv * bz + ww * cz) / det
                if t < 0.0 or t > best_t:
                    continue
                if t == best_t and best_i >= 0:
                    if mesh_ids[i] > best_mesh or (
                        mesh_ids[i] == best_mesh and tri_ids[i] >= best_tri
                    ):
                        continue
                best_t = t
                best_i = i
                best_u = vv / det
                best_v = ww / det
                best_mesh = mesh_ids[i]
                best_tri = tri_ids[i]
        else:
            li = node_left[ni]
            ri = node_right[ni]
            ok_l, tn_l = _slab_test(node_min[li], node_max[li], o, d, best_t)
            ok_r, tn_r = _slab_test(node_min[ri], node_max[ri], o, d, best_t)
            # near child on top of the stack
            if ok_l and ok_r:
                if tn_l <= tn_r:
                    stack[sp] = ri
                    sp += 1
                    stack[sp] = li
                    sp += 1
                else:
                    stack[sp] = li
                    sp += 1
                    stack[sp] = ri
                    sp += 1
            elif ok_l:
                stack[sp] = li
                sp += 1
            elif ok_r:
                stack[sp] = ri
                sp += 1
    return best_t, best_i, best_u, best_v


class Bvh:
    """Immutable acceleration structure over the triangles of a mesh set."""

    def __init__(self, meshes):
        v0s, v1s, v2s, mids, tids = [], [], [], [], []
        for mesh_id, mesh in enumerate(meshes):
            if len(mesh.indices) == 0:
                continue
            verts = mesh.tile_origin + np.asarray(mesh.positions, dtype=np.float64)
            idx = np.asarray(mesh.indices, dtype=np.int64)
            a, b, c = verts[idx[:, 0]], verts[idx[:, 1]], verts[idx[:, 2]]
            area2 = np.linalg.norm(np.cross(b - a, c - a), axis=1)
            keep = area2 > 0.0
            v0s.append(a[keep])
            v1s.append(b[keep])
            v2s.append(c[keep])
            mids.append(np.full(int(keep.sum()), mesh_id, np.int64))
            tids.append(np.nonzero(keep)[0].astype(np.int64))
        if not v0s or sum(len(v) for v in v0s) == 0:
            raise EmptyScene("no non-degenerate triangles")

        v0 = np.ascontiguousarray(np.concatenate(v0s))
        v1 = np.ascontiguousarray(np.concatenate(v1s))
        v2 = np.ascontiguousarray(np.concatenate(v2s))
        mesh_ids = np.concatenate(mids)
        tri_ids = np.concatenate(tids)

        tmin = np.minimum(np.minimum(v0, v1), v2)
        tmax = np.maximum(np.maximum(v0, v1), v2)
        cent = (tmin + tmax) * 0.5
        (
            self.node_min,
            self.node_max,
            self.node_left,
            self.node_right,
            self.node_start,
            self.node_count,
            perm,
        ) = _build_kernel(tmin, tmax, cent, LEAF_SIZE)

        # leaf ranges index reordered triangle arrays directly
        self.v0 = np.ascontiguousarray(v0[perm])
        self.v1 = np.ascontiguousarray(v1[perm])
        self.v2 = np.ascontiguousarray(v2[perm])
        self.mesh_ids = mesh_ids[perm]
        self.tri_ids = tri_ids[perm]
        self.n_triangles = len(self.v0)

    def raycast(self, ray: Ray) -> Hit | None:
        """Closest hit along the ray, or None; deterministic (equal-t ties
        go to the lowest (mesh id, triangle index))."""
        o = ray.origin.as_array()
        t, i, u, v = _raycast_kernel(
            self.node_min, self.node_max, self.node_left, self.node_right,
            self.node_start, self.node_count,
            self.v0, self.v1, self.v2, self.mesh_ids, self.tri_ids,
            o, ray.direction, ray.t_max,
        )
        if i < 0:
            return None
        point = o + t * ray.direction
        n = np.cross(self.v1[i] - self.v0[i], self.v2[i] - self.v0[i])
        n = n / np.linalg.norm(n)
        return Hit(
            t=float(t),
            point=EcefVec.from_array(point),
            mesh_id=int(self.mesh_ids[i]),
            triangle_index=int(self.tri_ids[i]),
            u=float(u),
            v=float(v),
            normal=n,
        )

    def elevation_range(
        self, footprint: Footprint, frame: EnuFrame
    ) -> tuple[float, float]:
        """Min/max ellipsoidal height over triangle vertices whose horizontal
        projection (in ``frame``) falls inside the footprint rectangle."""
        if footprint.width_m <= 0.0 or footprint.length_m <= 0.0:
            raise NoGeometry("degenerate footprint")
        verts = np.concatenate([self.v0, self.v1, self.v2])
        d = verts - footprint.anchor.as_array()
        u = d @ footprint.axis_u
        v = d @ footprint.axis_v
        inside = (u >= 0.0) & (u <= footprint.width_m) & (v >= 0.0) & (
            v <= footprint.length_m
        )
        if not inside.any():
            raise NoGeometry("no vertices inside footprint")
        _, _, h = ecef_to_geodetic_arrays(verts[inside])
        return float(h.min()), float(h.max())


def build_bvh(meshes) -> Bvh:
    """Build a BVH over ``meshes`` (objects with tile_origin/positions/indices)."""
    return Bvh(meshes)


def warm_up() -> None:
    """Trigger JIT compilation of the kernels on a tiny scene."""

    class _M:
        tile_origin = np.zeros(3)
        positions = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
        indices = np.array([[0, 1, 2]])

    bvh = Bvh([_M()])
    bvh.raycast(Ray(EcefVec(0.2, 0.2, 1.0), np.array([0.0, 0.0, -1.0])))
