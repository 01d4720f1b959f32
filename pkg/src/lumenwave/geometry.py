"""Ray tracing acceleration: instance flattening and BVH construction.

Instances are flattened into world-space triangles per sampled time (the
build is redone per iteration only when a time-varying transform exists),
so instanced and pre-flattened scenes are bit-identical by construction.
Traversal and the watertight triangle test live in the kernel module;
this module owns construction plus thin query wrappers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lumenwave.core import kernels

__all__ = ["AccelStructure", "flatten_instances", "build_bvh", "build_accel", "intersect", "Hit"]

LEAF_SIZE = 4


@dataclass
class FlatGeometry:
    """World-space triangle soup with per-triangle attributes."""

    verts: np.ndarray  # (n, 9) p0 p1 p2
    shading_normals: np.ndarray  # (n, 9) per-vertex
    uvw: np.ndarray  # (n, 9) per-vertex
    instance: np.ndarray  # (n,) int32
    local_tri: np.ndarray  # (n,) int32
    material: np.ndarray  # (n,) int32


@dataclass
class AccelStructure:
    geometry: FlatGeometry
    bounds: np.ndarray  # (nodes, 6) min xyz, max xyz
    children: np.ndarray  # (nodes, 2); leaf: [-(start+1), count]
    order: np.ndarray  # triangle indices grouped by leaf
    time: float  # scene time this structure was built for

    @property
    def scene_bounds(self):
        if len(self.geometry.verts) == 0:
            return np.zeros(3), np.zeros(3)
        return self.bounds[0, :3].copy(), self.bounds[0, 3:].copy()


def transform_at(instance, time: float) -> np.ndarray:
    """Sampled affine transform: component lerp between the two key matrices."""
    if instance.transform_t1 is None or time <= 0.0:
        return instance.transform
    t = min(float(time), 1.0)
    return (1.0 - t) * instance.transform + t * instance.transform_t1


def flatten_instances(scene, time: float) -> FlatGeometry:
    verts = []
    normals = []
    uvws = []
    inst_ids = []
    local = []
    mats = []
    for idx, inst in enumerate(scene.instances):
        mesh = scene.meshes[inst.mesh]
        m = transform_at(inst, time)
        linear = m[:, :3]
        pos = mesh.positions @ linear.T + m[:, 3]
        # normals via inverse-transpose of the linear part
        inv_t = np.linalg.inv(linear).T
        nrm = mesh.normals @ inv_t.T
        lens = np.linalg.norm(nrm, axis=1)
        lens[lens == 0] = 1.0
        nrm = nrm / lens[:, None]
        t = mesh.triangles
        n = len(t)
        if n == 0:
            continue
        verts.append(np.concatenate([pos[t[:, 0]], pos[t[:, 1]], pos[t[:, 2]]], axis=1))
        normals.append(np.concatenate([nrm[t[:, 0]], nrm[t[:, 1]], nrm[t[:, 2]]], axis=1))
        uvws.append(np.concatenate([mesh.uvw[t[:, 0]], mesh.uvw[t[:, 1]], mesh.uvw[t[:, 2]]], axis=1))
        inst_ids.append(np.full(n, idx, dtype=np.int32))
        local.append(np.arange(n, dtype=np.int32))
        mats.append(np.full(n, inst.material, dtype=np.int32))
    if not verts:
        z9 = np.zeros((0, 9))
        z = np.zeros(0, dtype=np.int32)
        return FlatGeometry(z9, z9.copy(), z9.copy(), z, z.copy(), z.copy())
    return FlatGeometry(
        np.ascontiguousarray(np.concatenate(verts)),
        np.ascontiguousarray(np.concatenate(normals)),
        np.ascontiguousarray(np.concatenate(uvws)),
        np.concatenate(inst_ids),
        np.concatenate(local),
        np.concatenate(mats),
    )


def build_bvh(verts: np.ndarray):
    """Median-split BVH, largest centroid axis, ties broken by triangle index."""
    n = len(verts)
    if n == 0:
        bounds = np.zeros((1, 6))
        children = np.array([[-1, 0]], dtype=np.int64)  # empty leaf
        return bounds, children, np.zeros(0, dtype=np.int64)
    p = verts.reshape(n, 3, 3)
    tri_min = p.min(axis=1)
    tri_max = p.max(axis=1)
    centroids = 0.5 * (tri_min + tri_max)

    bounds_list = []
    children_list = []
    order = []

    def emit(idx_sorted):
        node = len(bounds_list)
        bmin = tri_min[idx_sorted].min(axis=0)
        bmax = tri_max[idx_sorted].max(axis=0)
        bounds_list.append(np.concatenate([bmin, bmax]))
        children_list.append([0, 0])
        if len(idx_sorted) <= LEAF_SIZE:
            children_list[node] = [-(len(order) + 1), len(idx_sorted)]
            order.extend(idx_sorted.tolist())
            return node
        ext = bmax - bmin
        axis = int(np.argmax(ext))
        keys = np.lexsort((idx_sorted, centroids[idx_sorted, axis]))
        idx_sorted = idx_sorted[keys]
        half = len(idx_sorted) // 2
        left = emit(idx_sorted[:half])
        right = emit(idx_sorted[half:])
        children_list[node] = [left, right]
        return node

    import sys

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 10000))
    try:
        emit(np.arange(n, dtype=np.int64))
    finally:
        sys.setrecursionlimit(limit)
    return (
        np.ascontiguousarray(bounds_list, dtype=np.float64),
        np.ascontiguousarray(children_list, dtype=np.int64),
        np.asarray(order, dtype=np.int64),
    )


def build_accel(scene, time: float) -> AccelStructure:
    """BVH over instance-transformed triangles at exactly `time`."""
    t0, t1 = scene.camera.shutter
    if t1 > t0 and not (t0 <= time <= t1):
        raise ValueError("time outside shutter interval")
    geo = flatten_instances(scene, time)
    bounds, children, order = build_bvh(geo.verts)
    return AccelStructure(geo, bounds, children, order, time)


@dataclass
class Hit:
    instance: int
    triangle: int  # local (per-mesh) triangle id
    global_tri: int
    distance: float
    bary: tuple
    geom_normal: tuple
    shading_normal: tuple
    front: bool
    uvw: tuple


def intersect(accel: AccelStructure, origin, direction, tmax=np.inf):
    """Closest hit or None.  Thin wrapper over the batched kernel."""
    o = np.asarray(origin, dtype=np.float64).reshape(1, 3)
    d = np.asarray(direction, dtype=np.float64).reshape(1, 3)
    if np.linalg.norm(d) == 0:
        raise ValueError("ray direction must be non-zero")
    out_t = np.empty(1)
    out_tri = np.empty(1, dtype=np.int64)
    out_bary = np.empty((1, 2))
    kernels.intersect_batch(
        accel.bounds, accel.children, accel.order, accel.geometry.verts,
        accel.geometry.instance.astype(np.int64), o, d,
        np.asarray([float(tmax)]), out_t, out_tri, out_bary,
    )
    tri = int(out_tri[0])
    if tri < 0:
        return None
    return _make_hit(accel, tri, float(out_t[0]), float(out_bary[0, 0]), float(out_bary[0, 1]), d[0])


def _make_hit(accel, tri, t, bu, bv, d):
    geo = accel.geometry
    v = geo.verts[tri].reshape(3, 3)
    ng = np.cross(v[1] - v[0], v[2] - v[0])
    ln = np.linalg.norm(ng)
    if ln > 0:
        ng = ng / ln
    w = 1.0 - bu - bv
    sn = geo.shading_normals[tri].reshape(3, 3)
    shading = w * sn[0] + bu * sn[1] + bv * sn[2]
    sln = np.linalg.norm(shading)
    if sln > 0:
        shading = shading / sln
    uvw = geo.uvw[tri].reshape(3, 3)
    uv = w * uvw[0] + bu * uvw[1] + bv * uvw[2]
    front = bool(np.dot(ng, d) < 0)
    return Hit(
        instance=int(geo.instance[tri]),
        triangle=int(geo.local_tri[tri]),
        global_tri=tri,
        distance=t,
        bary=(bu, bv),
        geom_normal=tuple(ng),
        shading_normal=tuple(shading),
        front=front,
        uvw=tuple(uv),
    )


def intersect_batch(accel: AccelStructure, origins, directions, tmax=None):
    """Vectorised closest-hit query; returns (t, tri, bary) arrays."""
    o = np.ascontiguousarray(origins, dtype=np.float64)
    d = np.ascontiguousarray(directions, dtype=np.float64)
    n = len(o)
    if tmax is None:
        tmax = np.full(n, np.inf)
    out_t = np.empty(n)
    out_tri = np.empty(n, dtype=np.int64)
    out_bary = np.empty((n, 2))
    kernels.intersect_batch(
        accel.bounds, accel.children, accel.order, accel.geometry.verts,
        accel.geometry.instance.astype(np.int64), o, d,
        np.ascontiguousarray(tmax, dtype=np.float64), out_t, out_tri, out_bary,
    )
    return out_t, out_tri, out_bary
