"""Small triangle-mesh generators for scene construction and fixtures."""

from __future__ import annotations

import numpy as np

__all__ = ["quad", "box", "icosphere"]


def quad(corner, edge_u, edge_v):
    """Two triangles spanning corner + [0,1]^2 * (edge_u, edge_v)."""
    c = np.asarray(corner, dtype=np.float64)
    eu = np.asarray(edge_u, dtype=np.float64)
    ev = np.asarray(edge_v, dtype=np.float64)
    positions = np.stack([c, c + eu, c + eu + ev, c + ev])
    n = np.cross(eu, ev)
    n = n / np.linalg.norm(n)
    normals = np.tile(n, (4, 1))
    uvw = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=np.float64)
    triangles = np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int64)
    return positions, normals, uvw, triangles


def box(lo, hi, inward: bool = False):
    """Axis-aligned box as 12 triangles; `inward` flips faces (rooms)."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    positions = []
    normals = []
    uvw = []
    triangles = []
    # (axis, sign): face perpendicular to `axis` on the `sign` side
    for axis in range(3):
        for sign in (-1.0, 1.0):
            u_axis = (axis + 1) % 3
            v_axis = (axis + 2) % 3
            base = np.where(np.arange(3) == axis, hi if sign > 0 else lo, lo)
            eu = np.zeros(3)
            eu[u_axis] = hi[u_axis] - lo[u_axis]
            ev = np.zeros(3)
            ev[v_axis] = hi[v_axis] - lo[v_axis]
            if sign < 0:
                eu, ev = ev, eu  # keep outward winding
            if inward:
                eu, ev = ev, eu
            i0 = len(positions)
            corners = [base, base + eu, base + eu + ev, base + ev]
            positions.extend(corners)
            n = np.cross(eu, ev)
            n = n / np.linalg.norm(n)
            normals.extend([n] * 4)
            uvw.extend([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]])
            triangles.append([i0, i0 + 1, i0 + 2])
            triangles.append([i0, i0 + 2, i0 + 3])
    return (
        np.asarray(positions, dtype=np.float64),
        np.asarray(normals, dtype=np.float64),
        np.asarray(uvw, dtype=np.float64),
        np.asarray(triangles, dtype=np.int64),
    )


def icosphere(center, radius, subdivisions: int = 3):
    """Geodesic sphere with smooth vertex normals."""
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [tuple(v) for v in verts]
    for _ in range(subdivisions):
        cache = {}
        new_faces = []

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = np.asarray(verts[a]) + np.asarray(verts[b])
                m /= np.linalg.norm(m)
                cache[key] = len(verts)
                verts.append(tuple(m))
            return cache[key]

        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces

    unit = np.asarray(verts, dtype=np.float64)
    center = np.asarray(center, dtype=np.float64)
    positions = center + radius * unit
    normals = unit.copy()
    # spherical uvw for texturing
    theta = np.arccos(np.clip(unit[:, 2], -1, 1))
    phi = np.mod(np.arctan2(unit[:, 1], unit[:, 0]), 2 * np.pi)
    uvw = np.stack([phi / (2 * np.pi), theta / np.pi, np.zeros(len(unit))], axis=1)
    return positions, normals, uvw, np.asarray(faces, dtype=np.int64)
