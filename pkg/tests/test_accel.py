"""Acceleration structure: watertightness, parity, determinism."""

import numpy as np
import pytest

from lumenwave import geometry, meshgen, sceneformat
from lumenwave.sceneformat import load_scene


def scene_from_mesh(pos, tris, extra=""):
    mesh_nums = " ".join(repr(float(v)) for v in pos.reshape(-1))
    tri_nums = " ".join(str(v) for v in tris.reshape(-1))
    text = f"""
    camera {{ position (0 0 5) look_at (0 0 0) shutter (0 1) }}
    material {{ id m layers [ {{ bsdf diffuse tint (0.5 0.5 0.5) }} ] }}
    mesh {{ id g positions [{mesh_nums}] triangles [{tri_nums}] }}
    instance {{ id obj mesh g material m }}
    {extra}
    """
    return load_scene(text)


class TestBuild:
    def test_static_scene_time_invariant(self):
        pos, _, _, tris = meshgen.box((0, 0, 0), (1, 1, 1))
        scene = scene_from_mesh(pos, tris)
        a0 = geometry.build_accel(scene, 0.0)
        a1 = geometry.build_accel(scene, 0.5)
        assert np.array_equal(a0.bounds, a1.bounds)
        assert np.array_equal(a0.geometry.verts, a1.geometry.verts)

    def test_moving_triangle_aabb(self):
        pos = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float)
        tris = np.array([[0, 1, 2]])
        extra = """
        instance { id mover mesh g material m
          transform { translate (0 0 0) } transform_t1 { translate (2 0 0) } }
        """
        scene = scene_from_mesh(pos, tris, extra)
        for t in (0.0, 0.25, 1.0):
            accel = geometry.build_accel(scene, t)
            moved = accel.geometry.verts[1].reshape(3, 3)
            assert np.allclose(moved[:, 0].min(), 2 * t)

    def test_time_outside_shutter(self):
        pos, _, _, tris = meshgen.box((0, 0, 0), (1, 1, 1))
        scene = scene_from_mesh(pos, tris)
        with pytest.raises(ValueError):
            geometry.build_accel(scene, 2.0)

    def test_empty_scene(self):
        scene = load_scene("camera { position (0 0 5) look_at (0 0 0) }")
        accel = geometry.build_accel(scene, 0.0)
        assert geometry.intersect(accel, (0, 0, 0), (0, 0, -1)) is None

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        pos = rng.random((300, 3))
        tris = rng.integers(0, 300, (200, 3))
        ok = tris[:, 0] != tris[:, 1]
        tris = tris[ok]
        scene = scene_from_mesh(pos, tris)
        a = geometry.build_accel(scene, 0.0)
        b = geometry.build_accel(scene, 0.0)
        assert np.array_equal(a.bounds, b.bounds) and np.array_equal(a.order, b.order)


class TestIntersect:
    def test_direction_validated(self):
        pos, _, _, tris = meshgen.box((0, 0, 0), (1, 1, 1))
        accel = geometry.build_accel(scene_from_mesh(pos, tris), 0.0)
        with pytest.raises(ValueError):
            geometry.intersect(accel, (0, 0, 5), (0, 0, 0))

    def test_watertight_shared_edge_sweep(self):
        # Two triangles forming a quad; 10^5 rays aimed exactly at the shared
        # diagonal must each produce exactly one hit (no leaks, no misses).
        pos, _, _, tris = meshgen.quad((0, 0, 0), (1, 0, 0), (0, 1, 0))
        accel = geometry.build_accel(scene_from_mesh(pos, tris), 0.0)
        n = 100_000
        s = np.linspace(0.0, 1.0, n)
        origins = np.stack([s, s, np.full(n, 2.0)], axis=1)  # diagonal y=x hits the shared edge
        dirs = np.tile([0.0, 0.0, -1.0], (n, 1))
        t, tri, _ = geometry.intersect_batch(accel, origins, dirs)
        assert np.all(tri >= 0), f"{np.sum(tri < 0)} leaked rays on the shared edge"
        assert np.allclose(t, 2.0)

    def test_watertight_vertex_rays(self):
        pos, _, _, tris = meshgen.icosphere((0, 0, 0), 1.0, 2)
        accel = geometry.build_accel(scene_from_mesh(pos, tris), 0.0)
        # aim exactly at every vertex from outside
        verts = np.unique(pos.round(14), axis=0)
        origins = verts * 3.0
        dirs = -verts / np.linalg.norm(verts, axis=1, keepdims=True)
        t, tri, _ = geometry.intersect_batch(accel, origins, dirs)
        assert np.all(tri >= 0)

    def test_closed_mesh_parity(self):
        # any ray from outside a closed mesh crosses the boundary an even
        # number of times
        pos, _, _, tris = meshgen.icosphere((0, 0, 0), 1.0, 2)
        accel = geometry.build_accel(scene_from_mesh(pos, tris), 0.0)
        rng = np.random.default_rng(11)
        for _ in range(300):
            o = rng.normal(size=3)
            o = o / np.linalg.norm(o) * 4.0
            d = rng.normal(size=3)
            d = d / np.linalg.norm(d)
            crossings = 0
            origin = o.copy()
            for _step in range(64):
                hit = geometry.intersect(accel, origin, d)
                if hit is None:
                    break
                crossings += 1
                origin = origin + (hit.distance + 1e-9) * d
            assert crossings % 2 == 0

    def test_self_query_random_triangles(self):
        # every triangle found by a closest-hit query from its own centroid
        rng = np.random.default_rng(5)
        n = 10_000
        base = rng.random((n, 3)) * 20
        e1 = rng.normal(size=(n, 3)) * 0.3
        e2 = rng.normal(size=(n, 3)) * 0.3
        pos = np.concatenate([base, base + e1, base + e2])
        tris = np.stack([np.arange(n), np.arange(n) + n, np.arange(n) + 2 * n], axis=1)
        scene = scene_from_mesh(pos, tris)
        accel = geometry.build_accel(scene, 0.0)
        v = accel.geometry.verts.reshape(n, 3, 3)
        centroids = v.mean(axis=1)
        normals = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
        lens = np.linalg.norm(normals, axis=1)
        ok = lens > 1e-12
        normals[ok] /= lens[ok, None]
        origins = centroids + normals * 1e-4
        t, tri, _ = geometry.intersect_batch(accel, origins, -normals)
        found = tri == np.arange(n)
        # a triangle may legitimately be occluded by a closer random triangle
        hit_any = tri >= 0
        assert np.all(hit_any[ok])
        assert np.mean(found[ok]) > 0.95
        missed = ok & hit_any & ~found
        if np.any(missed):
            assert np.all(t[missed] <= 1e-4 + 1e-9)

    def test_front_back_flag(self):
        pos, _, _, tris = meshgen.quad((0, 0, 0), (1, 0, 0), (0, 1, 0))
        accel = geometry.build_accel(scene_from_mesh(pos, tris), 0.0)
        front = geometry.intersect(accel, (0.2, 0.2, 1.0), (0, 0, -1))
        back = geometry.intersect(accel, (0.2, 0.2, -1.0), (0, 0, 1))
        assert front.front and not back.front
        assert front.instance == 0 and front.triangle in (0, 1)

    def test_instance_flattening_bit_exact(self):
        # two instances of one mesh == the flattened двух-mesh scene, bit for bit
        pos = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float)
        tris = np.array([[0, 1, 2]])
        extra = "instance { id shifted mesh g material m transform { translate (3 0 0) } }"
        inst_scene = scene_from_mesh(pos, tris, extra)
        flat_pos = np.concatenate([pos, pos + np.array([3.0, 0, 0])])
        flat_tris = np.concatenate([tris, tris + 3])
        flat_scene = scene_from_mesh(flat_pos, flat_tris)
        a = geometry.build_accel(inst_scene, 0.0)
        b = geometry.build_accel(flat_scene, 0.0)
        assert np.array_equal(a.geometry.verts, b.geometry.verts)
        rng = np.random.default_rng(17)
        o = rng.random((500, 3)) * 4 - 0.5
        o[:, 2] = 2.0
        d = np.tile([0.0, 0.0, -1.0], (500, 1))
        ta, tria, ba = geometry.intersect_batch(a, o, d)
        tb, trib, bb = geometry.intersect_batch(b, o, d)
        assert np.array_equal(ta, tb) and np.array_equal(tria, trib) and np.array_equal(ba, bb)

    def test_tie_break_lower_id(self):
        # two coincident triangles: the lower global id wins
        pos = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float)
        tris = np.array([[0, 1, 2], [0, 1, 2]])
        accel = geometry.build_accel(scene_from_mesh(pos, tris), 0.0)
        hit = geometry.intersect(accel, (0.2, 0.2, 1.0), (0, 0, -1))
        assert hit.global_tri == 0
