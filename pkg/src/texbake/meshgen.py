"""Procedural UV-mapped test meshes.

These generators exist so the pipeline, the benchmark subcommand, and the test
suite can run without shipping binary assets. All meshes come out with outward
normals and a UV atlas inside [0, 1]^2.
"""

from __future__ import annotations

import numpy as np

from .mesh import TriMesh


def cube(size: float = 1.0) -> TriMesh:
    """Axis-aligned cube with 12 triangles and a 3x2 atlas of 6 UV squares."""
    h = size / 2.0
    # Each entry: (face normal axis, sign); corners wound CCW seen from outside.
    quads = []
    for axis in range(3):
        for sign in (1.0, -1.0):
            n = np.zeros(3)
            n[axis] = sign
            u_ax = np.zeros(3)
            u_ax[(axis + 1) % 3] = 1.0
            v_ax = np.cross(n, u_ax)
            c = n * h
            corners = [
                c - u_ax * h - v_ax * h,
                c + u_ax * h - v_ax * h,
                c + u_ax * h + v_ax * h,
                c - u_ax * h + v_ax * h,
            ]
            quads.append(corners)

    positions = []
    faces = []
    uvs = []
    pad = 0.01
    for qi, corners in enumerate(quads):
        col, row = qi % 3, qi // 3
        u0, u1 = col / 3 + pad, (col + 1) / 3 - pad
        v0, v1 = row / 2 + pad, (row + 1) / 2 - pad
        quad_uv = [(u0, v0), (u1, v0), (u1, v1), (u0, v1)]
        base = len(positions)
        positions.extend(corners)
        for a, b, c in ((0, 1, 2), (0, 2, 3)):
            faces.append((base + a, base + b, base + c))
            uvs.append((quad_uv[a], quad_uv[b], quad_uv[c]))

    return TriMesh(
        positions=np.asarray(positions, dtype=np.float64),
        faces=np.asarray(faces, dtype=np.int32),
        uv_corners=np.asarray(uvs, dtype=np.float64),
    )


def uv_sphere(n_lat: int = 32, n_lon: int = 64, radius: float = 1.0) -> TriMesh:
    """Latitude/longitude sphere with an equirectangular UV chart."""
    lats = np.linspace(-np.pi / 2, np.pi / 2, n_lat + 1)
    lons = np.linspace(0.0, 2 * np.pi, n_lon + 1)

    def point(la: float, lo: float) -> np.ndarray:
        return radius * np.array(
            [np.cos(la) * np.sin(lo), np.sin(la), np.cos(la) * np.cos(lo)]
        )

    positions = []
    faces = []
    uvs = []

    def add_tri(p0, p1, p2, t0, t1, t2):
        base = len(positions)
        positions.extend([p0, p1, p2])
        faces.append((base, base + 1, base + 2))
        uvs.append((t0, t1, t2))

    for i in range(n_lat):
        for j in range(n_lon):
            la0, la1 = lats[i], lats[i + 1]
            lo0, lo1 = lons[j], lons[j + 1]
            u0, u1 = j / n_lon, (j + 1) / n_lon
            v0, v1 = i / n_lat, (i + 1) / n_lat
            p00, p10 = point(la0, lo0), point(la0, lo1)
            p01, p11 = point(la1, lo0), point(la1, lo1)
            # CCW from outside: outward normal. Skip the collapsed pole edges.
            if i > 0:
                add_tri(p00, p10, p11, (u0, v0), (u1, v0), (u1, v1))
            if i < n_lat - 1:
                add_tri(p00, p11, p01, (u0, v0), (u1, v1), (u0, v1))

    return TriMesh(
        positions=np.asarray(positions, dtype=np.float64),
        faces=np.asarray(faces, dtype=np.int32),
        uv_corners=np.asarray(uvs, dtype=np.float64),
    )


def open_cylinder(
    n_seg: int = 48,
    n_height: int = 8,
    radius: float = 0.6,
    half_height: float = 0.9,
) -> TriMesh:
    """Capless tube around the Y axis: a non-watertight wall with outward normals."""
    positions = []
    faces = []
    uvs = []

    def ring_pt(j: int, y: float) -> np.ndarray:
        a = 2 * np.pi * j / n_seg
        return np.array([radius * np.sin(a), y, radius * np.cos(a)])

    ys = np.linspace(-half_height, half_height, n_height + 1)
    for i in range(n_height):
        for j in range(n_seg):
            y0, y1 = ys[i], ys[i + 1]
            p00, p10 = ring_pt(j, y0), ring_pt(j + 1, y0)
            p01, p11 = ring_pt(j, y1), ring_pt(j + 1, y1)
            u0, u1 = j / n_seg, (j + 1) / n_seg
            v0, v1 = i / n_height, (i + 1) / n_height
            base = len(positions)
            positions.extend([p00, p10, p11, p01])
            faces.append((base, base + 1, base + 2))
            uvs.append(((u0, v0), (u1, v0), (u1, v1)))
            faces.append((base, base + 2, base + 3))
            uvs.append(((u0, v0), (u1, v1), (u0, v1)))

    return TriMesh(
        positions=np.asarray(positions, dtype=np.float64),
        faces=np.asarray(faces, dtype=np.int32),
        uv_corners=np.asarray(uvs, dtype=np.float64),
    )


def torus(
    major_radius: float = 0.7,
    minor_radius: float = 0.3,
    n_major: int = 48,
    n_minor: int = 24,
) -> TriMesh:
    """Torus around the Y axis with a full-square UV chart."""
    positions = []
    faces = []
    uvs = []

    def pt(i: int, j: int) -> np.ndarray:
        phi = 2 * np.pi * i / n_major  # around the main ring
        theta = 2 * np.pi * j / n_minor  # around the tube
        r = major_radius + minor_radius * np.cos(theta)
        return np.array([r * np.sin(phi), minor_radius * np.sin(theta), r * np.cos(phi)])

    for i in range(n_major):
        for j in range(n_minor):
            p00, p10 = pt(i, j), pt(i + 1, j)
            p01, p11 = pt(i, j + 1), pt(i + 1, j + 1)
            u0, u1 = i / n_major, (i + 1) / n_major
            v0, v1 = j / n_minor, (j + 1) / n_minor
            base = len(positions)
            positions.extend([p00, p10, p11, p01])
            faces.append((base, base + 1, base + 2))
            uvs.append(((u0, v0), (u1, v0), (u1, v1)))
            faces.append((base, base + 2, base + 3))
            uvs.append(((u0, v0), (u1, v1), (u0, v1)))

    return TriMesh(
        positions=np.asarray(positions, dtype=np.float64),
        faces=np.asarray(faces, dtype=np.int32),
        uv_corners=np.asarray(uvs, dtype=np.float64),
    )


def quad_plane(
    width: float = 1.6,
    height: float = 1.6,
    z: float = 0.0,
    tilt_y_deg: float = 0.0,
) -> TriMesh:
    """Two-triangle quad facing +Z, optionally rotated about the vertical axis."""
    hw, hh = width / 2, height / 2
    corners = np.array(
        [[-hw, -hh, z], [hw, -hh, z], [hw, hh, z], [-hw, hh, z]], dtype=np.float64
    )
    if tilt_y_deg:
        a = np.deg2rad(tilt_y_deg)
        rot = np.array(
            [[np.cos(a), 0, np.sin(a)], [0, 1, 0], [-np.sin(a), 0, np.cos(a)]]
        )
        corners = corners @ rot.T
    quad_uv = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=np.float64)
    faces = np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int32)
    uvs = np.stack([quad_uv[[0, 1, 2]], quad_uv[[0, 2, 3]]])
    return TriMesh(positions=corners, faces=faces, uv_corners=uvs)
