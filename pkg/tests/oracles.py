"""Independent brute-force reference implementations used as test oracles.

Everything here is deliberately written as plain scalar loops (or direct
linear algebra) with no code shared with the fast paths it checks.
"""

import math

import numpy as np

from texbake.backproject import WEIGHT_QUANTUM
from texbake.camera import CameraPose
from texbake.mesh import TriMesh
from texbake.raster import rasterize, render_texture_mask


def naive_splat(image, uv, contributing, res):
    """Scalar double-loop bilinear splat with the quantized-weight definition."""
    color_accum = np.zeros((res, res, 3))
    weight_accum = np.zeros((res, res))
    height, width = contributing.shape
    q = WEIGHT_QUANTUM
    for i in range(height):
        for j in range(width):
            if not contributing[i, j]:
                continue
            x = uv[i, j, 0] * res - 0.5
            y = uv[i, j, 1] * res - 0.5
            x0 = math.floor(x)
            y0 = math.floor(y)
            fx = x - x0
            fy = y - y0
            w00 = math.floor((1 - fx) * (1 - fy) / q) * q
            w10 = math.floor(fx * (1 - fy) / q) * q
            w01 = math.floor((1 - fx) * fy / q) * q
            w11 = ((1.0 - w00) - w10) - w01
            for xx, yy, w in ((x0, y0, w00), (x0 + 1, y0, w10), (x0, y0 + 1, w01), (x0 + 1, y0 + 1, w11)):
                xi = min(max(xx, 0), res - 1)
                yi = min(max(yy, 0), res - 1)
                weight_accum[yi, xi] += w
                color_accum[yi, xi] += image[i, j] * w
    return color_accum, weight_accum


def brute_force_uv_render(mesh: TriMesh, pose: CameraPose):
    """Per-pixel point-in-triangle UV interpolation via 2x2 linear solves.

    Independent of the rasterizer: visibility is resolved by scanning every
    face per pixel and keeping the nearest hit.
    """
    right, up, forward = pose.basis()
    size = pose.image_size
    ext = pose.ortho_half_extent

    xv = mesh.positions @ right
    yv = mesh.positions @ up
    zv = mesh.positions @ forward + pose.radius
    px = (xv + ext) / (2.0 * ext) * size - 0.5
    py = (ext - yv) / (2.0 * ext) * size - 0.5

    uv_out = np.full((size, size, 2), np.nan)
    depth_out = np.full((size, size), np.inf)
    for i in range(size):
        for j in range(size):
            p = np.array([float(j), float(i)])
            for f in range(mesh.n_faces):
                a, b, c = mesh.faces[f]
                v0 = np.array([px[a], py[a]])
                v1 = np.array([px[b], py[b]])
                v2 = np.array([px[c], py[c]])
                m = np.column_stack([v1 - v0, v2 - v0])
                if abs(np.linalg.det(m)) < 1e-12:
                    continue
                s, t = np.linalg.solve(m, p - v0)
                if s < -1e-9 or t < -1e-9 or s + t > 1 + 1e-9:
                    continue
                z = zv[a] * (1 - s - t) + zv[b] * s + zv[c] * t
                if z < depth_out[i, j]:
                    depth_out[i, j] = z
                    uvc = mesh.uv_corners[f]
                    uv_out[i, j] = uvc[0] * (1 - s - t) + uvc[1] * s + uvc[2] * t
    return uv_out, depth_out


def greedy_order_oracle(
    mesh: TriMesh,
    poses,
    steps: int,
    texture_res: int,
    tau_keep: float = 0.3,
    depth_eps: float = 1e-3,
    min_gain_frac: float = 0.005,
    w_min: float = 1e-3,
):
    """Exhaustive greedy reimplementation: every unused view is re-scored from
    scratch each step (no caching), and the chosen view marks the texels that
    its unrejected pixels would splat, via the scalar-loop splat oracle."""
    from texbake.raster import (
        frontal_filter_mask,
        internal_face_mask,
        normals_from_depth,
        render_depth,
    )

    used = [False] * len(poses)
    weights = np.zeros((texture_res, texture_res))
    order = []
    for _ in range(steps):
        tmask = weights > w_min
        best, best_score = None, -1
        for i, pose in enumerate(poses):
            if used[i]:
                continue
            frag = rasterize(mesh, pose, cull_backfaces=True)
            textured_px = render_texture_mask(frag, tmask)
            score = int((frag.foreground & ~textured_px).sum())
            if score > best_score:
                best, best_score = i, score
        if best is None:
            break
        pose = poses[best]
        frag_c = rasterize(mesh, pose, cull_backfaces=True)
        if best_score < min_gain_frac * frag_c.width * frag_c.height:
            break
        used[best] = True
        order.append(best)
        frag_n = rasterize(mesh, pose, cull_backfaces=False)
        depth_c, depth_n = render_depth(frag_c), render_depth(frag_n)
        reject = frontal_filter_mask(normals_from_depth(depth_c, pose), tau_keep)
        reject |= internal_face_mask(depth_c, depth_n, depth_eps)
        contributing = frag_n.foreground & ~reject
        image = np.zeros((frag_n.height, frag_n.width, 3))
        _, dw = naive_splat(image, frag_n.uv, contributing, texture_res)
        weights += dw
    return order
