"""Software rasterizer and the screen-space filter masks.

The rasterizer is a serial z-buffered triangle fill compiled with numba. It is
deterministic by construction: faces are processed in index order and depth
ties resolve to the lower face id, so repeated runs produce identical buffers.

Depth convention: view-space depth is distance along the camera forward axis
(background +inf). The normalized depth image maps near -> 1 and far -> 0, so
closer geometry is brighter and the background is 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from numba import njit

from .camera import CameraPose
from .errors import ResolutionMismatch
from .mesh import TriMesh

if TYPE_CHECKING:
    from .backproject import UvTexture

NO_FACE = -1


@dataclass
class FragmentBuffer:
    """Per-pixel rasterization result for one camera view.

    face_id == NO_FACE marks background, where depth is +inf. Elsewhere the
    barycentrics sum to 1 and the interpolated uv lies in [0, 1]^2.
    face_uv_ok flags faces whose UV triangle has usable area; pixels of
    collapsed-UV faces render normally but are skipped by backprojection.
    """

    width: int
    height: int
    face_id: np.ndarray
    bary: np.ndarray
    depth: np.ndarray
    uv: np.ndarray
    near: float
    far: float
    face_uv_ok: np.ndarray

    @property
    def foreground(self) -> np.ndarray:
        return self.face_id != NO_FACE


@dataclass
class DepthMap:
    values: np.ndarray  # view-space depth, +inf background
    near: float
    far: float

    @property
    def foreground(self) -> np.ndarray:
        return np.isfinite(self.values)

    def normalized(self) -> np.ndarray:
        """Depth image in [0, 1]: near -> 1, far -> 0, background 0."""
        fg = self.foreground
        out = np.zeros_like(self.values)
        span = self.far - self.near
        out[fg] = np.clip((self.far - self.values[fg]) / span, 0.0, 1.0)
        return out


@dataclass
class NormalMap:
    """View-space normals; z is the facing ratio toward the camera."""

    values: np.ndarray  # (H, W, 3), zero where invalid
    valid: np.ndarray  # (H, W) bool, unit normals available here
    foreground: np.ndarray  # (H, W) bool, from the source depth


@njit(cache=True)
def _raster_kernel(px, py, pz, faces, keep, uvc, width, height, depth, fid, bary, uv):
    for f in range(faces.shape[0]):
        if not keep[f]:
            continue
        i0, i1, i2 = faces[f, 0], faces[f, 1], faces[f, 2]
        x0, y0, z0 = px[i0], py[i0], pz[i0]
        x1, y1, z1 = px[i1], py[i1], pz[i1]
        x2, y2, z2 = px[i2], py[i2], pz[i2]
        area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        if abs(area) < 1e-12:
            continue
        xmin = min(x0, min(x1, x2))
        xmax = max(x0, max(x1, x2))
        ymin = min(y0, min(y1, y2))
        ymax = max(y0, max(y1, y2))
        jlo = max(0, int(np.ceil(xmin - 1e-9)))
        jhi = min(width - 1, int(np.floor(xmax + 1e-9)))
        ilo = max(0, int(np.ceil(ymin - 1e-9)))
        ihi = min(height - 1, int(np.floor(ymax + 1e-9)))
        inv_area = 1.0 / area
        for i in range(ilo, ihi + 1):
            yc = float(i)
            for j in range(jlo, jhi + 1):
                xc = float(j)
                w0 = ((x1 - xc) * (y2 - yc) - (x2 - xc) * (y1 - yc)) * inv_area
                if w0 < 0.0:
                    continue
                w1 = ((x2 - xc) * (y0 - yc) - (x0 - xc) * (y2 - yc)) * inv_area
                if w1 < 0.0:
                    continue
                w2 = 1.0 - w0 - w1
                if w2 < 0.0:
                    continue
                z = w0 * z0 + w1 * z1 + w2 * z2
                if z < depth[i, j]:
                    depth[i, j] = z
                    fid[i, j] = f
                    bary[i, j, 0] = w0
                    bary[i, j, 1] = w1
                    bary[i, j, 2] = w2
                    u = w0 * uvc[f, 0, 0] + w1 * uvc[f, 1, 0] + w2 * uvc[f, 2, 0]
                    v = w0 * uvc[f, 0, 1] + w1 * uvc[f, 1, 1] + w2 * uvc[f, 2, 1]
                    uv[i, j, 0] = min(1.0, max(0.0, u))
                    uv[i, j, 1] = min(1.0, max(0.0, v))


def rasterize(mesh: TriMesh, pose: CameraPose, cull_backfaces: bool = True) -> FragmentBuffer:
    """Z-buffered orthographic rasterization with pixel-center sampling.

    With culling on, faces whose facing ratio toward the camera is <= 0
    generate no fragments. Depth ties resolve to the lower face id.
    """
    right, up, forward = pose.basis()
    size = pose.image_size
    ext = pose.ortho_half_extent

    xv = mesh.positions @ right
    yv = mesh.positions @ up
    zv = mesh.positions @ forward + pose.radius  # depth: origin maps to radius

    px = (xv + ext) / (2.0 * ext) * size - 0.5
    py = (ext - yv) / (2.0 * ext) * size - 0.5

    if cull_backfaces:
        facing = mesh.face_normals @ (-forward)
        keep = facing > 0.0
    else:
        keep = np.ones(mesh.n_faces, dtype=bool)

    depth = np.full((size, size), np.inf)
    fid = np.full((size, size), NO_FACE, dtype=np.int32)
    bary = np.zeros((size, size, 3))
    uv = np.zeros((size, size, 2))

    _raster_kernel(
        np.ascontiguousarray(px),
        np.ascontiguousarray(py),
        np.ascontiguousarray(zv),
        mesh.faces,
        keep,
        mesh.uv_corners,
        size,
        size,
        depth,
        fid,
        bary,
        uv,
    )
    return FragmentBuffer(
        width=size,
        height=size,
        face_id=fid,
        bary=bary,
        depth=depth,
        uv=uv,
        near=pose.near,
        far=pose.far,
        face_uv_ok=~mesh.uv_degenerate,
    )


def render_depth(frag: FragmentBuffer) -> DepthMap:
    return DepthMap(values=frag.depth.copy(), near=frag.near, far=frag.far)


def render_texture_mask(frag: FragmentBuffer, tmask: np.ndarray) -> np.ndarray:
    """True where a foreground pixel's nearest texel is already textured."""
    res = tmask.shape[0]
    out = np.zeros((frag.height, frag.width), dtype=bool)
    fg = frag.foreground
    if not fg.any():
        return out
    uv = frag.uv[fg]
    col = np.clip(np.floor(uv[:, 0] * res).astype(np.int64), 0, res - 1)
    row = np.clip(np.floor(uv[:, 1] * res).astype(np.int64), 0, res - 1)
    out[fg] = tmask[row, col]
    return out


@njit(cache=True)
def _sample_kernel(uv, source, out):
    res = source.shape[0]
    channels = source.shape[2]
    for i in range(uv.shape[0]):
        x = uv[i, 0] * res - 0.5
        y = uv[i, 1] * res - 0.5
        x0 = int(np.floor(x))
        y0 = int(np.floor(y))
        fx = x - x0
        fy = y - y0
        x0c = min(max(x0, 0), res - 1)
        x1c = min(max(x0 + 1, 0), res - 1)
        y0c = min(max(y0, 0), res - 1)
        y1c = min(max(y0 + 1, 0), res - 1)
        for c in range(channels):
            out[i, c] = (
                source[y0c, x0c, c] * (1 - fx) * (1 - fy)
                + source[y0c, x1c, c] * fx * (1 - fy)
                + source[y1c, x0c, c] * (1 - fx) * fy
                + source[y1c, x1c, c] * fx * fy
            )


def sample_bilinear(source: np.ndarray, uv: np.ndarray) -> np.ndarray:
    """Bilinear clamp-to-edge lookup of (N, 2) uv points in an (R, R, C) image."""
    squeeze = source.ndim == 2
    if squeeze:
        source = source[:, :, None]
    out = np.empty((uv.shape[0], source.shape[2]))
    _sample_kernel(
        np.ascontiguousarray(uv), np.ascontiguousarray(source, dtype=np.float64), out
    )
    return out[:, 0] if squeeze else out


def render_rgb(frag: FragmentBuffer, tex: "UvTexture") -> np.ndarray:
    """Render the committed texture into the view; untextured texels read as
    mid-gray so inpainting regions look neutral; background is black."""
    return render_rgb_image(frag, tex.committed(0.5))


def render_rgb_image(frag: FragmentBuffer, source: np.ndarray) -> np.ndarray:
    out = np.zeros((frag.height, frag.width, 3))
    fg = frag.foreground
    if fg.any():
        out[fg] = sample_bilinear(source, frag.uv[fg])
    return out


@njit(cache=True)
def _normals_kernel(d, sx, sy, values, valid):
    h, w = d.shape
    for i in range(h):
        for j in range(w):
            dc = d[i, j]
            if not np.isfinite(dc):
                continue
            dl = d[i, j - 1] if j > 0 else np.inf
            dr = d[i, j + 1] if j < w - 1 else np.inf
            da = d[i - 1, j] if i > 0 else np.inf
            db = d[i + 1, j] if i < h - 1 else np.inf
            vl, vr = np.isfinite(dl), np.isfinite(dr)
            va, vb = np.isfinite(da), np.isfinite(db)
            if not ((vl or vr) and (va or vb)):
                continue
            if vl and vr:
                gx = (dr - dl) / (2.0 * sx)
            elif vr:
                gx = (dr - dc) / sx
            else:
                gx = (dc - dl) / sx
            # Row index grows downward, screen y grows upward: up is row i-1.
            if va and vb:
                gy = (da - db) / (2.0 * sy)
            elif va:
                gy = (da - dc) / sy
            else:
                gy = (dc - db) / sy
            inv_norm = 1.0 / np.sqrt(1.0 + gx * gx + gy * gy)
            values[i, j, 0] = -gx * inv_norm
            values[i, j, 1] = -gy * inv_norm
            values[i, j, 2] = inv_norm
            valid[i, j] = True


def normals_from_depth(depth: DepthMap, pose: CameraPose) -> NormalMap:
    """Screen-space normals from central differences of view-space position.

    Pixels adjacent to background fall back to one-sided differences; pixels
    with no valid neighbor along either axis are marked invalid.
    """
    d = depth.values
    h, w = d.shape
    sx = 2.0 * pose.ortho_half_extent / w
    sy = 2.0 * pose.ortho_half_extent / h
    values = np.zeros((h, w, 3))
    valid = np.zeros((h, w), dtype=bool)
    _normals_kernel(np.ascontiguousarray(d), sx, sy, values, valid)
    return NormalMap(values=values, valid=valid, foreground=depth.foreground)


def frontal_filter_mask(normals: NormalMap, tau_keep: float) -> np.ndarray:
    """REJECT mask: foreground pixels whose facing ratio falls below tau_keep.

    Invalid-normal pixels carry n_z = 0, so any tau_keep > 0 rejects them;
    grazing regions near silhouettes are excluded from backprojection.
    """
    return normals.foreground & (normals.values[:, :, 2] < tau_keep)


def internal_face_mask(depth_culled: DepthMap, depth_nocull: DepthMap, eps: float) -> np.ndarray:
    """REJECT mask: pixels whose culled/unculled depths disagree.

    Disagreement means backface culling removed the nearest surface there, so
    the pixel shows interior geometry of an open mesh and must not be baked.
    """
    if depth_culled.values.shape != depth_nocull.values.shape:
        raise ResolutionMismatch("culled and unculled depth maps differ in resolution")
    fg_c = depth_culled.foreground
    fg_n = depth_nocull.foreground
    both = fg_c & fg_n
    span = depth_culled.far - depth_culled.near
    out = fg_c ^ fg_n
    diff = np.abs(depth_culled.values[both] - depth_nocull.values[both]) > eps * span
    out[both] = diff
    return out
