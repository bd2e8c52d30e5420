"""Backprojection: scatter view pixels into the UV texture by bilinear splatting.

Each contributing pixel deposits exactly one unit of weight: the first three
bilinear corner weights are snapped down to the 2^-30 grid and the fourth is
the exact complement. All weights are then dyadic rationals, so weight
accumulation is exact in float64 regardless of summation order (up to ~2^53
total pixel contributions), which makes conservation checks and cross-run
determinism exact rather than approximate. Out-of-range corner texels are
clamped, which reassigns their weight to the nearest in-range texel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import ResolutionMismatch
from .mesh import TriMesh
from .raster import FragmentBuffer

WEIGHT_QUANTUM = 2.0**-30
DEFAULT_W_MIN = 1e-3
DEFAULT_FILL = 0.5


@dataclass
class UvTexture:
    """Color/weight accumulation buffers for one texture being baked.

    committed colors are color_accum / weight_accum wherever the weight
    exceeds w_min; everything else reads as the fill value. weight_accum only
    ever grows across pipeline iterations.
    """

    resolution: int
    w_min: float = DEFAULT_W_MIN
    color_accum: np.ndarray = field(init=False)
    weight_accum: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        r = self.resolution
        self.color_accum = np.zeros((r, r, 3))
        self.weight_accum = np.zeros((r, r))

    def textured_mask(self) -> np.ndarray:
        """The binary textured mask: texels that have received real weight."""
        return self.weight_accum > self.w_min

    def committed(self, fill: float | tuple[float, float, float] = DEFAULT_FILL) -> np.ndarray:
        return commit(self, fill)


def commit(tex: UvTexture, fill: float | tuple[float, float, float] = DEFAULT_FILL) -> np.ndarray:
    """Normalize accumulators into a displayable [0, 1] texture image."""
    mask = tex.textured_mask()
    safe_w = np.where(mask, tex.weight_accum, 1.0)
    out = np.where(
        mask[:, :, None],
        tex.color_accum / safe_w[:, :, None],
        np.broadcast_to(np.asarray(fill, dtype=np.float64), (1, 1, 3)),
    )
    return np.clip(out, 0.0, 1.0)


@njit(cache=True)
def _splat_kernel(uv, colors, color_accum, weight_accum):
    res = weight_accum.shape[0]
    q = WEIGHT_QUANTUM
    for i in range(uv.shape[0]):
        x = uv[i, 0] * res - 0.5
        y = uv[i, 1] * res - 0.5
        x0 = np.floor(x)
        y0 = np.floor(y)
        fx = x - x0
        fy = y - y0
        # Snap three corners to the quantum grid; the fourth takes the exact
        # complement so each pixel deposits weight exactly 1.
        w00 = np.floor((1.0 - fx) * (1.0 - fy) / q) * q
        w10 = np.floor(fx * (1.0 - fy) / q) * q
        w01 = np.floor((1.0 - fx) * fy / q) * q
        w11 = ((1.0 - w00) - w10) - w01
        ix0 = min(max(int(x0), 0), res - 1)
        ix1 = min(max(int(x0) + 1, 0), res - 1)
        iy0 = min(max(int(y0), 0), res - 1)
        iy1 = min(max(int(y0) + 1, 0), res - 1)
        weight_accum[iy0, ix0] += w00
        weight_accum[iy0, ix1] += w10
        weight_accum[iy1, ix0] += w01
        weight_accum[iy1, ix1] += w11
        for c in range(3):
            col = colors[i, c]
            color_accum[iy0, ix0, c] += col * w00
            color_accum[iy0, ix1, c] += col * w10
            color_accum[iy1, ix0, c] += col * w01
            color_accum[iy1, ix1, c] += col * w11


@njit(cache=True)
def _splat_weights_kernel(uv, weight_accum):
    res = weight_accum.shape[0]
    q = WEIGHT_QUANTUM
    for i in range(uv.shape[0]):
        x = uv[i, 0] * res - 0.5
        y = uv[i, 1] * res - 0.5
        x0 = np.floor(x)
        y0 = np.floor(y)
        fx = x - x0
        fy = y - y0
        w00 = np.floor((1.0 - fx) * (1.0 - fy) / q) * q
        w10 = np.floor(fx * (1.0 - fy) / q) * q
        w01 = np.floor((1.0 - fx) * fy / q) * q
        w11 = ((1.0 - w00) - w10) - w01
        ix0 = min(max(int(x0), 0), res - 1)
        ix1 = min(max(int(x0) + 1, 0), res - 1)
        iy0 = min(max(int(y0), 0), res - 1)
        iy1 = min(max(int(y0) + 1, 0), res - 1)
        weight_accum[iy0, ix0] += w00
        weight_accum[iy0, ix1] += w10
        weight_accum[iy1, ix0] += w01
        weight_accum[iy1, ix1] += w11


def _contributing(frag: FragmentBuffer, reject: np.ndarray | None) -> np.ndarray:
    """Pixels that may deposit: foreground, unrejected, usable UV triangle."""
    sel = frag.foreground.copy()
    if reject is not None:
        if reject.shape != sel.shape:
            raise ResolutionMismatch("reject mask resolution differs from fragment buffer")
        sel &= ~reject
    ok = frag.face_uv_ok
    if not ok.all():
        fids = frag.face_id[sel]
        keep = ok[fids]
        sel[sel] = keep
    return sel


def splat(
    image: np.ndarray,
    frag: FragmentBuffer,
    reject: np.ndarray | None,
    tex: UvTexture,
) -> tuple[UvTexture, np.ndarray]:
    """Scatter one view into the texture; returns the texture and its mask.

    The accumulation is additive and order-independent; each contributing
    pixel deposits weight exactly 1 split over <= 4 texels.
    """
    if image.shape[:2] != (frag.height, frag.width):
        raise ResolutionMismatch("image resolution differs from fragment buffer")
    sel = _contributing(frag, reject)
    if sel.any():
        uv = np.ascontiguousarray(frag.uv[sel])
        colors = np.ascontiguousarray(image[sel], dtype=np.float64)
        _splat_kernel(uv, colors, tex.color_accum, tex.weight_accum)
    return tex, tex.textured_mask()


def splat_weights(
    frag: FragmentBuffer, reject: np.ndarray | None, res: int
) -> np.ndarray:
    """Weight deposits of one view alone; used for selection simulation and
    provenance checks."""
    sel = _contributing(frag, reject)
    out = np.zeros((res, res))
    if sel.any():
        _splat_weights_kernel(np.ascontiguousarray(frag.uv[sel]), out)
    return out


@njit(cache=True)
def _chart_kernel(uvc, skip, res, out):
    for f in range(uvc.shape[0]):
        if skip[f]:
            continue
        x0 = uvc[f, 0, 0] * res - 0.5
        y0 = uvc[f, 0, 1] * res - 0.5
        x1 = uvc[f, 1, 0] * res - 0.5
        y1 = uvc[f, 1, 1] * res - 0.5
        x2 = uvc[f, 2, 0] * res - 0.5
        y2 = uvc[f, 2, 1] * res - 0.5
        area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        if abs(area) < 1e-12:
            continue
        jlo = max(0, int(np.ceil(min(x0, min(x1, x2)) - 1e-9)))
        jhi = min(res - 1, int(np.floor(max(x0, max(x1, x2)) + 1e-9)))
        ilo = max(0, int(np.ceil(min(y0, min(y1, y2)) - 1e-9)))
        ihi = min(res - 1, int(np.floor(max(y0, max(y1, y2)) + 1e-9)))
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
                if 1.0 - w0 - w1 < 0.0:
                    continue
                out[i, j] = True


def chart_mask(mesh: TriMesh, res: int) -> np.ndarray:
    """Texels whose center lies inside some (non-collapsed) UV triangle."""
    out = np.zeros((res, res), dtype=bool)
    _chart_kernel(mesh.uv_corners, mesh.uv_degenerate, res, out)
    return out


def uv_coverage(tmask: np.ndarray, chart: np.ndarray) -> float:
    """Fraction of chart texels that are textured."""
    if tmask.shape != chart.shape:
        raise ResolutionMismatch("texture mask and chart mask resolutions differ")
    denom = int(chart.sum())
    if denom == 0:
        return 1.0
    return float((tmask & chart).sum()) / denom


@njit(cache=True)
def _fill_kernel(com, textured, chart, max_rounds):
    res = com.shape[0]
    queued = np.zeros((res, res), dtype=np.bool_)
    frontier = np.empty((res * res, 2), dtype=np.int64)
    n_frontier = 0
    for i in range(res):
        for j in range(res):
            if textured[i, j] or not chart[i, j]:
                continue
            found = False
            for dy in range(-1, 2):
                for dx in range(-1, 2):
                    ii, jj = i + dy, j + dx
                    if 0 <= ii < res and 0 <= jj < res and textured[ii, jj]:
                        found = True
                        break
                if found:
                    break
            if found:
                frontier[n_frontier, 0] = i
                frontier[n_frontier, 1] = j
                n_frontier += 1
                queued[i, j] = True

    colors = np.empty((res * res, 3))
    nxt = np.empty((res * res, 2), dtype=np.int64)
    for _ in range(max_rounds):
        if n_frontier == 0:
            break
        # Phase 1: averages read only the previous round's textured state.
        for k in range(n_frontier):
            i, j = frontier[k, 0], frontier[k, 1]
            r = g = b = 0.0
            cnt = 0
            for dy in range(-1, 2):
                for dx in range(-1, 2):
                    if dy == 0 and dx == 0:
                        continue
                    ii, jj = i + dy, j + dx
                    if 0 <= ii < res and 0 <= jj < res and textured[ii, jj]:
                        r += com[ii, jj, 0]
                        g += com[ii, jj, 1]
                        b += com[ii, jj, 2]
                        cnt += 1
            colors[k, 0] = r / cnt
            colors[k, 1] = g / cnt
            colors[k, 2] = b / cnt
        # Phase 2: apply, then queue the untextured chart neighbors.
        n_next = 0
        for k in range(n_frontier):
            i, j = frontier[k, 0], frontier[k, 1]
            com[i, j, 0] = colors[k, 0]
            com[i, j, 1] = colors[k, 1]
            com[i, j, 2] = colors[k, 2]
            textured[i, j] = True
        for k in range(n_frontier):
            i, j = frontier[k, 0], frontier[k, 1]
            for dy in range(-1, 2):
                for dx in range(-1, 2):
                    ii, jj = i + dy, j + dx
                    if (
                        0 <= ii < res
                        and 0 <= jj < res
                        and chart[ii, jj]
                        and not textured[ii, jj]
                        and not queued[ii, jj]
                    ):
                        nxt[n_next, 0] = ii
                        nxt[n_next, 1] = jj
                        n_next += 1
                        queued[ii, jj] = True
        frontier, nxt = nxt, frontier
        n_frontier = n_next


def uv_fill(
    tex: UvTexture,
    tmask: np.ndarray,
    chart: np.ndarray,
    max_rounds: int,
    fill: float | tuple[float, float, float] = DEFAULT_FILL,
) -> UvTexture:
    """Dilate texture into untextured chart texels by neighbor averaging.

    Each round, every untextured in-chart texel with at least one textured
    8-neighbor takes the average of those neighbors and becomes textured; the
    rounds are synchronous (all averages read the previous round's state).
    Stops at a fixpoint or after max_rounds. Texels outside the chart are left
    for commit()'s fill value. Already-textured texels are never modified.
    """
    committed = tex.committed(fill)
    textured = tmask.copy()
    _fill_kernel(committed, textured, np.ascontiguousarray(chart), max_rounds)
    grew = textured & ~tmask
    tex.color_accum[grew] = committed[grew]
    tex.weight_accum[grew] = 1.0
    return tex
