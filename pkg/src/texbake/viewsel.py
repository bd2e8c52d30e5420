"""Greedy next-view selection: always texture the largest untextured region.

A view's score is its count of untextured foreground pixels. Maximizing that
count (rather than minimizing textured pixels) keeps the selector from
favoring near-empty views of the object; both readings coincide when the
views' foreground sizes match.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backproject import DEFAULT_W_MIN, splat_weights
from .camera import CameraPose, fibonacci_lattice
from .errors import EmptyCandidates
from .mesh import TriMesh
from .raster import (
    FragmentBuffer,
    internal_face_mask,
    frontal_filter_mask,
    normals_from_depth,
    rasterize,
    render_depth,
)

DEFAULT_MIN_GAIN_FRAC = 0.005  # stop once no view can add 0.5% of its pixels
DONE = None


@dataclass
class CandidateSet:
    """Candidate poses plus used-flags; a pose is selected at most once."""

    poses: list[CameraPose]
    used: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.used = np.zeros(len(self.poses), dtype=bool)


class ViewScorer:
    """Scores candidates against the current textured mask.

    The geometry never changes during a run, only the textured mask does, so
    each pose is rasterized once and its foreground pixels' texel indices are
    cached; re-scoring is then a single gather. The fast path counts exactly
    what rendering the mask through render_texture_mask would.
    """

    def __init__(self, mesh: TriMesh, score_size: int | None = None):
        self.mesh = mesh
        self.score_size = score_size
        self._frags: dict[int, FragmentBuffer] = {}
        self._texel_idx: dict[tuple[int, int], np.ndarray] = {}

    def fragments(self, cands: CandidateSet, index: int) -> FragmentBuffer:
        frag = self._frags.get(index)
        if frag is None:
            pose = cands.poses[index]
            if self.score_size is not None and self.score_size != pose.image_size:
                pose = CameraPose(
                    pose.azimuth,
                    pose.elevation,
                    pose.radius,
                    pose.ortho_half_extent,
                    self.score_size,
                )
            frag = rasterize(self.mesh, pose, cull_backfaces=True)
            self._frags[index] = frag
        return frag

    def untextured_count(self, cands: CandidateSet, index: int, tmask: np.ndarray) -> int:
        res = tmask.shape[0]
        idx = self._texel_idx.get((index, res))
        if idx is None:
            frag = self.fragments(cands, index)
            uv = frag.uv[frag.foreground]
            col = np.clip(np.floor(uv[:, 0] * res).astype(np.int64), 0, res - 1)
            row = np.clip(np.floor(uv[:, 1] * res).astype(np.int64), 0, res - 1)
            idx = row * res + col
            self._texel_idx[(index, res)] = idx
        return int(len(idx) - tmask.ravel()[idx].sum())


def select_next(
    mesh: TriMesh,
    tmask: np.ndarray,
    cands: CandidateSet,
    min_gain_frac: float = DEFAULT_MIN_GAIN_FRAC,
    scorer: ViewScorer | None = None,
) -> int | None:
    """Index of the unused candidate seeing the most untextured pixels.

    Ties break toward the lower index. Returns DONE (None) when every unused
    candidate would gain fewer than min_gain_frac of its view pixels.
    """
    if not cands.poses:
        raise EmptyCandidates("no candidate poses to select from")
    if scorer is None:
        scorer = ViewScorer(mesh)
    best_idx = None
    best_score = -1
    for i in range(len(cands.poses)):
        if cands.used[i]:
            continue
        score = scorer.untextured_count(cands, i, tmask)
        if score > best_score:
            best_score = score
            best_idx = i
    if best_idx is None:
        return DONE
    frag = scorer.fragments(cands, best_idx)
    if best_score < min_gain_frac * frag.width * frag.height:
        return DONE
    return best_idx


def selection_order(
    mesh: TriMesh,
    candidates: int | list[CameraPose],
    max_views: int,
    texture_res: int = 256,
    tau_keep: float = 0.3,
    depth_eps: float = 1e-3,
    min_gain_frac: float = DEFAULT_MIN_GAIN_FRAC,
    initial_tmask: np.ndarray | None = None,
    radius: float = 2.0,
) -> list[int]:
    """Simulate the greedy loop without a generator and return the view order.

    After each pick, every texel that is visible and passes both reject
    filters in the chosen view is marked textured, then selection repeats.
    `candidates` is either an explicit pose list or a count, in which case a
    Fibonacci lattice of that size is used.
    """
    if isinstance(candidates, int):
        candidates = fibonacci_lattice(candidates, radius)
    cands = CandidateSet(poses=list(candidates))
    if initial_tmask is None:
        base = np.zeros((texture_res, texture_res), dtype=bool)
    else:
        base = initial_tmask.copy()
    tmask = base.copy()
    scorer = ViewScorer(mesh)
    weights = np.zeros(base.shape, dtype=np.float64)
    order: list[int] = []
    while len(order) < max_views:
        idx = select_next(mesh, tmask, cands, min_gain_frac, scorer)
        if idx is DONE:
            break
        cands.used[idx] = True
        order.append(idx)
        frag = scorer.fragments(cands, idx)
        pose = cands.poses[idx]
        frag_nocull = rasterize(mesh, pose, cull_backfaces=False)
        depth_c = render_depth(frag)
        depth_n = render_depth(frag_nocull)
        reject = frontal_filter_mask(normals_from_depth(depth_c, pose), tau_keep)
        reject |= internal_face_mask(depth_c, depth_n, depth_eps)
        weights += splat_weights(frag_nocull, reject, base.shape[0])
        tmask = base | (weights > DEFAULT_W_MIN)
    return order
