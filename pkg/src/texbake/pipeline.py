"""Progressive texture baking: front/back grid, greedy view loop, UV fill.

Flow per run: normalize the mesh; generate the front and back views together
as one horizontally-concatenated grid (global consistency); then repeatedly
pick the candidate view with the most untextured pixels, generate it with
inpainting conditioned on depth and the current texture render, filter out
grazing and interior pixels, and splat the rest into the texture; finally
dilate texture into unreached chart texels and commit.

Splats go through the *unculled* fragment buffer paired with the
culled/unculled depth-difference reject mask. Where the two rasterizations
agree the buffers are identical, and where they disagree the pixels show
interior faces of open meshes, which is precisely what the mask rejects; with
the mask disabled the interior-face bake-through artifact is reproducible,
which is what the ablation tests exercise.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .backproject import (
    UvTexture,
    chart_mask,
    commit,
    splat,
    uv_coverage,
    uv_fill,
)
from .camera import CameraPose, fibonacci_lattice, front_back_pair, view_label
from .errors import EmptyForeground, GeneratorError, TexbakeError
from .generator import Generator, GeneratorRequest, make_grid
from .images import erode_mask, resize_bilinear, resize_nearest_mask
from .mesh import TriMesh, normalize
from .raster import (
    DepthMap,
    FragmentBuffer,
    NormalMap,
    frontal_filter_mask,
    internal_face_mask,
    normals_from_depth,
    rasterize,
    render_depth,
    render_rgb,
    render_rgb_image,
    render_texture_mask,
)
from .viewsel import DONE, CandidateSet, ViewScorer, select_next

STAGE1_PROMPT_SUFFIX = ", front and back view"
CROP_MARGIN = 0.05


@dataclass(frozen=True)
class StageWeights:
    w_depth: float = 1.0
    w_inpaint: float = 1.0
    strength: float = 1.0


@dataclass
class PipelineConfig:
    texture_size: int = 1024
    render_size: int = 1024
    gen_size: int = 512
    n_views: int = 6
    n_candidates: int = 32
    radius: float = 2.0
    ortho_half_extent: float = 1.1
    tau_keep: float = 0.3
    depth_diff_eps: float = 1e-3
    coverage_stop: float = 0.98
    seed: int = 0
    min_gain_frac: float = 0.005
    w_min: float = 1e-3
    fill_color: float = 0.5
    uv_fill_max_rounds: int | None = None  # None: texture_size rounds
    score_size: int | None = None  # None: score at full render resolution
    use_frontal_filter: bool = True
    use_internal_filter: bool = True
    stage1: StageWeights = field(default_factory=lambda: StageWeights(w_inpaint=0.0))
    later: StageWeights = field(default_factory=StageWeights)

    def validate(self) -> None:
        if self.gen_size > self.render_size:
            raise ValueError("gen_size must not exceed render_size")
        if self.n_views < 2:
            raise ValueError("n_views must be >= 2 (front and back are mandatory)")


@dataclass
class StageRecord:
    index: int
    label: str
    azimuth: float
    elevation: float
    prompt: str
    pre_coverage: float
    post_coverage: float
    rejected_frontal: int
    rejected_internal: int
    elapsed: dict[str, float]

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class StageProbe:
    """Everything one stage saw; handed to the optional instrumentation hook."""

    index: int
    pose: CameraPose
    label: str
    frag_cull: FragmentBuffer
    frag_nocull: FragmentBuffer
    depth_culled: DepthMap
    depth_nocull: DepthMap
    normals: NormalMap | None
    inpaint_mask: np.ndarray
    reject_frontal: np.ndarray
    reject_internal: np.ndarray
    reject: np.ndarray
    init_rgb: np.ndarray
    gen_rgb: np.ndarray
    crop: "CropRecord | None"


StageProbeHook = Callable[[StageProbe], None]


class PipelineAborted(TexbakeError):
    """A generator failure stopped the run; partial results ride along."""

    def __init__(self, cause: Exception, partial_texture: np.ndarray, records: list[StageRecord]):
        super().__init__(f"pipeline aborted: {cause}")
        self.cause = cause
        self.partial_texture = partial_texture
        self.records = records


@dataclass(frozen=True)
class CropRecord:
    """Square object crop inside a frame, invertible after generation."""

    x0: int
    y0: int
    side: int
    frame_w: int
    frame_h: int
    gen_size: int

    def apply(self, image: np.ndarray, nearest: bool = False) -> np.ndarray:
        crop = image[self.y0 : self.y0 + self.side, self.x0 : self.x0 + self.side]
        if nearest:
            return resize_nearest_mask(crop, self.gen_size, self.gen_size)
        return resize_bilinear(crop, self.gen_size, self.gen_size)

    def invert(self, image: np.ndarray, nearest: bool = False) -> np.ndarray:
        if nearest:
            restored = resize_nearest_mask(image, self.side, self.side)
            out = np.zeros((self.frame_h, self.frame_w), dtype=bool)
        else:
            restored = resize_bilinear(image, self.side, self.side)
            shape = (self.frame_h, self.frame_w) + image.shape[2:]
            out = np.zeros(shape, dtype=np.float64)
        out[self.y0 : self.y0 + self.side, self.x0 : self.x0 + self.side] = restored
        return out


def compute_crop(foreground: np.ndarray, gen_size: int, margin: float = CROP_MARGIN) -> CropRecord:
    """Tight foreground bbox, padded by `margin` per side, squared, clamped."""
    ys, xs = np.nonzero(foreground)
    if len(ys) == 0:
        raise EmptyForeground("view has no foreground pixels to crop")
    h, w = foreground.shape
    x0, x1 = int(xs.min()), int(xs.max()) + 1
    y0, y1 = int(ys.min()), int(ys.max()) + 1
    mx = int(round((x1 - x0) * margin))
    my = int(round((y1 - y0) * margin))
    x0, x1 = x0 - mx, x1 + mx
    y0, y1 = y0 - my, y1 + my
    side = min(max(x1 - x0, y1 - y0), min(w, h))
    cx, cy = (x0 + x1) // 2, (y0 + y1) // 2
    x0 = min(max(cx - side // 2, 0), w - side)
    y0 = min(max(cy - side // 2, 0), h - side)
    return CropRecord(x0=x0, y0=y0, side=side, frame_w=w, frame_h=h, gen_size=gen_size)


def crop_and_resize(
    foreground: np.ndarray,
    depth_img: np.ndarray,
    inpaint_mask: np.ndarray,
    init_rgb: np.ndarray,
    gen_size: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, CropRecord]:
    """Crop a view's conditioning images to the object and resize for the
    generator; masks use nearest interpolation, everything else bilinear."""
    rec = compute_crop(foreground, gen_size)
    return (
        rec.apply(depth_img),
        rec.apply(inpaint_mask, nearest=True),
        rec.apply(init_rgb),
        rec,
    )


def _reject_masks(
    cfg: PipelineConfig,
    pose: CameraPose,
    depth_c: DepthMap,
    depth_n: DepthMap,
) -> tuple[np.ndarray, np.ndarray, NormalMap | None]:
    shape = depth_c.values.shape
    normals = None
    if cfg.use_frontal_filter:
        normals = normals_from_depth(depth_c, pose)
        frontal = frontal_filter_mask(normals, cfg.tau_keep)
    else:
        frontal = np.zeros(shape, dtype=bool)
    if cfg.use_internal_filter:
        internal = internal_face_mask(depth_c, depth_n, cfg.depth_diff_eps)
    else:
        internal = np.zeros(shape, dtype=bool)
    return frontal, internal, normals


class _Baker:
    """Shared driver behind texture_mesh and enhance_texture."""

    def __init__(
        self,
        mesh: TriMesh,
        prompt: str,
        cfg: PipelineConfig,
        gen: Generator,
        lq_texture: np.ndarray | None = None,
        strength_override: float | None = None,
        stage_probe: StageProbeHook | None = None,
    ):
        cfg.validate()
        self.mesh, _ = normalize(mesh)
        self.prompt = prompt
        self.cfg = cfg
        self.gen = gen
        self.lq_texture = lq_texture
        self.strength_override = strength_override
        self.stage_probe = stage_probe
        self.tex = UvTexture(cfg.texture_size, w_min=cfg.w_min)
        self.tmask = self.tex.textured_mask()
        self.chart = chart_mask(self.mesh, cfg.texture_size)
        self.records: list[StageRecord] = []

    def _strength(self, base: StageWeights) -> float:
        return self.strength_override if self.strength_override is not None else base.strength

    def _view_inputs(self, frag_c: FragmentBuffer):
        """(normalized depth image, inpaint mask, init render) for one view."""
        depth_c = render_depth(frag_c)
        if self.lq_texture is not None:
            init = render_rgb_image(frag_c, self.lq_texture)
            inpaint = frag_c.foreground.copy()
        else:
            init = render_rgb(frag_c, self.tex)
            keep = render_texture_mask(frag_c, self.tmask)
            inpaint = ~erode_mask(keep)
        return depth_c, inpaint, init

    def _splat_view(
        self,
        index: int,
        pose: CameraPose,
        label: str,
        used_prompt: str,
        frag_c: FragmentBuffer,
        depth_c: DepthMap,
        inpaint: np.ndarray,
        init: np.ndarray,
        rgb_full: np.ndarray,
        crop: CropRecord | None,
        elapsed: dict[str, float],
    ) -> None:
        t0 = time.perf_counter()
        frag_n = rasterize(self.mesh, pose, cull_backfaces=False)
        depth_n = render_depth(frag_n)
        frontal, internal, normals = _reject_masks(self.cfg, pose, depth_c, depth_n)
        reject = frontal | internal
        elapsed["raster"] = elapsed.get("raster", 0.0) + time.perf_counter() - t0

        pre = uv_coverage(self.tmask, self.chart)
        t0 = time.perf_counter()
        _, self.tmask = splat(rgb_full, frag_n, reject, self.tex)
        elapsed["splat"] = time.perf_counter() - t0
        post = uv_coverage(self.tmask, self.chart)

        self.records.append(
            StageRecord(
                index=index,
                label=label,
                azimuth=pose.azimuth,
                elevation=pose.elevation,
                prompt=used_prompt,
                pre_coverage=pre,
                post_coverage=post,
                rejected_frontal=int(frontal.sum()),
                rejected_internal=int(internal.sum()),
                elapsed=elapsed,
            )
        )
        if self.stage_probe is not None:
            self.stage_probe(
                StageProbe(
                    index=index,
                    pose=pose,
                    label=label,
                    frag_cull=frag_c,
                    frag_nocull=frag_n,
                    depth_culled=depth_c,
                    depth_nocull=depth_n,
                    normals=normals,
                    inpaint_mask=inpaint,
                    reject_frontal=frontal,
                    reject_internal=internal,
                    reject=reject,
                    init_rgb=init,
                    gen_rgb=rgb_full,
                    crop=crop,
                )
            )

    def _stage1(self) -> None:
        cfg = self.cfg
        poses = front_back_pair(cfg.radius, cfg.ortho_half_extent, cfg.render_size)
        t0 = time.perf_counter()
        frags = [rasterize(self.mesh, p, cull_backfaces=True) for p in poses]
        raster_t = time.perf_counter() - t0

        depths, inpaints, inits = [], [], []
        for frag in frags:
            depth_c, inpaint, init = self._view_inputs(frag)
            depths.append(depth_c)
            inpaints.append(inpaint)
            inits.append(init)

        g = cfg.gen_size
        req, layout = make_grid(
            [resize_bilinear(d.normalized(), g, g) for d in depths],
            [resize_nearest_mask(m, g, g) for m in inpaints],
            [resize_bilinear(i, g, g) for i in inits],
            prompt=self.prompt + STAGE1_PROMPT_SUFFIX,
            seed=cfg.seed,
            w_depth=cfg.stage1.w_depth,
            w_inpaint=cfg.stage1.w_inpaint,
            strength=self._strength(cfg.stage1),
        )
        t0 = time.perf_counter()
        resp = self.gen.generate(req)
        gen_t = time.perf_counter() - t0

        r = cfg.render_size
        for i, (pose, frag, slot) in enumerate(zip(poses, frags, layout.split(resp.rgb))):
            self._splat_view(
                index=i,
                pose=pose,
                label=view_label(pose),
                used_prompt=req.prompt,
                frag_c=frag,
                depth_c=depths[i],
                inpaint=inpaints[i],
                init=inits[i],
                rgb_full=resize_bilinear(slot, r, r),
                crop=None,
                elapsed={"raster": raster_t / 2, "generate": gen_t / 2},
            )

    def _loop(self) -> None:
        cfg = self.cfg
        lattice = fibonacci_lattice(
            cfg.n_candidates, cfg.radius, cfg.ortho_half_extent, cfg.render_size
        )
        cands = CandidateSet(poses=lattice)
        scorer = ViewScorer(self.mesh, score_size=cfg.score_size)
        while len(self.records) < cfg.n_views:
            if uv_coverage(self.tmask, self.chart) >= cfg.coverage_stop:
                break
            t0 = time.perf_counter()
            idx = select_next(self.mesh, self.tmask, cands, cfg.min_gain_frac, scorer)
            select_t = time.perf_counter() - t0
            if idx is DONE:
                break
            cands.used[idx] = True
            pose = lattice[idx]

            t0 = time.perf_counter()
            scored = scorer.fragments(cands, idx)
            if scored.width == cfg.render_size:
                frag_c = scored
            else:
                frag_c = rasterize(self.mesh, pose, cull_backfaces=True)
            depth_c, inpaint, init = self._view_inputs(frag_c)
            depth_img, inpaint_g, init_g, crop = crop_and_resize(
                frag_c.foreground, depth_c.normalized(), inpaint, init, cfg.gen_size
            )
            raster_t = time.perf_counter() - t0

            label = view_label(pose)
            used_prompt = f"{self.prompt}, {label} view"
            req = GeneratorRequest(
                prompt=used_prompt,
                depth=depth_img,
                inpaint_mask=inpaint_g,
                init_rgb=init_g,
                w_depth=cfg.later.w_depth,
                w_inpaint=cfg.later.w_inpaint,
                strength=self._strength(cfg.later),
                seed=cfg.seed + len(self.records),
                size=cfg.gen_size,
            )
            t0 = time.perf_counter()
            resp = self.gen.generate(req)
            gen_t = time.perf_counter() - t0
            rgb_full = crop.invert(resp.rgb)

            self._splat_view(
                index=len(self.records),
                pose=pose,
                label=label,
                used_prompt=used_prompt,
                frag_c=frag_c,
                depth_c=depth_c,
                inpaint=inpaint,
                init=init,
                rgb_full=rgb_full,
                crop=crop,
                elapsed={"raster": raster_t, "generate": gen_t, "select": select_t},
            )

    def run(self) -> tuple[np.ndarray, list[StageRecord]]:
        cfg = self.cfg
        try:
            self._stage1()
            self._loop()
        except GeneratorError as exc:
            raise PipelineAborted(
                exc, commit(self.tex, cfg.fill_color), self.records
            ) from exc
        rounds = cfg.uv_fill_max_rounds if cfg.uv_fill_max_rounds is not None else cfg.texture_size
        uv_fill(self.tex, self.tmask, self.chart, rounds, cfg.fill_color)
        return commit(self.tex, cfg.fill_color), self.records


def texture_mesh(
    mesh: TriMesh,
    prompt: str,
    cfg: PipelineConfig,
    gen: Generator,
    stage_probe: StageProbeHook | None = None,
) -> tuple[np.ndarray, list[StageRecord]]:
    """Bake a texture for an untextured mesh from a text prompt.

    Returns the committed texture image (texture_size^2 x 3, [0, 1]) and one
    StageRecord per generated view.
    """
    baker = _Baker(mesh, prompt, cfg, gen, stage_probe=stage_probe)
    return baker.run()


def enhance_texture(
    mesh: TriMesh,
    lq_texture: np.ndarray,
    prompt: str,
    strength: float,
    cfg: PipelineConfig,
    gen: Generator,
    stage_probe: StageProbeHook | None = None,
) -> tuple[np.ndarray, list[StageRecord]]:
    """Refine an existing texture by regenerating every view at the given
    noising strength; low strength preserves more of the input.

    The textured mask starts empty, every view's init render samples the input
    texture, and the inpaint mask covers the whole foreground.
    """
    if not 0.0 <= strength <= 1.0:
        raise ValueError("strength must lie in [0, 1]")
    if lq_texture.shape != (cfg.texture_size, cfg.texture_size, 3):
        raise ValueError(
            f"input texture must be {cfg.texture_size}^2 x 3, got {lq_texture.shape}"
        )
    baker = _Baker(
        mesh,
        prompt,
        cfg,
        gen,
        lq_texture=np.clip(lq_texture, 0.0, 1.0),
        strength_override=strength,
        stage_probe=stage_probe,
    )
    return baker.run()
