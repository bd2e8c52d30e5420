"""Command-line interface: texture, enhance, views, bench.

Exit codes: 0 success, 1 validation error, 2 generator/backend failure.
Validation errors print a machine-parsable "error: ..." line on stderr.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import meshgen
from .backproject import UvTexture, chart_mask, splat, uv_fill
from .camera import fibonacci_lattice, front_back_pair, view_label
from .errors import GeneratorError, TexbakeError
from .generator import FlatMock, parse_generator_uri
from .images import (
    load_texture_png,
    save_mask_png,
    save_png,
    save_png16,
    save_texture_png,
)
from .mesh import TriMesh, load_mesh, normalize, save_mesh
from .pipeline import (
    PipelineAborted,
    PipelineConfig,
    StageProbe,
    enhance_texture,
    texture_mesh,
)
from .raster import rasterize, render_depth
from .viewsel import CandidateSet, ViewScorer, select_next, selection_order

BUILTIN_MESHES = {
    "sphere": lambda: meshgen.uv_sphere(48, 96),
    "cube": meshgen.cube,
    "cylinder": meshgen.open_cylinder,
    "torus": meshgen.torus,
}

_DEFAULTS = PipelineConfig()


class CliError(Exception):
    """Invalid invocation; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D401 - argparse hook
        raise CliError(message)


def _load_mesh_arg(spec: str) -> TriMesh:
    if spec.startswith("builtin:"):
        name = spec[len("builtin:") :]
        if name not in BUILTIN_MESHES:
            raise CliError(f"unknown builtin mesh {name!r}; have {sorted(BUILTIN_MESHES)}")
        return BUILTIN_MESHES[name]()
    return load_mesh(spec)


def _require(args: argparse.Namespace, *names: str) -> None:
    for name in names:
        if getattr(args, name.replace("-", "_"), None) is None:
            raise CliError(f"missing required flag --{name}")


def _add_common_flags(p: argparse.ArgumentParser, with_generator: bool = True) -> None:
    p.add_argument("--mesh", help="OBJ path or builtin:<sphere|cube|cylinder|torus>")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, default=_DEFAULTS.seed, help="generation seed")
    p.add_argument("--views", type=int, default=_DEFAULTS.n_views, help="total views to generate")
    p.add_argument(
        "--candidates", type=int, default=_DEFAULTS.n_candidates, help="candidate view count"
    )
    p.add_argument(
        "--texture-size", type=int, default=_DEFAULTS.texture_size, help="texture resolution"
    )
    p.add_argument(
        "--render-size", type=int, default=_DEFAULTS.render_size, help="view render resolution"
    )
    p.add_argument(
        "--gen-size", type=int, default=_DEFAULTS.gen_size, help="generator image resolution"
    )
    p.add_argument(
        "--tau-keep",
        type=float,
        default=_DEFAULTS.tau_keep,
        help="minimum facing ratio kept by the frontal filter",
    )
    p.add_argument(
        "--depth-eps",
        type=float,
        default=_DEFAULTS.depth_diff_eps,
        help="relative depth tolerance of the interior-face filter",
    )
    p.add_argument(
        "--coverage-stop",
        type=float,
        default=_DEFAULTS.coverage_stop,
        help="stop once this fraction of chart texels is textured",
    )
    p.add_argument("--threads", type=int, default=4, help="max in-flight generator requests")
    p.add_argument(
        "--dump-intermediates",
        action="store_true",
        help="write per-stage depth/normal/mask/rgb debug images",
    )
    if with_generator:
        p.add_argument(
            "--generator",
            default="mock:flat",
            help="mock:flat | mock:depthshade | mock:checker | http:<url>",
        )
        p.add_argument(
            "--timeout", type=float, default=120.0, help="per-request generator timeout (s)"
        )


def _build_parser() -> _Parser:
    parser = _Parser(prog="texbake", description="Bake UV textures for meshes from text prompts")
    sub = parser.add_subparsers(dest="subcommand")

    p_tex = sub.add_parser("texture", help="bake a texture for an untextured mesh")
    _add_common_flags(p_tex)
    p_tex.add_argument("--prompt", help="text prompt describing the desired appearance")

    p_enh = sub.add_parser("enhance", help="refine an existing texture")
    _add_common_flags(p_enh)
    p_enh.add_argument("--prompt", help="text prompt describing the desired appearance")
    p_enh.add_argument("--strength", type=float, default=0.5, help="regeneration strength in [0,1]")
    p_enh.add_argument("--init-texture", help="PNG texture to refine")

    p_views = sub.add_parser("views", help="debug the automatic view selection")
    _add_common_flags(p_views, with_generator=False)

    p_bench = sub.add_parser("bench", help="time the non-generator pipeline phases")
    _add_common_flags(p_bench, with_generator=False)
    p_bench.add_argument("--reps", type=int, default=5, help="repetitions per phase")

    return parser


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    return PipelineConfig(
        texture_size=args.texture_size,
        render_size=args.render_size,
        gen_size=args.gen_size,
        n_views=args.views,
        n_candidates=args.candidates,
        tau_keep=args.tau_keep,
        depth_diff_eps=args.depth_eps,
        coverage_stop=args.coverage_stop,
        seed=args.seed,
    )


def _slug(label: str) -> str:
    return label.replace(" ", "-")


def _make_dump_probe(root: Path):
    def probe(p: StageProbe) -> None:
        stage_dir = root / f"stage{p.index}_{_slug(p.label)}"
        stage_dir.mkdir(parents=True, exist_ok=True)
        prefix = f"stage{p.index}_{_slug(p.label)}_"
        save_png16(stage_dir / (prefix + "depth.png"), p.depth_culled.normalized())
        if p.normals is not None:
            save_png(stage_dir / (prefix + "normal.png"), p.normals.values * 0.5 + 0.5)
        save_mask_png(stage_dir / (prefix + "mask.png"), p.inpaint_mask)
        save_mask_png(stage_dir / (prefix + "reject-frontal.png"), p.reject_frontal)
        save_mask_png(stage_dir / (prefix + "reject-internal.png"), p.reject_internal)
        save_png(stage_dir / (prefix + "init.png"), p.init_rgb)
        save_png(stage_dir / (prefix + "rgb.png"), p.gen_rgb)

    return probe


def _write_outputs(
    out_dir: Path, mesh: TriMesh, texture: np.ndarray, records, partial: bool = False
) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    name = "texture_partial.png" if partial else "texture.png"
    save_texture_png(out_dir / name, texture)
    if not partial:
        save_mesh(mesh, out_dir / "mesh.obj", texture_name=name)
    (out_dir / "stages.json").write_text(
        json.dumps([r.as_dict() for r in records], indent=2), encoding="utf-8"
    )


def _cmd_texture(args: argparse.Namespace) -> int:
    _require(args, "mesh", "prompt", "out")
    mesh = _load_mesh_arg(args.mesh)
    cfg = _config_from_args(args)
    gen = parse_generator_uri(args.generator, timeout=args.timeout, max_inflight=args.threads)
    out_dir = Path(args.out)
    probe = _make_dump_probe(out_dir / "intermediates") if args.dump_intermediates else None
    try:
        texture, records = texture_mesh(mesh, args.prompt, cfg, gen, stage_probe=probe)
    except PipelineAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        if args.dump_intermediates:
            _write_outputs(out_dir, mesh, exc.partial_texture, exc.records, partial=True)
        return 2
    _write_outputs(out_dir, mesh, texture, records)
    for r in records:
        print(
            f"view {r.index} [{r.label}] coverage {r.pre_coverage:.3f} -> {r.post_coverage:.3f}"
        )
    print(f"wrote {out_dir / 'texture.png'}")
    return 0


def _cmd_enhance(args: argparse.Namespace) -> int:
    _require(args, "mesh", "prompt", "out", "init-texture")
    mesh = _load_mesh_arg(args.mesh)
    cfg = _config_from_args(args)
    gen = parse_generator_uri(args.generator, timeout=args.timeout, max_inflight=args.threads)
    lq = load_texture_png(args.init_texture)
    if lq.ndim != 3:
        lq = np.repeat(lq[:, :, None], 3, axis=2)
    if lq.shape[0] != cfg.texture_size:
        raise CliError(
            f"--init-texture is {lq.shape[0]}^2 but --texture-size is {cfg.texture_size}"
        )
    out_dir = Path(args.out)
    probe = _make_dump_probe(out_dir / "intermediates") if args.dump_intermediates else None
    try:
        texture, records = enhance_texture(
            mesh, lq, args.prompt, args.strength, cfg, gen, stage_probe=probe
        )
    except PipelineAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        if args.dump_intermediates:
            _write_outputs(out_dir, mesh, exc.partial_texture, exc.records, partial=True)
        return 2
    _write_outputs(out_dir, mesh, texture, records)
    print(f"wrote {out_dir / 'texture.png'}")
    return 0


def _cmd_views(args: argparse.Namespace) -> int:
    _require(args, "mesh", "out")
    mesh = _load_mesh_arg(args.mesh)
    cfg = _config_from_args(args)
    norm_mesh, _ = normalize(mesh)
    lattice = fibonacci_lattice(
        cfg.n_candidates, cfg.radius, cfg.ortho_half_extent, cfg.render_size
    )
    order = selection_order(
        norm_mesh,
        lattice,
        max_views=cfg.n_views,
        texture_res=min(cfg.texture_size, 256),
        tau_keep=cfg.tau_keep,
        depth_eps=cfg.depth_diff_eps,
        min_gain_frac=cfg.min_gain_frac,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "candidates": [
            {"index": i, "azimuth": p.azimuth, "elevation": p.elevation, "label": view_label(p)}
            for i, p in enumerate(lattice)
        ],
        "order": order,
    }
    (out_dir / "views.json").write_text(json.dumps(payload, indent=2), encoding="utf-8")
    if args.dump_intermediates:
        for rank, idx in enumerate(order):
            frag = rasterize(norm_mesh, lattice[idx])
            save_png16(
                out_dir / f"view{rank}_candidate{idx}_depth.png",
                render_depth(frag).normalized(),
            )
    print(f"selection order: {order}")
    print(f"wrote {out_dir / 'views.json'}")
    return 0


def run_bench(mesh: TriMesh, cfg: PipelineConfig, reps: int) -> dict:
    """Median wall times of the non-generator phases over `reps` repetitions.

    Generator time is excluded on purpose (the mock is trivial), so the report
    isolates rasterization, selection, splatting, and UV fill.
    """
    norm_mesh, _ = normalize(mesh)
    pose = front_back_pair(cfg.radius, cfg.ortho_half_extent, cfg.render_size)[0]
    rasterize(norm_mesh, pose)  # warm the JIT cache outside the timers

    samples: dict[str, list[float]] = {
        "rasterize": [],
        "select": [],
        "splat": [],
        "uv_fill": [],
        "total": [],
    }
    chart = chart_mask(norm_mesh, cfg.texture_size)
    scorer = ViewScorer(norm_mesh, score_size=cfg.score_size)
    lattice = fibonacci_lattice(
        cfg.n_candidates, cfg.radius, cfg.ortho_half_extent, cfg.render_size
    )
    rng = np.random.default_rng(cfg.seed)

    for _ in range(reps):
        t0 = time.perf_counter()
        frag = rasterize(norm_mesh, pose)
        samples["rasterize"].append(time.perf_counter() - t0)

        image = np.repeat(render_depth(frag).normalized()[:, :, None], 3, axis=2)
        tex = UvTexture(cfg.texture_size, w_min=cfg.w_min)
        t0 = time.perf_counter()
        splat(image, frag, None, tex)
        samples["splat"].append(time.perf_counter() - t0)

        empty = np.zeros((cfg.texture_size, cfg.texture_size), dtype=bool)
        t0 = time.perf_counter()
        select_next(norm_mesh, empty, CandidateSet(poses=lattice), cfg.min_gain_frac, scorer)
        samples["select"].append(time.perf_counter() - t0)

        tex = UvTexture(cfg.texture_size, w_min=cfg.w_min)
        speckle = chart & (rng.random(chart.shape) < 0.5)
        tex.weight_accum[speckle] = 1.0
        tex.color_accum[speckle] = rng.random((int(speckle.sum()), 3))
        t0 = time.perf_counter()
        uv_fill(tex, speckle, chart, max_rounds=8)
        samples["uv_fill"].append(time.perf_counter() - t0)

        t0 = time.perf_counter()
        texture_mesh(norm_mesh, "bench", replace(cfg), FlatMock())
        samples["total"].append(time.perf_counter() - t0)

    return {
        "samples": samples,
        "median": {k: statistics.median(v) for k, v in samples.items()},
        "config": {
            "render_size": cfg.render_size,
            "texture_size": cfg.texture_size,
            "n_views": cfg.n_views,
            "n_candidates": cfg.n_candidates,
            "reps": reps,
        },
    }


def _cmd_bench(args: argparse.Namespace) -> int:
    _require(args, "mesh")
    mesh = _load_mesh_arg(args.mesh)
    cfg = _config_from_args(args)
    report = run_bench(mesh, cfg, args.reps)
    text = json.dumps(report, indent=2)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "bench.json").write_text(text, encoding="utf-8")
        print(f"wrote {out_dir / 'bench.json'}")
    print(text)
    return 0


_COMMANDS = {
    "texture": _cmd_texture,
    "enhance": _cmd_enhance,
    "views": _cmd_views,
    "bench": _cmd_bench,
}


def run(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.subcommand is None:
            raise CliError("a subcommand is required: texture | enhance | views | bench")
        return _COMMANDS[args.subcommand](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (TexbakeError, FileNotFoundError) as exc:
        if isinstance(exc, GeneratorError):
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    entrypoint()
