"""Acceptance suite: one test per numbered criterion, each printing a PASS line.

Criteria 1-10 are hermetic (mock generators only). Criterion 11 needs the
reference generator server running; point MAT_REFGEN_URL at it to enable.
"""

import json
import os
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import synthetic_frag
from oracles import greedy_order_oracle, naive_splat
from texbake.backproject import UvTexture, splat, splat_weights
from texbake.camera import CameraPose, fibonacci_lattice
from texbake.cli import run_bench
from texbake.generator import GeneratorRequest, HttpGenerator
from texbake.images import decode_png_b64, encode_png
from texbake.pipeline import PipelineConfig, texture_mesh
from texbake.raster import (
    frontal_filter_mask,
    internal_face_mask,
    normals_from_depth,
    rasterize,
    render_depth,
    render_rgb,
)
from texbake.viewsel import selection_order

FIXTURES = Path(__file__).parent / "fixtures" / "generator"


def mock(name):
    from texbake.generator import MOCKS

    return MOCKS[name]()


@pytest.fixture(scope="module", autouse=True)
def warm_jit(sphere):
    """Compile/load every numba kernel before any timed criterion runs."""
    cfg = PipelineConfig(
        texture_size=64, render_size=64, gen_size=32, n_views=2, n_candidates=2, seed=0
    )
    texture_mesh(sphere, "warmup", cfg, mock("flat"))


def test_criterion_1_splat_oracle_equivalence():
    rng = np.random.default_rng(1)
    frag = synthetic_frag(rng, width=16, height=16)
    image = rng.random((16, 16, 3))
    tex = UvTexture(8)
    t0 = time.perf_counter()
    splat(image, frag, None, tex)
    cacc, wacc = naive_splat(image, frag.uv, frag.foreground, 8)
    elapsed = time.perf_counter() - t0
    dw = np.abs(tex.weight_accum - wacc).max()
    dc = np.abs(tex.color_accum - cacc).max()
    assert dw <= 1e-12
    assert dc <= 1e-12
    assert elapsed < 1.0
    print(f"ACCEPTANCE 1 PASS splat==oracle (max diff {max(dw, dc):.2e}, {elapsed * 1e3:.0f} ms)")


def test_criterion_2_weight_conservation_exact():
    rng = np.random.default_rng(2)
    for trial in range(100):
        frag = synthetic_frag(rng, width=64, height=64, fg_prob=rng.random())
        tex = UvTexture(32)
        splat(rng.random((64, 64, 3)), frag, None, tex)
        total = tex.weight_accum.sum()
        expected = float(frag.foreground.sum())
        assert total == expected, f"trial {trial}: {total} != {expected}"
    print("ACCEPTANCE 2 PASS weight conservation exact over 100 random buffers")


def test_criterion_3_round_trip_fidelity(big_sphere):
    color = (0.3, 0.6, 0.9)
    tex = UvTexture(1024)
    tex.weight_accum[:] = 1.0
    tex.color_accum[:] = color
    pose = CameraPose(0.0, 0.0, 2.0, image_size=1024)
    frag = rasterize(big_sphere, pose)
    image = render_rgb(frag, tex)
    before = tex.weight_accum.copy()
    splat(image, frag, None, tex)
    grew = tex.weight_accum > before
    assert grew.any()
    committed = tex.committed()
    delta = np.abs(committed[grew] - np.asarray(color)).max()
    assert delta <= 1 / 255
    print(f"ACCEPTANCE 3 PASS round-trip fidelity (max delta {delta:.2e} on {int(grew.sum())} texels)")


def test_criterion_4_greedy_selection_oracle(torus):
    lattice = fibonacci_lattice(16, 2.0, image_size=128)
    got = selection_order(torus, lattice, max_views=4, texture_res=96)
    expected = greedy_order_oracle(torus, lattice, steps=4, texture_res=96)
    assert got == expected
    assert len(got) == 4
    print(f"ACCEPTANCE 4 PASS greedy selection == exhaustive oracle (order {got})")


def test_criterion_5_coverage_trend(big_sphere):
    t0 = time.perf_counter()
    coverage = {}
    for n in (2, 4, 6, 8):
        _, records = texture_mesh(
            big_sphere, "a beach ball", PipelineConfig(seed=11, n_views=n), mock("flat")
        )
        coverage[n] = records[-1].post_coverage
    elapsed = time.perf_counter() - t0
    assert coverage[2] < coverage[4] < coverage[6]
    assert abs(coverage[8] - coverage[6]) <= 0.02
    assert elapsed < 60.0
    print(
        "ACCEPTANCE 5 PASS coverage trend "
        + " ".join(f"{n}:{coverage[n]:.3f}" for n in (2, 4, 6, 8))
        + f" ({elapsed:.1f} s)"
    )


def _bad_pixel_texels(probes, res):
    """Texels receiving weight from pixels whose culled/unculled depths differ."""
    total = 0
    for p in probes:
        fg_c = np.isfinite(p.depth_culled.values)
        fg_n = np.isfinite(p.depth_nocull.values)
        both = fg_c & fg_n
        span = p.depth_culled.far - p.depth_culled.near
        bad = fg_c ^ fg_n
        bad[both] = (
            np.abs(p.depth_culled.values[both] - p.depth_nocull.values[both]) > 1e-3 * span
        )
        contributing = p.frag_nocull.foreground & ~p.reject
        culprit = bad & contributing
        if culprit.any():
            weights = splat_weights(p.frag_nocull, ~culprit, res)
            total += int((weights > 0).sum())
    return total


def test_criterion_6_open_surface_artifact_gate(open_cylinder):
    base = dict(
        texture_size=512, render_size=512, gen_size=256, n_views=6, n_candidates=12, seed=3
    )

    probes_on = []
    texture_mesh(
        open_cylinder,
        "a tube",
        PipelineConfig(**base, use_internal_filter=True),
        mock("depthshade"),
        stage_probe=probes_on.append,
    )
    corrupted_on = _bad_pixel_texels(probes_on, 512)
    assert corrupted_on == 0

    probes_off = []
    texture_mesh(
        open_cylinder,
        "a tube",
        PipelineConfig(**base, use_internal_filter=False),
        mock("depthshade"),
        stage_probe=probes_off.append,
    )
    corrupted_off = _bad_pixel_texels(probes_off, 512)
    assert corrupted_off > 0
    print(
        f"ACCEPTANCE 6 PASS interior-face gate (filter on: 0 corrupted texels, "
        f"off: {corrupted_off})"
    )


def test_criterion_7_frontal_filter_cap_area(big_sphere):
    pose = CameraPose(0.0, 0.0, 2.0, image_size=1024)
    depth = render_depth(rasterize(big_sphere, pose))
    normals = normals_from_depth(depth, pose)
    rejected = {tau: frontal_filter_mask(normals, tau) for tau in (0.1, 0.3, 0.6)}
    frac = rejected[0.3].sum() / depth.foreground.sum()
    assert frac == pytest.approx(0.09, abs=0.02)
    assert not (rejected[0.1] & ~rejected[0.3]).any()
    assert not (rejected[0.3] & ~rejected[0.6]).any()
    print(f"ACCEPTANCE 7 PASS frontal filter (rejected {frac:.4f} vs analytic 0.09, monotone)")


def test_criterion_8_end_to_end_determinism(big_sphere):
    cfg = PipelineConfig(seed=42)
    tex_a, _ = texture_mesh(big_sphere, "a marble sphere", cfg, mock("checker"))
    tex_b, _ = texture_mesh(big_sphere, "a marble sphere", cfg, mock("checker"))
    png_a = encode_png(tex_a[::-1])
    png_b = encode_png(tex_b[::-1])
    assert png_a == png_b
    print(f"ACCEPTANCE 8 PASS byte-identical texture PNGs ({len(png_a)} bytes)")


def test_criterion_9_watertight_invariant(cube):
    for pose in fibonacci_lattice(16, 2.0, image_size=512):
        dc = render_depth(rasterize(cube, pose, cull_backfaces=True))
        dn = render_depth(rasterize(cube, pose, cull_backfaces=False))
        mask = internal_face_mask(dc, dn, 1e-3)
        assert not mask.any()
    print("ACCEPTANCE 9 PASS internal-face mask empty on all 16 cube poses")


def test_criterion_10_performance_budget(big_sphere):
    report = run_bench(
        big_sphere,
        PipelineConfig(
            texture_size=1024, render_size=512, gen_size=256, n_views=6, n_candidates=16, seed=0
        ),
        reps=5,
    )
    splat_median = report["median"]["splat"]
    assert splat_median < 0.25

    t0 = time.perf_counter()
    texture_mesh(big_sphere, "a beach ball", PipelineConfig(seed=5), mock("flat"))
    pipeline_s = time.perf_counter() - t0
    assert pipeline_s < 10.0
    print(
        f"ACCEPTANCE 10 PASS performance (splat median {splat_median * 1e3:.1f} ms, "
        f"6-view pipeline {pipeline_s:.2f} s)"
    )


@pytest.mark.skipif(
    "MAT_REFGEN_URL" not in os.environ,
    reason="reference generator server not running (set MAT_REFGEN_URL)",
)
def test_criterion_11_refgen_protocol_conformance():
    golden = json.loads((FIXTURES / "golden_request.json").read_text())
    req = GeneratorRequest(
        prompt=golden["prompt"],
        depth=decode_png_b64(golden["depth_png_b64"]),
        inpaint_mask=decode_png_b64(golden["mask_png_b64"]) > 0.5,
        init_rgb=decode_png_b64(golden["init_png_b64"]),
        w_depth=golden["w_depth"],
        w_inpaint=golden["w_inpaint"],
        strength=golden["strength"],
        seed=golden["seed"],
        size=golden["size"],
    )
    gen = HttpGenerator(os.environ["MAT_REFGEN_URL"], timeout=60)
    assert gen.health()
    resp = gen.generate(req)
    assert resp.rgb.shape == (golden["size"], golden["size"], 3)
    assert resp.rgb.min() >= 0.0 and resp.rgb.max() <= 1.0
    print(f"ACCEPTANCE 11 PASS refgen conformance (generator_id {resp.generator_id})")
