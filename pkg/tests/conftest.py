import numpy as np
import pytest

from texbake import meshgen
from texbake.pipeline import PipelineConfig
from texbake.raster import FragmentBuffer


@pytest.fixture(scope="session")
def sphere():
    return meshgen.uv_sphere(32, 64)


@pytest.fixture(scope="session")
def big_sphere():
    return meshgen.uv_sphere(48, 96)


@pytest.fixture(scope="session")
def cube():
    return meshgen.cube()


@pytest.fixture(scope="session")
def open_cylinder():
    return meshgen.open_cylinder()


@pytest.fixture(scope="session")
def torus():
    return meshgen.torus()


@pytest.fixture
def small_cfg():
    """Pipeline config scaled down for fast module tests."""
    return PipelineConfig(
        texture_size=256,
        render_size=256,
        gen_size=128,
        n_views=6,
        n_candidates=16,
        seed=7,
    )


def synthetic_frag(rng, width=16, height=16, fg_prob=0.7):
    """Random fragment buffer: arbitrary uv per pixel, random foreground."""
    sel = rng.random((height, width)) < fg_prob
    uv = rng.random((height, width, 2))
    return FragmentBuffer(
        width=width,
        height=height,
        face_id=np.where(sel, 0, -1).astype(np.int32),
        bary=np.zeros((height, width, 3)),
        depth=np.where(sel, 2.0, np.inf),
        uv=uv,
        near=0.9,
        far=3.1,
        face_uv_ok=np.array([True]),
    )


CUBE_OBJ = """
# unit cube, quad faces, 6-square atlas
v -0.5 -0.5 0.5
v 0.5 -0.5 0.5
v 0.5 0.5 0.5
v -0.5 0.5 0.5
v -0.5 -0.5 -0.5
v 0.5 -0.5 -0.5
v 0.5 0.5 -0.5
v -0.5 0.5 -0.5
vt 0.01 0.01
vt 0.32 0.01
vt 0.32 0.49
vt 0.01 0.49
vt 0.34 0.01
vt 0.65 0.01
vt 0.65 0.49
vt 0.34 0.49
vt 0.67 0.01
vt 0.98 0.01
vt 0.98 0.49
vt 0.67 0.49
vt 0.01 0.51
vt 0.32 0.51
vt 0.32 0.99
vt 0.01 0.99
vt 0.34 0.51
vt 0.65 0.51
vt 0.65 0.99
vt 0.34 0.99
vt 0.67 0.51
vt 0.98 0.51
vt 0.98 0.99
vt 0.67 0.99
f 1/1 2/2 3/3 4/4
f 6/5 5/6 8/7 7/8
f 2/9 6/10 7/11 3/12
f 5/13 1/14 4/15 8/16
f 4/17 3/18 7/19 8/20
f 5/21 6/22 2/23 1/24
"""
