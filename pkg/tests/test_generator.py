import json
import threading
import time
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from texbake.errors import (
    BackendUnavailable,
    BatchFailure,
    InvalidBatch,
    ProtocolError,
    SizeMismatch,
    Timeout,
)
from texbake.generator import (
    CheckerMock,
    DepthShadeMock,
    FlatMock,
    GeneratorRequest,
    HttpGenerator,
    make_grid,
    parse_generator_uri,
)
from texbake.images import decode_png_b64, encode_png_b64

FIXTURES = Path(__file__).parent / "fixtures" / "generator"


def disk_request(size=64, **kw):
    yy, xx = np.mgrid[0:size, 0:size]
    r = np.hypot(yy - size / 2, xx - size / 2) / (size / 2)
    depth = np.clip(1.0 - r, 0.0, 1.0)
    defaults = dict(
        prompt="a test object",
        depth=depth,
        inpaint_mask=np.ones((size, size), dtype=bool),
        init_rgb=np.full((size, size, 3), 0.5),
        seed=7,
        size=size,
    )
    defaults.update(kw)
    return GeneratorRequest(**defaults)


def test_flat_mock_constant_over_foreground():
    req = disk_request()
    out = FlatMock().generate(req).rgb
    fg = req.depth > 0
    colors = np.unique(out[fg].round(9), axis=0)
    assert len(colors) == 1
    np.testing.assert_array_equal(out[~fg], 0.0)


def test_flat_mock_hue_depends_on_prompt():
    a = FlatMock().generate(disk_request(prompt="a red vase")).rgb
    b = FlatMock().generate(disk_request(prompt="a blue car")).rgb
    assert not np.array_equal(a, b)


def test_depthshade_replicates_depth():
    req = disk_request()
    keep = ~req.inpaint_mask
    out = DepthShadeMock().generate(req).rgb
    expected = np.repeat(req.depth[:, :, None], 3, axis=2)
    np.testing.assert_allclose(out[~keep], expected[~keep], atol=1e-12)


def test_checker_mock_bit_identical_for_same_seed():
    a = CheckerMock().generate(disk_request(seed=7)).rgb
    b = CheckerMock().generate(disk_request(seed=7)).rgb
    np.testing.assert_array_equal(a, b)
    c = CheckerMock().generate(disk_request(seed=8)).rgb
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("mock_cls", [FlatMock, DepthShadeMock, CheckerMock])
def test_mocks_preserve_init_outside_mask(mock_cls):
    rng = np.random.default_rng(1)
    mask = rng.random((64, 64)) < 0.5
    init = rng.random((64, 64, 3))
    req = disk_request(inpaint_mask=mask, init_rgb=init, w_inpaint=1.0, strength=1.0)
    out = mock_cls().generate(req).rgb
    assert np.abs(out[~mask] - init[~mask]).max() <= 2 / 255


def test_strength_blends_toward_init():
    init = np.full((64, 64, 3), 0.5)
    full = FlatMock().generate(disk_request(strength=1.0, init_rgb=init)).rgb
    half = FlatMock().generate(disk_request(strength=0.5, init_rgb=init)).rgb
    mid = 0.5 * full + 0.5 * init
    np.testing.assert_allclose(half, mid, atol=1e-12)


def test_batch_equals_sequential():
    gen = CheckerMock()
    reqs = [disk_request(seed=1), disk_request(seed=2)]
    batch = gen.generate_batch(reqs)
    solo = [gen.generate(r) for r in reqs]
    for b, s in zip(batch, solo):
        np.testing.assert_array_equal(b.rgb, s.rgb)


def test_empty_batch_rejected():
    with pytest.raises(InvalidBatch):
        FlatMock().generate_batch([])


def test_request_validation():
    with pytest.raises(SizeMismatch):
        disk_request().__class__(
            prompt="",
            depth=np.zeros((64, 32)),
            inpaint_mask=np.zeros((64, 64), dtype=bool),
            init_rgb=np.zeros((64, 64, 3)),
            size=64,
        ).validate()
    with pytest.raises(ValueError):
        disk_request(w_depth=3.0).validate()
    with pytest.raises(ValueError):
        disk_request(strength=1.5).validate()


def test_make_grid_two_views_shapes():
    d = [np.zeros((512, 512)), np.ones((512, 512))]
    m = [np.zeros((512, 512), dtype=bool)] * 2
    i = [np.zeros((512, 512, 3))] * 2
    req, layout = make_grid(d, m, i)
    assert req.depth.shape == (512, 1024)
    assert layout.slots == ((0, 0, 512, 512), (512, 0, 512, 512))
    req.validate()


def test_make_grid_three_views():
    d = [np.zeros((512, 512))] * 3
    m = [np.zeros((512, 512), dtype=bool)] * 3
    i = [np.zeros((512, 512, 3))] * 3
    req, layout = make_grid(d, m, i)
    assert req.depth.shape == (512, 1536)
    assert len(layout.slots) == 3


def test_grid_split_round_trip():
    rng = np.random.default_rng(0)
    depths = [rng.random((64, 64)) for _ in range(2)]
    masks = [rng.random((64, 64)) < 0.5 for _ in range(2)]
    inits = [rng.random((64, 64, 3)) for _ in range(2)]
    req, layout = make_grid(depths, masks, inits)
    for got, want in zip(layout.split(req.depth), depths):
        np.testing.assert_array_equal(got, want)
    for got, want in zip(layout.split(req.init_rgb), inits):
        np.testing.assert_array_equal(got, want)


def test_make_grid_size_mismatch():
    with pytest.raises(SizeMismatch):
        make_grid(
            [np.zeros((64, 64)), np.zeros((32, 32))],
            [np.zeros((64, 64), dtype=bool)] * 2,
            [np.zeros((64, 64, 3))] * 2,
        )
    with pytest.raises(SizeMismatch):
        make_grid([np.zeros((64, 64))], [np.zeros((64, 64), dtype=bool)], [np.zeros((64, 64, 3))])


def test_grid_pair_through_mock_yields_two_square_views():
    d = [np.ones((64, 64)) * 0.5, np.ones((64, 64)) * 0.8]
    m = [np.ones((64, 64), dtype=bool)] * 2
    i = [np.zeros((64, 64, 3))] * 2
    req, layout = make_grid(d, m, i, prompt="pair", seed=3)
    resp = DepthShadeMock().generate(req)
    halves = layout.split(resp.rgb)
    assert len(halves) == 2
    assert halves[0].shape == (64, 64, 3)
    np.testing.assert_allclose(halves[0][:, :, 0], 0.5, atol=1e-12)
    np.testing.assert_allclose(halves[1][:, :, 0], 0.8, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**63 - 1), st.text(max_size=30), st.sampled_from([16, 32]))
def test_mock_determinism_property(seed, prompt, size):
    req_a = disk_request(size=size, seed=seed, prompt=prompt)
    req_b = disk_request(size=size, seed=seed, prompt=prompt)
    for cls in (FlatMock, DepthShadeMock, CheckerMock):
        np.testing.assert_array_equal(cls().generate(req_a).rgb, cls().generate(req_b).rgb)


def test_parse_generator_uri(monkeypatch):
    assert isinstance(parse_generator_uri("mock:flat"), FlatMock)
    assert isinstance(parse_generator_uri("mock:checker"), CheckerMock)
    gen = parse_generator_uri("http:http://example.test:8000")
    assert isinstance(gen, HttpGenerator)
    assert gen.base_url == "http://example.test:8000"
    monkeypatch.setenv("MAT_GENERATOR_URL", "http://env.test:9")
    assert parse_generator_uri("http").base_url == "http://env.test:9"
    with pytest.raises(ValueError):
        parse_generator_uri("mock:nope")
    with pytest.raises(ValueError):
        parse_generator_uri("carrier-pigeon")
    monkeypatch.delenv("MAT_GENERATOR_URL")
    with pytest.raises(ValueError):
        parse_generator_uri("http")


class _StubHandler(BaseHTTPRequestHandler):
    behavior = "ok"

    def log_message(self, *args):  # silence
        pass

    def do_GET(self):
        if self.path == "/v1/health":
            self.send_response(200)
            self.end_headers()

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        if self.behavior == "slow":
            time.sleep(2.0)
        if self.behavior == "error":
            self.send_response(503)
            self.end_headers()
            return
        if self.behavior == "garbage":
            payload = b"this is not json"
        else:
            size = body["size"]
            rgb = np.full((size, size, 3), 0.25)
            payload = json.dumps(
                {"rgb_png_b64": encode_png_b64(rgb), "generator_id": "stub"}
            ).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(payload)


@pytest.fixture
def stub_server():
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server
    server.shutdown()


def test_http_generator_round_trip(stub_server):
    _StubHandler.behavior = "ok"
    gen = HttpGenerator(f"http://127.0.0.1:{stub_server.server_port}", timeout=10)
    assert gen.health()
    resp = gen.generate(disk_request(size=32))
    assert resp.rgb.shape == (32, 32, 3)
    assert resp.generator_id == "stub"
    np.testing.assert_allclose(resp.rgb, 0.25, atol=1 / 255)


def test_http_generator_maps_non_200(stub_server):
    _StubHandler.behavior = "error"
    gen = HttpGenerator(f"http://127.0.0.1:{stub_server.server_port}", timeout=10)
    with pytest.raises(BackendUnavailable):
        gen.generate(disk_request(size=32))


def test_http_generator_maps_garbage(stub_server):
    _StubHandler.behavior = "garbage"
    gen = HttpGenerator(f"http://127.0.0.1:{stub_server.server_port}", timeout=10)
    with pytest.raises(ProtocolError):
        gen.generate(disk_request(size=32))


def test_http_generator_timeout(stub_server):
    _StubHandler.behavior = "slow"
    gen = HttpGenerator(f"http://127.0.0.1:{stub_server.server_port}", timeout=0.4)
    with pytest.raises(Timeout):
        gen.generate(disk_request(size=16))


def test_http_generator_connection_refused():
    gen = HttpGenerator("http://127.0.0.1:9", timeout=2)
    assert not gen.health()
    with pytest.raises(BackendUnavailable):
        gen.generate(disk_request(size=16))


def test_http_batch_reports_failures(stub_server):
    _StubHandler.behavior = "error"
    gen = HttpGenerator(f"http://127.0.0.1:{stub_server.server_port}", timeout=10)
    with pytest.raises(BatchFailure) as info:
        gen.generate_batch([disk_request(size=16), disk_request(size=16)])
    assert len(info.value.failures) == 2


def test_golden_request_parses_and_mock_answers():
    golden = json.loads((FIXTURES / "golden_request.json").read_text())
    depth = decode_png_b64(golden["depth_png_b64"])
    mask = decode_png_b64(golden["mask_png_b64"]) > 0.5
    init = decode_png_b64(golden["init_png_b64"])
    req = GeneratorRequest(
        prompt=golden["prompt"],
        depth=depth,
        inpaint_mask=mask,
        init_rgb=init,
        w_depth=golden["w_depth"],
        w_inpaint=golden["w_inpaint"],
        strength=golden["strength"],
        seed=golden["seed"],
        size=golden["size"],
    )
    req.validate()
    resp = FlatMock().generate(req)
    assert resp.rgb.shape == (golden["size"], golden["size"], 3)


def test_golden_response_parses_through_client_decode():
    golden = json.loads((FIXTURES / "golden_response.json").read_text())
    rgb = decode_png_b64(golden["rgb_png_b64"])
    assert rgb.ndim == 3 and rgb.shape[2] == 3
    assert 0.0 <= rgb.min() and rgb.max() <= 1.0
    assert isinstance(golden["generator_id"], str)
