"""Pluggable depth-aware inpainting image generators.

The pipeline only ever talks to the Generator interface. Three deterministic
mocks make the whole test suite hermetic; HttpGenerator speaks the wire
protocol to an out-of-process backend.

Wire protocol (authoritative copy):
  POST {base}/v1/generate with JSON
    {prompt: str, seed: int, strength: float, w_depth: float, w_inpaint: float,
     size: int, depth_png_b64: str, mask_png_b64: str, init_png_b64: str}
  depth: 8-bit grayscale, normalized with near bright, background 0;
  mask:  8-bit grayscale, 255 = regenerate this pixel;
  init:  8-bit RGB.
  `size` is the height of the images; the width is size * k for a horizontal
  grid of k views (k in 1..4). Response: {rgb_png_b64: str, generator_id: str}
  with the rgb PNG matching the request dimensions. Non-200 responses map to
  BackendUnavailable, malformed bodies to ProtocolError.
  GET {base}/v1/health answers 200 when the backend is ready.

Generation semantics shared by the mocks: with strength s the output is
s * pattern + (1 - s) * init inside the regenerate mask; outside it, init is
preserved exactly when w_inpaint >= 1, blended by w_inpaint when 0 < w < 1,
and ignored when w_inpaint == 0 (nothing worth preserving yet).
"""

from __future__ import annotations

import colorsys
import hashlib
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import requests

from .errors import (
    BackendUnavailable,
    BatchFailure,
    InvalidBatch,
    ProtocolError,
    SizeMismatch,
    Timeout,
)
from .images import decode_png_b64, encode_png_b64

MAX_GRID_SLOTS = 4
GENERATOR_ENV_VAR = "MAT_GENERATOR_URL"


@dataclass
class GeneratorRequest:
    prompt: str
    depth: np.ndarray  # (S, k*S) normalized depth, near bright, background 0
    inpaint_mask: np.ndarray  # (S, k*S) bool, True = regenerate
    init_rgb: np.ndarray  # (S, k*S, 3) in [0, 1]
    w_depth: float = 1.0
    w_inpaint: float = 1.0
    strength: float = 1.0
    seed: int = 0
    size: int = 512

    def validate(self) -> None:
        h, w = self.depth.shape
        if h != self.size or w % self.size != 0 or not 1 <= w // self.size <= MAX_GRID_SLOTS:
            raise SizeMismatch(f"depth shape {self.depth.shape} does not match size {self.size}")
        if self.inpaint_mask.shape != (h, w):
            raise SizeMismatch("inpaint mask shape differs from depth")
        if self.init_rgb.shape != (h, w, 3):
            raise SizeMismatch("init rgb shape differs from depth")
        if not 0.0 <= self.w_depth <= 2.0 or not 0.0 <= self.w_inpaint <= 2.0:
            raise ValueError("control weights must lie in [0, 2]")
        if not 0.0 <= self.strength <= 1.0:
            raise ValueError("strength must lie in [0, 1]")


@dataclass
class GeneratorResponse:
    rgb: np.ndarray
    generator_id: str
    elapsed: float


@dataclass(frozen=True)
class GridLayout:
    """Slot rectangles (x, y, w, h) of views concatenated into one request."""

    slots: tuple[tuple[int, int, int, int], ...]

    def split(self, image: np.ndarray) -> list[np.ndarray]:
        return [image[y : y + h, x : x + w].copy() for (x, y, w, h) in self.slots]


def make_grid(
    depths: list[np.ndarray],
    masks: list[np.ndarray],
    inits: list[np.ndarray],
    prompt: str = "",
    seed: int = 0,
    w_depth: float = 1.0,
    w_inpaint: float = 0.0,
    strength: float = 1.0,
) -> tuple[GeneratorRequest, GridLayout]:
    """Concatenate 2..4 equal-size views left-to-right into one request."""
    k = len(depths)
    if not 2 <= k <= MAX_GRID_SLOTS or len(masks) != k or len(inits) != k:
        raise SizeMismatch(f"grids take 2..{MAX_GRID_SLOTS} views, got {k}")
    size = depths[0].shape[0]
    for d, m, i in zip(depths, masks, inits):
        if d.shape != (size, size) or m.shape != (size, size) or i.shape != (size, size, 3):
            raise SizeMismatch("all grid views must be square and equal-size")
    req = GeneratorRequest(
        prompt=prompt,
        depth=np.concatenate(depths, axis=1),
        inpaint_mask=np.concatenate(masks, axis=1),
        init_rgb=np.concatenate(inits, axis=1),
        w_depth=w_depth,
        w_inpaint=w_inpaint,
        strength=strength,
        seed=seed,
        size=size,
    )
    layout = GridLayout(slots=tuple((j * size, 0, size, size) for j in range(k)))
    return req, layout


class Generator:
    """Interface: generate one request, or a batch in request order."""

    generator_id = "generator"

    def generate(self, req: GeneratorRequest) -> GeneratorResponse:
        raise NotImplementedError

    def generate_batch(self, reqs: list[GeneratorRequest]) -> list[GeneratorResponse]:
        if not reqs:
            raise InvalidBatch("empty request batch")
        responses: list[GeneratorResponse | None] = [None] * len(reqs)
        failures: list[tuple[int, Exception]] = []
        for i, req in enumerate(reqs):
            try:
                responses[i] = self.generate(req)
            except Exception as exc:  # noqa: BLE001 - reported per item
                failures.append((i, exc))
        if failures:
            raise BatchFailure(failures)
        return responses  # type: ignore[return-value]


def _stable_hash(*parts: object) -> int:
    text = "\x1f".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


class MockGenerator(Generator):
    """Deterministic local generator; output is a pure function of the request."""

    def _pattern(self, req: GeneratorRequest) -> np.ndarray:
        raise NotImplementedError

    def generate(self, req: GeneratorRequest) -> GeneratorResponse:
        req.validate()
        t0 = time.perf_counter()
        pattern = self._pattern(req)
        blended = req.strength * pattern + (1.0 - req.strength) * req.init_rgb
        out = blended
        keep = ~req.inpaint_mask
        if req.w_inpaint >= 1.0:
            out = blended.copy()
            out[keep] = req.init_rgb[keep]
        elif req.w_inpaint > 0.0:
            out = blended.copy()
            out[keep] = (
                req.w_inpaint * req.init_rgb[keep] + (1.0 - req.w_inpaint) * blended[keep]
            )
        return GeneratorResponse(
            rgb=np.clip(out, 0.0, 1.0),
            generator_id=self.generator_id,
            elapsed=time.perf_counter() - t0,
        )


_VIEW_SUFFIX = re.compile(r",\s*[a-z ]+\sview$")


class FlatMock(MockGenerator):
    """Fills the object with a single prompt-hashed color.

    The trailing ", ... view" clause the pipeline appends is ignored, and the
    seed is not mixed in, so one run paints one color across all of its views;
    distinct base prompts still map to distinct hues.
    """

    generator_id = "mock:flat"

    def _pattern(self, req: GeneratorRequest) -> np.ndarray:
        base_prompt = _VIEW_SUFFIX.sub("", req.prompt)
        hue = (_stable_hash(base_prompt) % 3600) / 3600.0
        rgb = colorsys.hsv_to_rgb(hue, 0.65, 0.9)
        out = np.zeros((*req.depth.shape, 3))
        out[req.depth > 0.0] = rgb
        return out


class DepthShadeMock(MockGenerator):
    """Replicates the conditioning depth into all three channels."""

    generator_id = "mock:depthshade"

    def _pattern(self, req: GeneratorRequest) -> np.ndarray:
        return np.repeat(req.depth[:, :, None], 3, axis=2)


class CheckerMock(MockGenerator):
    """Seeded two-color checkerboard over the object silhouette."""

    generator_id = "mock:checker"

    def _pattern(self, req: GeneratorRequest) -> np.ndarray:
        rng = np.random.default_rng(_stable_hash(req.prompt, req.seed))
        c0 = rng.random(3) * 0.8 + 0.1
        c1 = rng.random(3) * 0.8 + 0.1
        cell = max(4, req.size // 16)
        h, w = req.depth.shape
        yy, xx = np.mgrid[0:h, 0:w]
        checker = ((yy // cell + xx // cell) % 2).astype(bool)
        out = np.where(checker[:, :, None], c1, c0)
        out[req.depth <= 0.0] = 0.0
        return out


class HttpGenerator(Generator):
    """Client for a wire-protocol backend; bounded concurrency for batches."""

    generator_id = "http"

    def __init__(self, base_url: str, timeout: float = 120.0, max_inflight: int = 4):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.max_inflight = max(1, max_inflight)

    def health(self) -> bool:
        try:
            resp = requests.get(f"{self.base_url}/v1/health", timeout=self.timeout)
        except requests.RequestException:
            return False
        return resp.status_code == 200

    def generate(self, req: GeneratorRequest) -> GeneratorResponse:
        req.validate()
        t0 = time.perf_counter()
        body = {
            "prompt": req.prompt,
            "seed": int(req.seed),
            "strength": float(req.strength),
            "w_depth": float(req.w_depth),
            "w_inpaint": float(req.w_inpaint),
            "size": int(req.size),
            "depth_png_b64": encode_png_b64(req.depth),
            "mask_png_b64": encode_png_b64(req.inpaint_mask.astype(np.float64)),
            "init_png_b64": encode_png_b64(req.init_rgb),
        }
        try:
            resp = requests.post(
                f"{self.base_url}/v1/generate", json=body, timeout=self.timeout
            )
        except requests.Timeout as exc:
            raise Timeout(f"generator did not answer within {self.timeout}s") from exc
        except requests.RequestException as exc:
            raise BackendUnavailable(str(exc)) from exc
        if resp.status_code != 200:
            raise BackendUnavailable(f"generator answered status {resp.status_code}")
        try:
            payload = resp.json()
            rgb = decode_png_b64(payload["rgb_png_b64"])
            generator_id = str(payload.get("generator_id", "remote"))
        except (ValueError, KeyError, TypeError) as exc:
            raise ProtocolError(f"malformed generator response: {exc}") from exc
        if rgb.ndim != 3 or rgb.shape[:2] != req.depth.shape:
            raise ProtocolError(
                f"generator returned {rgb.shape[:2]}, expected {req.depth.shape}"
            )
        return GeneratorResponse(
            rgb=rgb, generator_id=generator_id, elapsed=time.perf_counter() - t0
        )

    def generate_batch(self, reqs: list[GeneratorRequest]) -> list[GeneratorResponse]:
        if not reqs:
            raise InvalidBatch("empty request batch")
        responses: list[GeneratorResponse | None] = [None] * len(reqs)
        failures: list[tuple[int, Exception]] = []
        with ThreadPoolExecutor(max_workers=min(self.max_inflight, len(reqs))) as pool:
            futures = {pool.submit(self.generate, r): i for i, r in enumerate(reqs)}
            for fut, i in futures.items():
                try:
                    responses[i] = fut.result()
                except Exception as exc:  # noqa: BLE001 - reported per item
                    failures.append((i, exc))
        if failures:
            raise BatchFailure(sorted(failures))
        return responses  # type: ignore[return-value]


MOCKS = {
    "flat": FlatMock,
    "depthshade": DepthShadeMock,
    "checker": CheckerMock,
}


def parse_generator_uri(uri: str, timeout: float = 120.0, max_inflight: int = 4) -> Generator:
    """Build a generator from a URI: mock:<name> or http:<url>.

    A bare "http:" (or "http") falls back to the MAT_GENERATOR_URL environment
    variable.
    """
    if uri.startswith("mock:"):
        name = uri[len("mock:") :]
        if name not in MOCKS:
            raise ValueError(f"unknown mock generator {name!r}; have {sorted(MOCKS)}")
        return MOCKS[name]()
    if uri.startswith(("http://", "https://")):
        return HttpGenerator(uri, timeout=timeout, max_inflight=max_inflight)
    if uri == "http" or uri.startswith("http:"):
        url = uri[len("http:") :] if uri.startswith("http:") else ""
        if not url:
            url = os.environ.get(GENERATOR_ENV_VAR, "")
        if not url:
            raise ValueError(
                f"http generator needs a URL (http:<url>) or {GENERATOR_ENV_VAR} set"
            )
        return HttpGenerator(url, timeout=timeout, max_inflight=max_inflight)
    raise ValueError(f"unknown generator URI {uri!r}")
