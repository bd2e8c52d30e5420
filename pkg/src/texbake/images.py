"""Image plumbing: PNG encode/decode, resizing, and small mask morphology.

Colors travel through the pipeline as float arrays in [0, 1]; PNG boundaries
quantize to 8 bits (16 bits for debug depth dumps). Texture images follow the
OBJ vt convention, with the (0, 0) texel at the bottom-left, so texture arrays
are flipped vertically at PNG read/write time.
"""

from __future__ import annotations

import base64
import io
from pathlib import Path

import cv2
import numpy as np
from PIL import Image


def to_uint8(img: np.ndarray) -> np.ndarray:
    return (np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def from_uint8(img: np.ndarray) -> np.ndarray:
    return img.astype(np.float64) / 255.0


def encode_png(img: np.ndarray) -> bytes:
    """Encode a float image ([0,1], HxW gray or HxWx3 RGB) as 8-bit PNG bytes."""
    arr = to_uint8(img)
    mode = "L" if arr.ndim == 2 else "RGB"
    buf = io.BytesIO()
    Image.fromarray(arr, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    """Decode PNG bytes to float [0,1]; RGB stays HxWx3, grayscale HxW."""
    img = Image.open(io.BytesIO(data))
    if img.mode in ("L", "I", "I;16"):
        arr = np.asarray(img)
        if arr.dtype == np.uint8:
            return from_uint8(arr)
        return arr.astype(np.float64) / 65535.0
    return from_uint8(np.asarray(img.convert("RGB")))


def encode_png_b64(img: np.ndarray) -> str:
    return base64.b64encode(encode_png(img)).decode("ascii")


def decode_png_b64(data: str) -> np.ndarray:
    return decode_png(base64.b64decode(data))


def save_png(path: str | Path, img: np.ndarray) -> None:
    Path(path).write_bytes(encode_png(img))


def save_png16(path: str | Path, img: np.ndarray) -> None:
    """16-bit grayscale PNG, for depth dumps."""
    arr = (np.clip(img, 0.0, 1.0) * 65535.0 + 0.5).astype(np.uint16)
    Image.fromarray(arr).save(Path(path), format="PNG")


def save_mask_png(path: str | Path, mask: np.ndarray) -> None:
    save_png(path, mask.astype(np.float64))


def load_png(path: str | Path) -> np.ndarray:
    return decode_png(Path(path).read_bytes())


def save_texture_png(path: str | Path, texture: np.ndarray) -> None:
    """Write a texture so texel (0, 0) lands at the PNG's bottom-left."""
    save_png(path, texture[::-1])


def load_texture_png(path: str | Path) -> np.ndarray:
    return load_png(path)[::-1].copy()


def resize_bilinear(img: np.ndarray, width: int, height: int) -> np.ndarray:
    out = cv2.resize(
        np.ascontiguousarray(img, dtype=np.float64),
        (width, height),
        interpolation=cv2.INTER_LINEAR,
    )
    return out


def resize_nearest_mask(mask: np.ndarray, width: int, height: int) -> np.ndarray:
    out = cv2.resize(
        mask.astype(np.uint8), (width, height), interpolation=cv2.INTER_NEAREST
    )
    return out.astype(bool)


def erode_mask(mask: np.ndarray) -> np.ndarray:
    """One 8-connected erosion step: a pixel survives iff its 3x3 block is true."""
    padded = np.pad(mask, 1, mode="constant", constant_values=False)
    out = padded[1:-1, 1:-1].copy()
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            out &= padded[1 + dy : padded.shape[0] - 1 + dy, 1 + dx : padded.shape[1] - 1 + dx]
    return out
