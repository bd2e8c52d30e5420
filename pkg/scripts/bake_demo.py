#!/usr/bin/env python3
"""End-to-end demo: bake a texture for a builtin mesh with a mock generator.

Writes texture.png, mesh.obj/.mtl, and per-stage debug images under --out.
Swap --generator for http:<url> to drive a real backend.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from texbake.cli import run

if __name__ == "__main__":
    argv = sys.argv[1:] or [
        "--mesh", "builtin:sphere",
        "--prompt", "a weathered bronze globe",
        "--generator", "mock:checker",
        "--seed", "7",
        "--out", "out/demo",
        "--dump-intermediates",
    ]
    sys.exit(run(["texture", *argv]))
