#!/usr/bin/env python3
"""Sweep the frontal-filter threshold and report rejected pixel fractions.

On a sphere the rejected fraction should track tau^2 (the grazing annulus of
the projected disk), which makes this a quick sanity check on the
normals-from-depth path.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from texbake import meshgen
from texbake.camera import CameraPose
from texbake.raster import frontal_filter_mask, normals_from_depth, rasterize, render_depth


def main() -> None:
    mesh = meshgen.uv_sphere(48, 96)
    pose = CameraPose(0.0, 0.0, 2.0, image_size=512)
    depth = render_depth(rasterize(mesh, pose))
    normals = normals_from_depth(depth, pose)
    fg = depth.foreground.sum()
    print("tau_keep  rejected  analytic(tau^2)")
    for tau in (0.1, 0.2, 0.3, 0.4, 0.6):
        frac = frontal_filter_mask(normals, tau).sum() / fg
        print(f"{tau:7.2f}  {frac:8.4f}  {tau * tau:8.4f}")


if __name__ == "__main__":
    main()
