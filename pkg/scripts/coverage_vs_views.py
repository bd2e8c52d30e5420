#!/usr/bin/env python3
"""Sweep the view budget and report pre-fill texture coverage per run.

Reproduces the coverage-vs-views experiment: coverage climbs steeply up to six
views and plateaus afterwards, which is why six is the default budget.
"""

import json
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from texbake import meshgen
from texbake.generator import FlatMock
from texbake.pipeline import PipelineConfig, texture_mesh


def main() -> None:
    mesh = meshgen.uv_sphere(48, 96)
    rows = []
    for n_views in (2, 4, 6, 8):
        cfg = PipelineConfig(seed=11, n_views=n_views)
        t0 = time.perf_counter()
        _, records = texture_mesh(mesh, "a beach ball", cfg, FlatMock())
        rows.append(
            {
                "n_views": n_views,
                "views_used": len(records),
                "coverage": round(records[-1].post_coverage, 4),
                "seconds": round(time.perf_counter() - t0, 2),
            }
        )
        print(f"views={n_views}: coverage={rows[-1]['coverage']:.4f} "
              f"({rows[-1]['views_used']} used, {rows[-1]['seconds']}s)")
    out = Path("out/coverage_vs_views.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(rows, indent=2))
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
