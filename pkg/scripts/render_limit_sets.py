"""Render both limit sets and the n-step backward measure for a few parameters.

    python scripts/render_limit_sets.py [--pixels 1024] [--outdir figures]
"""

import argparse
import time
from pathlib import Path

from corrdyn import measure, render
from corrdyn.atoms import AtomicMeasure
from corrdyn.corr import make_context

PARAMS = {"a4": 4, "a7": 7, "a3+2i": 3 + 2j}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pixels", type=int, default=1024)
    ap.add_argument("--steps", type=int, default=14)
    ap.add_argument("--outdir", default="figures")
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for tag, a in PARAMS.items():
        ctx = make_context(a)
        vp = render.default_viewport(a, args.pixels)
        grids = {}
        for side in ("minus", "plus"):
            t0 = time.time()
            grid = grids[side] = render.render_limit_set(ctx, side, vp)
            render.write_ppm(grid, out / f"{tag}_{side}.ppm")
            print(f"{tag} {side}: inside={int(grid.inside.sum())} slow={grid.notes['slow']} "
                  f"inconsistent={grid.notes['inconsistent']} {time.time() - t0:.2f}s")
        mu = measure.transport(ctx, AtomicMeasure.dirac(3), args.steps)
        heat = render.render_measure(mu, vp)
        render.write_ppm(heat, out / f"{tag}_measure.ppm")
        near = render.mass_near_boundary(mu, grids["minus"], 3)
        print(f"{tag} measure: atoms={len(mu)} overflow={heat.overflow:.2e} near_boundary={near:.3f}")


if __name__ == "__main__":
    main()
