#!/usr/bin/env python3
"""Continuation study: spectral gap, energy values and Newton work along
the path in tau, for a grid of cone fractions."""

import argparse
from pathlib import Path

from conic_ke.geometry import ConeConfiguration, Grid
from conic_ke.io import write_csv
from conic_ke.ma_solver import continuity_path


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--betas", default="0.5,0.65,0.8,0.95")
    ap.add_argument("--delta", type=float, default=1e-3)
    ap.add_argument("--out", default="results/paths")
    args = ap.parse_args()

    grid = Grid()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for beta in (float(x) for x in args.betas.split(",")):
        trace = continuity_path(ConeConfiguration(beta), args.delta, grid=grid)
        write_csv(out / f"trace_beta_{beta:.2f}.csv",
                  ["tau", "J", "F", "lambda1", "gap_margin", "newton_iters"],
                  [(s.tau, s.j_value, s.f_value, s.lambda1, s.lambda1 - s.tau,
                    s.newton_iters) for s in trace.steps])
        worst = min(s.lambda1 - s.tau for s in trace.steps)
        print(f"beta={beta}: {len(trace.steps)} steps, smallest gap margin {worst:.3e}")


if __name__ == "__main__":
    main()
