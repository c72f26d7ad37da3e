"""Serialization: CSV tables with full double precision, JSON manifests.

Numbers print through repr-faithful %.17g so re-reading reproduces the
exact doubles and byte-identical reruns are possible.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np

from .geometry import Grid, RadialKahlerPotential

FMT = "%.17g"


def format_number(x) -> str:
    return FMT % float(x)


def write_csv(path, header: list[str], rows) -> None:
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_number(x) if not isinstance(x, str) else x
                              for x in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_potential_csv(path, pot: RadialKahlerPotential) -> None:
    rows = zip(pot.grid.t, pot.phi_prime, pot.phi_doubleprime)
    write_csv(path, ["t", "phi_prime", "phi_doubleprime"], rows)


def read_potential_csv(path, angle_zero: float = 1.0,
                       angle_infinity: float = 1.0) -> RadialKahlerPotential:
    path = Path(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    t = data[:, 0]
    n = t.size
    grid = Grid(float(t[0]), float(t[-1]), n)
    if not np.allclose(grid.t, t, rtol=0, atol=1e-12):
        raise ValueError(f"{path}: nodes are not a uniform symmetric grid")
    return RadialKahlerPotential(grid, data[:, 1], data[:, 2],
                                 0.0, angle_zero, angle_infinity)


def potential_manifest(pot: RadialKahlerPotential) -> dict:
    return {
        "grid": {"t_min": pot.grid.t_min, "t_max": pot.grid.t_max,
                 "n_nodes": pot.grid.n_nodes},
        "base_offset": pot.base_offset,
        "angle_at_zero": pot.angle_at_zero,
        "angle_at_infinity": pot.angle_at_infinity,
    }


def write_manifest(path, command: str, config: dict, outputs: list[str],
                   grid: Grid | None = None, seed: int | None = None,
                   wall_clock: float | None = None,
                   extra: dict | None = None) -> None:
    """Run manifest: config echo, version, outputs, timing, seed.

    The wall clock is informational; reproducibility comparisons cover the
    data files listed under "outputs".
    """
    from . import __version__
    doc = {
        "command": command,
        "config": config,
        "version": __version__,
        "outputs": sorted(outputs),
        "wall_clock_seconds": time.time() if wall_clock is None else wall_clock,
    }
    if grid is not None:
        doc["grid"] = {"t_min": grid.t_min, "t_max": grid.t_max, "n_nodes": grid.n_nodes}
    if seed is not None:
        doc["seed"] = seed
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n",
                          encoding="utf-8")


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
