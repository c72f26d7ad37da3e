"""Command-line batch driver.

Subcommands map one-to-one onto the library operations; every run writes
CSV data files plus a JSON manifest echoing the configuration.  Given the
same configuration (including seeds) the data files are byte-identical
across reruns.

Exit codes: 0 success, 1 invalid configuration or usage, 2 Newton
divergence, 3 metric positivity loss, 4 continuation stall.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bergman import associated_hermitian_weight, bergman_density, gram_matrix
from .cone_analysis import (
    dirichlet_energy,
    flat_cone_metric,
    loglog_cutoff,
    selection_log_delta,
    tube_volume,
    volume_ratio_profile,
)
from .functionals import f_functional
from .geometry import ConeConfiguration, Grid, football_potential, fubini_study_potential
from .io import (
    format_number,
    potential_manifest,
    read_potential_csv,
    write_csv,
    write_manifest,
    write_potential_csv,
)
from .ma_solver import (
    NewtonDiverged,
    PathStalled,
    PositivityLost,
    SolverConfig,
    continuity_path,
    smoothing_family,
    solve_ma,
)
from .stability import futaki, log_futaki, obstruction_scan

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NEWTON = 2
EXIT_POSITIVITY = 3
EXIT_STALLED = 4


def _grid_from(args) -> Grid:
    return Grid(-args.grid_T, args.grid_T, args.grid_N)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(args, skip=("func", "config", "command")) -> dict:
    return {k: v for k, v in vars(args).items()
            if k not in skip and not callable(v)}


def cmd_solve(args) -> int:
    grid = _grid_from(args)
    cone = ConeConfiguration(args.beta)
    if args.tau > cone.mu + 1e-15:
        raise ValueError(f"tau={args.tau} exceeds mu={cone.mu}")
    cfg = SolverConfig(cone, args.delta, args.tau)
    t0 = time.time()
    sol = solve_ma(cfg, grid=grid)
    out = _out_dir(args)
    write_potential_csv(out / "solution.csv", sol.potential)
    write_csv(out / "phi.csv", ["t", "phi"], zip(grid.t, sol.phi))
    write_manifest(out / "manifest.json", "solve", _echo_config(args),
                   ["solution.csv", "phi.csv"], grid=grid,
                   wall_clock=time.time() - t0,
                   extra={"potential": potential_manifest(sol.potential)})
    print(f"solve: residual={format_number(sol.residual)} "
          f"iterations={sol.iterations}")
    return EXIT_OK


def cmd_continue_path(args) -> int:
    grid = _grid_from(args)
    cone = ConeConfiguration(args.beta)
    schedule = "adaptive" if args.steps is None else int(args.steps)
    t0 = time.time()
    trace = continuity_path(cone, args.delta, schedule=schedule, grid=grid)
    out = _out_dir(args)
    outputs = ["trace.csv", "functionals.csv"]
    write_csv(out / "trace.csv",
              ["tau", "J", "F", "lambda1", "newton_iters", "residual"],
              [(s.tau, s.j_value, s.f_value, s.lambda1, s.newton_iters, s.residual)
               for s in trace.steps])
    pot0 = fubini_study_potential(grid)
    frows = []
    for k, s in enumerate(trace.steps):
        name = f"step_{k:04d}.csv"
        write_potential_csv(out / name, s.solution.potential)
        outputs.append(name)
        if s.tau >= 0.05:
            rep = f_functional(s.solution.phi, s.tau, s.solution.twist, pot0,
                               dphi=s.solution.dphi)
            frows.append((f"step{k:04d}", s.tau, args.beta, args.delta,
                          rep.j_value, rep.f_value, rep.linear_term, rep.log_term))
    write_csv(out / "functionals.csv",
              ["tag", "tau", "beta", "delta", "J", "F", "linear", "logterm"], frows)
    write_manifest(out / "manifest.json", "continue-path", _echo_config(args),
                   outputs, grid=grid, wall_clock=time.time() - t0)
    print(f"continue-path: {len(trace.steps)} steps, status {trace.status}")
    return EXIT_OK


def cmd_smooth_family(args) -> int:
    grid = _grid_from(args)
    cone = ConeConfiguration(args.beta)
    deltas = [float(x) for x in args.deltas.split(",")]
    t0 = time.time()
    rep = smoothing_family(cone, deltas, grid)
    out = _out_dir(args)
    outputs = ["family.csv"]
    write_csv(out / "family.csv",
              ["delta", "sup_distance", "core_distance"],
              zip(rep.deltas, rep.sup_distances, rep.core_distances))
    for d, sol in zip(rep.deltas, rep.solutions):
        name = f"solution_{d:.0e}.csv"
        write_potential_csv(out / name, sol.potential)
        outputs.append(name)
    write_manifest(out / "manifest.json", "smooth-family", _echo_config(args),
                   outputs, grid=grid, wall_clock=time.time() - t0)
    print(f"smooth-family: distances {[format_number(x) for x in rep.sup_distances]}")
    return EXIT_OK


def _bergman_cell(job):
    beta, ells, grid_params = job
    grid = Grid(*grid_params)
    pot = football_potential(grid, beta)
    weight = associated_hermitian_weight(pot, ConeConfiguration(beta))
    rows = []
    for ell in ells:
        rep = bergman_density(gram_matrix(ell, weight, pot), pot)
        rows.append((beta, ell, rep.inf_rho, rep.sup_rho, rep.trace_integral))
    return rows


def cmd_bergman_scan(args) -> int:
    grid = _grid_from(args)
    betas = [float(x) for x in args.betas.split(",")]
    ells = [int(x) for x in args.ells.split(",")]
    jobs = [(b, ells, (grid.t_min, grid.t_max, grid.n_nodes)) for b in betas]
    t0 = time.time()
    if args.jobs > 1:
        from multiprocessing import Pool
        with Pool(args.jobs) as pool:
            results = pool.map(_bergman_cell, jobs)
    else:
        results = [_bergman_cell(j) for j in jobs]
    rows = [row for cell in results for row in cell]
    out = _out_dir(args)
    outputs = ["scan.csv"]
    write_csv(out / "scan.csv", ["beta", "ell", "inf_rho", "sup_rho", "trace_check"], rows)
    if args.density:
        b, ell = args.density.split(":")
        pot = football_potential(grid, float(b))
        weight = associated_hermitian_weight(pot, ConeConfiguration(float(b)))
        rep = bergman_density(gram_matrix(int(ell), weight, pot), pot)
        write_csv(out / "density.csv", ["t", "rho"], zip(grid.t, rep.rho))
        outputs.append("density.csv")
    write_manifest(out / "manifest.json", "bergman-scan", _echo_config(args),
                   outputs, grid=grid, wall_clock=time.time() - t0)
    print(f"bergman-scan: {len(rows)} cells, min inf rho "
          f"{format_number(min(r[2] for r in rows))}")
    return EXIT_OK


def cmd_futaki(args) -> int:
    pot = read_potential_csv(args.metric)
    t0 = time.time()
    rep = futaki(pot)
    out = _out_dir(args)
    # conic inputs only support the theta route; the gradient column is nan
    grad = float("nan") if rep.via_gradient is None else rep.via_gradient
    disc = float("nan") if rep.discrepancy is None else rep.discrepancy
    write_csv(out / "futaki.csv",
              ["via_gradient", "via_theta", "discrepancy"],
              [(grad, rep.via_theta, disc)])
    write_manifest(out / "manifest.json", "futaki", _echo_config(args),
                   ["futaki.csv"], grid=pot.grid, wall_clock=time.time() - t0)
    print(f"futaki: via_gradient={format_number(grad)} "
          f"via_theta={format_number(rep.via_theta)}")
    return EXIT_OK


def _parse_points(pointspec: str):
    pts = []
    for item in pointspec.split(","):
        loc, w = item.split(":")
        loc = loc.strip()
        pts.append((loc if loc in ("zero", "infinity") else float(loc), float(w)))
    return pts


def cmd_log_futaki(args) -> int:
    pot = read_potential_csv(args.metric)
    out = _out_dir(args)
    t0 = time.time()
    if args.scan_config:
        doc = json.loads(Path(args.scan_config).read_text(encoding="utf-8"))
        configs = {k: [(p if p in ("zero", "infinity") else float(p), float(w))
                       for p, w in v] for k, v in doc["configs"].items()}
        rows = obstruction_scan(configs, doc["betas"], pot)
        write_csv(out / "obstruction.csv",
                  ["config_id", "beta", "log_futaki", "flag"],
                  [(r.config_id, r.beta, r.log_futaki, r.flag) for r in rows])
        outputs = ["obstruction.csv"]
        summary = f"{len(rows)} rows"
    else:
        val = log_futaki(pot, args.beta, _parse_points(args.points))
        write_csv(out / "log_futaki.csv", ["beta", "log_futaki"],
                  [(args.beta, val)])
        outputs = ["log_futaki.csv"]
        summary = format_number(val)
    write_manifest(out / "manifest.json", "log-futaki", _echo_config(args),
                   outputs, grid=pot.grid, wall_clock=time.time() - t0)
    print(f"log-futaki: {summary}")
    return EXIT_OK


def cmd_capacity(args) -> int:
    model = flat_cone_metric(args.n, args.beta_bar)
    if args.rule == "auto":
        log_delta = selection_log_delta(args.n, args.eps)
    else:
        if args.delta is None:
            raise ValueError("--rule manual requires --delta")
        log_delta = float(np.log(args.delta))
    cut = loglog_cutoff(args.eps, log_delta=log_delta)
    t0 = time.time()
    rep = dirichlet_energy(cut, model)
    out = _out_dir(args)
    write_csv(out / "capacity.csv",
              ["n", "beta_bar", "eps", "log_delta", "energy",
               "closed_form_bound", "coarea_quadrature", "coarea_closed_form"],
              [(args.n, args.beta_bar, args.eps, log_delta, rep.energy,
                rep.closed_form_bound, rep.radial_factor_quadrature,
                rep.radial_factor_coarea)])
    write_manifest(out / "manifest.json", "capacity", _echo_config(args),
                   ["capacity.csv"], wall_clock=time.time() - t0)
    print(f"capacity: energy={format_number(rep.energy)} "
          f"bound={format_number(rep.closed_form_bound)} "
          f"within_eps={rep.energy <= args.eps}")
    return EXIT_OK


def cmd_volume_scan(args) -> int:
    radii = np.linspace(args.r_min, args.r_max, args.num)
    t0 = time.time()
    out = _out_dir(args)
    if args.mode == "tube":
        kind, n, bb = args.source.split(":")
        if kind != "cone":
            raise ValueError("tube mode needs --source cone:n:beta_bar")
        a, b = (float(x) for x in args.annulus.split(":"))
        rep = tube_volume(flat_cone_metric(int(n), float(bb)), (a, b), radii)
        write_csv(out / "profile.csv", ["r", "value"], zip(rep.radii, rep.volumes))
        write_csv(out / "fit.csv", ["exponent", "constant"],
                  [(rep.exponent, rep.constant)])
        outputs = ["profile.csv", "fit.csv"]
        summary = f"exponent={format_number(rep.exponent)}"
    else:
        parts = args.source.split(":")
        if parts[0] == "cone":
            source = flat_cone_metric(int(parts[1]), float(parts[2]))
            center = "vertex"
        else:
            grid = _grid_from(args)
            source = fubini_study_potential(grid) if parts[0] == "fs" \
                else football_potential(grid, float(parts[1]))
            center = args.center
        rep = volume_ratio_profile(source, center, radii)
        write_csv(out / "profile.csv", ["r", "value"], zip(rep.radii, rep.ratios))
        write_csv(out / "fit.csv", ["angle_estimate", "monotone_defect"],
                  [(rep.angle_estimate, rep.monotone_defect)])
        outputs = ["profile.csv", "fit.csv"]
        summary = f"angle={format_number(rep.angle_estimate)}"
    write_manifest(out / "manifest.json", "volume-scan", _echo_config(args),
                   outputs, wall_clock=time.time() - t0)
    print(f"volume-scan: {summary}")
    return EXIT_OK


def _add_grid_flags(p):
    p.add_argument("--grid-T", type=float, default=16.0, dest="grid_T",
                   help="half width of the logarithmic grid (default 16)")
    p.add_argument("--grid-N", type=int, default=2049, dest="grid_N",
                   help="node count, odd (default 2049)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conic-ke",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="one twisted solve at (beta, delta, tau)")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    _add_grid_flags(p)
    p.add_argument("--out", default="out-solve")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("continue-path", help="continuation from tau = 0 to mu")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--steps", type=int, default=None,
                   help="uniform step count (default: adaptive)")
    _add_grid_flags(p)
    p.add_argument("--out", default="out-path")
    p.set_defaults(func=cmd_continue_path)

    p = sub.add_parser("smooth-family", help="solves along a decreasing delta list")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--deltas", default="1e-1,1e-2,1e-3,1e-4,1e-5")
    _add_grid_flags(p)
    p.add_argument("--out", default="out-family")
    p.set_defaults(func=cmd_smooth_family)

    p = sub.add_parser("bergman-scan", help="density-of-states floor over (beta, ell)")
    p.add_argument("--betas", default="0.6,0.65,0.7,0.75,0.8,0.85,0.9,0.95,1.0")
    p.add_argument("--ells", default="2,4,8,16")
    p.add_argument("--jobs", type=int,
                   default=int(os.environ.get("CONIC_KE_JOBS", "1")))
    p.add_argument("--density", default=None, metavar="BETA:ELL",
                   help="also write the density profile t,rho for one cell")
    _add_grid_flags(p)
    p.add_argument("--out", default="out-bergman")
    p.set_defaults(func=cmd_bergman_scan)

    p = sub.add_parser("futaki", help="obstruction integral of a stored metric")
    p.add_argument("--metric", required=True, help="potential CSV")
    p.add_argument("--out", default="out-futaki")
    p.set_defaults(func=cmd_futaki)

    p = sub.add_parser("log-futaki", help="logarithmic obstruction invariant")
    p.add_argument("--metric", required=True)
    p.add_argument("--beta", type=float, default=0.7)
    p.add_argument("--points", default="zero:1,infinity:1",
                   help="comma list location:weight (pole names or t values)")
    p.add_argument("--scan-config", default=None,
                   help="JSON with configs/betas for an obstruction table")
    p.add_argument("--out", default="out-logfutaki")
    p.set_defaults(func=cmd_log_futaki)

    p = sub.add_parser("capacity", help="doubly logarithmic cutoff energy")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--rule", choices=("auto", "manual"), default="auto")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--beta-bar", type=float, default=0.25, dest="beta_bar")
    p.add_argument("--out", default="out-capacity")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("volume-scan", help="ball-volume ratios or tube volumes")
    p.add_argument("--source", default="football:0.6",
                   help="fs | football:beta | cone:n:beta_bar")
    p.add_argument("--center", default="zero",
                   help="zero | infinity (surfaces); cones use the vertex")
    p.add_argument("--mode", choices=("ratio", "tube"), default="ratio")
    p.add_argument("--annulus", default="1:2", help="tube mode: a:b in the flat factor")
    p.add_argument("--r-min", type=float, default=0.1, dest="r_min")
    p.add_argument("--r-max", type=float, default=1.5, dest="r_max")
    p.add_argument("--num", type=int, default=24)
    _add_grid_flags(p)
    p.add_argument("--out", default="out-volume")
    p.set_defaults(func=cmd_volume_scan)

    return parser


def _merge_config_file(argv):
    """Support `--config file.json`: keys become flag defaults."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    path = argv[i + 1]
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    rest = argv[:i] + argv[i + 2:]
    extra = []
    for key, val in doc.items():
        flag = "--" + key.replace("_", "-")
        if flag in rest:
            continue
        extra.extend([flag, str(val)])
    return rest + extra


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _merge_config_file(argv)
        parser = build_parser()
        args = parser.parse_args(argv)
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NewtonDiverged as exc:
        print(f"newton diverged: {exc}", file=sys.stderr)
        return EXIT_NEWTON
    except PositivityLost as exc:
        print(f"positivity lost: {exc}", file=sys.stderr)
        return EXIT_POSITIVITY
    except PathStalled as exc:
        print(f"path stalled: {exc}", file=sys.stderr)
        return EXIT_STALLED


if __name__ == "__main__":
    sys.exit(main())
