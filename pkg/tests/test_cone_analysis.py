import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from conic_ke.cone_analysis import (
    CodimFourSubspace,
    CoverBudgetError,
    ball_cover_cutoff,
    dirichlet_energy,
    flat_cone_metric,
    loglog_cutoff,
    selection_log_delta,
    tube_volume,
    unit_ball_volume,
    volume_ratio_profile,
)
from conic_ke.geometry import football_potential, fubini_study_potential


# ---------------------------------------------------------------------------
# the model


def test_parameter_validation():
    with pytest.raises(ValueError):
        flat_cone_metric(0, 0.5)
    with pytest.raises(ValueError):
        flat_cone_metric(1, 1.5)


def test_euclidean_limit():
    m = flat_cone_metric(2, 1.0)
    for r in (0.5, 1.0, 2.0):
        assert m.vertex_ball_volume(r) == pytest.approx(
            unit_ball_volume(4) * r ** 4, rel=1e-14)


def test_cone_circumference_and_sector():
    m = flat_cone_metric(1, 0.5)
    assert m.circumference(2.0) == pytest.approx(2.0 * np.pi, rel=1e-14)
    assert m.vertex_ball_volume(3.0) == pytest.approx(np.pi * 0.5 * 9.0, rel=1e-14)


def test_unrolled_distance_examples():
    m = flat_cone_metric(1, 0.5)
    rho = 1.3
    d = m.cone_distance(rho, 0.0, rho, np.pi)
    assert d == pytest.approx(2.0 * rho * np.sin(np.pi / 4.0), rel=1e-14)


def test_distance_against_graph_oracle():
    # dense polar graph on the cone: edge lengths from the local metric
    bb = 0.6
    m = flat_cone_metric(1, bb)
    n_r, n_th = 80, 240
    radii = np.linspace(0.015, 1.2, n_r)
    thetas = np.linspace(0.0, 2.0 * np.pi, n_th, endpoint=False)

    def node(i, j):
        return i * n_th + j

    # edges carry exact short-range chord lengths (local development is
    # elementary there); rich slope stencils let the shortest path hug the
    # global chord, so the graph tests the wrap and minimization logic
    rows, cols, vals = [], [], []
    j_all = np.arange(n_th)
    for i in range(n_r):
        for di in range(0, 7):
            ii = i + di
            if ii >= n_r:
                continue
            for dj in range(-24, 25):
                if di == 0 and dj <= 0:
                    continue
                jj = (j_all + dj) % n_th
                d = m.cone_distance(radii[i], thetas[j_all], radii[ii], thetas[jj])
                rows.append(node(i, j_all))
                cols.append(node(ii, jj))
                vals.append(d)
    g = coo_matrix((np.concatenate(vals),
                    (np.concatenate(rows), np.concatenate(cols))),
                   shape=(n_r * n_th, n_r * n_th))
    dist = dijkstra(g, directed=False, indices=node(n_r - 1, 0))
    for j_target in (60, 120):
        oracle = dist[node(n_r - 1, j_target)]
        closed = m.cone_distance(radii[-1], 0.0, radii[-1], thetas[j_target])
        assert closed == pytest.approx(oracle, abs=1e-3)
        assert closed <= oracle + 1e-12  # graph paths converge from above


def test_product_distance(grid):
    m = flat_cone_metric(2, 0.7)
    p = (np.array([1.0 + 0.0j]), 0.5, 0.0)
    q = (np.array([0.0 + 0.0j]), 0.5, np.pi)
    cone_part = m.cone_distance(0.5, 0.0, 0.5, np.pi)
    assert m.distance(p, q) == pytest.approx(np.hypot(1.0, cone_part), rel=1e-12)


# ---------------------------------------------------------------------------
# the doubly logarithmic cutoff


def test_cutoff_support():
    cut = loglog_cutoff(0.1, delta=0.01)
    assert cut(np.array([0.05]))[0] == 1.0
    assert cut(np.array([0.01 * 0.1]))[0] == pytest.approx(1.0, abs=1e-12)
    assert cut(np.array([0.01 ** 3 * 0.1 / 2.0]))[0] == 0.0
    assert cut(np.array([0.0]))[0] == 0.0


def test_cutoff_range_and_monotone():
    cut = loglog_cutoff(0.2, delta=0.05)
    rho = np.geomspace(1e-8, 0.2, 500)
    vals = cut(rho)
    assert np.all((vals >= 0.0) & (vals <= 1.0))
    assert np.all(np.diff(vals) >= 0.0)


def test_cutoff_rejects_large_delta():
    with pytest.raises(ValueError):
        loglog_cutoff(0.1, delta=0.4)


@settings(max_examples=25, deadline=None)
@given(log_rho=st.floats(-20.0, -7.0))
def test_gradient_bound_sampled(log_rho):
    cut = loglog_cutoff(0.1, delta=0.01)
    rho = np.array([math.exp(log_rho)])
    assert cut.gradient_magnitude(rho)[0] <= cut.gradient_bound(rho)[0] + 1e-15


def test_gradient_bound_thousand_band_points():
    cut = loglog_cutoff(0.1, delta=0.01)
    rng = np.random.default_rng(8)
    rho = np.exp(rng.uniform(np.log(0.01 ** 3 * 0.1), np.log(0.01 * 0.1), 1000))
    assert np.all(cut.gradient_magnitude(rho) <= cut.gradient_bound(rho) + 1e-15)


def test_energy_bound_n1():
    model = flat_cone_metric(1, 0.25)
    cut = loglog_cutoff(0.1, log_delta=selection_log_delta(1, 0.1))
    rep = dirichlet_energy(cut, model)
    assert rep.bound_holds
    assert rep.energy <= 0.1
    assert rep.coarea_relative_difference() <= 1e-6


def test_energy_bound_n2():
    # a_(n-1) is the unit-disc area for n = 2
    assert unit_ball_volume(2) == pytest.approx(np.pi, rel=1e-14)
    model = flat_cone_metric(2, 0.25)
    cut = loglog_cutoff(0.2, log_delta=selection_log_delta(2, 0.2))
    rep = dirichlet_energy(cut, model)
    assert rep.bound_holds
    assert rep.energy <= 0.2
    assert rep.coarea_relative_difference() <= 1e-6


def test_energy_vanishing_rate():
    model = flat_cone_metric(1, 0.4)
    sizes = np.array([8.0, 16.0, 32.0, 64.0])
    es = [dirichlet_energy(loglog_cutoff(0.1, log_delta=-s), model).energy
          for s in sizes]
    slope = np.polyfit(np.log(sizes), np.log(es), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.05)


# ---------------------------------------------------------------------------
# ball covers


def test_single_ball_cover_energy():
    model = flat_cone_metric(2, 0.7)
    point = CodimFourSubspace(np.zeros(2), np.zeros((0, 2)))
    rep = ball_cover_cutoff(model, point, 0.1, n_samples=100_000)
    assert rep.centers.shape[0] == 1
    assert rep.budget <= 1.0
    r = 0.05
    closed = (2.0 / r) ** 2 * 0.7 * (np.pi ** 2 / 2.0) \
        * ((1.6 * r) ** 4 - (1.1 * r) ** 4)
    assert rep.energy == pytest.approx(closed, rel=1e-6)
    # energy <= C eps0 with the recorded one-ball constant
    assert rep.energy <= (closed / 0.1) * 0.1 + 1e-12


def test_cover_energy_halves():
    model = flat_cone_metric(2, 0.7)
    point = CodimFourSubspace(np.zeros(2), np.zeros((0, 2)))
    e1 = ball_cover_cutoff(model, point, 0.1, n_samples=50_000)
    e2 = ball_cover_cutoff(model, point, 0.05, n_samples=50_000)
    assert e2.energy <= 0.5 * e1.energy + 3.0 * (e1.energy_stderr + e2.energy_stderr)


def test_cover_overlap_bounded_multi_ball():
    # n = 3: the deep stratum is a 2-plane inside the flat factor
    model = flat_cone_metric(3, 0.8)
    basis = np.zeros((2, 4))
    basis[0, 0] = basis[1, 1] = 1.0
    plane = CodimFourSubspace(np.zeros(4), basis)
    rep = ball_cover_cutoff(model, plane, 0.3, region_radius=0.5, n_samples=40_000)
    assert rep.centers.shape[0] > 1
    assert rep.budget <= 1.0
    assert rep.max_overlap <= 8
    assert rep.energy > 0.0


def test_cover_budget_error():
    model = flat_cone_metric(3, 0.8)
    basis = np.zeros((2, 4))
    basis[0, 0] = basis[1, 1] = 1.0
    plane = CodimFourSubspace(np.zeros(4), basis)
    with pytest.raises(CoverBudgetError):
        ball_cover_cutoff(model, plane, 1.4, region_radius=3.0, n_samples=1000)


def test_cover_reproducible():
    model = flat_cone_metric(2, 0.7)
    point = CodimFourSubspace(np.zeros(2), np.zeros((0, 2)))
    a = ball_cover_cutoff(model, point, 0.1, n_samples=20_000, seed=5)
    b = ball_cover_cutoff(model, point, 0.1, n_samples=20_000, seed=5)
    assert a.energy == b.energy
    assert a.to_json() == b.to_json()


# ---------------------------------------------------------------------------
# volume comparison


def test_flat_cone_ratio_constant():
    m = flat_cone_metric(1, 0.5)
    rep = volume_ratio_profile(m, "vertex", np.linspace(0.1, 2.0, 15))
    assert np.max(np.abs(rep.ratios - np.pi / 2.0)) < 1e-12
    assert rep.monotone_defect <= 1e-12
    assert rep.angle_estimate == pytest.approx(0.5, abs=1e-12)


def test_football_pole_density(grid):
    fb = football_potential(grid, 0.6)
    rep = volume_ratio_profile(fb, "zero", np.linspace(0.1, 1.5, 24))
    assert rep.angle_estimate * np.pi == pytest.approx(np.pi * 0.6, rel=0.01)
    assert rep.monotone_defect <= 1e-12
    assert np.all(np.diff(rep.ratios) < 0.0)


def test_round_sphere_ratio(grid):
    rep = volume_ratio_profile(fubini_study_potential(grid), "zero",
                               np.linspace(0.1, 3.0, 30))
    assert rep.ratios.max() <= np.pi + 1e-9
    assert rep.monotone_defect <= 1e-12


def test_volume_ratio_validation(grid):
    fb = football_potential(grid, 0.6)
    with pytest.raises(ValueError):
        volume_ratio_profile(fb, "zero", [3.0, 2.0])
    with pytest.raises(ValueError):
        volume_ratio_profile(fb, "zero", [0.5, 50.0])


def test_tube_volume_quadratic():
    m = flat_cone_metric(2, 0.7)
    rep = tube_volume(m, (1.0, 2.0), np.geomspace(0.01, 0.5, 12))
    assert rep.exponent == pytest.approx(2.0, abs=0.05)
    expect = np.pi * 0.7 * (np.pi * (4.0 - 1.0))
    assert rep.constant == pytest.approx(expect, rel=1e-10)


def test_tube_volume_euclidean_constant():
    m = flat_cone_metric(2, 1.0)
    rep = tube_volume(m, (0.0, 1.0), np.geomspace(0.05, 0.5, 8))
    assert rep.constant == pytest.approx(np.pi * 1.0 * np.pi, rel=1e-10)


def test_tube_volume_scales_with_slab():
    m = flat_cone_metric(2, 0.6)
    r = np.geomspace(0.02, 0.3, 8)
    small = tube_volume(m, (1.0, 2.0), r)
    big = tube_volume(m, (1.0, 3.0), r)
    area_ratio = (9.0 - 1.0) / (4.0 - 1.0)
    assert big.constant / small.constant == pytest.approx(area_ratio, rel=1e-10)
