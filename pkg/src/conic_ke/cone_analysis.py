"""Flat product cones, capacity cutoffs and volume comparison diagnostics.

The model space is C^(n-1) x C_bb where C_bb is the two-dimensional cone
d rho^2 + bb^2 rho^2 d theta^2 of total angle 2 pi bb.  Points are
(z', rho, theta) with z' in C^(n-1); distances in the cone factor come
from unrolling to a planar sector, and all volumes follow the product
measure (Lebesgue) x (bb rho d rho d theta).

Capacity integrals exploit the product structure: the angular and flat
factors are integrated in closed form and only the radial factor is
quadratured, in the coordinate s = -log(rho / scale) so the doubly
logarithmic bands survive arbitrarily small cutoff parameters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .geometry import RadialKahlerPotential, cone_angle_at_pole
from .numerics import cumulative_integral, simpson_weights

LOG3 = math.log(3.0)


def unit_ball_volume(dim: int) -> float:
    """Volume of the unit ball in R^dim (dim = 0 gives 1)."""
    return math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0)


@dataclass(frozen=True)
class FlatConeModel:
    """Product of flat space with a two-dimensional cone of fraction beta_bar."""

    n: int
    beta_bar: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not 0.0 < self.beta_bar <= 1.0:
            raise ValueError("beta_bar must lie in (0, 1]")

    def cone_distance(self, rho1, theta1, rho2, theta2):
        """Geodesic distance in the cone factor by sector unrolling."""
        dth = np.abs(np.asarray(theta1) - np.asarray(theta2)) % (2.0 * np.pi)
        dth = np.minimum(dth, 2.0 * np.pi - dth)
        ang = self.beta_bar * dth
        return np.sqrt(np.maximum(
            np.asarray(rho1) ** 2 + np.asarray(rho2) ** 2
            - 2.0 * np.asarray(rho1) * np.asarray(rho2) * np.cos(ang), 0.0))

    def distance(self, p, q) -> float:
        """Product distance between points (z', rho, theta)."""
        z1, r1, th1 = p
        z2, r2, th2 = q
        flat = np.linalg.norm(np.asarray(z1, dtype=complex) - np.asarray(z2, dtype=complex))
        return float(np.hypot(flat, self.cone_distance(r1, th1, r2, th2)))

    def vertex_ball_volume(self, r: float) -> float:
        """Volume of B_r about a point on the singular axis (closed form)."""
        return self.beta_bar * unit_ball_volume(2 * self.n) * r ** (2 * self.n)

    def circumference(self, r: float) -> float:
        return 2.0 * np.pi * self.beta_bar * r


def flat_cone_metric(n: int, beta_bar: float) -> FlatConeModel:
    """Construct the product cone model (validates the parameter ranges)."""
    return FlatConeModel(n, beta_bar)


# ---------------------------------------------------------------------------
# doubly logarithmic cutoff and its energy


@dataclass(frozen=True)
class LogLogCutoff:
    """Radial cutoff gamma(rho) = ramp(log(-log(rho/eps_bar))).

    Vanishes for rho <= delta^3 eps_bar, equals one for rho >= delta
    eps_bar, with |grad gamma| <= 1/(rho (-log(rho/eps_bar))).  The ramp is
    the piecewise-linear profile of slope 1/log 3, so the stated gradient
    bound holds with margin.  delta is carried through its logarithm: the
    selection rule can push delta below the smallest positive double.
    """

    eps_bar: float
    log_delta: float

    def __post_init__(self):
        if self.eps_bar <= 0.0:
            raise ValueError("eps_bar must be positive")
        if self.log_delta >= math.log(1.0 / 3.0):
            raise ValueError("delta must be smaller than 1/3")

    @property
    def delta(self) -> float:
        return math.exp(self.log_delta)

    @property
    def band_s(self) -> tuple[float, float]:
        """Support of the gradient in s = -log(rho/eps_bar)."""
        return -self.log_delta, -3.0 * self.log_delta

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        pos = rho > 0.0
        s = np.full_like(rho, np.inf)
        s[pos] = -np.log(rho[pos] / self.eps_bar)
        s1, s2 = self.band_s
        # ramp linearly in log s over a window of width log 3
        with np.errstate(divide="ignore", invalid="ignore"):
            val = (math.log(s2) - np.log(np.maximum(s, 1e-300))) / LOG3
        out = np.clip(val, 0.0, 1.0)
        out[s <= 0.0] = 1.0
        out[~pos] = 0.0
        return out

    def gradient_magnitude(self, rho):
        """|d gamma / d rho|, supported on the gradient band."""
        rho = np.asarray(rho, dtype=float)
        s1, s2 = self.band_s
        out = np.zeros_like(rho)
        pos = rho > 0.0
        s = np.where(pos, -np.log(np.where(pos, rho, 1.0) / self.eps_bar), np.inf)
        band = (s > s1) & (s < s2)
        # the ramp runs linearly in log(-log(rho/eps_bar)) over a window of
        # width log 3, so the chain rule gives slope (1/log 3)/(rho s)
        out[band] = (1.0 / LOG3) / (rho[band] * s[band])
        return out

    def gradient_bound(self, rho):
        """The stated envelope 1/(rho (-log(rho/eps_bar)))."""
        rho = np.asarray(rho, dtype=float)
        s = -np.log(rho / self.eps_bar)
        return 1.0 / (rho * s)


def loglog_cutoff(eps_bar: float, delta: float | None = None,
                  log_delta: float | None = None) -> LogLogCutoff:
    """Cutoff from the band parameter delta < 1/3 (or its log directly)."""
    if (delta is None) == (log_delta is None):
        raise ValueError("give exactly one of delta, log_delta")
    ld = math.log(delta) if delta is not None else float(log_delta)
    return LogLogCutoff(eps_bar, ld)


def selection_log_delta(n: int, eps_bar: float, margin: float = 1.0) -> float:
    """log delta from the band-selection rule a_(n-1) <= eps^(2n-1) (-log delta)."""
    a = unit_ball_volume(2 * n - 2)
    return -margin * a / eps_bar ** (2 * n - 1)


@dataclass
class CutoffEnergyReport:
    energy: float
    closed_form_bound: float       # a_(n-1) / (eps^(2n-2) (-log delta))
    bound_holds: bool
    radial_factor_quadrature: float
    radial_factor_coarea: float    # closed-form reorganization of the band integral

    def coarea_relative_difference(self) -> float:
        return abs(self.radial_factor_quadrature - self.radial_factor_coarea) \
            / abs(self.radial_factor_coarea)


def dirichlet_energy(cutoff: LogLogCutoff, model: FlatConeModel,
                     region_radius: float | None = None,
                     n_radial: int = 4097) -> CutoffEnergyReport:
    """Energy of the cutoff gradient over the ball of radius 1/eps_bar.

    Product quadrature: the angular factor 2 pi bb and the flat-slice ball
    volume are closed form; the radial band integral runs in the
    logarithmic coordinate.  The co-area reorganization of the same band
    integral is returned as a cross-check.
    """
    R = 1.0 / cutoff.eps_bar if region_radius is None else region_radius
    s1, s2 = cutoff.band_s
    s = np.linspace(s1, s2, n_radial if n_radial % 2 == 1 else n_radial + 1)
    w = simpson_weights(s.size, s[1] - s[0])
    rho_sq = np.exp(np.maximum(2.0 * (math.log(cutoff.eps_bar) - s), -745.0))
    slice_vol = unit_ball_volume(2 * model.n - 2) \
        * np.maximum(R * R - rho_sq, 0.0) ** (model.n - 1)
    # |grad gamma|^2 rho drho = (1/log3)^2 / (rho^2 s^2) * rho * (rho ds)
    radial_quad = float(np.dot(w, (1.0 / LOG3) ** 2 / (s * s)))
    # the same integral evaluated through the co-area closed form
    radial_coarea = (1.0 / LOG3) ** 2 * (1.0 / s1 - 1.0 / s2)
    energy = 2.0 * np.pi * model.beta_bar \
        * float(np.dot(w, (1.0 / LOG3) ** 2 / (s * s) * slice_vol))
    bound = unit_ball_volume(2 * model.n - 2) / (cutoff.eps_bar ** (2 * model.n - 2) * s1)
    return CutoffEnergyReport(energy, bound, energy <= bound,
                              radial_quad, radial_coarea)


# ---------------------------------------------------------------------------
# ball covers of deeper singular strata


@dataclass(frozen=True)
class CodimFourSubspace:
    """Affine subspace of the flat factor, of real codimension two there
    (total codimension four in the model); the deeper singular stratum."""

    offset: np.ndarray            # shape (2n-2,), real coordinates of the flat factor
    basis: np.ndarray             # shape (d, 2n-2), orthonormal rows, d = 2n-4

    def points_near(self, radius: float, spacing: float) -> np.ndarray:
        """Lattice of points of the subspace covering its ball of `radius`."""
        d = self.basis.shape[0]
        if d == 0:
            return self.offset[None, :]
        m = int(math.ceil(radius / spacing))
        axes = [np.arange(-m, m + 1) * spacing for _ in range(d)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        mesh = mesh[np.linalg.norm(mesh, axis=1) <= radius + spacing]
        return self.offset[None, :] + mesh @ self.basis


def _ramp(t):
    """Appendix ramp: 0 for t <= 1.1, 1 for t >= 1.6, slope 2 between."""
    return np.clip((np.asarray(t, dtype=float) - 1.1) / 0.5, 0.0, 1.0)


class CoverBudgetError(RuntimeError):
    """The radius budget sum r_a^(2n-3) <= 1 cannot be met at this eps0."""


@dataclass
class BallCoverReport:
    model: FlatConeModel
    centers: np.ndarray           # (l, 2n-2) flat-factor coordinates, rho = 0
    radius: float
    budget: float                 # sum of r_a^(2n-3)
    max_overlap: int
    energy: float
    energy_stderr: float
    seed: int

    def chi(self, zflat: np.ndarray, rho: np.ndarray) -> np.ndarray:
        """Product cutoff at points given by flat coordinates and rho."""
        d2 = rho.astype(float) ** 2
        val = np.ones(zflat.shape[0])
        for c in self.centers:
            dist = np.sqrt(np.sum((zflat - c[None, :]) ** 2, axis=1) + d2)
            val = val * _ramp(dist / self.radius)
        return val

    def to_json(self) -> str:
        return json.dumps({
            "n": self.model.n,
            "beta_bar": self.model.beta_bar,
            "radius": self.radius,
            "centers": self.centers.tolist(),
            "budget": self.budget,
            "max_overlap": self.max_overlap,
            "energy": self.energy,
            "energy_stderr": self.energy_stderr,
            "seed": self.seed,
        }, sort_keys=True)


def ball_cover_cutoff(model: FlatConeModel, singular: CodimFourSubspace,
                      eps0: float, region_radius: float = 1.0,
                      n_samples: int = 200_000, seed: int = 20240,
                      ) -> BallCoverReport:
    """Cover the deep stratum by small balls and bound the cutoff energy.

    Ball radii are eps0/2 (so diameters stay below eps0), centers sit on a
    lattice of the affine stratum with disjoint half-balls, and the product
    cutoff ramps between 1.1 and 1.6 radii.  The gradient energy over the
    shells is estimated by seeded Monte Carlo in the product measure; the
    standard error is reported alongside.
    """
    if model.n < 2:
        raise ValueError("ball covers need n >= 2")
    r = eps0 / 2.0
    centers = singular.points_near(region_radius, 1.4 * r)
    budget = centers.shape[0] * r ** (2 * model.n - 3)
    if budget > 1.0:
        raise CoverBudgetError(
            f"sum r^(2n-3) = {budget:.3g} exceeds 1; decrease eps0 or the region")
    report = BallCoverReport(model, centers, r, budget, 0, 0.0, 0.0, seed)

    rng = np.random.default_rng(seed)
    dim_flat = 2 * model.n - 2
    shell_lo, shell_hi = 1.1 * r, 1.6 * r
    # sample each shell in Euclideanized coordinates; the cone measure is
    # beta_bar times Lebesgue on the (rho, theta) plane
    vol_shell = model.beta_bar * unit_ball_volume(2 * model.n) \
        * (shell_hi ** (2 * model.n) - shell_lo ** (2 * model.n))
    contributions = []
    overlaps = []
    per_ball = max(1000, n_samples // max(len(centers), 1))
    for c in centers:
        u = rng.normal(size=(per_ball, 2 * model.n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        radii = (rng.uniform(shell_lo ** (2 * model.n), shell_hi ** (2 * model.n),
                             per_ball)) ** (1.0 / (2 * model.n))
        pts = u * radii[:, None]
        zflat = pts[:, :dim_flat] + c[None, :]
        rho = np.sqrt(pts[:, dim_flat] ** 2 + pts[:, dim_flat + 1] ** 2)
        # gradient of the product cutoff: sum over balls of the ramp slope
        # times the distance gradient, the other factors evaluated pointwise
        grad = np.zeros((per_ball, dim_flat + 1))
        chi_each = []
        for cc in centers:
            diff = zflat - cc[None, :]
            dist = np.sqrt(np.sum(diff ** 2, axis=1) + rho ** 2)
            chi_each.append(_ramp(dist / r))
        chi_each = np.array(chi_each)
        count_active = np.sum((chi_each > 0.0) & (chi_each < 1.0), axis=0)
        overlaps.append(int(count_active.max()) if count_active.size else 0)
        for idx, cc in enumerate(centers):
            diff = zflat - cc[None, :]
            dist = np.sqrt(np.sum(diff ** 2, axis=1) + rho ** 2)
            on = (dist > shell_lo) & (dist < shell_hi)
            if not np.any(on):
                continue
            others = np.prod(np.delete(chi_each, idx, axis=0), axis=0) \
                if len(centers) > 1 else np.ones(per_ball)
            slope = (2.0 / r) * others
            direction = np.concatenate([diff, rho[:, None]], axis=1) \
                / np.maximum(dist, 1e-300)[:, None]
            grad[on] += slope[on, None] * direction[on]
        gsq = np.sum(grad ** 2, axis=1)
        # correct multiple counting of overlapping shells
        mult = np.maximum(np.sum((chi_each > 0.0) & (chi_each < 1.0), axis=0), 1)
        vals = gsq / mult
        contributions.append((vol_shell * np.mean(vals),
                              vol_shell * np.std(vals) / math.sqrt(per_ball)))
    energy = float(sum(c for c, _ in contributions))
    stderr = float(math.sqrt(sum(s * s for _, s in contributions)))
    report.energy = energy
    report.energy_stderr = stderr
    report.max_overlap = max(overlaps) if overlaps else 0
    return report


# ---------------------------------------------------------------------------
# volume comparison


@dataclass
class VolumeRatioReport:
    radii: np.ndarray
    ratios: np.ndarray            # Vol(B_r)/r^(2n)
    monotone_defect: float        # largest increase between consecutive radii
    angle_estimate: float | None  # from the smallest radii, when centered on a pole


def volume_ratio_profile(source, center, r_list) -> VolumeRatioReport:
    """Ball-volume ratios Vol(B_r)/r^(2n) around a center.

    For flat cones the center is 'vertex' (closed-form sector volumes).
    For surface profiles the center is the pole 'zero' or 'infinity'; the
    geodesic radius is inverted through the arclength integral and the
    enclosed area through the moment coordinate.  The small-radius limit of
    ratio/pi estimates the cone fraction.
    """
    r = np.asarray(list(r_list), dtype=float)
    if r.ndim != 1 or r.size < 2 or np.any(np.diff(r) <= 0) or r[0] <= 0:
        raise ValueError("r_list must be increasing and positive")
    if isinstance(source, FlatConeModel):
        if center != "vertex":
            raise ValueError("flat-cone profiles are centered at the vertex")
        ratios = np.array([source.vertex_ball_volume(x) / x ** (2 * source.n)
                           for x in r])
        angle = float(np.mean(ratios[:3]) / unit_ball_volume(2 * source.n))
    elif isinstance(source, RadialKahlerPotential):
        pot = source
        grid = pot.grid
        if center not in ("zero", "infinity"):
            raise ValueError("surface profiles are centered at a pole")
        pp = pot.phi_doubleprime if center == "zero" else pot.phi_doubleprime[::-1]
        prime = pot.phi_prime if center == "zero" else 2.0 - pot.phi_prime[::-1]
        beta_fit = cone_angle_at_pole(pot, center)
        # geodesic distance from the pole: arclength plus the conic tail
        # beyond the truncation, where sqrt(Phi'') decays at rate beta/2
        speed = np.sqrt(pp / 2.0)
        tail = speed[0] * 2.0 / beta_fit
        dist = cumulative_integral(speed, grid.h, tail)
        area = 2.0 * np.pi * prime
        if np.any(r > dist[-1]):
            raise ValueError("radius exceeds the grid range")
        # invert r -> t and read the area in log space: both quantities are
        # exponential near the pole, so log-linear interpolation is sharp
        tr = np.interp(np.log(r), np.log(dist), grid.t)
        vol = np.exp(np.interp(tr, grid.t, np.log(area)))
        ratios = vol / r ** 2
        angle = float(np.mean(ratios[:3]) / np.pi)
    else:
        raise TypeError("source must be a FlatConeModel or RadialKahlerPotential")
    inc = np.diff(ratios)
    return VolumeRatioReport(r, ratios, float(max(inc.max(), 0.0)) if inc.size else 0.0,
                             angle)


@dataclass
class TubeVolumeReport:
    radii: np.ndarray
    volumes: np.ndarray
    exponent: float               # least-squares slope of log V against log r
    constant: float               # fitted C with V ~ C r^2


def tube_volume(model: FlatConeModel, flat_annulus: tuple[float, float],
                r_list, n_radial: int = 2049) -> TubeVolumeReport:
    """Volume of the tube around the singular axis inside a compact slab.

    The compact set is {a <= |z'| <= b} in the flat factor; the tube of
    radius r adds the cone disc of area pi bb r^2, integrated numerically
    in rho.  The fitted exponent must come out quadratic.
    """
    if model.n < 2:
        raise ValueError("tube volumes need n >= 2")
    a, b = flat_annulus
    if not 0.0 <= a < b:
        raise ValueError("bad annulus")
    r = np.asarray(list(r_list), dtype=float)
    if np.any(r <= 0):
        raise ValueError("radii must be positive")
    dim = 2 * model.n - 2
    flat_vol = unit_ball_volume(dim) * (b ** dim - a ** dim)
    vols = []
    for x in r:
        rho = np.linspace(0.0, x, n_radial)
        w = simpson_weights(n_radial, rho[1] - rho[0])
        disc = 2.0 * np.pi * model.beta_bar * float(np.dot(w, rho))
        vols.append(flat_vol * disc)
    vols = np.array(vols)
    slope, logc = np.polyfit(np.log(r), np.log(vols), 1)
    return TubeVolumeReport(r, vols, float(slope), float(np.exp(logc)))
