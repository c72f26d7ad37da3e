"""Rotationally symmetric Kahler metrics on the Riemann sphere.

Everything is phrased in the logarithmic radial coordinate t = log|z|^2.
A metric is stored through the profile of its potential derivative
Phi'(t) (the moment coordinate, increasing from 0 to 2) and Phi''(t)
(the positive density of the area form).  In this gauge

    omega      = i Phi''(t) dz wedge dzbar / |z|^2,
    area       = 2 pi (Phi'(+T) - Phi'(-T)),
    curvature  = -(log Phi'')'' / Phi''.

All derivative stencils are second-order centered differences and all
quadrature is composite Simpson; both are validated by refinement tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import cumulative_integral, d1, d2, simpson_weights

TOTAL_MOMENT = 2.0  # Phi'(+inf) - Phi'(-inf) for the fixed degree-2 class
STANDARD_AREA = 4.0 * np.pi


@dataclass(frozen=True)
class Grid:
    """Uniform symmetric grid in t = log|z|^2 with Simpson weights."""

    t_min: float = -16.0
    t_max: float = 16.0
    n_nodes: int = 2049

    def __post_init__(self):
        if self.n_nodes < 3 or self.n_nodes % 2 == 0:
            raise ValueError("n_nodes must be odd and >= 3")
        if not self.t_max > self.t_min:
            raise ValueError("empty grid")
        if abs(self.t_min + self.t_max) > 1e-12 * max(1.0, abs(self.t_max)):
            raise ValueError("grid must be symmetric about t = 0")

    @property
    def h(self) -> float:
        return (self.t_max - self.t_min) / (self.n_nodes - 1)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.n_nodes)

    @property
    def weights(self) -> np.ndarray:
        return simpson_weights(self.n_nodes, self.h)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))

    def refine(self) -> "Grid":
        """Grid with halved spacing on the same interval."""
        return Grid(self.t_min, self.t_max, 2 * self.n_nodes - 1)

    def index_of(self, t: float) -> int:
        i = int(round((t - self.t_min) / self.h))
        if i < 0 or i >= self.n_nodes:
            raise ValueError(f"t={t} outside grid")
        return i


@dataclass
class RadialKahlerPotential:
    """Profile of a rotation-invariant Kahler potential.

    `phi_prime` and `phi_doubleprime` hold Phi'(t) and Phi''(t) per node,
    `base_offset` is the value of Phi at t_min (physical outputs never
    depend on it), and the two angle fields record the intended cone
    fractions at z = 0 and z = infinity.
    """

    grid: Grid
    phi_prime: np.ndarray
    phi_doubleprime: np.ndarray
    base_offset: float = 0.0
    angle_at_zero: float = 1.0
    angle_at_infinity: float = 1.0

    def __post_init__(self):
        self.phi_prime = np.asarray(self.phi_prime, dtype=float)
        self.phi_doubleprime = np.asarray(self.phi_doubleprime, dtype=float)
        n = self.grid.n_nodes
        if self.phi_prime.shape != (n,) or self.phi_doubleprime.shape != (n,):
            raise ValueError("profile length does not match grid")
        for a in (self.angle_at_zero, self.angle_at_infinity):
            if not 0.0 < a <= 1.0:
                raise ValueError("cone fractions must lie in (0, 1]")

    @property
    def is_positive(self) -> bool:
        return bool(np.all(self.phi_doubleprime > 0.0))

    def require_positive(self):
        if not self.is_positive:
            raise ValueError("metric positivity violated: Phi'' <= 0 somewhere")

    def values(self) -> np.ndarray:
        """Potential values Phi(t) reconstructed by cumulative quadrature."""
        return cumulative_integral(self.phi_prime, self.grid.h, self.base_offset)

    def scaled(self, c: float) -> "RadialKahlerPotential":
        """Metric scaled by c > 0 (leaves the projective class; diagnostics only)."""
        return RadialKahlerPotential(
            self.grid, c * self.phi_prime, c * self.phi_doubleprime,
            c * self.base_offset, self.angle_at_zero, self.angle_at_infinity)

    def consistency_residual(self) -> float:
        """sup |d/dt Phi' - Phi''| over interior nodes, O(h^2) for smooth data."""
        dp = d1(self.phi_prime, self.grid.h)
        return float(np.max(np.abs(dp[1:-1] - self.phi_doubleprime[1:-1])))


@dataclass(frozen=True)
class ConeConfiguration:
    """Divisor and angle data for the conic problem.

    `lam` is the degree multiplier of the divisor, `beta` the cone fraction
    and `mu` is always stored as 1 - (1 - beta) * lam (positive by
    construction).  The solver path only supports lam = 1 with the divisor
    at the two poles, the unique rotation-invariant smooth configuration.
    """

    beta: float
    lam: int = 1
    cone_points: tuple = ("zero", "infinity")

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("beta must lie in (0, 1]")
        if self.lam < 1:
            raise ValueError("lam must be a positive integer")
        if self.mu <= 0.0:
            raise ValueError("mu = 1 - (1-beta)*lam must be positive")

    @property
    def mu(self) -> float:
        return 1.0 - (1.0 - self.beta) * self.lam

    def require_solver_compatible(self):
        if self.lam != 1 or tuple(self.cone_points) != ("zero", "infinity"):
            raise ValueError("solver requires lam = 1 and cone points {0, infinity}")


# ---------------------------------------------------------------------------
# reference metrics


def _sigmoid(x: np.ndarray) -> np.ndarray:
    """e^x/(1+e^x) with full relative accuracy in both tails."""
    out = np.empty_like(np.asarray(x, dtype=float))
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def fubini_study_potential(grid: Grid) -> RadialKahlerPotential:
    """Round reference metric: Phi'(t) = 2 e^t / (1 + e^t)."""
    t = grid.t
    pp = 2.0 * _sigmoid(t)
    ppp = 2.0 * _sigmoid(t) * _sigmoid(-t)
    offset = 2.0 * np.log1p(np.exp(grid.t_min))
    return RadialKahlerPotential(grid, pp, ppp, offset, 1.0, 1.0)


def football_potential(grid: Grid, beta: float) -> RadialKahlerPotential:
    """Constant-curvature metric with equal cone fraction beta at both poles.

    Phi'(t) = 2 e^(beta t) / (1 + e^(beta t)); curvature is beta away from
    the poles and beta = 1 reproduces the round metric.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    t = grid.t
    pp = 2.0 * _sigmoid(beta * t)
    ppp = 2.0 * beta * _sigmoid(beta * t) * _sigmoid(-beta * t)
    offset = (2.0 / beta) * np.log1p(np.exp(beta * grid.t_min))
    return RadialKahlerPotential(grid, pp, ppp, offset, beta, beta)


def football_phi(grid: Grid, beta: float) -> np.ndarray:
    """Closed-form relative potential of the football against the round metric.

    (2/beta) log(1 + e^(beta t)) - 2 log(1 + e^t); bounded on the whole line
    and tending to 0 at both ends.  The additive normalization demanded by
    the twisted equations is applied separately.
    """
    t = grid.t
    return (2.0 / beta) * np.logaddexp(0.0, beta * t) - 2.0 * np.logaddexp(0.0, t)


# ---------------------------------------------------------------------------
# pointwise and integral diagnostics


def area(pot: RadialKahlerPotential) -> float:
    """Total area 2 pi (Phi'(t_max) - Phi'(t_min)); 4 pi up to truncation."""
    return float(2.0 * np.pi * (pot.phi_prime[-1] - pot.phi_prime[0]))


def gauss_curvature_profile(pot: RadialKahlerPotential) -> np.ndarray:
    """K(t) = -(log Phi'')''/Phi'' at every node, centered differences."""
    pot.require_positive()
    lg = np.log(pot.phi_doubleprime)
    return -d2(lg, pot.grid.h) / pot.phi_doubleprime


def gauss_curvature(pot: RadialKahlerPotential, t: float) -> float:
    """Curvature at the node nearest t; t must sit away from the boundary."""
    i = pot.grid.index_of(t)
    if i < 2 or i > pot.grid.n_nodes - 3:
        raise ValueError("node too close to the grid boundary")
    return float(gauss_curvature_profile(pot)[i])


def cone_angle_at_pole(pot: RadialKahlerPotential, pole: str,
                       fit_fraction: float = 0.2,
                       residual_threshold: float = 0.2) -> float:
    """Cone fraction from the asymptotic slope of log Phi''.

    A line is fitted to log Phi'' over the outer `fit_fraction` of the grid;
    the slope tends to +beta at the zero pole and -beta at infinity.  A large
    fit residual signals non-conic asymptotics and raises.
    """
    pot.require_positive()
    n = pot.grid.n_nodes
    k = max(8, int(fit_fraction * n))
    if pole == "zero":
        sl = slice(0, k)
        sign = 1.0
    elif pole == "infinity":
        sl = slice(n - k, n)
        sign = -1.0
    else:
        raise ValueError("pole must be 'zero' or 'infinity'")
    x = pot.grid.t[sl]
    y = np.log(pot.phi_doubleprime[sl])
    coeff, res = np.polyfit(x, y, 1), None
    fit = np.polyval(coeff, x)
    res = float(np.sqrt(np.mean((y - fit) ** 2)))
    if res > residual_threshold:
        raise ValueError(f"non-conic asymptotics at {pole}: fit residual {res:.3g}")
    beta = sign * float(coeff[0])
    if not 0.0 < beta <= 1.0 + 1e-6:
        raise ValueError(f"fitted cone fraction {beta:.4g} outside (0, 1]")
    return min(beta, 1.0)


def defining_section_norm(grid: Grid) -> np.ndarray:
    """Reference norm of the degree-2 section vanishing at both poles.

    ||S||_0^2(t) = 4 e^t/(1+e^t)^2, sup-normalized to 1 at t = 0.
    """
    s = 1.0 / (1.0 + np.exp(-grid.t))
    return 4.0 * s * (1.0 - s)


def log_defining_section_norm(grid: Grid) -> np.ndarray:
    """log ||S||_0^2, safe in the far tails."""
    t = grid.t
    return np.log(4.0) + t - 2.0 * np.logaddexp(0.0, t)


def ricci_potential(pot: RadialKahlerPotential, mu: float,
                    angle_zero: float | None = None) -> tuple[np.ndarray, float]:
    """Potential h with Ricci(omega) = mu*omega + cone terms + i ddbar h.

    Uses the closed-form primitive h = -log Phi'' - mu*Phi + beta0*t + c,
    valid whenever the class normalization and the angle bookkeeping
    beta0 + beta_inf = 2*mu*lam-consistency hold; c enforces
    integral of (e^h - 1) against omega equal to zero.
    Returns (h profile, normalization constant c).
    """
    pot.require_positive()
    b0 = pot.angle_at_zero if angle_zero is None else angle_zero
    t = pot.grid.t
    phi_vals = pot.values()
    raw = -np.log(pot.phi_doubleprime) - mu * phi_vals + b0 * t
    w = pot.grid.weights * pot.phi_doubleprime
    m = np.max(raw)
    c = np.log(np.dot(w, np.ones_like(raw))) - (m + np.log(np.dot(w, np.exp(raw - m))))
    return raw + c, float(c)


def ricci_potential_h0(pot0: RadialKahlerPotential) -> tuple[np.ndarray, float]:
    """Smooth-case Ricci potential: Ric(omega0) - omega0 = i ddbar h0.

    Requires a smooth input (both angles 1); the constant is fixed by the
    vanishing of the integral of (e^{h0} - 1) against omega0.
    """
    for pole in ("zero", "infinity"):
        b = cone_angle_at_pole(pot0, pole)
        if abs(b - 1.0) > 5e-2:
            raise ValueError("ricci_potential_h0 requires a smooth (angle-1) metric")
    return ricci_potential(pot0, 1.0, angle_zero=1.0)


def gauss_bonnet_defect(pot: RadialKahlerPotential) -> float:
    """4 pi minus the curvature integral plus the two cone-point deficits."""
    k = gauss_curvature_profile(pot)
    integral = pot.grid.integrate(k * pot.phi_doubleprime) * 2.0 * np.pi
    b0 = cone_angle_at_pole(pot, "zero")
    b1 = cone_angle_at_pole(pot, "infinity")
    total = integral + 2.0 * np.pi * (1.0 - b0) + 2.0 * np.pi * (1.0 - b1)
    return float(STANDARD_AREA - total)
