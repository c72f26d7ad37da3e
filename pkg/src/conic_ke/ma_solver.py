"""Radial Monge-Ampere solver and continuation machinery.

The twisted equation solved here, written for the relative potential
phi = Phi - Phi0 against the round reference metric, is

    phi''(t) = Phi0''(t) * ( W(t) exp(-tau * phi) - 1 ),

where W = exp(h) is the twist density: either the genuinely conic weight
||S||_0^(-2(1-beta)) e^(a_beta) or its delta-smoothing
(delta + ||S||_0^2)^(-(1-beta)) e^(c_delta), both normalized so the twisted
volume of the whole sphere equals the reference volume.

Discretization: Numerov compact fourth-order stencil in the interior with
tail-matched Robin closures at the truncation boundary.  The closures use
the exact semi-infinite integrals of the known tail data together with a
first-order model of the potential's tail decay, leaving a truncation error
of third order in the tail mass.  The damped Newton iteration keeps the
system tridiagonal throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.linalg import eigh_tridiagonal, solve_banded

from .functionals import j_functional
from .geometry import (
    ConeConfiguration,
    Grid,
    RadialKahlerPotential,
    _sigmoid,
    fubini_study_potential,
    log_defining_section_norm,
)
from .numerics import cumulative_integral, d2


class SolverError(RuntimeError):
    """Base class for solver failures."""


class NewtonDiverged(SolverError):
    """Damped Newton could not reduce the residual within its budget."""


class PositivityLost(SolverError):
    """An iterate left the cone of positive metrics and could not recover."""


class PathStalled(SolverError):
    """Continuation step fell below the minimum step size."""

    def __init__(self, message, last_tau, trace=None):
        super().__init__(message)
        self.last_tau = last_tau
        self.trace = trace


# ---------------------------------------------------------------------------
# twist densities


def _log_reference_density(t):
    """log Phi0'' for the round reference metric, scalar or array, stable."""
    return np.log(2.0) + t - 2.0 * np.logaddexp(0.0, t)


def _log_section_norm(t):
    """log ||S||_0^2 at parameter t (scalar or array)."""
    return np.log(4.0) + t - 2.0 * np.logaddexp(0.0, t)


def _closure_quadrature_weights(grid: Grid) -> np.ndarray:
    """Node weights of the quadrature induced by the discrete system.

    Summing the interior Numerov rows and the closure rows (the exact left
    null of the tau = 0 operator) integrates the source with these weights;
    they equal the end-corrected trapezoid rule and are fourth order.
    Normalizing the twist against this rule plus the tail integrals makes
    the tau = 0 system compatible to rounding.
    """
    w = np.full(grid.n_nodes, grid.h)
    w[0] = w[-1] = grid.h * 5.0 / 12.0
    w[1] = w[-2] = grid.h * 13.0 / 12.0
    return w


def _normalized_constant(grid: Grid, raw_log_weight: np.ndarray, tail_integrand) -> float:
    """Constant c with full-line integral of Phi0''(e^(raw+c) - 1) equal zero."""
    p0 = fubini_study_potential(grid).phi_doubleprime
    w = _closure_quadrature_weights(grid) * p0
    m = raw_log_weight.max()
    weighted = math.exp(m) * float(np.dot(w, np.exp(raw_log_weight - m)))
    tail_w_l, _ = quad(tail_integrand, -np.inf, grid.t_min, epsabs=1e-15, epsrel=1e-13)
    tail_w_r, _ = quad(tail_integrand, grid.t_max, np.inf, epsabs=1e-15, epsrel=1e-13)
    plain = float(w.sum()) + 2.0 * float(_sigmoid(np.array([grid.t_min]))[0]) \
        + 2.0 * float(_sigmoid(np.array([-grid.t_max]))[0])
    return float(np.log(plain) - np.log(weighted + tail_w_l + tail_w_r))


def compute_a_beta(beta: float, grid: Grid) -> float:
    """Normalizing constant of the conic twist.

    Unique a with  integral of (||S||_0^(-2(1-beta)) e^a - 1) omega0 = 0,
    the integral taken over the whole sphere (grid rule plus exact tails).
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    raw = -(1.0 - beta) * log_defining_section_norm(grid)

    def integrand(s):
        return math.exp(_log_reference_density(s) - (1.0 - beta) * _log_section_norm(s))

    return _normalized_constant(grid, raw, integrand)


def compute_c_delta(beta: float, delta: float, grid: Grid) -> float:
    """Normalizing constant of the delta-smoothed twist (delta > 0)."""
    if delta <= 0.0:
        raise ValueError("compute_c_delta needs delta > 0")
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    raw = -(1.0 - beta) * np.log(delta + np.exp(log_defining_section_norm(grid)))

    def integrand(s):
        return math.exp(_log_reference_density(s)
                        - (1.0 - beta) * math.log(delta + math.exp(_log_section_norm(s))))

    return _normalized_constant(grid, raw, integrand)


@dataclass(frozen=True)
class TwistData:
    """Twist density W = e^h on the grid plus its exact tail integrals.

    The correction integrals weight the tail by the relative potential's
    modeled decay profile; they upgrade the Robin closure from a constant
    tail potential to a first-order one.
    """

    grid: Grid
    beta: float
    delta: float
    constant: float           # a_beta (delta = 0) or c_delta (delta > 0)
    log_weight: np.ndarray    # h(t) per node, constant included
    tail_weighted_left: float   # integral of Phi0'' e^h over (-inf, t_min]
    tail_weighted_right: float  # integral of Phi0'' e^h over [t_max, +inf)
    tail_plain_left: float      # integral of Phi0'' over (-inf, t_min]
    tail_plain_right: float     # integral of Phi0'' over [t_max, +inf)
    tail_correction_left: float
    tail_correction_right: float


def build_twist(grid: Grid, beta: float, delta: float) -> TwistData:
    """Assemble the twist density and its semi-infinite tail integrals."""
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    if delta == 0.0:
        const = compute_a_beta(beta, grid)
        logw = -(1.0 - beta) * log_defining_section_norm(grid) + const

        def integrand(s):
            return math.exp(_log_reference_density(s)
                            - (1.0 - beta) * _log_section_norm(s) + const)
    else:
        const = compute_c_delta(beta, delta, grid)
        logw = -(1.0 - beta) * np.log(delta + np.exp(log_defining_section_norm(grid))) + const

        def integrand(s):
            return math.exp(_log_reference_density(s)
                            - (1.0 - beta) * math.log(delta + math.exp(_log_section_norm(s)))
                            + const)

    left, _ = quad(integrand, -np.inf, grid.t_min, epsabs=1e-14, epsrel=1e-12)
    right, _ = quad(integrand, grid.t_max, np.inf, epsabs=1e-14, epsrel=1e-12)
    plain_left = 2.0 * float(_sigmoid(np.array([grid.t_min]))[0])
    plain_right = 2.0 * float(_sigmoid(np.array([-grid.t_max]))[0])
    rate = beta if delta == 0.0 else 1.0  # decay rate of phi' in the tails
    corr_left, _ = quad(
        lambda s: integrand(s) * (1.0 - math.exp(rate * (s - grid.t_min))) / rate,
        -np.inf, grid.t_min, epsabs=1e-14, epsrel=1e-12)
    corr_right, _ = quad(
        lambda s: integrand(s) * (1.0 - math.exp(-rate * (s - grid.t_max))) / rate,
        grid.t_max, np.inf, epsabs=1e-14, epsrel=1e-12)
    return TwistData(grid, beta, delta, const, logw, left, right,
                     plain_left, plain_right, corr_left, corr_right)


# ---------------------------------------------------------------------------
# solver configuration and result


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of one twisted solve."""

    cone: ConeConfiguration
    delta: float
    tau: float
    newton_max_iter: int = 50
    newton_tol: float = 1e-11
    damping: float = 0.5
    max_halvings: int = 8
    # The symmetric two-pole configuration keeps a residual dilation freedom
    # at the conic endpoint tau = mu (the rotation field is tangent to the
    # divisor), so iterates are projected onto even profiles to select the
    # centered representative.  Disable to explore the solution family.
    symmetrize: bool = True

    def __post_init__(self):
        self.cone.require_solver_compatible()
        if self.delta < 0.0:
            raise ValueError("delta must be nonnegative")
        if not 0.0 <= self.tau <= self.cone.mu + 1e-15:
            raise ValueError("tau must lie in [0, mu]")


@dataclass
class MASolution:
    """Solved twisted equation at one (beta, delta, tau)."""

    config: SolverConfig
    twist: TwistData
    phi: np.ndarray
    dphi: np.ndarray
    residual: float
    iterations: int

    @property
    def grid(self) -> Grid:
        return self.twist.grid

    @property
    def metric_density(self) -> np.ndarray:
        """Phi''(t), evaluated through the equation (exact at the solution)."""
        p0 = fubini_study_potential(self.grid).phi_doubleprime
        return p0 * np.exp(self.twist.log_weight - self.config.tau * self.phi)

    @property
    def potential(self) -> RadialKahlerPotential:
        base = fubini_study_potential(self.grid)
        beta = self.config.cone.beta
        conic = self.config.delta == 0.0 and beta < 1.0
        ang = beta if conic else 1.0
        return RadialKahlerPotential(
            self.grid,
            base.phi_prime + self.dphi,
            self.metric_density,
            base.base_offset + self.phi[0],
            ang, ang)


def _residual(phi, tau, twist, p0, h):
    """Numerov interior rows plus Taylor-corrected Robin closure rows.

    The two-point closure derivative (phi1 - phi0)/h - h (f0/3 + f1/6)
    approximates phi'(t_min) to O(h^3) and, unlike wider one-sided stencils,
    telescopes exactly against the interior stencil, so the tau = 0 system
    is discretely compatible.
    """
    w = np.exp(twist.log_weight - tau * phi)
    f = p0 * (w - 1.0)
    r = np.empty_like(phi)
    r[1:-1] = (phi[:-2] - 2.0 * phi[1:-1] + phi[2:]) / (h * h) \
        - (f[:-2] + 10.0 * f[1:-1] + f[2:]) / 12.0
    el = math.exp(-tau * phi[0])
    er = math.exp(-tau * phi[-1])
    dl = (phi[1] - phi[0]) / h - h * (f[0] / 3.0 + f[1] / 6.0)
    dr = (phi[-1] - phi[-2]) / h + h * (f[-1] / 3.0 + f[-2] / 6.0)
    r[0] = dl * (1.0 - tau * el * twist.tail_correction_left) \
        - (el * twist.tail_weighted_left - twist.tail_plain_left)
    r[-1] = dr * (1.0 - tau * er * twist.tail_correction_right) \
        + (er * twist.tail_weighted_right - twist.tail_plain_right)
    return r


def _jacobian_banded(phi, tau, twist, p0, h):
    """Tridiagonal Jacobian of the residual (solve_banded layout (1,1))."""
    n = phi.size
    w = np.exp(twist.log_weight - tau * phi)
    f = p0 * (w - 1.0)
    g = tau * p0 * w
    ab = np.zeros((3, n))
    inv_h2 = 1.0 / (h * h)
    ab[0, 2:] = inv_h2 + g[2:] / 12.0          # A[i, i+1]
    ab[1, 1:-1] = -2.0 * inv_h2 + 10.0 * g[1:-1] / 12.0
    ab[2, :-2] = inv_h2 + g[:-2] / 12.0        # A[i, i-1]
    # left closure row
    el = math.exp(-tau * phi[0])
    fac_l = 1.0 - tau * el * twist.tail_correction_left
    dl = (phi[1] - phi[0]) / h - h * (f[0] / 3.0 + f[1] / 6.0)
    ab[1, 0] = (-1.0 / h + h * g[0] / 3.0) * fac_l \
        + dl * tau * tau * el * twist.tail_correction_left \
        + tau * el * twist.tail_weighted_left
    ab[0, 1] = (1.0 / h + h * g[1] / 6.0) * fac_l
    # right closure row
    er = math.exp(-tau * phi[-1])
    fac_r = 1.0 - tau * er * twist.tail_correction_right
    dr = (phi[-1] - phi[-2]) / h + h * (f[-1] / 3.0 + f[-2] / 6.0)
    ab[1, -1] = (1.0 / h - h * g[-1] / 3.0) * fac_r \
        + dr * tau * tau * er * twist.tail_correction_right \
        - tau * er * twist.tail_weighted_right
    ab[2, -2] = (-1.0 / h - h * g[-2] / 6.0) * fac_r
    return ab


def _implied_density(phi, p0, h):
    """Phi'' of an iterate read through the plain difference stencil."""
    return p0 + d2(phi, h)


def _solve_linear_mean_zero(twist, p0, grid):
    """Calabi-Yau step tau = 0: one banded solve with the mean-zero gauge.

    The Numerov system is singular along constants; the middle row is
    replaced by a pin, the solution shifted to reference-mean zero, and the
    residual of the full untouched system reported.
    """
    h = grid.h
    n = grid.n_nodes
    tau = 0.0
    phi0 = np.zeros(n)
    r = _residual(phi0, tau, twist, p0, h)
    ab = _jacobian_banded(phi0, tau, twist, p0, h)
    mid = n // 2
    # pin row `mid`: A[mid, mid] = 1, neighbors zero
    ab[1, mid] = 1.0
    ab[0, mid + 1] = 0.0
    ab[2, mid - 1] = 0.0
    rhs = -r
    rhs[mid] = 0.0
    phi = solve_banded((1, 1), ab, rhs)
    w = grid.weights * p0
    phi -= np.dot(w, phi) / w.sum()
    res = _residual(phi, tau, twist, p0, h)
    return phi, float(np.max(np.abs(res)))


def solve_ma(cfg: SolverConfig, guess: RadialKahlerPotential | np.ndarray | None = None,
             grid: Grid | None = None, twist: TwistData | None = None) -> MASolution:
    """Damped-Newton solve of the radial twisted equation.

    `guess` may be a relative-potential array, a RadialKahlerPotential whose
    density seeds phi through the equation, or None for the flat start.
    tau = 0 short-circuits to a single constrained linear solve.
    """
    if grid is None:
        grid = guess.grid if isinstance(guess, RadialKahlerPotential) else Grid()
    if twist is None:
        twist = build_twist(grid, cfg.cone.beta, cfg.delta)
    p0 = fubini_study_potential(grid).phi_doubleprime
    h = grid.h

    def project(v):
        return 0.5 * (v + v[::-1]) if cfg.symmetrize else v

    if cfg.tau == 0.0:
        phi, res = _solve_linear_mean_zero(twist, p0, grid)
        phi = project(phi)
        res = float(np.max(np.abs(_residual(phi, 0.0, twist, p0, h))))
        iters = 0
    else:
        if guess is None:
            phi = np.zeros(grid.n_nodes)
        elif isinstance(guess, RadialKahlerPotential):
            guess.require_positive()
            phi = (twist.log_weight
                   - np.log(guess.phi_doubleprime / p0)) / cfg.tau
        else:
            phi = np.array(guess, dtype=float)
        phi = project(phi)
        if not np.all(_implied_density(phi, p0, h) > 0.0):
            raise PositivityLost("initial guess is not a positive metric")

        res = float(np.max(np.abs(_residual(phi, cfg.tau, twist, p0, h))))
        iters = 0
        while res > cfg.newton_tol:
            if iters >= cfg.newton_max_iter:
                raise NewtonDiverged(
                    f"no convergence in {cfg.newton_max_iter} iterations "
                    f"(residual {res:.3e})")
            ab = _jacobian_banded(phi, cfg.tau, twist, p0, h)
            step = solve_banded((1, 1), ab, -_residual(phi, cfg.tau, twist, p0, h))
            alpha = 1.0
            accepted = False
            positivity_blocked = False
            for _ in range(cfg.max_halvings + 1):
                trial = project(phi + alpha * step)
                if not np.all(_implied_density(trial, p0, h) > 0.0):
                    positivity_blocked = True
                    alpha *= cfg.damping
                    continue
                trial_res = float(np.max(np.abs(_residual(trial, cfg.tau, twist, p0, h))))
                if trial_res < res:
                    phi, res = trial, trial_res
                    accepted = True
                    break
                alpha *= cfg.damping
            if not accepted:
                if positivity_blocked:
                    raise PositivityLost(
                        "metric positivity lost and damping budget exhausted")
                raise NewtonDiverged(
                    f"damping budget exhausted at residual {res:.3e}")
            iters += 1

    el = math.exp(-cfg.tau * phi[0])
    dphi_left = (el * twist.tail_weighted_left - twist.tail_plain_left) \
        / (1.0 - cfg.tau * el * twist.tail_correction_left)
    density = p0 * np.exp(twist.log_weight - cfg.tau * phi)
    dphi = cumulative_integral(density - p0, h, dphi_left)
    return MASolution(cfg, twist, phi, dphi, res, iters)


# ---------------------------------------------------------------------------
# eigenvalue gap


def first_eigenvalue(pot: RadialKahlerPotential, modes=(0, 1, 2),
                     n_lowest: int = 3) -> tuple[float, dict]:
    """Smallest nonzero eigenvalue of the metric Laplacian.

    Per angular mode m the generalized pencil -(f'' - (m^2/4) f) = lam Phi'' f
    is reduced to a symmetric tridiagonal problem (Neumann closure for m = 0
    with its constant zero mode discarded, Dirichlet for m >= 1) and the
    lowest eigenvalues extracted by bisection.
    """
    pot.require_positive()
    h = pot.grid.h
    n = pot.grid.n_nodes
    per_mode: dict[int, float] = {}
    for m in modes:
        if m == 0:
            # symmetric Neumann closure: boundary rows carry half weight
            diag = np.full(n, 2.0 / h**2)
            diag[0] = diag[-1] = 1.0 / h**2
            off = np.full(n - 1, -1.0 / h**2)
            mass = pot.phi_doubleprime.copy()
            mass[0] *= 0.5
            mass[-1] *= 0.5
            k_drop = 1  # discard the constant zero mode
        else:
            diag = np.full(n - 2, 2.0 / h**2 + m * m / 4.0)
            off = np.full(n - 3, -1.0 / h**2)
            mass = pot.phi_doubleprime[1:-1]
            k_drop = 0
        scale = 1.0 / np.sqrt(mass)
        d_sym = diag * scale * scale
        e_sym = off * scale[:-1] * scale[1:]
        vals = eigh_tridiagonal(d_sym, e_sym, eigvals_only=True,
                                select="i", select_range=(0, k_drop + n_lowest - 1))
        per_mode[m] = float(vals[k_drop])
    return min(per_mode.values()), per_mode


# ---------------------------------------------------------------------------
# continuation


@dataclass
class TraceStep:
    tau: float
    solution: MASolution
    j_value: float
    f_value: float              # on-path value J - mean(phi)
    lambda1: float
    lambda1_per_mode: dict
    newton_iters: int
    residual: float


@dataclass
class ContinuationTrace:
    cone: ConeConfiguration
    delta: float
    steps: list[TraceStep] = field(default_factory=list)
    status: str = "incomplete"

    @property
    def taus(self) -> np.ndarray:
        return np.array([s.tau for s in self.steps])

    def validate(self, tol: float = 1e-11):
        taus = self.taus
        if np.any(np.diff(taus) <= 0.0):
            raise ValueError("tau must be strictly increasing along the trace")
        if self.status == "complete":
            if taus[0] != 0.0 or abs(taus[-1] - self.cone.mu) > 1e-14:
                raise ValueError("complete traces must run from 0 to mu")
        bad = [s.tau for s in self.steps if s.residual > tol]
        if bad:
            raise ValueError(f"stored solutions above residual tolerance at tau={bad}")


def _trace_step(tau, sol, pot0, eigen_modes) -> TraceStep:
    grid = sol.grid
    tw = sol.twist
    w = grid.weights * pot0.phi_doubleprime
    jv = j_functional(sol.phi, pot0, dphi=sol.dphi)
    v_ref = w.sum() + tw.tail_plain_left + tw.tail_plain_right
    linear = float((np.dot(w, sol.phi) + sol.phi[0] * tw.tail_plain_left
                    + sol.phi[-1] * tw.tail_plain_right) / v_ref)
    lam_min, per_mode = first_eigenvalue(sol.potential, modes=eigen_modes)
    return TraceStep(tau, sol, jv, jv - linear, lam_min, per_mode,
                     sol.iterations, sol.residual)


def continuity_path(cone: ConeConfiguration, delta: float,
                    schedule: str | int | np.ndarray = "adaptive",
                    grid: Grid | None = None,
                    eigen_modes=(0, 1, 2),
                    min_step: float = 1e-5,
                    newton_tol: float = 1e-11) -> ContinuationTrace:
    """Continuation in tau from the volume-normalized start to tau = mu.

    `schedule` is "adaptive" (step mu/20, doubling after three easy steps,
    halving on Newton failure down to `min_step`), an integer requesting that
    many uniform steps, or an explicit increasing array of tau values ending
    at mu.  Each accepted step records functional values, the spectral gap
    per angular mode and the Newton work.
    """
    cone.require_solver_compatible()
    if delta <= 0.0 and cone.beta < 0.3:
        raise ValueError("delta = 0 requires beta >= 0.3 for a well-conditioned path")
    grid = grid or Grid()
    mu = cone.mu
    twist = build_twist(grid, cone.beta, delta)
    pot0 = fubini_study_potential(grid)
    trace = ContinuationTrace(cone, delta)

    def solve_at(tau, guess):
        cfg = SolverConfig(cone, delta, tau, newton_tol=newton_tol)
        return solve_ma(cfg, guess=guess, grid=grid, twist=twist)

    sol = solve_at(0.0, None)
    trace.steps.append(_trace_step(0.0, sol, pot0, eigen_modes))

    if isinstance(schedule, str):
        if schedule != "adaptive":
            raise ValueError("schedule must be 'adaptive', an int, or an array")
        targets = None
        dtau = mu / 20.0
    elif isinstance(schedule, (int, np.integer)):
        targets = np.linspace(0.0, mu, int(schedule) + 1)[1:]
    else:
        targets = np.asarray(schedule, dtype=float)
        if targets.ndim != 1 or np.any(np.diff(targets) <= 0) or abs(targets[-1] - mu) > 1e-12:
            raise ValueError("explicit schedule must increase to mu")

    prev_phi = None
    prev_tau = 0.0

    def predictor(tau_next):
        cur = trace.steps[-1].solution.phi
        if prev_phi is None or tau_next == trace.steps[-1].tau:
            return cur.copy()
        span = trace.steps[-1].tau - prev_tau
        if span <= 0:
            return cur.copy()
        slope = (cur - prev_phi) / span
        return cur + slope * (tau_next - trace.steps[-1].tau)

    if targets is not None:
        for tau in targets:
            guess = predictor(tau)
            sol = solve_at(float(tau), guess)
            prev_phi = trace.steps[-1].solution.phi
            prev_tau = trace.steps[-1].tau
            trace.steps.append(_trace_step(float(tau), sol, pot0, eigen_modes))
        trace.status = "complete"
        return trace

    easy_streak = 0
    tau = 0.0
    while tau < mu - 1e-14:
        tau_next = min(tau + dtau, mu)
        guess = predictor(tau_next)
        try:
            sol = solve_at(tau_next, guess)
        except SolverError:
            dtau *= 0.5
            if dtau < min_step:
                trace.status = f"stalled at tau={tau:.6g}"
                raise PathStalled(f"minimum step reached at tau={tau:.6g}", tau, trace)
            continue
        prev_phi = trace.steps[-1].solution.phi
        prev_tau = trace.steps[-1].tau
        trace.steps.append(_trace_step(tau_next, sol, pot0, eigen_modes))
        tau = tau_next
        easy_streak = easy_streak + 1 if sol.iterations <= 5 else 0
        if easy_streak >= 3:
            dtau = min(2.0 * dtau, mu / 8.0)
            easy_streak = 0
    trace.status = "complete"
    return trace


# ---------------------------------------------------------------------------
# smoothing family and its diagnostics


@dataclass
class SmoothingReport:
    cone: ConeConfiguration
    deltas: list
    solutions: list            # MASolution per delta, same order
    conic_solution: MASolution
    sup_distances: np.ndarray
    core_distances: np.ndarray

    def distances_monotone(self) -> bool:
        return bool(np.all(np.diff(self.sup_distances) < 0.0))


def smoothing_family(cone: ConeConfiguration, delta_list,
                     grid: Grid | None = None) -> SmoothingReport:
    """Solve at tau = mu for each delta and compare against the conic limit.

    Distances are sup |phi_delta - phi_0| on the full grid and on the core
    |t| <= T/2; the deltas must be positive and decreasing.
    """
    deltas = list(delta_list)
    if any(d <= 0 for d in deltas) or any(a <= b for a, b in zip(deltas, deltas[1:])):
        raise ValueError("delta_list must be positive and strictly decreasing")
    grid = grid or Grid()
    mu = cone.mu
    conic = solve_ma(SolverConfig(cone, 0.0, mu), grid=grid)
    core = np.abs(grid.t) <= grid.t_max / 2.0
    sols, sup_d, core_d = [], [], []
    guess = None
    for d in deltas:
        sol = solve_ma(SolverConfig(cone, d, mu), guess=guess, grid=grid)
        sols.append(sol)
        diff = np.abs(sol.phi - conic.phi)
        sup_d.append(float(diff.max()))
        core_d.append(float(diff[core].max()))
        guess = sol.phi
    return SmoothingReport(cone, deltas, sols, conic,
                           np.array(sup_d), np.array(core_d))


@dataclass
class RicciMarginReport:
    margin_formula: np.ndarray   # three-term expression, manifestly >= 0
    margin_curvature: np.ndarray # -(log Phi'')'' - mu Phi'' from the solution
    min_margin: float
    discrepancy: float           # sup |formula - curvature| over the interior


def ricci_lower_bound_margin(solution: MASolution) -> RicciMarginReport:
    """Pointwise excess of Ric(omega_delta) over mu omega_delta, two routes.

    Route (a) differentiates the solved profile; route (b) evaluates the
    closed three-term expression in the smoothing parameter.  The reported
    minimum uses route (b) (route (a) carries the O(h^2) stencil error and
    is returned for the refinement cross-check).
    """
    cfg = solution.config
    if abs(cfg.tau - cfg.cone.mu) > 1e-12:
        raise ValueError("margin is defined for solutions at tau = mu")
    grid = solution.grid
    beta, delta, lam = cfg.cone.beta, cfg.delta, cfg.cone.lam
    mu = cfg.cone.mu
    p0 = fubini_study_potential(grid).phi_doubleprime
    u = np.exp(log_defining_section_norm(grid))
    t = grid.t
    w_prime = (1.0 - np.exp(t)) / (1.0 + np.exp(t))  # d/dt log ||S||_0^2
    formula = delta * (1.0 - beta) * lam * p0 / (delta + u) \
        + delta * (1.0 - beta) * u * w_prime**2 / (delta + u) ** 2
    density = solution.metric_density
    curv = -d2(np.log(density), grid.h) - mu * density
    inner = slice(2, grid.n_nodes - 2)
    return RicciMarginReport(
        formula, curv,
        float(formula.min()),
        float(np.max(np.abs(formula[inner] - curv[inner]))))


@dataclass
class TwoSidedBounds:
    lower_constant: float    # C  with  C^{-1} omega0 <= omega_delta
    upper_constant: float    # C' with  omega_delta <= C' (delta+||S||^2)^{-(1-beta)} omega0
    argmin_t: float          # where omega_delta/omega0 is smallest


def two_sided_bound_check(report: SmoothingReport) -> TwoSidedBounds:
    """Smallest constants realizing the two-sided metric comparison."""
    grid = report.conic_solution.grid
    p0 = fubini_study_potential(grid).phi_doubleprime
    u = np.exp(log_defining_section_norm(grid))
    beta = report.cone.beta
    lower = -np.inf
    upper = -np.inf
    argmin_t = 0.0
    best_ratio = np.inf
    for sol, d in zip(report.solutions, report.deltas):
        ratio = sol.metric_density / p0
        lower = max(lower, float((1.0 / ratio).max()))
        i = int(np.argmin(ratio))
        if ratio[i] < best_ratio:
            best_ratio = float(ratio[i])
            argmin_t = float(grid.t[i])
        upper = max(upper, float((ratio * (d + u) ** (1.0 - beta)).max()))
    return TwoSidedBounds(lower, upper, argmin_t)
