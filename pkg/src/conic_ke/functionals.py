"""Energy functionals of the twisted Monge-Ampere family.

J is the Aubin-type gradient energy, F its Lagrangian

    F_tau(phi) = J(phi) - (1/V) int phi omega0
                 - (1/tau) log( (1/V) int e^(h - tau phi) omega0 ),

with h the twist exponent used by the solver.  All integrals are grid
Simpson sums against the round reference density, so the algebraic
identities (vanishing on constants, the on-path reduction) hold to
rounding and not merely to quadrature order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import RadialKahlerPotential
from .numerics import d1


def j_functional(phi: np.ndarray, pot0: RadialKahlerPotential,
                 dphi: np.ndarray | None = None) -> float:
    """Gradient energy J = (1/(2V)) int i d(phi) wedge dbar(phi).

    Radially this is (pi/V) int phi'(t)^2 dt; `dphi` may supply an accurate
    derivative profile, otherwise centered differences of `phi` are used.
    """
    grid = pot0.grid
    dp = d1(np.asarray(phi, dtype=float), grid.h) if dphi is None else dphi
    v_ref = grid.integrate(pot0.phi_doubleprime)  # V / (2 pi)
    return float(grid.integrate(dp * dp) / (2.0 * v_ref))


@dataclass
class FunctionalReport:
    j_value: float
    f_value: float
    linear_term: float      # (1/V) int phi omega0
    log_term: float         # log of the normalized twisted volume
    tau: float
    beta: float
    delta: float | None     # None marks the genuinely conic weight

    def assembly_residual(self) -> float:
        """Internal consistency F = J - linear - log/tau, exact to rounding."""
        return abs(self.f_value
                   - (self.j_value - self.linear_term - self.log_term / self.tau))


def f_functional(phi: np.ndarray, tau: float, weight,
                 pot0: RadialKahlerPotential, beta: float | None = None,
                 delta: float | None = None,
                 dphi: np.ndarray | None = None) -> FunctionalReport:
    """Full Lagrangian report at parameter tau > 0.

    `weight` is either the twist exponent h on the grid (constant included)
    or a solver TwistData object; the latter also supplies the exact tail
    masses beyond the truncation so that the algebraic identities (zero on
    constants, the on-path reduction) hold at rounding level.  tau = 0 is
    rejected since the log term is undefined as written.
    """
    if tau <= 0.0:
        raise ValueError("f_functional requires tau > 0")
    phi = np.asarray(phi, dtype=float)
    grid = pot0.grid
    w = grid.weights * pot0.phi_doubleprime
    if hasattr(weight, "log_weight"):
        twist = weight
        log_weight = twist.log_weight
        beta = twist.beta if beta is None else beta
        if delta is None:
            delta = twist.delta if twist.delta > 0.0 else None
        tw_l, tw_r = twist.tail_weighted_left, twist.tail_weighted_right
        tp_l, tp_r = twist.tail_plain_left, twist.tail_plain_right
    else:
        log_weight = np.asarray(weight, dtype=float)
        tw_l = tw_r = tp_l = tp_r = 0.0
    v_ref = w.sum() + tp_l + tp_r
    jv = j_functional(phi, pot0, dphi=dphi)
    linear = float((np.dot(w, phi) + phi[0] * tp_l + phi[-1] * tp_r) / v_ref)
    expo = log_weight - tau * phi
    m = expo.max()
    twisted = math.exp(m) * float(np.dot(w, np.exp(expo - m))) \
        + math.exp(-tau * phi[0]) * tw_l + math.exp(-tau * phi[-1]) * tw_r
    log_term = float(np.log(twisted / v_ref))
    fv = jv - linear - log_term / tau
    return FunctionalReport(jv, fv, linear, log_term, tau,
                            beta if beta is not None else 1.0, delta)


@dataclass
class PathDerivativeReport:
    taus: np.ndarray
    onpath_residuals: np.ndarray     # |F_full - (J - linear)| where tau >= tau_floor
    onpath_taus: np.ndarray
    fd_vs_formula: np.ndarray        # relative residual at interior steps
    orthogonality: np.ndarray        # |mean_omega(phi + tau dphi/dtau)| forward FD

    def max_onpath(self) -> float:
        return float(self.onpath_residuals.max()) if self.onpath_residuals.size else 0.0

    def max_fd(self) -> float:
        return float(self.fd_vs_formula.max()) if self.fd_vs_formula.size else 0.0


def path_derivative_residual(trace, pot0: RadialKahlerPotential,
                             tau_floor: float = 0.05) -> PathDerivativeReport:
    """Check the variational identities along a continuation trace.

    (a) on-path reduction F = J - (1/V) int phi omega0 at every step with
        tau >= tau_floor (the log term is ill-conditioned below it);
    (b) centered differences of F along tau against the closed derivative
        (1/(tau V)) int phi omega_phi, as a relative residual;
    (c) the differentiated-equation orthogonality
        int (phi + tau dphi/dtau) omega_phi = 0 with a forward difference
        for dphi/dtau, so the residual is first order in the step.
    """
    steps = trace.steps
    if len(steps) < 5:
        raise ValueError("trace too short: need at least 5 steps")
    grid = pot0.grid
    w0 = grid.weights * pot0.phi_doubleprime
    v_ref = w0.sum()
    taus = np.array([s.tau for s in steps])
    f_onpath = np.array([s.f_value for s in steps])

    onpath_res, onpath_taus = [], []
    for s in steps:
        if s.tau >= tau_floor:
            rep = f_functional(s.solution.phi, s.tau, s.solution.twist,
                               pot0, dphi=s.solution.dphi)
            onpath_res.append(abs(rep.f_value - s.f_value))
            onpath_taus.append(s.tau)

    def twisted_mean(s):
        # mean of phi against the solved metric, tail masses included
        tw = s.solution.twist
        tau = s.solution.config.tau
        phi = s.solution.phi
        wphi = grid.weights * s.solution.metric_density
        v_full = v_ref + tw.tail_plain_left + tw.tail_plain_right
        tails = math.exp(-tau * phi[0]) * tw.tail_weighted_left * phi[0] \
            + math.exp(-tau * phi[-1]) * tw.tail_weighted_right * phi[-1]
        return float((np.dot(wphi, phi) + tails) / v_full)

    fd_res = []
    for k in range(1, len(steps) - 1):
        if taus[k] < tau_floor:
            continue
        dm = taus[k] - taus[k - 1]
        dp = taus[k + 1] - taus[k]
        # three-point derivative on a possibly nonuniform schedule
        fd = (f_onpath[k + 1] * dm / dp - f_onpath[k - 1] * dp / dm
              + f_onpath[k] * (dp / dm - dm / dp)) / (dm + dp)
        formula = twisted_mean(steps[k]) / taus[k]
        fd_res.append(abs(fd - formula) / max(abs(formula), 1e-14))

    orth = []
    # k = 0 is excluded: the identity expresses the equation's own constant
    # fixing, which only applies for tau > 0 (the tau = 0 gauge is mean zero
    # against the reference volume instead).
    for k in range(1, len(steps) - 1):
        dtau = taus[k + 1] - taus[k]
        phidot = (steps[k + 1].solution.phi - steps[k].solution.phi) / dtau
        s = steps[k].solution
        tw = s.twist
        test = s.phi + taus[k] * phidot
        wphi = grid.weights * s.metric_density
        tails = math.exp(-taus[k] * s.phi[0]) * tw.tail_weighted_left * test[0] \
            + math.exp(-taus[k] * s.phi[-1]) * tw.tail_weighted_right * test[-1]
        v_full = v_ref + tw.tail_plain_left + tw.tail_plain_right
        orth.append(abs(float((np.dot(wphi, test) + tails) / v_full)))

    return PathDerivativeReport(taus, np.array(onpath_res), np.array(onpath_taus),
                                np.array(fd_res), np.array(orth))


@dataclass
class PropernessFit:
    epsilon: float
    c_epsilon: float
    detected: bool


def properness_fit(samples, grid_resolution: float = 0.01) -> PropernessFit:
    """Largest linear coercivity slope supported by (J, F) samples.

    For each epsilon on the grid the smallest admissible constant is
    C_eps = max(eps J - F).  A slope is accepted only when that maximum is
    not driven by the largest-J tail of the sample (otherwise enlarging the
    family would push the constant to infinity and no properness is
    detected); epsilon = 0 with detected=False flags that situation.
    """
    pts = [(float(j), float(f)) for j, f in samples]
    if len(pts) < 10:
        raise ValueError("need at least 10 samples")
    jj = np.array([p[0] for p in pts])
    ff = np.array([p[1] for p in pts])
    if np.log10(max(jj.max(), 1e-300) / max(jj[jj > 0].min() if np.any(jj > 0) else 1.0,
                                            1e-300)) < 2.0 and jj.max() > 0:
        raise ValueError("samples must span at least two decades of J")
    j_max = jj.max()
    if j_max <= 0.0:
        return PropernessFit(1.0, float(np.max(-ff)), True)
    tail = jj >= j_max / np.sqrt(10.0)
    if np.all(tail):
        raise ValueError("no samples below the top half-decade of J")
    eps_grid = np.round(np.arange(grid_resolution, 1.0 + 1e-9, grid_resolution), 10)
    for eps in eps_grid[::-1]:
        vals = eps * jj - ff
        slack = 1e-9 * (1.0 + np.abs(vals).max())
        if vals[tail].max() <= vals[~tail].max() + slack:
            return PropernessFit(float(eps), float(vals.max()), True)
    return PropernessFit(0.0, float((-ff).max()), False)
