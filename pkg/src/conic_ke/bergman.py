"""Section norms, Gram matrices and density-of-states diagnostics.

Degree-2l sections are spanned by the monomials z^k (k = 0..2l) and a
rotation-invariant Hermitian weight makes their Gram matrix diagonal.  All
norms are carried as logarithms: the squared norm of z^k at parameter t is
exp(k t + l w(t)) with w the log frame weight, so powers up to l = 64 stay
inside double range.  The inner product always pairs the weight with the
volume form of the same metric; no auxiliary volume forms enter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    ConeConfiguration,
    Grid,
    RadialKahlerPotential,
    football_potential,
    ricci_potential,
)
from .numerics import d1, d2, logsumexp_rows


@dataclass
class HermitianWeight:
    """Log frame weight w(t) of the metric-adapted norm on the line bundle.

    Built as e^(h/mu) (section factor)^((1-beta)/mu) (density factor) and
    rescaled so the twisted mass of the defining section is one; its
    curvature is the metric itself, checked by curvature_residual().
    """

    pot: RadialKahlerPotential
    cone: ConeConfiguration
    log_weight: np.ndarray
    log_section_scale: float

    def curvature_residual(self) -> float:
        """sup | -(log weight)'' - Phi'' | over interior nodes."""
        grid = self.pot.grid
        inner = slice(2, grid.n_nodes - 2)
        resid = -d2(self.log_weight, grid.h) - self.pot.phi_doubleprime
        return float(np.max(np.abs(resid[inner])))


def associated_hermitian_weight(pot: RadialKahlerPotential,
                                cone: ConeConfiguration) -> HermitianWeight:
    """Metric-adapted Hermitian weight on the anticanonical bundle.

    The twisted Ricci potential h, the defining-section factor and the
    determinant factor combine so the curvature of the resulting norm is
    the metric; the residual scale of the defining section is fixed by a
    unit twisted mass integral.
    """
    if cone.mu <= 0.0:
        raise ValueError("cone data must have mu > 0")
    if cone.lam != 1:
        raise ValueError("weight assembly implemented for lam = 1")
    grid = pot.grid
    mu, beta = cone.mu, cone.beta
    h, _ = ricci_potential(pot, mu, angle_zero=pot.angle_at_zero)
    log_pp = np.log(pot.phi_doubleprime)
    # unit twisted mass: integral of e^(h/mu) (c Phi'')^(1/mu) omega = 1
    expo = h / mu + log_pp / mu + log_pp
    w = grid.weights * 2.0 * np.pi
    m = expo.max()
    log_q = m + math.log(float(np.dot(w, np.exp(expo - m))))
    log_scale = -mu * log_q   # log |c_S|^2
    log_weight = h / mu + ((1.0 - beta) / mu) * (log_scale + log_pp) \
        + log_pp - grid.t
    return HermitianWeight(pot, cone, log_weight, log_scale)


@dataclass
class SectionBasisGram:
    """Diagonal Gram data of the monomial basis under a radial weight."""

    ell: int
    weight: HermitianWeight
    log_diag: np.ndarray          # log <z^k, z^k>, k = 0..2l

    @property
    def dim(self) -> int:
        return 2 * self.ell + 1

    @property
    def gram(self) -> np.ndarray:
        return np.diag(np.exp(self.log_diag))

    @property
    def orthonormal_coefficients(self) -> np.ndarray:
        """c_k with {c_k z^k} orthonormal."""
        return np.exp(-0.5 * self.log_diag)

    def log_section_norms(self) -> np.ndarray:
        """(2l+1, n) array of log ||z^k||^2(t)."""
        grid = self.weight.pot.grid
        k = np.arange(self.dim)[:, None]
        return k * grid.t[None, :] + self.ell * self.weight.log_weight[None, :]


def gram_matrix(ell: int, weight: HermitianWeight,
                pot: RadialKahlerPotential) -> SectionBasisGram:
    """Gram diagonal by radial quadrature in log space.

    Angular integration kills every off-diagonal pairing of distinct
    monomials, so only the 2l+1 diagonal entries are computed.
    """
    if ell < 1:
        raise ValueError("ell must be a positive integer")
    grid = pot.grid
    log_meas = np.log(grid.weights) + np.log(pot.phi_doubleprime) + math.log(2.0 * np.pi)
    k = np.arange(2 * ell + 1)[:, None]
    expo = k * grid.t[None, :] + ell * weight.log_weight[None, :] + log_meas[None, :]
    log_diag = logsumexp_rows(expo)
    return SectionBasisGram(ell, weight, log_diag)


@dataclass
class DensityReport:
    ell: int
    rho: np.ndarray
    inf_rho: float
    sup_rho: float
    trace_integral: float     # integral of rho against the metric volume

    def trace_defect(self) -> float:
        return abs(self.trace_integral - (2 * self.ell + 1))


def bergman_density(gram: SectionBasisGram,
                    pot: RadialKahlerPotential) -> DensityReport:
    """Density of states rho(t) = sum_k ||z^k||^2 / <z^k, z^k>."""
    grid = pot.grid
    log_norms = gram.log_section_norms() - gram.log_diag[:, None]
    log_rho = logsumexp_rows(log_norms.T)
    rho = np.exp(log_rho)
    trace = float(grid.integrate(rho * pot.phi_doubleprime) * 2.0 * np.pi)
    return DensityReport(gram.ell, rho, float(rho.min()), float(rho.max()), trace)


@dataclass
class ScanRow:
    beta: float
    ell: int
    inf_rho: float
    sup_rho: float
    trace_check: float


def partial_c0_scan(beta_list, ell_list, grid: Grid | None = None,
                    metric_for=None) -> list[ScanRow]:
    """inf/sup of the density over a (beta, ell) grid of conic metrics.

    `metric_for(beta, grid)` supplies the constant-curvature metric; the
    closed-form two-pole solution is the default.
    """
    grid = grid or Grid()
    metric_for = metric_for or (lambda b, g: football_potential(g, b))
    rows = []
    for beta in beta_list:
        pot = metric_for(beta, grid)
        cone = ConeConfiguration(beta)
        weight = associated_hermitian_weight(pot, cone)
        for ell in ell_list:
            rep = bergman_density(gram_matrix(ell, weight, pot), pot)
            rows.append(ScanRow(float(beta), int(ell), rep.inf_rho,
                                rep.sup_rho, rep.trace_integral))
    return rows


# ---------------------------------------------------------------------------
# pointwise identities for holomorphic sections


def section_profiles(gram: SectionBasisGram, k: int):
    """log ||sigma||^2, ||grad sigma||^2 and ||hess sigma||^2 profiles for
    sigma = z^k / sqrt(<z^k,z^k>).

    With u = log ||sigma||^2 the first covariant derivative has squared norm
    e^u u'^2 / Phi'' and the pure (2,0) part of the second has squared norm
    e^u (u'' + u'^2 - u' (log Phi'')')^2 / Phi''^2; the mixed part
    contributes n l^2 ||sigma||^2 exactly (curvature contraction).
    """
    pot = gram.weight.pot
    grid = pot.grid
    u = k * grid.t + gram.ell * gram.weight.log_weight - gram.log_diag[k]
    up = d1(u, grid.h)
    upp = d2(u, grid.h)
    lg = np.log(pot.phi_doubleprime)
    lgp = d1(lg, grid.h)
    pp = pot.phi_doubleprime
    norm2 = np.exp(u)
    grad2 = norm2 * up * up / pp
    hess_pure = norm2 * (upp + up * up - up * lgp) ** 2 / (pp * pp)
    hess2 = hess_pure + gram.ell ** 2 * norm2
    return u, norm2, grad2, hess2


@dataclass
class BochnerReport:
    k: int
    ell: int
    residual_first: float
    residual_second: float


def bochner_residual(k: int, pot: RadialKahlerPotential, ell: int,
                     cone: ConeConfiguration | None = None,
                     window: float | None = None) -> BochnerReport:
    """Defects of the two curvature identities for sigma = z^k.

    First:   Lap ||sigma||^2 = ||grad sigma||^2 - l ||sigma||^2.
    Second:  Lap ||grad sigma||^2
             = ||hess sigma||^2 - (3 l - mu) ||grad sigma||^2,
    the second holding when the metric is Einstein with constant mu.  Both
    sides are assembled by centered differences of the log-space norms, so
    the sups vanish at O(h^2).
    """
    cone = cone or ConeConfiguration(1.0)
    if not 0 <= k <= 2 * ell:
        raise ValueError("monomial index out of range")
    grid = pot.grid
    weight = associated_hermitian_weight(pot, cone)
    gram = gram_matrix(ell, weight, pot)
    u, norm2, grad2, hess2 = section_profiles(gram, k)
    pp = pot.phi_doubleprime
    lap_norm2 = d2(norm2, grid.h) / pp
    lap_grad2 = d2(grad2, grid.h) / pp
    r1 = lap_norm2 - (grad2 - ell * norm2)
    r2 = lap_grad2 - (hess2 - (3.0 * ell - cone.mu) * grad2)
    half = grid.t_max / 2.0 if window is None else window
    inner = np.abs(grid.t) <= half
    inner[:2] = inner[-2:] = False
    return BochnerReport(k, ell, float(np.max(np.abs(r1[inner]))),
                         float(np.max(np.abs(r2[inner]))))


def gradient_estimate_ratio(ells, pot: RadialKahlerPotential,
                            cone: ConeConfiguration | None = None) -> dict:
    """sup (||sigma|| + l^(-1/2) ||grad sigma||) / l^(1/2) over the basis.

    Sections are L2-normalized, so a bounded return across l certifies the
    dimension-free sup bound with an l-uniform constant.
    """
    cone = cone or ConeConfiguration(1.0)
    weight = associated_hermitian_weight(pot, cone)
    out = {}
    for ell in ells:
        gram = gram_matrix(ell, weight, pot)
        worst = 0.0
        for k in range(2 * ell + 1):
            _, norm2, grad2, _ = section_profiles(gram, k)
            val = float(np.max(np.sqrt(norm2) + np.sqrt(grad2 / ell)))
            worst = max(worst, val)
        out[int(ell)] = worst / math.sqrt(ell)
    return out


@dataclass
class PeakSectionReport:
    t0: float
    ell: int
    k_star: int
    value_ratio: float        # ||projection||(t0) / ||input||(t0)
    l2_residual: float        # relative L2 distance input -> holomorphic span


def peak_section_experiment(t0: float, ell: int, pot: RadialKahlerPotential,
                            cone: ConeConfiguration | None = None,
                            cutoff_width: float = 1.0) -> PeakSectionReport:
    """Project a cutoff quasi-section peaked at t0 onto the holomorphic span.

    The input is a Gaussian cutoff times the monomial whose norm peaks
    nearest t0; rotation invariance reduces the orthogonal projection to the
    single matching Gram entry.  The value ratio at t0 plays the role of the
    lower bound surviving the correction term.
    """
    cone = cone or ConeConfiguration(1.0)
    grid = pot.grid
    if abs(t0) > grid.t_max / 2.0:
        raise ValueError("t0 outside the grid core")
    weight = associated_hermitian_weight(pot, cone)
    gram = gram_matrix(ell, weight, pot)
    wp = d1(weight.log_weight, grid.h)
    i0 = grid.index_of(t0)
    k_star = int(np.clip(round(-ell * wp[i0]), 0, 2 * ell))
    u = k_star * grid.t + ell * weight.log_weight
    chi = np.exp(-0.5 * ((grid.t - t0) / cutoff_width) ** 2)
    meas = grid.weights * pot.phi_doubleprime * 2.0 * np.pi
    m = u.max()
    eu = np.exp(u - m)
    ip = float(np.dot(meas, chi * eu))          # <input, z^k> * e^-m
    gram_k = float(np.dot(meas, eu))            # <z^k, z^k> * e^-m
    input_sq = float(np.dot(meas, chi * chi * eu))
    coeff = ip / gram_k
    l2_res_sq = max(input_sq - coeff * ip, 0.0) / input_sq
    value_ratio = coeff / chi[i0]
    return PeakSectionReport(t0, ell, k_star, float(value_ratio),
                             float(math.sqrt(l2_res_sq)))
