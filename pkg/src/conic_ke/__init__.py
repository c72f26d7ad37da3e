"""Numerical laboratory for rotationally symmetric conic constant-curvature
metrics on the Riemann sphere: continuation solves of the twisted
Monge-Ampere family, energy functionals, section-density diagnostics,
obstruction invariants, and flat-cone capacity and volume comparisons."""

__version__ = "0.1.0"

from .geometry import (
    ConeConfiguration,
    Grid,
    RadialKahlerPotential,
    area,
    cone_angle_at_pole,
    defining_section_norm,
    football_potential,
    fubini_study_potential,
    gauss_curvature,
    gauss_curvature_profile,
    ricci_potential_h0,
)
from .ma_solver import (
    ContinuationTrace,
    MASolution,
    NewtonDiverged,
    PathStalled,
    PositivityLost,
    SolverConfig,
    SolverError,
    compute_a_beta,
    compute_c_delta,
    continuity_path,
    first_eigenvalue,
    ricci_lower_bound_margin,
    smoothing_family,
    solve_ma,
    two_sided_bound_check,
)
from .functionals import (
    FunctionalReport,
    f_functional,
    j_functional,
    path_derivative_residual,
    properness_fit,
)
from .bergman import (
    SectionBasisGram,
    associated_hermitian_weight,
    bergman_density,
    bochner_residual,
    gradient_estimate_ratio,
    gram_matrix,
    partial_c0_scan,
    peak_section_experiment,
)
from .stability import (
    HamiltonianPotential,
    futaki,
    hamiltonian_theta,
    linearity_check,
    log_futaki,
    obstruction_scan,
)
from .cone_analysis import (
    CodimFourSubspace,
    FlatConeModel,
    ball_cover_cutoff,
    dirichlet_energy,
    flat_cone_metric,
    loglog_cutoff,
    selection_log_delta,
    tube_volume,
    volume_ratio_profile,
)
