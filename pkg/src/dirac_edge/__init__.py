"""Edge states, spectral flow and edge conductivity of the massive 2D Dirac
operator on a half-plane, for the full family of current-conserving
self-adjoint boundary conditions."""

from .params import (
    BoundaryParam,
    EnergyWindow,
    PhysParams,
    Spinor2,
    SwitchFunction,
    SwitchProfile,
    boundary_residual,
    z_from_zeta,
    zeta_from_z,
)
from .analytic import (
    GapState,
    SpectralVerdict,
    bulk_edge,
    crosses_gap,
    current_expectation,
    dispersion_slope,
    gap_condition,
    gap_eigenvalue,
    gap_state,
    k_crit,
    kappa_of,
    sigma_bulk,
    sigma_bulk_from_edge_mean,
    sigma_edge_analytic,
)
from .potentials import PerturbationSpec, PeriodicPerturbation
from .shooting import MatchResult, integrate_decaying, match_boundary, match_boundary_all, numeric_gap_state
from .lattice import FiberMatrix, Grid1D, assemble_fiber, eig_in_gap
from .flow import (
    DispersionBranch,
    FlowResult,
    recommended_k_range,
    spectral_flow,
    stability_scan,
    sweep_dispersion,
)
from .edge_current import EdgeCurrentResult, edge_current_direct, edge_current_switch
from .bloch import BlochGrid, assemble_bloch, bloch_bands, bloch_spectral_flow

__version__ = "0.1.0"
