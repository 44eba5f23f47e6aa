"""Patch-network dispersal analysis: persistence eigenvalues, critical
advection curves, invasion region classification, and competition ODE
simulation for advective stream networks."""

from driftlab.topology import (
    BoundaryCase,
    StreamTopology,
    MovementMatrices,
    build_matrices,
    build_connection,
    validate,
)
from driftlab.spectral import (
    EigenResult,
    MinusInfinity,
    MINUS_INFINITY,
    spectral_bound,
    lambda1,
    dlambda1_dq,
    geometric_weights,
    large_diffusion_limit,
    small_diffusion_limit,
)
from driftlab.equilibrium import (
    SpeciesParams,
    EquilibriumResult,
    CoexistenceSearchResult,
    single_species_equilibrium,
    check_ordering,
    two_species_equilibrium_search,
)
from driftlab.invasion import (
    CriticalCurve,
    RegionLabel,
    InvasionReport,
    d_star,
    q_star,
    trace_invasion_curve,
    q_star_derivative,
    e1_stability,
    q2_star,
    lambda1_star,
    classify_point,
)
from driftlab.dynamics import (
    CompetitionScenario,
    Trajectory,
    Outcome,
    rhs_single,
    rhs_competition,
    simulate_single,
    simulate_competition,
    detect_outcome,
    bistability_probe,
    k_order_check,
)

__version__ = "0.1.0"
