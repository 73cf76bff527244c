"""Non-local phase field energies with surfactant.

Discrete three-term energies on rectangular grids, constrained projected
descent, periodic-strip cell problems defining an anisotropic surface
tension, the matching sharp-interface limit functional, and the diffuse
realizations that connect the two across a scale sweep.
"""

from .cell import (
    CellProblem,
    CellSolution,
    SurfaceTensionTable,
    direction_angle,
    direction_from_angle,
    sigma_lookup,
    sigma_table,
    solve_cell,
    table_from_solutions,
)
from .energy import (
    EnergyBreakdown,
    EnergyParams,
    energy_gradient,
    inhomogeneity,
    total_energy,
    truncate,
)
from .fields import (
    BoundaryMode,
    DiscreteKernel,
    DomainError,
    Grid,
    KernelSpec,
    Potential,
    ScalarField,
    clamped,
    constant_field,
    discrete_total_variation,
    field,
    make_grid,
    open_boundary,
    periodic,
    quartic_potential,
    restrict_field,
    sample_kernel,
    table_potential,
)
from .optimize import (
    ConstraintSet,
    MinimizeOptions,
    MinimizeResult,
    grad_check,
    minimize,
)
from .recovery import (
    RecoveryConfig,
    ScanReport,
    ScanRow,
    compactness_diagnostic,
    dirac_contribution,
    epsilon_scan,
    gluing_cross_term,
    pairing_gaps,
    recovery_fields,
    scaled_cell_energy,
    sharp_step_solution,
    weak_star_pairing,
)
from .sharp import Facet, PolyhedralPhase, facet_density_from_measure, limit_energy

__all__ = [
    "BoundaryMode",
    "CellProblem",
    "CellSolution",
    "ConstraintSet",
    "DiscreteKernel",
    "DomainError",
    "EnergyBreakdown",
    "EnergyParams",
    "Facet",
    "Grid",
    "KernelSpec",
    "MinimizeOptions",
    "MinimizeResult",
    "PolyhedralPhase",
    "Potential",
    "RecoveryConfig",
    "ScalarField",
    "ScanReport",
    "ScanRow",
    "SurfaceTensionTable",
    "clamped",
    "compactness_diagnostic",
    "constant_field",
    "dirac_contribution",
    "direction_angle",
    "direction_from_angle",
    "discrete_total_variation",
    "energy_gradient",
    "epsilon_scan",
    "facet_density_from_measure",
    "field",
    "gluing_cross_term",
    "grad_check",
    "inhomogeneity",
    "limit_energy",
    "make_grid",
    "minimize",
    "open_boundary",
    "pairing_gaps",
    "periodic",
    "quartic_potential",
    "recovery_fields",
    "restrict_field",
    "sample_kernel",
    "scaled_cell_energy",
    "sharp_step_solution",
    "sigma_lookup",
    "sigma_table",
    "solve_cell",
    "table_from_solutions",
    "table_potential",
    "total_energy",
    "truncate",
    "weak_star_pairing",
]
