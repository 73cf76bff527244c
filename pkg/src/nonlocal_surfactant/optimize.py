"""Projected gradient descent for the constrained energy.

The feasible set is a product: the phase field lives in the box [-1, 1]
componentwise with an optional mask of frozen cells, and the density lives
in the simplex-like set {rho >= 0, sum rho * vol (=|<=) mass}. Both
projections are exact Euclidean projections (clip-and-restore for the box,
water filling for the mass constraint), so the composite projection is the
product of the two.

Descent uses Armijo backtracking along the projection arc: a step t is
accepted when

    E(P(x - t g)) <= E(x) - c1 * <g, x - P(x - t g)>,

which reduces to the classical sufficient-decrease rule away from the
constraints and guarantees monotone energy for accepted iterates. The
stopping residual is the infinity norm of x - P(x - g) (unit reference
step).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .fields import DiscreteKernel, DomainError, Potential, ScalarField, field
from .energy import EnergyBreakdown, EnergyParams, energy_gradient, total_energy

__all__ = [
    "ConstraintSet",
    "MinimizeOptions",
    "MinimizeResult",
    "project_box",
    "project_density",
    "projected_descent",
    "minimize",
    "grad_check",
]

MASS_MODES = ("exactly", "at_most")
_BISECT_ITERS = 200


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    """Box bounds and frozen cells for u, nonnegativity and mass for rho.

    frozen_mask marks cells whose phase value is pinned to frozen_values
    (used for the far-field tails of strip problems). mass is the target
    total integral of rho; mode 'exactly' keeps it equal, 'at_most' caps it.
    """

    mass: float
    mass_mode: str = "exactly"
    u_min: float = -1.0
    u_max: float = 1.0
    frozen_mask: np.ndarray | None = None
    frozen_values: np.ndarray | None = None

    def __post_init__(self):
        if self.mass_mode not in MASS_MODES:
            raise DomainError(f"mass mode must be one of {MASS_MODES}")
        if not (self.mass >= 0) or not math.isfinite(self.mass):
            raise DomainError(f"mass target must be >= 0, got {self.mass}")
        if not self.u_min < self.u_max:
            raise DomainError("u_min must be below u_max")
        if (self.frozen_mask is None) != (self.frozen_values is None):
            raise DomainError("frozen_mask and frozen_values come together")
        if self.frozen_mask is not None:
            if self.frozen_mask.shape != self.frozen_values.shape:
                raise DomainError("frozen mask and values must have equal shape")


@dataclass(frozen=True)
class MinimizeOptions:
    max_iters: int = 2000
    tol: float = 1e-6
    step0: float = 1.0
    shrink: float = 0.5
    sufficient_decrease: float = 1e-4
    max_halvings: int = 60


@dataclass(frozen=True, eq=False)
class MinimizeResult:
    u: ScalarField
    rho: ScalarField
    energy: EnergyBreakdown
    converged: bool
    iterations: int
    history: tuple[float, ...]
    diagnostics: dict = dc_field(default_factory=dict)


def project_box(values: np.ndarray, constraints: ConstraintSet) -> np.ndarray:
    """Clip into [u_min, u_max], then restore frozen cells."""
    out = np.clip(values, constraints.u_min, constraints.u_max)
    if constraints.frozen_mask is not None:
        out = np.where(constraints.frozen_mask, constraints.frozen_values, out)
    return out


def project_density(values: np.ndarray, constraints: ConstraintSet, cell_volume: float) -> np.ndarray:
    """Euclidean projection onto {rho >= 0, mass (=|<=) target}.

    Water filling: the projection is max(rho - lam, 0) with the level lam
    found by bisection (fixed 200 iterations, which saturates double
    precision). With the 'at_most' mode, feasible inputs pass through with
    only the nonnegativity clip.
    """
    if cell_volume <= 0:
        raise DomainError("cell volume must be positive")
    target = constraints.mass
    clipped = np.maximum(values, 0.0)
    mass_clipped = float(np.sum(clipped)) * cell_volume
    if constraints.mass_mode == "at_most" and mass_clipped <= target:
        return clipped

    total_volume = values.size * cell_volume
    if constraints.mass_mode == "at_most":
        lo = 0.0  # mass(0) = mass_clipped > target here
    else:
        lo = min(float(np.min(values)) - target / total_volume, 0.0)
    hi = max(float(np.max(values)), lo)

    def mass_at(lam):
        return float(np.sum(np.maximum(values - lam, 0.0))) * cell_volume

    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if mass_at(mid) >= target:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    return np.maximum(values - lam, 0.0)


def _projection_for(constraints: ConstraintSet, cell_volume: float):
    def project(u_values, rho_values):
        return (
            project_box(u_values, constraints),
            project_density(rho_values, constraints, cell_volume),
        )

    return project


def projected_descent(u0, rho0, objective, gradient, project, options: MinimizeOptions):
    """Generic driver; the physics enters only through the three callables.

    objective(u, rho) -> float, gradient(u, rho) -> (gu, grho),
    project(u, rho) -> (u, rho). Returns (u, rho, converged, iterations,
    history, diagnostics). Exposed separately so tests can inject closed-form
    objectives.
    """
    u, rho = project(np.asarray(u0, dtype=np.float64), np.asarray(rho0, dtype=np.float64))
    value = objective(u, rho)
    history = [value]
    step = options.step0
    converged = False
    failure = ""
    iterations = 0
    residual = math.inf
    for iterations in range(1, options.max_iters + 1):
        gu, grho = gradient(u, rho)
        pu, prho = project(u - gu, rho - grho)
        residual = max(
            float(np.max(np.abs(u - pu))) if u.size else 0.0,
            float(np.max(np.abs(rho - prho))) if rho.size else 0.0,
        )
        if residual <= options.tol:
            converged = True
            iterations -= 1
            break

        t = step
        accepted = False
        for _ in range(options.max_halvings + 1):
            cu, crho = project(u - t * gu, rho - t * grho)
            decrease = float(np.sum(gu * (u - cu))) + float(np.sum(grho * (rho - crho)))
            cand = objective(cu, crho)
            if cand <= value - options.sufficient_decrease * decrease:
                accepted = True
                break
            t *= options.shrink
        if not accepted:
            failure = "line search exhausted"
            break
        u, rho, value = cu, crho, cand
        history.append(value)
        step = min(t * 2.0, 1e8)

    diagnostics = {
        "residual": residual,
        "final_step": step,
        "failure": failure,
    }
    return u, rho, converged, iterations, tuple(history), diagnostics


def minimize(
    u0: ScalarField,
    rho0: ScalarField,
    kernel: DiscreteKernel,
    potential: Potential,
    params: EnergyParams,
    constraints: ConstraintSet,
    options: MinimizeOptions | None = None,
) -> MinimizeResult:
    """Minimize the smoothed energy over the constraint set.

    The objective uses params.smoothing_delta throughout, so the monotone
    descent guarantee applies to the smoothed energy; evaluate the final
    fields with delta = 0 separately when the exact value is needed.
    """
    if u0.grid != rho0.grid:
        raise DomainError("u and rho live on different grids")
    options = options or MinimizeOptions()
    grid = u0.grid

    def objective(u_values, rho_values):
        return total_energy(
            field(grid, u_values, "phase"),
            field(grid, rho_values, "density"),
            kernel,
            potential,
            params,
        ).total

    def gradient(u_values, rho_values):
        return energy_gradient(
            field(grid, u_values, "phase"),
            field(grid, rho_values, "density"),
            kernel,
            potential,
            params,
        )

    project = _projection_for(constraints, grid.cell_volume)
    u_v, rho_v, converged, iterations, history, diagnostics = projected_descent(
        u0.values, rho0.values, objective, gradient, project, options
    )
    u = field(grid, u_v, "phase")
    rho = field(grid, rho_v, "density")
    breakdown = total_energy(u, rho, kernel, potential, params)
    return MinimizeResult(u, rho, breakdown, converged, iterations, history, diagnostics)


def grad_check(
    u: ScalarField,
    rho: ScalarField,
    kernel: DiscreteKernel,
    potential: Potential,
    params: EnergyParams,
    fd_step: float = 1e-6,
    n_coords: int = 64,
    seed: int = 0,
) -> float:
    """Central-difference check of the analytic gradient.

    Compares on a seeded random subsample of coordinates of both fields and
    returns the maximum error |fd - analytic| / max(|analytic|, 1): relative
    error with a unit floor, so coordinates with vanishing gradient are
    measured absolutely.
    """
    if params.smoothing_delta <= 0:
        raise DomainError("grad_check needs a positive smoothing delta")
    gu, grho = energy_gradient(u, rho, kernel, potential, params)
    n = u.values.size
    total = 2 * n
    rng = np.random.default_rng(seed)
    count = min(total, max(int(n_coords), 1))
    picks = rng.choice(total, size=count, replace=False)
    worst = 0.0
    for pick in picks:
        which, flat = divmod(int(pick), n)
        idx = np.unravel_index(flat, u.grid.cells)
        base = rho if which else u
        analytic = (grho if which else gu)[idx]
        plus = base.values.copy()
        minus = base.values.copy()
        plus[idx] += fd_step
        minus[idx] -= fd_step
        fp = field(u.grid, plus, base.kind)
        fm = field(u.grid, minus, base.kind)
        if which:
            ep = total_energy(u, fp, kernel, potential, params).total
            em = total_energy(u, fm, kernel, potential, params).total
        else:
            ep = total_energy(fp, rho, kernel, potential, params).total
            em = total_energy(fm, rho, kernel, potential, params).total
        fd = (ep - em) / (2.0 * fd_step)
        err = abs(fd - analytic) / max(abs(analytic), 1.0)
        worst = max(worst, err)
    return worst
