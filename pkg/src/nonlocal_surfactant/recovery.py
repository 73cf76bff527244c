"""Diffuse realizations of faceted configurations and limit-verification scans.

Given a strip minimizer (profile v and density d at unit scale), the diffuse
realization at scale eps places

    u_eps(x) = v((x . normal - position) / eps)
    rho_eps(x) = (1 / eps) d((x . normal - position) / eps)

tiled periodically along the facet, plus a nonnegative correction layer on
the slab 0 < (x . normal - position) <= sqrt(eps) that restores the exact
facet surfactant mass gamma_f * area_f, plus one normalized indicator ball
of radius eps^(1/(2 dim)) per point mass. The energy of this pair at scale
eps approaches sigma(normal, gamma) * area as eps decreases, which is what
epsilon_scan measures against a surface-tension table.

Exactness notes. When the evaluation grid is the strip grid scaled by eps
(same cells, extents multiplied by eps), the stencil weights coincide with
the strip's and the scaled energy equals eps^(dim-1) times the strip energy
identically; scaled_cell_energy exposes that identity. Scans instead use a
fixed independent grid, so their ratios carry genuine discretization error.

Geometry restrictions, chosen to keep the periodic tiling exact: scans and
realizations require the facet normal to be grid-axis-aligned, the facet to
span the domain laterally, and the lateral extent to be an integer number of
scaled strip periods (eps * cross_side); non-commensurate eps are rejected
rather than approximated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cell import (
    CellProblem,
    CellSolution,
    SurfaceTensionTable,
    build_strip,
    strip_rotation,
)
from .energy import EnergyBreakdown, EnergyParams, total_energy
from .fields import (
    DomainError,
    Grid,
    ScalarField,
    discrete_total_variation,
    field,
    make_grid,
    restrict_field,
    sample_kernel,
)
from .optimize import ConstraintSet, MinimizeOptions, minimize
from .sharp import Facet, PolyhedralPhase, limit_energy

__all__ = [
    "RecoveryConfig",
    "ScanRow",
    "ScanReport",
    "sharp_step_solution",
    "recovery_fields",
    "scaled_cell_energy",
    "epsilon_scan",
    "dirac_contribution",
    "gluing_cross_term",
    "pairing_gaps",
    "weak_star_pairing",
    "compactness_diagnostic",
    "TEST_FUNCTION_NAMES",
]

SCAN_COLUMNS = (
    "epsilon",
    "E_total",
    "E_potential",
    "E_exchange",
    "E_surfactant",
    "sharp_target",
    "ratio",
    "rho_mass",
    "tv_u",
)


@dataclass(frozen=True, eq=False)
class RecoveryConfig:
    """A facet, the strip minimizer realizing it, and the scan geometry."""

    facet: Facet
    cell_solution: CellSolution
    epsilons: tuple[float, ...]
    dirac_masses: tuple[tuple[tuple[float, ...], float], ...] = ()
    domain: Grid | None = None

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        if not eps:
            raise DomainError("need at least one epsilon")
        if any(e <= 0 for e in eps):
            raise DomainError("epsilons must be positive")
        if any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
            raise DomainError("epsilons must be strictly decreasing")
        object.__setattr__(self, "epsilons", eps)
        prob = self.cell_solution.problem
        if self.facet.dim != prob.dim:
            raise DomainError("facet and cell solution dimensions differ")
        if abs(self.facet.gamma - prob.gamma) > 1e-12:
            raise DomainError(
                "facet gamma must match the cell solution's load "
                f"({self.facet.gamma:g} vs {prob.gamma:g})"
            )
        if self.domain is not None and self.domain.dim != self.facet.dim:
            raise DomainError("domain dimension does not match the facet")
        # validates point-mass placement against the facet plane
        PolyhedralPhase((self.facet,), self.dirac_masses)

    @property
    def phase(self) -> PolyhedralPhase:
        return PolyhedralPhase((self.facet,), self.dirac_masses, self.domain)


def sharp_step_solution(problem: CellProblem) -> CellSolution:
    """Degenerate strip solution: a sharp step profile with zero density.

    Useful as a trivial recovery input and for isolating point-mass effects;
    no optimization is run.
    """
    setup = build_strip(problem)
    u = field(setup.grid, np.where(setup.longitudinal >= 0, 1.0, -1.0), "phase")
    rho = field(setup.grid, np.zeros(setup.grid.cells), "density")
    exact = EnergyParams(1.0, 0.0, "extended")
    breakdown = total_energy(u, rho, setup.kernel, problem.potential, exact)
    return CellSolution(
        problem,
        breakdown.total / problem.cross_measure,
        u,
        rho,
        0.0,
        breakdown,
        {"start_totals": (breakdown.total,), "spread": 0.0, "spread_flagged": False,
         "best_start": 0, "converged": (True,), "iterations": (0,),
         "residuals": (0.0,), "smoothed_total": breakdown.total},
    )


def _facet_axes(facet: Facet, grid: Grid) -> tuple[int, int]:
    """(longitudinal axis, lateral axis) for an axis-aligned facet normal."""
    n = facet.normal
    if len(n) == 1:
        return 0, -1
    for ax in (0, 1):
        if abs(abs(n[ax]) - 1.0) <= 1e-12:
            return ax, 1 - ax
    raise DomainError(
        "diffuse realizations need a grid-axis-aligned facet normal; "
        f"got {n} (anisotropy is probed through the cell problem instead)"
    )


def _strip_profile(sol: CellSolution):
    """Strip values in longitudinal-sorted layout plus geometry."""
    grid = sol.u.grid
    prob = sol.problem
    if grid.dim == 1:
        t = prob.direction[0] * grid.axis_coords(0)
        order = np.argsort(t)
        return t[order], sol.u.values[order], sol.rho.values[order]
    return grid.axis_coords(1), sol.u.values, sol.rho.values


def _sample_strip_2d(sol: CellSolution, lat: np.ndarray, lon: np.ndarray):
    """Bilinear sample of the strip fields; lateral wrap, longitudinal clamp."""
    grid = sol.u.grid
    n_lat, n_lon = grid.cells
    h_lat, h_lon = grid.spacings
    c_lat = grid.axis_coords(0)
    c_lon = grid.axis_coords(1)

    p = (lat - c_lat[0]) / h_lat
    i0 = np.floor(p).astype(np.int64)
    wi = p - i0
    i0 %= n_lat
    i1 = (i0 + 1) % n_lat

    q = np.clip((lon - c_lon[0]) / h_lon, 0.0, float(n_lon - 1))
    j0 = np.minimum(np.floor(q).astype(np.int64), n_lon - 2)
    wj = q - j0

    def take(a):
        return (
            a[i0, j0] * (1 - wi) * (1 - wj)
            + a[i1, j0] * wi * (1 - wj)
            + a[i0, j0 + 1] * (1 - wi) * wj
            + a[i1, j0 + 1] * wi * wj
        )

    return take(sol.u.values), take(sol.rho.values)


def recovery_fields(
    rc: RecoveryConfig, eps: float, include_diracs: bool = True
) -> tuple[ScalarField, ScalarField]:
    """The diffuse pair at scale eps on the configured domain grid.

    The phase profile and density are rescaled strip fields; beyond the
    scaled strip the phase is the pure value and the density zero. The
    correction layer and point-mass balls are normalized cell-count
    indicators, so the total surfactant mass equals the target mass exactly
    whenever the raw sampled mass does not overshoot it.
    """
    if rc.domain is None:
        raise DomainError("recovery fields need a domain grid")
    grid = rc.domain
    facet = rc.facet
    prob = rc.cell_solution.problem
    eps = float(eps)
    if eps <= 0:
        raise DomainError("eps must be positive")
    if eps < 4.0 * max(grid.spacings):
        raise DomainError(
            f"eps = {eps:g} is under-resolved: need at least 4 cells per eps, "
            f"grid spacing is {max(grid.spacings):g}"
        )

    lon_ax, lat_ax = _facet_axes(facet, grid)
    sign = facet.normal[lon_ax]
    coords = grid.coordinate_arrays()
    t_phys = sign * coords[lon_ax] - facet.position  # signed distance to plane
    lon = t_phys / eps

    if grid.dim == 2:
        W = grid.extents[lat_ax]
        if abs(facet.lateral_extent - W) > 1e-9:
            raise DomainError(
                f"facet extent {facet.lateral_extent:g} must span the domain "
                f"laterally ({W:g})"
            )
        period = eps * prob.cross_side
        tiles = W / period
        if abs(tiles - round(tiles)) > 1e-9:
            raise DomainError(
                f"eps = {eps:g} is not commensurate: lateral extent {W:g} "
                f"must be an integer multiple of eps * cross_side = {period:g}"
            )
        lat = coords[lat_ax] / eps
        u_vals, rho_vals = _sample_strip_2d(rc.cell_solution, lat, lon)
    else:
        t, uu, rr = _strip_profile(rc.cell_solution)
        u_vals = np.interp(lon, t, uu, left=-1.0, right=1.0)
        rho_vals = np.interp(lon, t, rr)

    rho_vals = rho_vals / eps
    outside = np.abs(lon) > prob.half_length
    u_vals = np.where(outside, np.sign(lon), u_vals)
    rho_vals = np.where(outside, 0.0, rho_vals)
    rho_vals = np.maximum(rho_vals, 0.0)

    # correction layer: restore the facet mass on the slab just past the plane
    target = facet.surfactant_mass
    if target > 0:
        sampled = float(np.sum(rho_vals)) * grid.cell_volume
        deficit = target - sampled
        if deficit > 0:
            slab = (t_phys > 0) & (t_phys <= math.sqrt(eps))
            count = int(np.sum(slab))
            if count == 0:
                raise DomainError(
                    "correction layer is empty: no cells with signed distance "
                    f"in (0, sqrt(eps) = {math.sqrt(eps):g}]"
                )
            rho_vals = rho_vals + slab * (deficit / (count * grid.cell_volume))

    if include_diracs:
        radius = eps ** (1.0 / (2.0 * grid.dim))
        for loc, mass in rc.dirac_masses:
            if mass == 0:
                continue
            dist2 = sum((c - x) ** 2 for c, x in zip(coords, loc))
            ball = dist2 <= radius * radius
            count = int(np.sum(ball))
            if count == 0:
                raise DomainError(
                    f"point-mass ball at {loc} (radius {radius:g}) covers no cell"
                )
            rho_vals = rho_vals + ball * (mass / (count * grid.cell_volume))

    return field(grid, u_vals, "phase"), field(grid, rho_vals, "density")


def scaled_cell_energy(sol: CellSolution, eps: float, delta: float = 0.0):
    """Energy of the strip minimizer transported to scale eps, with its target.

    The scaled grid keeps the strip's cells and boundary while multiplying
    extents by eps; the density is divided by eps. Returns (breakdown,
    expected) where expected = eps^(dim-1) * strip total; the two agree to
    rounding because the stencil weights coincide.
    """
    prob = sol.problem
    sgrid = sol.u.grid
    if eps <= 0:
        raise DomainError("eps must be positive")
    grid = make_grid(
        sgrid.dim,
        [e * eps for e in sgrid.extents],
        list(sgrid.cells),
        list(sgrid.boundary),
    )
    kernel = sample_kernel(prob.kernel, grid, eps, rotation=strip_rotation(prob.direction))
    u = field(grid, sol.u.values, "phase")
    rho = field(grid, sol.rho.values / eps, "density")
    params = EnergyParams(eps, delta, "extended")
    breakdown = total_energy(u, rho, kernel, prob.potential, params)
    strip_total = total_energy(
        sol.u, sol.rho, sample_kernel(prob.kernel, sgrid, 1.0,
                                      rotation=strip_rotation(prob.direction)),
        prob.potential, EnergyParams(1.0, delta, "extended"),
    ).total
    expected = eps ** (sgrid.dim - 1) * strip_total
    return breakdown, expected


@dataclass(frozen=True, eq=False)
class ScanRow:
    epsilon: float
    energy: EnergyBreakdown
    sharp_target: float
    ratio: float
    rho_mass: float
    tv_u: float
    extras: dict

    def as_csv_row(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "E_total": self.energy.total,
            "E_potential": self.energy.potential,
            "E_exchange": self.energy.exchange,
            "E_surfactant": self.energy.surfactant,
            "sharp_target": self.sharp_target,
            "ratio": self.ratio,
            "rho_mass": self.rho_mass,
            "tv_u": self.tv_u,
        }


@dataclass(frozen=True, eq=False)
class ScanReport:
    rows: tuple[ScanRow, ...]
    mode: str

    @property
    def ratios(self) -> tuple[float, ...]:
        return tuple(r.ratio for r in self.rows)


def epsilon_scan(
    rc: RecoveryConfig,
    table: SurfaceTensionTable,
    mode: str = "recovery_only",
    options: MinimizeOptions | None = None,
) -> ScanReport:
    """Evaluate the diffuse realizations against the sharp target per eps.

    recovery_only evaluates the constructed pair; minimize_each additionally
    descends from it (same box constraints, total mass matched exactly) and
    reports the minimized energies. Evaluation uses the interior domain mode
    and the exact (delta = 0) energy; point masses inflate the diffuse
    energy by O(sqrt(eps)) but never the sharp target.
    """
    if mode not in ("recovery_only", "minimize_each"):
        raise DomainError(f"unknown scan mode {mode!r}")
    if rc.domain is None:
        raise DomainError("scans need a domain grid")
    prob = rc.cell_solution.problem
    sharp_target = limit_energy(rc.phase, table)
    if sharp_target <= 0:
        raise DomainError("sharp target is not positive; nothing to compare")

    rows = []
    for eps in rc.epsilons:
        u, rho = recovery_fields(rc, eps)
        kernel = sample_kernel(prob.kernel, rc.domain, eps)
        params = EnergyParams(eps, 0.0, "interior")
        breakdown = total_energy(u, rho, kernel, prob.potential, params)
        extras = {}
        if mode == "minimize_each":
            mass = float(np.sum(rho.values)) * rc.domain.cell_volume
            constraints = ConstraintSet(mass=mass, mass_mode="exactly")
            opts = options or MinimizeOptions(max_iters=500, tol=1e-5)
            res = minimize(u, rho, kernel, prob.potential, params, constraints, opts)
            extras["recovery_energy"] = breakdown
            extras["iterations"] = res.iterations
            extras["converged"] = res.converged
            u, rho = res.u, res.rho
            breakdown = total_energy(u, rho, kernel, prob.potential, params)
        rho_mass = float(np.sum(rho.values)) * rc.domain.cell_volume
        rows.append(
            ScanRow(
                epsilon=eps,
                energy=breakdown,
                sharp_target=sharp_target,
                ratio=breakdown.total / sharp_target,
                rho_mass=rho_mass,
                tv_u=discrete_total_variation(u),
                extras=extras,
            )
        )
    return ScanReport(tuple(rows), mode)


def dirac_contribution(rc: RecoveryConfig, eps: float) -> float:
    """Energy attributable to the mollified point masses at scale eps."""
    if not rc.dirac_masses:
        return 0.0
    prob = rc.cell_solution.problem
    kernel = sample_kernel(prob.kernel, rc.domain, eps)
    params = EnergyParams(eps, 0.0, "interior")
    u, rho_with = recovery_fields(rc, eps, include_diracs=True)
    _, rho_without = recovery_fields(rc, eps, include_diracs=False)
    e_with = total_energy(u, rho_with, kernel, prob.potential, params).total
    e_without = total_energy(u, rho_without, kernel, prob.potential, params).total
    return e_with - e_without


def gluing_cross_term(rc: RecoveryConfig, eps: float) -> float:
    """Interior energy lost by evaluating on two abutting half-domains.

    The domain is split across the lateral midline (perpendicular to the
    facet); the difference counts exactly the pair interactions crossing the
    cut, a band of width O(eps) around one point of the interface, so the
    sequence decreases with eps.
    """
    if rc.domain is None or rc.domain.dim != 2:
        raise DomainError("gluing diagnostics need a 2d domain")
    prob = rc.cell_solution.problem
    _, lat_ax = _facet_axes(rc.facet, rc.domain)
    u, rho = recovery_fields(rc, eps)
    params = EnergyParams(eps, 0.0, "interior")

    def interior_energy(uf, rf):
        k = sample_kernel(prob.kernel, uf.grid, eps)
        return total_energy(uf, rf, k, prob.potential, params).total

    whole = interior_energy(u, rho)
    n = rc.domain.cells[lat_ax]
    halves = 0.0
    for lo, hi in ((0, n // 2), (n // 2, n)):
        halves += interior_energy(
            restrict_field(u, lat_ax, lo, hi), restrict_field(rho, lat_ax, lo, hi)
        )
    return whole - halves


TEST_FUNCTION_NAMES = ("one", "coordinate", "quadratic", "bump", "cosine")


def _test_functions(grid: Grid):
    """Fixed smooth test family on the grid's bounding box."""
    half = [e / 2.0 for e in grid.extents]

    def one(*x):
        return np.ones_like(x[0])

    def coordinate(*x):
        return x[0] / half[0]

    def quadratic(*x):
        s = (x[0] / half[0]) ** 2
        if len(x) > 1:
            s = s - (x[1] / half[1]) ** 2
        return s

    def bump(*x):
        r2 = sum((xi / hi) ** 2 for xi, hi in zip(x, half))
        return np.exp(-4.0 * r2)

    def cosine(*x):
        out = np.cos(0.5 * math.pi * x[0] / half[0])
        if len(x) > 1:
            out = out * np.cos(0.5 * math.pi * x[1] / half[1])
        return out

    return (one, coordinate, quadratic, bump, cosine)


def _measure_integrals(phase: PolyhedralPhase, grid: Grid, n_quad: int = 512):
    """Integral of each test function against the facet + point measure."""
    funcs = _test_functions(grid)
    totals = [0.0 for _ in funcs]
    for f in phase.facets:
        if grid.dim == 1:
            x = (f.position * f.normal[0],)
            pts = [np.array([c]) for c in x]
            weight = f.gamma * f.area
            for i, phi in enumerate(funcs):
                totals[i] += weight * float(phi(*pts)[0])
        else:
            n = np.array(f.normal)
            perp = np.array([-n[1], n[0]])
            s = (np.arange(n_quad) + 0.5) / n_quad * f.lateral_extent - f.lateral_extent / 2
            pts = [f.position * n[d] + s * perp[d] for d in range(2)]
            w = f.gamma * f.lateral_extent / n_quad
            for i, phi in enumerate(funcs):
                totals[i] += w * float(np.sum(phi(*pts)))
    for loc, mass in phase.dirac_masses:
        pts = [np.array([c]) for c in loc]
        for i, phi in enumerate(funcs):
            totals[i] += mass * float(phi(*pts)[0])
    return totals


def pairing_gaps(rho: ScalarField, target: PolyhedralPhase) -> tuple[float, ...]:
    """|sum rho phi vol - integral phi d(target)| per built-in test function."""
    grid = rho.grid
    coords = grid.coordinate_arrays()
    mu = _measure_integrals(target, grid)
    gaps = []
    for phi, m in zip(_test_functions(grid), mu):
        discrete = float(np.sum(rho.values * phi(*coords))) * grid.cell_volume
        gaps.append(abs(discrete - m))
    return tuple(gaps)


def weak_star_pairing(rho: ScalarField, target: PolyhedralPhase) -> float:
    """Largest pairing gap over the built-in test family."""
    return max(pairing_gaps(rho, target))


def compactness_diagnostic(epsilons, results) -> tuple[dict, ...]:
    """Boundedness report for a minimizer sequence: variation and mass.

    Flags compare against ten times the largest energy in the sequence; the
    report never raises, since boundedness is evidence, not a contract.
    """
    epsilons = tuple(float(e) for e in epsilons)
    results = tuple(results)
    if not results or len(epsilons) != len(results):
        raise DomainError("need one result per epsilon")
    energies = [r.energy.total for r in results]
    bound = 10.0 * max(max(energies), 1e-300)
    rows = []
    for eps, res in zip(epsilons, results):
        tv = discrete_total_variation(res.u)
        mass = float(np.sum(res.rho.values)) * res.rho.grid.cell_volume
        rows.append(
            {
                "epsilon": eps,
                "tv_u": tv,
                "rho_mass": mass,
                "energy": res.energy.total,
                "tv_bounded": bool(tv <= bound),
                "mass_bounded": bool(mass <= bound),
            }
        )
    return tuple(rows)
