"""Periodic-strip cell problems and the direction/load surface-tension table.

A cell problem poses the unit-scale (eps = 1) energy on a strip: periodic in
the cross direction(s), running from one pure phase to the other along a
longitudinal direction e. The phase field is pinned at -1/+1 on a band of
cells at each end (wide enough to cover the kernel stencil, so the clamped
extension beyond the grid is seamless) and the surfactant mass is fixed to
gamma times the cross-section measure. The surface tension is the minimal
extended-mode energy per unit cross-section,

    sigma(e, gamma) = min E_1(u, rho, strip) / |cross section|.

sigma is nonincreasing in gamma (larger loads only enlarge the feasible
set); tables enforce this row-wise by isotonic correction within a small
tolerance and flag larger violations as solver failures.

In 2d, arbitrary directions keep the grid axis-aligned with the strip and
rotate the kernel stencil instead (the sampled displacement h is mapped
through the rotation taking (cross, longitudinal) to space axes). For the
built-in radial kernels the rotated sample equals the unrotated one, so
sigma is direction-independent up to discretization, but the plumbing treats
e as data, not as an axis.

On a finite strip the equality mass constraint matches the at-most
constraint only below the saturation load (about 2 m1 per unit
cross-section, the total inhomogeneity mass of a monotone profile); above
it, surplus density pays an O((gamma - gamma_sat)^2 / length) penalty that
an infinite strip would not. Keep gamma below saturation, or lengthen the
strip, when that difference matters.
"""

from __future__ import annotations

import bisect
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from .fields import (
    DiscreteKernel,
    DomainError,
    KernelSpec,
    Potential,
    ScalarField,
    clamped,
    field,
    make_grid,
    periodic,
    quartic_potential,
    sample_kernel,
)
from .energy import EnergyBreakdown, EnergyParams, total_energy
from .optimize import ConstraintSet, MinimizeOptions, MinimizeResult, minimize

__all__ = [
    "CellProblem",
    "StripSetup",
    "CellSolution",
    "SurfaceTensionTable",
    "build_strip",
    "solve_cell",
    "sigma_table",
    "sigma_lookup",
    "table_from_solutions",
    "direction_angle",
    "direction_from_angle",
    "strip_rotation",
]

DEFAULT_RESOLUTION = {1: 32, 2: 16}
MONOTONE_TOL = 1e-3
SPREAD_FLAG = 0.05


def direction_from_angle(angle: float, dim: int) -> tuple[float, ...]:
    """Unit direction for an angle: 0 or pi in 1d, (cos, sin) in 2d."""
    if dim == 1:
        c = math.cos(angle)
        if abs(abs(c) - 1.0) > 1e-9:
            raise DomainError(f"1d directions need angle 0 or pi, got {angle}")
        return (1.0 if c > 0 else -1.0,)
    return (math.cos(angle), math.sin(angle))


def direction_angle(direction) -> float:
    d = tuple(direction)
    if len(d) == 1:
        return 0.0 if d[0] > 0 else math.pi
    return math.atan2(d[1], d[0])


def strip_rotation(direction) -> np.ndarray | None:
    """Rotation used to sample the kernel on a strip along this direction.

    Maps (cross, longitudinal) grid displacements to space; None in 1d where
    the direction enters through the coordinate sign instead.
    """
    d = tuple(direction)
    if len(d) == 1:
        return None
    e = np.array(d, dtype=float)
    perp = np.array([-e[1], e[0]])
    return np.stack([perp, e], axis=1)


@dataclass(frozen=True)
class CellProblem:
    """Geometry, load, and material data of one strip problem.

    direction : unit vector, (+-1,) in 1d or (cos, sin) in 2d.
    gamma : surfactant load per unit cross-section measure.
    cross_side : side length r of the periodic cross-section (2d only).
    half_length : longitudinal half-extent L; the strip is [-L, L].
    resolution : cells per unit length (defaults: 32 in 1d, 16 in 2d).
    clamp_width : width of the frozen bands at the ends; defaults to the
        kernel cutoff plus two cells and must be at least the cutoff.
    """

    direction: tuple[float, ...]
    gamma: float
    kernel: KernelSpec
    potential: Potential = dc_field(default_factory=quartic_potential)
    cross_side: float = 1.0
    half_length: float = 10.0
    resolution: int | None = None
    smoothing_delta: float = 0.02
    clamp_width: float | None = None
    mass_mode: str = "exactly"

    def __post_init__(self):
        d = tuple(float(x) for x in self.direction)
        if len(d) not in (1, 2):
            raise DomainError("direction must have 1 or 2 components")
        norm = math.sqrt(sum(x * x for x in d))
        if abs(norm - 1.0) > 1e-9:
            raise DomainError(f"direction must be a unit vector, |e| = {norm:g}")
        object.__setattr__(self, "direction", tuple(x / norm for x in d))
        if self.gamma < 0:
            raise DomainError(f"gamma must be >= 0, got {self.gamma}")
        if not (self.cross_side > 0):
            raise DomainError("cross_side must be positive")
        if not (self.half_length > 0):
            raise DomainError("half_length must be positive")

    @property
    def dim(self) -> int:
        return len(self.direction)

    @property
    def cross_measure(self) -> float:
        return 1.0 if self.dim == 1 else self.cross_side

    @property
    def mass(self) -> float:
        return self.gamma * self.cross_measure


@dataclass(frozen=True, eq=False)
class StripSetup:
    """Discrete scaffolding of a cell problem."""

    grid: "object"
    kernel: DiscreteKernel
    constraints: ConstraintSet
    params: EnergyParams
    longitudinal: np.ndarray  # per-cell coordinate along the direction


@dataclass(frozen=True, eq=False)
class CellSolution:
    problem: CellProblem
    sigma: float
    u: ScalarField
    rho: ScalarField
    mass_used: float
    energy: EnergyBreakdown  # exact (delta = 0) extended-mode breakdown
    diagnostics: dict


def build_strip(problem: CellProblem) -> StripSetup:
    """Grid, stencil, and constraints realizing a cell problem.

    The longitudinal axis is clamped to the pure phases beyond the ends and
    frozen on bands of clamp_width at both ends; the strip must be long
    enough that the frozen bands plus one kernel cutoff fit, which makes the
    clamped extension exact for every unfrozen cell.
    """
    res = problem.resolution
    if res is None:
        res = DEFAULT_RESOLUTION[problem.dim]
    if res < 1:
        raise DomainError("resolution must be a positive cell count per unit")
    cutoff = problem.kernel.cutoff_multiple * problem.kernel.width
    clamp_width = problem.clamp_width
    if clamp_width is None:
        clamp_width = cutoff + 2.0 / res
    if clamp_width < cutoff:
        raise DomainError(
            f"clamp_width {clamp_width:g} is below the kernel cutoff {cutoff:g}"
        )
    L = problem.half_length
    if L < clamp_width + cutoff:
        raise DomainError(
            f"half_length {L:g} too small: need clamp_width + cutoff = "
            f"{clamp_width + cutoff:g}"
        )

    n_lon = max(int(round(2.0 * L * res)), 2)
    sign = 1.0
    if problem.dim == 1:
        sign = problem.direction[0]
        grid = make_grid(1, [2.0 * L], [n_lon], [clamped(-sign, sign)])
        t = sign * grid.axis_coords(0)
        rotation = None
    else:
        n_lat = max(int(round(problem.cross_side * res)), 1)
        grid = make_grid(
            2,
            [problem.cross_side, 2.0 * L],
            [n_lat, n_lon],
            [periodic(), clamped(-1.0, 1.0)],
        )
        t = np.broadcast_to(grid.axis_coords(1)[None, :], grid.cells).copy()
        rotation = strip_rotation(problem.direction)

    kernel = sample_kernel(problem.kernel, grid, 1.0, rotation=rotation)

    interface_band = L - clamp_width
    if problem.dim == 1:
        count_free = int(np.sum(np.abs(t) < interface_band))
    else:
        count_free = int(np.sum(np.abs(grid.axis_coords(1)) < interface_band))
    if count_free < 4:
        raise DomainError("no room for an interface between the frozen bands")

    frozen = np.abs(t) >= interface_band
    values = np.where(t > 0, 1.0, -1.0)
    constraints = ConstraintSet(
        mass=problem.mass,
        mass_mode=problem.mass_mode,
        frozen_mask=frozen,
        frozen_values=values,
    )
    params = EnergyParams(1.0, problem.smoothing_delta, "extended")
    return StripSetup(grid, kernel, constraints, params, t)


def _starts(setup: StripSetup, problem: CellProblem, n_starts: int, seed: int):
    """Deterministic initial iterates: tanh profile, sharp step, then seeded
    perturbations of the profile."""
    grid = setup.grid
    t = setup.longitudinal
    uniform = problem.mass / (grid.total_cells * grid.cell_volume)
    out = []
    for i in range(n_starts):
        if i == 0:
            u0 = np.tanh(t)
            r0 = np.full(grid.cells, uniform)
        elif i == 1:
            u0 = np.where(t >= 0, 1.0, -1.0)
            r0 = np.full(grid.cells, uniform)
        else:
            rng = np.random.default_rng(seed * 1_000_003 + i)
            u0 = np.tanh(t) + 0.05 * rng.standard_normal(grid.cells)
            r0 = uniform * (1.0 + 0.5 * rng.random(grid.cells))
        out.append((field(grid, np.clip(u0, -1, 1), "phase"), field(grid, r0, "density")))
    return out


def solve_cell(
    problem: CellProblem,
    options: MinimizeOptions | None = None,
    starts: int = 3,
    seed: int = 0,
) -> CellSolution:
    """Minimize the strip energy and report sigma = E / cross-section.

    Runs ``starts`` deterministic initializations, keeps the lowest exact
    (delta = 0) energy, and records the relative spread across starts in the
    diagnostics (flagged above 5%).
    """
    if starts < 1:
        raise DomainError("need at least one start")
    setup = build_strip(problem)
    options = options or MinimizeOptions(max_iters=4000, tol=1e-6)
    exact = EnergyParams(1.0, 0.0, "extended")

    results: list[MinimizeResult] = []
    exact_totals: list[float] = []
    for u0, rho0 in _starts(setup, problem, starts, seed):
        res = minimize(
            u0, rho0, setup.kernel, problem.potential, setup.params, setup.constraints, options
        )
        results.append(res)
        exact_totals.append(
            total_energy(res.u, res.rho, setup.kernel, problem.potential, exact).total
        )

    best = int(np.argmin(exact_totals))
    res = results[best]
    breakdown = total_energy(res.u, res.rho, setup.kernel, problem.potential, exact)
    sigma = breakdown.total / problem.cross_measure
    mass_used = float(np.sum(res.rho.values)) * setup.grid.cell_volume
    spread = (max(exact_totals) - min(exact_totals)) / max(abs(min(exact_totals)), 1e-12)
    diagnostics = {
        "start_totals": tuple(exact_totals),
        "spread": spread,
        "spread_flagged": spread > SPREAD_FLAG,
        "best_start": best,
        "converged": tuple(r.converged for r in results),
        "iterations": tuple(r.iterations for r in results),
        "residuals": tuple(r.diagnostics["residual"] for r in results),
        "smoothed_total": res.energy.total,
    }
    return CellSolution(problem, sigma, res.u, res.rho, mass_used, breakdown, diagnostics)


@dataclass(frozen=True, eq=False)
class SurfaceTensionTable:
    """sigma sampled on a direction x load grid, with validity flags.

    sigma rows are isotonically corrected within MONOTONE_TOL; entries whose
    violation exceeded the tolerance keep their raw value and valid=False.
    raw_sigma preserves the uncorrected solves. Lookup interpolates nearest-
    then-linear in angle and linearly in gamma, clamped to the table range.
    """

    directions: tuple[tuple[float, ...], ...]
    gammas: tuple[float, ...]
    sigma: np.ndarray
    raw_sigma: np.ndarray
    valid: np.ndarray
    spread: np.ndarray
    problem: CellProblem  # template carrying kernel/potential/geometry
    interpolation: str = "nearest-then-linear"

    @property
    def dim(self) -> int:
        return len(self.directions[0])

    @property
    def angles(self) -> tuple[float, ...]:
        return tuple(direction_angle(d) for d in self.directions)


def _isotonic_row(raw: np.ndarray, tol: float):
    """Nonincreasing correction; returns (corrected, valid)."""
    corrected = raw.copy()
    valid = np.ones(raw.size, dtype=bool)
    running = math.inf
    for j, v in enumerate(raw):
        if v <= running + tol:
            corrected[j] = min(v, running)
            running = corrected[j]
        else:
            valid[j] = False
    return corrected, valid


def sigma_table(
    directions,
    gammas,
    template: CellProblem,
    options: MinimizeOptions | None = None,
    starts: int = 3,
    seed: int = 0,
    threads: int = 1,
) -> SurfaceTensionTable:
    """Solve the grid of cell problems and assemble the lookup table.

    Entries are independent solves; with threads > 1 they run concurrently
    (results are identical regardless of scheduling since every entry is a
    deterministic function of its inputs).
    """
    directions = tuple(tuple(float(x) for x in d) for d in directions)
    if not directions:
        raise DomainError("need at least one direction")
    gammas = tuple(sorted(float(g) for g in gammas))
    if not gammas:
        raise DomainError("need at least one gamma")
    if len(set(gammas)) != len(gammas):
        raise DomainError("gamma values must be distinct")

    jobs = [
        (i, j, replace(template, direction=d, gamma=g))
        for i, d in enumerate(directions)
        for j, g in enumerate(gammas)
    ]

    def run(job):
        i, j, prob = job
        return i, j, solve_cell(prob, options=options, starts=starts, seed=seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            solved = list(pool.map(run, jobs))
    else:
        solved = [run(job) for job in jobs]

    D, G = len(directions), len(gammas)
    raw = np.zeros((D, G))
    spread = np.zeros((D, G))
    for i, j, sol in solved:
        raw[i, j] = sol.sigma
        spread[i, j] = sol.diagnostics["spread"]

    sigma = raw.copy()
    valid = np.ones((D, G), dtype=bool)
    for i in range(D):
        sigma[i], valid[i] = _isotonic_row(raw[i], MONOTONE_TOL)
    return SurfaceTensionTable(directions, gammas, sigma, raw, valid, spread, template)


def table_from_solutions(solutions) -> SurfaceTensionTable:
    """Assemble a table from already-computed cell solutions.

    The solutions must share kernel, potential, and geometry, and differ
    only in direction and load; every (direction, gamma) pair must be
    present exactly once. Rows get the same isotonic treatment as
    sigma_table.
    """
    solutions = tuple(solutions)
    if not solutions:
        raise DomainError("need at least one solution")
    directions = []
    for s in solutions:
        if s.problem.direction not in directions:
            directions.append(s.problem.direction)
    gammas = tuple(sorted({s.problem.gamma for s in solutions}))
    by_key = {(s.problem.direction, s.problem.gamma): s for s in solutions}
    if len(by_key) != len(directions) * len(gammas) or len(by_key) != len(solutions):
        raise DomainError("solutions do not fill a direction x gamma grid")
    D, G = len(directions), len(gammas)
    raw = np.zeros((D, G))
    spread = np.zeros((D, G))
    for i, d in enumerate(directions):
        for j, g in enumerate(gammas):
            sol = by_key[(d, g)]
            raw[i, j] = sol.sigma
            spread[i, j] = sol.diagnostics["spread"]
    sigma = raw.copy()
    valid = np.ones((D, G), dtype=bool)
    for i in range(D):
        sigma[i], valid[i] = _isotonic_row(raw[i], MONOTONE_TOL)
    return SurfaceTensionTable(
        tuple(directions), gammas, sigma, raw, valid, spread, solutions[0].problem
    )


def _gamma_weights(gammas: tuple[float, ...], gamma: float):
    """Clamped linear interpolation stencil in the load coordinate."""
    g = min(max(gamma, gammas[0]), gammas[-1])
    if len(gammas) == 1:
        return ((0, 1.0),)
    j = int(np.searchsorted(gammas, g, side="right")) - 1
    j = min(max(j, 0), len(gammas) - 2)
    lo, hi = gammas[j], gammas[j + 1]
    w = 0.0 if hi == lo else (g - lo) / (hi - lo)
    if w <= 0.0:
        return ((j, 1.0),)
    if w >= 1.0:
        return ((j + 1, 1.0),)
    return ((j, 1.0 - w), (j + 1, w))


def _direction_weights(table: SurfaceTensionTable, normal) -> tuple[tuple[int, float], ...]:
    d = tuple(float(x) for x in normal)
    norm = math.sqrt(sum(x * x for x in d))
    if norm == 0:
        raise DomainError("facet normal must be nonzero")
    d = tuple(x / norm for x in d)
    if len(d) != table.dim:
        raise DomainError("normal dimension does not match the table")
    if table.dim == 1:
        for i, dd in enumerate(table.directions):
            if dd[0] * d[0] > 0:
                return ((i, 1.0),)
        raise DomainError(f"table has no entry for 1d direction {d}")
    if len(table.directions) == 1:
        return ((0, 1.0),)
    a = math.atan2(d[1], d[0])
    angles = list(table.angles)
    order = sorted(range(len(angles)), key=lambda i: angles[i])
    sorted_angles = [angles[i] for i in order]
    two_pi = 2.0 * math.pi
    a_mod = a % two_pi
    ring = [x % two_pi for x in sorted_angles]
    ring_order = sorted(range(len(ring)), key=lambda i: ring[i])
    ring_sorted = [ring[i] for i in ring_order]
    idx_sorted = [order[i] for i in ring_order]
    pos = bisect.bisect_right(ring_sorted, a_mod)
    i_hi = pos % len(ring_sorted)
    i_lo = (pos - 1) % len(ring_sorted)
    lo_ang = ring_sorted[i_lo]
    hi_ang = ring_sorted[i_hi]
    gap = (hi_ang - lo_ang) % two_pi
    off = (a_mod - lo_ang) % two_pi
    if gap == 0.0 or off <= 1e-12:
        return ((idx_sorted[i_lo], 1.0),)
    if abs(off - gap) <= 1e-12:
        return ((idx_sorted[i_hi], 1.0),)
    w = off / gap
    return ((idx_sorted[i_lo], 1.0 - w), (idx_sorted[i_hi], w))


def sigma_lookup(table: SurfaceTensionTable, normal, gamma: float) -> float:
    """Interpolated sigma(normal, gamma); errors on invalid bracketing entries.

    gamma outside the tabulated range is clamped to the nearest endpoint
    (sigma plateaus beyond saturation, so constant extension is the honest
    choice); directions interpolate linearly in angle between the bracketing
    sampled directions.
    """
    if gamma < 0:
        raise DomainError("gamma must be >= 0")
    dir_w = _direction_weights(table, normal)
    gam_w = _gamma_weights(table.gammas, gamma)
    value = 0.0
    for i, wi in dir_w:
        for j, wj in gam_w:
            if not table.valid[i, j]:
                raise DomainError(
                    f"lookup touches invalid table entry (direction index {i}, "
                    f"gamma {table.gammas[j]:g})"
                )
            value += wi * wj * float(table.sigma[i, j])
    return value
