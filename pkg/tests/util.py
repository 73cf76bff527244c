"""Shared generators for seeded random test problems."""

from __future__ import annotations

import numpy as np

from nonlocal_surfactant.fields import (
    KernelSpec,
    clamped,
    constant_field,
    field,
    make_grid,
    open_boundary,
    periodic,
    sample_kernel,
)
from nonlocal_surfactant.energy import EnergyParams

import oracles


def random_boundary(rng):
    k = rng.integers(0, 3)
    if k == 0:
        return periodic()
    if k == 1:
        return open_boundary()
    lo, hi = rng.uniform(-1.0, 1.0, size=2)
    return clamped(lo, hi)


def random_grid(rng, dim, max_cells_1d=64, max_cells_2d=24):
    if dim == 1:
        cells = [int(rng.integers(4, max_cells_1d + 1))]
    else:
        cells = [int(rng.integers(4, max_cells_2d + 1)) for _ in range(2)]
    extents = [float(rng.uniform(0.5, 3.0)) for _ in range(dim)]
    boundary = [random_boundary(rng) for _ in range(dim)]
    return make_grid(dim, extents, cells, boundary)


def random_kernel(rng, grid, max_stencil_spacings=5.0):
    """Kernel spec whose stencil reaches a few cells in every direction."""
    family = ("gaussian", "exponential", "tophat")[rng.integers(0, 3)]
    spacing = max(grid.spacings)
    reach = spacing * rng.uniform(1.5, max_stencil_spacings)
    eps = float(rng.uniform(0.5, 2.0))
    cutoff = oracles.default_cutoff(family)
    width = reach / (cutoff * eps)
    spec = KernelSpec(family, width, cutoff)
    return sample_kernel(spec, grid, eps), eps


def random_pair(rng, grid):
    u = field(grid, rng.uniform(-1.5, 1.5, size=grid.cells), "phase")
    rho = field(grid, rng.uniform(0.0, 2.0, size=grid.cells), "density")
    return u, rho


def random_params(rng, eps):
    delta = float(rng.choice([0.0, 1e-2, 5e-2]))
    mode = "interior" if rng.integers(0, 2) == 0 else "extended"
    return EnergyParams(eps, delta, mode)


def oracle_modes(grid):
    """Boundary modes in the plain-tuple form the oracle understands."""
    out = []
    for b in grid.boundary:
        if b.kind == "clamped":
            out.append(("clamped", b.lo, b.hi))
        else:
            out.append((b.kind,))
    return out


def oracle_stencil(kernel):
    return oracles.stencil(
        kernel.spec.family,
        kernel.spec.width,
        kernel.spec.cutoff_multiple,
        kernel.epsilon,
        list(kernel.grid.spacings),
        kernel.grid.cell_volume,
    )


def oracle_energy_of(u, rho, kernel, params, potential=None):
    W = (lambda z: (z * z - 1.0) ** 2) if potential is None else potential
    return oracles.energy_oracle(
        u.values.tolist(),
        rho.values.tolist(),
        list(u.grid.cells),
        list(u.grid.extents),
        oracle_modes(u.grid),
        oracle_stencil(kernel),
        params.epsilon,
        params.smoothing_delta,
        params.domain_mode == "interior",
        W,
    )


def zero_density(grid):
    return constant_field(grid, 0.0, "density")


def synthetic_table(directions, gammas, sigma, valid=None):
    """Hand-built surface-tension table for lookup and limit-energy tests."""
    from nonlocal_surfactant.cell import CellProblem, SurfaceTensionTable
    from nonlocal_surfactant.fields import quartic_potential

    sigma = np.asarray(sigma, dtype=float)
    if valid is None:
        valid = np.ones(sigma.shape, dtype=bool)
    template = CellProblem(
        tuple(directions[0]),
        0.0,
        KernelSpec("gaussian", 0.35),
        quartic_potential(),
        half_length=3.0,
        resolution=16,
    )
    return SurfaceTensionTable(
        directions=tuple(tuple(d) for d in directions),
        gammas=tuple(gammas),
        sigma=sigma,
        raw_sigma=sigma.copy(),
        valid=valid,
        spread=np.zeros(sigma.shape),
        problem=template,
    )
