"""Sharp-interface energy of faceted phase configurations.

The limiting energy of the diffuse model charges each flat piece of the
phase boundary its direction- and load-dependent tension:

    F = sum over facets of sigma(normal_f, gamma_f) * area_f

where gamma_f is the surfactant surface density carried by the facet and
sigma comes from a SurfaceTensionTable. Point masses placed off the
interface cost nothing in the limit (their diffuse realizations spend only
O(sqrt(eps))), so they enter the data structures but not the energy.

Only flat facets with per-facet constant density are supported; curved
interfaces or varying densities must be split into flat constant pieces
first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .cell import SurfaceTensionTable, sigma_lookup
from .fields import DomainError, Grid

__all__ = [
    "Facet",
    "PolyhedralPhase",
    "limit_energy",
    "facet_density_from_measure",
]


@dataclass(frozen=True)
class Facet:
    """One flat interface piece.

    normal : any nonzero vector, normalized on construction.
    area : surface measure of the piece (length in 2d; in 1d a facet is a
        single point and its counting measure must be 1).
    gamma : surfactant density per unit surface measure, >= 0.
    position : signed offset of the facet plane along the normal, i.e. the
        piece lies in {x . normal = position}.
    extent : lateral size used when a diffuse realization tiles profiles
        along the facet; defaults to the area in 2d (a facet is an interval
        of that length) and is unused in 1d.
    """

    normal: tuple[float, ...]
    area: float
    gamma: float = 0.0
    position: float = 0.0
    extent: float | None = None

    def __post_init__(self):
        n = tuple(float(x) for x in self.normal)
        if len(n) not in (1, 2):
            raise DomainError("facet normal must have 1 or 2 components")
        norm = math.sqrt(sum(x * x for x in n))
        if norm == 0.0 or not math.isfinite(norm):
            raise DomainError("facet normal must be a finite nonzero vector")
        object.__setattr__(self, "normal", tuple(x / norm for x in n))
        if not (self.area > 0):
            raise DomainError(f"facet area must be positive, got {self.area}")
        if len(n) == 1 and self.area != 1.0:
            raise DomainError("a 1d facet is a point; its counting measure is 1")
        if self.gamma < 0:
            raise DomainError(f"facet gamma must be >= 0, got {self.gamma}")
        if self.extent is not None and not (self.extent > 0):
            raise DomainError("facet extent must be positive when given")

    @property
    def dim(self) -> int:
        return len(self.normal)

    @property
    def lateral_extent(self) -> float:
        if self.dim == 1:
            return 0.0
        return self.area if self.extent is None else self.extent

    @property
    def surfactant_mass(self) -> float:
        return self.gamma * self.area


@dataclass(frozen=True)
class PolyhedralPhase:
    """A faceted two-phase configuration with an optional point-mass part.

    dirac_masses : tuple of ((coords...), mass) pairs; the points must lie
    off every facet plane, since on-facet mass belongs to a facet density.
    domain : optional grid the configuration lives on; the limit energy does
    not need it, diffuse realizations do.
    """

    facets: tuple[Facet, ...]
    dirac_masses: tuple[tuple[tuple[float, ...], float], ...] = ()
    domain: Grid | None = None

    def __post_init__(self):
        facets = tuple(self.facets)
        object.__setattr__(self, "facets", facets)
        dims = {f.dim for f in facets}
        if len(dims) > 1:
            raise DomainError("facets mix dimensions")
        cleaned = []
        for loc, mass in self.dirac_masses:
            loc = tuple(float(x) for x in loc)
            if mass < 0:
                raise DomainError("point masses must be >= 0")
            if dims and len(loc) != next(iter(dims)):
                raise DomainError("point location dimension does not match facets")
            for f in facets:
                dist = abs(sum(a * b for a, b in zip(loc, f.normal)) - f.position)
                if dist <= 1e-12:
                    raise DomainError(
                        f"point mass at {loc} lies on a facet plane; fold it "
                        "into the facet density instead"
                    )
            cleaned.append((loc, float(mass)))
        object.__setattr__(self, "dirac_masses", tuple(cleaned))

    @property
    def total_point_mass(self) -> float:
        return sum(m for _, m in self.dirac_masses)

    @property
    def total_surfactant_mass(self) -> float:
        return self.total_point_mass + sum(f.surfactant_mass for f in self.facets)


def limit_energy(phase: PolyhedralPhase, table: SurfaceTensionTable) -> float:
    """Total sharp-interface energy; point masses contribute zero."""
    return sum(
        sigma_lookup(table, f.normal, f.gamma) * f.area for f in phase.facets
    )


def facet_density_from_measure(facets, masses) -> tuple[Facet, ...]:
    """Assign per-facet densities carrying the given surfactant masses.

    Returns copies of the facets with gamma = mass / area.
    """
    facets = tuple(facets)
    masses = tuple(float(m) for m in masses)
    if len(facets) != len(masses):
        raise DomainError(
            f"got {len(masses)} masses for {len(facets)} facets"
        )
    out = []
    for f, m in zip(facets, masses):
        if m < 0:
            raise DomainError("facet surfactant mass must be >= 0")
        out.append(replace(f, gamma=m / f.area))
    return tuple(out)
