"""Grids, scalar fields, interaction kernels, and double-well potentials.

Geometric conventions used throughout the package:

* Grids are uniform tensor-product grids in one or two dimensions. Axis i
  spans the centered box [-extent_i/2, +extent_i/2) and cell j on that axis
  has its center at -extent_i/2 + (j + 0.5) * spacing_i. Values are stored
  row-major (C order), one value per cell center (midpoint quadrature).
* Each axis carries a boundary mode: ``periodic`` (reads wrap around),
  ``clamped`` (reads beyond the edge return a fixed value per side, only in
  extended-domain evaluation), or ``open`` (reads beyond the edge are
  skipped). Interior-domain evaluation skips out-of-range reads on clamped
  axes as well; periodic wraps are always in-domain.
* Interaction kernels are radial profiles J(|h|) normalized to unit mass in
  the continuum, discretized as a stencil of integer cell offsets with
  weights w_k = eps^-dim * J(|h_k * spacing| / eps) * cell_volume. The zero
  offset is excluded and the stencil is symmetric under h -> -h by
  construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainError",
    "BoundaryMode",
    "periodic",
    "clamped",
    "open_boundary",
    "boundary_from_string",
    "boundary_to_string",
    "Grid",
    "make_grid",
    "ScalarField",
    "field",
    "constant_field",
    "restrict_field",
    "discrete_total_variation",
    "KernelSpec",
    "DiscreteKernel",
    "sample_kernel",
    "kernel_moments",
    "Potential",
    "quartic_potential",
    "table_potential",
]

FIELD_KINDS = ("phase", "density")
KERNEL_FAMILIES = ("gaussian", "exponential", "tophat")

# Volume of the unit ball and default cutoff (in kernel widths) per family.
_UNIT_BALL_VOLUME = {1: 2.0, 2: math.pi}
_DEFAULT_CUTOFF = {"gaussian": 4.0, "exponential": 4.0, "tophat": 1.0}


class DomainError(ValueError):
    """Raised when inputs violate a documented precondition."""


# ---------------------------------------------------------------------------
# boundary modes


@dataclass(frozen=True)
class BoundaryMode:
    """Per-axis rule for resolving reads beyond the grid edge.

    ``lo`` and ``hi`` are the extension values used by a clamped axis at the
    low and high side; they are None for periodic and open axes.
    """

    kind: str
    lo: float | None = None
    hi: float | None = None

    def __post_init__(self):
        if self.kind not in ("periodic", "clamped", "open"):
            raise DomainError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "clamped":
            if self.lo is None or self.hi is None:
                raise DomainError("clamped boundary needs extension values")
        elif self.lo is not None or self.hi is not None:
            raise DomainError(f"{self.kind} boundary takes no extension values")


def periodic() -> BoundaryMode:
    return BoundaryMode("periodic")


def clamped(value: float, hi: float | None = None) -> BoundaryMode:
    """Clamped boundary; one value for both sides, or a (low, high) pair."""
    lo = float(value)
    hi = lo if hi is None else float(hi)
    return BoundaryMode("clamped", lo, hi)


def open_boundary() -> BoundaryMode:
    return BoundaryMode("open")


def boundary_from_string(text: str) -> BoundaryMode:
    """Parse 'periodic', 'open', 'clamped(v)', or 'clamped(lo,hi)'."""
    s = text.strip()
    if s == "periodic":
        return periodic()
    if s == "open":
        return open_boundary()
    if s.startswith("clamped(") and s.endswith(")"):
        body = s[len("clamped("):-1]
        parts = [p.strip() for p in body.split(",")]
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise DomainError(f"cannot parse boundary spec {text!r}") from None
        if len(vals) == 1:
            return clamped(vals[0])
        if len(vals) == 2:
            return clamped(vals[0], vals[1])
    raise DomainError(f"cannot parse boundary spec {text!r}")


def boundary_to_string(mode: BoundaryMode) -> str:
    if mode.kind == "clamped":
        if mode.lo == mode.hi:
            return f"clamped({mode.lo:g})"
        return f"clamped({mode.lo:g},{mode.hi:g})"
    return mode.kind


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular grid over a centered box.

    Attributes
    ----------
    extents : tuple of float
        Physical side length per axis.
    cells : tuple of int
        Cell count per axis.
    boundary : tuple of BoundaryMode
        Boundary rule per axis.
    """

    extents: tuple[float, ...]
    cells: tuple[int, ...]
    boundary: tuple[BoundaryMode, ...]

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(e / n for e, n in zip(self.extents, self.cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    @property
    def total_cells(self) -> int:
        return int(np.prod(self.cells))

    def axis_coords(self, axis: int) -> np.ndarray:
        """Cell-center coordinates along one axis, in [-extent/2, extent/2)."""
        e = self.extents[axis]
        h = self.spacings[axis]
        return -0.5 * e + h * (np.arange(self.cells[axis]) + 0.5)

    def coordinate_arrays(self) -> tuple[np.ndarray, ...]:
        """Cell-center coordinate arrays, broadcastable to the value shape."""
        out = []
        for a in range(self.dim):
            shape = [1] * self.dim
            shape[a] = self.cells[a]
            out.append(self.axis_coords(a).reshape(shape))
        return tuple(out)


def make_grid(dim: int, extents, cells, boundary) -> Grid:
    """Build and validate a Grid.

    Parameters
    ----------
    dim : int
        1 or 2.
    extents, cells, boundary : sequences of length dim
        Physical extent, cell count, and BoundaryMode per axis.
    """
    if dim not in (1, 2):
        raise DomainError(f"dim must be 1 or 2, got {dim}")
    extents = tuple(float(e) for e in extents)
    cells_t = tuple(int(n) for n in cells)
    boundary = tuple(boundary)
    if len(extents) != dim or len(cells_t) != dim or len(boundary) != dim:
        raise DomainError(
            f"expected {dim} entries per axis, got extents={len(extents)} "
            f"cells={len(cells_t)} boundary={len(boundary)}"
        )
    for a, e in enumerate(extents):
        if not (e > 0) or not math.isfinite(e):
            raise DomainError(f"axis {a}: extent must be positive, got {e}")
    for a, n in enumerate(cells_t):
        if n < 1:
            raise DomainError(f"axis {a}: cell count must be >= 1, got {n}")
    for a, b in enumerate(boundary):
        if not isinstance(b, BoundaryMode):
            raise DomainError(f"axis {a}: boundary must be a BoundaryMode")
    return Grid(extents, cells_t, boundary)


# ---------------------------------------------------------------------------
# scalar fields


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One float64 value per grid cell; ``kind`` is 'phase' or 'density'."""

    grid: Grid
    values: np.ndarray
    kind: str

    def with_values(self, values) -> "ScalarField":
        return field(self.grid, values, self.kind)


def field(grid: Grid, values, kind: str) -> ScalarField:
    """Wrap an array of per-cell values as an immutable ScalarField."""
    if kind not in FIELD_KINDS:
        raise DomainError(f"field kind must be one of {FIELD_KINDS}, got {kind!r}")
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.shape != grid.cells:
        raise DomainError(f"values shape {arr.shape} does not match grid cells {grid.cells}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("field values must be finite")
    arr = arr.copy()
    arr.setflags(write=False)
    return ScalarField(grid, arr, kind)


def constant_field(grid: Grid, value: float, kind: str) -> ScalarField:
    return field(grid, np.full(grid.cells, float(value)), kind)


def restrict_field(f: ScalarField, axis: int, lo: int, hi: int) -> ScalarField:
    """Restrict a field to cells lo..hi-1 along one axis.

    The cut axis becomes open on both sides (a restriction cannot stay
    periodic and the original clamp values no longer abut the new edge).
    Coordinates recenter; only index-space and interior-mode energies of the
    restriction are meaningful.
    """
    if not (0 <= axis < f.grid.dim):
        raise DomainError(f"axis {axis} out of range for dim {f.grid.dim}")
    n = f.grid.cells[axis]
    if not (0 <= lo < hi <= n):
        raise DomainError(f"restriction [{lo},{hi}) invalid for {n} cells")
    h = f.grid.spacings[axis]
    extents = list(f.grid.extents)
    cells = list(f.grid.cells)
    boundary = list(f.grid.boundary)
    extents[axis] = (hi - lo) * h
    cells[axis] = hi - lo
    boundary[axis] = open_boundary()
    sub = make_grid(f.grid.dim, extents, cells, boundary)
    index = [slice(None)] * f.grid.dim
    index[axis] = slice(lo, hi)
    return field(sub, f.values[tuple(index)], f.kind)


def discrete_total_variation(u: ScalarField) -> float:
    """Sum of absolute neighbor differences weighted by cross-cell area.

    The cross-cell area between face-adjacent cells on axis a is
    cell_volume / spacing_a (1 in 1D, the transverse spacing in 2D), so a
    single unit-height jump across the whole cross-section contributes the
    jump times the cross-section measure. Periodic axes include the wrap
    face; other axes count interior faces only.
    """
    g = u.grid
    total = 0.0
    for a in range(g.dim):
        area = g.cell_volume / g.spacings[a]
        diffs = np.abs(np.diff(u.values, axis=a))
        total += area * float(np.sum(diffs))
        if g.boundary[a].kind == "periodic" and g.cells[a] > 1:
            first = np.take(u.values, 0, axis=a)
            last = np.take(u.values, g.cells[a] - 1, axis=a)
            total += area * float(np.sum(np.abs(first - last)))
    return total


# ---------------------------------------------------------------------------
# interaction kernels


@dataclass(frozen=True)
class KernelSpec:
    """Radial interaction profile with unit continuum mass.

    family : 'gaussian' | 'exponential' | 'tophat'
    width : characteristic length (standard deviation, decay length, or
        support radius respectively).
    cutoff : stencil truncation radius in multiples of the width. Defaults to
        4 for gaussian/exponential and 1 (the exact support) for tophat.
    """

    family: str
    width: float
    cutoff: float | None = None

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise DomainError(
                f"kernel family must be one of {KERNEL_FAMILIES}, got {self.family!r}"
            )
        if not (self.width > 0) or not math.isfinite(self.width):
            raise DomainError(f"kernel width must be positive, got {self.width}")
        if self.cutoff is not None and not (self.cutoff > 0):
            raise DomainError(f"kernel cutoff must be positive, got {self.cutoff}")

    @property
    def cutoff_multiple(self) -> float:
        return _DEFAULT_CUTOFF[self.family] if self.cutoff is None else self.cutoff

    def profile(self, radius, dim: int):
        """J(|h|) for displacement length ``radius`` in dimension ``dim``."""
        r = np.asarray(radius, dtype=np.float64)
        s = self.width
        if self.family == "gaussian":
            norm = (2.0 * math.pi * s * s) ** (dim / 2.0)
            return np.exp(-0.5 * (r / s) ** 2) / norm
        if self.family == "exponential":
            # unit mass: integral over R^dim of exp(-|h|/s) equals
            # (surface of unit sphere) * Gamma(dim) * s^dim
            surface = 2.0 if dim == 1 else 2.0 * math.pi
            norm = surface * math.factorial(dim - 1) * s**dim
            return np.exp(-r / s) / norm
        # tophat: indicator of |h| <= width over the ball volume
        norm = _UNIT_BALL_VOLUME[dim] * s**dim
        inside = r <= s * (1.0 + 1e-12)
        return inside.astype(np.float64) / norm

    def continuum_mass(self, dim: int) -> float:
        """Closed-form integral of J over all of R^dim (1 by normalization)."""
        return 1.0


@dataclass(frozen=True, eq=False)
class DiscreteKernel:
    """Kernel stencil sampled on a grid at a given interaction scale.

    offsets is a (K, dim) int64 array of nonzero cell offsets, weights the
    matching (K,) array w_k = eps^-dim J(|h_k|/eps) * cell_volume where h_k
    is the physical displacement of offset k. m0 approximates the kernel
    mass, m1 the first absolute moment (which scales like eps).
    """

    grid: Grid
    spec: KernelSpec
    epsilon: float
    offsets: np.ndarray
    weights: np.ndarray
    radii: np.ndarray
    m0: float
    m1: float
    cutoff_radius: float


def sample_kernel(
    spec: KernelSpec,
    grid: Grid,
    epsilon: float,
    rotation: np.ndarray | None = None,
) -> DiscreteKernel:
    """Sample a kernel spec as a stencil of cell offsets on a grid.

    Parameters
    ----------
    spec, grid : the kernel profile and the grid carrying the fields.
    epsilon : interaction scale; the sampled kernel is
        eps^-dim J(h / eps) and the stencil reaches cutoff * width * eps.
    rotation : optional (dim, dim) orthogonal matrix applied to physical
        displacements before evaluating J. Used to orient a strip's
        longitudinal axis along an arbitrary direction; for the built-in
        radial families it changes nothing numerically.
    """
    if not (epsilon > 0) or not math.isfinite(epsilon):
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    dim = grid.dim
    spacings = np.array(grid.spacings)
    cutoff_phys = spec.cutoff_multiple * spec.width * epsilon
    if rotation is not None:
        rotation = np.asarray(rotation, dtype=np.float64)
        if rotation.shape != (dim, dim):
            raise DomainError(f"rotation must be {dim}x{dim}")
        if not np.allclose(rotation @ rotation.T, np.eye(dim), atol=1e-10):
            raise DomainError("rotation must be orthogonal")

    max_off = np.floor(cutoff_phys / spacings * (1.0 + 1e-12)).astype(np.int64)
    if np.all(max_off < 1):
        raise DomainError(
            f"kernel cutoff {cutoff_phys:g} covers no grid cell "
            f"(spacings {grid.spacings}); refine the grid or widen the kernel"
        )
    axes = [np.arange(-m, m + 1, dtype=np.int64) for m in max_off]
    mesh = np.meshgrid(*axes, indexing="ij")
    offsets = np.stack([m.ravel() for m in mesh], axis=1)
    nonzero = np.any(offsets != 0, axis=1)
    offsets = offsets[nonzero]

    disp = offsets * spacings
    if rotation is not None:
        disp = disp @ rotation.T
    radii = np.sqrt(np.sum(disp * disp, axis=1))
    keep = radii <= cutoff_phys * (1.0 + 1e-12)
    offsets, radii = offsets[keep], radii[keep]
    if offsets.shape[0] == 0:
        raise DomainError("kernel stencil is empty after cutoff truncation")

    # deterministic lexicographic order
    order = np.lexsort(tuple(offsets[:, a] for a in range(dim - 1, -1, -1)))
    offsets, radii = offsets[order], radii[order]

    weights = spec.profile(radii / epsilon, dim) / epsilon**dim * grid.cell_volume
    m0 = float(np.sum(weights))
    m1 = float(np.sum(weights * radii))
    offsets.setflags(write=False)
    weights.setflags(write=False)
    radii.setflags(write=False)
    return DiscreteKernel(
        grid, spec, float(epsilon), offsets, weights, radii, m0, m1, cutoff_phys
    )


def kernel_moments(kernel: DiscreteKernel) -> tuple[float, float]:
    """(m0, m1): discrete mass and first absolute moment of the stencil."""
    return kernel.m0, kernel.m1


# ---------------------------------------------------------------------------
# double-well potentials


@dataclass(frozen=True)
class Potential:
    """Nonnegative double-well potential with zeros exactly at -1 and +1.

    kind 'quartic' is (z^2 - 1)^2. kind 'table' interpolates user samples
    piecewise linearly; evaluation outside the sampled range is an error.
    """

    kind: str
    z_samples: tuple[float, ...] | None = None
    w_samples: tuple[float, ...] | None = None

    def value(self, z):
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "quartic":
            q = z * z - 1.0
            return q * q
        zs = np.asarray(self.z_samples)
        ws = np.asarray(self.w_samples)
        if np.any(z < zs[0]) or np.any(z > zs[-1]):
            raise DomainError(
                f"potential table covers [{zs[0]:g},{zs[-1]:g}] but was "
                f"evaluated outside it"
            )
        return np.interp(z, zs, ws)

    def derivative(self, z):
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "quartic":
            return 4.0 * z * (z * z - 1.0)
        zs = np.asarray(self.z_samples)
        ws = np.asarray(self.w_samples)
        if np.any(z < zs[0]) or np.any(z > zs[-1]):
            raise DomainError(
                f"potential table covers [{zs[0]:g},{zs[-1]:g}] but was "
                f"evaluated outside it"
            )
        slopes = np.diff(ws) / np.diff(zs)
        seg = np.clip(np.searchsorted(zs, z, side="right") - 1, 0, len(slopes) - 1)
        return slopes[seg]


def quartic_potential() -> Potential:
    return Potential("quartic")


def table_potential(z_samples, w_samples) -> Potential:
    """Tabulated potential; validates nonnegativity and wells at exactly +-1."""
    zs = np.asarray(z_samples, dtype=np.float64)
    ws = np.asarray(w_samples, dtype=np.float64)
    if zs.ndim != 1 or zs.shape != ws.shape or zs.size < 3:
        raise DomainError("potential table needs matching 1d sample arrays (>= 3 points)")
    if np.any(np.diff(zs) <= 0):
        raise DomainError("potential table abscissae must be strictly increasing")
    if np.any(ws < 0):
        raise DomainError("potential table values must be nonnegative")
    for well in (-1.0, 1.0):
        hits = np.where(np.abs(zs - well) <= 1e-12)[0]
        if hits.size != 1 or abs(ws[hits[0]]) > 1e-15:
            raise DomainError(f"potential table must vanish exactly at z = {well:g}")
    wells = np.abs(np.abs(zs) - 1.0) <= 1e-12
    if np.any(ws[~wells] <= 0):
        raise DomainError("potential table must be positive away from the wells")
    return Potential("table", tuple(float(z) for z in zs), tuple(float(w) for w in ws))
