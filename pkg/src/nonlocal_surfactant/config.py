"""TOML run configuration: strict validation and object builders.

Configs are plain TOML with one section per concern. Validation is strict:
a key that no command understands is an error naming the offending
section.key, never a silent ignore. Builders convert the validated sections
into library objects; conversion failures surface as DomainError with the
same naming scheme.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .cell import CellProblem, direction_from_angle
from .energy import EnergyParams
from .fields import (
    DomainError,
    Grid,
    KernelSpec,
    Potential,
    ScalarField,
    boundary_from_string,
    constant_field,
    field,
    make_grid,
    quartic_potential,
    table_potential,
)
from .optimize import ConstraintSet, MinimizeOptions
from .sharp import Facet

__all__ = [
    "load_toml",
    "validate_config",
    "build_grid",
    "build_kernel_spec",
    "build_potential",
    "build_params",
    "build_field",
    "build_constraints",
    "build_options",
    "build_cell_problem",
    "build_facets",
    "build_diracs",
    "SECTION_KEYS",
]

SECTION_KEYS = {
    "global": {"seed", "threads", "output_dir", "precision"},
    "grid": {"dim", "extents", "cells", "boundary"},
    "kernel": {"family", "width", "cutoff"},
    "potential": {"kind", "z", "w"},
    "params": {"epsilon", "delta", "mode"},
    "fields": {"u", "rho"},
    "constraints": {"mass", "mass_mode", "u_min", "u_max"},
    "options": {
        "max_iters",
        "tol",
        "step0",
        "shrink",
        "sufficient_decrease",
        "max_halvings",
    },
    "cell": {
        "direction",
        "angle",
        "gamma",
        "cross_side",
        "half_length",
        "resolution",
        "delta",
        "clamp_width",
        "mass_mode",
    },
    "table": {"angles", "gammas", "starts"},
    "solve": {"starts"},
    "sharp": {"table"},
    "facet": {"normal", "area", "gamma", "position", "extent"},
    "dirac": {"location", "mass"},
    "scan": {"epsilons", "mode", "table", "profile", "starts"},
    "gradcheck": {"n_coords", "fd_step", "tol"},
}

FIELD_SPEC_KEYS = {"kind", "value", "width", "axis", "lo", "hi", "seed_offset", "path"}


def load_toml(path) -> dict:
    with Path(path).open("rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as e:
            raise DomainError(f"invalid TOML in {path}: {e}") from e


def validate_config(cfg: dict, sections) -> None:
    """Reject unknown sections and keys, naming the offender."""
    allowed = set(sections)
    for name, body in cfg.items():
        if name not in allowed:
            raise DomainError(f"unknown config section [{name}]")
        keys = SECTION_KEYS[name]
        entries = body if isinstance(body, list) else [body]
        for entry in entries:
            if not isinstance(entry, dict):
                raise DomainError(f"section [{name}] must be a table")
            for key, value in entry.items():
                if name == "fields":
                    if key not in keys:
                        raise DomainError(f"unknown config key {name}.{key}")
                    for sub in value:
                        if sub not in FIELD_SPEC_KEYS:
                            raise DomainError(
                                f"unknown config key {name}.{key}.{sub}"
                            )
                elif key not in keys:
                    raise DomainError(f"unknown config key {name}.{key}")


def _need(cfg: dict, section: str) -> dict:
    if section not in cfg:
        raise DomainError(f"missing config section [{section}]")
    return cfg[section]


def _convert(section, key, value, conv):
    try:
        return conv(value)
    except (TypeError, ValueError) as e:
        raise DomainError(f"bad value for {section}.{key}: {e}") from e


def build_grid(cfg: dict) -> Grid:
    g = _need(cfg, "grid")
    for key in ("dim", "extents", "cells", "boundary"):
        if key not in g:
            raise DomainError(f"missing config key grid.{key}")
    boundary = [
        _convert("grid", "boundary", b, boundary_from_string) for b in g["boundary"]
    ]
    return make_grid(g["dim"], g["extents"], g["cells"], boundary)


def build_kernel_spec(cfg: dict) -> KernelSpec:
    k = _need(cfg, "kernel")
    if "family" not in k or "width" not in k:
        raise DomainError("kernel section needs family and width")
    return KernelSpec(k["family"], float(k["width"]), k.get("cutoff"))


def build_potential(cfg: dict) -> Potential:
    p = cfg.get("potential")
    if p is None or p.get("kind", "quartic") == "quartic":
        return quartic_potential()
    if p["kind"] == "table":
        if "z" not in p or "w" not in p:
            raise DomainError("table potential needs potential.z and potential.w")
        return table_potential(p["z"], p["w"])
    raise DomainError(f"unknown potential kind {p['kind']!r}")


def build_params(cfg: dict) -> EnergyParams:
    p = _need(cfg, "params")
    if "epsilon" not in p:
        raise DomainError("missing config key params.epsilon")
    return EnergyParams(
        float(p["epsilon"]),
        float(p.get("delta", 0.02)),
        p.get("mode", "interior"),
    )


def build_field(spec: dict, grid: Grid, kind: str, seed: int) -> ScalarField:
    """Field generators for run inputs.

    kinds: constant (value), tanh (width, axis), step (axis), random
    (lo, hi, seed_offset), csv / binary (path).
    """
    gen = spec.get("kind")
    if gen == "constant":
        return constant_field(grid, float(spec.get("value", 0.0)), kind)
    if gen == "tanh":
        axis = int(spec.get("axis", grid.dim - 1))
        width = float(spec.get("width", 1.0))
        x = grid.axis_coords(axis)
        vals = np.tanh(x / width)
        shape = [1] * grid.dim
        shape[axis] = -1
        return field(grid, np.broadcast_to(vals.reshape(shape), grid.cells), kind)
    if gen == "step":
        axis = int(spec.get("axis", grid.dim - 1))
        x = grid.axis_coords(axis)
        vals = np.where(x >= 0, 1.0, -1.0)
        shape = [1] * grid.dim
        shape[axis] = -1
        return field(grid, np.broadcast_to(vals.reshape(shape), grid.cells), kind)
    if gen == "random":
        lo = float(spec.get("lo", -1.0 if kind == "phase" else 0.0))
        hi = float(spec.get("hi", 1.0))
        rng = np.random.default_rng(seed + int(spec.get("seed_offset", 0)))
        return field(grid, rng.uniform(lo, hi, size=grid.cells), kind)
    if gen in ("csv", "binary"):
        from .fileio import read_field_binary, read_field_csv

        reader = read_field_csv if gen == "csv" else read_field_binary
        f = reader(spec["path"])
        if f.grid != grid:
            raise DomainError(
                f"field file {spec['path']} was written on a different grid"
            )
        return field(grid, f.values, kind)
    raise DomainError(f"unknown field generator {gen!r}")


def build_fields(cfg: dict, grid: Grid, seed: int):
    f = _need(cfg, "fields")
    if "u" not in f or "rho" not in f:
        raise DomainError("fields section needs u and rho generator tables")
    u = build_field(f["u"], grid, "phase", seed)
    rho = build_field(f["rho"], grid, "density", seed)
    return u, rho


def build_constraints(cfg: dict, grid: Grid) -> ConstraintSet:
    c = _need(cfg, "constraints")
    if "mass" not in c:
        raise DomainError("missing config key constraints.mass")
    return ConstraintSet(
        mass=float(c["mass"]),
        mass_mode=c.get("mass_mode", "exactly"),
        u_min=float(c.get("u_min", -1.0)),
        u_max=float(c.get("u_max", 1.0)),
    )


def build_options(cfg: dict) -> MinimizeOptions:
    o = cfg.get("options", {})
    return MinimizeOptions(
        max_iters=int(o.get("max_iters", 2000)),
        tol=float(o.get("tol", 1e-6)),
        step0=float(o.get("step0", 1.0)),
        shrink=float(o.get("shrink", 0.5)),
        sufficient_decrease=float(o.get("sufficient_decrease", 1e-4)),
        max_halvings=int(o.get("max_halvings", 60)),
    )


def build_cell_problem(cfg: dict) -> CellProblem:
    c = _need(cfg, "cell")
    spec = build_kernel_spec(cfg)
    potential = build_potential(cfg)
    if "direction" in c and "angle" in c:
        raise DomainError("cell.direction and cell.angle are mutually exclusive")
    if "direction" in c:
        direction = tuple(float(x) for x in c["direction"])
    elif "angle" in c:
        direction = direction_from_angle(float(c["angle"]), 2)
    else:
        raise DomainError("cell section needs direction or angle")
    return CellProblem(
        direction,
        float(c.get("gamma", 0.0)),
        spec,
        potential,
        cross_side=float(c.get("cross_side", 1.0)),
        half_length=float(c.get("half_length", 10.0)),
        resolution=c.get("resolution"),
        smoothing_delta=float(c.get("delta", 0.02)),
        clamp_width=c.get("clamp_width"),
        mass_mode=c.get("mass_mode", "exactly"),
    )


def build_facets(cfg: dict) -> tuple[Facet, ...]:
    entries = cfg.get("facet", [])
    facets = []
    for e in entries:
        if "normal" not in e or "area" not in e:
            raise DomainError("each [[facet]] needs normal and area")
        facets.append(
            Facet(
                tuple(float(x) for x in e["normal"]),
                float(e["area"]),
                gamma=float(e.get("gamma", 0.0)),
                position=float(e.get("position", 0.0)),
                extent=e.get("extent"),
            )
        )
    return tuple(facets)


def build_diracs(cfg: dict):
    entries = cfg.get("dirac", [])
    out = []
    for e in entries:
        if "location" not in e or "mass" not in e:
            raise DomainError("each [[dirac]] needs location and mass")
        out.append((tuple(float(x) for x in e["location"]), float(e["mass"])))
    return tuple(out)
