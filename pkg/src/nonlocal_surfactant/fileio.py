"""Serialization: field CSVs and binaries, tables, scan reports, manifests.

Conventions shared by every writer here:
  - reals are printed with %.{precision}g, default 12 significant digits;
  - CSVs carry a single header row and no comments;
  - every CSV with nontrivial structure gets a JSON sidecar at
    <name>.meta.json carrying the data needed to reload it losslessly;
  - JSON is written with sorted keys and no timestamps, so identical inputs
    produce byte-identical files.

Field CSVs use index columns (i in 1d, i,j in 2d, C order) plus value; the
binary twin is raw little-endian float64 in C order with the geometry in the
sidecar.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .cell import CellProblem, SurfaceTensionTable, direction_angle
from .fields import (
    DomainError,
    Grid,
    KernelSpec,
    Potential,
    ScalarField,
    boundary_from_string,
    boundary_to_string,
    field,
    make_grid,
    quartic_potential,
    table_potential,
)

__all__ = [
    "fmt",
    "write_field_csv",
    "read_field_csv",
    "write_field_binary",
    "read_field_binary",
    "write_table",
    "read_table",
    "write_scan_csv",
    "write_manifest",
    "write_json",
]

DEFAULT_PRECISION = 12
# round-trip exact float formatting for field data files
FULL_PRECISION = 17


def fmt(x, precision: int = DEFAULT_PRECISION) -> str:
    return "%.*g" % (precision, float(x))


def _sidecar(path) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".meta.json")


def _load_sidecar(path) -> dict:
    side = _sidecar(path)
    if not side.exists():
        raise DomainError(f"missing sidecar {side} for {path}")
    return json.loads(side.read_text())


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def grid_meta(grid: Grid) -> dict:
    return {
        "dim": grid.dim,
        "extents": list(grid.extents),
        "cells": list(grid.cells),
        "boundary": [boundary_to_string(b) for b in grid.boundary],
    }


def grid_from_meta(meta: dict) -> Grid:
    return make_grid(
        meta["dim"],
        meta["extents"],
        meta["cells"],
        [boundary_from_string(s) for s in meta["boundary"]],
    )


def write_field_csv(path, f: ScalarField, precision: int = FULL_PRECISION) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        if f.grid.dim == 1:
            w.writerow(["i", "value"])
            for i, v in enumerate(f.values):
                w.writerow([i, fmt(v, precision)])
        else:
            w.writerow(["i", "j", "value"])
            for i in range(f.grid.cells[0]):
                for j in range(f.grid.cells[1]):
                    w.writerow([i, j, fmt(f.values[i, j], precision)])
    meta = {"grid": grid_meta(f.grid), "kind": f.kind, "format": "csv"}
    write_json(_sidecar(path), meta)


def read_field_csv(path) -> ScalarField:
    path = Path(path)
    meta = _load_sidecar(path)
    grid = grid_from_meta(meta["grid"])
    values = np.zeros(grid.cells)
    with path.open(newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows)
        if header not in (["i", "value"], ["i", "j", "value"]):
            raise DomainError(f"unrecognized field CSV header {header} in {path}")
        for row in rows:
            if grid.dim == 1:
                values[int(row[0])] = float(row[1])
            else:
                values[int(row[0]), int(row[1])] = float(row[2])
    return field(grid, values, meta["kind"])


def write_field_binary(path, f: ScalarField) -> None:
    path = Path(path)
    data = np.ascontiguousarray(f.values, dtype="<f8")
    path.write_bytes(data.tobytes(order="C"))
    meta = {
        "grid": grid_meta(f.grid),
        "kind": f.kind,
        "dtype": "<f8",
        "order": "C",
        "format": "raw",
    }
    write_json(_sidecar(path), meta)


def read_field_binary(path) -> ScalarField:
    path = Path(path)
    meta = _load_sidecar(path)
    grid = grid_from_meta(meta["grid"])
    raw = np.frombuffer(path.read_bytes(), dtype=meta["dtype"])
    if raw.size != grid.total_cells:
        raise DomainError(
            f"binary field {path} holds {raw.size} values, grid needs "
            f"{grid.total_cells}"
        )
    return field(grid, raw.reshape(grid.cells), meta["kind"])


def _potential_meta(p: Potential) -> dict:
    if p.kind == "quartic":
        return {"kind": "quartic"}
    return {
        "kind": "table",
        "z": list(map(float, p.z_samples)),
        "w": list(map(float, p.w_samples)),
    }


def _potential_from_meta(meta: dict) -> Potential:
    if meta["kind"] == "quartic":
        return quartic_potential()
    return table_potential(meta["z"], meta["w"])


def problem_meta(problem: CellProblem) -> dict:
    return {
        "direction": list(problem.direction),
        "gamma": problem.gamma,
        "kernel": {
            "family": problem.kernel.family,
            "width": problem.kernel.width,
            "cutoff": problem.kernel.cutoff,
        },
        "potential": _potential_meta(problem.potential),
        "cross_side": problem.cross_side,
        "half_length": problem.half_length,
        "resolution": problem.resolution,
        "smoothing_delta": problem.smoothing_delta,
        "clamp_width": problem.clamp_width,
        "mass_mode": problem.mass_mode,
    }


def problem_from_meta(meta: dict) -> CellProblem:
    k = meta["kernel"]
    return CellProblem(
        tuple(meta["direction"]),
        meta["gamma"],
        KernelSpec(k["family"], k["width"], k["cutoff"]),
        _potential_from_meta(meta["potential"]),
        cross_side=meta["cross_side"],
        half_length=meta["half_length"],
        resolution=meta["resolution"],
        smoothing_delta=meta["smoothing_delta"],
        clamp_width=meta["clamp_width"],
        mass_mode=meta["mass_mode"],
    )


def write_table(path, table: SurfaceTensionTable,
                precision: int = DEFAULT_PRECISION) -> None:
    """Table CSV (angle, gamma, sigma, valid, spread) plus reload sidecar.

    1d directions appear as angles 0 and pi. The sidecar holds the exact
    direction vectors and raw (uncorrected) sigma values, so reloading does
    not round-trip through angles.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["angle", "gamma", "sigma", "valid", "spread"])
        for i, d in enumerate(table.directions):
            angle = direction_angle(d)
            for j, g in enumerate(table.gammas):
                w.writerow(
                    [
                        fmt(angle, precision),
                        fmt(g, precision),
                        fmt(table.sigma[i, j], precision),
                        int(table.valid[i, j]),
                        fmt(table.spread[i, j], precision),
                    ]
                )
    meta = {
        "directions": [list(d) for d in table.directions],
        "gammas": list(table.gammas),
        "sigma": table.sigma.tolist(),
        "raw_sigma": table.raw_sigma.tolist(),
        "valid": table.valid.astype(int).tolist(),
        "spread": table.spread.tolist(),
        "problem": problem_meta(table.problem),
        "interpolation": table.interpolation,
    }
    write_json(_sidecar(path), meta)


def read_table(path) -> SurfaceTensionTable:
    path = Path(path)
    side = _sidecar(path)
    if not side.exists():
        raise DomainError(f"table sidecar {side} not found")
    meta = json.loads(side.read_text())
    return SurfaceTensionTable(
        directions=tuple(tuple(d) for d in meta["directions"]),
        gammas=tuple(meta["gammas"]),
        sigma=np.array(meta["sigma"], dtype=float),
        raw_sigma=np.array(meta["raw_sigma"], dtype=float),
        valid=np.array(meta["valid"], dtype=bool),
        spread=np.array(meta["spread"], dtype=float),
        problem=problem_from_meta(meta["problem"]),
        interpolation=meta["interpolation"],
    )


def write_scan_csv(path, report, precision: int = DEFAULT_PRECISION) -> None:
    from .recovery import SCAN_COLUMNS

    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SCAN_COLUMNS)
        for row in report.rows:
            data = row.as_csv_row()
            w.writerow([fmt(data[c], precision) for c in SCAN_COLUMNS])


def write_manifest(out_dir, command: str, config: dict, version: str,
                   outputs: list[str]) -> None:
    """manifest.json: everything needed to re-run, nothing that varies."""
    manifest = {
        "command": command,
        "config": config,
        "version": version,
        "outputs": sorted(outputs),
    }
    write_json(Path(out_dir) / "manifest.json", manifest)
