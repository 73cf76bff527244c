"""Round-trip and determinism tests for the file I/O layer."""

import json

import numpy as np
import pytest

from nonlocal_surfactant.cell import CellProblem, sigma_lookup, solve_cell
from nonlocal_surfactant.fields import (
    DomainError,
    KernelSpec,
    clamped,
    field,
    make_grid,
    periodic,
    quartic_potential,
    table_potential,
)
from nonlocal_surfactant.fileio import (
    problem_from_meta,
    problem_meta,
    read_field_binary,
    read_field_csv,
    read_table,
    write_field_binary,
    write_field_csv,
    write_manifest,
    write_scan_csv,
    write_table,
)
from nonlocal_surfactant.energy import EnergyBreakdown
from nonlocal_surfactant.recovery import SCAN_COLUMNS, ScanReport, ScanRow

from util import synthetic_table


def _grid_2d():
    return make_grid(2, [2.0, 3.0], [4, 6], [periodic(), clamped(-1.0, 1.0)])


def test_field_csv_round_trip(tmp_path):
    g = _grid_2d()
    rng = np.random.default_rng(3)
    f = field(g, rng.uniform(-1, 1, size=g.cells), "phase")
    path = tmp_path / "u.csv"
    write_field_csv(path, f)
    back = read_field_csv(path)
    assert back.grid == g
    assert back.kind == "phase"
    # %.17g written values reparse exactly
    np.testing.assert_array_equal(back.values, f.values)


def test_field_csv_round_trip_1d(tmp_path):
    g = make_grid(1, [4.0], [16], [clamped(-1.0, 1.0)])
    f = field(g, np.linspace(-1, 1, 16), "density")
    path = tmp_path / "rho.csv"
    write_field_csv(path, f)
    back = read_field_csv(path)
    assert back.grid == g
    np.testing.assert_array_equal(back.values, f.values)


def test_field_binary_round_trip(tmp_path):
    g = _grid_2d()
    rng = np.random.default_rng(4)
    f = field(g, rng.uniform(0, 2, size=g.cells), "density")
    path = tmp_path / "rho.bin"
    write_field_binary(path, f)
    back = read_field_binary(path)
    assert back.grid == g
    assert back.kind == "density"
    np.testing.assert_array_equal(back.values, f.values)


def test_field_read_requires_sidecar(tmp_path):
    g = _grid_2d()
    f = field(g, np.zeros(g.cells), "phase")
    path = tmp_path / "u.csv"
    write_field_csv(path, f)
    (tmp_path / "u.csv.meta.json").unlink()
    with pytest.raises(DomainError, match="sidecar"):
        read_field_csv(path)


def test_field_binary_size_mismatch(tmp_path):
    g = _grid_2d()
    f = field(g, np.zeros(g.cells), "phase")
    path = tmp_path / "u.bin"
    write_field_binary(path, f)
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(DomainError, match="size"):
        read_field_binary(path)


def test_problem_meta_round_trip():
    prob = CellProblem(
        (0.6, 0.8),
        0.25,
        KernelSpec("exponential", 0.4),
        table_potential([-1.0, 0.0, 1.0], [0.0, 1.0, 0.0]),
        cross_side=2.0,
        half_length=5.0,
        resolution=8,
        smoothing_delta=0.01,
        mass_mode="at_most",
    )
    back = problem_from_meta(problem_meta(prob))
    assert back.direction == prob.direction
    assert back.gamma == prob.gamma
    assert back.kernel == prob.kernel
    assert back.cross_side == prob.cross_side
    assert back.half_length == prob.half_length
    assert back.resolution == prob.resolution
    assert back.smoothing_delta == prob.smoothing_delta
    assert back.mass_mode == prob.mass_mode
    z = np.linspace(-1, 1, 7)
    np.testing.assert_allclose(
        back.potential.value(z), prob.potential.value(z), rtol=0, atol=0
    )


def test_table_round_trip(tmp_path):
    table = synthetic_table(
        [(1.0, 0.0), (0.0, 1.0)],
        [0.0, 1.0],
        [[2.0, 1.0], [3.0, 1.5]],
    )
    path = tmp_path / "table.csv"
    write_table(path, table)
    back = read_table(path)
    np.testing.assert_array_equal(back.sigma, table.sigma)
    np.testing.assert_array_equal(back.raw_sigma, table.raw_sigma)
    np.testing.assert_array_equal(back.valid, table.valid)
    np.testing.assert_array_equal(back.spread, table.spread)
    np.testing.assert_array_equal(back.directions, table.directions)
    np.testing.assert_array_equal(back.gammas, table.gammas)
    assert back.problem.kernel == table.problem.kernel
    # lookups agree after the round trip
    for angle in (0.3, 1.2):
        normal = (np.cos(angle), np.sin(angle))
        for gamma in (0.0, 0.4, 1.0):
            assert sigma_lookup(back, normal, gamma) == sigma_lookup(
                table, normal, gamma
            )


def test_table_csv_columns(tmp_path):
    table = synthetic_table([(1.0,), (-1.0,)], [0.0, 0.5], [[2.0, 1.5], [2.0, 1.5]])
    path = tmp_path / "table.csv"
    write_table(path, table)
    header = path.read_text().splitlines()[0]
    assert header == "angle,gamma,sigma,valid,spread"
    rows = path.read_text().splitlines()[1:]
    assert len(rows) == 4


def test_table_read_requires_sidecar(tmp_path):
    table = synthetic_table([(1.0,)], [0.0], [[2.0]])
    path = tmp_path / "table.csv"
    write_table(path, table)
    (tmp_path / "table.csv.meta.json").unlink()
    with pytest.raises(DomainError, match="sidecar"):
        read_table(path)


def test_solved_table_round_trip(tmp_path):
    # end-to-end: solve one cheap cell, build a table, round trip it
    prob = CellProblem(
        (1.0,),
        0.0,
        KernelSpec("gaussian", 0.35),
        quartic_potential(),
        half_length=3.0,
        resolution=16,
    )
    sol = solve_cell(prob, starts=1)
    from nonlocal_surfactant.cell import table_from_solutions

    table = table_from_solutions([sol])
    path = tmp_path / "solved.csv"
    write_table(path, table)
    back = read_table(path)
    assert back.sigma[0, 0] == table.sigma[0, 0]
    assert sigma_lookup(back, (1.0,), 0.0) == sol.sigma


def test_scan_csv(tmp_path):
    rows = (
        ScanRow(0.2, EnergyBreakdown(1.0, 2.0, 0.5, 3.5), 3.0, 3.5 / 3.0, 0.4, 2.0, {}),
        ScanRow(0.1, EnergyBreakdown(0.9, 2.0, 0.4, 3.3), 3.0, 1.1, 0.4, 2.0, {}),
    )
    path = tmp_path / "scan.csv"
    write_scan_csv(path, ScanReport(rows, "recovery_only"))
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(SCAN_COLUMNS)
    assert len(lines) == 3
    first = lines[1].split(",")
    assert float(first[0]) == 0.2
    assert float(first[1]) == 3.5


def test_manifest_deterministic(tmp_path):
    cfg = {"grid": {"dim": 1, "extents": [4.0]}, "global": {"seed": 0}}
    write_manifest(tmp_path, "energy", cfg, "v1.2.3", ["out/a.csv", "out/b.json"])
    first = (tmp_path / "manifest.json").read_bytes()
    write_manifest(tmp_path, "energy", cfg, "v1.2.3", ["out/b.json", "out/a.csv"])
    second = (tmp_path / "manifest.json").read_bytes()
    assert first == second
    data = json.loads(first)
    assert data["command"] == "energy"
    assert data["version"] == "v1.2.3"
    assert data["outputs"] == ["out/a.csv", "out/b.json"]
    assert "timestamp" not in data
