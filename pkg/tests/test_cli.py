"""End-to-end CLI tests through click's test runner."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from nonlocal_surfactant.cell import sigma_lookup
from nonlocal_surfactant.cli import main, round_floats
from nonlocal_surfactant.energy import EnergyParams, total_energy
from nonlocal_surfactant.fields import (
    KernelSpec,
    clamped,
    make_grid,
    quartic_potential,
    sample_kernel,
)
from nonlocal_surfactant.config import build_field
from nonlocal_surfactant.fileio import read_field_csv, read_table


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, args, **kw):
    result = runner.invoke(main, args, catch_exceptions=False, **kw)
    return result


ENERGY_TOML = """
[global]
seed = 3

[grid]
dim = 1
extents = [4.0]
cells = [64]
boundary = ["clamped(-1,1)"]

[kernel]
family = "gaussian"
width = 0.35

[params]
epsilon = 0.25

[fields]
u = {{ kind = "tanh", width = 0.5 }}
rho = {{ kind = "constant", value = 0.1 }}
{extra}
"""

CELL_TOML = """
[global]
seed = 0

[kernel]
family = "gaussian"
width = 0.35

[cell]
direction = [1.0]
gamma = 0.25
half_length = 3.0
resolution = 16

[solve]
starts = 2
"""


def test_selftest(runner):
    result = invoke(runner, ["selftest"])
    assert result.exit_code == 0
    assert result.output.count("ok - ") >= 5
    assert "all selftest cases passed" in result.output


def test_missing_config_is_usage_error(runner, tmp_path):
    result = runner.invoke(main, ["--config", str(tmp_path / "nope.toml"), "energy"])
    assert result.exit_code == 2


def test_unknown_command_is_usage_error(runner):
    result = runner.invoke(main, ["frobnicate"])
    assert result.exit_code == 2


def test_command_without_config_is_usage_error(runner):
    result = runner.invoke(main, ["energy"])
    assert result.exit_code == 2


def test_unknown_key_names_offender(runner, tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[grid]\nboundry = [\"periodic\"]\n")
    result = invoke(runner, ["--config", str(cfg), "energy"])
    assert result.exit_code == 1
    assert "grid.boundry" in result.output


def test_wrong_family_section_rejected(runner, tmp_path):
    cfg = tmp_path / "cell.toml"
    cfg.write_text(CELL_TOML)
    result = invoke(runner, ["--config", str(cfg), "energy"])
    assert result.exit_code == 1
    assert "[cell]" in result.output


def test_energy_matches_library(runner, tmp_path):
    cfg = tmp_path / "energy.toml"
    cfg.write_text(ENERGY_TOML.format(extra=""))
    out = tmp_path / "run"
    result = invoke(runner, ["--config", str(cfg), "--out", str(out), "energy"])
    assert result.exit_code == 0
    printed = json.loads(result.output)

    grid = make_grid(1, [4.0], [64], [clamped(-1.0, 1.0)])
    kernel = sample_kernel(KernelSpec("gaussian", 0.35), grid, 0.25)
    u = build_field({"kind": "tanh", "width": 0.5}, grid, "phase", 3)
    rho = build_field({"kind": "constant", "value": 0.1}, grid, "density", 3)
    expected = total_energy(
        u, rho, kernel, quartic_potential(), EnergyParams(0.25, 0.02, "interior")
    )
    assert printed["energy"] == round_floats(expected.as_dict(), 12)

    saved = json.loads((out / "energy.json").read_text())
    assert saved["energy"] == printed["energy"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "energy"
    assert manifest["outputs"] == ["energy.json"]
    assert manifest["version"]
    assert "timestamp" not in manifest
    assert manifest["config"]["global"]["seed"] == 3


def test_minimize_writes_fields(runner, tmp_path):
    extra = "\n".join(
        [
            "[constraints]",
            "mass = 0.4",
            "",
            "[options]",
            "max_iters = 200",
        ]
    )
    cfg = tmp_path / "min.toml"
    cfg.write_text(ENERGY_TOML.format(extra=extra))
    out = tmp_path / "run"
    result = invoke(runner, ["--config", str(cfg), "--out", str(out), "minimize"])
    assert result.exit_code == 0
    printed = json.loads(result.output)
    assert printed["rho_mass"] == pytest.approx(0.4, rel=1e-12)
    u = read_field_csv(out / "u.csv")
    rho = read_field_csv(out / "rho.csv")
    assert u.values.shape == (64,)
    assert np.all(rho.values >= 0)
    saved = json.loads((out / "result.json").read_text())
    assert saved["energy_exact"]["total"] <= saved["history"][0] + 1e-12
    manifest = json.loads((out / "manifest.json").read_text())
    assert "u.csv" in manifest["outputs"]
    assert "result.json" in manifest["outputs"]


def test_cell_sigma_and_table_pipeline(runner, tmp_path):
    cfg = tmp_path / "cell.toml"
    cfg.write_text(CELL_TOML)
    out1 = tmp_path / "sigma-run"
    result = invoke(runner, ["--config", str(cfg), "--out", str(out1), "cell", "sigma"])
    assert result.exit_code == 0
    sigma_run = json.loads(result.output)
    assert sigma_run["gamma"] == 0.25
    assert 0 < sigma_run["sigma"] < 2

    out2 = tmp_path / "table-run"
    result = invoke(
        runner,
        [
            "--config",
            str(cfg),
            "--out",
            str(out2),
            "cell",
            "table",
            "--gammas",
            "0,0.25,0.5,0.75",
        ],
    )
    assert result.exit_code == 0
    printed = json.loads(result.output)
    assert printed["rows"] == 4  # 4 gammas x 1 direction
    lines = (out2 / "table.csv").read_text().splitlines()
    assert lines[0] == "angle,gamma,sigma,valid,spread"
    assert len(lines) == 5

    table = read_table(out2 / "table.csv")
    # the dedicated single solve agrees with the table entry (same seed/starts)
    assert sigma_lookup(table, (1.0,), 0.25) == pytest.approx(
        sigma_run["sigma"], rel=1e-9
    )

    # sharp consumes the table
    sharp_cfg = tmp_path / "sharp.toml"
    sharp_cfg.write_text(
        "\n".join(
            [
                "[sharp]",
                f'table = "{out2 / "table.csv"}"',
                "",
                "[[facet]]",
                "normal = [1.0]",
                "area = 1.0",
                "gamma = 0.5",
            ]
        )
    )
    out3 = tmp_path / "sharp-run"
    result = invoke(
        runner, ["--config", str(sharp_cfg), "--out", str(out3), "sharp"]
    )
    assert result.exit_code == 0
    printed = json.loads(result.output)
    assert printed["limit_energy"] == pytest.approx(
        sigma_lookup(table, (1.0,), 0.5), rel=1e-12
    )


def test_cell_table_deterministic(runner, tmp_path):
    cfg = tmp_path / "cell.toml"
    cfg.write_text(CELL_TOML)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        result = invoke(
            runner,
            ["--config", str(cfg), "--threads", "1", "--out", str(out), "cell", "table"],
        )
        assert result.exit_code == 0
        outs.append((out / "table.csv").read_bytes())
    assert outs[0] == outs[1]


def test_sharp_requires_table(runner, tmp_path):
    cfg = tmp_path / "sharp.toml"
    cfg.write_text("[[facet]]\nnormal = [1.0]\narea = 1.0\n")
    result = invoke(runner, ["--config", str(cfg), "sharp"])
    assert result.exit_code == 1
    assert "sharp.table" in result.output


def test_gradcheck_pass_and_fail(runner, tmp_path):
    base = "\n".join(
        [
            "[grid]",
            "dim = 1",
            "extents = [4.0]",
            "cells = [48]",
            'boundary = ["periodic"]',
            "",
            "[kernel]",
            'family = "gaussian"',
            "width = 0.35",
            "",
            "[params]",
            "epsilon = 0.25",
            "delta = 0.01",
            "",
            "[gradcheck]",
            "n_coords = 30",
            "tol = {tol}",
        ]
    )
    ok_cfg = tmp_path / "ok.toml"
    ok_cfg.write_text(base.format(tol="1e-5"))
    result = invoke(runner, ["--config", str(ok_cfg), "--out", str(tmp_path / "g1"), "gradcheck"])
    assert result.exit_code == 0
    assert json.loads(result.output)["passed"] is True

    hard_cfg = tmp_path / "hard.toml"
    hard_cfg.write_text(base.format(tol="1e-18"))
    result = runner.invoke(
        main,
        ["--config", str(hard_cfg), "--out", str(tmp_path / "g2"), "gradcheck"],
    )
    assert result.exit_code == 1
    assert json.loads(result.output)["passed"] is False


def test_scan_epsilon_and_recovery(runner, tmp_path):
    cfg = tmp_path / "scan.toml"
    cfg.write_text(
        "\n".join(
            [
                "[grid]",
                "dim = 1",
                "extents = [4.0]",
                "cells = [1280]",
                'boundary = ["clamped(-1,1)"]',
                "",
                "[kernel]",
                'family = "gaussian"',
                "width = 0.35",
                "",
                "[cell]",
                "half_length = 3.0",
                "resolution = 16",
                "",
                "[[facet]]",
                "normal = [1.0]",
                "area = 1.0",
                "gamma = 0.3",
                "",
                "[scan]",
                "epsilons = [0.2, 0.1, 0.05]",
                'profile = "solve"',
                "starts = 1",
            ]
        )
    )
    out = tmp_path / "scan-run"
    result = invoke(runner, ["--config", str(cfg), "--out", str(out), "scan-epsilon"])
    assert result.exit_code == 0
    printed = json.loads(result.output)
    ratios = [row["ratio"] for row in printed["rows"]]
    assert len(ratios) == 3
    # trend toward 1 with the final ratio closest
    assert abs(ratios[-1] - 1.0) <= abs(ratios[0] - 1.0)
    lines = (out / "scan.csv").read_text().splitlines()
    assert lines[0] == "epsilon,E_total,E_potential,E_exchange,E_surfactant,sharp_target,ratio,rho_mass,tv_u"
    assert len(lines) == 4

    out2 = tmp_path / "rec-run"
    result = invoke(runner, ["--config", str(cfg), "--out", str(out2), "recovery"])
    assert result.exit_code == 0
    printed = json.loads(result.output)
    assert len(printed["rows"]) == 3
    gaps = [row["pairing_gap"] for row in printed["rows"]]
    assert gaps[-1] <= gaps[0]
    u0 = read_field_csv(out2 / "u_0.csv")
    assert u0.values.shape == (1280,)
    masses = [row["rho_mass"] for row in printed["rows"]]
    for m in masses:
        assert m == pytest.approx(0.3, rel=1e-9)


def test_out_dir_from_environment(runner, tmp_path):
    cfg = tmp_path / "energy.toml"
    cfg.write_text(ENERGY_TOML.format(extra=""))
    out = tmp_path / "env-run"
    result = runner.invoke(
        main,
        ["--config", str(cfg), "energy"],
        env={"NONLOCAL_SURFACTANT_OUT": str(out)},
        catch_exceptions=False,
    )
    assert result.exit_code == 0
    assert (out / "manifest.json").exists()


def test_round_floats_precision():
    obj = {"x": 1.23456789012345678, "n": 7, "flag": True, "s": "keep"}
    got = round_floats(obj, 3)
    assert got == {"x": 1.23, "n": 7, "flag": True, "s": "keep"}
    assert round_floats(np.float64(2.0) / 3.0, 12) == 0.666666666667
