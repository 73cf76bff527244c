"""Command line interface: one entry point per experiment kind.

Every command reads a TOML config, runs one library operation, writes its
outputs plus a manifest.json under the output directory, and prints a JSON
summary to stdout. Exit codes: 0 success, 1 domain error (bad values,
infeasible geometry), 2 usage error (unknown command, missing config file).

With threads = 1 identical config and seed reproduce outputs byte for byte;
multi-start initializations derive from the seed alone.
"""

from __future__ import annotations

import functools
import json
import os
import subprocess
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import click
import numpy as np

from . import config as cfgmod
from .cell import (
    direction_from_angle,
    sigma_lookup,
    sigma_table,
    solve_cell,
    table_from_solutions,
)
from .energy import EnergyParams, total_energy
from .fields import DomainError, sample_kernel
from .fileio import (
    DEFAULT_PRECISION,
    fmt,
    read_table,
    write_field_csv,
    write_json,
    write_manifest,
    write_scan_csv,
    write_table,
)
from .optimize import grad_check, minimize
from .recovery import (
    RecoveryConfig,
    dirac_contribution,
    epsilon_scan,
    pairing_gaps,
    recovery_fields,
    sharp_step_solution,
)
from .sharp import PolyhedralPhase, limit_energy

__all__ = ["main"]


def artifact_version() -> str:
    """git describe when running from a checkout, package version otherwise."""
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=here,
            capture_output=True,
            text=True,
            timeout=10,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except OSError:
        pass
    try:
        from importlib.metadata import version

        return version("artifact")
    except Exception:
        return "unknown"


def round_floats(obj, precision: int):
    """Round every float in a JSON-ready structure to n significant digits."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        return float(fmt(obj, precision))
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: round_floats(v, precision) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v, precision) for v in obj]
    if isinstance(obj, np.ndarray):
        return round_floats(obj.tolist(), precision)
    return obj


@dataclass
class RunContext:
    cfg: dict | None
    seed: int
    threads: int
    out_dir: Path
    precision: int

    def resolved_config(self) -> dict:
        cfg = dict(self.cfg or {})
        cfg["global"] = {
            "seed": self.seed,
            "threads": self.threads,
            "output_dir": str(self.out_dir),
            "precision": self.precision,
        }
        return cfg


def _context(config_path, seed, threads, out_flag) -> RunContext:
    cfg = cfgmod.load_toml(config_path) if config_path else None
    g = (cfg or {}).get("global", {})
    if seed is None:
        seed = int(g.get("seed", 0))
    if threads is None:
        threads = int(g.get("threads", 1))
    if threads < 1:
        raise DomainError(f"bad value for global.threads: {threads}")
    out = out_flag or g.get("output_dir")
    if out is None:
        out = os.environ.get("NONLOCAL_SURFACTANT_OUT", "out")
    precision = int(g.get("precision", DEFAULT_PRECISION))
    if precision < 1:
        raise DomainError(f"bad value for global.precision: {precision}")
    return RunContext(cfg, seed, threads, Path(out), precision)


def guarded(fn):
    """Map DomainError to exit code 1 with the message on stderr."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DomainError as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(1)

    return wrapper


# Commands in one family share input sections, so one config file can
# drive all of them; sections from a different family are still rejected.
FIELD_SECTIONS = [
    "grid", "kernel", "potential", "params", "fields", "constraints",
    "options", "gradcheck",
]
CELL_SECTIONS = ["kernel", "potential", "cell", "solve", "table", "options"]
SHARP_SECTIONS = ["sharp", "facet", "dirac"]
SCAN_SECTIONS = [
    "grid", "kernel", "potential", "cell", "facet", "dirac", "scan", "options",
]


def _require_config(ctx: RunContext, sections) -> dict:
    if ctx.cfg is None:
        raise click.UsageError("this command needs --config PATH")
    cfgmod.validate_config(ctx.cfg, list(sections) + ["global"])
    return ctx.cfg


def _emit(ctx: RunContext, obj) -> None:
    click.echo(json.dumps(round_floats(obj, ctx.precision), sort_keys=True, indent=2))


def _finish(ctx: RunContext, command: str, outputs) -> None:
    names = sorted(outputs)
    write_manifest(ctx.out_dir, command, ctx.resolved_config(), artifact_version(), names)


def _outdir(ctx: RunContext) -> Path:
    ctx.out_dir.mkdir(parents=True, exist_ok=True)
    return ctx.out_dir


@click.group()
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="TOML run configuration.",
)
@click.option("--seed", type=int, default=None, help="Override global.seed.")
@click.option("--threads", type=int, default=None, help="Override global.threads.")
@click.option(
    "--out",
    "out_flag",
    type=click.Path(file_okay=False),
    default=None,
    help="Output directory (falls back to config, then NONLOCAL_SURFACTANT_OUT).",
)
@click.pass_context
@guarded
def main(click_ctx, config_path, seed, threads, out_flag):
    """Non-local phase field energies with surfactant: experiment runner."""
    click_ctx.obj = _context(config_path, seed, threads, out_flag)


# ---------------------------------------------------------------------------
# energy and minimize


def _energy_inputs(ctx: RunContext, cfg: dict):
    grid = cfgmod.build_grid(cfg)
    spec = cfgmod.build_kernel_spec(cfg)
    potential = cfgmod.build_potential(cfg)
    params = cfgmod.build_params(cfg)
    kernel = sample_kernel(spec, grid, params.epsilon)
    u, rho = cfgmod.build_fields(cfg, grid, ctx.seed)
    return grid, kernel, potential, params, u, rho


@main.command()
@click.pass_obj
@guarded
def energy(ctx: RunContext):
    """Evaluate the three-term energy for configured fields."""
    cfg = _require_config(ctx, FIELD_SECTIONS)
    _, kernel, potential, params, u, rho = _energy_inputs(ctx, cfg)
    breakdown = total_energy(u, rho, kernel, potential, params)
    out = _outdir(ctx)
    result = {"energy": breakdown.as_dict(), "epsilon": params.epsilon}
    write_json(out / "energy.json", round_floats(result, ctx.precision))
    _finish(ctx, "energy", ["energy.json"])
    _emit(ctx, result)


@main.command("minimize")
@click.pass_obj
@guarded
def minimize_cmd(ctx: RunContext):
    """Constrained minimization from configured initial fields."""
    cfg = _require_config(ctx, FIELD_SECTIONS)
    grid, kernel, potential, params, u0, rho0 = _energy_inputs(ctx, cfg)
    constraints = cfgmod.build_constraints(cfg, grid)
    options = cfgmod.build_options(cfg)
    res = minimize(u0, rho0, kernel, potential, params, constraints, options)
    exact = total_energy(
        res.u, res.rho, kernel, potential, replace(params, smoothing_delta=0.0)
    )
    out = _outdir(ctx)
    write_field_csv(out / "u.csv", res.u)
    write_field_csv(out / "rho.csv", res.rho)
    result = {
        "energy": res.energy.as_dict(),
        "energy_exact": exact.as_dict(),
        "converged": res.converged,
        "iterations": res.iterations,
        "rho_mass": float(np.sum(res.rho.values)) * grid.cell_volume,
        "history": list(res.history),
    }
    write_json(out / "result.json", round_floats(result, ctx.precision))
    _finish(
        ctx,
        "minimize",
        ["u.csv", "u.csv.meta.json", "rho.csv", "rho.csv.meta.json", "result.json"],
    )
    summary = dict(result)
    summary.pop("history")
    _emit(ctx, summary)


# ---------------------------------------------------------------------------
# cell problems


def _cell_options(cfg: dict):
    return cfgmod.build_options(cfg) if "options" in cfg else None


@main.group()
def cell():
    """Periodic-strip cell problems defining the surface tension."""


@cell.command("sigma")
@click.pass_obj
@guarded
def cell_sigma(ctx: RunContext):
    """Solve one cell problem and report sigma."""
    cfg = _require_config(ctx, CELL_SECTIONS)
    problem = cfgmod.build_cell_problem(cfg)
    starts = int(cfg.get("solve", {}).get("starts", 3))
    sol = solve_cell(problem, options=_cell_options(cfg), starts=starts, seed=ctx.seed)
    out = _outdir(ctx)
    write_field_csv(out / "u.csv", sol.u)
    write_field_csv(out / "rho.csv", sol.rho)
    result = {
        "sigma": sol.sigma,
        "gamma": problem.gamma,
        "direction": list(problem.direction),
        "mass_used": sol.mass_used,
        "energy": sol.energy.as_dict(),
        "diagnostics": sol.diagnostics,
    }
    write_json(out / "cell.json", round_floats(result, ctx.precision))
    _finish(
        ctx,
        "cell sigma",
        ["u.csv", "u.csv.meta.json", "rho.csv", "rho.csv.meta.json", "cell.json"],
    )
    _emit(ctx, result)


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p.strip() != ""]
    except ValueError as e:
        raise DomainError(f"bad value for {what}: {e}") from e


@cell.command("table")
@click.option("--gammas", default=None, help="Comma-separated surfactant loads.")
@click.option("--angles", default=None, help="Comma-separated normal angles (radians).")
@click.pass_obj
@guarded
def cell_table(ctx: RunContext, gammas, angles):
    """Solve a grid of cell problems and write the sigma table CSV."""
    cfg = _require_config(ctx, CELL_SECTIONS)
    template = cfgmod.build_cell_problem(cfg)
    tab = cfg.get("table", {})
    starts = int(tab.get("starts", cfg.get("solve", {}).get("starts", 3)))

    gamma_list = (
        _parse_floats(gammas, "--gammas") if gammas is not None else tab.get("gammas")
    )
    if gamma_list is None:
        gamma_list = [template.gamma]

    angle_list = (
        _parse_floats(angles, "--angles") if angles is not None else tab.get("angles")
    )
    if angle_list is not None:
        directions = [direction_from_angle(a, template.dim) for a in angle_list]
    else:
        directions = [template.direction]

    table = sigma_table(
        directions,
        gamma_list,
        template,
        options=_cell_options(cfg),
        starts=starts,
        seed=ctx.seed,
        threads=ctx.threads,
    )
    out = _outdir(ctx)
    write_table(out / "table.csv", table, precision=ctx.precision)
    result = {
        "rows": len(table.directions) * len(table.gammas),
        "valid": int(np.sum(table.valid)),
        "gammas": list(table.gammas),
        "angles": list(table.angles),
        "sigma": table.sigma,
    }
    _finish(ctx, "cell table", ["table.csv", "table.csv.meta.json"])
    _emit(ctx, result)


# ---------------------------------------------------------------------------
# sharp limit and recovery


@main.command()
@click.option(
    "--table",
    "table_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Sigma table CSV (overrides sharp.table).",
)
@click.pass_obj
@guarded
def sharp(ctx: RunContext, table_path):
    """Evaluate the sharp-interface limit energy of a polyhedral phase."""
    cfg = _require_config(ctx, SHARP_SECTIONS)
    path = table_path or cfg.get("sharp", {}).get("table")
    if path is None:
        raise DomainError("missing config key sharp.table (or pass --table)")
    table = read_table(path)
    facets = cfgmod.build_facets(cfg)
    if not facets:
        raise DomainError("sharp needs at least one [[facet]]")
    phase = PolyhedralPhase(facets, cfgmod.build_diracs(cfg))
    total = limit_energy(phase, table)
    per_facet = [
        {
            "normal": list(f.normal),
            "area": f.area,
            "gamma": f.gamma,
            "sigma": sigma_lookup(table, f.normal, f.gamma),
            "energy": sigma_lookup(table, f.normal, f.gamma) * f.area,
        }
        for f in facets
    ]
    result = {
        "limit_energy": total,
        "facets": per_facet,
        "point_mass": phase.total_point_mass,
    }
    out = _outdir(ctx)
    write_json(out / "sharp.json", round_floats(result, ctx.precision))
    _finish(ctx, "sharp", ["sharp.json"])
    _emit(ctx, result)


def _recovery_problem(cfg: dict, facet):
    """Cell problem matched to the facet: same normal, same load."""
    section = dict(cfg.get("cell", {}))
    if "direction" not in section and "angle" not in section:
        section["direction"] = list(facet.normal)
    if "gamma" not in section:
        section["gamma"] = facet.gamma
    patched = dict(cfg)
    patched["cell"] = section
    problem = cfgmod.build_cell_problem(patched)
    if abs(float(np.dot(problem.direction, facet.normal)) - 1.0) > 1e-9:
        raise DomainError("cell.direction must equal the facet normal")
    if abs(problem.gamma - facet.gamma) > 1e-12:
        raise DomainError("cell.gamma must equal facet.gamma")
    return problem


def _recovery_config(ctx: RunContext, cfg: dict):
    grid = cfgmod.build_grid(cfg)
    facets = cfgmod.build_facets(cfg)
    if len(facets) != 1:
        raise DomainError("recovery runs need exactly one [[facet]]")
    facet = facets[0]
    problem = _recovery_problem(cfg, facet)
    scan = cfg.get("scan", {})
    if "epsilons" not in scan:
        raise DomainError("missing config key scan.epsilons")
    profile = scan.get("profile", "solve")
    starts = int(scan.get("starts", 3))
    if profile == "solve":
        sol = solve_cell(
            problem, options=_cell_options(cfg), starts=starts, seed=ctx.seed
        )
    elif profile == "step":
        sol = sharp_step_solution(problem)
    else:
        raise DomainError(f"bad value for scan.profile: {profile!r}")
    rc = RecoveryConfig(
        facet,
        sol,
        tuple(float(e) for e in scan["epsilons"]),
        cfgmod.build_diracs(cfg),
        domain=grid,
    )
    return rc, scan


@main.command()
@click.pass_obj
@guarded
def recovery(ctx: RunContext):
    """Build the diffuse realizations of a sharp facet across epsilon."""
    cfg = _require_config(ctx, SCAN_SECTIONS)
    rc, _ = _recovery_config(ctx, cfg)
    out = _outdir(ctx)
    outputs = []
    rows = []
    for i, eps in enumerate(rc.epsilons):
        u, rho = recovery_fields(rc, eps)
        for name, f in ((f"u_{i}.csv", u), (f"rho_{i}.csv", rho)):
            write_field_csv(out / name, f)
            outputs += [name, name + ".meta.json"]
        gaps = pairing_gaps(rho, rc.phase)
        rows.append(
            {
                "epsilon": eps,
                "rho_mass": float(np.sum(rho.values)) * u.grid.cell_volume,
                "pairing_gap": max(gaps),
                "dirac_energy": dirac_contribution(rc, eps),
                "files": [f"u_{i}.csv", f"rho_{i}.csv"],
            }
        )
    result = {"rows": rows, "sigma": rc.cell_solution.sigma}
    write_json(out / "recovery.json", round_floats(result, ctx.precision))
    outputs.append("recovery.json")
    _finish(ctx, "recovery", outputs)
    _emit(ctx, result)


@main.command("scan-epsilon")
@click.pass_obj
@guarded
def scan_epsilon(ctx: RunContext):
    """Compare diffuse energies against the sharp target across epsilon."""
    cfg = _require_config(ctx, SCAN_SECTIONS)
    rc, scan = _recovery_config(ctx, cfg)
    if scan.get("table") is not None:
        table = read_table(scan["table"])
    else:
        # single-entry table at the facet's own direction and load
        table = table_from_solutions([rc.cell_solution])
    mode = scan.get("mode", "recovery_only")
    report = epsilon_scan(rc, table, mode=mode, options=_cell_options(cfg))
    out = _outdir(ctx)
    write_scan_csv(out / "scan.csv", report, precision=ctx.precision)
    rows = [r.as_csv_row() for r in report.rows]
    result = {"mode": report.mode, "rows": rows}
    write_json(out / "scan.json", round_floats(result, ctx.precision))
    _finish(ctx, "scan-epsilon", ["scan.csv", "scan.json"])
    _emit(ctx, result)


# ---------------------------------------------------------------------------
# checks


@main.command()
@click.pass_obj
@guarded
def gradcheck(ctx: RunContext):
    """Finite-difference audit of the analytic gradient. Exit 1 on failure."""
    cfg = _require_config(ctx, FIELD_SECTIONS)
    grid = cfgmod.build_grid(cfg)
    spec = cfgmod.build_kernel_spec(cfg)
    potential = cfgmod.build_potential(cfg)
    params = cfgmod.build_params(cfg)
    kernel = sample_kernel(spec, grid, params.epsilon)
    gc = cfg.get("gradcheck", {})
    n_coords = int(gc.get("n_coords", 64))
    fd_step = float(gc.get("fd_step", 1e-6))
    tol = float(gc.get("tol", 1e-5))
    u = cfgmod.build_field(
        {"kind": "random", "lo": -1.0, "hi": 1.0}, grid, "phase", ctx.seed
    )
    rho = cfgmod.build_field(
        {"kind": "random", "lo": 0.0, "hi": 2.0, "seed_offset": 1},
        grid,
        "density",
        ctx.seed,
    )
    err = grad_check(
        u, rho, kernel, potential, params, fd_step=fd_step, n_coords=n_coords,
        seed=ctx.seed,
    )
    passed = err < tol
    result = {"max_rel_error": err, "tol": tol, "passed": passed}
    out = _outdir(ctx)
    write_json(out / "gradcheck.json", round_floats(result, ctx.precision))
    _finish(ctx, "gradcheck", ["gradcheck.json"])
    _emit(ctx, result)
    if not passed:
        sys.exit(1)


def _selftest_cases():
    """Tiny worked examples with exactly known outcomes."""
    from .fields import (
        KernelSpec,
        clamped,
        constant_field,
        field,
        make_grid,
        open_boundary,
        periodic,
        quartic_potential,
    )
    from .energy import inhomogeneity, truncate
    from .optimize import ConstraintSet, project_density
    from .sharp import Facet, facet_density_from_measure

    def grid_geometry():
        g = make_grid(2, [2.0, 3.0], [4, 6], [periodic(), clamped(-1.0, 1.0)])
        assert g.spacings == (0.5, 0.5)
        assert g.cell_volume == 0.25
        assert g.total_cells == 24

    def tophat_stencil():
        g = make_grid(1, [2.0], [2], [open_boundary()])
        k = sample_kernel(KernelSpec("tophat", 1.0), g, 1.0)
        assert k.offsets.ravel().tolist() == [-1, 1]
        assert np.allclose(k.weights, 0.5)

    def two_cell_energy():
        g = make_grid(1, [2.0], [2], [open_boundary()])
        k = sample_kernel(KernelSpec("tophat", 1.0), g, 1.0)
        u = field(g, [-1.0, 1.0], "phase")
        rho = constant_field(g, 0.0, "density")
        p = EnergyParams(1.0, 0.0, "interior")
        bd = total_energy(u, rho, k, quartic_potential(), p)
        assert (bd.potential, bd.exchange, bd.surfactant) == (0.0, 4.0, 2.0)
        assert bd.total == 6.0

    def density_projection():
        c = ConstraintSet(mass=2.0, mass_mode="exactly")
        got = project_density(np.array([3.0, 1.0]), c, 1.0)
        assert np.allclose(got, [2.0, 0.0], atol=1e-12)
        got = project_density(np.array([0.0, 0.0]), c, 1.0)
        assert np.allclose(got, [1.0, 1.0], atol=1e-12)

    def truncation_is_safe():
        g = make_grid(1, [4.0], [16], [periodic()])
        k = sample_kernel(KernelSpec("gaussian", 0.3), g, 1.0)
        p = EnergyParams(1.0, 0.0, "interior")
        u = field(g, 2.5 * np.tanh(g.axis_coords(0)), "phase")
        rho = constant_field(g, 10.0, "density")
        before = total_energy(u, rho, k, quartic_potential(), p).total
        u_t, rho_t = truncate(u, rho, k, p)
        after = total_energy(u_t, rho_t, k, quartic_potential(), p).total
        assert after <= before + 1e-12
        cap = inhomogeneity(u_t, k, p)
        assert np.array_equal(rho_t.values, np.minimum(rho.values, cap.values))

    def facet_load_bookkeeping():
        f = Facet((0.0, 1.0), 2.0, gamma=0.0)
        (loaded,) = facet_density_from_measure([f], [0.5])
        assert loaded.gamma == 0.25
        assert loaded.surfactant_mass == 0.5

    return [
        ("grid geometry", grid_geometry),
        ("tophat stencil weights", tophat_stencil),
        ("two-cell energy breakdown", two_cell_energy),
        ("density projection", density_projection),
        ("truncation never increases energy", truncation_is_safe),
        ("facet load bookkeeping", facet_load_bookkeeping),
    ]


@main.command()
@click.pass_obj
@guarded
def selftest(ctx: RunContext):
    """Run the bundled worked examples. No config needed."""
    failures = 0
    for name, case in _selftest_cases():
        try:
            case()
        except AssertionError as e:
            failures += 1
            click.echo(f"FAIL - {name}: {e}")
        else:
            click.echo(f"ok - {name}")
    if failures:
        click.echo(f"{failures} selftest case(s) failed", err=True)
        sys.exit(1)
    click.echo("all selftest cases passed")


if __name__ == "__main__":
    main()
