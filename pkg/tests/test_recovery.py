"""Diffuse realizations, scans, and limit diagnostics."""

import numpy as np
import pytest

from nonlocal_surfactant.cell import CellProblem, sigma_table, solve_cell
from nonlocal_surfactant.energy import EnergyParams, total_energy
from nonlocal_surfactant.fields import (
    DomainError,
    KernelSpec,
    clamped,
    constant_field,
    field,
    make_grid,
    periodic,
    quartic_potential,
    sample_kernel,
)
from nonlocal_surfactant.optimize import ConstraintSet, MinimizeOptions, minimize
from nonlocal_surfactant.recovery import (
    RecoveryConfig,
    compactness_diagnostic,
    dirac_contribution,
    epsilon_scan,
    gluing_cross_term,
    pairing_gaps,
    recovery_fields,
    scaled_cell_energy,
    sharp_step_solution,
    weak_star_pairing,
)
from nonlocal_surfactant.sharp import Facet, PolyhedralPhase

SPEC = KernelSpec("gaussian", 0.35)
POT = quartic_potential()


def problem_1d(gamma=0.0, **over):
    base = dict(half_length=3.0, resolution=16)
    base.update(over)
    return CellProblem((1.0,), gamma, SPEC, POT, **base)


def problem_2d(gamma=0.0, **over):
    base = dict(half_length=4.5, resolution=6)
    base.update(over)
    return CellProblem((0.0, 1.0), gamma, KernelSpec("gaussian", 0.5), POT, **base)


def domain_1d(cells=1280, width=4.0):
    return make_grid(1, [width], [cells], [clamped(-1.0, 1.0)])


def domain_2d(cells=160, width=2.0):
    return make_grid(2, [width, width], [cells, cells], [periodic(), clamped(-1.0, 1.0)])


def config_1d(gamma=0.0, epsilons=(0.2, 0.1, 0.05), solved=False, **kw):
    prob = problem_1d(gamma)
    sol = solve_cell(prob, starts=1) if solved else sharp_step_solution(prob)
    facet = Facet((1.0,), 1.0, gamma=gamma, position=0.0)
    return RecoveryConfig(facet, sol, epsilons, domain=domain_1d(), **kw)


def test_config_validation():
    prob = problem_1d(0.0)
    sol = sharp_step_solution(prob)
    facet = Facet((1.0,), 1.0, gamma=0.0)
    with pytest.raises(DomainError):
        RecoveryConfig(facet, sol, ())
    with pytest.raises(DomainError):
        RecoveryConfig(facet, sol, (0.1, 0.2))  # increasing
    with pytest.raises(DomainError):
        RecoveryConfig(facet, sol, (0.2, -0.1))
    with pytest.raises(DomainError):
        RecoveryConfig(Facet((1.0,), 1.0, gamma=0.5), sol, (0.1,))  # load mismatch
    with pytest.raises(DomainError):
        RecoveryConfig(Facet((1.0, 0.0), 1.0), sol, (0.1,))  # dim mismatch
    with pytest.raises(DomainError):
        RecoveryConfig(facet, sol, (0.1,), dirac_masses=(((0.0,), 0.5),))


def test_sharp_step_solution():
    sol = sharp_step_solution(problem_1d())
    assert set(np.unique(sol.u.values)) == {-1.0, 1.0}
    assert np.all(sol.rho.values == 0.0)
    assert sol.mass_used == 0.0
    assert sol.sigma > 0
    # a solved profile does strictly better than the raw step
    solved = solve_cell(problem_1d(), starts=1)
    assert solved.sigma < sol.sigma


def test_recovery_trivial_profile_is_sharp_step():
    rc = config_1d(gamma=0.0)
    eps = 0.2
    u, rho = recovery_fields(rc, eps)
    assert np.all(rho.values == 0.0)
    x = rc.domain.axis_coords(0)
    away = np.abs(x) > 0.05 * eps
    assert np.all(np.abs(u.values[away]) == 1.0)
    assert np.all(np.abs(u.values) <= 1.0)
    assert np.all(np.sign(u.values[x > 0.05 * eps]) == 1.0)


def test_recovery_mass_and_l1_trend():
    rc = config_1d(gamma=0.4, solved=True)
    masses, l1 = [], []
    x = rc.domain.axis_coords(0)
    step = np.sign(x)
    for eps in rc.epsilons:
        u, rho = recovery_fields(rc, eps)
        masses.append(float(np.sum(rho.values)) * rc.domain.cell_volume)
        l1.append(float(np.sum(np.abs(u.values - step))) * rc.domain.cell_volume)
    target = 0.4  # gamma * area, no point masses
    assert masses[-1] == pytest.approx(target, rel=0.01)  # within 1%
    for m in masses:
        assert m == pytest.approx(target, rel=1e-9)  # correction layer is exact
    assert l1[0] > l1[1] > l1[2]
    assert all(np.all(recovery_fields(rc, e)[1].values >= 0) for e in rc.epsilons)


def test_recovery_rejections():
    rc = config_1d()
    with pytest.raises(DomainError):
        recovery_fields(rc, 0.005)  # under-resolved: fewer than 4 cells per eps
    with pytest.raises(DomainError):
        recovery_fields(rc, -0.1)
    # 2d: commensurability and lateral span
    prob = problem_2d()
    sol = sharp_step_solution(prob)
    dom = domain_2d()
    good = Facet((0.0, 1.0), 2.0, gamma=0.0, position=0.0)
    RecoveryConfig(good, sol, (0.2,), domain=dom)  # fine
    with pytest.raises(DomainError):
        recovery_fields(
            RecoveryConfig(good, sol, (0.15,), domain=dom), 0.15
        )  # 2 / 0.15 is not an integer
    with pytest.raises(DomainError):
        recovery_fields(
            RecoveryConfig(Facet((0.0, 1.0), 1.5, gamma=0.0), sol, (0.2,), domain=dom),
            0.2,
        )  # does not span the domain
    tilted = Facet((0.6, 0.8), 2.0, gamma=0.0)
    with pytest.raises(DomainError):
        recovery_fields(RecoveryConfig(tilted, sol, (0.2,), domain=dom), 0.2)


def test_scaling_identity_1d_and_2d():
    for sol in (solve_cell(problem_1d(0.4), starts=1),
                sharp_step_solution(problem_2d(0.0))):
        for eps in (0.5, 0.25):
            breakdown, expected = scaled_cell_energy(sol, eps)
            assert breakdown.total == pytest.approx(expected, rel=1e-12)


def test_epsilon_scan_recovery_only():
    prob = problem_1d(0.4)
    table = sigma_table([(1.0,)], [0.4], prob, starts=1)
    rc = config_1d(gamma=0.4, solved=True)
    report = epsilon_scan(rc, table)
    ratios = report.ratios
    assert len(report.rows) == 3
    for a, b in zip(ratios, ratios[1:]):
        assert abs(b - 1.0) <= abs(a - 1.0) + 0.01
    assert 0.9 <= ratios[-1] <= 1.15
    row = report.rows[0].as_csv_row()
    assert set(row) == {
        "epsilon", "E_total", "E_potential", "E_exchange", "E_surfactant",
        "sharp_target", "ratio", "rho_mass", "tv_u",
    }
    assert row["rho_mass"] == pytest.approx(0.4, rel=1e-9)
    assert report.rows[0].tv_u == pytest.approx(2.0, rel=1e-6)
    with pytest.raises(DomainError):
        epsilon_scan(rc, table, mode="unknown")


def test_epsilon_scan_minimize_each():
    prob = problem_1d(0.2)
    table = sigma_table([(1.0,)], [0.2], prob, starts=1)
    sol = solve_cell(prob, starts=1)
    facet = Facet((1.0,), 1.0, gamma=0.2, position=0.0)
    rc = RecoveryConfig(facet, sol, (0.2, 0.1), domain=domain_1d(cells=320))
    report = epsilon_scan(rc, table, mode="minimize_each",
                          options=MinimizeOptions(max_iters=400, tol=1e-6))
    for r in report.rows:
        assert r.energy.total <= r.extras["recovery_energy"].total + 1e-12
    assert 0.85 <= report.ratios[-1] <= 1.1


def test_dirac_contribution_halving():
    prob = problem_1d(0.0)
    step = sharp_step_solution(prob)
    outside = Facet((1.0,), 1.0, gamma=0.0, position=10.0)
    rc = RecoveryConfig(outside, step, (0.2, 0.1, 0.05),
                        dirac_masses=(((0.3,), 0.5),), domain=domain_1d())
    u, _ = recovery_fields(rc, 0.2)
    assert np.all(u.values == -1.0)  # facet plane is outside the box
    contributions = [dirac_contribution(rc, e) for e in rc.epsilons]
    assert all(c > 0 for c in contributions)
    assert contributions[1] / contributions[0] <= 0.8
    assert contributions[2] / contributions[1] <= 0.8
    no_dirac = config_1d()
    assert dirac_contribution(no_dirac, 0.2) == 0.0


def test_gluing_cross_term_decreases():
    prob = problem_2d(0.0)
    sol = sharp_step_solution(prob)
    facet = Facet((0.0, 1.0), 2.0, gamma=0.0, position=0.0)
    rc = RecoveryConfig(facet, sol, (0.2, 0.1), domain=domain_2d())
    terms = [gluing_cross_term(rc, e) for e in rc.epsilons]
    assert terms[0] > terms[1] > 0.0


def test_weak_star_pairing():
    rc = config_1d(gamma=0.4, solved=True)
    gaps_by_eps = []
    for eps in rc.epsilons:
        _, rho = recovery_fields(rc, eps)
        gaps = pairing_gaps(rho, rc.phase)
        assert gaps[0] == pytest.approx(0.0, abs=1e-12)  # mass bookkeeping
        gaps_by_eps.append(max(gaps))
    assert gaps_by_eps[0] > gaps_by_eps[1] > gaps_by_eps[2]

    zero = constant_field(rc.domain, 0.0, "density")
    gap = weak_star_pairing(zero, rc.phase)
    assert gap == pytest.approx(0.4, abs=1e-12)  # max | integral phi d mu | = mass


def test_compactness_diagnostic():
    grid = make_grid(1, [4.0], [128], [clamped(-1.0, 1.0)])
    kernel_eps = []
    results = []
    for eps in (0.5, 0.25):
        kernel = sample_kernel(SPEC, grid, eps)
        x = grid.axis_coords(0)
        u0 = field(grid, np.tanh(x / eps), "phase")
        r0 = constant_field(grid, 0.05, "density")
        cons = ConstraintSet(mass=0.1, mass_mode="exactly")
        res = minimize(u0, r0, kernel, POT, EnergyParams(eps, 0.02, "extended"),
                       cons, MinimizeOptions(max_iters=600, tol=1e-6))
        results.append(res)
        kernel_eps.append(eps)
    rows = compactness_diagnostic(kernel_eps, results)
    for row in rows:
        assert row["rho_mass"] == pytest.approx(0.1, rel=1e-8)
        assert abs(row["tv_u"] - 2.0) / 2.0 < 0.2  # single interface
        assert row["tv_bounded"] and row["mass_bounded"]

    # constant-phase minimizers have zero variation (periodic box keeps the
    # constant admissible)
    ring = make_grid(1, [4.0], [128], [periodic()])
    flat = minimize(
        constant_field(ring, 1.0, "phase"),
        constant_field(ring, 0.0, "density"),
        sample_kernel(SPEC, ring, 0.5),
        POT,
        EnergyParams(0.5, 0.02, "extended"),
        ConstraintSet(mass=0.0, mass_mode="exactly"),
        MinimizeOptions(max_iters=50, tol=1e-8),
    )
    row = compactness_diagnostic([0.5], [flat])[0]
    assert row["tv_u"] == 0.0
    with pytest.raises(DomainError):
        compactness_diagnostic([0.5], [])
