"""Acceptance gate: one test per criterion, one summary line per criterion.

The heavy blowup run is shared between criteria 6 and 9 via a module
fixture; everything else runs at desk scale.  Summary lines appear in the
`acceptance criteria` section of the pytest terminal summary.
"""

import numpy as np
import pytest
import scipy.fft

from conftest import record_criterion

from critnls.grid import (
    ComplexField2D,
    GridSpec,
    kinetic,
    l4norm4,
    mass,
    hs_norm,
)
from critnls.ground_state import c_opt
from critnls.multiplier import MultiplierProfile, apply_I, apply_I_D, run_all_audits
from critnls.dynamics import (
    C0_DEFAULT,
    SolverConfig,
    doubling_check,
    evolve,
    lwp_window,
    variance_check,
)
from critnls.diagnostics import (
    almost_conservation_experiment,
    concentration_scan,
    limit_profile_mass,
    maximizing_checkpoints,
    rescale_profile,
)
from critnls.initial_data import gaussian, random_radial, townes
from critnls.theory import p_of_s, s_q

S = 0.9


def check(num, name, ok, detail):
    line = f"criterion {num:2d} [{name}]: {'PASS' if ok else 'FAIL'} — {detail}"
    record_criterion(line)
    assert ok, line


@pytest.fixture(scope="module")
def blowup_run():
    """A=3 Gaussian collapse on a 512^2 box, shared by criteria 6 and 9."""
    grid = GridSpec(16.0, 512)
    u0 = gaussian(grid, amplitude=3.0, width=1.0)
    cfg = SolverConfig(
        dt_initial=1e-3,
        record_stride=10,
        gradient_ceiling=1e5,
        tail_threshold=1e-6,
    )
    profile = MultiplierProfile(32.0, S)
    record, report = evolve(u0, cfg, 1.0, s=S, profile=profile)
    return record, report, profile


def smooth_random_field(grid, seed):
    """Random spectrum under a Gaussian envelope: smooth, non-radial."""
    rng = np.random.default_rng(seed)
    n = grid.points
    _, _, kmag = grid.wavenumbers()
    coeffs = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    coeffs *= np.exp(-(kmag**2) / 8.0)
    return ComplexField2D(grid, scipy.fft.ifft2(coeffs, norm="ortho"))


def test_criterion_01_ground_state(ground_pet, ground_shoot):
    mass_rel = abs(ground_shoot.mass - ground_pet.mass) / ground_pet.mass
    poho1 = abs(ground_pet.grad2 - ground_pet.mass) / ground_pet.mass
    poho2 = abs(ground_pet.l4norm4 - 2.0 * ground_pet.mass) / (2.0 * ground_pet.mass)
    poho3 = abs(ground_pet.energy) / ground_pet.mass
    ok = (
        mass_rel < 1e-4
        and ground_pet.residual < 1e-8
        and poho1 < 1e-5
        and poho2 < 1e-5
        and poho3 < 1e-5
    )
    check(
        1,
        "ground state",
        ok,
        f"mass agreement {mass_rel:.2e}, residual {ground_pet.residual:.2e}, "
        f"Pohozaev {max(poho1, poho2, poho3):.2e}",
    )


def test_criterion_02_gagliardo_nirenberg(ground_pet):
    copt = c_opt(ground_pet)
    grid = GridSpec(16.0, 128)
    worst = 0.0
    for seed in range(100):
        if seed % 2 == 0:
            f = smooth_random_field(grid, seed)
        else:
            f = random_radial(grid, seed=seed, decay=3.0, l2norm=1.0 + 0.02 * seed)
        ratio = l4norm4(f) / (copt * mass(f) * 2.0 * kinetic(f))
        worst = max(worst, ratio)
    q = ground_pet.field
    q_ratio = l4norm4(q) / (copt * mass(q) * 2.0 * kinetic(q))
    ok = worst <= 1.0 + 1e-6 and abs(q_ratio - 1.0) < 1e-4
    check(
        2,
        "Gagliardo-Nirenberg",
        ok,
        f"worst ratio {worst:.8f} over 100 fields, at Q: {q_ratio:.8f}",
    )


def test_criterion_03_theory_constants():
    sq = s_q()
    err = abs(sq - 0.863325)
    svals = np.linspace(sq + 1e-9, 1.0, 1000)
    pvals = np.array([p_of_s(float(s)) for s in svals])
    ok = err <= 1e-6 + 5e-7 and np.all(pvals < 2.0) and p_of_s(1.0) == 0.0
    check(
        3,
        "theory constants",
        ok,
        f"s_Q = {sq:.7f} (|err| {err:.1e}), max p(s) = {pvals.max():.6f}, "
        f"p(1) = {p_of_s(1.0)}",
    )


def test_criterion_04_multiplier():
    profile = MultiplierProfile(16.0, S)
    reports = run_all_audits(profile, 100000, seed=0)
    violations = sum(r.violations for r in reports)

    x = np.geomspace(1.0, 1e6, 10000)
    bracket = profile.eval_m(x) * (1.0 + x * x) ** 0.25
    monotone = bool(
        np.all(np.diff(bracket) >= -1e-12 * bracket[:-1]) and np.all(bracket >= 1.0 - 1e-12)
    )

    grid = GridSpec(16.0, 256)
    sandwich_ok = True
    for n in (8.0, 16.0, 32.0):
        p = MultiplierProfile(n, S)
        # hermite band exceeds the idealized N^{1-s} constant by at most
        # 3^{4(1-s)/27}; <N> vs N accounts for the remaining slack
        const = (n**2 + 1.0) ** (0.5 * (1.0 - S)) * 3.0 ** (4.0 * (1.0 - S) / 27.0)
        for seed in range(100):
            f = smooth_random_field(grid, seed)
            low = hs_norm(f, S)
            mid = np.sqrt(mass(apply_I_D(p, f)))
            sandwich_ok &= mass(apply_I(p, f)) <= mass(f) * (1.0 + 1e-12)
            sandwich_ok &= low <= mid * (1.0 + 1e-12)
            sandwich_ok &= mid <= const * low * (1.0 + 1e-12)
    ok = violations == 0 and monotone and sandwich_ok
    check(
        4,
        "multiplier audits",
        ok,
        f"{violations} violations over 4x1e5 samples, bracket monotone: {monotone}, "
        f"sandwich: {bool(sandwich_ok)}",
    )


def test_criterion_05_solver_validation(ground_pet):
    grid = GridSpec(16.0, 256)

    record, _ = evolve(gaussian(grid, 1.0, 1.0), SolverConfig(dt_initial=1e-3), 2.0)
    m, e = record.series["mass"], record.series["energy"]
    mass_drift = np.max(np.abs(m - m[0])) / m[0]
    energy_drift = np.max(np.abs(e - e[0])) / abs(e[0])

    q0 = townes(grid)
    record, _ = evolve(q0, SolverConfig(dt_initial=1e-3), 1.0)
    k = record.series["kinetic"]
    kinetic_drift = np.max(np.abs(k - k[0])) / k[0]

    cfg = SolverConfig(
        dt_initial=5e-4, record_stride=20, gradient_ceiling=1e5, tail_threshold=0.9
    )
    record, _ = evolve(gaussian(grid, 3.0, 1.0), cfg, 0.3)
    virial_dev = variance_check(record)

    ok = (
        mass_drift < 1e-10
        and energy_drift < 1e-6
        and kinetic_drift < 1e-2
        and virial_dev < 5e-2
    )
    check(
        5,
        "solver validation",
        ok,
        f"mass {mass_drift:.1e}, energy {energy_drift:.1e}, "
        f"Q kinetic {kinetic_drift:.1e}, virial {virial_dev:.1e}",
    )


def test_criterion_06_blowup_concentration(blowup_run, ground_pet):
    record, report, _ = blowup_run
    kin = record.series["kinetic"]
    blew_up = report.blew_up and report.t_star is not None
    monotone = bool(np.all(np.diff(kin[-10:]) > 0))
    alpha = report.fit_exponent_kinetic
    sigma_exp = report.fit_exponent_sigma
    scan = concentration_scan(record, report.t_star, S, ground_pet.l2norm)
    ok = (
        blew_up
        and monotone
        and 0.4 <= alpha <= 0.7
        and sigma_exp >= S / 2.0 - 0.1
        and np.any(scan.resolved)
        and scan.verdict >= 0.9
    )
    check(
        6,
        "blowup + concentration",
        ok,
        f"stop {report.stop_reason} at t={record.times[-1]:.4f}, "
        f"T*={report.t_star:.4f}, alpha={alpha:.3f}, sigma-exp={sigma_exp:.3f}, "
        f"verdict {scan.verdict:.3f} on {int(np.sum(scan.resolved))} resolved windows",
    )


def test_criterion_07_almost_conservation():
    grid = GridSpec(8.0, 512)
    u0 = random_radial(grid, seed=7, decay=2.5, l2norm=3.0)
    cfg = SolverConfig(dt_initial=1e-3, record_stride=1)
    fit = almost_conservation_experiment(u0, S, [8, 16, 32, 64], cfg, c0=0.0625)
    ok = not fit.inconclusive and fit.slope is not None and fit.slope <= -1.0
    check(
        7,
        "almost conservation",
        ok,
        f"log-log slope {fit.slope if fit.slope is not None else float('nan'):.3f}, "
        f"inconclusive: {fit.inconclusive}, noise floor {fit.noise_floor:.1e}",
    )


def test_criterion_08_doubling_control():
    grid = GridSpec(8.0, 128)
    family = []
    for amp in (0.5, 1.0, 1.5, 2.0, 3.0, 3.5):
        for width in (0.5, 1.0):
            family.append(gaussian(grid, amplitude=amp, width=width))
    for seed in range(8):
        family.append(random_radial(grid, seed=seed, decay=3.5, l2norm=2.0))
    assert len(family) == 20

    profile = MultiplierProfile(16.0, S)
    cfg = SolverConfig(dt_initial=1e-3, record_stride=1, gradient_ceiling=1e6)
    failures = 0
    for u0 in family:
        window = lwp_window(u0, S, profile, C0_DEFAULT)
        record, _ = evolve(u0, cfg, window, s=S, profile=profile)
        if record.times[-1] < window - 1e-12 or not doubling_check(record, window):
            failures += 1
    ok = failures == 0
    check(
        8,
        "doubling control",
        ok,
        f"{failures} failures over 20 members at c0 = {C0_DEFAULT}",
    )


def test_criterion_09_rescaled_profiles(blowup_run, ground_pet):
    record, report, profile = blowup_run
    checkpoints = maximizing_checkpoints(record)
    profiles = [rescale_profile(f, profile) for _, f in checkpoints]
    final = profiles[-5:]
    grads = [p.grad_v for p in final]
    energies = [abs(p.energy_v) for p in final]
    grad_ok = all(0.9 <= g <= 1.0 for g in grads)
    energy_ok = all(a > b for a, b in zip(energies, energies[1:]))
    limit_mass = limit_profile_mass(profiles, 10.0)
    mass_ok = limit_mass >= 0.9 * ground_pet.l2norm
    ok = grad_ok and energy_ok and mass_ok
    check(
        9,
        "rescaled profiles",
        ok,
        f"grad_v in [{min(grads):.3f}, {max(grads):.3f}], |E[v]| decreasing: "
        f"{energy_ok}, limit mass(rho=10) {limit_mass:.3f} vs "
        f"0.9||Q|| = {0.9 * ground_pet.l2norm:.3f}",
    )


def test_criterion_10_determinism(tmp_path):
    from critnls.cli import main

    conf = tmp_path / "run.ini"
    conf.write_text(
        "[run]\nexperiment = evolve\ns = 0.9\n"
        "[grid]\nextent = 8\npoints = 64\n"
        "[initial]\nkind = random_seeded\nseed = 3\ndecay = 3.0\n"
        "[experiment]\nt_end = 0.05\n"
    )
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    rc1 = main(["evolve", "--config", str(conf), "--out", str(out1)])
    rc2 = main(["evolve", "--config", str(conf), "--out", str(out2)])
    same_series = (out1 / "series.csv").read_bytes() == (out2 / "series.csv").read_bytes()
    same_field = (out1 / "final.nls").read_bytes() == (out2 / "final.nls").read_bytes()
    ok = rc1 == 0 and rc2 == 0 and same_series and same_field
    check(
        10,
        "determinism",
        ok,
        f"series.csv identical: {same_series}, final.nls identical: {same_field}",
    )
