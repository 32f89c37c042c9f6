"""Acceptance criteria 1-10.  Each test records its sub-checks; the terminal
summary prints one PASS/FAIL line per criterion."""

import time

import numpy as np
import pytest

from atomfilter.potential import PotentialSpec
from atomfilter.poles import poles_at_depth, threshold_depth, track_poles, two_pole_transmittance
from atomfilter.resonance import find_peak, fit_alpha, fit_beta, scan_depth
from atomfilter.scattering import (
    transmission_numeric,
    transmission_numeric_many,
    transmission_square,
    transmittance_at,
)
from atomfilter.wavepacket import (
    CondensateParams,
    Grid,
    ground_state,
    ground_state_energy,
    momentum_distribution,
    stationary_filter_fraction,
    transmitted_region,
)

SQ400 = PotentialSpec("square", 400.0, 0.0, 5.0)
SERIES = {
    "square 300": (PotentialSpec("square", 300.0, 0.0, 5.0), 0.79),
    "square 500": (PotentialSpec("square", 500.0, 0.0, 5.0), 0.85),
    "gaussian 300": (PotentialSpec("gaussian", 300.0, 0.0, 6.0, 2.0), 0.65),
    "gaussian 500": (PotentialSpec("gaussian", 500.0, 0.0, 6.0, 2.0), 0.70),
}


def _all_ok(checks):
    failed = [f"{label}: {detail}" for label, ok, detail in checks if not ok]
    assert not failed, "; ".join(failed)


@pytest.fixture(scope="module")
def timed_trajectory():
    start = time.perf_counter()
    traj = track_poles(SQ400, 199.80, 199.93)
    return traj, time.perf_counter() - start


@pytest.fixture(scope="module")
def timed_scans():
    start = time.perf_counter()
    scans = {name: scan_depth(tpl, np.arange(0.0, tpl.vb_over_hbar, 5.0)) for name, (tpl, _) in SERIES.items()}
    return scans, time.perf_counter() - start


def test_criterion_01_collision_and_threshold(acceptance, timed_trajectory):
    traj, seconds = timed_trajectory
    checks = [
        ("coll", abs(traj.vw_coll - 199.898) <= 0.05, f"{traj.vw_coll:.5f} vs 199.898 +- 0.05"),
        ("thres", abs(traj.vw_thres - 199.901) <= 0.05, f"{traj.vw_thres:.5f} vs 199.901 +- 0.05"),
        ("runtime", seconds < 30, f"{seconds:.2f} s < 30 s"),
    ]
    for c in checks:
        acceptance(1, *c)
    _all_ok(checks)


def test_criterion_02_quadratic_threshold(acceptance):
    start = time.perf_counter()
    est = threshold_depth(SQ400)
    opaque = PotentialSpec("square", 1e5, 0.0, 5.0)
    ratio = threshold_depth(opaque).Kw_thres * opaque.d / np.pi
    seconds = time.perf_counter() - start
    checks = [
        ("2a vw_thres", abs(est.vw_thres - 199.9) <= 1.0, f"{est.vw_thres:.4f} vs 199.9 +- 1.0"),
        ("2b opaque K_w d/pi", abs(ratio - 1.0) < 0.01, f"{ratio:.4f}, need |x - 1| < 0.01"),
        ("runtime", seconds < 1.0, f"{seconds * 1e3:.1f} ms < 1 s"),
    ]
    for c in checks:
        acceptance(2, *c)
    _all_ok(checks)


def test_criterion_03_alpha_fits(acceptance, timed_scans):
    scans, seconds = timed_scans
    checks = []
    for name, (_, target) in SERIES.items():
        alpha = fit_alpha(scans[name]).value
        checks.append((name, abs(alpha - target) <= 0.03, f"alpha {alpha:.4f} vs {target} +- 0.03"))
    checks.append(("runtime", seconds < 600, f"{seconds:.0f} s < 600 s"))
    for c in checks:
        acceptance(3, *c)
    _all_ok(checks)


def test_criterion_04_threshold_pole_pair(acceptance, timed_trajectory):
    traj, _ = timed_trajectory
    ratio = traj.kappa_thres / traj.kappa_coll
    kappa = traj.kappa_thres
    k = np.linspace(1e-8, 20 * kappa, 5001)
    dev = np.max(np.abs(two_pole_transmittance(0j, -1j * kappa, k) - kappa**2 / (k**2 + kappa**2)))
    checks = [
        ("kappa ratio", abs(ratio - 2.0) <= 0.1, f"kappa_thres/kappa_coll = {ratio:.4f}"),
        ("closed form", dev < 1e-10, f"max dev {dev:.1e}"),
    ]
    for c in checks:
        acceptance(4, *c)
    _all_ok(checks)


def test_criterion_05_two_pole_near_threshold(acceptance, timed_trajectory):
    traj, _ = timed_trajectory
    worst, n = 0.0, 0
    for vw in np.linspace(traj.vw_thres - 0.05, traj.vw_thres + 0.05, 11):
        k1, k2 = poles_at_depth(SQ400, vw, traj)
        k = np.linspace(1e-7, 6 * max(abs(k1), abs(k2)), 2000)
        exact = transmittance_at(SQ400.with_depth(vw), k)
        worst = max(worst, float(np.max(np.abs(exact - two_pole_transmittance(k1, k2, k)))))
        n += 1
    ok = acceptance(5, "max |dT2|", worst < 0.02, f"{worst:.2e} < 0.02 over {n} depths")
    assert ok


def test_criterion_06_unitarity_and_oracle(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        shape = rng.choice(["square", "gaussian"])
        vb = rng.uniform(50, 600)
        spec = PotentialSpec(shape, vb, rng.uniform(0, 0.95) * vb, 5.0 if shape == "square" else 6.0, 2.0)
        r = transmission_numeric(spec, rng.uniform(0.002, 1.2))
        worst = max(worst, abs(r.transmittance + r.reflectance - 1.0))
    oracle = 0.0
    for _ in range(20):
        spec = PotentialSpec("square", rng.uniform(50, 600), 0.0, 5.0)
        spec = spec.with_depth(rng.uniform(0, 0.95) * spec.vb_over_hbar)
        k = rng.uniform(0.002, 1.2, 50)
        T, _ = transmission_numeric_many(spec, k)
        oracle = max(oracle, float(np.max(np.abs(T - transmission_square(spec, k)))))
    seconds = time.perf_counter() - start
    checks = [
        ("unitarity", worst <= 1e-9, f"max ||T|2+|R|2-1| = {worst:.1e} over 1000 draws"),
        ("square oracle", oracle < 1e-8, f"max |dT| = {oracle:.1e}"),
        ("runtime", seconds < 60, f"{seconds:.1f} s < 60 s"),
    ]
    for c in checks:
        acceptance(6, *c)
    _all_ok(checks)


def test_criterion_07_origin_behaviour(acceptance, timed_trajectory):
    traj, _ = timed_trajectory
    checks = []
    for spec in (SQ400.with_depth(120.0), PotentialSpec("gaussian", 300.0, 100.0, 6.0, 2.0)):
        k = np.array([1e-3, 1e-4, 1e-5])
        ratio = transmittance_at(spec, k) / k**2
        spread = float(np.ptp(ratio) / ratio.mean())
        checks.append((f"{spec.shape} quadratic", spread < 0.01, f"|T|2/k2 spread {spread:.1e}"))
    t0 = float(transmittance_at(SQ400.with_depth(traj.vw_thres), np.array([1e-7]))[0])
    checks.append(("threshold T(0)", abs(t0 - 1.0) < 1e-6, f"|T(1e-7)|2 = {t0:.8f}"))
    for c in checks:
        acceptance(7, *c)
    _all_ok(checks)


def test_criterion_08_breit_wigner_laws(acceptance, timed_scans):
    scans, _ = timed_scans
    checks = []
    for name, scan in scans.items():
        v = np.array([p.v_R for _, p in scan.sharp_points()])
        mono = bool(np.all(np.diff(v) < 0))
        rms = fit_beta(scan).residual
        checks.append((f"{name} v_R", mono, f"{v.size} sharp peaks, strictly decreasing"))
        checks.append((f"{name} ln dv", rms < 0.05, f"rms {rms:.1e} < 0.05"))
    for c in checks:
        acceptance(8, *c)
    _all_ok(checks)


@pytest.mark.slow
def test_criterion_09_gpe_suite(acceptance, fig5_runs, fig5_doubled):
    checks = []
    params = CondensateParams(N=0.0)
    grid = Grid(-1000.0, 1000.0, 2**13)
    x = grid.x
    psi = ground_state(params, grid, initial=np.exp(-((x - 15.0) ** 2) / 5000.0))
    e = ground_state_energy(psi, params)
    rel = abs(e - 0.5 * params.omega_x) / (0.5 * params.omega_x)
    checks.append(("N=0 energy", rel < 1e-6, f"rel err {rel:.1e}"))
    drift = max(abs(rep.final_state.norm() - 1.0) for rep, _ in fig5_runs.values())
    checks.append(("norm drift", drift < 1e-8, f"{drift:.1e} after 8 s"))
    coarse, _ = fig5_runs[150.0]
    worst = 0.0
    for a, b in ((coarse.distributions[8.0], fig5_doubled.distributions[8.0]),
                 (coarse.transmitted, fig5_doubled.transmitted)):
        fine = np.interp(a.v, b.v, b.density)
        worst = max(worst, float(np.max(np.abs(fine - a.density)) / a.density.max()))
    checks.append(("grid doubling", worst < 1e-4, f"max rel change {worst:.1e}"))
    slowest = max(s for _, s in fig5_runs.values())
    checks.append(("runtime", slowest < 600, f"slowest run {slowest:.0f} s < 600 s"))
    for c in checks:
        acceptance(9, *c)
    _all_ok(checks)


@pytest.mark.slow
def test_criterion_10_fig5_endpoint(acceptance, fig5_runs):
    checks = []
    for vw, (rep, _) in fig5_runs.items():
        spec = rep.config.potential
        res = find_peak(spec, (0.02, 0.05))
        region = transmitted_region(spec, rep.final_state.grid)
        peak = momentum_distribution(rep.final_state, region=region, pad=16).peak_velocity()
        checks.append((f"{vw:g} peak", abs(peak - res.v_R) < res.delta_v_R,
                       f"|{peak:.6f} - {res.v_R:.6f}| < {res.delta_v_R:.6f}"))
        oracle = stationary_filter_fraction(spec, rep.states[0.8])
        rel = abs(rep.transmitted_fraction - oracle) / oracle
        checks.append((f"{vw:g} fraction", rel < 0.10,
                       f"{rep.transmitted_fraction:.5f} vs oracle {oracle:.5f} ({rel:.1%})"))
    for c in checks:
        acceptance(10, *c)
    _all_ok(checks)
