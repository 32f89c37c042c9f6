import csv

import numpy as np
import pytest

from atomfilter.errors import InsufficientData, MultiplePeaks, NoPeak, TrackingLost
from atomfilter.potential import PotentialSpec, velocity_to_wavenumber
from atomfilter.poles import threshold_depth
from atomfilter.resonance import (
    DepthScan,
    default_window,
    find_peak,
    fit_alpha,
    fit_beta,
    locate_peak,
    scan_depth,
)
from atomfilter.scattering import transmittance_of_velocity

SQ300 = PotentialSpec("square", 300.0, 0.0, 5.0)
SQ400 = PotentialSpec("square", 400.0, 0.0, 5.0)
SQ500 = PotentialSpec("square", 500.0, 0.0, 5.0)


@pytest.fixture(scope="module")
def scan300():
    return scan_depth(SQ300, np.arange(0.0, 300.0, 5.0))


@pytest.fixture(scope="module")
def scan500():
    return scan_depth(SQ500, np.arange(0.0, 500.0, 5.0))


def brute_force(spec, window, n=1_000_000):
    v = np.linspace(*window, n)
    v[0] = max(v[0], 1e-12)
    t = transmittance_of_velocity(spec, v)
    i = int(np.argmax(t))
    half = 0.5 * t[i]
    right = i + int(np.argmax(t[i:] < half))
    left = i - int(np.argmax(t[i::-1] < half))
    # linear interpolation of both crossings
    xr = np.interp(half, [t[right], t[right - 1]], [v[right], v[right - 1]])
    xl = np.interp(half, [t[left], t[left + 1]], [v[left], v[left + 1]])
    return v[i], xr - xl, v[1] - v[0]


def test_matches_brute_force_oracle():
    spec = SQ400.with_depth(150.0)
    peak = find_peak(spec, (0.03, 0.09))
    v_bf, w_bf, h = brute_force(spec, (0.03, 0.09))
    assert abs(peak.v_R - v_bf) <= max(1e-6 * v_bf, h)
    assert peak.delta_v_R == pytest.approx(w_bf, rel=1e-6)


@pytest.mark.parametrize("seed", range(20))
def test_random_specs_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    vb = rng.uniform(200, 600)
    spec = PotentialSpec("square", vb, rng.uniform(0, 0.4) * vb, 5.0)  # below threshold
    first = find_peak(spec, default_window(spec), select="lowest")
    window = (max(first.v_R - 3 * first.delta_v_R, 0.0), first.v_R + 3 * first.delta_v_R)
    v_bf, w_bf, h = brute_force(spec, window, n=200_000)
    peak = find_peak(spec, window)
    assert abs(peak.v_R - v_bf) <= max(1e-6 * v_bf, h)
    assert peak.delta_v_R == pytest.approx(w_bf, rel=1e-5)


def test_first_peak_is_sharp():
    assert find_peak(SQ300, (0.0, 0.12), select="lowest").sharp


def test_threshold_width_equals_kappa():
    est = threshold_depth(SQ400)
    from atomfilter.poles import track_poles
    traj = track_poles(SQ400, 199.8, 199.93)
    peak = find_peak(SQ400.with_depth(traj.vw_thres), (0.0, 0.01))
    assert peak.clamped
    dk = velocity_to_wavenumber(peak.delta_v_R)
    assert dk == pytest.approx(traj.kappa_thres, rel=0.02)
    assert est.kappa_thres == pytest.approx(traj.kappa_thres, rel=0.02)


def test_errors():
    with pytest.raises(NoPeak):
        find_peak(SQ300, (0.095, 0.12))  # falling flank only
    with pytest.raises(MultiplePeaks):
        find_peak(SQ300, (0.0, 0.5))


def test_locate_peak_on_synthetic_lorentzian():
    f = lambda x: 1.0 / (1.0 + ((x - 3.0) / 0.25) ** 2)
    p = locate_peak(f, (0.0, 10.0))
    assert p.v_R == pytest.approx(3.0, rel=1e-9)
    assert p.delta_v_R == pytest.approx(0.5, rel=1e-9)
    assert not p.clamped


def test_scan_monotone_in_sharp_regime(scan300):
    pts = scan300.sharp_points()
    v = np.array([p.v_R for _, p in pts])
    w = np.array([p.delta_v_R for _, p in pts])
    assert len(pts) > 20
    assert np.all(np.diff(v) < 0)
    assert np.all(np.diff(w) < 0)


def test_scan_endpoint_near_threshold():
    scan = scan_depth(SQ400, np.arange(0.0, 250.0, 0.1))
    assert abs(scan.endpoint() - 199.9) <= 0.2


def test_gaussian_fig5_depths_sharp():
    g = PotentialSpec("gaussian", 300.0, 0.0, 6.0, 2.0)
    for vw in (140.0, 150.0, 160.0):
        assert find_peak(g.with_depth(vw), (0.02, 0.05)).sharp


def test_alpha_square_300(scan300):
    assert fit_alpha(scan300).value == pytest.approx(0.79, abs=0.03)


def test_alpha_square_500(scan500):
    assert fit_alpha(scan500).value == pytest.approx(0.85, abs=0.03)


def test_alpha_law_predicts_velocities(scan300):
    # first-order law: checked over the Breit-Wigner part of the sharp regime
    fit = fit_alpha(scan300)
    pts = [(d, p) for d, p in scan300.sharp_points() if p.v_R > 2 * p.delta_v_R]
    vw = np.array([d for d, _ in pts])
    v = np.array([p.v_R for _, p in pts])
    pred = fit.predict(SQ300, vw)
    assert np.max(np.abs(pred - v)) / fit.v0 < 0.03


def test_beta_fit(scan300, scan500):
    b300, b500 = fit_beta(scan300), fit_beta(scan500)
    assert b300.value > 0 and b500.value > 0
    assert b300.residual < 0.05
    # the more opaque barrier decays slightly more slowly with depth
    assert b500.value < b300.value
    assert b300.delta_v0_fit == pytest.approx(b300.delta_v0_observed, rel=0.02)


def test_insufficient_data():
    scan = scan_depth(SQ300, [0.0, 5.0, 10.0])
    with pytest.raises(InsufficientData):
        fit_alpha(scan)
    with pytest.raises(InsufficientData):
        fit_beta(DepthScan(SQ300))


def test_scan_rejects_unordered_depths():
    with pytest.raises(ValueError):
        scan_depth(SQ300, [10.0, 5.0])


def test_scan_first_depth_must_have_peak():
    with pytest.raises(TrackingLost):
        scan_depth(SQ300, [0.0, 5.0], window=(0.095, 0.12))


def test_scan_csv(tmp_path, scan300):
    scan300.to_csv(tmp_path / "s.csv")
    rows = list(csv.reader(open(tmp_path / "s.csv")))
    assert rows[0] == ["vw_over_hbar_per_s", "v_R_cm_per_s", "delta_v_R_cm_per_s",
                       "peak_transmittance", "sharp", "clamped"]
    assert rows[1][4] == "true"
