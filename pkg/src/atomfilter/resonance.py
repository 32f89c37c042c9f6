"""Resonance peaks of the transmittance and their dependence on well depth."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from .errors import InsufficientData, MultiplePeaks, NoPeak, TrackingLost
from .potential import PotentialSpec, velocity_to_wavenumber, wavenumber_scales, wavenumber_to_velocity
from .scattering import transmittance_of_velocity, write_csv

SHARP = 0.995
COARSE_POINTS = 2000
_ZOOM_POINTS = 41
_REL_TOL = 1e-11


@dataclass(frozen=True)
class ResonancePeak:
    v_R: float  # cm/s
    delta_v_R: float  # cm/s, full width at half height on v > 0
    peak_transmittance: float
    v_left: float
    v_right: float
    clamped: bool = False

    @property
    def sharp(self) -> bool:
        return self.peak_transmittance > SHARP

    def energy_over_hbar(self, spec: PotentialSpec) -> float:
        """E_R / hbar in 1/s."""
        k = velocity_to_wavenumber(self.v_R, spec.constants)
        return k * k / (2.0 * spec.mass)


@dataclass
class DepthScan:
    template: PotentialSpec
    depths: list = field(default_factory=list)
    peaks: list = field(default_factory=list)
    stopped_at: float | None = None
    stop_reason: str | None = None

    def sharp_points(self):
        return [(vw, p) for vw, p in zip(self.depths, self.peaks) if p.sharp]

    @property
    def last_good_depth(self) -> float | None:
        return self.depths[-1] if self.depths else None

    def endpoint(self) -> float | None:
        """Depth where the resonance stops being a usable filter: the first
        non-sharp point, or the depth at which tracking was lost."""
        for vw, p in zip(self.depths, self.peaks):
            if not p.sharp:
                return vw
        return self.stopped_at

    def to_csv(self, path) -> None:
        rows = [(vw, p.v_R, p.delta_v_R, p.peak_transmittance, p.sharp, p.clamped)
                for vw, p in zip(self.depths, self.peaks)]
        write_csv(path, ["vw_over_hbar_per_s", "v_R_cm_per_s", "delta_v_R_cm_per_s",
                         "peak_transmittance", "sharp", "clamped"], rows)


@dataclass(frozen=True)
class FitResult:
    kind: str  # "alpha" or "beta"
    value: float
    residual: float
    n_points: int
    depth_range: tuple
    energy0: float | None = None  # E_R0 / hbar, 1/s
    v0: float | None = None  # v_R0, cm/s
    delta_v0_fit: float | None = None
    delta_v0_observed: float | None = None

    def predict(self, spec: PotentialSpec, vw):
        vw = np.asarray(vw, dtype=float)
        if self.kind == "alpha":
            m = spec.mass
            k0 = velocity_to_wavenumber(self.v0, spec.constants)
            k2 = k0 * k0 - 2.0 * m * self.value * vw
            return wavenumber_to_velocity(np.sqrt(np.clip(k2, 0.0, None)), spec.constants)
        return self.delta_v0_fit * np.exp(-self.value * vw)


def _zoom_max(f, a, b):
    """Locate the maximum of ``f`` in [a, b] by repeated vectorised grids."""
    for _ in range(60):
        grid = np.linspace(a, b, _ZOOM_POINTS)
        vals = f(grid)
        j = int(np.argmax(vals))
        a, b = grid[max(j - 1, 0)], grid[min(j + 1, _ZOOM_POINTS - 1)]
        if b - a <= _REL_TOL * max(abs(grid[j]), 1e-300):
            break
    grid = np.linspace(a, b, _ZOOM_POINTS)
    vals = f(grid)
    j = int(np.argmax(vals))
    return float(grid[j]), float(vals[j])


def _zoom_crossing(f, a, b, fa_positive: bool):
    """Root of f in [a, b] where f changes sign; ``fa_positive`` gives the
    sign at ``a``."""
    for _ in range(60):
        grid = np.linspace(a, b, _ZOOM_POINTS)
        vals = f(grid)
        pos = vals > 0 if fa_positive else vals <= 0
        j = int(np.argmin(pos))  # first index where the sign has flipped
        if pos[j]:
            return float(b)
        a, b = grid[j - 1], grid[j]
        if b - a <= _REL_TOL * max(abs(b), 1e-300):
            break
    return float(0.5 * (a + b))


def find_peak(spec: PotentialSpec, v_window, *, coarse_points: int = COARSE_POINTS,
              select: str | None = None) -> ResonancePeak:
    """Transmittance maximum inside ``v_window`` (cm/s) and its half-height width.

    A window starting at v = 0 is treated as open there: the peak may sit
    arbitrarily close to the origin, and a missing left half-height crossing
    clamps the left edge of the width to 0.

    ``select="lowest"`` picks the lowest-velocity peak instead of raising
    MultiplePeaks.
    """
    return locate_peak(lambda v: transmittance_of_velocity(spec, v), v_window,
                       coarse_points=coarse_points, select=select)


def locate_peak(f, window, *, coarse_points: int = COARSE_POINTS,
                select: str | None = None) -> ResonancePeak:
    """Peak analysis of an arbitrary vectorised curve ``f`` on ``window``.

    Units are whatever ``f`` takes; the poles module uses wavenumbers.
    """
    v_lo, v_hi = map(float, window)
    if not 0 <= v_lo < v_hi:
        raise ValueError("need 0 <= v_lo < v_hi")
    open_origin = v_lo == 0.0
    floor = 1e-9 * v_hi

    grid = np.linspace(floor if open_origin else v_lo, v_hi, coarse_points)
    vals = f(grid)
    top = float(vals.max())
    idx, _ = find_peaks(vals, prominence=1e-3 * top)
    idx = list(idx)
    if open_origin and vals[0] > vals[1] and vals[0] >= 0.5 * top:
        idx.insert(0, 0)
    if not idx:
        # a maximum hugging the open origin has almost no prominence
        j = int(np.argmax(vals))
        if j < grid.size - 1 and (j > 0 or open_origin):
            idx = [j]
    if not idx:
        raise NoPeak(f"transmittance maximum lies on the edge of window ({v_lo:.6g}, {v_hi:.6g}) cm/s")
    if len(idx) > 1:
        if select != "lowest":
            raise MultiplePeaks(f"{len(idx)} local maxima in window ({v_lo:.6g}, {v_hi:.6g}) cm/s")
    i = idx[0]
    a = grid[max(i - 1, 0)] if i > 0 else floor * 1e-3
    b = grid[min(i + 1, grid.size - 1)]
    v_R, t_max = _zoom_max(f, a, b)
    t_max = max(t_max, float(vals[i]))
    half = 0.5 * t_max
    g = lambda v: f(v) - half

    # right crossing; extend beyond the window if needed
    right_grid, right_vals = grid[i:], vals[i:]
    step = v_hi - grid[0]
    tries = 0
    while not np.any(right_vals < half):
        tries += 1
        if tries > 10:
            raise NoPeak("right half-height crossing not found")
        start = right_grid[-1]
        right_grid = np.linspace(start, start + step, coarse_points)
        right_vals = f(right_grid)
    j = int(np.argmax(right_vals < half))
    v_right = _zoom_crossing(g, right_grid[j - 1] if j > 0 else v_R, right_grid[j], True)

    left_grid, left_vals = grid[: i + 1][::-1], vals[: i + 1][::-1]
    clamped = False
    while not np.any(left_vals < half):
        lo = left_grid[-1]
        if lo <= floor * 1.0000001 or lo <= 0:
            clamped = True
            break
        start = max(lo - step, floor)
        left_grid = np.linspace(lo, start, coarse_points)
        left_vals = f(left_grid)
    if clamped:
        v_left = 0.0
    else:
        j = int(np.argmax(left_vals < half))
        v_left = _zoom_crossing(g, left_grid[j], left_grid[j - 1] if j > 0 else v_R, False)
    v_R = max(v_R, floor)
    return ResonancePeak(v_R=v_R, delta_v_R=v_right - v_left, peak_transmittance=t_max,
                         v_left=v_left, v_right=v_right, clamped=clamped)


def default_window(spec: PotentialSpec) -> tuple[float, float]:
    """Velocities below 90% of the barrier-top wavenumber."""
    Kb = wavenumber_scales(spec).Kb
    return 0.0, float(wavenumber_to_velocity(0.9 * Kb, spec.constants))


def scan_depth(template: PotentialSpec, depths, window=None) -> DepthScan:
    """Follow the lowest resonance while the well is deepened.

    Each search window is centred on the extrapolated peak position with a
    half-width of a few peak widths; the scan stops (without raising) when
    the peak can no longer be found there.
    """
    depths = [float(x) for x in depths]
    if any(b <= a for a, b in zip(depths, depths[1:])):
        raise ValueError("depths must be strictly increasing")
    scan = DepthScan(template)
    for n, vw in enumerate(depths):
        spec = template.with_depth(vw)
        if n == 0:
            win = window or default_window(spec)
            sel = "lowest"
        else:
            win = _next_window(scan)
            sel = None
        try:
            peak = find_peak(spec, win, select=sel)
        except (NoPeak, MultiplePeaks) as exc:
            if n == 0:
                raise TrackingLost(f"no peak at the first depth {vw}: {exc}") from exc
            scan.stopped_at = vw
            scan.stop_reason = str(exc)
            break
        scan.depths.append(vw)
        scan.peaks.append(peak)
    return scan


def _next_window(scan: DepthScan):
    last = scan.peaks[-1]
    if len(scan.peaks) >= 2:
        prev = scan.peaks[-2]
        dv = last.v_R - prev.v_R
    else:
        dv = 0.0
    center = max(last.v_R + dv, 0.0)
    half = 4.0 * last.delta_v_R + 2.0 * abs(dv)
    return (max(center - half, 0.0), center + half)


def fit_alpha(scan: DepthScan) -> FitResult:
    """Least-squares slope of E_R0 - E_R against the depth over sharp peaks,
    with E_R0 taken from the depth-zero peak."""
    pts = scan.sharp_points()
    if len(pts) < 5:
        raise InsufficientData(f"need >= 5 sharp peaks, have {len(pts)}")
    if pts[0][0] != 0.0:
        raise InsufficientData("fit_alpha needs the depth-zero peak as reference")
    spec = scan.template
    vw = np.array([p[0] for p in pts])
    E = np.array([p[1].energy_over_hbar(spec) for p in pts])
    E0 = E[0]
    x, y = vw[1:], E0 - E[1:]
    alpha = float(np.dot(x, y) / np.dot(x, x))
    resid = E - (E0 - alpha * vw)
    return FitResult("alpha", alpha, float(np.sqrt(np.mean(resid**2))), len(pts),
                     (float(vw[0]), float(vw[-1])), energy0=float(E0), v0=pts[0][1].v_R)


def fit_beta(scan: DepthScan, tail_ratio: float = 2.0) -> FitResult:
    """Log-linear fit of the width against depth.

    Uses sharp, unclamped peaks whose velocity exceeds ``tail_ratio`` widths;
    closer to threshold the antiresonance distorts the peak.
    """
    pts = [(vw, p) for vw, p in scan.sharp_points()
           if not p.clamped and p.v_R > tail_ratio * p.delta_v_R]
    if len(pts) < 5:
        raise InsufficientData(f"need >= 5 sharp peaks, have {len(pts)}")
    vw = np.array([p[0] for p in pts])
    lw = np.log([p[1].delta_v_R for p in pts])
    slope, intercept = np.polyfit(vw, lw, 1)
    resid = lw - (intercept + slope * vw)
    observed0 = next((p.delta_v_R for d, p in pts if d == 0.0), None)
    return FitResult("beta", float(-slope), float(np.sqrt(np.mean(resid**2))), len(pts),
                     (float(vw[0]), float(vw[-1])), delta_v0_fit=float(math.exp(intercept)),
                     delta_v0_observed=observed0)
