"""Poles of the square-model transmission amplitude in the complex k plane.

Root finding works on the reduced denominator ``D(k) / (k_b**2 k_w)``. It
is single valued in k, has the same zeros as the poles of T and none of the
spurious zeros of ``D`` at k = +-K_b and k = +-iK_w. On the imaginary axis
it is purely imaginary, so virtual and bound states are roots of a real
function of kappa (k = -i kappa) and are bracketed directly.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import ConvergedElsewhere, InsufficientData, NonConvergence, PoleOnRealAxis, TrackingLost
from .potential import PotentialSpec, depth_from_wavenumber, velocity_to_wavenumber, wavenumber_scales, wavenumber_to_velocity
from .resonance import ResonancePeak, find_peak, locate_peak, default_window
from .scattering import _require_square, _square_parts, square_denominator, write_csv

AXIS_TOL = 1e-10
DEPTH_TOL = 1e-6


def denominator(spec: PotentialSpec, k):
    """Braced factor of the closed-form amplitude (zeros include the poles)."""
    return square_denominator(spec, k)


def reduced_denominator(spec: PotentialSpec, k):
    _require_square(spec)
    kk, kb, kw = _square_parts(spec, k)
    out = square_denominator(spec, kk) / (kb * kb * kw)
    return out if np.ndim(out) else complex(out)


def _axis(spec: PotentialSpec, kappa):
    """Real function whose roots are poles at k = -i kappa."""
    return np.imag(reduced_denominator(spec, -1j * np.asarray(kappa, dtype=float)))


@dataclass(frozen=True)
class Pole:
    k: complex
    classification: str

    @classmethod
    def classify(cls, k: complex) -> "Pole":
        if abs(k.real) <= AXIS_TOL:
            kind = "bound" if k.imag > 0 else "virtual"
        elif k.real > 0:
            kind = "resonance"
        else:
            kind = "antiresonance"
        return cls(complex(k), kind)


def find_pole(spec: PotentialSpec, seed: complex, *, seed_distance: float | None = None,
              max_iter: int = 100) -> Pole:
    """Newton iteration with a central finite-difference derivative.

    ``seed_distance`` is the expected distance from the seed to the root; a
    result more than ten times farther away is rejected. Default: |seed|/10.
    """
    k = complex(seed)
    if seed_distance is None:
        seed_distance = 0.1 * abs(seed) + 1e-12
    for _ in range(max_iter):
        h = 1e-7 * max(1.0, abs(k))
        f = reduced_denominator(spec, k)
        df = (reduced_denominator(spec, k + h) - reduced_denominator(spec, k - h)) / (2 * h)
        if df == 0:
            raise NonConvergence(f"zero derivative at k = {k}")
        step = f / df
        k -= step
        if abs(step) < 1e-12:
            break
    else:
        raise NonConvergence(f"Newton did not converge from seed {seed} (last k = {k})")
    if abs(k - seed) > 10 * seed_distance:
        raise ConvergedElsewhere(f"seed {seed} converged to distant root {k}")
    return Pole.classify(k)


def pole_residual_scale(spec: PotentialSpec, k: complex, radius: float = 1e-3) -> float:
    ring = k + radius * np.exp(2j * np.pi * np.arange(32) / 32)
    return float(np.max(np.abs(denominator(spec, ring))))


# -- small-k quadratic ---------------------------------------------------------

@dataclass(frozen=True)
class SmallKCoefficients:
    alpha0: float
    alpha1: float
    alpha2: float
    chi1: complex
    chi2: complex
    Kb: float

    @property
    def k1(self) -> complex:
        return self.chi1 * self.Kb

    @property
    def k2(self) -> complex:
        return self.chi2 * self.Kb


def _alphas(Kb: float, Kw: float, d: float):
    x = d * Kb
    q = math.exp(-2.0 * x)
    inv_sh2 = 4.0 * q / math.expm1(-2.0 * x) ** 2  # 1/sinh^2 without overflow
    coth = 1.0 / math.tanh(x)
    a0 = 1.0 / math.tan(0.5 * d * Kw) - Kw * coth / Kb
    a1 = Kw * inv_sh2 / (2.0 * Kb)
    a2 = (Kb**2 * (d * Kw + math.sin(d * Kw)) / (4.0 * Kw**2 * math.sin(0.5 * d * Kw) ** 2)
          + Kw * (coth * (coth**2 - 3.0 * inv_sh2) + x * inv_sh2) / (2.0 * Kb))
    return a0, a1, a2


def small_k_poles(spec: PotentialSpec) -> SmallKCoefficients:
    """Poles from the quadratic truncation of the denominator in k/K_b."""
    _require_square(spec)
    sc = wavenumber_scales(spec)
    if sc.Kw <= 0:
        raise ValueError("the small-k expansion needs a well (vw > 0)")
    a0, a1, a2 = _alphas(sc.Kb, sc.Kw, spec.d)
    root = cmath.sqrt(a0 * a2 - a1 * a1)
    chi1 = (-1j * a1 + root) / a2
    chi2 = (-1j * a1 - root) / a2
    return SmallKCoefficients(a0, a1, a2, chi1, chi2, sc.Kb)


@dataclass(frozen=True)
class ThresholdEstimate:
    vw_thres: float  # 1/s
    Kw_thres: float  # 1/um
    kappa_thres: float  # 1/um
    delta_v_thres: float  # cm/s


def threshold_depth(template: PotentialSpec) -> ThresholdEstimate:
    """First depth where alpha0 vanishes, with the partner pole and the
    minimal velocity width it implies."""
    _require_square(template)
    Kb = wavenumber_scales(template).Kb
    d = template.d
    f = lambda Kw: _alphas(Kb, Kw, d)[0]
    Kw = brentq(f, 1e-9 * math.pi / d, math.pi / d, xtol=1e-15, rtol=1e-15)
    _, a1, a2 = _alphas(Kb, Kw, d)
    kappa = 2.0 * Kb * a1 / a2
    c = template.constants
    return ThresholdEstimate(depth_from_wavenumber(Kw, c), Kw, kappa,
                             float(wavenumber_to_velocity(kappa, c)))


# -- pole models ----------------------------------------------------------------

def _check_real_axis(k, poles):
    k = np.asarray(k, dtype=float)
    for p in poles:
        if p.imag == 0 and np.any(k == p.real):
            raise PoleOnRealAxis(f"pole {p} lies on the evaluation axis")
    return k


def two_pole_transmittance(k1: complex, k2: complex, k):
    """|T|^2 from the two-pole S matrix; the common phase drops out."""
    k = _check_real_axis(k, (k1, k2))
    ratio = (k - np.conj(k1)) * (k - np.conj(k2)) / ((k - k1) * (k - k2))
    return 0.25 * np.abs(1.0 - ratio) ** 2


def one_pole_transmittance(k1: complex, k):
    k = _check_real_axis(k, (k1,))
    ratio = (k - np.conj(k1)) / (k - k1)
    return 0.25 * np.abs(1.0 - ratio) ** 2


# -- tracking -------------------------------------------------------------------

@dataclass
class PoleTrajectory:
    vw: list = field(default_factory=list)
    k1: list = field(default_factory=list)
    k2: list = field(default_factory=list)
    vw_coll: float | None = None
    kappa_coll: float | None = None
    vw_thres: float | None = None
    kappa_thres: float | None = None
    gamma: float | None = None
    gamma_residual: float | None = None

    def append(self, vw, k1, k2):
        self.vw.append(float(vw))
        self.k1.append(complex(k1))
        self.k2.append(complex(k2))

    def summary(self) -> dict:
        return {"vw_coll": self.vw_coll, "kappa_coll": self.kappa_coll,
                "vw_thres": self.vw_thres, "kappa_thres": self.kappa_thres,
                "gamma": self.gamma}

    def to_csv(self, path) -> None:
        rows = [(v, a.real, a.imag, b.real, b.imag) for v, a, b in zip(self.vw, self.k1, self.k2)]
        write_csv(path, ["vw_over_hbar_per_s", "re_k1", "im_k1", "re_k2", "im_k2"], rows)

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def _hump(spec: PotentialSpec, kappa_scale: float):
    """Location and value of the maximum of the axis function near the origin."""
    kap = np.linspace(-kappa_scale, kappa_scale, 401)
    vals = _axis(spec, kap)
    j = int(np.argmax(vals))
    lo, hi = kap[max(j - 1, 0)], kap[min(j + 1, kap.size - 1)]
    res = minimize_scalar(lambda x: -float(_axis(spec, x)), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-14, "maxiter": 500})
    return float(res.x), float(-res.fun)


def axis_poles(spec: PotentialSpec, kappa_scale: float):
    """The two poles on the imaginary axis after the collision, as
    (upper, lower) wavenumbers; None if there are none near the origin."""
    x0, top = _hump(spec, kappa_scale)
    if top <= 0:
        return None
    g = lambda x: float(_axis(spec, x))
    lo = x0 - kappa_scale
    while g(lo) > 0:
        lo -= kappa_scale
    hi = x0 + kappa_scale
    while g(hi) > 0:
        hi += kappa_scale
    upper = brentq(g, lo, x0, xtol=1e-15, rtol=1e-15)
    lower = brentq(g, x0, hi, xtol=1e-15, rtol=1e-15)
    return complex(0.0, -upper), complex(0.0, -lower)


def _bw_seed(spec: PotentialSpec) -> complex:
    peak = find_peak(spec, default_window(spec), select="lowest")
    kR = velocity_to_wavenumber(peak.v_R, spec.constants)
    dk = velocity_to_wavenumber(peak.delta_v_R, spec.constants)
    return complex(kR, -0.5 * dk)


def initial_seed(spec: PotentialSpec) -> complex:
    """BW estimate from the transmittance peak, or the small-k root when the
    peak sits close to the origin."""
    seed = _bw_seed(spec)
    if seed.real < 2.0 * abs(seed.imag) and spec.vw_over_hbar > 0:
        sk = small_k_poles(spec)
        return sk.k1 if sk.k1.real >= 0 else -np.conj(sk.k1)
    return seed


def track_poles(template: PotentialSpec, vw_start: float, vw_end: float, *,
                n_pre: int = 40, n_post: int = 20) -> PoleTrajectory:
    """Follow the lowest symmetric resonance k1 (and its mirror k2) from
    ``vw_start`` to ``vw_end`` through collision and threshold.

    Before the collision the corrector is Newton seeded by a predictor that is
    linear in s = sqrt(vw_coll - vw); after it both poles sit on the
    imaginary axis and are bracketed as roots of a real function.
    """
    _require_square(template)
    if not vw_end > vw_start:
        raise ValueError("need vw_end > vw_start")
    spec0 = template.with_depth(vw_start)
    k1 = find_pole(spec0, initial_seed(spec0)).k
    if k1.real <= AXIS_TOL:
        raise TrackingLost(f"start depth {vw_start} is not in the resonance regime")
    traj = PoleTrajectory()
    traj.append(vw_start, k1, -np.conj(k1))

    scale = 3.0 * threshold_depth(template).kappa_thres
    end_spec = template.with_depth(vw_end)
    after = axis_poles(end_spec, scale) is not None

    if after:
        def post(vw):
            return _hump(template.with_depth(vw), scale)[1]
        vw_coll = brentq(post, vw_start, vw_end, xtol=DEPTH_TOL * 1e-2, rtol=1e-15)
        traj.vw_coll = vw_coll
        xc, _ = _hump(template.with_depth(vw_coll), scale)
        traj.kappa_coll = xc
        s_end = math.sqrt(vw_coll - vw_start)
    else:
        vw_coll = None
        s_end = None

    # pre-collision continuation
    if vw_coll is not None:
        params = list(np.linspace(s_end, 0.0, n_pre + 1)[1:-1])
        params += [params[-1] * 0.5**j for j in range(1, 7)]
        to_depth = lambda s: vw_coll - s * s
    else:
        params = list(np.linspace(vw_start, vw_end, n_pre + 1)[1:])
        to_depth = lambda s: s
    prev_p, prev_k = (s_end if vw_coll is not None else vw_start), k1
    slope = None
    queue = params[::-1]
    while queue:
        p = queue.pop()
        guess = prev_k if slope is None else prev_k + slope * (p - prev_p)
        spec = template.with_depth(to_depth(p))
        try:
            k = find_pole(spec, guess, seed_distance=max(abs(guess - prev_k), 1e-6)).k
            ok = k.real > AXIS_TOL and abs(k - prev_k) <= 0.05 * abs(prev_k) + 1e-12
        except (NonConvergence, ConvergedElsewhere):
            ok = False
        if not ok:
            mid = 0.5 * (p + prev_p)
            if abs(p - prev_p) < 1e-9:
                raise TrackingLost(f"continuation failed near vw = {to_depth(p):.9g}",
                                   last_good=(to_depth(prev_p), prev_k))
            queue.append(p)
            queue.append(mid)
            continue
        slope = (k - prev_k) / (p - prev_p)
        traj.append(to_depth(p), k, -np.conj(k))
        prev_p, prev_k = p, k

    if vw_coll is None:
        return traj

    kc = complex(0.0, -traj.kappa_coll)
    traj.append(vw_coll, kc, kc)

    # threshold: the upper virtual pole reaches k = 0
    g0 = lambda vw: float(_axis(template.with_depth(vw), 0.0))
    vw_thres = None
    if g0(vw_end) * g0(vw_coll) < 0:
        vw_thres = brentq(g0, vw_coll, vw_end, xtol=DEPTH_TOL * 1e-2, rtol=1e-15)
        traj.vw_thres = vw_thres

    depths = vw_coll + np.linspace(0.0, math.sqrt(vw_end - vw_coll), n_post + 1)[1:] ** 2
    if vw_thres is not None:
        depths = np.sort(np.append(depths, vw_thres))
    for vw in depths:
        poles = axis_poles(template.with_depth(vw), scale)
        if poles is None:
            raise TrackingLost(f"axis poles vanished at vw = {vw}", last_good=(traj.vw[-1], traj.k1[-1]))
        traj.append(vw, *poles)
        if vw_thres is not None and vw == vw_thres:
            traj.kappa_thres = -poles[1].imag
    if vw_thres is not None:
        try:
            collision_expansion(traj)
        except InsufficientData:
            pass
    return traj


@dataclass(frozen=True)
class CollisionFit:
    gamma: float
    residual: float
    r_squared: float
    n_points: int


def collision_expansion(traj: PoleTrajectory, window: float | None = None) -> CollisionFit:
    """Least-squares gamma in k = -i kappa_coll +- i gamma sqrt(vw - vw_coll)
    from the half-separation of the two axis poles.

    Stores gamma on the trajectory as a side effect.
    """
    if traj.vw_coll is None:
        raise InsufficientData("trajectory has no collision")
    if window is None:
        span = (traj.vw_thres - traj.vw_coll) if traj.vw_thres else (traj.vw[-1] - traj.vw_coll)
        window = 2.0 * span
    x, y, z = [], [], []
    for vw, a, b in zip(traj.vw, traj.k1, traj.k2):
        delta = vw - traj.vw_coll
        if 0 < delta <= window:
            x.append(math.sqrt(delta))
            y.append(0.5 * (a.imag - b.imag))
            z.append(abs(a.imag + traj.kappa_coll))
    if len(x) < 5:
        raise InsufficientData(f"need >= 5 post-collision points, have {len(x)}")
    x, y, z = map(np.asarray, (x, y, z))
    gamma = float(np.dot(x, y) / np.dot(x, x))
    resid = float(np.sqrt(np.mean((y - gamma * x) ** 2)))
    slope, icpt = np.polyfit(x, z, 1)
    ss_res = np.sum((z - (slope * x + icpt)) ** 2)
    ss_tot = np.sum((z - z.mean()) ** 2)
    traj.gamma = gamma
    traj.gamma_residual = resid
    return CollisionFit(gamma, resid, float(1.0 - ss_res / ss_tot), len(x))


def model_peak(transmittance, k_window) -> ResonancePeak:
    """Peak analysis of a pole-model |T|^2(k) (wavenumber units)."""
    return locate_peak(transmittance, k_window)


def poles_at_depth(template: PotentialSpec, vw: float, traj: PoleTrajectory):
    """(k1, k2) at an arbitrary depth inside the span of ``traj``.

    On the imaginary axis the poles are bracketed directly; otherwise Newton
    is seeded by the nearest tracked resonance pole.
    """
    spec = template.with_depth(vw)
    scale = 3.0 * threshold_depth(template).kappa_thres
    if traj.vw_coll is not None and vw >= traj.vw_coll:
        poles = axis_poles(spec, scale)
        if poles is not None:
            return poles
    pre = [(abs(v - vw), k) for v, k in zip(traj.vw, traj.k1) if k.real > AXIS_TOL]
    if not pre:
        raise TrackingLost(f"no resonance pole to seed from at vw = {vw}")
    seed = min(pre, key=lambda t: t[0])[1]
    k = find_pole(spec, seed, seed_distance=max(0.5 * abs(seed), 1e-6)).k
    return complex(k), complex(-np.conj(k))
