"""Transmission through the triple potential.

Three routes are available:

* ``transmission_square``: the closed-form amplitude of the square model,
  valid for complex k as well (used by the pole finder);
* ``transfer_matrix_square``: exact piecewise-constant transfer matrices,
  which also give the reflection amplitude;
* ``transmission_numeric``: integration of the stationary Schroedinger
  equation, for any potential shape.

All amplitudes refer to plane waves ``exp(+-ikx)`` anchored at x = 0, with
the atom incident from the left unless stated otherwise.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConfigError, NonConvergence
from .outputs import atomic_open
from .potential import PotentialSpec, evaluate, velocity_to_wavenumber, wavenumber_to_velocity

RTOL = 1e-11
ATOL = 1e-13
_BATCH = 4096


@dataclass(frozen=True)
class ScatteringResult:
    k: float
    T: complex
    R: complex

    @property
    def transmittance(self) -> float:
        return abs(self.T) ** 2

    @property
    def reflectance(self) -> float:
        return abs(self.R) ** 2


@dataclass(frozen=True)
class TransmittanceCurve:
    v: np.ndarray  # cm/s, strictly increasing
    transmittance: np.ndarray
    spec: PotentialSpec

    def to_csv(self, path) -> None:
        write_csv(path, ["v_cm_per_s", "transmittance"], zip(self.v, self.transmittance))


def write_csv(path, header, rows) -> None:
    """Comma-separated, 12 significant digits, written atomically."""
    with atomic_open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def _require_square(spec: PotentialSpec):
    if spec.shape != "square":
        raise ConfigError("shape", "closed form is only available for the square model")


def _square_parts(spec: PotentialSpec, k):
    k = np.asarray(k, dtype=complex)
    m = spec.mass
    Kb2 = 2.0 * m * spec.vb_over_hbar
    Kw2 = 2.0 * m * spec.vw_over_hbar
    kb = np.sqrt(Kb2 - k * k)
    kw = np.sqrt(k * k + Kw2)
    return k, kb, kw


def square_denominator(spec: PotentialSpec, k):
    """The braced factor in the closed-form square-model amplitude."""
    _require_square(spec)
    k, kb, kw = _square_parts(spec, k)
    d = spec.d
    C = np.cosh(d * kb)
    S = np.sinh(d * kb)
    first = np.exp(1j * d * (k - kw)) * (1j * kb * (k + kw) * C + (k * kw - kb * kb) * S) ** 2
    second = np.exp(1j * d * (k + kw)) * (-1j * kb * (k - kw) * C + (k * kw + kb * kb) * S) ** 2
    out = first - second
    return out if out.ndim else complex(out)


def transmission_square(spec: PotentialSpec, k):
    """Closed-form T(k) for the square model; k may be complex."""
    _require_square(spec)
    kk, kb, kw = _square_parts(spec, k)
    num = -4.0 * np.exp(-2j * spec.d * kk) * kk * kb * kb * kw
    out = num / square_denominator(spec, kk)
    return out if np.ndim(out) else complex(out)


def transfer_matrix_square(spec: PotentialSpec, k) -> tuple[np.ndarray, np.ndarray]:
    """(T, R) for real k > 0 from exact constant-segment propagators."""
    _require_square(spec)
    k = np.atleast_1d(np.asarray(k, dtype=float))
    m = spec.mass
    bps = spec.breakpoints()
    levels = [spec.vb_over_hbar, -spec.vw_over_hbar, spec.vb_over_hbar]
    xr, xl = bps[-1], bps[0]
    psi = np.exp(1j * k * xr)
    dpsi = 1j * k * psi
    for (a, b), v in zip(zip(bps[-2::-1], bps[:0:-1]), levels[::-1]):
        # propagate from b down to a through a constant level v
        length = a - b
        s = np.sqrt(2.0 * m * v - k * k + 0j)
        ch = np.cosh(s * length)
        sh_over_s = np.where(np.abs(s) > 0, np.sinh(s * length) / np.where(np.abs(s) > 0, s, 1), length)
        psi, dpsi = ch * psi + sh_over_s * dpsi, s * s * sh_over_s * psi + ch * dpsi
    return _decompose(k, xl, psi, dpsi)


def _decompose(k, x, psi, dpsi):
    a = 0.5 * (psi + dpsi / (1j * k)) * np.exp(-1j * k * x)
    b = 0.5 * (psi - dpsi / (1j * k)) * np.exp(1j * k * x)
    return 1.0 / a, b / a


def _segment_potential(spec: PotentialSpec, a: float, b: float):
    if spec.shape == "square":
        level = evaluate(spec, 0.5 * (a + b))
        return lambda x: level
    return lambda x: evaluate(spec, x)


def _integrate(spec: PotentialSpec, k: np.ndarray, from_right: bool):
    m = spec.mass
    bps = spec.breakpoints()
    if from_right:
        start, path = bps[-1], list(zip(bps[:0:-1], bps[-2::-1]))
        sign = 1.0
    else:
        start, path = bps[0], list(zip(bps[:-1], bps[1:]))
        sign = -1.0
    n = k.size
    y = np.concatenate([np.exp(sign * 1j * k * start), sign * 1j * k * np.exp(sign * 1j * k * start)])
    k2 = k * k
    for a, b in path:
        vfun = _segment_potential(spec, a, b)

        def rhs(x, y, vfun=vfun):
            return np.concatenate([y[n:], (2.0 * m * vfun(x) - k2) * y[:n]])

        sol = solve_ivp(rhs, (a, b), y, method="DOP853", rtol=RTOL, atol=ATOL)
        if sol.status != 0:
            raise NonConvergence(f"ODE integration failed at x = {sol.t[-1]:.6g} um: {sol.message}")
        y = sol.y[:, -1]
    end = path[-1][1]
    psi, dpsi = y[:n], y[n:]
    if from_right:
        return _decompose(k, end, psi, dpsi)
    # mirror: incident exp(-ikx) from the right
    a = 0.5 * (psi - dpsi / (1j * k)) * np.exp(1j * k * end)
    b = 0.5 * (psi + dpsi / (1j * k)) * np.exp(-1j * k * end)
    return 1.0 / a, b / a


def transmission_numeric_many(spec: PotentialSpec, k, incident_from: str = "left"):
    """Vectorised numeric (T, R) for an array of real k > 0."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if np.any(k <= 0):
        raise ValueError("numeric solver needs k > 0")
    T = np.empty(k.shape, complex)
    R = np.empty(k.shape, complex)
    for i in range(0, k.size, _BATCH):
        sl = slice(i, i + _BATCH)
        T[sl], R[sl] = _integrate(spec, k[sl], from_right=(incident_from == "left"))
    return T, R


def transmission_numeric(spec: PotentialSpec, k: float, incident_from: str = "left") -> ScatteringResult:
    T, R = transmission_numeric_many(spec, [k], incident_from)
    return ScatteringResult(float(k), complex(T[0]), complex(R[0]))


def transmittance_at(spec: PotentialSpec, k) -> np.ndarray:
    """|T(k)|^2 for real k > 0, using the closed form when available."""
    k = np.asarray(k, dtype=float)
    if spec.shape == "square":
        return np.abs(transmission_square(spec, k)) ** 2
    T, _ = transmission_numeric_many(spec, k)
    return np.abs(T).reshape(k.shape) ** 2


def transmittance_of_velocity(spec: PotentialSpec, v) -> np.ndarray:
    return transmittance_at(spec, velocity_to_wavenumber(v, spec.constants))


def transmittance_curve(spec: PotentialSpec, v_min: float, v_max: float, n_points: int) -> TransmittanceCurve:
    """|T|^2 on a uniform velocity grid (cm/s).

    The velocity v = 0 is never evaluated: a leading zero is replaced by a
    point 1e-6 grid spacings above the origin.
    """
    if not (0 <= v_min < v_max):
        raise ConfigError("velocity_window", "need 0 <= v_min < v_max")
    if n_points < 2:
        raise ConfigError("n_points", "need at least 2 points")
    v = np.linspace(v_min, v_max, int(n_points))
    if v[0] == 0.0:
        v[0] = 1e-6 * (v[1] - v[0])
    return TransmittanceCurve(v, transmittance_of_velocity(spec, v), spec)


__all__ = [
    "ScatteringResult",
    "TransmittanceCurve",
    "square_denominator",
    "transmission_square",
    "transfer_matrix_square",
    "transmission_numeric",
    "transmission_numeric_many",
    "transmittance_at",
    "transmittance_of_velocity",
    "transmittance_curve",
    "wavenumber_to_velocity",
]
