"""Triple barrier-well-barrier potential and the unit system.

Internally hbar = 1, lengths are in micrometres and times in seconds, so a
potential height divided by hbar (in 1/s) is used as-is and the atom mass
becomes the dimensionless number ``m * (1 um)**2 / (hbar * 1 s)``.
Velocities at the public surface are in cm/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .errors import ConfigError

HBAR = 1.054571817e-34  # J s
MASS_NA23 = 3.81754e-26  # kg, 22.989769 u

UM = 1e-6  # m
CM_PER_UM = 1e-4


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = HBAR
    mass: float = MASS_NA23

    def __post_init__(self):
        if not self.hbar > 0:
            raise ConfigError("hbar", "must be positive")
        if not self.mass > 0:
            raise ConfigError("mass_kg", "must be positive")

    @property
    def mass_internal(self) -> float:
        """Atom mass in units of hbar * s / um**2."""
        return self.mass * UM**2 / self.hbar


@dataclass(frozen=True)
class WavenumberScales:
    Kb: float
    Kw: float


@dataclass(frozen=True)
class PotentialSpec:
    """Barriers of height ``vb_over_hbar`` centred at +-d and a well of depth
    ``vw_over_hbar`` centred at 0.

    ``vw_over_hbar`` is a depth (non-negative); it is subtracted when the
    potential is evaluated.
    """

    shape: str
    vb_over_hbar: float
    vw_over_hbar: float
    d: float
    sigma: float = 2.0
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        if self.shape not in ("square", "gaussian"):
            raise ConfigError("shape", f"expected 'square' or 'gaussian', got {self.shape!r}")
        if not (math.isfinite(self.vb_over_hbar) and self.vb_over_hbar > 0):
            raise ConfigError("vb_over_hbar_per_s", "must be positive")
        if not (math.isfinite(self.vw_over_hbar) and self.vw_over_hbar >= 0):
            raise ConfigError("vw_over_hbar_per_s", "well depth must be >= 0")
        if not (math.isfinite(self.d) and self.d > 0):
            raise ConfigError("d_um", "must be positive")
        if self.shape == "gaussian" and not self.sigma > 0:
            raise ConfigError("sigma_um", "must be positive for the gaussian shape")

    @property
    def mass(self) -> float:
        return self.constants.mass_internal

    @property
    def cutoff_radius(self) -> float:
        """Range r = 3d/2 of the two-pole S-matrix model (um).  It only fixes
        an overall phase, so |T|^2 never depends on it."""
        return 1.5 * self.d

    def with_depth(self, vw_over_hbar: float) -> "PotentialSpec":
        return PotentialSpec(self.shape, self.vb_over_hbar, float(vw_over_hbar),
                             self.d, self.sigma, self.constants)

    def with_barrier(self, vb_over_hbar: float) -> "PotentialSpec":
        return PotentialSpec(self.shape, float(vb_over_hbar), self.vw_over_hbar,
                             self.d, self.sigma, self.constants)

    def support(self, eps: float = 1e-14) -> float:
        """Half-width of the region where the potential is non-negligible.

        Exact for the square shape; for Gaussians the tails are cut where the
        barrier has decayed to ``eps`` (1/s).
        """
        if self.shape == "square":
            return 1.5 * self.d
        vmax = max(self.vb_over_hbar, self.vw_over_hbar)
        return self.d + self.sigma * math.sqrt(2.0 * math.log(vmax / eps))

    def breakpoints(self) -> list[float]:
        """Integration breakpoints: jumps of the square potential, or the
        cut-off edges of the Gaussian one."""
        L = self.support()
        if self.shape == "square":
            h = 0.5 * self.d
            return [-3 * h, -h, h, 3 * h]
        return [-L, L]

    def to_dict(self) -> dict[str, Any]:
        return {
            "shape": self.shape,
            "vb_over_hbar_per_s": self.vb_over_hbar,
            "vw_over_hbar_per_s": self.vw_over_hbar,
            "d_um": self.d,
            "sigma_um": self.sigma,
            "mass_kg": self.constants.mass,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PotentialSpec":
        known = {"shape", "vb_over_hbar_per_s", "vw_over_hbar_per_s", "d_um", "sigma_um", "mass_kg"}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown key in potential block")
        for key in ("shape", "vb_over_hbar_per_s", "d_um"):
            if key not in data:
                raise ConfigError(key, "missing")
        try:
            constants = PhysicalConstants(mass=float(data.get("mass_kg", MASS_NA23)))
            return cls(
                shape=str(data["shape"]),
                vb_over_hbar=float(data["vb_over_hbar_per_s"]),
                vw_over_hbar=float(data.get("vw_over_hbar_per_s", 0.0)),
                d=float(data["d_um"]),
                sigma=float(data.get("sigma_um", 2.0)),
                constants=constants,
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("potential", str(exc)) from exc


def _profile(spec: PotentialSpec, x):
    if spec.shape == "square":
        return (np.abs(x) < 0.5 * spec.d).astype(float)
    return np.exp(-np.square(x) / (2.0 * spec.sigma**2))


def evaluate(spec: PotentialSpec, x):
    """V(x)/hbar in 1/s: barriers at +-d minus the well at the origin."""
    x = np.asarray(x, dtype=float)
    v = spec.vb_over_hbar * (_profile(spec, x + spec.d) + _profile(spec, x - spec.d))
    if spec.vw_over_hbar:
        v = v - spec.vw_over_hbar * _profile(spec, x)
    return v if v.ndim else float(v)


def wavenumber_scales(spec: PotentialSpec) -> WavenumberScales:
    m = spec.mass
    return WavenumberScales(Kb=math.sqrt(2 * m * spec.vb_over_hbar),
                            Kw=math.sqrt(2 * m * spec.vw_over_hbar))


def _scalar(a):
    return a if np.ndim(a) else a.item()


def velocity_to_wavenumber(v, constants: PhysicalConstants = PhysicalConstants()):
    """cm/s -> 1/um."""
    return _scalar(np.asarray(v, dtype=float) / CM_PER_UM * constants.mass_internal)


def wavenumber_to_velocity(k, constants: PhysicalConstants = PhysicalConstants()):
    """1/um -> cm/s."""
    return _scalar(np.asarray(k) / constants.mass_internal * CM_PER_UM)


def depth_from_wavenumber(K: float, constants: PhysicalConstants = PhysicalConstants()) -> float:
    """Inverse of K = sqrt(2 m V/hbar): V/hbar in 1/s."""
    return K * K / (2.0 * constants.mass_internal)
