"""1D condensate released from a moving trap and filtered by the triple potential.

Ground state by imaginary-time split-step, then real-time symmetric
split-step with the transverse-expansion nonlinearity
``g |psi|^2 / (1 + omega_yz^2 t^2)``, ``g = 2 N a omega_yz`` (hbar = 1 units).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import fft

from .errors import ConfigError, NonConvergence, NormDrift, TranslationOutOfGrid
from .potential import CM_PER_UM, PhysicalConstants, PotentialSpec, evaluate, velocity_to_wavenumber

EDGE_DENSITY = 1e-10  # prepared (trapped / placed) states
WRAP_DENSITY = 1e-7  # during propagation: momentum tails of the released
# condensate spread over thousands of um within 8 s and keep a ~1e-8 density
# floor everywhere; genuine wrap-around of the packets is orders above this
A_SODIUM = 2.93e-9  # m


@dataclass(frozen=True)
class Grid:
    x_min: float = -6000.0
    x_max: float = 6000.0
    n: int = 2**15

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ConfigError("grid", "need x_max > x_min")
        if self.n < 2**10 or self.n & (self.n - 1):
            raise ConfigError("grid.n", "must be a power of two >= 1024")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @property
    def k(self) -> np.ndarray:
        return 2.0 * np.pi * fft.fftfreq(self.n, self.dx)

    def check_resolves(self, spec: PotentialSpec, k_max: float = 0.0) -> None:
        Kb = math.sqrt(2.0 * spec.mass * spec.vb_over_hbar)
        if not self.dx < 1.0 / (4.0 * Kb):
            raise ConfigError("grid.n", f"dx = {self.dx:.4g} um does not resolve K_b = {Kb:.4g} 1/um")
        if k_max and not np.pi / self.dx > 4.0 * k_max:
            raise ConfigError("grid.n", "grid does not resolve the packet momentum")


@dataclass(frozen=True)
class CondensateParams:
    N: float = 5e4
    a: float = A_SODIUM  # m
    omega_x: float = 5.0
    omega_yz: float = 100.0
    v0: float = 0.0336  # cm/s
    x_trap: float = -600.0  # um

    def __post_init__(self):
        if not self.N >= 0:
            raise ConfigError("N", "must be >= 0")
        if not self.a > 0:
            raise ConfigError("a_m", "must be positive")
        if not (self.omega_x > 0 and self.omega_yz > 0):
            raise ConfigError("omega", "trap frequencies must be positive")

    @property
    def coupling(self) -> float:
        """2 N a omega_yz in hbar = 1, um units."""
        return 2.0 * self.N * (self.a / 1e-6) * self.omega_yz


@dataclass
class WaveFunction:
    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def norm(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.dx)

    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def mean_position(self) -> float:
        rho = self.density()
        return float(np.sum(self.grid.x * rho) / np.sum(rho))

    def mean_wavenumber(self) -> float:
        phi = fft.fft(self.values)
        w = np.abs(phi) ** 2
        return float(np.sum(self.grid.k * w) / np.sum(w))

    def edge_density(self, width: int = 16) -> float:
        rho = self.density()
        return float(max(rho[:width].max(), rho[-width:].max()))

    def copy(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.values.copy(), self.time)


def _energy(psi, grid, m, vtrap, g):
    phi = fft.fft(psi)
    kin = np.sum(grid.k**2 / (2 * m) * np.abs(phi) ** 2) / grid.n
    rho = np.abs(psi) ** 2
    pot = np.sum(vtrap * rho + 0.5 * g * rho * rho)
    return float((kin + pot) * grid.dx)


def ground_state(params: CondensateParams, grid: Grid = Grid(), *,
                 constants: PhysicalConstants = PhysicalConstants(),
                 dt: float = 1e-3, tol: float = 1e-12, max_steps: int = 200_000,
                 energies: list | None = None, initial: np.ndarray | None = None) -> WaveFunction:
    """Trap-frame ground state (centred at x = 0), normalised to one.

    Iterates until the relative energy change per step drops below ``tol``.
    If ``energies`` is given, the energy after every step is appended to it.
    The default starting guess is a Gaussian sized for the Thomas-Fermi
    radius; ``initial`` overrides it.
    """
    m = constants.mass_internal
    x = grid.x
    w = params.omega_x
    g = params.coupling
    vtrap = 0.5 * m * w * w * x * x
    ell = 1.0 / math.sqrt(m * w)
    r_tf = (3.0 * g / (2.0 * m * w * w)) ** (1.0 / 3.0) if g > 0 else 0.0
    width = max(ell, 0.6 * r_tf)
    if initial is None:
        psi = np.exp(-x * x / (2 * width * width)).astype(complex)
    else:
        psi = np.array(initial, dtype=complex)
    psi /= math.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)
    kin_half = np.exp(-0.5 * dt * grid.k**2 / (2 * m))

    e_old = _energy(psi, grid, m, vtrap, g)
    for step in range(max_steps):
        psi = fft.ifft(kin_half * fft.fft(psi))
        psi *= np.exp(-dt * (vtrap + g * np.abs(psi) ** 2))
        psi = fft.ifft(kin_half * fft.fft(psi))
        psi /= math.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)
        e = _energy(psi, grid, m, vtrap, g)
        if energies is not None:
            energies.append(e)
        if abs(e - e_old) < tol * abs(e):
            break
        e_old = e
    else:
        raise NonConvergence(f"imaginary-time iteration did not converge; last energy {e:.12g} 1/s")
    psi = np.abs(psi).astype(complex)  # ground state is real and positive
    out = WaveFunction(grid, psi, 0.0)
    if out.edge_density() > EDGE_DENSITY:
        raise ConfigError("grid", "ground state does not fit on the grid")
    return out


def ground_state_energy(psi: WaveFunction, params: CondensateParams,
                        constants: PhysicalConstants = PhysicalConstants()) -> float:
    """Gross-Pitaevskii energy functional per atom (1/s)."""
    m = constants.mass_internal
    x = psi.grid.x
    vtrap = 0.5 * m * params.omega_x**2 * x * x
    return _energy(psi.values, psi.grid, m, vtrap, params.coupling)


def boost_and_place(psi: WaveFunction, v0: float, x_trap: float,
                    constants: PhysicalConstants = PhysicalConstants()) -> WaveFunction:
    """Translate the state by ``x_trap`` (spectrally) and give it velocity ``v0``."""
    grid = psi.grid
    shifted = fft.ifft(fft.fft(psi.values) * np.exp(-1j * grid.k * x_trap))
    out = WaveFunction(grid, shifted * np.exp(1j * velocity_to_wavenumber(v0, constants) * grid.x), psi.time)
    if out.edge_density() > EDGE_DENSITY:
        raise TranslationOutOfGrid(f"state shifted by {x_trap} um reaches the grid edge")
    return out


def propagate(psi: WaveFunction, spec: PotentialSpec, params: CondensateParams, t_final: float,
              dt: float = 1e-4, snapshots=(), *, check_norm: bool = True,
              edge_tol: float = WRAP_DENSITY):
    """Real-time evolution to ``t_final``.

    Returns the final state and a dict {time: WaveFunction} for every
    requested snapshot time in (psi.time, t_final].
    """
    if t_final < psi.time:
        raise ValueError("t_final precedes the current time")
    grid = psi.grid
    m = spec.mass
    n_steps = max(1, int(math.ceil((t_final - psi.time) / dt - 1e-9)))
    h = (t_final - psi.time) / n_steps
    t0 = psi.time
    times = sorted(float(t) for t in snapshots if t0 < t <= t_final)
    targets = {int(round((t - t0) / h)): t for t in times}

    kin = grid.k**2 / (2.0 * m)
    k_half = np.exp(-0.5j * h * kin)
    k_full = k_half * k_half
    vstat = np.exp(-1j * h * evaluate(spec, grid.x))
    g = params.coupling
    w2 = params.omega_yz**2

    out = {}
    phi = k_half * fft.fft(psi.values)
    for step in range(1, n_steps + 1):
        u = fft.ifft(phi)
        tm = t0 + (step - 0.5) * h
        gt = g / (1.0 + w2 * tm * tm)
        if gt:
            u *= vstat * np.exp(-1j * h * gt * (u.real**2 + u.imag**2))
        else:
            u *= vstat
        phi = fft.fft(u)
        if step in targets or step == n_steps:
            values = fft.ifft(k_half * phi)
            t = targets.get(step, t_final) if step != n_steps else t_final
            snap = WaveFunction(grid, values, t)
            _guard(snap, check_norm, edge_tol)
            if step in targets:
                out[targets[step]] = snap
            if step == n_steps:
                return snap, out
        phi *= k_full
    raise AssertionError("unreachable")


def _guard(psi: WaveFunction, check_norm: bool, edge_tol: float):
    if check_norm and abs(psi.norm() - 1.0) > 1e-6:
        raise NormDrift(f"norm {psi.norm():.12g} at t = {psi.time} s")
    if psi.edge_density() > edge_tol:
        raise NormDrift(f"density reached the grid edge at t = {psi.time} s")


@dataclass(frozen=True)
class MomentumDistribution:
    v: np.ndarray  # cm/s, increasing
    density: np.ndarray  # (cm/s)^-1

    def integral(self) -> float:
        return float(np.sum(self.density) * (self.v[1] - self.v[0]))

    def peak_velocity(self) -> float:
        return float(self.v[int(np.argmax(self.density))])

    def to_csv(self, path) -> None:
        from .scattering import write_csv
        write_csv(path, ["v_cm_per_s", "density"], zip(self.v, self.density))


def momentum_distribution(psi: WaveFunction, region=None, pad: int = 1,
                          constants: PhysicalConstants = PhysicalConstants()) -> MomentumDistribution:
    """|psi(v)|^2 normalised so that its integral equals the norm of the
    (optionally region-restricted) state.

    ``region`` = (x_lo, x_hi) keeps only that part of the packet; ``pad``
    zero-pads the transform for a finer velocity grid.
    """
    grid = psi.grid
    values = psi.values
    if region is not None:
        x = grid.x
        values = np.where((x >= region[0]) & (x <= region[1]), values, 0.0)
    n = grid.n * int(pad)
    phi = fft.fftshift(fft.fft(values, n)) * grid.dx / math.sqrt(2.0 * np.pi)
    k = fft.fftshift(2.0 * np.pi * fft.fftfreq(n, grid.dx))
    m = constants.mass_internal
    v = k / m * CM_PER_UM
    dk_dv = m / CM_PER_UM
    return MomentumDistribution(v, np.abs(phi) ** 2 * dk_dv)


# -- experiment -----------------------------------------------------------------

@dataclass
class FilterConfig:
    potential: PotentialSpec
    condensate: CondensateParams = field(default_factory=CondensateParams)
    grid: Grid = field(default_factory=Grid)
    dt: float = 1e-4
    snapshot_times: tuple = (0.0, 0.8, 8.0)
    ground_dt: float = 1e-3


@dataclass
class FilterReport:
    config: FilterConfig
    distributions: dict  # time -> MomentumDistribution (full state)
    transmitted: MomentumDistribution
    transmitted_fraction: float
    final_state: WaveFunction
    states: dict

    def to_json_dict(self) -> dict:
        cfg = self.config
        return {
            "transmitted_fraction": self.transmitted_fraction,
            "snapshot_times_s": list(cfg.snapshot_times),
            "snapshots": [{"t_s": t, "norm": s.norm(), "edge_density": s.edge_density()}
                          for t, s in sorted(self.states.items())],
            "config": {
                "potential": cfg.potential.to_dict(),
                "condensate": {"N": cfg.condensate.N, "a_m": cfg.condensate.a,
                               "omega_x_per_s": cfg.condensate.omega_x,
                               "omega_yz_per_s": cfg.condensate.omega_yz,
                               "v0_cm_per_s": cfg.condensate.v0, "x_trap_um": cfg.condensate.x_trap},
                "grid": asdict(cfg.grid),
                "dt_s": cfg.dt,
                "ground_dt_s": cfg.ground_dt,
            },
        }


def transmitted_region(spec: PotentialSpec, grid: Grid):
    return (spec.support(), grid.x_max)


def filter_experiment(cfg: FilterConfig) -> FilterReport:
    """Ground state, release, propagation through the filter, diagnostics."""
    spec, params, grid = cfg.potential, cfg.condensate, cfg.grid
    c = spec.constants
    grid.check_resolves(spec, abs(velocity_to_wavenumber(params.v0, c)))
    psi_bar = ground_state(params, grid, constants=c, dt=cfg.ground_dt)
    psi = boost_and_place(psi_bar, params.v0, params.x_trap, c)
    times = sorted(cfg.snapshot_times)
    t_final = times[-1]
    states = {}
    if times[0] == 0.0:
        states[0.0] = psi.copy()
    final, snaps = propagate(psi, spec, params, t_final, cfg.dt, snapshots=times)
    states.update(snaps)
    states[t_final] = final
    dists = {t: momentum_distribution(s, constants=c) for t, s in sorted(states.items())}
    region = transmitted_region(spec, grid)
    trans = momentum_distribution(final, region=region, constants=c)
    frac = float(np.sum(final.density()[(grid.x >= region[0])]) * grid.dx)
    return FilterReport(cfg, dists, trans, frac, final, states)


def stationary_filter_fraction(spec: PotentialSpec, psi: WaveFunction, pad: int = 8,
                               cutoff: float = 1e-10) -> float:
    """Integral of |T(v)|^2 |psi(v)|^2 over positive velocities."""
    from .scattering import transmittance_of_velocity
    dist = momentum_distribution(psi, pad=pad, constants=spec.constants)
    sel = (dist.v > 0) & (dist.density > cutoff * dist.density.max())
    v = dist.v[sel]
    t2 = transmittance_of_velocity(spec, v)
    return float(np.sum(t2 * dist.density[sel]) * (dist.v[1] - dist.v[0]))
