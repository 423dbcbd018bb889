"""Finite-volume method of lines for the bulk and shear systems in planar and
spherically symmetric geometry.

Transport is MUSCL + Rusanov with SSP Runge-Kutta stages; the relaxation
term -Pi/tau is split off (Strang) and integrated exactly.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, List, Literal, NamedTuple, Optional, Sequence, Tuple
import logging
import math

import numpy as np

from src.viscoflow.config import settings
from src.viscoflow.exceptions import ConfigError, ConfigIssue, DomainError, MaterialLawError, NumericalFailure
from .finite_volume import INTEGRATORS, reconstruct, rusanov
from .fluid_model import (
    DIAGONAL_SLOTS,
    PI_COMPONENTS,
    BulkState,
    MaterialLaw,
    ReferenceState,
    ShearState,
    bulk_front_speed,
    enthalpy,
    eval_transport,
    sound_speed,
)
from .breakdown import (
    bulk_G,
    containment_deviation,
    gradient_maxima,
    monitor_c1,
    relative_mass,
    sideris_F,
    solve_velocity_amplitude,
)
from .profiles import SHAPES, radial_velocity
from .quasilinear import SHEAR_VARIABLES, fast_speed

logger = logging.getLogger(__name__)

Geometry = Literal["planar", "spherical"]
Boundary = Literal["fixed", "periodic"]
System = Literal["bulk", "shear"]
Status = Literal["ok", "breakdown", "invalid_state"]

# solver rows; the bulk velocity is the radial (or x) component only
BULK_ROWS = ("rho", "u", "Pi")
SHEAR_ROWS = SHEAR_VARIABLES
_SHEAR_PI = slice(4, 10)


@dataclass(frozen=True)
class Grid1D:
    geometry: Geometry
    n_cells: int
    x_min: float
    x_max: float
    boundary: Boundary = "fixed"
    n_ghost: int = settings.DEFAULT_N_GHOST

    def __post_init__(self):
        if self.n_cells < 2 * self.n_ghost:
            raise DomainError(f"need at least {2 * self.n_ghost} cells, got {self.n_cells}")
        if not self.x_max > self.x_min:
            raise DomainError("x_max must exceed x_min")
        if self.geometry == "spherical":
            if self.x_min != 0.0:
                raise DomainError("spherical grids start at r = 0")
            if self.boundary != "fixed":
                raise DomainError("spherical grids have a reflective centre and a fixed outer boundary")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @cached_property
    def faces(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_cells + 1)

    @cached_property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.faces[1:] + self.faces[:-1])

    @cached_property
    def areas(self) -> np.ndarray:
        """Face measures: 1 in planar geometry, 4 pi r^2 in spherical."""
        if self.geometry == "spherical":
            return 4.0 * np.pi * self.faces**2
        return np.ones(self.n_cells + 1)

    @cached_property
    def volumes(self) -> np.ndarray:
        """Exact cell measures, so that sum(volumes * q) telescopes under the flux scheme."""
        if self.geometry == "spherical":
            f = self.faces
            return 4.0 * np.pi * (f[1:] ** 3 - f[:-1] ** 3) / 3.0
        return np.full(self.n_cells, self.dx)


@dataclass(frozen=True)
class SolverOptions:
    cfl: float = settings.DEFAULT_CFL
    limiter: str = "minmod"
    integrator: str = "ssp2"
    density_floor_rel: float = 1e-12
    grad_factor: float = 10.0
    dt_floor: float = 1e-12
    containment_tol: float = 1e-8
    containment_slack_cells: int = 2
    containment_widths: float = 6.0

    @classmethod
    def from_config(cls, config) -> "SolverOptions":
        tol = config.tolerances
        return cls(cfl=config.grid.cfl, limiter=config.grid.limiter, integrator=config.grid.integrator,
                   density_floor_rel=tol.density_floor_rel, grad_factor=tol.grad_factor,
                   dt_floor=tol.dt_floor, containment_tol=tol.containment_tol,
                   containment_slack_cells=tol.containment_slack_cells,
                   containment_widths=tol.containment_widths)


class StepOutcome(NamedTuple):
    status: Status
    dt_used: float
    max_wave_speed: float
    max_gradient: float
    message: str = ""
    cell: Optional[int] = None


class SeriesRow(NamedTuple):
    t: float
    dt: float
    F: float
    dM: float
    G: float
    max_grad_u: float
    max_grad_rho: float
    # scaled deviation from reference beyond the propagation radius
    containment: float = 0.0


class Snapshot(NamedTuple):
    t: float
    q: np.ndarray


@dataclass
class Simulation:
    """Mutable evolution state; one writer at a time."""

    grid: Grid1D
    law: MaterialLaw
    reference: ReferenceState
    system: System
    q: np.ndarray
    options: SolverOptions = field(default_factory=SolverOptions)
    t: float = 0.0
    step_count: int = 0
    initial_max_grad: float = 0.0

    def __post_init__(self):
        nvar = len(BULK_ROWS) if self.system == "bulk" else len(SHEAR_ROWS)
        self.q = np.array(self.q, dtype=float)
        if self.q.shape != (nvar, self.grid.n_cells):
            raise DomainError(f"field array must have shape {(nvar, self.grid.n_cells)}, got {self.q.shape}")
        if self.system == "shear" and self.grid.geometry != "planar":
            raise DomainError("shear runs are planar only")

    @property
    def rows(self) -> Tuple[str, ...]:
        return BULK_ROWS if self.system == "bulk" else SHEAR_ROWS

    @property
    def rho(self) -> np.ndarray:
        return self.q[0]

    @property
    def velocity(self) -> np.ndarray:
        """Radial velocity (bulk) or the x component (shear)."""
        return self.q[1]

    @property
    def trace_pi(self) -> np.ndarray:
        """Pi^i_i; equals 3 Pi for the bulk system."""
        if self.system == "bulk":
            return 3.0 * self.q[2]
        return self.q[4 + np.array(DIAGONAL_SLOTS)].sum(axis=0)

    @property
    def bulk_pi(self) -> np.ndarray:
        return self.q[2] if self.system == "bulk" else self.trace_pi / 3.0

    @cached_property
    def c_bar_v(self) -> float:
        """Front speed of the reference state."""
        if self.system == "shear":
            return fast_speed(ShearState(self.reference.rho_bar), self.law)
        return bulk_front_speed(self.law, self.reference.rho_bar, self.reference.Pi_bar)

    def reference_vector(self) -> np.ndarray:
        ref = self.reference
        if self.system == "bulk":
            return np.array([ref.rho_bar, 0.0, ref.Pi_bar])
        pi = [ref.Pi_bar if i == j else 0.0 for i, j in PI_COMPONENTS]
        return np.array([ref.rho_bar, *ref.v_bar, *pi])

    def state_at(self, i: int):
        col = self.q[:, i]
        if self.system == "bulk":
            # radial velocity placed on the x axis
            return BulkState(col[0], (col[1], 0.0, 0.0), col[2])
        return ShearState(col[0], tuple(col[1:4]), tuple(col[4:10]))


# ---------------------------------------------------------------------------
# boundary padding


def _pad(sim: Simulation, q: np.ndarray) -> np.ndarray:
    g = sim.grid.n_ghost
    if sim.grid.boundary == "periodic":
        return np.concatenate([q[:, -g:], q, q[:, :g]], axis=1)
    ref = sim.reference_vector()[:, None]
    outer = np.repeat(ref, g, axis=1)
    if sim.grid.geometry == "spherical":
        # reflective centre: rho and Pi even, u odd
        inner = q[:, g - 1::-1].copy()
        inner[1] *= -1.0
    else:
        inner = outer
    return np.concatenate([inner, q, outer], axis=1)


# ---------------------------------------------------------------------------
# wave speeds


def _bulk_fast(law: MaterialLaw, rho, Pi):
    c_s = sound_speed(law, rho)
    tr = eval_transport(law, rho, Pi)
    return np.sqrt(c_s**2 + np.maximum(0.0, tr.zeta + tr.tau * Pi) / (rho * tr.tau))


def _shear_transport(law: MaterialLaw, rho, pi):
    trace = pi[0] + pi[3] + pi[5]
    contraction = pi[0] ** 2 + pi[3] ** 2 + pi[5] ** 2 + 2.0 * (pi[1] ** 2 + pi[2] ** 2 + pi[4] ** 2)
    return eval_transport(law, rho, trace / 3.0, contraction)


def _shear_fast(law: MaterialLaw, rho, pi):
    """Longitudinal speed along x: c_s^2 + (zeta + 4 eta/3 + tau Pi11)/(rho tau)."""
    c_s = sound_speed(law, rho)
    tr = _shear_transport(law, rho, pi)
    return np.sqrt(c_s**2 + np.maximum(0.0, tr.zeta + 4.0 * tr.eta / 3.0 + tr.tau * pi[0]) / (rho * tr.tau))


def _local_speeds(sim: Simulation, q: np.ndarray) -> np.ndarray:
    if sim.system == "bulk":
        return np.abs(q[1]) + _bulk_fast(sim.law, q[0], q[2])
    return np.abs(q[1]) + _shear_fast(sim.law, q[0], q[_SHEAR_PI])


def max_wave_speed(sim: Simulation) -> float:
    return float(np.max(_local_speeds(sim, sim.q)))


def cfl_dt(sim: Simulation) -> float:
    """cfl * dx / max(|v| + fast speed); NaN when the speed is not finite."""
    speed = max_wave_speed(sim)
    if not math.isfinite(speed) or speed <= 0.0:
        return math.nan
    return sim.options.cfl * sim.grid.dx / speed


# ---------------------------------------------------------------------------
# transport operator


def _bulk_rhs(sim: Simulation, q: np.ndarray) -> np.ndarray:
    grid, law = sim.grid, sim.law
    qL, qR = reconstruct(_pad(sim, q), grid.n_ghost, sim.options.limiter)
    rhoL, uL, PiL = qL
    rhoR, uR, PiR = qR
    speed = np.maximum(np.abs(uL) + _bulk_fast(law, rhoL, PiL), np.abs(uR) + _bulk_fast(law, rhoR, PiR))

    f_mass = rusanov(rhoL * uL, rhoR * uR, rhoL, rhoR, speed)
    f_vel = rusanov(0.5 * uL**2 + enthalpy(law, rhoL), 0.5 * uR**2 + enthalpy(law, rhoR), uL, uR, speed)
    f_pi = rusanov(uL * PiL, uR * PiR, PiL, PiR, speed)
    u_face = 0.5 * (uL + uR)
    pi_face = 0.5 * (PiL + PiR)

    A, V, dx = grid.areas, grid.volumes, grid.dx
    rho, Pi = q[0], q[2]
    tr = eval_transport(law, rho, Pi)
    div_u = np.diff(A * u_face) / V

    out = np.empty_like(q)
    out[0] = -np.diff(A * f_mass) / V
    out[1] = -np.diff(f_vel) / dx - np.diff(pi_face) / (rho * dx)
    out[2] = -np.diff(A * f_pi) / V - tr.zeta / tr.tau * div_u
    return out


def _shear_rhs(sim: Simulation, q: np.ndarray) -> np.ndarray:
    grid, law = sim.grid, sim.law
    qL, qR = reconstruct(_pad(sim, q), grid.n_ghost, sim.options.limiter)
    speed = np.maximum(np.abs(qL[1]) + _shear_fast(law, qL[0], qL[_SHEAR_PI]),
                       np.abs(qR[1]) + _shear_fast(law, qR[0], qR[_SHEAR_PI]))
    dx = grid.dx
    rho, v1 = q[0], q[1]
    tr = _shear_transport(law, rho, q[_SHEAR_PI])
    central = 0.5 * (qL + qR)
    # Rusanov dissipation applied to every row
    dissipation = -0.5 * speed * (qR - qL)

    out = np.empty_like(q)
    rhoL, rhoR = qL[0], qR[0]
    f_mass = rusanov(rhoL * qL[1], rhoR * qR[1], rhoL, rhoR, speed)
    out[0] = -np.diff(f_mass) / dx

    f_v1 = rusanov(0.5 * qL[1] ** 2 + enthalpy(law, rhoL), 0.5 * qR[1] ** 2 + enthalpy(law, rhoR),
                   qL[1], qR[1], speed)
    out[1] = -np.diff(f_v1) / dx - np.diff(central[4]) / (rho * dx)
    # transverse momentum: v1 d_x v_m + d_x Pi_m1 / rho
    for row, pi_row in ((2, 5), (3, 6)):
        out[row] = (-v1 * np.diff(central[row]) / dx - np.diff(dissipation[row]) / dx
                    - np.diff(central[pi_row]) / (rho * dx))

    grad_v = np.diff(central[1:4], axis=1) / dx
    for slot, (i, j) in enumerate(PI_COMPONENTS):
        row = 4 + slot
        flux = rusanov(qL[1] * qL[row], qR[1] * qR[row], qL[row], qR[row], speed)
        source = tr.eta * ((i == 0) * grad_v[j] + (j == 0) * grad_v[i])
        if i == j:
            source = source + (tr.zeta - 2.0 * tr.eta / 3.0) * grad_v[0]
        out[row] = -np.diff(flux) / dx - source / tr.tau
    return out


def transport_rhs(sim: Simulation, q: np.ndarray) -> np.ndarray:
    if sim.system == "bulk":
        return _bulk_rhs(sim, q)
    return _shear_rhs(sim, q)


def relax(sim: Simulation, q: np.ndarray, dt: float) -> np.ndarray:
    """Exact update of d_t Pi = -Pi/tau over dt, tau frozen at the incoming state."""
    out = q.copy()
    if sim.system == "bulk":
        tau = eval_transport(sim.law, q[0], q[2]).tau
        out[2] = q[2] * np.exp(-dt / tau)
    else:
        tau = _shear_transport(sim.law, q[0], q[_SHEAR_PI]).tau
        out[_SHEAR_PI] = q[_SHEAR_PI] * np.exp(-dt / tau)
    return out


# ---------------------------------------------------------------------------
# validity


def _scales(sim: Simulation) -> np.ndarray:
    rho_bar, c_v = sim.reference.rho_bar, sim.c_bar_v
    scale = np.full(len(sim.rows), rho_bar * c_v**2)
    scale[0] = rho_bar
    scale[1:2 if sim.system == "bulk" else 4] = c_v
    return scale


def deviation_from_reference(sim: Simulation, q: Optional[np.ndarray] = None) -> np.ndarray:
    """Per-cell max over variables of |q - reference| / scale."""
    q = sim.q if q is None else q
    dev = np.abs(q - sim.reference_vector()[:, None]) / _scales(sim)[:, None]
    return dev.max(axis=0)


def _boundary_cells(sim: Simulation) -> np.ndarray:
    g, n = sim.grid.n_ghost, sim.grid.n_cells
    if sim.grid.boundary == "periodic":
        return np.array([], dtype=int)
    outer = np.arange(n - g, n)
    if sim.grid.geometry == "spherical":
        return outer
    return np.concatenate([np.arange(g), outer])


def validate(sim: Simulation, q: np.ndarray) -> Optional[Tuple[str, int]]:
    """Return (message, cell) for the first failed check, or None."""
    finite = np.all(np.isfinite(q), axis=0)
    if not finite.all():
        return "non-finite field value", int(np.argmin(finite))
    floor = sim.options.density_floor_rel * sim.reference.rho_bar
    low = q[0] <= floor
    if low.any():
        cell = int(np.argmax(low))
        return f"density {q[0, cell]!r} at or below floor {floor:g}", cell
    try:
        if sim.system == "bulk":
            eval_transport(sim.law, q[0], q[2])
        else:
            _shear_transport(sim.law, q[0], q[_SHEAR_PI])
    except MaterialLawError as e:
        return str(e), -1
    cells = _boundary_cells(sim)
    if cells.size:
        dev = deviation_from_reference(sim, q[:, cells])
        if np.any(dev > sim.options.containment_tol):
            cell = int(cells[np.argmax(dev)])
            return "disturbance reached the fixed boundary (front not contained)", cell
    return None


# ---------------------------------------------------------------------------
# time stepping


def step(sim: Simulation, t_stop: Optional[float] = None) -> StepOutcome:
    """Advance one Strang step: relax(dt/2), SSP-RK transport, relax(dt/2).

    Invalid results are not committed; a gradient breakdown is committed and flagged.
    """
    try:
        dt = cfl_dt(sim)
    except (DomainError, MaterialLawError) as e:
        return StepOutcome("invalid_state", 0.0, math.nan, math.nan, str(e))
    if math.isnan(dt):
        return StepOutcome("invalid_state", 0.0, math.nan, math.nan, "wave speed is not finite")
    speed = sim.options.cfl * sim.grid.dx / dt
    if dt < sim.options.dt_floor:
        return StepOutcome("breakdown", dt, speed, math.nan, f"time step {dt:.3e} below floor")
    t_new = sim.t + dt
    if t_stop is not None and t_new >= t_stop:
        dt, t_new = t_stop - sim.t, t_stop
    if not dt > 0.0:
        raise NumericalFailure(f"non-positive time step {dt!r} at t={sim.t!r}")

    integrate = INTEGRATORS[sim.options.integrator]
    try:
        q = relax(sim, sim.q, 0.5 * dt)
        q = integrate(q, dt, lambda u: transport_rhs(sim, u))
        q = relax(sim, q, 0.5 * dt)
    except (DomainError, MaterialLawError) as e:
        return StepOutcome("invalid_state", dt, speed, math.nan, f"stage evaluation failed: {e}")

    problem = validate(sim, q)
    if problem is not None:
        message, cell = problem
        logger.debug("step %d rejected at cell %d: %s", sim.step_count, cell, message)
        return StepOutcome("invalid_state", dt, speed, math.nan, message, cell)

    sim.q = q
    sim.t = t_new
    sim.step_count += 1
    monitor = monitor_c1(sim)
    status: Status = "breakdown" if monitor.breakdown else "ok"
    return StepOutcome(status, dt, speed, monitor.max_grad, monitor.reason, monitor.cell)


@dataclass
class RunResult:
    outcome: StepOutcome
    series: List[SeriesRow]
    snapshots: List[Snapshot]

    @property
    def breakdown_time(self) -> Optional[float]:
        if self.outcome.status == "ok":
            return None
        return self.series[-1].t

    @property
    def max_containment(self) -> float:
        return max(row.containment for row in self.series)


def series_row(sim: Simulation, dt: float) -> SeriesRow:
    grad_u, grad_rho = gradient_maxima(sim)
    return SeriesRow(sim.t, dt, sideris_F(sim), relative_mass(sim), bulk_G(sim), grad_u, grad_rho,
                     containment_deviation(sim))


def run(sim: Simulation, t_end: float, observer: Optional[Callable[[Simulation, StepOutcome], None]] = None,
        cadence: int = 100, series_cadence: int = 1, snapshot_times: Sequence[float] = ()) -> RunResult:
    """Advance to t_end or until a step is not ok.

    observer(sim, outcome) is called every ``cadence`` accepted steps. Snapshot
    times are hit exactly.
    """
    if not t_end > sim.t:
        raise ValueError(f"t_end={t_end!r} must exceed current time {sim.t!r}")
    pending = sorted(t for t in snapshot_times if sim.t <= t <= t_end)
    snapshots: List[Snapshot] = []
    while pending and pending[0] == sim.t:
        snapshots.append(Snapshot(sim.t, sim.q.copy()))
        pending.pop(0)

    series = [series_row(sim, 0.0)]
    outcome = StepOutcome("ok", 0.0, max_wave_speed(sim), series[0].max_grad_u, "")
    while sim.t < t_end:
        target = pending[0] if pending else t_end
        outcome = step(sim, t_stop=target)
        if outcome.status == "invalid_state":
            logger.info("run stopped at t=%.6g: %s (cell %s)", sim.t, outcome.message, outcome.cell)
            break
        final = outcome.status != "ok" or sim.t >= t_end
        if sim.step_count % series_cadence == 0 or final:
            series.append(series_row(sim, outcome.dt_used))
        if observer is not None and sim.step_count % cadence == 0:
            observer(sim, outcome)
        while pending and sim.t >= pending[0]:
            snapshots.append(Snapshot(sim.t, sim.q.copy()))
            pending.pop(0)
        if sim.step_count % 100 == 0:
            logger.debug("step %d t=%.6g dt=%.3e speed=%.4g", sim.step_count, sim.t,
                         outcome.dt_used, outcome.max_wave_speed)
        if outcome.status == "breakdown":
            logger.info("breakdown at t=%.6g: %s (cell %s)", sim.t, outcome.message, outcome.cell)
            break

    result = RunResult(outcome, series, snapshots)
    if result.max_containment > sim.options.containment_tol:
        logger.warning("disturbance outside the propagation radius: %.3g > %.3g",
                       result.max_containment, sim.options.containment_tol)
    logger.info("run finished: status=%s steps=%d t=%.6g", outcome.status, sim.step_count, sim.t)
    return result


# ---------------------------------------------------------------------------
# initial data


def grid_for(config) -> Grid1D:
    return Grid1D(config.geometry, config.grid.n_cells, config.x_min, config.grid.x_max,
                  config.grid.boundary, settings.DEFAULT_N_GHOST)


def front_speed(law: MaterialLaw, rho_bar: float, system: System) -> float:
    if system == "shear":
        return fast_speed(ShearState(rho_bar), law)
    return bulk_front_speed(law, rho_bar)


def profile_fields(config, grid: Grid1D, b: Optional[float] = None) -> np.ndarray:
    """Initial field array from the built-in bump profiles (velocity amplitude b overrides the config)."""
    prof, ref = config.profile, config.reference
    shape = SHAPES[prof.shape](grid.centers, ref.R)
    b = prof.b if b is None else b
    u = b * radial_velocity(grid.centers, ref.R, prof.shape)
    rho = ref.rho_bar + prof.a * shape
    if config.system == "bulk":
        return np.vstack([rho, u, prof.c * shape])
    q = np.zeros((len(SHEAR_ROWS), grid.n_cells))
    q[0], q[1] = rho, u
    for slot in DIAGONAL_SLOTS:
        q[4 + slot] = prof.c * shape
    q[5] = prof.c_shear * shape
    return q


def init_scenario(config) -> Simulation:
    """Build the initial Simulation from a validated ScenarioConfig.

    Raises ConfigError when the profile is not admissible or the domain cannot
    contain the front up to t_end.
    """
    law = config.law()
    ref = ReferenceState(config.reference.rho_bar, config.reference.R)
    grid = grid_for(config)
    issues: List[ConfigIssue] = []

    c_v = front_speed(law, ref.rho_bar, config.system)
    reach = ref.R + c_v * config.run.t_end
    contained = reach < grid.x_max and (grid.geometry == "spherical" or -reach > grid.x_min)
    if grid.boundary == "fixed" and not contained:
        issues.append(ConfigIssue(None, "grid.x_max",
                                  f"front R + c_v t_end = {reach:.6g} not contained in the domain "
                                  f"[{grid.x_min:g}, {grid.x_max:g}]"))
    if issues:
        raise ConfigError(issues)
    if grid.boundary == "fixed" and reach > grid.x_max - (config.tolerances.containment_slack_cells + 1) * grid.dx:
        logger.warning("front approaching boundary: R + c_v t_end = %.6g, x_max = %.6g", reach, grid.x_max)

    b = None
    if config.profile.target_F_ratio is not None:
        b = solve_velocity_amplitude(config, config.profile.target_F_ratio)

    q = profile_fields(config, grid, b)
    floor = config.tolerances.density_floor_rel * ref.rho_bar
    if np.any(q[0] <= floor):
        issues.append(ConfigIssue(None, "profile.a", f"profile makes the density non-positive "
                                                     f"(min {float(q[0].min())!r})"))
    sim = Simulation(grid, law, ref, config.system, q, SolverOptions.from_config(config))
    if not issues:
        problem = validate(sim, q)
        if problem is not None:
            issues.append(ConfigIssue(None, "profile", f"initial data not admissible: {problem[0]}"))
    if issues:
        raise ConfigError(issues)

    sim.initial_max_grad = max(gradient_maxima(sim))
    logger.info("scenario initialized: max rho0=%.6g dM(0)=%.6g F(0)=%.6g G(0)=%.6g",
                float(q[0].max()), relative_mass(sim), sideris_F(sim), bulk_G(sim))
    return sim


def init_plane_wave(law: MaterialLaw, rho0: float, k: float, mode: Sequence[complex], n_cells: int,
                    system: System = "bulk", options: Optional[SolverOptions] = None,
                    wavelengths: int = 1) -> Simulation:
    """Periodic planar run seeded with Re(mode * exp(i k x)) on the uniform state rho0.

    ``mode`` holds one complex amplitude per solver row (rho first).
    """
    if not k > 0:
        raise DomainError("plane-wave wavenumber must be positive")
    length = 2.0 * math.pi * wavelengths / k
    grid = Grid1D("planar", n_cells, 0.0, length, "periodic")
    ref = ReferenceState(rho0, R=length)
    nvar = len(BULK_ROWS) if system == "bulk" else len(SHEAR_ROWS)
    mode = np.asarray(mode, dtype=complex)
    if mode.shape != (nvar,):
        raise DomainError(f"mode needs {nvar} complex amplitudes")
    base = np.zeros(nvar)
    base[0] = rho0
    q = base[:, None] + np.real(mode[:, None] * np.exp(1j * k * grid.centers)[None, :])
    sim = Simulation(grid, law, ref, system, q, options or SolverOptions())
    sim.initial_max_grad = max(gradient_maxima(sim))
    return sim

