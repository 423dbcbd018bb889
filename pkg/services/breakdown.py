"""Breakdown diagnostics - Sideris functionals, the finite-lifespan certificate,
growth-inequality monitoring and C1 blow-up detection"""

from dataclasses import dataclass
from typing import TYPE_CHECKING, List, NamedTuple, Optional, Sequence, Tuple
import logging
import math

import numpy as np

from src.viscoflow.exceptions import CertificateRefused, InsufficientData
from .finite_volume import cell_gradient
from .fluid_model import bulk_front_speed, eval_transport, pressure

if TYPE_CHECKING:
    from .solver import Grid1D, RunResult, SeriesRow, Simulation

logger = logging.getLogger(__name__)


def sideris_threshold(c_bar_v: float, R: float, max_rho0: float) -> float:
    """(16 pi / 3) c_v R^4 max rho0."""
    return 16.0 * math.pi / 3.0 * c_bar_v * R**4 * max_rho0


# ---------------------------------------------------------------------------
# functionals (quadrature with exact cell measures)


def _F(grid: "Grid1D", rho: np.ndarray, u: np.ndarray) -> float:
    return float(np.sum(grid.volumes * grid.centers * rho * u))


def sideris_F(sim: "Simulation") -> float:
    """Integral of x . rho v; in planar geometry the 1-D analog (not covered by the theorem)."""
    return _F(sim.grid, sim.rho, sim.velocity)


def relative_mass(sim: "Simulation") -> float:
    return float(np.sum(sim.grid.volumes * (sim.rho - sim.reference.rho_bar)))


def bulk_G(sim: "Simulation") -> float:
    """Integral of Pi (bulk) or of the trace Pi^i_i (shear)."""
    stress = sim.q[2] if sim.system == "bulk" else sim.trace_pi
    return float(np.sum(sim.grid.volumes * stress))


def sideris_dFdt(sim: "Simulation") -> float:
    """Integral identity for dF/dt: int rho u^2 + d int (P - Pbar) + stress term.

    d = 3 in spherical and 1 in planar geometry; the stress term is d*int Pi (bulk)
    or int Pi11 (planar shear).
    """
    law, ref, V = sim.law, sim.reference, sim.grid.volumes
    d = 3.0 if sim.grid.geometry == "spherical" else 1.0
    kinetic = np.sum(V * sim.rho * sim.velocity**2)
    if sim.system == "shear":
        stress = np.sum(V * sim.q[4])
    else:
        stress = d * np.sum(V * sim.q[2])
    excess = d * np.sum(V * (pressure(law, sim.rho) - pressure(law, ref.rho_bar)))
    return float(kinetic + excess + stress)


def gradient_maxima(sim: "Simulation") -> Tuple[float, float]:
    dx = sim.grid.dx
    return float(cell_gradient(sim.velocity, dx).max()), float(cell_gradient(sim.rho, dx).max())


# ---------------------------------------------------------------------------
# certificate


@dataclass(frozen=True)
class SiderisCertificate:
    R: float
    c_bar_v: float
    max_rho0: float
    threshold: float
    F0: float
    dM0: float
    G0: float
    satisfied: bool
    # upper bound on the lifespan implied by the growth inequality
    T_max: float = math.inf

    def __post_init__(self):
        expected = self.dM0 >= 0 and self.G0 >= 0 and self.F0 > self.threshold
        if self.satisfied != expected:
            raise ValueError("satisfied flag inconsistent with F0, dM0 and G0")


def lifespan_bound(F0: float, c_bar_v: float, R: float, max_rho0: float) -> float:
    """Time at which 1/F0 = K^-1 (R^-4 - (R + c_v T)^-4), K = (16 pi/3) c_v max rho0.

    Infinite unless F0 exceeds the threshold K R^4.
    """
    K = 16.0 * math.pi / 3.0 * c_bar_v * max_rho0
    remainder = R**-4 - K / F0 if F0 > 0 else -1.0
    if remainder <= 0.0:
        return math.inf
    return (remainder**-0.25 - R) / c_bar_v


def exterior_deviation(sim: "Simulation", radius: float) -> float:
    """Largest scaled deviation from the reference state over cells lying beyond ``radius``."""
    from .solver import deviation_from_reference

    outside = np.abs(sim.grid.faces[:-1]) >= radius
    if sim.grid.geometry == "planar":
        outside &= np.abs(sim.grid.faces[1:]) >= radius
    if not outside.any():
        return 0.0
    return float(deviation_from_reference(sim)[outside].max())


def certificate(sim: "Simulation", exterior_tol: float = 1e-8) -> SiderisCertificate:
    """Evaluate the finite-lifespan hypotheses on the current (initial) data.

    Refused for planar geometry, state-dependent transport laws, or data not
    equal to the reference outside radius R.
    """
    if sim.grid.geometry != "spherical":
        raise CertificateRefused("certificate needs spherical geometry; planar F is a test analog only")
    if not sim.law.is_constant:
        raise CertificateRefused("certificate needs constant zeta and tau; the law is state dependent")
    ref = sim.reference
    if ref.Pi_bar != 0.0 or any(ref.v_bar):
        raise CertificateRefused("certificate needs a reference state at rest with Pi_bar = 0")
    dev = exterior_deviation(sim, ref.R)
    if dev > exterior_tol:
        raise CertificateRefused(f"data differ from the reference outside R (deviation {dev:.3e})")

    c_v = bulk_front_speed(sim.law, ref.rho_bar)
    max_rho0 = float(sim.rho.max())
    threshold = sideris_threshold(c_v, ref.R, max_rho0)
    F0, dM0, G0 = sideris_F(sim), relative_mass(sim), bulk_G(sim)
    satisfied = dM0 >= 0 and G0 >= 0 and F0 > threshold
    T_max = lifespan_bound(F0, c_v, ref.R, max_rho0) if satisfied else math.inf
    logger.info("certificate: F0=%.6g threshold=%.6g satisfied=%s", F0, threshold, satisfied)
    return SiderisCertificate(ref.R, c_v, max_rho0, threshold, F0, dM0, G0, satisfied, T_max)


def solve_velocity_amplitude(config, ratio: float) -> float:
    """Velocity-bump amplitude b with F(0) = ratio * threshold on the configured grid.

    F is linear in b, so one quadrature at b = 1 fixes it.
    """
    from .solver import grid_for, front_speed, profile_fields

    if config.geometry != "spherical" or config.system != "bulk":
        raise CertificateRefused("amplitude targeting needs the spherical bulk system")
    law = config.law()
    if not law.is_constant:
        raise CertificateRefused("amplitude targeting needs constant zeta and tau")
    grid = grid_for(config)
    q = profile_fields(config, grid, b=1.0)
    unit_F = _F(grid, q[0], q[1])
    if not unit_F > 0:
        raise CertificateRefused("velocity profile yields no outward momentum")
    c_v = front_speed(law, config.reference.rho_bar, "bulk")
    target = ratio * sideris_threshold(c_v, config.reference.R, float(q[0].max()))
    b = target / unit_F
    logger.info("velocity amplitude b=%.10g for F(0)=%.6g", b, target)
    return b


# ---------------------------------------------------------------------------
# growth inequality


@dataclass(frozen=True)
class GrowthCheck:
    times: np.ndarray
    margins: np.ndarray
    tolerances: np.ndarray
    fraction_ok: float
    monotone: bool


def growth_rhs(F: float, t: float, cert: SiderisCertificate) -> float:
    """F^2 / ((4 pi/3)(R + c_v t)^5 max rho0)."""
    return F * F / (4.0 * math.pi / 3.0 * (cert.R + cert.c_bar_v * t) ** 5 * cert.max_rho0)


def check_growth(series: Sequence["SeriesRow"], cert: SiderisCertificate, growth_tol: float = 1e-3,
                 min_samples: int = 10, smooth_until: Optional[float] = None) -> GrowthCheck:
    """Forward-difference margin dF/dt - F^2/((4 pi/3)(R + c_v t)^5 max rho0) per sample.

    Samples ending after ``smooth_until`` are excluded.
    """
    rows = [r for r in series if smooth_until is None or r.t < smooth_until]
    if len(rows) < min_samples:
        raise InsufficientData(f"growth check needs {min_samples} samples, got {len(rows)}")
    t = np.array([r.t for r in rows])
    F = np.array([r.F for r in rows])
    if np.any(np.diff(t) <= 0):
        raise ValueError("series timestamps must be strictly increasing")
    slope = np.diff(F) / np.diff(t)
    rhs = np.array([growth_rhs(f, s, cert) for f, s in zip(F[:-1], t[:-1])])
    margins = slope - rhs
    tols = growth_tol * np.maximum(1.0, np.abs(rhs))
    fraction = float(np.mean(margins >= -tols))
    monotone = bool(np.all(np.diff(F) >= -tols * np.diff(t)))
    return GrowthCheck(t[:-1], margins, tols, fraction, monotone)


# ---------------------------------------------------------------------------
# C1 monitor and breakdown report


class C1Monitor(NamedTuple):
    max_grad: float
    max_grad_u: float
    max_grad_rho: float
    breakdown: bool
    reason: str = ""
    cell: Optional[int] = None


def monitor_c1(sim: "Simulation", dt: Optional[float] = None, check_state: bool = False) -> C1Monitor:
    """Flag loss of C1 regularity.

    Breakdown when max gradient > grad_factor * (initial max gradient + c_v / R),
    when dt falls below dt_floor, or (with ``check_state``) on an invalid state.
    """
    opts = sim.options
    if check_state:
        from .solver import validate

        problem = validate(sim, sim.q)
        if problem is not None:
            return C1Monitor(math.nan, math.nan, math.nan, True, problem[0], problem[1])
    grad_u, grad_rho = gradient_maxima(sim)
    max_grad = max(grad_u, grad_rho)
    if dt is not None and dt < opts.dt_floor:
        return C1Monitor(max_grad, grad_u, grad_rho, True, f"time step {dt:.3e} below floor")
    limit = opts.grad_factor * (sim.initial_max_grad + sim.c_bar_v / sim.reference.R)
    if max_grad > limit:
        dx = sim.grid.dx
        g = np.maximum(cell_gradient(sim.velocity, dx), cell_gradient(sim.rho, dx))
        cell = int(np.argmax(g))
        return C1Monitor(max_grad, grad_u, grad_rho, True,
                         f"gradient {max_grad:.4g} exceeds {limit:.4g}", cell)
    return C1Monitor(max_grad, grad_u, grad_rho, False)


@dataclass
class BreakdownReport:
    series: List["SeriesRow"]
    margins: Optional[GrowthCheck]
    breakdown_time: Optional[float]
    verdict: str
    grad_factor: Optional[float] = None


def build_report(result: "RunResult", cert: Optional[SiderisCertificate] = None,
                 growth_tol: float = 1e-3, min_samples: int = 10,
                 grad_factor: Optional[float] = None) -> BreakdownReport:
    """Growth margins under a satisfied certificate and a one-line verdict.

    ``grad_factor``, when given, is appended to a breakdown verdict.
    """
    t_b = result.breakdown_time
    growth = None
    if cert is not None and cert.satisfied:
        try:
            growth = check_growth(result.series, cert, growth_tol, min_samples, smooth_until=t_b)
        except InsufficientData as e:
            logger.warning("growth check skipped: %s", e)
    if t_b is None:
        verdict = "no breakdown detected up to t_end"
    else:
        verdict = f"breakdown detected at t={t_b!r}: {result.outcome.message}"
        if grad_factor is not None:
            verdict += f" (grad_factor={grad_factor:g})"
    return BreakdownReport(result.series, growth, t_b, verdict, grad_factor)


# ---------------------------------------------------------------------------
# auxiliary diagnostics


class NavierStokesResidual(NamedTuple):
    residual: float
    scale: float

    @property
    def ratio(self) -> float:
        return self.residual / self.scale if self.scale > 0 else math.inf


def _divergence(sim: "Simulation") -> np.ndarray:
    r, u, dx = sim.grid.centers, sim.velocity, sim.grid.dx
    if sim.grid.geometry == "spherical":
        return np.gradient(r * r * u, dx) / (r * r)
    return np.gradient(u, dx)


def navier_stokes_residual(sim: "Simulation") -> NavierStokesResidual:
    """max |Pi + zeta div v| against max |zeta div v| (the tau -> 0 limit Pi = -zeta div v)."""
    Pi = sim.bulk_pi
    zeta = eval_transport(sim.law, sim.rho, Pi).zeta
    viscous = zeta * _divergence(sim)
    return NavierStokesResidual(float(np.max(np.abs(Pi + viscous))), float(np.max(np.abs(viscous))))


def containment_deviation(sim: "Simulation", slack_cells: Optional[int] = None,
                          widths: Optional[float] = None) -> float:
    """Largest scaled deviation from the reference beyond R + c_v t + slack.

    The slack is ``slack_cells`` cells plus ``widths`` numerical-diffusion
    lengths sqrt(c_v dx t) of the Rusanov flux. Zero on periodic grids.
    """
    if sim.grid.boundary == "periodic":
        return 0.0
    opts = sim.options
    slack = opts.containment_slack_cells if slack_cells is None else slack_cells
    widths = opts.containment_widths if widths is None else widths
    dx, c_v = sim.grid.dx, sim.c_bar_v
    radius = sim.reference.R + c_v * sim.t + slack * dx + widths * math.sqrt(c_v * dx * sim.t)
    return exterior_deviation(sim, radius)


class PressureBound(NamedTuple):
    integral: float
    jensen: float
    reference: float

    @property
    def margin(self) -> float:
        return self.integral - self.jensen


def pressure_excess_lower_bound(sim: "Simulation", c_bar_v: Optional[float] = None) -> PressureBound:
    """Convexity bound over the ball B(t) of radius R + c_v t.

    int_B P >= A vol(B)^(1-gamma) (int_B rho)^gamma >= Pbar vol(B); B is the union
    of cells reaching into the ball.
    """
    c_v = sim.c_bar_v if c_bar_v is None else c_bar_v
    radius = sim.reference.R + c_v * sim.t
    inside = np.abs(sim.grid.faces[:-1]) < radius
    if sim.grid.geometry == "planar":
        inside |= np.abs(sim.grid.faces[1:]) < radius
    V = sim.grid.volumes[inside]
    rho = sim.rho[inside]
    vol = float(V.sum())
    law = sim.law
    integral = float(np.sum(V * pressure(law, rho)))
    jensen = law.A * vol ** (1.0 - law.gamma) * float(np.sum(V * rho)) ** law.gamma
    return PressureBound(integral, jensen, float(pressure(law, sim.reference.rho_bar)) * vol)


class RichardsonEstimate(NamedTuple):
    coarse: float
    fine: float
    extrapolated: float
    error: float


def richardson_estimate(config, functional: str = "F", order: int = 2) -> RichardsonEstimate:
    """Initial-data quadrature of F, dM or G on n and 2n cells with Richardson extrapolation."""
    from .solver import Grid1D, profile_fields

    b = None
    if config.profile.target_F_ratio is not None:
        b = solve_velocity_amplitude(config, config.profile.target_F_ratio)
    values = []
    for n in (config.grid.n_cells, 2 * config.grid.n_cells):
        grid = Grid1D(config.geometry, n, config.x_min, config.grid.x_max, config.grid.boundary)
        q = profile_fields(config, grid, b)
        if functional == "F":
            values.append(_F(grid, q[0], q[1]))
        elif functional == "dM":
            values.append(float(np.sum(grid.volumes * (q[0] - config.reference.rho_bar))))
        elif functional == "G":
            stress = q[2] if config.system == "bulk" else q[4] + q[7] + q[9]
            values.append(float(np.sum(grid.volumes * stress)))
        else:
            raise ValueError(f"unknown functional {functional!r}; expected F, dM or G")
    coarse, fine = values
    error = abs(fine - coarse) / (2**order - 1)
    extrapolated = fine + (fine - coarse) / (2**order - 1)
    return RichardsonEstimate(coarse, fine, extrapolated, error)
