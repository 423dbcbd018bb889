"""Linear stability - dispersion relations about uniform equilibrium,
Routh-Hurwitz determinants, polynomial roots and a ring-down check against
the nonlinear solver."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Literal, NamedTuple, Optional, Sequence, Tuple, Union
import logging
import math

import numpy as np
from scipy import linalg
from scipy.optimize import curve_fit

from src.viscoflow.config import settings
from src.viscoflow.exceptions import DomainError, FitError, NumericalFailure
from .fluid_model import MaterialLaw, eval_transport, sound_speed

logger = logging.getLogger(__name__)

Classification = Literal["stable", "marginal", "unstable"]
Branch = Literal["acoustic", "shear"]


@dataclass(frozen=True)
class Background:
    """Uniform equilibrium; coefficients are taken as given so that sign changes can be studied."""

    rho0: float
    c_s: float
    zeta: float
    tau: float
    eta: float = 1.0
    v0: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    @classmethod
    def from_law(cls, law: MaterialLaw, rho0: float, v0: Sequence[float] = (0.0, 0.0, 0.0)) -> "Background":
        tr = eval_transport(law, rho0, 0.0, 0.0)
        return cls(rho0, sound_speed(law, rho0), float(tr.zeta), float(tr.tau), float(tr.eta),
                   tuple(float(c) for c in v0))


def _k_vector(k: Union[float, Sequence[float]]) -> np.ndarray:
    if np.ndim(k) == 0:
        return np.array([float(k), 0.0, 0.0])
    kv = np.asarray(k, dtype=float)
    if kv.shape != (3,):
        raise DomainError("wavevector must be a scalar or a 3-vector")
    return kv


@dataclass(frozen=True)
class DispersionProblem:
    """Polynomial in x = -i Omega, highest degree first; omega = Omega + shift."""

    k_vec: Tuple[float, float, float]
    background: Background
    poly: Tuple[float, ...]
    shift: float
    # transverse Omega = 0 solutions (k orthogonal to dv), reported, never counted as instability
    neutral_modes: int = 2

    @property
    def k2(self) -> float:
        return float(np.dot(self.k_vec, self.k_vec))


def bulk_dispersion(background: Background, k: Union[float, Sequence[float]]) -> DispersionProblem:
    """tau x^3 + x^2 + (tau c_s^2 + zeta/rho0) k^2 x + c_s^2 k^2."""
    kv = _k_vector(k)
    bg = background
    k2 = float(kv @ kv)
    poly = (bg.tau, 1.0, (bg.tau * bg.c_s**2 + bg.zeta / bg.rho0) * k2, bg.c_s**2 * k2)
    return DispersionProblem(tuple(kv), bg, poly, float(np.dot(bg.v0, kv)))


# ---------------------------------------------------------------------------
# roots


class PolyRoots(NamedTuple):
    roots: np.ndarray
    degree_reduced: bool
    residual: float


def poly_roots(coeffs: Sequence[float], residual_tol: Optional[float] = None) -> PolyRoots:
    """Companion-matrix eigenvalues with one Newton polish per root, sorted by (real, imag).

    Leading zero coefficients are dropped and flagged. With ``residual_tol`` set, a
    scaled residual max|p(x)| / max|a| above it raises NumericalFailure.
    """
    c = np.asarray(coeffs, dtype=float)
    nonzero = np.flatnonzero(c)
    if nonzero.size == 0:
        raise DomainError("polynomial is identically zero")
    reduced = nonzero[0] > 0
    if reduced:
        logger.warning("leading coefficient zero; degree reduced from %d to %d", c.size - 1, c.size - 1 - nonzero[0])
        c = c[nonzero[0]:]
    if c.size == 1:
        return PolyRoots(np.array([], dtype=complex), bool(reduced), 0.0)

    roots = np.linalg.eigvals(linalg.companion(c)).astype(complex)
    dc = np.polyder(c)
    for i, r in enumerate(roots):
        p = np.polyval(c, r)
        dp = np.polyval(dc, r)
        if dp != 0:
            polished = r - p / dp
            if abs(np.polyval(c, polished)) < abs(p):
                roots[i] = polished
    roots = roots[np.lexsort((roots.imag, roots.real))]
    residual = float(np.max(np.abs(np.polyval(c, roots)))) / float(np.max(np.abs(c)))
    if residual_tol is not None and not residual <= residual_tol:
        raise NumericalFailure(f"root residual {residual:.3e} exceeds {residual_tol:.3e} for coefficients {c.tolist()}")
    return PolyRoots(roots, bool(reduced), residual)


def omega_roots(problem: DispersionProblem, residual_tol: Optional[float] = None) -> np.ndarray:
    """omega = i x + v0.k for every root x."""
    return 1j * poly_roots(problem.poly, residual_tol).roots + problem.shift


def classify(max_real_part: float, band: float = 1e-9) -> Classification:
    if max_real_part < -band:
        return "stable"
    if max_real_part <= band:
        return "marginal"
    return "unstable"


# ---------------------------------------------------------------------------
# Routh-Hurwitz


def hurwitz_minors(coeffs: Sequence[float]) -> Tuple[float, ...]:
    """Leading principal minors of the Hurwitz matrix h_ij = a_(2j-i), leading coefficient made positive."""
    a = np.asarray(coeffs, dtype=float)
    if a[0] < 0:
        a = -a
    n = a.size - 1

    def coef(m: int) -> float:
        return a[m] if 0 <= m <= n else 0.0

    H = np.array([[coef(2 * j - i) for j in range(1, n + 1)] for i in range(1, n + 1)])
    return tuple(float(np.linalg.det(H[:m, :m])) for m in range(1, n + 1))


@dataclass(frozen=True)
class StabilityVerdict:
    deltas: Tuple[float, ...]
    stable: bool
    roots: Tuple[complex, ...]
    max_real_part: float
    classification: Classification
    degree_reduced: bool = False


def routh_hurwitz(problem: Union[DispersionProblem, Sequence[float]], marginal_band: float = 1e-9,
                  residual_tol: Optional[float] = None) -> StabilityVerdict:
    """Determinants of the cubic a0 x^3 + a1 x^2 + a2 x + a3.

    Delta1 = a3, Delta2 = a1 a2 - a0 a3, Delta3 = a0 Delta2; stable when all are
    positive and a0 a1 > 0.
    """
    poly = problem.poly if isinstance(problem, DispersionProblem) else tuple(problem)
    if len(poly) != 4:
        raise DomainError("routh_hurwitz expects a cubic")
    a0, a1, a2, a3 = poly
    d2 = a1 * a2 - a0 * a3
    deltas = (a3, d2, a0 * d2)
    stable = all(d > 0 for d in deltas) and a0 * a1 > 0
    found = poly_roots(poly, residual_tol)
    max_re = float(found.roots.real.max()) if found.roots.size else -math.inf
    return StabilityVerdict(deltas, stable, tuple(found.roots), max_re, classify(max_re, marginal_band),
                            found.degree_reduced)


# ---------------------------------------------------------------------------
# shear system


class Factor(NamedTuple):
    name: str
    poly: Tuple[float, ...]
    multiplicity: int


@dataclass(frozen=True)
class ShearDispersion:
    k_vec: Tuple[float, float, float]
    background: Background
    relaxation: Factor
    quadratic: Factor
    cubic: Factor
    shift: float

    @property
    def factors(self) -> Tuple[Factor, Factor, Factor]:
        return (self.relaxation, self.quadratic, self.cubic)

    def full_poly(self) -> np.ndarray:
        """Product of the factors with multiplicity (degree 10)."""
        out = np.array([1.0])
        for f in self.factors:
            for _ in range(f.multiplicity):
                out = np.polymul(out, f.poly)
        return out


def shear_dispersion(background: Background, k: Union[float, Sequence[float]]) -> ShearDispersion:
    """(1 + tau x)^3, the transverse quadratic (twice) and the longitudinal cubic in x = -i Omega."""
    kv = _k_vector(k)
    bg = background
    k2 = float(kv @ kv)
    rho, tau, c2 = bg.rho0, bg.tau, bg.c_s**2
    relaxation = Factor("relaxation", (tau, 1.0), 3)
    quadratic = Factor("shear", (rho * tau, rho, bg.eta * k2), 2)
    cubic = Factor("acoustic", (rho * tau, rho, (bg.zeta + 4.0 * bg.eta / 3.0 + c2 * rho * tau) * k2, c2 * rho * k2), 1)
    return ShearDispersion(tuple(kv), bg, relaxation, quadratic, cubic, float(np.dot(bg.v0, kv)))


class FactorVerdict(NamedTuple):
    name: str
    minors: Tuple[float, ...]
    stable: bool
    roots: Tuple[complex, ...]
    max_real_part: float


@dataclass(frozen=True)
class ShearVerdict:
    factors: Tuple[FactorVerdict, ...]
    stable: bool
    max_real_part: float
    classification: Classification


def _strip_zero_roots(poly: Tuple[float, ...]) -> Tuple[float, ...]:
    out = list(poly)
    while len(out) > 1 and out[-1] == 0.0:
        out.pop()
    return tuple(out)


def shear_verdict(problem: ShearDispersion, marginal_band: float = 1e-9,
                  residual_tol: Optional[float] = None) -> ShearVerdict:
    """Per-factor Hurwitz minors and roots; at k = 0 the x = 0 roots are neutral and excluded."""
    at_rest = float(np.dot(problem.k_vec, problem.k_vec)) == 0.0
    verdicts = []
    for f in problem.factors:
        poly = _strip_zero_roots(f.poly) if at_rest else f.poly
        minors = hurwitz_minors(poly) if len(poly) > 1 else ()
        found = poly_roots(poly, residual_tol)
        max_re = float(found.roots.real.max()) if found.roots.size else -math.inf
        verdicts.append(FactorVerdict(f.name, minors, all(m > 0 for m in minors), tuple(found.roots), max_re))
    max_re = max(v.max_real_part for v in verdicts)
    stable = all(v.stable for v in verdicts)
    return ShearVerdict(tuple(verdicts), stable, max_re, classify(max_re, marginal_band))


# ---------------------------------------------------------------------------
# sweeps


class SweepRow(NamedTuple):
    k: float
    omegas: Tuple[complex, ...]


def _branch_omegas(background: Background, k: float, system: str, direction: Sequence[float],
                   residual_tol: Optional[float] = None) -> SweepRow:
    kv = k * np.asarray(direction, dtype=float)
    if system == "shear":
        sd = shear_dispersion(background, kv)
        x = poly_roots(sd.full_poly(), residual_tol).roots
        return SweepRow(k, tuple(1j * x + sd.shift))
    return SweepRow(k, tuple(omega_roots(bulk_dispersion(background, kv), residual_tol)))


def dispersion_sweep(background: Background, kmin: float, kmax: float, n: int, system: str = "bulk",
                     direction: Sequence[float] = (1.0, 0.0, 0.0),
                     workers: Optional[int] = None, residual_tol: Optional[float] = None) -> List[SweepRow]:
    """omega branches on n evenly spaced |k|; order of rows is independent of worker count."""
    ks = np.linspace(kmin, kmax, n) if n > 1 else np.array([kmin])
    with ThreadPoolExecutor(max_workers=workers or settings.VISCOFLOW_THREADS) as pool:
        return list(pool.map(lambda k: _branch_omegas(background, float(k), system, direction, residual_tol), ks))


# ---------------------------------------------------------------------------
# ring-down check against the solver


@dataclass(frozen=True)
class DispersionComparison:
    system: str
    branch: Branch
    k: float
    predicted: complex
    fitted_decay: float
    fitted_frequency: float
    decay_error: float
    frequency_error: float
    residual: float
    passed: bool
    samples: int = field(default=0)


def least_damped(roots: Sequence[complex]) -> complex:
    """Root with the largest real part; the one with non-negative imaginary part among a pair."""
    roots = list(roots)
    top = max(r.real for r in roots)
    candidates = [r for r in roots if abs(r.real - top) <= 1e-9 * max(1.0, abs(top))]
    return max(candidates, key=lambda r: r.imag)


def plane_wave_mode(background: Background, k: float, x: complex, system: str, branch: Branch,
                    amplitude: float) -> np.ndarray:
    """Linear eigenvector (solver row order) for the root x at wavenumber k along the x axis."""
    bg = background
    if system == "bulk":
        drho = amplitude * bg.rho0
        du = 1j * x * drho / (bg.rho0 * k)
        dpi = -1j * bg.zeta * k * du / (1.0 + bg.tau * x)
        return np.array([drho, du, dpi], dtype=complex)
    mode = np.zeros(10, dtype=complex)
    relax = 1.0 + bg.tau * x
    if branch == "shear":
        dv = amplitude * bg.c_s
        mode[2] = dv
        mode[5] = -1j * bg.eta * k * dv / relax
        return mode
    drho = amplitude * bg.rho0
    dv = 1j * x * drho / (bg.rho0 * k)
    mode[0], mode[1] = drho, dv
    mode[4] = -1j * k * (bg.zeta + 4.0 * bg.eta / 3.0) * dv / relax
    mode[7] = mode[9] = -1j * k * (bg.zeta - 2.0 * bg.eta / 3.0) * dv / relax
    return mode


def _ringdown(t, A, gamma, omega, phi):
    n = t.size // 2
    envelope = A * np.exp(-gamma * t[:n])
    return np.concatenate([envelope * np.cos(omega * t[:n] + phi), envelope * np.sin(omega * t[:n] + phi)])


def verify_against_simulation(law: MaterialLaw, rho0: float, k: float, system: str = "bulk",
                              branch: Branch = "acoustic", n_cells: int = 512, amplitude: float = 1e-6,
                              periods: float = 2.0, fit_tol: float = 0.02, min_cells_per_wavelength: int = 256,
                              options=None) -> DispersionComparison:
    """Seed the least-damped eigenmode on a periodic grid and fit the complex Fourier amplitude
    A exp(-gamma t) exp(i(omega t + phi)) against the predicted root."""
    from .solver import SolverOptions, init_plane_wave, run

    if n_cells < min_cells_per_wavelength:
        raise DomainError(f"need at least {min_cells_per_wavelength} cells per wavelength, got {n_cells}")
    if branch == "shear" and system != "shear":
        raise DomainError("the transverse branch exists only in the shear system")
    bg = Background.from_law(law, rho0)
    if system == "shear":
        sd = shear_dispersion(bg, k)
        poly = sd.quadratic.poly if branch == "shear" else sd.cubic.poly
    else:
        poly = bulk_dispersion(bg, k).poly
    x = least_damped(poly_roots(poly).roots)
    row = 2 if branch == "shear" else 0
    mode = plane_wave_mode(bg, k, x, system, branch, amplitude)

    sim = init_plane_wave(law, rho0, k, mode, n_cells, system, options or SolverOptions())
    phase = np.exp(-1j * k * sim.grid.centers)
    base = rho0 if row == 0 else 0.0

    def project(s) -> complex:
        return complex(2.0 * np.mean((s.q[row] - base) * phase))

    times, signal = [sim.t], [project(sim)]

    def record(s, _outcome):
        times.append(s.t)
        signal.append(project(s))

    rate = max(abs(x.imag), abs(x.real))
    t_end = periods * 2.0 * math.pi / abs(x.imag) if abs(x.imag) > 1e-12 * rate else 3.0 / abs(x.real)
    result = run(sim, t_end, observer=record, cadence=1)
    if result.outcome.status != "ok":
        raise FitError(f"plane-wave run ended with {result.outcome.status}: {result.outcome.message}", math.inf)

    t = np.array(times)
    a = np.array(signal)
    data = np.concatenate([a.real, a.imag])
    tt = np.concatenate([t, t])
    p0 = (abs(a[0]), -x.real, x.imag, float(np.angle(a[0])))
    try:
        popt, _ = curve_fit(_ringdown, tt, data, p0=p0, maxfev=20000)
    except (RuntimeError, ValueError) as e:
        raise FitError(f"ring-down fit failed: {e}", math.inf, f"samples={t.size} p0={p0}") from e
    model = _ringdown(tt, *popt)
    residual = float(np.linalg.norm(model - data) / max(np.linalg.norm(data), 1e-300))
    report = (f"A={popt[0]:.6e} gamma={popt[1]:.6e} omega={popt[2]:.6e} phi={popt[3]:.4f} "
              f"predicted x={x:.6e} samples={t.size}")
    if residual > 0.05:
        raise FitError("signal is not a single damped exponential", residual, report)

    gamma, omega = float(popt[1]), float(popt[2])
    decay_error = abs(gamma + x.real) / max(abs(x.real), 1e-300)
    scale = abs(x.imag) if abs(x.imag) > 1e-12 * rate else abs(x)
    frequency_error = abs(omega - x.imag) / scale
    passed = bool(decay_error <= fit_tol and frequency_error <= fit_tol)
    if not passed:
        logger.warning("dispersion mismatch: %s (decay err %.3g, freq err %.3g)", report, decay_error, frequency_error)
    return DispersionComparison(system, branch, float(k), complex(x), gamma, omega, decay_error,
                                frequency_error, residual, passed, int(t.size))
