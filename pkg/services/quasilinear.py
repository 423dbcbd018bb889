"""Quasilinear form A0 dt(Phi) + A^k dk(Phi) + B Phi = 0 of the bulk and shear systems,
principal symbols and characteristic speeds."""

from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy import linalg

from src.viscoflow.exceptions import AssemblyError, DomainError, MaterialLawError
from .fluid_model import (
    PI_COMPONENTS,
    PI_INDEX,
    BulkState,
    MaterialLaw,
    ShearState,
    sound_speed,
    transport_at,
)

logger = logging.getLogger(__name__)

BULK_VARIABLES = ("rho", "v1", "v2", "v3", "Pi")
SHEAR_VARIABLES = ("rho", "v1", "v2", "v3", "Pi11", "Pi12", "Pi13", "Pi22", "Pi23", "Pi33")

Verdict = Literal["FOSH", "strongly-hyperbolic", "degenerate"]


@dataclass(frozen=True)
class QuasilinearSystem:
    a0: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    a3: np.ndarray
    b: np.ndarray
    kind: Literal["bulk", "shear"]
    # positive factor each PDE row was multiplied by before assembly
    row_weights: np.ndarray = field(default=None)

    @property
    def dim(self) -> int:
        return self.a0.shape[0]

    @property
    def spatial(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.a1, self.a2, self.a3)

    def principal_symbol(self, xi0: float, xi: Sequence[float]) -> np.ndarray:
        return xi0 * self.a0 + sum(x * a for x, a in zip(xi, self.spatial))

    def residual(self, phi, dphi_dt, grad_phi) -> np.ndarray:
        """Contract with (dt Phi, dk Phi); grad_phi[k] holds d_k Phi."""
        out = self.a0 @ np.asarray(dphi_dt) + self.b @ np.asarray(phi)
        for a, g in zip(self.spatial, grad_phi):
            out = out + a @ np.asarray(g)
        return out

    def is_symmetric(self, rtol: float = 1e-12) -> bool:
        for m in (self.a0, *self.spatial):
            scale = max(1.0, float(np.abs(m).max()))
            if not np.allclose(m, m.T, rtol=0.0, atol=rtol * scale):
                return False
        return True


@dataclass(frozen=True)
class CharacteristicReport:
    direction: Tuple[float, float, float]
    speeds: Tuple[float, ...]
    multiplicities: Tuple[Tuple[float, int], ...]
    eigenvector_condition: float
    symmetric: bool
    a0_posdef: bool
    hyperbolic_verdict: Verdict

    def __post_init__(self):
        if self.hyperbolic_verdict == "FOSH" and not (self.symmetric and self.a0_posdef):
            raise ValueError("FOSH verdict requires symmetric matrices and positive definite a0")


def _unit(direction: Sequence[float]) -> np.ndarray:
    n = np.asarray(direction, dtype=float)
    norm = float(np.linalg.norm(n))
    if n.shape != (3,) or abs(norm - 1.0) > 1e-8:
        raise DomainError(f"direction must be a unit 3-vector, got norm {norm!r}")
    return n


def _admissible(state, law: MaterialLaw):
    try:
        c_s = sound_speed(law, state.rho)
        tr = transport_at(law, state)
    except (DomainError, MaterialLawError) as e:
        raise AssemblyError(f"state not admissible: {e}") from e
    Pi = state.bulk_scalar if isinstance(state, ShearState) else state.Pi
    zeta_eff = tr.zeta + tr.tau * Pi
    if not zeta_eff > 0:
        raise AssemblyError(f"effective bulk coefficient zeta + tau*Pi = {zeta_eff!r} must be positive")
    return c_s, tr, zeta_eff


def assemble_bulk(state: BulkState, law: MaterialLaw) -> QuasilinearSystem:
    """5x5 symmetric system for Phi = (rho, v1, v2, v3, Pi).

    The Pi row is divided by zeta_eff*c_s^2 with zeta_eff = zeta + tau*Pi, which carries the
    principal tau*Pi*div(v) part of tau*d_i(v^i Pi). At Pi = 0 this is the classical form.
    """
    c_s, tr, zeta_eff = _admissible(state, law)
    rho, v, c2, tau = state.rho, state.v, c_s * c_s, tr.tau
    s = 1.0 / (zeta_eff * c2)

    a0 = np.diag([1.0 / rho, rho / c2, rho / c2, rho / c2, tau * s])
    spatial = []
    for k in range(3):
        a = np.zeros((5, 5))
        a[0, 0] = v[k] / rho
        a[0, 1 + k] = a[1 + k, 0] = 1.0
        for m in range(3):
            a[1 + m, 1 + m] = v[k] * rho / c2
        a[1 + k, 4] = a[4, 1 + k] = 1.0 / c2
        a[4, 4] = tau * v[k] * s
        spatial.append(a)
    b = np.zeros((5, 5))
    b[4, 4] = s
    weights = np.array([1.0 / rho, 1.0 / c2, 1.0 / c2, 1.0 / c2, s])
    return QuasilinearSystem(a0, *spatial, b, kind="bulk", row_weights=weights)


def assemble_shear(state: ShearState, law: MaterialLaw) -> QuasilinearSystem:
    """10x10 system for Phi = (rho, v1, v2, v3, Pi11, Pi12, Pi13, Pi22, Pi23, Pi33).

    Stress rows are scaled by 1/(eta c_s^2) (off-diagonal) and 1/(2 eta c_s^2) (diagonal);
    with zeta + tau*Pi = 2 eta/3 the scaled matrices are symmetric.
    """
    c_s, tr, _ = _admissible(state, law)
    rho, v, c2 = state.rho, state.v, c_s * c_s
    zeta, eta, tau = tr.zeta, tr.eta, tr.tau
    pi = state.tensor()

    weights = np.empty(10)
    weights[0] = 1.0 / rho
    weights[1:4] = 1.0 / c2
    for slot, (i, j) in enumerate(PI_COMPONENTS):
        weights[4 + slot] = 1.0 / ((2.0 if i == j else 1.0) * eta * c2)

    a0 = np.zeros((10, 10))
    a0[0, 0] = 1.0 / rho
    for i in range(3):
        a0[1 + i, 1 + i] = rho / c2
    b = np.zeros((10, 10))
    spatial = [np.zeros((10, 10)) for _ in range(3)]

    for k, a in enumerate(spatial):
        # continuity, already divided by rho
        a[0, 0] = v[k] / rho
        a[0, 1 + k] = 1.0
        # momentum, divided by c_s^2
        for i in range(3):
            a[1 + i, 1 + i] = rho * v[k] / c2
            a[1 + i, 4 + PI_INDEX[(i, k)]] += 1.0 / c2
        a[1 + k, 0] = 1.0

    for slot, (i, j) in enumerate(PI_COMPONENTS):
        row = 4 + slot
        w = weights[row]
        a0[row, row] = tau * w
        b[row, row] = w
        for k, a in enumerate(spatial):
            a[row, row] = tau * v[k] * w
            for m in range(3):
                coeff = eta * ((k == i) * (j == m) + (k == j) * (i == m))
                coeff += (i == j) * (zeta - 2.0 * eta / 3.0) * (k == m)
                coeff += tau * pi[i, j] * (k == m)
                a[row, 1 + m] += coeff * w

    return QuasilinearSystem(a0, *spatial, b, kind="shear", row_weights=weights)


def characteristic_speeds_bulk_closed(state: BulkState, law: MaterialLaw,
                                      direction: Sequence[float]) -> Tuple[float, ...]:
    """v.n (x3) and v.n -+ c_v with c_v = sqrt(c_s^2 + zeta_eff/(rho tau))."""
    n = _unit(direction)
    c_s, tr, zeta_eff = _admissible(state, law)
    c_v = math.sqrt(c_s * c_s + zeta_eff / (state.rho * tr.tau))
    vn = float(np.dot(state.v, n))
    return (vn - c_v, vn, vn, vn, vn + c_v)


def characteristic_speeds_shear_closed(state: ShearState, law: MaterialLaw,
                                       direction: Sequence[float]) -> Tuple[float, ...]:
    """Distinct speeds {v.n, v.n -+ shear, v.n -+ fast}; exact for isotropic stress."""
    n = _unit(direction)
    c_s, tr, zeta_eff = _admissible(state, law)
    rho_tau = state.rho * tr.tau
    shear = math.sqrt(tr.eta / rho_tau)
    fast = math.sqrt(c_s * c_s + (zeta_eff + 4.0 * tr.eta / 3.0) / rho_tau)
    vn = float(np.dot(state.v, n))
    return (vn - fast, vn - shear, vn, vn + shear, vn + fast)


def fast_speed(state, law: MaterialLaw) -> float:
    """Largest |alpha| of the closed forms (direction independent at rest)."""
    c_s, tr, zeta_eff = _admissible(state, law)
    extra = zeta_eff
    if isinstance(state, ShearState):
        extra += 4.0 * tr.eta / 3.0
    return math.sqrt(c_s * c_s + extra / (state.rho * tr.tau))


def _group(values: np.ndarray, tol: float) -> Tuple[Tuple[float, int], ...]:
    groups: List[List[float]] = []
    for x in values:
        if groups and abs(x - groups[-1][-1]) <= tol:
            groups[-1].append(x)
        else:
            groups.append([x])
    return tuple((float(np.mean(g)), len(g)) for g in groups)


def _is_posdef(m: np.ndarray) -> bool:
    if not np.allclose(m, m.T):
        return False
    try:
        np.linalg.cholesky(m)
        return True
    except np.linalg.LinAlgError:
        return False


def characteristic_speeds_numeric(system: QuasilinearSystem, direction: Sequence[float],
                                  cond_cap: float = 1e8, imag_tol: float = 1e-9) -> CharacteristicReport:
    """Eigenvalues of a0^-1 (n_k a^k), i.e. roots of det(-lambda a0 + n_k a^k) = 0."""
    n = _unit(direction)
    symmetric = system.is_symmetric()
    posdef = _is_posdef(system.a0)
    an = sum(x * a for x, a in zip(n, system.spatial))

    if np.linalg.matrix_rank(system.a0) < system.dim:
        logger.warning("a0 is singular; no characteristic speeds")
        return CharacteristicReport(tuple(n), (), (), math.inf, symmetric, posdef, "degenerate")

    if symmetric and posdef:
        w, vecs = linalg.eigh(an, system.a0)
        w = w.astype(complex)
    else:
        w, vecs = linalg.eig(an, system.a0)

    scale = max(1.0, float(np.max(np.abs(w))))
    real = bool(np.all(np.abs(w.imag) <= imag_tol * scale))
    cond = float(np.linalg.cond(vecs))
    speeds = np.sort(w.real)
    multiplicities = _group(speeds, 1e-7 * scale)

    if not real or not cond <= cond_cap:
        verdict: Verdict = "degenerate"
    elif symmetric and posdef:
        verdict = "FOSH"
    else:
        verdict = "strongly-hyperbolic"
    return CharacteristicReport(tuple(float(x) for x in n), tuple(float(s) for s in speeds),
                                multiplicities, cond, symmetric, posdef, verdict)


def _scan_directions(count: int = 26) -> List[np.ndarray]:
    # coordinate axes, then a golden-angle spiral on the sphere
    dirs = [np.eye(3)[i] for i in range(3)]
    golden = math.pi * (3.0 - math.sqrt(5.0))
    for i in range(count - 3):
        z = 1.0 - 2.0 * (i + 0.5) / (count - 3)
        r = math.sqrt(1.0 - z * z)
        dirs.append(np.array([r * math.cos(golden * i), r * math.sin(golden * i), z]))
    return dirs


def hyperbolicity_scan(system: QuasilinearSystem, directions: Optional[Sequence[Sequence[float]]] = None,
                       cond_cap: float = 1e8) -> List[CharacteristicReport]:
    dirs = _scan_directions() if directions is None else directions
    return [characteristic_speeds_numeric(system, d, cond_cap=cond_cap) for d in dirs]


def det_principal_symbol(system: QuasilinearSystem, xi0: float, xi: Sequence[float]) -> float:
    return float(np.linalg.det(system.principal_symbol(xi0, xi)))


def det_principal_symbol_closed(state: BulkState, law: MaterialLaw, xi0: float,
                                xi: Sequence[float]) -> float:
    """rho^2 alpha^3 tau/(zeta_eff c_s^8) (alpha^2 - c_v^2 xi.xi), alpha = xi0 + v.xi."""
    c_s, tr, zeta_eff = _admissible(state, law)
    xi = np.asarray(xi, dtype=float)
    alpha = xi0 + float(np.dot(state.v, xi))
    c_v2 = c_s**2 + zeta_eff / (state.rho * tr.tau)
    return state.rho**2 * alpha**3 * tr.tau / (zeta_eff * c_s**8) * (alpha**2 - c_v2 * float(xi @ xi))
