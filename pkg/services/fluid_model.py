"""Fluid model - state types, barotropic equation of state, transport-coefficient laws"""

from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Literal, NamedTuple, Tuple, Union
import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from src.viscoflow.exceptions import DomainError, MaterialLawError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]
Vec3 = Tuple[float, float, float]

# storage order of the independent stress components
PI_COMPONENTS: Tuple[Tuple[int, int], ...] = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
PI_LABELS = ("Pi11", "Pi12", "Pi13", "Pi22", "Pi23", "Pi33")
PI_INDEX: Dict[Tuple[int, int], int] = {}
for _k, (_i, _j) in enumerate(PI_COMPONENTS):
    PI_INDEX[(_i, _j)] = _k
    PI_INDEX[(_j, _i)] = _k
DIAGONAL_SLOTS = (0, 3, 5)


def check_density(rho: ArrayLike, floor: float = 0.0) -> None:
    """Raise DomainError unless every density is finite and above ``floor`` (and > 0)."""
    arr = np.asarray(rho, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("density is not finite")
    bad = arr <= max(floor, 0.0)
    if np.any(bad):
        worst = float(arr.min())
        raise DomainError(f"density must be positive (above {floor:g}); got {worst!r}")


def _check_finite(name: str, *values: ArrayLike) -> None:
    for value in values:
        if not np.all(np.isfinite(np.asarray(value, dtype=float))):
            raise DomainError(f"{name} is not finite")


@dataclass(frozen=True)
class BulkState:
    rho: float
    v: Vec3 = (0.0, 0.0, 0.0)
    Pi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(float(c) for c in self.v))
        if len(self.v) != 3:
            raise DomainError("velocity must have three components")
        check_density(self.rho)
        _check_finite("state", self.v, self.Pi)

    @property
    def stress_invariant(self) -> float:
        # isotropic stress Pi*delta_ij
        return 3.0 * self.Pi * self.Pi

    def as_vector(self) -> np.ndarray:
        return np.array([self.rho, *self.v, self.Pi], dtype=float)


@dataclass(frozen=True)
class ShearState:
    rho: float
    v: Vec3 = (0.0, 0.0, 0.0)
    pi: Tuple[float, ...] = field(default=(0.0,) * 6)

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(float(c) for c in self.v))
        object.__setattr__(self, "pi", tuple(float(c) for c in self.pi))
        if len(self.v) != 3 or len(self.pi) != 6:
            raise DomainError("shear state needs 3 velocity and 6 stress components")
        check_density(self.rho)
        _check_finite("state", self.v, self.pi)

    @classmethod
    def from_tensor(cls, rho: float, v: Vec3, tensor) -> "ShearState":
        t = np.asarray(tensor, dtype=float)
        if t.shape != (3, 3) or not np.allclose(t, t.T, rtol=0.0, atol=1e-14 * max(1.0, np.abs(t).max())):
            raise DomainError("viscous stress tensor must be a symmetric 3x3 matrix")
        return cls(rho, v, tuple(t[i, j] for i, j in PI_COMPONENTS))

    def component(self, i: int, j: int) -> float:
        return self.pi[PI_INDEX[(i, j)]]

    def with_component(self, i: int, j: int, value: float) -> "ShearState":
        comps = list(self.pi)
        comps[PI_INDEX[(i, j)]] = float(value)
        return replace(self, pi=tuple(comps))

    def tensor(self) -> np.ndarray:
        t = np.empty((3, 3))
        for (i, j), k in PI_INDEX.items():
            t[i, j] = self.pi[k]
        return t

    @property
    def trace(self) -> float:
        return sum(self.pi[k] for k in DIAGONAL_SLOTS)

    @property
    def bulk_scalar(self) -> float:
        return self.trace / 3.0

    @property
    def stress_invariant(self) -> float:
        t = self.tensor()
        return float(np.sum(t * t))

    def to_bulk(self) -> BulkState:
        return BulkState(self.rho, self.v, self.bulk_scalar)

    def as_vector(self) -> np.ndarray:
        return np.array([self.rho, *self.v, *self.pi], dtype=float)


@dataclass(frozen=True)
class ReferenceState:
    rho_bar: float
    R: float
    Pi_bar: float = 0.0
    v_bar: Vec3 = (0.0, 0.0, 0.0)

    def __post_init__(self):
        check_density(self.rho_bar)
        if not self.R > 0:
            raise DomainError(f"support radius R must be positive, got {self.R!r}")


# ---------------------------------------------------------------------------
# transport-coefficient laws


class ConstantLaw(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["constant"] = "constant"
    value: float

    @property
    def is_constant(self) -> bool:
        return True

    def __call__(self, rho: ArrayLike, Pi: ArrayLike, PiPi: ArrayLike) -> ArrayLike:
        shape = np.broadcast(np.asarray(rho), np.asarray(Pi), np.asarray(PiPi)).shape
        if shape == ():
            return self.value
        return np.full(shape, self.value)

    def describe(self) -> str:
        return repr(self.value)


class FunctionLaw(BaseModel):
    """Coefficient as a function of the rotational invariants (rho, Pi, Pi_ij Pi^ij)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: Literal["function"] = "function"
    fn: Callable[..., ArrayLike]
    name: str = "custom"
    params: Tuple[float, ...] = ()

    @property
    def is_constant(self) -> bool:
        return False

    def __call__(self, rho: ArrayLike, Pi: ArrayLike, PiPi: ArrayLike) -> ArrayLike:
        return self.fn(rho, Pi, PiPi)

    def describe(self) -> str:
        args = ", ".join(repr(p) for p in self.params)
        return f"{self.name}({args})"


TransportLaw = Union[ConstantLaw, FunctionLaw]


def _power(coef: float, exponent: float):
    return lambda rho, Pi, PiPi: coef * np.power(rho, exponent)


def _stress_softening(coef: float, scale: float):
    return lambda rho, Pi, PiPi: coef / (1.0 + (np.asarray(Pi) / scale) ** 2)


def _invariant_softening(coef: float, scale: float):
    return lambda rho, Pi, PiPi: coef / (1.0 + np.asarray(PiPi) / scale**2)


NAMED_LAWS: Dict[str, Callable[..., Callable]] = {
    "power": _power,
    "stress_softening": _stress_softening,
    "invariant_softening": _invariant_softening,
}


def named_law(name: str, *params: float) -> FunctionLaw:
    if name not in NAMED_LAWS:
        raise KeyError(f"unknown transport law {name!r}; known: {', '.join(sorted(NAMED_LAWS))}")
    params = tuple(float(p) for p in params)
    return FunctionLaw(fn=NAMED_LAWS[name](*params), name=name, params=params)


def as_law(value) -> TransportLaw:
    if isinstance(value, (ConstantLaw, FunctionLaw)):
        return value
    if callable(value):
        return FunctionLaw(fn=value)
    return ConstantLaw(value=float(value))


class MaterialLaw(BaseModel):
    """P = A rho^gamma plus bulk viscosity, shear viscosity and relaxation time laws."""

    model_config = ConfigDict(frozen=True)

    A: float
    gamma: float
    zeta: TransportLaw
    eta: TransportLaw
    tau: TransportLaw

    @field_validator("A")
    @classmethod
    def _amplitude_positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("A must be positive")
        return v

    @field_validator("gamma")
    @classmethod
    def _gamma_exceeds_one(cls, v: float) -> float:
        if not v > 1:
            raise ValueError("gamma must exceed 1")
        return v

    @field_validator("zeta", "eta", "tau", mode="before")
    @classmethod
    def _coerce_law(cls, v):
        law = as_law(v)
        if isinstance(law, ConstantLaw) and not law.value > 0:
            raise ValueError("constant transport coefficients must be positive")
        return law

    @classmethod
    def constant(cls, A: float = 1.0, gamma: float = 2.0, zeta: float = 1.0,
                 eta: float = 1.0, tau: float = 1.0) -> "MaterialLaw":
        return cls(A=A, gamma=gamma, zeta=zeta, eta=eta, tau=tau)

    @property
    def is_constant(self) -> bool:
        return self.zeta.is_constant and self.eta.is_constant and self.tau.is_constant


def pressure(law: MaterialLaw, rho: ArrayLike) -> ArrayLike:
    check_density(rho)
    return law.A * np.power(rho, law.gamma) if isinstance(rho, np.ndarray) else law.A * rho**law.gamma


def sound_speed(law: MaterialLaw, rho: ArrayLike) -> ArrayLike:
    check_density(rho)
    if isinstance(rho, np.ndarray):
        return np.sqrt(law.A * law.gamma * np.power(rho, law.gamma - 1.0))
    return math.sqrt(law.A * law.gamma * rho ** (law.gamma - 1.0))


def enthalpy(law: MaterialLaw, rho: ArrayLike) -> ArrayLike:
    """Specific enthalpy h with dh/drho = c_s^2/rho."""
    check_density(rho)
    return law.A * law.gamma / (law.gamma - 1.0) * np.power(rho, law.gamma - 1.0)


class Transport(NamedTuple):
    zeta: ArrayLike
    eta: ArrayLike
    tau: ArrayLike


def eval_transport(law: MaterialLaw, rho: ArrayLike, Pi: ArrayLike = 0.0,
                   PiPi: ArrayLike = None) -> Transport:
    """Evaluate (zeta, eta, tau); Pi is trace/3 and PiPi the full contraction Pi_ij Pi^ij.

    PiPi defaults to the isotropic value 3*Pi^2.
    """
    if PiPi is None:
        PiPi = 3.0 * np.square(Pi)
    values = {}
    for name in ("zeta", "eta", "tau"):
        value = getattr(law, name)(rho, Pi, PiPi)
        arr = np.asarray(value, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise MaterialLawError(name, float(arr.flat[np.argmax(~np.isfinite(arr))]),
                                   f"transport coefficient {name} is not finite")
        if np.any(arr <= 0):
            raise MaterialLawError(name, float(arr.min()),
                                   f"transport coefficient {name} must be positive, got {float(arr.min())!r}")
        values[name] = value
    return Transport(**values)


def transport_at(law: MaterialLaw, state: Union[BulkState, ShearState]) -> Transport:
    if isinstance(state, ShearState):
        return eval_transport(law, state.rho, state.bulk_scalar, state.stress_invariant)
    return eval_transport(law, state.rho, state.Pi, state.stress_invariant)


def bulk_front_speed(law: MaterialLaw, rho: float, Pi: float = 0.0) -> float:
    """c_v = sqrt(c_s^2 + zeta_eff/(rho tau)) with zeta_eff = zeta + tau*Pi."""
    c_s = sound_speed(law, rho)
    tr = eval_transport(law, rho, Pi)
    return math.sqrt(c_s**2 + (tr.zeta + tr.tau * Pi) / (rho * tr.tau))
