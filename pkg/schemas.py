"""Pydantic schemas for scenario configuration and run records"""

import math
import re
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from services.fluid_model import NAMED_LAWS, MaterialLaw, TransportLaw, as_law, named_law

Vec3 = Tuple[float, float, float]

_LAW_CALL = re.compile(r"^\s*([A-Za-z_]\w*)\s*\((.*)\)\s*$")


def _split_floats(text: str) -> Tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(p) for p in text.split(","))


class LawSpec(BaseModel):
    """A transport law as written in config: a number or ``name(p1, p2)``."""

    model_config = ConfigDict(frozen=True)

    name: str = "constant"
    params: Tuple[float, ...] = (1.0,)

    @model_validator(mode="before")
    @classmethod
    def _parse(cls, data):
        if isinstance(data, (int, float)) and not isinstance(data, bool):
            return {"name": "constant", "params": (float(data),)}
        if isinstance(data, str):
            m = _LAW_CALL.match(data)
            if m:
                return {"name": m.group(1), "params": _split_floats(m.group(2))}
            return {"name": "constant", "params": (float(data),)}
        return data

    @model_validator(mode="after")
    def _check(self):
        if self.name == "constant":
            if len(self.params) != 1 or not self.params[0] > 0:
                raise ValueError("constant transport coefficient must be a single positive number")
        elif self.name not in NAMED_LAWS:
            raise ValueError(f"unknown law {self.name!r}; known: constant, {', '.join(sorted(NAMED_LAWS))}")
        elif len(self.params) != 2:
            raise ValueError(f"law {self.name} takes two parameters")
        return self

    def to_law(self) -> TransportLaw:
        if self.name == "constant":
            return as_law(self.params[0])
        return named_law(self.name, *self.params)

    def __str__(self) -> str:
        if self.name == "constant":
            return repr(self.params[0])
        return f"{self.name}({', '.join(repr(p) for p in self.params)})"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _vec3(value) -> Vec3:
    if isinstance(value, str):
        value = _split_floats(value)
    value = tuple(float(v) for v in value)
    if len(value) != 3:
        raise ValueError("expected three comma-separated numbers")
    return value


class MaterialConfig(_Section):
    A: float = 1.0
    gamma: float = 2.0
    zeta: LawSpec = LawSpec()
    eta: LawSpec = LawSpec()
    tau: LawSpec = LawSpec()

    @field_validator("A")
    @classmethod
    def _a(cls, v):
        if not v > 0:
            raise ValueError("A must be positive")
        return v

    @field_validator("gamma")
    @classmethod
    def _gamma(cls, v):
        if not v > 1:
            raise ValueError("gamma must exceed 1")
        return v

    def to_law(self) -> MaterialLaw:
        return MaterialLaw(A=self.A, gamma=self.gamma, zeta=self.zeta.to_law(),
                           eta=self.eta.to_law(), tau=self.tau.to_law())


class ReferenceConfig(_Section):
    rho_bar: float = Field(default=1.0, gt=0)
    R: float = Field(default=1.0, gt=0)


class ProfileConfig(_Section):
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    c_shear: float = 0.0
    shape: Literal["bump", "cosine"] = "bump"
    # when set, b is solved so that F(0) = target_F_ratio * threshold
    target_F_ratio: Optional[float] = Field(default=None, gt=0)


class GridConfig(_Section):
    n_cells: int = Field(default=512, ge=8)
    x_max: float = Field(default=4.0, gt=0)
    x_min: Optional[float] = None
    cfl: float = Field(default=0.4, gt=0, le=1)
    boundary: Literal["fixed", "periodic"] = "fixed"
    limiter: Literal["minmod", "mc", "superbee"] = "minmod"
    integrator: Literal["ssp2", "ssp3"] = "ssp2"


class RunConfig(_Section):
    t_end: float = Field(default=1.0, gt=0)
    snapshot_times: Tuple[float, ...] = ()
    series_cadence: int = Field(default=1, ge=1)
    observer_cadence: int = Field(default=100, ge=1)
    deterministic: bool = True

    @field_validator("snapshot_times", mode="before")
    @classmethod
    def _times(cls, v):
        return _split_floats(v) if isinstance(v, str) else v


class AnalysisConfig(_Section):
    rho: Optional[float] = Field(default=None, gt=0)
    v: Vec3 = (0.0, 0.0, 0.0)
    Pi: float = 0.0
    pi_tensor: Optional[Tuple[float, float, float, float, float, float]] = None
    direction: Vec3 = (1.0, 0.0, 0.0)
    k: float = 1.0
    v0: Vec3 = (0.0, 0.0, 0.0)
    sweep: str = "0.1:10:50"
    # stability: also seed the least-damped mode in the solver and fit its ring-down
    verify: bool = False
    verify_branch: Literal["acoustic", "shear"] = "acoustic"

    @field_validator("v", "direction", "v0", mode="before")
    @classmethod
    def _vectors(cls, v):
        return _vec3(v)

    @field_validator("pi_tensor", mode="before")
    @classmethod
    def _tensor(cls, v):
        if isinstance(v, str):
            v = _split_floats(v)
        if v is not None and len(v) != 6:
            raise ValueError("pi_tensor needs six comma-separated components (11,12,13,22,23,33)")
        return v

    @field_validator("direction")
    @classmethod
    def _unit(cls, v):
        norm = math.sqrt(sum(c * c for c in v))
        if abs(norm - 1.0) > 1e-8:
            raise ValueError("direction must be a unit vector")
        return v

    @field_validator("sweep")
    @classmethod
    def _sweep(cls, v):
        parse_sweep(v)
        return v


def parse_sweep(text: str) -> Tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError("sweep must be kmin:kmax:n")
    kmin, kmax, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1 or kmax < kmin:
        raise ValueError("sweep needs n >= 1 and kmax >= kmin")
    return kmin, kmax, n


class Tolerances(_Section):
    density_floor_rel: float = 1e-12
    eigvec_cond_cap: float = 1e8
    closed_form_rtol: float = 1e-10
    root_residual: float = 1e-9
    marginal_band: float = 1e-9
    fit_tol: float = 0.02
    min_cells_per_wavelength: int = 256
    grad_factor: float = 10.0
    dt_floor: float = 1e-12
    containment_tol: float = 1e-8
    containment_slack_cells: int = 2
    # numerical-diffusion widths sqrt(c_v dx t) added to the containment radius
    containment_widths: float = Field(default=6.0, ge=0)
    growth_tol: float = 1e-3
    min_growth_samples: int = 10
    mass_drift_tol: float = 1e-8


SECTIONS = ("material", "reference", "profile", "grid", "run", "analysis", "tolerances")
TOP_LEVEL_KEYS = ("system", "geometry")


class ScenarioConfig(_Section):
    system: Literal["bulk", "shear"] = "bulk"
    geometry: Literal["planar", "spherical"] = "spherical"
    material: MaterialConfig = MaterialConfig()
    reference: ReferenceConfig = ReferenceConfig()
    profile: ProfileConfig = ProfileConfig()
    grid: GridConfig = GridConfig()
    run: RunConfig = RunConfig()
    analysis: AnalysisConfig = AnalysisConfig()
    tolerances: Tolerances = Tolerances()

    @model_validator(mode="after")
    def _combination(self):
        if self.system == "shear" and self.geometry == "spherical":
            raise ValueError("unsupported combination: shear runs are planar only (system=shear geometry=spherical)")
        if self.geometry == "spherical":
            if self.grid.x_min not in (None, 0.0):
                raise ValueError("spherical geometry requires x_min = 0")
            if self.grid.boundary == "periodic":
                raise ValueError("spherical geometry has a reflective centre; periodic boundary not allowed")
        elif self.x_min >= self.grid.x_max:
            raise ValueError("x_min must be below x_max")
        return self

    @property
    def x_min(self) -> float:
        if self.geometry == "spherical":
            return 0.0
        return -self.grid.x_max if self.grid.x_min is None else self.grid.x_min

    def law(self) -> MaterialLaw:
        return self.material.to_law()


class RunRecord(BaseModel):
    subcommand: str
    config_echo: str
    outputs: List[str] = []
    status: str
    exit_code: int
    wall_time: float
    version: str
    details: Dict[str, Any] = {}
