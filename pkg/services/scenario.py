"""Scenario runner - line-oriented config parsing and printing, and the
subcommand pipelines behind the CLI"""

from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple
import logging
import math
import sys
import time

import numpy as np
from pydantic import ValidationError

from schemas import SECTIONS, TOP_LEVEL_KEYS, LawSpec, RunRecord, ScenarioConfig, parse_sweep
from src.viscoflow import __version__
from src.viscoflow.exceptions import (
    AssemblyError,
    CertificateRefused,
    ConfigError,
    ConfigIssue,
    DomainError,
    FitError,
    MaterialLawError,
    NumericalFailure,
)
from .breakdown import (
    build_report,
    certificate,
    navier_stokes_residual,
    richardson_estimate,
)
from .fluid_model import BulkState, ShearState
from .linear_stability import (
    Background,
    bulk_dispersion,
    dispersion_sweep,
    routh_hurwitz,
    shear_dispersion,
    shear_verdict,
    verify_against_simulation,
)
from .quasilinear import (
    assemble_bulk,
    assemble_shear,
    characteristic_speeds_bulk_closed,
    characteristic_speeds_numeric,
    characteristic_speeds_shear_closed,
    hyperbolicity_scan,
)
from .report_formatter import ReportFormatter, fmt
from .solver import SolverOptions, front_speed, init_scenario, run

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BREAKDOWN = 3
EXIT_NUMERICAL = 4

SUBCOMMANDS = ("speeds", "stability", "dispersion", "simulate", "blowup-cert")

Emit = Callable[..., None]


def _echo(text: str, err: bool = False) -> None:
    print(text, file=sys.stderr if err else sys.stdout)


# ---------------------------------------------------------------------------
# parsing


class _Collected:
    def __init__(self):
        self.data: Dict[str, Any] = {}
        self.where: Dict[Tuple[str, ...], Optional[int]] = {}
        self.issues: List[ConfigIssue] = []

    def store(self, section: Optional[str], key: str, value: str, line: Optional[int]) -> None:
        if not key:
            self.issues.append(ConfigIssue(line, "(empty)", "missing key before '='"))
        elif section is None:
            if key not in TOP_LEVEL_KEYS:
                self.issues.append(ConfigIssue(line, key, f"unknown top-level key; expected one of "
                                                          f"{', '.join(TOP_LEVEL_KEYS)} or a [section]"))
                return
            self.data[key] = value
            self.where[(key,)] = line
        else:
            self.data.setdefault(section, {})[key] = value
            self.where[(section, key)] = line


def _collect(text: str, overrides: Sequence[str]) -> _Collected:
    out = _Collected()
    section: Optional[str] = None
    skip = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            name = line[1:-1].strip() if line.endswith("]") else ""
            skip = name not in SECTIONS
            if skip:
                out.issues.append(ConfigIssue(lineno, line, f"unknown section; expected one of {', '.join(SECTIONS)}"))
            else:
                section = name
                out.data.setdefault(name, {})
            continue
        if "=" not in line:
            out.issues.append(ConfigIssue(lineno, line, "expected 'key = value'"))
            continue
        if skip:
            continue
        key, value = (p.strip() for p in line.split("=", 1))
        out.store(section, key, value, lineno)

    for item in overrides:
        if "=" not in item:
            out.issues.append(ConfigIssue(None, item, "override must be section.key=value"))
            continue
        dotted, value = (p.strip() for p in item.split("=", 1))
        sec, _, key = dotted.rpartition(".")
        if sec and sec not in SECTIONS:
            out.issues.append(ConfigIssue(None, dotted, "override names an unknown section"))
            continue
        out.store(sec or None, key, value, None)
    return out


def _semantic_issues(config: ScenarioConfig, where: Dict[Tuple[str, ...], Optional[int]]) -> List[ConfigIssue]:
    """Transport laws admissible at the reference density and front contained up to t_end."""
    try:
        c_v = front_speed(config.law(), config.reference.rho_bar, config.system)
    except MaterialLawError as e:
        key = ("material", e.coefficient)
        return [ConfigIssue(where.get(key), ".".join(key), str(e))]
    if config.grid.boundary == "periodic":
        return []
    reach = config.reference.R + c_v * config.run.t_end
    inside = reach < config.grid.x_max and (config.geometry == "spherical" or -reach > config.x_min)
    if inside:
        return []
    return [ConfigIssue(where.get(("grid", "x_max")), "grid.x_max",
                        f"front R + c_v t_end = {reach:.6g} is not contained in "
                        f"[{config.x_min:g}, {config.grid.x_max:g}]; enlarge the domain or shorten the run")]


def parse_config(text: str, overrides: Sequence[str] = ()) -> ScenarioConfig:
    """Validate config text (overrides applied after the file); all problems are reported together."""
    collected = _collect(text, overrides)
    issues = list(collected.issues)
    config = None
    try:
        config = ScenarioConfig.model_validate(collected.data)
    except ValidationError as e:
        for err in e.errors():
            loc = tuple(str(p) for p in err["loc"][:2])
            line = collected.where.get(loc) if loc else collected.where.get(("geometry",))
            message = err["msg"].removeprefix("Value error, ")
            issues.append(ConfigIssue(line, ".".join(loc) or "scenario", message))
    if config is not None and not issues:
        issues.extend(_semantic_issues(config, collected.where))
    if issues:
        raise ConfigError(issues)
    return config


def load_config(path: str, overrides: Sequence[str] = ()) -> ScenarioConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), overrides)


def _value_text(value: Any) -> str:
    if isinstance(value, LawSpec):
        return str(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return fmt(value)


def print_config(config: ScenarioConfig) -> str:
    """Fully resolved config text; parse_config(print_config(c)) == c."""
    lines = [f"system = {config.system}", f"geometry = {config.geometry}"]
    for name in SECTIONS:
        section = getattr(config, name)
        lines.extend(["", f"[{name}]"])
        for key in type(section).model_fields:
            value = getattr(section, key)
            if value is not None:
                lines.append(f"{key} = {_value_text(value)}".rstrip())
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# pipelines


class ScenarioRunner:
    def __init__(self, config: ScenarioConfig, out_dir: Optional[str] = None, emit: Emit = _echo):
        self.config = config
        self.formatter = ReportFormatter(out_dir)
        self.emit = emit
        # extra fields for run_record.json
        self.details: Dict[str, Any] = {}

    def _analysis_state(self):
        cfg, a = self.config, self.config.analysis
        rho = a.rho if a.rho is not None else cfg.reference.rho_bar
        if cfg.system == "bulk":
            return BulkState(rho, a.v, a.Pi)
        pi = a.pi_tensor if a.pi_tensor is not None else (a.Pi, 0.0, 0.0, a.Pi, 0.0, a.Pi)
        return ShearState(rho, a.v, pi)

    def speeds(self, **_) -> Tuple[str, int]:
        cfg, a, tol = self.config, self.config.analysis, self.config.tolerances
        law = cfg.law()
        state = self._analysis_state()
        if cfg.system == "bulk":
            system = assemble_bulk(state, law)
            closed = characteristic_speeds_bulk_closed(state, law, a.direction)
        else:
            system = assemble_shear(state, law)
            closed = characteristic_speeds_shear_closed(state, law, a.direction)
        report = characteristic_speeds_numeric(system, a.direction, cond_cap=tol.eigvec_cond_cap)
        scan = hyperbolicity_scan(system, cond_cap=tol.eigvec_cond_cap)

        if cfg.system == "bulk":
            numeric_cmp = np.array(report.speeds)
        else:
            numeric_cmp = np.array([s for s, _ in report.multiplicities])
        scale = max(1.0, float(np.max(np.abs(closed))))
        agreement = (float(np.max(np.abs(numeric_cmp - np.array(closed)))) / scale
                     if numeric_cmp.size == len(closed) else math.inf)

        self.emit(self.formatter.key_values([
            ("system", cfg.system),
            ("direction", ", ".join(fmt(c) for c in report.direction)),
            ("verdict", report.hyperbolic_verdict),
            ("symmetric", report.symmetric),
            ("a0 positive definite", report.a0_posdef),
            ("eigenvector condition", report.eigenvector_condition),
            ("closed vs numeric (rel)", agreement),
            ("closed form agrees", agreement <= tol.closed_form_rtol),
            ("directions scanned", len(scan)),
            ("strongly hyperbolic in all", all(r.hyperbolic_verdict != "degenerate" for r in scan)),
        ]))
        if not agreement <= tol.closed_form_rtol:
            logger.warning("closed-form speeds differ from the numeric ones by %.3g (tolerance %.3g)",
                           agreement, tol.closed_form_rtol)
        self.details.update(closed_vs_numeric=agreement, closed_form_agrees=agreement <= tol.closed_form_rtol)
        rows = [("closed", s, 1) for s in closed] + [("numeric", s, m) for s, m in report.multiplicities]
        self.emit(self.formatter.table(("source", "speed", "multiplicity"), rows))
        self.formatter.write_csv("speeds.csv", ("source", "speed", "multiplicity"), rows)
        return report.hyperbolic_verdict, EXIT_OK

    def stability(self, **_) -> Tuple[str, int]:
        cfg, a, tol = self.config, self.config.analysis, self.config.tolerances
        rho = a.rho if a.rho is not None else cfg.reference.rho_bar
        bg = Background.from_law(cfg.law(), rho, a.v0)
        kvec = a.k * np.asarray(a.direction)
        rows = []
        if cfg.system == "bulk":
            problem = bulk_dispersion(bg, kvec)
            verdict = routh_hurwitz(problem, tol.marginal_band, tol.root_residual)
            self.emit(self.formatter.key_values([
                ("polynomial", ", ".join(fmt(c) for c in problem.poly)),
                ("Delta1", verdict.deltas[0]),
                ("Delta2", verdict.deltas[1]),
                ("Delta3", verdict.deltas[2]),
                ("routh-hurwitz stable", verdict.stable),
                ("max real part", verdict.max_real_part),
                ("classification", verdict.classification),
                ("neutral transverse modes", problem.neutral_modes),
            ]))
            rows = [("cubic", 1, x.real, x.imag, (1j * x + problem.shift).real, (1j * x + problem.shift).imag)
                    for x in verdict.roots]
            classification = verdict.classification
        else:
            sd = shear_dispersion(bg, kvec)
            sv = shear_verdict(sd, tol.marginal_band, tol.root_residual)
            pairs = [("classification", sv.classification), ("max real part", sv.max_real_part),
                     ("hurwitz stable", sv.stable)]
            for factor, fv in zip(sd.factors, sv.factors):
                pairs.append((f"{fv.name} poly (x{factor.multiplicity})", ", ".join(fmt(c) for c in factor.poly)))
                pairs.append((f"{fv.name} minors", ", ".join(fmt(m) for m in fv.minors)))
                for x in fv.roots:
                    w = 1j * x + sd.shift
                    rows.append((fv.name, factor.multiplicity, x.real, x.imag, w.real, w.imag))
            self.emit(self.formatter.key_values(pairs))
            classification = sv.classification
        headers = ("factor", "multiplicity", "x_re", "x_im", "omega_re", "omega_im")
        self.emit(self.formatter.table(headers, rows))
        self.formatter.write_csv("stability.csv", headers, rows)
        if a.verify:
            self._verify(rho)
        return classification, EXIT_OK

    def _verify(self, rho: float) -> None:
        cfg, a, tol = self.config, self.config.analysis, self.config.tolerances
        cmp = verify_against_simulation(cfg.law(), rho, a.k, cfg.system, a.verify_branch,
                                        n_cells=cfg.grid.n_cells, fit_tol=tol.fit_tol,
                                        min_cells_per_wavelength=tol.min_cells_per_wavelength,
                                        options=SolverOptions.from_config(cfg))
        pairs = [
            ("verified branch", cmp.branch),
            ("predicted x", cmp.predicted),
            ("fitted decay", cmp.fitted_decay),
            ("fitted frequency", cmp.fitted_frequency),
            ("decay error", cmp.decay_error),
            ("frequency error", cmp.frequency_error),
            ("fit tolerance", tol.fit_tol),
            ("ring-down matches", cmp.passed),
        ]
        self.emit(self.formatter.key_values(pairs))
        self.details.update(decay_error=cmp.decay_error, frequency_error=cmp.frequency_error,
                            fit_tol=tol.fit_tol, ring_down_matches=cmp.passed)

    def dispersion(self, sweep: Optional[str] = None, **_) -> Tuple[str, int]:
        cfg, a = self.config, self.config.analysis
        try:
            kmin, kmax, n = parse_sweep(sweep or a.sweep)
        except ValueError as e:
            raise ConfigError([ConfigIssue(None, "--sweep", str(e))]) from e
        rho = a.rho if a.rho is not None else cfg.reference.rho_bar
        bg = Background.from_law(cfg.law(), rho, a.v0)
        workers = 1 if cfg.run.deterministic else None
        sweep_rows = dispersion_sweep(bg, kmin, kmax, n, cfg.system, a.direction, workers=workers,
                                      residual_tol=cfg.tolerances.root_residual)
        branches = len(sweep_rows[0].omegas) if sweep_rows else 0
        headers = ["k"]
        for i in range(1, branches + 1):
            headers += [f"re_omega_{i}", f"im_omega_{i}"]
        rows = []
        for r in sweep_rows:
            row: List[float] = [r.k]
            for w in r.omegas:
                row += [w.real, w.imag]
            rows.append(row)
        self.emit(self.formatter.csv_text(headers, rows).rstrip("\n"))
        self.formatter.write_csv("dispersion.csv", headers, rows)
        return "ok", EXIT_OK

    def simulate(self, diagnostics: bool = False, **_) -> Tuple[str, int]:
        cfg, tol = self.config, self.config.tolerances
        sim = init_scenario(cfg)
        cert = None
        if cfg.geometry == "spherical" and sim.law.is_constant:
            try:
                cert = certificate(sim, tol.containment_tol)
            except CertificateRefused as e:
                logger.info("no certificate for this run: %s", e)

        def progress(s, outcome):
            self.emit(f"t={fmt(s.t)} step={s.step_count} dt={fmt(outcome.dt_used)} "
                      f"max_grad={fmt(outcome.max_gradient)}", err=True)

        result = run(sim, cfg.run.t_end, observer=progress if diagnostics else None,
                     cadence=cfg.run.observer_cadence, series_cadence=cfg.run.series_cadence,
                     snapshot_times=cfg.run.snapshot_times)
        report = build_report(result, cert, tol.growth_tol, tol.min_growth_samples, tol.grad_factor)

        series_headers = ("t", "dt", "F", "dM", "G", "max_grad_u", "max_grad_rho", "containment")
        self.formatter.write_csv("series.csv", series_headers, result.series)
        if result.snapshots:
            headers = ("t", "cell_center", *sim.rows)
            snap_rows = [(s.t, x, *s.q[:, i]) for s in result.snapshots for i, x in enumerate(sim.grid.centers)]
            self.formatter.write_csv("snapshots.csv", headers, snap_rows)
        if report.margins is not None:
            g = report.margins
            self.formatter.write_csv("growth.csv", ("t", "margin", "tolerance"),
                                     zip(g.times, g.margins, g.tolerances))

        first, last = result.series[0], result.series[-1]
        total_mass = cfg.reference.rho_bar * float(sim.grid.volumes.sum()) + first.dM
        mass_drift = abs(last.dM - first.dM) / total_mass
        ns = navier_stokes_residual(sim)
        contained = result.max_containment <= tol.containment_tol
        self.details.update(max_containment=result.max_containment, front_contained=contained,
                            grad_factor=tol.grad_factor, mass_drift=mass_drift)
        pairs = [
            ("status", result.outcome.status),
            ("t", sim.t),
            ("steps", sim.step_count),
            ("verdict", report.verdict),
            ("relative mass drift", mass_drift),
            ("mass conserved", mass_drift <= tol.mass_drift_tol),
            ("G(t)", last.G),
            ("G(0) exp(-t/tau)", first.G * math.exp(-sim.t / float(sim.law.tau(1.0, 0.0, 0.0)))
             if sim.law.tau.is_constant else math.nan),
            ("max containment deviation", result.max_containment),
            ("front contained", contained),
            ("grad_factor", tol.grad_factor),
            ("navier-stokes residual ratio", ns.ratio),
        ]
        if cert is not None:
            pairs += [("certificate satisfied", cert.satisfied), ("lifespan bound", cert.T_max)]
        if report.margins is not None:
            pairs += [("growth margin ok fraction", report.margins.fraction_ok),
                      ("F monotone", report.margins.monotone)]
        self.emit(self.formatter.key_values(pairs))
        if diagnostics:
            self.emit(self.formatter.csv_text(series_headers, result.series).rstrip("\n"))

        code = EXIT_OK if result.outcome.status == "ok" else EXIT_BREAKDOWN
        return result.outcome.status, code

    def blowup_cert(self, **_) -> Tuple[str, int]:
        cfg, tol = self.config, self.config.tolerances
        sim = init_scenario(cfg)
        cert = certificate(sim, tol.containment_tol)
        rich = richardson_estimate(cfg, "F")
        pairs = [
            ("R", cert.R),
            ("c_bar_v", cert.c_bar_v),
            ("max_rho0", cert.max_rho0),
            ("threshold", cert.threshold),
            ("F0", cert.F0),
            ("F0 quadrature error", rich.error),
            ("dM0", cert.dM0),
            ("G0", cert.G0),
            ("satisfied", cert.satisfied),
            ("lifespan bound", cert.T_max),
        ]
        self.emit(self.formatter.key_values(pairs))
        self.formatter.write_csv("certificate.csv", ("quantity", "value"), pairs)
        return ("satisfied" if cert.satisfied else "not_satisfied"), EXIT_OK


def dispatch(subcommand: str, config: ScenarioConfig, out_dir: Optional[str] = None,
             sweep: Optional[str] = None, diagnostics: bool = False, emit: Emit = _echo) -> RunRecord:
    """Run one subcommand; errors are mapped to exit codes, never raised."""
    if subcommand not in SUBCOMMANDS:
        raise ValueError(f"unknown subcommand {subcommand!r}; expected one of {', '.join(SUBCOMMANDS)}")
    start = time.perf_counter()
    runner = ScenarioRunner(config, out_dir, emit)
    handler = getattr(runner, subcommand.replace("-", "_"))
    try:
        status, code = handler(sweep=sweep, diagnostics=diagnostics)
    except ConfigError as e:
        for issue in e.issues:
            emit(f"config error: {issue}", err=True)
        status, code = "config_error", EXIT_CONFIG
    except (AssemblyError, CertificateRefused, DomainError, MaterialLawError) as e:
        emit(f"rejected: {e}", err=True)
        status, code = "rejected", EXIT_CONFIG
    except (NumericalFailure, FitError, FloatingPointError, np.linalg.LinAlgError) as e:
        logger.exception("numerical failure in %s", subcommand)
        emit(f"numerical failure: {e}", err=True)
        status, code = "numerical_failure", EXIT_NUMERICAL

    record = RunRecord(subcommand=subcommand, config_echo=print_config(config),
                       outputs=list(runner.formatter.written), status=status, exit_code=code,
                       wall_time=time.perf_counter() - start, version=__version__,
                       details=runner.details)
    runner.formatter.write_record("run_record.json", record)
    return record
