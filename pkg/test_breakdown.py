import math

import numpy as np
import pytest
from scipy.integrate import quad

from services.breakdown import (
    SiderisCertificate,
    build_report,
    bulk_G,
    certificate,
    check_growth,
    containment_deviation,
    growth_rhs,
    lifespan_bound,
    monitor_c1,
    pressure_excess_lower_bound,
    relative_mass,
    richardson_estimate,
    sideris_dFdt,
    sideris_F,
    sideris_threshold,
)
from services.fluid_model import ReferenceState
from services.profiles import smooth_bump
from services.solver import Grid1D, SeriesRow, Simulation, init_scenario, run
from src.viscoflow.exceptions import CertificateRefused, InsufficientData

MILD = """\
    system = bulk
    geometry = spherical

    [material]
    A = 0.5
    gamma = 2.0

    [profile]
    a = 0.2
    b = 0.1
    c = 0.05

    [grid]
    n_cells = 256
    x_max = 4.0

    [run]
    t_end = 0.5
"""


def _spherical(law, rho, u=None, reference=None, n_cells=128, x_max=4.0):
    grid = Grid1D("spherical", n_cells, 0.0, x_max)
    q = np.zeros((3, n_cells))
    q[0] = rho(grid.centers)
    if u is not None:
        q[1] = u(grid.centers)
    return Simulation(grid, law, reference or ReferenceState(1.0, 1.0), "bulk", q)


def test_threshold():
    assert sideris_threshold(math.sqrt(2.0), 1.0, 2.0) == pytest.approx(47.39, abs=5e-3)
    assert sideris_threshold(1.0, 2.0, 1.0) == pytest.approx(16.0 * 16.0 * math.pi / 3.0)


def test_functionals_at_rest_velocity(unit_law):
    sim = _spherical(unit_law, lambda r: 1.0 + smooth_bump(r, 1.0))
    assert sideris_F(sim) == 0.0
    expected, _ = quad(lambda r: 4.0 * math.pi * r * r * math.exp(1.0 - 1.0 / (1.0 - r * r)), 0.0, 1.0)
    assert relative_mass(sim) == pytest.approx(expected, rel=1e-3)
    assert relative_mass(sim) > 0


def test_bulk_stress_integral(unit_law):
    sim = _spherical(unit_law, lambda r: np.ones_like(r), n_cells=64, x_max=2.0)
    assert bulk_G(sim) == 0.0
    sim.q[2] = 0.25
    assert bulk_G(sim) == pytest.approx(0.25 * 4.0 * math.pi * 8.0 / 3.0, rel=1e-13)


def test_certificate_targets_ratio(make_config, blowup_text):
    sim = init_scenario(make_config(blowup_text))
    cert = certificate(sim)
    assert cert.satisfied
    assert cert.c_bar_v == pytest.approx(math.sqrt(2.0))
    assert cert.max_rho0 == pytest.approx(2.0, rel=1e-3)
    assert cert.threshold == pytest.approx(47.39, rel=1e-3)
    assert cert.F0 == pytest.approx(1.1 * cert.threshold, rel=1e-12)
    assert cert.dM0 > 0 and cert.G0 == 0.0
    assert 0.0 < cert.T_max < math.inf
    assert cert.T_max == pytest.approx(lifespan_bound(cert.F0, cert.c_bar_v, cert.R, cert.max_rho0))


def test_certificate_below_threshold(make_config, blowup_text):
    sim = init_scenario(make_config(blowup_text, "profile.target_F_ratio=0.9"))
    cert = certificate(sim)
    assert not cert.satisfied
    assert cert.F0 == pytest.approx(0.9 * cert.threshold, rel=1e-12)
    assert cert.T_max == math.inf


def test_certificate_monotone_in_velocity_amplitude(make_config, blowup_text):
    verdicts = []
    for ratio in ("0.5", "0.99", "1.01", "2.0"):
        sim = init_scenario(make_config(blowup_text, f"profile.target_F_ratio={ratio}"))
        verdicts.append(certificate(sim).satisfied)
    assert verdicts == [False, False, True, True]


def test_certificate_refusals(unit_law, make_config):
    planar = init_scenario(make_config(MILD, "geometry=planar"))
    with pytest.raises(CertificateRefused, match="spherical"):
        certificate(planar)

    softening = init_scenario(make_config(MILD, "material.zeta=power(1.0, 1.0)"))
    with pytest.raises(CertificateRefused, match="constant"):
        certificate(softening)

    wide = _spherical(unit_law, lambda r: 1.0 + 0.1 * smooth_bump(r, 1.5))
    with pytest.raises(CertificateRefused, match="outside R"):
        certificate(wide)

    stressed = _spherical(unit_law, lambda r: np.ones_like(r), reference=ReferenceState(1.0, 1.0, Pi_bar=0.1))
    with pytest.raises(CertificateRefused, match="at rest"):
        certificate(stressed)


def test_certificate_flag_must_match_data():
    with pytest.raises(ValueError):
        SiderisCertificate(1.0, 1.0, 1.0, threshold=10.0, F0=5.0, dM0=0.0, G0=0.0, satisfied=True)
    with pytest.raises(ValueError):
        SiderisCertificate(1.0, 1.0, 1.0, threshold=10.0, F0=20.0, dM0=-1.0, G0=0.0, satisfied=True)


def test_lifespan_bound():
    c, R, m = math.sqrt(2.0), 1.0, 2.0
    K = 16.0 * math.pi / 3.0 * c * m
    F0 = 1.1 * sideris_threshold(c, R, m)
    T = lifespan_bound(F0, c, R, m)
    assert 1.0 / F0 == pytest.approx((R**-4 - (R + c * T) ** -4) / K, rel=1e-12)
    assert lifespan_bound(0.99 * sideris_threshold(c, R, m), c, R, m) == math.inf
    assert lifespan_bound(-1.0, c, R, m) == math.inf
    assert lifespan_bound(2.0 * F0, c, R, m) < T


def test_growth_check_needs_samples():
    cert = SiderisCertificate(1.0, 1.0, 1.0, threshold=10.0, F0=0.0, dM0=0.0, G0=0.0, satisfied=False)
    rows = [SeriesRow(0.1 * i, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0) for i in range(3)]
    with pytest.raises(InsufficientData):
        check_growth(rows, cert)


def test_growth_check_at_equilibrium():
    cert = SiderisCertificate(1.0, 1.0, 1.0, threshold=10.0, F0=0.0, dM0=0.0, G0=0.0, satisfied=False)
    rows = [SeriesRow(0.1 * i, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0) for i in range(20)]
    growth = check_growth(rows, cert)
    np.testing.assert_array_equal(growth.margins, 0.0)
    assert growth.fraction_ok == 1.0 and growth.monotone

    rows[5] = rows[4]
    with pytest.raises(ValueError):
        check_growth(rows, cert)


def test_growth_rhs():
    cert = SiderisCertificate(1.0, 1.0, 2.0, threshold=100.0, F0=3.0, dM0=0.0, G0=0.0, satisfied=False)
    assert growth_rhs(3.0, 1.0, cert) == pytest.approx(9.0 / (4.0 * math.pi / 3.0 * 32.0 * 2.0))


def test_monitor_c1(unit_law):
    sim = _spherical(unit_law, lambda r: np.ones_like(r))
    assert not monitor_c1(sim).breakdown
    slow = monitor_c1(sim, dt=1e-15)
    assert slow.breakdown and "below floor" in slow.reason

    sim.q[0, 10] = math.nan
    invalid = monitor_c1(sim, check_state=True)
    assert invalid.breakdown and invalid.cell == 10


def test_dFdt_identity_matches_series(make_config):
    sim = init_scenario(make_config(MILD))
    F0, d0 = sideris_F(sim), sideris_dFdt(sim)
    run(sim, 0.02)
    F1, d1 = sideris_F(sim), sideris_dFdt(sim)
    assert (F1 - F0) / 0.02 == pytest.approx(0.5 * (d0 + d1), rel=0.05)


def test_pressure_excess_bound(make_config):
    sim = init_scenario(make_config(MILD))
    bound = pressure_excess_lower_bound(sim)
    assert bound.margin >= 0.0
    assert bound.jensen >= bound.reference * (1.0 - 1e-12)


def test_richardson_estimate(make_config, blowup_text):
    config = make_config(blowup_text)
    est = richardson_estimate(config, "F")
    assert est.error <= 1e-3 * abs(est.fine)
    assert est.extrapolated == pytest.approx(est.fine, rel=1e-3)
    assert richardson_estimate(config, "G").fine == 0.0
    assert richardson_estimate(config, "dM").fine > 0
    with pytest.raises(ValueError):
        richardson_estimate(config, "energy")


def test_containment_at_start(make_config):
    sim = init_scenario(make_config(MILD))
    assert containment_deviation(sim) == 0.0


def test_report_without_breakdown(make_config):
    sim = init_scenario(make_config(MILD))
    report = build_report(run(sim, 0.1))
    assert report.breakdown_time is None
    assert report.margins is None
    assert report.verdict.startswith("no breakdown")


def _blowup_run(make_config, blowup_text, n_cells):
    config = make_config(blowup_text, f"grid.n_cells={n_cells}")
    sim = init_scenario(config)
    cert = certificate(sim)
    result = run(sim, config.run.t_end)
    return cert, result, build_report(result, cert)


@pytest.mark.slow
def test_breakdown_scenario(make_config, blowup_text):
    cert, result, report = _blowup_run(make_config, blowup_text, 1024)
    assert cert.satisfied
    assert result.outcome.status == "breakdown"
    assert report.breakdown_time is not None
    assert report.breakdown_time < cert.T_max

    assert report.margins is not None
    assert report.margins.fraction_ok >= 0.99
    assert report.margins.monotone

    smooth = [r for r in result.series if r.t < report.breakdown_time]
    drift = max(abs(r.dM - smooth[0].dM) for r in smooth)
    assert drift <= 1e-8 * abs(smooth[0].dM)

    _, _, refined = _blowup_run(make_config, blowup_text, 2048)
    assert refined.breakdown_time == pytest.approx(report.breakdown_time, rel=0.1)
