import math

import numpy as np
import pytest

from services.fluid_model import ReferenceState
from services.linear_stability import Background, bulk_dispersion, least_damped, plane_wave_mode, poly_roots
from services.breakdown import build_report, navier_stokes_residual
from services.profiles import smooth_bump
from services.solver import (
    Grid1D,
    Simulation,
    SolverOptions,
    cfl_dt,
    init_plane_wave,
    init_scenario,
    max_wave_speed,
    run,
    step,
)
from src.viscoflow.exceptions import ConfigError, DomainError

BUMP = """\
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
    n_cells = 200
    x_max = 4.0

    [run]
    t_end = 0.5
"""


def _at_rest(law, system="bulk", n_cells=200, x_min=-1.0, x_max=1.0, geometry="planar", **options):
    grid = Grid1D(geometry, n_cells, x_min, x_max)
    nvar = 3 if system == "bulk" else 10
    q = np.zeros((nvar, n_cells))
    q[0] = 1.0
    return Simulation(grid, law, ReferenceState(1.0, 1.0), system, q, SolverOptions(**options))


def test_grid_validation():
    with pytest.raises(DomainError):
        Grid1D("planar", 3, 0.0, 1.0)
    with pytest.raises(DomainError):
        Grid1D("planar", 16, 1.0, 1.0)
    with pytest.raises(DomainError):
        Grid1D("spherical", 16, -1.0, 1.0)
    with pytest.raises(DomainError):
        Grid1D("spherical", 16, 0.0, 1.0, "periodic")


def test_grid_measures():
    planar = Grid1D("planar", 10, -1.0, 1.0)
    assert planar.dx == pytest.approx(0.2)
    np.testing.assert_allclose(planar.volumes, 0.2)
    assert planar.centers[0] == pytest.approx(-0.9)

    sphere = Grid1D("spherical", 64, 0.0, 2.0)
    assert sphere.areas[0] == 0.0
    assert sphere.volumes.sum() == pytest.approx(4.0 * math.pi * 8.0 / 3.0, rel=1e-13)


def test_simulation_validation(unit_law):
    grid = Grid1D("spherical", 16, 0.0, 1.0)
    q = np.zeros((10, 16))
    q[0] = 1.0
    with pytest.raises(DomainError):
        Simulation(grid, unit_law, ReferenceState(1.0, 1.0), "shear", q)
    with pytest.raises(DomainError):
        Simulation(grid, unit_law, ReferenceState(1.0, 1.0), "bulk", q)


def test_cfl_time_step(unit_law):
    sim = _at_rest(unit_law)
    assert max_wave_speed(sim) == pytest.approx(math.sqrt(2.0), rel=1e-14)
    assert cfl_dt(sim) == pytest.approx(0.4 * 0.01 / math.sqrt(2.0), rel=1e-14)
    assert cfl_dt(_at_rest(unit_law, n_cells=400)) == pytest.approx(0.5 * cfl_dt(sim), rel=1e-14)

    expected = cfl_dt(sim)
    outcome = step(sim)
    assert outcome.dt_used == expected
    assert outcome.max_wave_speed == pytest.approx(max_wave_speed(sim), rel=1e-14)


def test_shear_fast_speed(unit_law):
    sim = _at_rest(unit_law, system="shear")
    assert max_wave_speed(sim) == pytest.approx(math.sqrt(10.0 / 3.0), rel=1e-14)


@pytest.mark.parametrize("system", ["bulk", "shear"])
def test_equilibrium_is_a_fixed_point(unit_law, system):
    sim = _at_rest(unit_law, system=system, n_cells=64)
    before = sim.q.copy()
    for _ in range(1000):
        outcome = step(sim)
        assert outcome.status == "ok"
    np.testing.assert_allclose(sim.q, before, rtol=1e-14, atol=0.0)
    assert sim.step_count == 1000


def test_spherical_equilibrium(unit_law):
    sim = _at_rest(unit_law, n_cells=64, x_min=0.0, x_max=2.0, geometry="spherical")
    before = sim.q.copy()
    result = run(sim, 0.5)
    assert result.outcome.status == "ok"
    np.testing.assert_array_equal(sim.q, before)
    assert all(row.F == 0.0 and row.dM == 0.0 for row in result.series)


def test_mass_and_bulk_stress_law(make_config):
    sim = init_scenario(make_config(BUMP, "run.t_end=1.0"))
    result = run(sim, 1.0)
    assert result.outcome.status == "ok"
    first, last = result.series[0], result.series[-1]
    total = float(np.sum(sim.grid.volumes)) + first.dM
    assert abs(last.dM - first.dM) / total <= 1e-8
    assert first.G > 0
    assert last.G == pytest.approx(first.G * math.exp(-1.0), rel=1e-6)
    assert result.series[0].t == 0.0 and last.t == 1.0


def test_shear_trace_law(make_config):
    config = make_config("""\
        system = shear
        geometry = planar

        [material]
        A = 0.5
        gamma = 2.0

        [profile]
        a = 0.1
        b = 0.1
        c = 0.05
        c_shear = 0.05

        [grid]
        n_cells = 200
        x_max = 4.0

        [run]
        t_end = 0.5
    """)
    sim = init_scenario(config)
    result = run(sim, 0.5)
    assert result.outcome.status == "ok"
    first, last = result.series[0], result.series[-1]
    trace0 = 3 * 0.05 * np.sum(sim.grid.volumes * smooth_bump(sim.grid.centers, 1.0))
    assert first.G == pytest.approx(trace0, rel=1e-12)
    assert last.G == pytest.approx(first.G * math.exp(-0.5), rel=1e-6)
    assert abs(last.dM - first.dM) <= 1e-10


def test_navier_stokes_limit(make_config):
    config = make_config("""\
        system = bulk
        geometry = planar

        [material]
        A = 0.5
        gamma = 2.0
        zeta = 1.0
        tau = 0.001

        [profile]
        b = 0.1

        [grid]
        n_cells = 256
        x_max = 4.0

        [run]
        t_end = 0.05
    """)
    sim = init_scenario(config)
    result = run(sim, 0.05)
    assert result.outcome.status == "ok"
    assert navier_stokes_residual(sim).ratio <= 0.05


def test_invalid_step_is_not_committed(unit_law):
    grid = Grid1D("planar", 64, -1.5, 1.5)
    ref = ReferenceState(1.0, 1.0)
    q = np.zeros((3, 64))
    x = grid.centers
    q[0] = 1.0 + 0.2 * smooth_bump(x, 1.0)
    sim = Simulation(grid, unit_law, ref, "bulk", q)
    sim.initial_max_grad = 1.0
    for _ in range(5000):
        before, t_before = sim.q.copy(), sim.t
        outcome = step(sim)
        if outcome.status != "ok":
            break
    assert outcome.status == "invalid_state"
    assert "boundary" in outcome.message
    np.testing.assert_array_equal(sim.q, before)
    assert sim.t == t_before


def test_gradient_breakdown(make_config):
    config = make_config("""\
        system = bulk
        geometry = planar

        [material]
        A = 0.5
        gamma = 2.0

        [profile]
        b = 2.0

        [grid]
        n_cells = 200
        x_max = 4.0

        [run]
        t_end = 0.5
    """, "tolerances.grad_factor=0.5")
    sim = init_scenario(config)
    result = run(sim, 0.5)
    assert result.outcome.status == "breakdown"
    assert "exceeds" in result.outcome.message
    assert result.breakdown_time == result.series[-1].t
    assert result.breakdown_time < 0.5
    assert build_report(result, grad_factor=0.5).verdict.endswith("(grad_factor=0.5)")


def test_uncontained_front_rejected(make_config):
    config = make_config(BUMP)
    with pytest.raises(ConfigError) as info:
        init_scenario(config.model_copy(update={"run": config.run.model_copy(update={"t_end": 5.0})}))
    assert info.value.issues[0].key == "grid.x_max"


def test_front_stays_contained_during_run(make_config):
    sim = init_scenario(make_config(BUMP, "grid.n_cells=256"))
    result = run(sim, 0.47)
    assert result.outcome.status == "ok"
    assert len(result.series) > 50
    assert result.series[0].containment == 0.0
    assert result.max_containment <= sim.options.containment_tol


def test_bare_two_cell_radius_sees_numerical_diffusion(make_config):
    # without the diffusion widths the Rusanov tail leaks past R + c_v t + 2 cells
    sim = init_scenario(make_config(BUMP, "grid.n_cells=256", "tolerances.containment_widths=0"))
    result = run(sim, 0.47)
    assert result.outcome.status == "ok"
    assert sim.options.containment_tol < result.max_containment < 1e-4


def test_zero_amplitude_run(make_config):
    config = make_config(BUMP, "profile.a=0", "profile.b=0", "profile.c=0")
    sim = init_scenario(config)
    result = run(sim, 0.5)
    assert result.outcome.status == "ok"
    assert all(r.F == 0.0 and r.dM == 0.0 and r.G == 0.0 for r in result.series)


def test_snapshot_times_are_hit_exactly(make_config):
    sim = init_scenario(make_config(BUMP))
    result = run(sim, 0.3, snapshot_times=(0.0, 0.1, 0.25))
    assert [s.t for s in result.snapshots] == [0.0, 0.1, 0.25]
    assert sim.t == 0.3


def test_run_is_deterministic(make_config):
    config = make_config(BUMP)
    first = run(init_scenario(config), 0.2)
    second = run(init_scenario(config), 0.2)
    assert first.series == second.series


def test_run_requires_future_end_time(unit_law):
    with pytest.raises(ValueError):
        run(_at_rest(unit_law), 0.0)


def test_observer_cadence(unit_law):
    sim = _at_rest(unit_law, n_cells=32)
    seen = []
    run(sim, 1.0, observer=lambda s, o: seen.append(s.step_count), cadence=5)
    assert seen and all(n % 5 == 0 for n in seen)


@pytest.mark.slow
def test_second_order_convergence(unit_law):
    bg = Background.from_law(unit_law, 1.0)
    x = least_damped(poly_roots(bulk_dispersion(bg, 1.0).poly).roots)
    mode = plane_wave_mode(bg, 1.0, x, "bulk", "acoustic", 1e-3)
    options = SolverOptions(limiter="mc")
    fields = []
    for n in (64, 128, 256):
        sim = init_plane_wave(unit_law, 1.0, 1.0, mode, n, "bulk", options)
        assert run(sim, 1.0).outcome.status == "ok"
        fields.append(sim.q[0])

    def restrict(q):
        return 0.5 * (q[0::2] + q[1::2])

    e_coarse = np.mean(np.abs(fields[0] - restrict(fields[1])))
    e_fine = np.mean(np.abs(fields[1] - restrict(fields[2])))
    order = math.log2(e_coarse / e_fine)
    assert 1.6 <= order <= 2.2


@pytest.mark.slow
def test_galilean_boost_periodic(unit_law):
    length, t_end = 2.0 * math.pi, 1.0
    # one domain length per unit time: the boosted frame is back on the same cells at t_end
    w = length / t_end
    grid = Grid1D("planar", 512, 0.0, length, "periodic")
    x = grid.centers
    q0 = np.vstack([1.0 + 1e-4 * np.sin(x), 0.5e-4 * np.cos(x), np.zeros_like(x)])
    options = SolverOptions(limiter="mc", integrator="ssp3")

    def evolve(boost):
        q = q0.copy()
        q[1] += boost
        sim = Simulation(grid, unit_law, ReferenceState(1.0, length), "bulk", q, options)
        assert run(sim, t_end).outcome.status == "ok"
        return sim.q

    rest, moving = evolve(0.0), evolve(w)
    moving[1] -= w
    assert np.max(np.abs(rest[0] - q0[0])) > 1e-5
    np.testing.assert_allclose(moving, rest, rtol=0.0, atol=1e-6)


def test_spherical_matches_planar_at_large_radius(unit_law):
    r0, n_cells, t_end = 100.0, 5100, 0.5
    fields = {}
    for geometry in ("spherical", "planar"):
        grid = Grid1D(geometry, n_cells, 0.0, 102.0)
        q = np.zeros((3, n_cells))
        q[0] = 1.0 + 1e-3 * smooth_bump(grid.centers - r0, 1.0)
        sim = Simulation(grid, unit_law, ReferenceState(1.0, r0 + 1.0), "bulk", q)
        assert run(sim, t_end).outcome.status == "ok"
        fields[geometry] = sim.q
    sphere, plane = fields["spherical"], fields["planar"]
    assert np.max(np.abs(sphere[0] - plane[0])) <= 0.05 * np.max(np.abs(plane[0] - 1.0))
    assert np.max(np.abs(sphere[1] - plane[1])) <= 0.05 * np.max(np.abs(plane[1]))
