import math

import numpy as np
import pytest

from services.linear_stability import (
    Background,
    bulk_dispersion,
    classify,
    dispersion_sweep,
    hurwitz_minors,
    least_damped,
    omega_roots,
    poly_roots,
    routh_hurwitz,
    shear_dispersion,
    shear_verdict,
    verify_against_simulation,
)
from services.fluid_model import MaterialLaw
from src.viscoflow.exceptions import DomainError, NumericalFailure

UNIT = Background(rho0=1.0, c_s=1.0, zeta=1.0, tau=1.0, eta=1.0)


def test_bulk_cubic_unit_coefficients():
    problem = bulk_dispersion(UNIT, 1.0)
    assert problem.poly == (1.0, 1.0, 2.0, 1.0)
    assert problem.neutral_modes == 2


def test_bulk_cubic_constant_term():
    bg = Background(rho0=2.0, c_s=1.5, zeta=0.7, tau=0.3)
    problem = bulk_dispersion(bg, (0.0, 2.0, 0.0))
    assert problem.poly[3] == pytest.approx(4.0 * 1.5**2)
    assert problem.k2 == pytest.approx(4.0)


def test_bulk_cubic_at_rest():
    bg = Background(rho0=1.0, c_s=1.0, zeta=1.0, tau=2.0)
    problem = bulk_dispersion(bg, 0.0)
    assert problem.poly == (2.0, 1.0, 0.0, 0.0)
    np.testing.assert_allclose(poly_roots(problem.poly).roots, [-0.5, 0.0, 0.0], atol=1e-14)


def test_routh_hurwitz_unit():
    verdict = routh_hurwitz(bulk_dispersion(UNIT, 1.0))
    assert verdict.deltas == pytest.approx((1.0, 1.0, 1.0))
    assert verdict.stable
    assert verdict.max_real_part < 0
    assert verdict.classification == "stable"


def test_routh_hurwitz_negative_bulk_viscosity():
    bg = Background(rho0=1.0, c_s=1.0, zeta=-1.0, tau=1.0)
    verdict = routh_hurwitz(bulk_dispersion(bg, 1.0))
    assert verdict.deltas[1] == pytest.approx(-1.0)
    assert not verdict.stable
    assert verdict.max_real_part > 0


def test_routh_hurwitz_rejects_non_cubic():
    with pytest.raises(DomainError):
        routh_hurwitz((1.0, 2.0, 1.0))


def test_poly_roots_examples():
    found = poly_roots([1, 1, 2, 1])
    real = [r for r in found.roots if abs(r.imag) < 1e-12]
    pair = [r for r in found.roots if abs(r.imag) >= 1e-12]
    assert len(real) == 1 and real[0].real == pytest.approx(-0.5698402910, rel=1e-6)
    assert len(pair) == 2 and all(r.real < 0 for r in pair)
    assert pair[0].real == pytest.approx(-0.2150798545, rel=1e-6)
    assert found.residual <= 1e-9
    assert not found.degree_reduced

    np.testing.assert_allclose(poly_roots([1, 0, -1]).roots, [-1.0, 1.0], atol=1e-15)


def test_poly_roots_degree_reduction():
    found = poly_roots([0.0, 1.0, 0.0, -1.0])
    assert found.degree_reduced
    np.testing.assert_allclose(found.roots, [-1.0, 1.0], atol=1e-15)
    with pytest.raises(DomainError):
        poly_roots([0.0, 0.0])


def test_poly_roots_residual_tolerance():
    # sqrt(2) has no exact double, so the residual is a few ulps
    found = poly_roots([1.0, 0.0, -2.0], residual_tol=1e-9)
    assert 0.0 < found.residual <= 1e-15
    with pytest.raises(NumericalFailure):
        poly_roots([1.0, 0.0, -2.0], residual_tol=1e-30)
    with pytest.raises(NumericalFailure):
        routh_hurwitz(bulk_dispersion(UNIT, 1.0), residual_tol=0.0)
    assert routh_hurwitz(bulk_dispersion(UNIT, 1.0), residual_tol=1e-9).stable


def test_poly_roots_ordering(rng):
    for _ in range(50):
        roots = poly_roots(rng.normal(size=5)).roots
        keys = [(r.real, r.imag) for r in roots]
        assert keys == sorted(keys)


def test_hurwitz_minors_of_cubic_match_deltas():
    poly = (0.5, 1.3, 2.2, 0.9)
    minors = hurwitz_minors(poly)
    a0, a1, a2, a3 = poly
    assert minors[0] == pytest.approx(a1)
    assert minors[1] == pytest.approx(a1 * a2 - a0 * a3)
    assert minors[2] == pytest.approx(a3 * (a1 * a2 - a0 * a3))


def test_classify_band():
    assert classify(-1e-3) == "stable"
    assert classify(5e-10) == "marginal"
    assert classify(-5e-10) == "marginal"
    assert classify(1e-3) == "unstable"


def test_routh_hurwitz_equals_root_signs(rng):
    checked = 0
    while checked < 1000:
        bg = Background(rho0=rng.uniform(0.1, 5.0), c_s=rng.uniform(0.1, 3.0),
                        zeta=rng.uniform(-2.0, 2.0), tau=rng.uniform(-2.0, 2.0), eta=rng.uniform(-2.0, 2.0))
        k = rng.uniform(0.1, 5.0)
        verdict = routh_hurwitz(bulk_dispersion(bg, k))
        if abs(verdict.max_real_part) <= 1e-9:
            continue
        assert verdict.stable == (verdict.max_real_part < 0)

        sv = shear_verdict(shear_dispersion(bg, k))
        for factor in sv.factors:
            if abs(factor.max_real_part) > 1e-9:
                assert factor.stable == (factor.max_real_part < 0), factor
        checked += 1


def test_positive_coefficients_always_stable(rng):
    for _ in range(200):
        bg = Background(rho0=rng.uniform(0.1, 5.0), c_s=rng.uniform(0.1, 3.0), zeta=rng.uniform(0.01, 3.0),
                        tau=rng.uniform(0.01, 3.0), eta=rng.uniform(0.01, 3.0))
        k = rng.uniform(0.05, 10.0)
        assert routh_hurwitz(bulk_dispersion(bg, k)).stable
        assert shear_verdict(shear_dispersion(bg, k)).stable


@pytest.mark.parametrize("coefficient, value, bulk_unstable, shear_unstable", [
    ("zeta", -1.0, True, False),
    ("zeta", -3.0, True, True),
    ("tau", -1.0, True, True),
    ("eta", -1.0, False, True),
])
def test_sign_flip_destabilizes(coefficient, value, bulk_unstable, shear_unstable):
    values = {"rho0": 1.0, "c_s": 1.0, "zeta": 1.0, "tau": 1.0, "eta": 1.0}
    values[coefficient] = value
    bg = Background(**values)
    assert routh_hurwitz(bulk_dispersion(bg, 1.0)).stable is not bulk_unstable
    verdict = shear_verdict(shear_dispersion(bg, 1.0))
    assert verdict.stable is not shear_unstable
    if shear_unstable:
        assert verdict.classification == "unstable"


def test_shear_factors_unit():
    sd = shear_dispersion(UNIT, 1.0)
    assert sd.relaxation.poly == (1.0, 1.0) and sd.relaxation.multiplicity == 3
    assert sd.quadratic.poly == (1.0, 1.0, 1.0) and sd.quadratic.multiplicity == 2
    np.testing.assert_allclose(sd.cubic.poly, [1.0, 1.0, 10.0 / 3.0, 1.0])
    assert len(sd.full_poly()) == 11

    verdict = shear_verdict(sd)
    assert verdict.stable
    quad = next(f for f in verdict.factors if f.name == "shear")
    np.testing.assert_allclose(sorted(r.imag for r in quad.roots), [-math.sqrt(3) / 2, math.sqrt(3) / 2])
    np.testing.assert_allclose([r.real for r in quad.roots], [-0.5, -0.5])
    relaxation = next(f for f in verdict.factors if f.name == "relaxation")
    np.testing.assert_allclose([r.real for r in relaxation.roots], [-1.0])


def test_shear_cubic_reduces_to_bulk_without_shear_viscosity():
    bg = Background(rho0=2.0, c_s=1.3, zeta=0.4, tau=0.6, eta=0.0)
    cubic = np.array(shear_dispersion(bg, 1.7).cubic.poly)
    np.testing.assert_allclose(cubic, bg.rho0 * np.array(bulk_dispersion(bg, 1.7).poly))


def test_shear_at_rest_is_not_marginal():
    verdict = shear_verdict(shear_dispersion(UNIT, 0.0))
    assert verdict.stable
    assert verdict.classification == "stable"


def test_galilean_invariance_of_growth_rates():
    moving = Background(1.0, 1.0, 1.0, 1.0, 1.0, v0=(0.7, -0.2, 0.0))
    k = (1.0, 0.5, 0.0)
    rest, boosted = bulk_dispersion(UNIT, k), bulk_dispersion(moving, k)
    assert routh_hurwitz(rest).deltas == routh_hurwitz(boosted).deltas
    shift = 0.7 * 1.0 - 0.2 * 0.5
    np.testing.assert_allclose(omega_roots(boosted), omega_roots(rest) + shift, atol=1e-14)
    np.testing.assert_allclose(omega_roots(boosted).imag, omega_roots(rest).imag, atol=1e-14)


def test_wavenumber_scaling():
    bg = Background(rho0=1.5, c_s=0.8, zeta=0.9, tau=0.4)
    base = bulk_dispersion(bg, 1.0).poly
    for s in (0.5, 2.0, 3.7):
        scaled = bulk_dispersion(bg, s).poly
        np.testing.assert_allclose(scaled, [base[0], base[1], s * s * base[2], s * s * base[3]], rtol=1e-14)


def test_dispersion_sweep_rows_and_determinism():
    serial = dispersion_sweep(UNIT, 0.1, 2.0, 9, "bulk", workers=1)
    threaded = dispersion_sweep(UNIT, 0.1, 2.0, 9, "bulk", workers=4)
    assert [r.k for r in serial] == pytest.approx(list(np.linspace(0.1, 2.0, 9)))
    assert all(len(r.omegas) == 3 for r in serial)
    assert serial == threaded

    shear = dispersion_sweep(UNIT, 1.0, 1.0, 1, "shear")
    assert len(shear) == 1 and len(shear[0].omegas) == 10


def test_least_damped():
    roots = poly_roots([1, 1, 2, 1]).roots
    x = least_damped(roots)
    assert x.real == pytest.approx(-0.2150798545, rel=1e-6)
    assert x.imag > 0


def test_verify_rejects_bad_requests(unit_law):
    with pytest.raises(DomainError):
        verify_against_simulation(unit_law, 1.0, 1.0, n_cells=64)
    with pytest.raises(DomainError):
        verify_against_simulation(unit_law, 1.0, 1.0, system="bulk", branch="shear")


@pytest.mark.slow
def test_bulk_ring_down_matches_cubic(unit_law):
    result = verify_against_simulation(unit_law, 1.0, 1.0, "bulk", "acoustic", n_cells=512)
    assert result.passed, result
    assert result.decay_error <= 0.02
    assert result.frequency_error <= 0.02
    assert result.predicted.real == pytest.approx(-0.2150798545, rel=1e-6)


@pytest.mark.slow
def test_shear_transverse_ring_down_matches_quadratic(unit_law):
    result = verify_against_simulation(unit_law, 1.0, 1.0, "shear", "shear", n_cells=256)
    assert result.passed, result
    assert result.predicted == pytest.approx(complex(-0.5, math.sqrt(3) / 2), rel=1e-10)


@pytest.mark.slow
def test_inviscid_limit_frequency():
    law = MaterialLaw.constant(A=0.5, gamma=2.0, zeta=1e-4, tau=1e-4)
    result = verify_against_simulation(law, 1.0, 1.0, "bulk", "acoustic", n_cells=256)
    assert result.fitted_frequency == pytest.approx(1.0, rel=0.02)
