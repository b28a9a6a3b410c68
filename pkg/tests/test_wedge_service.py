import math

import mpmath
import pytest

from services.errors import DomainError
from services.quadrature_service import QuadSpec
from services.wedge_service import WedgeConfig, wedge_service

PLANE = -3.0 / (8.0 * math.pi)


def test_plane_limit_closed_form():
    cfg = WedgeConfig(theta0=math.pi / 2, theta=math.pi)
    assert cfg.p == pytest.approx(1.0)
    assert wedge_service.wedge_energy_closed(cfg) == pytest.approx(PLANE, rel=1e-14)


@pytest.mark.parametrize("theta", [1.8, 2.5, 3.0])
def test_plane_off_axis_closed_form(theta):
    cfg = WedgeConfig(theta0=math.pi / 2, theta=theta)
    exact = PLANE / math.sin(theta - math.pi / 2) ** 4
    assert wedge_service.wedge_energy_closed(cfg) == pytest.approx(exact, rel=1e-13)


def test_phase_mirror_symmetry():
    for p in (0.6, 1.0, 2.5):
        for phase in (0.2, 0.9, 1.4):
            assert wedge_service.wedge_energy_from_phase(p, phase) == pytest.approx(
                wedge_service.wedge_energy_from_phase(p, math.pi - phase), rel=1e-12)


def test_surface_phase_rejected():
    with pytest.raises(DomainError):
        wedge_service.wedge_energy_from_phase(1.0, 0.0)


def test_config_validation():
    with pytest.raises(DomainError, match="theta must exceed theta0"):
        WedgeConfig(theta0=1.0, theta=0.5)
    with pytest.raises(DomainError):
        WedgeConfig(theta0=0.0, theta=1.0)
    with pytest.raises(DomainError):
        WedgeConfig(theta0=1.0, theta=3.5)
    assert WedgeConfig(theta0=1.0, theta=-2.0).theta == 2.0


def test_tmatrix_relations():
    t = wedge_service.wedge_tmatrix(1.7, 0.8)
    assert t.tN_plus == -t.tM_minus
    assert t.tN_minus == -t.tM_plus
    assert t.tM_plus == pytest.approx(math.sinh(1.7 * 0.8) / math.sinh(1.7 * (math.pi - 0.8)), rel=1e-13)
    assert t.tM_minus == pytest.approx(math.cosh(1.7 * 0.8) / math.cosh(1.7 * (math.pi - 0.8)), rel=1e-13)


def test_tmatrix_small_lambda_limit():
    theta0 = 1.1
    exact = theta0 / (math.pi - theta0)
    assert wedge_service.wedge_tmatrix(0.0, theta0).tM_plus == exact
    assert wedge_service.wedge_tmatrix(1e-8, theta0).tM_plus == pytest.approx(exact, rel=1e-10)


def test_tmatrix_half_space_is_unity():
    t = wedge_service.wedge_tmatrix(3.0, math.pi / 2)
    assert t.tM_plus == pytest.approx(1.0, rel=1e-15)
    assert t.tM_minus == pytest.approx(1.0, rel=1e-15)


def test_tmatrix_magnitude_ordering():
    assert abs(wedge_service.wedge_tmatrix(3.0, 1.0).tM_plus) < 1.0
    assert abs(wedge_service.wedge_tmatrix(3.0, 2.0).tM_plus) > 1.0


def test_tmatrix_large_lambda_does_not_overflow():
    t = wedge_service.wedge_tmatrix(500.0, 0.5)
    assert t.tM_plus == 0.0 or t.tM_plus < 1e-300


def test_printed_integrand_value():
    lam, theta0, theta = 0.5, math.pi / 3, math.pi
    cfg = WedgeConfig(theta0=theta0, theta=theta)
    a = 2 * (math.pi - theta)
    b = 2 * (math.pi - theta0)
    expected = (lam + lam ** 3) / 3 * mpmath.coth(math.pi * lam) - mpmath.coth(b * lam) / 3 \
        + mpmath.cosh(a * lam) / mpmath.sinh(b * lam)
    value = wedge_service.wedge_lambda_integrand(lam, cfg, printed=True)
    assert value == pytest.approx(float(expected), rel=1e-13)


def test_printed_integrand_large_lambda_tends_to_polynomial():
    cfg = WedgeConfig(theta0=math.pi / 2, theta=math.pi)
    lam = 20.0
    value = wedge_service.wedge_lambda_integrand(lam, cfg, printed=True)
    assert abs(value - ((lam + lam ** 3) / 3 - 1.0 / 3)) < 1e-9


def test_printed_integrand_theta_dependence():
    cfg = WedgeConfig(theta0=math.pi / 2, theta=math.pi)
    lam = 1.0
    value = wedge_service.wedge_lambda_integrand(lam, cfg, printed=True)
    coth = 1.0 / math.tanh(math.pi)
    assert value - (2.0 / 3 * coth - coth / 3) == pytest.approx(1.0 / math.sinh(math.pi), rel=1e-12)


def test_printed_integrand_rejects_zero():
    cfg = WedgeConfig(theta0=math.pi / 2, theta=math.pi)
    with pytest.raises(DomainError):
        wedge_service.wedge_lambda_integrand(0.0, cfg, printed=True)


def test_integrand_is_continuous_at_zero():
    cfg = WedgeConfig(theta0=math.pi / 3, theta=2.5)
    at_zero = wedge_service.wedge_lambda_integrand(0.0, cfg)
    assert math.isfinite(at_zero)
    assert wedge_service.wedge_lambda_integrand(1e-6, cfg) == pytest.approx(at_zero, rel=1e-5)


@pytest.mark.parametrize("theta0,theta", [
    (math.pi / 2, math.pi),
    (math.pi / 3, math.pi),
    (math.pi / 4, 2.0),
    (2 * math.pi / 3, 2.6),
])
def test_integral_matches_closed_form(theta0, theta):
    cfg = WedgeConfig(theta0=theta0, theta=theta)
    est = wedge_service.wedge_energy_integral(cfg, QuadSpec(rel_tol=1e-10, abs_tol=1e-14))
    assert est.converged
    assert est.value == pytest.approx(wedge_service.wedge_energy_closed(cfg), rel=1e-7)


def test_relative_energy_vanishes_at_reference():
    cfg = WedgeConfig(theta0=1.0, theta=2.0)
    est = wedge_service.wedge_energy_relative(cfg, 2.0)
    assert est.value == 0.0
    assert est.err == 0.0


@pytest.mark.parametrize("theta0", [math.pi / 6, math.pi / 4, math.pi / 3, math.pi / 2, 2 * math.pi / 3])
def test_relative_energy_grid(theta0):
    span = math.pi - theta0 - 0.2
    thetas = [theta0 + 0.2 + span * f for f in (0.0, 0.5, 1.0)]
    theta_ref = 0.5 * (thetas[0] + thetas[1])
    reference = wedge_service.wedge_energy_closed(WedgeConfig(theta0=theta0, theta=theta_ref))
    for theta in thetas:
        cfg = WedgeConfig(theta0=theta0, theta=theta)
        exact = wedge_service.wedge_energy_closed(cfg) - reference
        est = wedge_service.wedge_energy_relative(cfg, theta_ref, QuadSpec(rel_tol=1e-10, abs_tol=1e-13))
        assert abs(est.value - exact) <= max(1e-8, 1e-6 * abs(exact))


def test_relative_energy_rejects_bad_reference():
    cfg = WedgeConfig(theta0=1.0, theta=2.0)
    with pytest.raises(DomainError):
        wedge_service.wedge_energy_relative(cfg, 0.5)


@pytest.mark.parametrize("theta0,theta", [(math.pi / 3, 2.4), (math.pi / 2, math.pi)])
def test_halving_tolerance_stays_within_reported_error(theta0, theta):
    cfg = WedgeConfig(theta0=theta0, theta=theta)
    spec = QuadSpec(rel_tol=1e-7, abs_tol=1e-11)
    for evaluate in (lambda s: wedge_service.wedge_energy_integral(cfg, s),
                     lambda s: wedge_service.wedge_energy_relative(cfg, theta0 + 0.3, s)):
        coarse, fine = evaluate(spec), evaluate(spec.halved())
        assert abs(coarse.value - fine.value) <= coarse.err + 1e-15 * abs(fine.value)
