import dataclasses
import logging
import math

import numpy as np
import pytest

from services.cone_service import ConeConfig, EnergyResult, cone_service
from services.errors import DomainError
from services.quadrature_service import QuadSpec, quadrature_service

PLANE = -3.0 / (8.0 * math.pi)
HALF = 0.5 * math.pi


def plane_density(x):
    return -(2 * x * x + 2 * x + 1) * math.exp(-2 * x) / (4 * math.pi)


# ---------------------------------------------------------------------------
# Configuration

def test_config_validation():
    with pytest.raises(DomainError, match="theta must exceed theta0"):
        ConeConfig(theta0=1.0, theta=0.5)
    with pytest.raises(DomainError):
        ConeConfig(theta0=math.pi, theta=math.pi)
    with pytest.raises(DomainError):
        ConeConfig(theta0=1.0, theta=3.5)
    with pytest.raises(DomainError):
        ConeConfig(theta0=1.0, theta=2.0, r=0.0)


def test_theta_a_few_ulps_above_pi_is_the_axis():
    assert ConeConfig(theta0=HALF, theta=math.nextafter(math.pi, 4.0)).theta == math.pi


# ---------------------------------------------------------------------------
# T-matrices

@pytest.mark.parametrize("lam", [0.1, 3.0, 30.0])
def test_plane_tmatrices(lam):
    t0 = cone_service.cone_tmatrix(lam, 0, HALF)
    assert t0.tN == pytest.approx(-1.0, rel=1e-12)
    t1 = cone_service.cone_tmatrix(lam, 1, HALF)
    assert t1.tN == pytest.approx(-1.0 / (lam * lam + 0.25), rel=1e-12)
    assert t1.tM == pytest.approx(-t1.tN, rel=1e-12)


def test_tmatrix_signs():
    for theta0 in (0.4, 1.2, 2.4):
        for m in (0, 2):
            t = cone_service.cone_tmatrix(2.0, m, theta0)
            assert t.tN < 0 < t.tM


def test_negative_order_uses_absolute_value():
    assert cone_service.cone_tmatrix(1.5, -2, 1.0) == cone_service.cone_tmatrix(1.5, 2, 1.0)


@pytest.mark.parametrize("theta0", [0.3, 1.1, 1.9, 2.8])
@pytest.mark.parametrize("m", [0, 1, 2, 3, 5])
@pytest.mark.parametrize("lam", [0.05, 2.0, 15.0, 25.0, 40.0])
def test_wronskian_identity(theta0, m, lam):
    tmat = cone_service.cone_tmatrix_log(lam, m, theta0)
    direct = tmat.tN - tmat.tM
    wronskian = cone_service.wronskian_difference(lam, m, theta0)
    assert direct.sign == wronskian.sign == -1
    assert abs(math.expm1(direct.log_mag - wronskian.log_mag)) < 1e-9


# ---------------------------------------------------------------------------
# Angular weights and integrands

def test_angular_weights_near_the_axis():
    theta = math.pi - 1e-8
    w0 = cone_service.cone_angular_weights(1.0, 0, theta)
    assert w0.A.to_float() == pytest.approx(1.0, rel=1e-10)
    assert w0.B.to_float() < 1e-12
    w2 = cone_service.cone_angular_weights(1.0, 2, theta)
    assert w2.A.to_float() < 1e-12


def test_angular_weight_b_matches_finite_difference():
    lam, m, theta, h = 3.0, 1, 2.0, 1e-6

    def amplitude(t):
        return math.sqrt(cone_service.cone_angular_weights(lam, m, t).A.to_float())

    weights = cone_service.cone_angular_weights(lam, m, theta)
    slope = (amplitude(theta + h) - amplitude(theta - h)) / (2 * h)
    expected = slope ** 2 + m * m * weights.A.to_float() / math.sin(theta) ** 2
    assert weights.B.to_float() == pytest.approx(expected, rel=1e-6)


def test_angular_weights_reject_the_axis():
    with pytest.raises(DomainError):
        cone_service.cone_angular_weights(1.0, 0, math.pi)


def test_integrand_vanishes_at_zero():
    cfg = ConeConfig(theta0=1.0, theta=2.0)
    assert cone_service.cone_lambda_integrand(0.0, 0, cfg) == 0.0
    assert abs(cone_service.cone_lambda_integrand(1e-8, 0, cfg)) < 1e-6


def test_integrand_is_sum_of_channels():
    cfg = ConeConfig(theta0=0.8, theta=2.1)
    channels = cone_service.cone_lambda_channels(1.3, 2, cfg)
    assert cone_service.cone_lambda_integrand(1.3, 2, cfg) == pytest.approx(float(np.sum(channels)))


def test_integrand_decays_at_the_geometric_rate():
    cfg = ConeConfig(theta0=0.6, theta=1.6)
    near = abs(cone_service.cone_lambda_integrand(20.0, 0, cfg))
    far = abs(cone_service.cone_lambda_integrand(40.0, 0, cfg))
    assert math.log(near) - math.log(far) >= 0.8 * 2 * (cfg.theta - cfg.theta0) * 20.0


def test_general_integrand_reduces_to_axis_form():
    cfg = ConeConfig(theta0=HALF, theta=math.pi - 1e-6)
    for lam in (0.3, 2.0, 7.0):
        general = cone_service.cone_lambda_integrand(lam, 0, cfg) \
            + 2.0 * cone_service.cone_lambda_integrand(lam, 1, cfg)
        axis = float(np.sum(cone_service.on_axis_lambda_channels(lam, HALF)))
        assert general == pytest.approx(axis, rel=1e-5)


# ---------------------------------------------------------------------------
# Ghost mode

def test_ghost_term_values():
    assert cone_service.ghost_term(math.pi, HALF) == pytest.approx(-1.0 / math.pi)
    theta0 = 1.0
    assert cone_service.ghost_term(math.pi, theta0) == pytest.approx(
        -math.tan(theta0 / 2) ** 2 / math.pi, rel=1e-14)
    with pytest.raises(DomainError):
        cone_service.ghost_term(1.0, 1.0)


def test_ghost_ratio_forms_agree():
    theta, theta0 = 2.5, 0.8
    c, c0 = math.cos(theta), math.cos(theta0)
    expected = (1 + c) * (1 - c0) / ((1 - c) * (1 + c0))
    assert cone_service.ghost_ratio(theta, theta0) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("theta0", [0.3, 0.7, 1.1, 1.5, 1.9])
@pytest.mark.parametrize("offset", [0.3, 0.5, 0.7, 0.9, 1.1])
def test_ghost_series_matches_closed_form(theta0, offset):
    theta = theta0 + offset
    series = cone_service.ghost_series(theta, theta0, QuadSpec(rel_tol=1e-13, abs_tol=1e-300))
    assert series.value == pytest.approx(cone_service.ghost_term(theta, theta0), rel=1e-10)


def test_ghost_series_needs_theta_beyond_theta0():
    with pytest.raises(DomainError):
        cone_service.ghost_series(1.0, 1.5)


# ---------------------------------------------------------------------------
# Energies

def test_plane_on_axis():
    result = cone_service.cone_energy_on_axis(1.0, HALF)
    assert result.method == "on_axis"
    assert result.u_hat == pytest.approx(PLANE, rel=1e-6)
    assert result.channel_ratio == pytest.approx(5.0, rel=1e-6)
    assert result.u_hat == pytest.approx(result.electric + result.magnetic + result.ghost, rel=1e-14)


def test_on_axis_energy_is_independent_of_radius():
    assert cone_service.cone_energy_on_axis(3.0, 1.0).u_hat == pytest.approx(
        cone_service.cone_energy_on_axis(1.0, 1.0).u_hat, rel=1e-12)


@pytest.mark.parametrize("theta", [2.2, 2.6, 3.0])
def test_plane_off_axis(theta):
    result = cone_service.cone_energy(ConeConfig(theta0=HALF, theta=theta))
    assert result.method == "general"
    assert result.u_hat == pytest.approx(PLANE / math.cos(theta) ** 4, rel=1e-5)


@pytest.mark.slow
def test_plane_off_axis_far_from_axis():
    theta = 1.8
    result = cone_service.cone_energy(ConeConfig(theta0=HALF, theta=theta))
    assert result.u_hat == pytest.approx(PLANE / math.cos(theta) ** 4, rel=1e-5)


def test_near_axis_is_routed_to_the_axis(caplog):
    with caplog.at_level(logging.WARNING, logger="services.cone_service"):
        result = cone_service.cone_energy(ConeConfig(theta0=HALF, theta=math.pi - 1e-4))
    assert result.method == "on_axis"
    assert "of the axis" in caplog.text


def test_general_path_is_continuous_with_the_axis():
    theta0 = math.pi / 3
    general = cone_service.cone_energy(ConeConfig(theta0=theta0, theta=math.pi - 1e-3))
    assert general.method == "general"
    axis = cone_service.cone_energy_on_axis(1.0, theta0)
    assert general.u_hat == pytest.approx(axis.u_hat, rel=1e-4)


@pytest.mark.parametrize("theta0,theta", [(0.5, 2.0), (2.0, 2.8), (1.2, math.pi)])
def test_energy_is_attractive(theta0, theta):
    assert cone_service.cone_energy(ConeConfig(theta0=theta0, theta=theta)).u_hat < 0


HALVING_CASES = [
    lambda spec: cone_service.cone_energy_on_axis(1.0, HALF, spec),
    lambda spec: cone_service.cone_energy(ConeConfig(theta0=HALF, theta=2.6), spec),
    lambda spec: cone_service.cone_energy(ConeConfig(theta0=1.0, theta=2.4), spec),
]


@pytest.mark.parametrize("evaluate", HALVING_CASES)
def test_halving_tolerance_stays_within_reported_error(evaluate):
    spec = QuadSpec(rel_tol=1e-7, abs_tol=1e-11)
    coarse, fine = evaluate(spec), evaluate(spec.halved())
    assert coarse.converged and fine.converged
    assert abs(coarse.u_hat - fine.u_hat) <= coarse.err + 1e-15 * abs(fine.u_hat)


@pytest.mark.slow
def test_on_axis_energy_falls_as_the_cone_closes_in():
    values = [cone_service.cone_energy_on_axis(1.0, theta0).u_hat
              for theta0 in (2.8, 2.85, 2.9, 2.95, 3.0)]
    assert all(later < earlier for earlier, later in zip(values, values[1:]))


@pytest.mark.slow
def test_scaled_energy_tends_to_the_plane_near_the_surface():
    theta = 1.6
    deviations = [abs(cone_service.scaled_energy(ConeConfig(theta0=theta - gap, theta=theta)) / PLANE - 1.0)
                  for gap in (0.6, 0.3, 0.15)]
    assert deviations[0] > deviations[1] > deviations[2]
    assert deviations[2] < 0.1


@pytest.mark.slow
@pytest.mark.parametrize("theta0,theta", [(1.0, 1.15), (0.2, 0.35), (2.5, 2.65), (2.9, 3.05)])
def test_energy_close_to_the_surface_converges(theta0, theta):
    result = cone_service.cone_energy(ConeConfig(theta0=theta0, theta=theta))
    assert result.converged
    assert math.isfinite(result.err)
    assert result.err <= 1e-6 * abs(result.u_hat)


def test_fixed_truncation_reports_tail():
    cfg = ConeConfig(theta0=1.0, theta=2.4)
    result = cone_service.cone_energy(cfg, m_max=2)
    assert result.m_max_used == 2
    assert len(result.m_terms) == 3
    assert result.err >= abs(result.m_terms[-1]) * cone_service.ghost_ratio(cfg.theta, cfg.theta0) \
        / (1 - cone_service.ghost_ratio(cfg.theta, cfg.theta0)) / 8.0
    with pytest.raises(DomainError):
        cone_service.cone_energy(cfg, m_max=-1)


@pytest.mark.slow
def test_adaptive_truncation_error_is_honest():
    cfg = ConeConfig(theta0=0.9, theta=2.0)
    adaptive = cone_service.cone_energy(cfg)
    longer = cone_service.cone_energy(cfg, m_max=adaptive.m_max_used + 4)
    assert abs(adaptive.u_hat - longer.u_hat) <= adaptive.err


def test_scaled_energy_and_distance():
    cfg = ConeConfig(theta0=HALF, theta=2.6)
    assert cone_service.scaled_energy(cfg) == pytest.approx(PLANE, rel=1e-5)
    assert cone_service.surface_distance(cfg) == pytest.approx(math.sin(2.6 - HALF))
    assert cone_service.surface_distance(ConeConfig(theta0=0.5, theta=2.5, r=2.0)) == 2.0


def test_result_serialises():
    result = EnergyResult(u_hat=-1.0, err=1e-9, m_max_used=3, electric=-0.5,
                          magnetic=-0.1, ghost=-0.4, m_terms=(1.0, 0.5))
    data = result.to_dict()
    assert data["m_terms"] == [1.0, 0.5]
    assert data["method"] == "general"
    assert result.channel_ratio == pytest.approx(9.0)


# ---------------------------------------------------------------------------
# Frequency-resolved integrand

@pytest.mark.parametrize("x", [0.5, 1.0, 3.0])
def test_plane_kappa_density(x):
    value = cone_service.cone_kappa_integrand_on_axis(x, 1.0, HALF)
    assert value == pytest.approx(plane_density(x), rel=1e-7)


def test_kappa_density_scales_with_radius():
    r = 2.0
    value = cone_service.cone_kappa_integrand_on_axis(0.5, r, HALF)
    assert value == pytest.approx(r * plane_density(0.5 * r), rel=1e-7)


def test_kappa_density_is_finite_at_low_frequency():
    values = [cone_service.cone_kappa_integrand_on_axis(x, 1.0, HALF) for x in (1e-2, 1e-3)]
    assert all(math.isfinite(v) for v in values)
    assert values[1] == pytest.approx(plane_density(0.0), rel=1e-4)
    assert values[0] == pytest.approx(values[1], rel=1e-2)


def test_kappa_density_rejects_nonpositive_frequency():
    with pytest.raises(DomainError):
        cone_service.cone_kappa_integrand(0.0, ConeConfig(theta0=1.0, theta=2.0))


@pytest.mark.slow
def test_kappa_integral_reproduces_energy():
    cfg = ConeConfig(theta0=math.pi / 3, theta=2.5)
    spec = QuadSpec(rel_tol=1e-8, abs_tol=1e-12)
    inner = QuadSpec(rel_tol=1e-9, abs_tol=1e-13)
    rate = 2.0 * cone_service.surface_distance(cfg) / cfg.r
    est = quadrature_service.integrate_semi_infinite(
        lambda kappa: cone_service.cone_kappa_integrand(kappa, cfg, inner), 0.0, rate, spec)
    assert est.value == pytest.approx(cone_service.cone_energy(cfg, inner).u_hat, rel=1e-6)


def test_kappa_density_carries_an_error_bound():
    cfg = ConeConfig(theta0=math.pi / 3, theta=2.5)
    density = cone_service.cone_kappa_density(1.0, cfg)
    assert density.converged
    assert density.channels.shape == (3,)
    assert 0.0 < density.err <= 1e-6 * abs(density.total)
    assert cone_service.cone_kappa_integrand(1.0, cfg) == density.total


def test_unconverged_m_sum_marks_the_density(monkeypatch, caplog):
    series = cone_service.quadrature_service.sum_truncated

    def truncated(*args, **kwargs):
        return dataclasses.replace(series(*args, **kwargs), converged=False)

    monkeypatch.setattr(cone_service.quadrature_service, "sum_truncated", truncated)
    with caplog.at_level(logging.WARNING, logger="services.cone_service"):
        density = cone_service.cone_kappa_density(1.0, ConeConfig(theta0=math.pi / 3, theta=2.5))
    assert not density.converged
    assert "m-sum not converged" in caplog.text


@pytest.mark.slow
def test_kappa_density_off_the_plane_is_finite_at_low_frequency():
    cfg = ConeConfig(theta0=math.pi / 3, theta=2.5)
    values = [cone_service.cone_kappa_integrand(x, cfg) for x in (1e-2, 3e-3, 1e-3)]
    assert all(math.isfinite(v) and v < 0 for v in values)
    assert abs(values[2] - values[1]) < abs(values[1] - values[0])
    assert values[2] == pytest.approx(values[0], rel=5e-2)
