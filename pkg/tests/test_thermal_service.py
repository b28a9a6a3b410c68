import math

import numpy as np
import pytest
from scipy.integrate import quad

from services.cone_service import ConeConfig, KappaDensity, cone_service
from services.errors import AccuracyError, DomainError
from services.thermal_service import PolarizabilityModel, ThermalConfig, thermal_service

PLANE = -3.0 / (8.0 * math.pi)
AXIS = ConeConfig(theta0=0.5 * math.pi, theta=math.pi)


def plane_density(x):
    return -(2 * x * x + 2 * x + 1) * math.exp(-2 * x) / (4 * math.pi)


@pytest.fixture
def analytic_density(monkeypatch):
    """Replace the frequency-resolved integrand with the half-space density"""
    def fake(x, cfg, spec=None):
        return KappaDensity(np.array([plane_density(x), 0.0, 0.0]))

    monkeypatch.setattr(thermal_service, "density_estimate", fake)
    return fake


def matsubara_sum(tau, model=PolarizabilityModel(), n_terms=4000):
    total = 0.5 * model.relative(0.0) * plane_density(0.0)
    total += sum(model.relative(n * tau) * plane_density(n * tau) for n in range(1, n_terms))
    return tau * total


def test_model_validation():
    with pytest.raises(DomainError):
        PolarizabilityModel(kind="drude")
    with pytest.raises(DomainError):
        PolarizabilityModel(kind="single_oscillator")
    with pytest.raises(DomainError):
        PolarizabilityModel(alpha0=0.0)


def test_model_relative_polarizability():
    assert PolarizabilityModel().relative(5.0) == 1.0
    model = PolarizabilityModel(kind="single_oscillator", omega0=2.0)
    assert model.relative(0.0) == 1.0
    assert model.relative(2.0) == pytest.approx(0.5)


def test_config_validation():
    with pytest.raises(DomainError):
        ThermalConfig(tau=-0.1)
    with pytest.raises(DomainError):
        ThermalConfig(tau=0.1, n_max=-1)


def test_zero_temperature_static_is_the_cone_energy():
    cfg = ConeConfig(theta0=1.0, theta=math.pi)
    result = thermal_service.thermal_energy(cfg, ThermalConfig(tau=0.0))
    assert result.u_hat == cone_service.cone_energy(cfg).u_hat
    assert result.method == "on_axis"


def test_matsubara_sum_of_analytic_density(analytic_density):
    tau = 0.3
    result = thermal_service.thermal_energy(AXIS, ThermalConfig(tau=tau))
    assert result.method == "matsubara"
    assert result.converged
    assert result.u_hat == pytest.approx(matsubara_sum(tau), rel=1e-7)
    assert result.m_terms[0] == pytest.approx(0.5 * tau * plane_density(0.0), rel=1e-6)
    assert result.m_max_used == len(result.m_terms) - 1
    assert result.magnetic == 0.0


def test_fixed_frequency_count(analytic_density):
    result = thermal_service.thermal_energy(AXIS, ThermalConfig(tau=0.5, n_max=3))
    assert result.m_max_used == 3
    assert result.u_hat == pytest.approx(matsubara_sum(0.5, n_terms=4), rel=1e-6)


def test_single_oscillator_weights_frequencies(analytic_density):
    model = PolarizabilityModel(kind="single_oscillator", omega0=1.5)
    result = thermal_service.thermal_energy(AXIS, ThermalConfig(tau=0.25, model=model))
    assert result.u_hat == pytest.approx(matsubara_sum(0.25, model), rel=1e-7)


def test_classical_limit_is_linear_in_temperature(analytic_density):
    tau = 20.0
    result = thermal_service.thermal_energy(AXIS, ThermalConfig(tau=tau))
    assert result.u_hat == pytest.approx(0.5 * tau * plane_density(0.0), rel=1e-6)


def test_low_temperature_approaches_zero_temperature(analytic_density):
    deviations = [abs(thermal_service.thermal_energy(AXIS, ThermalConfig(tau=tau)).u_hat - PLANE)
                  for tau in (0.4, 0.2, 0.1)]
    assert deviations[0] > deviations[1] > deviations[2]
    assert deviations[2] < 1e-5


def test_dispersive_zero_temperature(analytic_density):
    model = PolarizabilityModel(kind="single_oscillator", omega0=1.0)
    result = thermal_service.thermal_energy(AXIS, ThermalConfig(tau=0.0, model=model))
    expected, _ = quad(lambda x: model.relative(x) * plane_density(x), 0.0, np.inf)
    assert result.method == "dispersive"
    assert result.u_hat == pytest.approx(expected, rel=1e-8)
    # a finite resonance weakens the attraction
    assert PLANE < result.u_hat < 0


def test_unstable_zero_frequency_extrapolation(monkeypatch):
    def erratic(x, cfg, spec=None):
        return KappaDensity(np.array([1.0 / x, 0.0, 0.0]))

    monkeypatch.setattr(thermal_service, "density_estimate", erratic)
    with pytest.raises(AccuracyError) as info:
        thermal_service.zero_frequency_channels(AXIS)
    assert len(info.value.diagnostics["samples"]) == 3
    assert info.value.diagnostics["h"] == thermal_service.zero_step


def test_zero_frequency_extrapolation_is_exact_for_quadratics(monkeypatch):
    def quadratic(x, cfg, spec=None):
        return KappaDensity(np.array([2.0 + 3.0 * x + 5.0 * x * x, -1.0, 0.5]), err=1e-9)

    monkeypatch.setattr(thermal_service, "density_estimate", quadratic)
    limit = thermal_service.zero_frequency_channels(AXIS)
    assert list(limit) == pytest.approx([2.0, -1.0, 0.5], rel=1e-12)
    # weights 1, 6 and 8 over 3 on the three sample errors
    assert thermal_service.zero_frequency_density(AXIS).err == pytest.approx(5e-9, rel=1e-12)


def test_unconverged_density_marks_the_sum(monkeypatch):
    def rough(x, cfg, spec=None):
        return KappaDensity(np.array([plane_density(x), 0.0, 0.0]), err=1e-6, converged=False)

    monkeypatch.setattr(thermal_service, "density_estimate", rough)
    tau = 0.3
    result = thermal_service.thermal_energy(AXIS, ThermalConfig(tau=tau))
    assert not result.converged
    assert result.err >= tau * 1e-6 * (len(result.m_terms) - 1)


def test_high_temperature_plane():
    tau = 20.0
    result = thermal_service.thermal_energy(AXIS, ThermalConfig(tau=tau))
    assert result.u_hat == pytest.approx(0.5 * tau * plane_density(0.0), rel=1e-5)


@pytest.mark.slow
def test_low_temperature_plane():
    from services.quadrature_service import QuadSpec

    spec = QuadSpec(rel_tol=1e-7, abs_tol=1e-10)
    value = thermal_service.thermal_energy(AXIS, ThermalConfig(tau=0.2), spec).u_hat
    assert value == pytest.approx(PLANE, rel=1e-3)


@pytest.mark.slow
def test_low_temperature_cone_converges():
    from services.quadrature_service import QuadSpec

    cfg = ConeConfig(theta0=math.pi / 3, theta=2.5)
    spec = QuadSpec(rel_tol=1e-6, abs_tol=1e-9)
    zero = cone_service.cone_energy(cfg, spec).u_hat
    deviations = [abs(thermal_service.thermal_energy(cfg, ThermalConfig(tau=tau), spec).u_hat - zero)
                  for tau in (0.2, 0.1, 0.05)]
    assert deviations[0] > deviations[1] > deviations[2]
    # quadratic or faster in tau
    assert deviations[2] < deviations[0] / 4.0
