"""
Verification service - exact limits and integral identities as a runnable report
"""
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, List, Tuple
import math
import logging

import numpy as np

from services.cone_service import ConeConfig, EnergyResult, cone_service
from services.errors import AccuracyError, DomainError
from services.quadrature_service import QuadSpec, quadrature_service
from services.specfun_service import specfun_service
from services.thermal_service import ThermalConfig, thermal_service
from services.wedge_service import WedgeConfig, wedge_service

logger = logging.getLogger(__name__)

PLANE = -3.0 / (8.0 * math.pi)
FAST = "fast"
FULL = "full"
PLANE_THETAS = (1.8, 2.2, 2.6, 3.0)


def off_axis_name(theta: float) -> str:
    return f"plane_off_axis[theta={theta}]"


@dataclass
class CheckResult:
    name: str
    residual: float
    tolerance: float
    passed: bool
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class VerifyService:
    """Service bundling the identity checks into fast and full suites"""

    def __init__(self):
        self.cone_service = cone_service
        self.wedge_service = wedge_service
        self.specfun_service = specfun_service
        self.thermal_service = thermal_service
        self.quadrature_service = quadrature_service

    def run(self, level: str = FAST, tamper_ghost: bool = False) -> List[CheckResult]:
        """
        Run a verification suite

        Args:
            level: "fast" (plane limits, Wronskian, ghost series, channel ratio)
                or "full" (adds wedge grid, Bessel identities, thermal limit)
            tamper_ghost: negate the ghost channel when recombining plane energies

        Returns:
            One CheckResult per identity
        """
        if level not in (FAST, FULL):
            raise DomainError(f"unknown verification level: {level}")

        checks: List[Tuple[str, Callable[[], CheckResult]]] = [
            ("plane_on_axis", lambda: self.check_plane_on_axis(tamper_ghost)),
        ]
        for theta in PLANE_THETAS:
            checks.append((off_axis_name(theta),
                           lambda theta=theta: self.check_plane_off_axis(theta, tamper_ghost)))
        checks += [
            ("channel_ratio", self.check_channel_ratio),
            ("wronskian", self.check_wronskian),
            ("ghost_series", self.check_ghost_series),
            ("lambda_identity", self.check_lambda_identity),
        ]
        if level == FULL:
            checks += [
                ("wedge_relative", self.check_wedge_grid),
                ("bessel_lambda_identities", self.check_bessel_lambda_identities),
                ("kappa_identity", self.check_kappa_identity),
                ("kappa_plane", self.check_kappa_plane),
                ("thermal_limit", self.check_thermal_limit),
            ]

        results = []
        for name, check in checks:
            try:
                result = check()
            except (DomainError, AccuracyError) as e:
                result = CheckResult(name, math.inf, 0.0, False,
                                     f"raised {type(e).__name__}: {e}")
            level_fn = logger.info if result.passed else logger.error
            level_fn(f"{result.name}: residual {result.residual:.3e} "
                     f"(tolerance {result.tolerance:.1e})")
            results.append(result)
        return results

    def _recombine(self, result: EnergyResult, tamper_ghost: bool) -> float:
        ghost = -result.ghost if tamper_ghost else result.ghost
        return result.electric + result.magnetic + ghost

    def _relative(self, name: str, value: float, exact: float, tolerance: float,
                  detail: str = "") -> CheckResult:
        residual = abs(value / exact - 1.0)
        return CheckResult(name, residual, tolerance, residual <= tolerance, detail)

    def check_plane_on_axis(self, tamper_ghost: bool = False) -> CheckResult:
        result = self.cone_service.cone_energy_on_axis(1.0, 0.5 * math.pi)
        value = self._recombine(result, tamper_ghost)
        return self._relative("plane_on_axis", value, PLANE, 1e-6, f"u_hat={value:.12g}")

    def check_plane_off_axis(self, theta: float, tamper_ghost: bool = False) -> CheckResult:
        result = self.cone_service.cone_energy(ConeConfig(theta0=0.5 * math.pi, theta=theta))
        value = self._recombine(result, tamper_ghost)
        exact = PLANE / math.cos(theta) ** 4
        return self._relative(off_axis_name(theta), value, exact, 1e-5,
                              f"u_hat={value:.12g}")

    def check_channel_ratio(self) -> CheckResult:
        result = self.cone_service.cone_energy_on_axis(1.0, 0.5 * math.pi)
        ratio = result.channel_ratio
        return CheckResult("channel_ratio", abs(ratio - 5.0) / 5.0, 1e-6,
                           abs(ratio - 5.0) <= 5e-6, f"ratio={ratio:.10g}")

    def check_wronskian(self) -> CheckResult:
        worst = 0.0
        for theta0 in (0.4, 1.1, 1.9, 2.6):
            for m in (0, 1, 2, 3, 5):
                for lam in (0.3, 4.0, 12.0, 25.0, 40.0):
                    tmat = self.cone_service.cone_tmatrix_log(lam, m, theta0)
                    direct = tmat.tN - tmat.tM
                    wronskian = self.cone_service.wronskian_difference(lam, m, theta0)
                    worst = max(worst, abs(math.expm1(direct.log_mag - wronskian.log_mag)))
        return CheckResult("wronskian", worst, 1e-9, worst <= 1e-9, "100 points")

    def check_ghost_series(self) -> CheckResult:
        worst = 0.0
        for theta0 in (0.3, 0.9, 1.5):
            for theta in (1.8, 2.4, 3.0):
                exact = self.cone_service.ghost_term(theta, theta0)
                series = self.cone_service.ghost_series(
                    theta, theta0, QuadSpec(rel_tol=1e-13, abs_tol=1e-300))
                worst = max(worst, abs(series.value / exact - 1.0))
        return CheckResult("ghost_series", worst, 1e-10, worst <= 1e-10)

    def check_lambda_identity(self) -> CheckResult:
        def integrand(lam: float) -> float:
            return lam * (lam * lam + 0.25) * math.tanh(math.pi * lam) / math.cosh(math.pi * lam)

        est = self.quadrature_service.integrate_semi_infinite(integrand, 0.0, math.pi)
        return self._relative("lambda_identity", est.value, 1.0 / (2.0 * math.pi), 1e-8)

    def check_wedge_grid(self) -> CheckResult:
        worst = 0.0
        for theta0 in (math.pi / 6, math.pi / 3, math.pi / 2, 2 * math.pi / 3):
            thetas = [theta0 + 0.3, 0.5 * (theta0 + 0.3 + math.pi), math.pi]
            for theta in thetas:
                cfg = WedgeConfig(theta0=theta0, theta=theta)
                ref = thetas[0] if theta != thetas[0] else math.pi
                exact = self.wedge_service.wedge_energy_closed(cfg) \
                    - self.wedge_service.wedge_energy_closed(WedgeConfig(theta0=theta0, theta=ref))
                est = self.wedge_service.wedge_energy_relative(cfg, ref)
                worst = max(worst, abs(est.value - exact) / max(1e-2, abs(exact)))
        return CheckResult("wedge_relative", worst, 1e-6, worst <= 1e-6)

    def check_bessel_lambda_identities(self) -> CheckResult:
        """lambda-integrals of k^2, lambda^2 k^2 and (d_r(r k))^2 against exp(-2x)"""
        spec = QuadSpec(rel_tol=1e-10, abs_tol=1e-14)
        worst = 0.0
        for x in (0.5, 1.0, 3.0):
            def squares(lam: float) -> np.ndarray:
                weight = lam * math.tanh(math.pi * lam)
                k = self.specfun_service.spherical_k_imag(lam, x).to_float(allow_underflow=True)
                d = self.specfun_service.spherical_k_imag_rderiv(lam, x, 1.0).to_float(
                    allow_underflow=True)
                return weight * np.array([k * k, lam * lam * k * k, d * d])

            estimates = self.quadrature_service.integrate_semi_infinite_vector(
                squares, 0.0, math.pi, spec, power=2.0)
            envelope = math.exp(-2.0 * x) / (2.0 * x)
            exact = (envelope, (x + 0.25) * envelope, (x * x - x + 0.5) * envelope)
            for est, value in zip(estimates, exact):
                worst = max(worst, abs(est.value / value - 1.0))
        return CheckResult("bessel_lambda_identities", worst, 1e-8, worst <= 1e-8)

    def check_kappa_identity(self) -> CheckResult:
        # sech(10 pi) puts the last value near 1e-12
        spec = QuadSpec(rel_tol=1e-10, abs_tol=1e-24)
        worst = 0.0
        for lam in (0.0, 0.5, 2.0, 10.0):
            def integrand(kappa: float) -> float:
                k = self.specfun_service.spherical_k_imag(lam, kappa).to_float(allow_underflow=True)
                return kappa ** 3 * k * k

            est = self.quadrature_service.integrate_semi_infinite(
                integrand, 0.0, 2.0, spec, onset=lam, power=1.0)
            exact = math.pi / 4.0 * (lam * lam + 0.25) / math.cosh(math.pi * lam)
            worst = max(worst, abs(est.value / exact - 1.0))
        return CheckResult("kappa_identity", worst, 1e-8, worst <= 1e-8)

    def check_kappa_plane(self) -> CheckResult:
        worst = 0.0
        for x in (0.5, 1.0, 3.0):
            value = self.cone_service.cone_kappa_integrand_on_axis(x, 1.0, 0.5 * math.pi)
            exact = -(2 * x * x + 2 * x + 1) * math.exp(-2 * x) / (4 * math.pi)
            worst = max(worst, abs(value / exact - 1.0))
        return CheckResult("kappa_plane", worst, 1e-7, worst <= 1e-7)

    def check_thermal_limit(self) -> CheckResult:
        cfg = ConeConfig(theta0=0.5 * math.pi, theta=math.pi)
        spec = QuadSpec(rel_tol=1e-7, abs_tol=1e-10)
        value = self.thermal_service.thermal_energy(cfg, ThermalConfig(tau=0.2), spec).u_hat
        return self._relative("thermal_limit", value, PLANE, 1e-3, f"u_hat={value:.10g}")


# Global instance
verify_service = VerifyService()
