"""
Wedge service - Casimir-Polder energy near a perfectly conducting wedge

The wedge has half-opening angle theta0 about its symmetry plane; the particle
sits at cylindrical radius r and angle theta measured from that plane.
Energies are dimensionless, U_hat = U r^4 / (alpha hbar c).
"""
from dataclasses import dataclass, field
from typing import Optional
import math
import logging

from services.errors import DomainError
from services.logsigned import LogSigned, log_cosh, log_sinh
from services.quadrature_service import Estimate, QuadSpec, quadrature_service

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WedgeConfig:
    """Wedge geometry; a negative theta is mapped to its mirror image"""

    theta0: float
    theta: float
    r: float = 1.0
    p: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.theta0 < math.pi:
            raise DomainError(f"theta0 must lie in (0, pi), got {self.theta0}")
        theta = abs(self.theta)
        if 0.0 < theta - math.pi <= 4 * math.ulp(math.pi):
            theta = math.pi
        if not theta <= math.pi:
            raise DomainError(f"theta must not exceed pi, got {self.theta}")
        if not theta > self.theta0:
            raise DomainError("theta must exceed theta0")
        if not self.r > 0:
            raise DomainError(f"r must be positive, got {self.r}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "p", math.pi / (2.0 * (math.pi - self.theta0)))


@dataclass(frozen=True)
class WedgeTMatrix:
    """The four wedge T-matrix elements at fixed (lambda, theta0)"""

    tM_plus: float
    tM_minus: float
    tN_plus: float
    tN_minus: float


class WedgeService:
    """Service for wedge energies in closed form and as lambda-integrals"""

    def __init__(self):
        self.quadrature_service = quadrature_service

    def wedge_energy_from_phase(self, p: float, phase: float) -> float:
        """
        Closed-form energy as a function of p and the phase p (theta - theta0)

        Args:
            p: pi / (2 (pi - theta0))
            phase: p (theta - theta0)

        Returns:
            U_hat
        """
        s2 = math.sin(phase) ** 2
        if s2 == 0.0:
            raise DomainError("particle lies on a conducting surface: sin(p (theta - theta0)) = 0")
        p2 = p * p
        bracket = p2 * p2 - (2.0 / 3.0) * p2 * (p2 - 1.0) * s2 \
            - (p2 - 1.0) * (p2 + 11.0) * s2 * s2 / 135.0
        return -3.0 / (8.0 * math.pi * s2 * s2) * bracket

    def wedge_energy_closed(self, cfg: WedgeConfig) -> float:
        """Closed-form U_hat summed over the discrete wedge modes"""
        return self.wedge_energy_from_phase(cfg.p, cfg.p * (cfg.theta - cfg.theta0))

    def wedge_tmatrix(self, lam: float, theta0: float) -> WedgeTMatrix:
        """
        T-matrix elements for the wedge

        tM_plus = sinh(lam theta0) / sinh(lam (pi - theta0)),
        tM_minus = cosh(lam theta0) / cosh(lam (pi - theta0)),
        tN_plus = -tM_minus, tN_minus = -tM_plus.
        """
        if lam < 0:
            raise DomainError(f"lambda must be nonnegative, got {lam}")
        if not 0.0 < theta0 < math.pi:
            raise DomainError(f"theta0 must lie in (0, pi), got {theta0}")
        rest = math.pi - theta0
        if lam == 0.0:
            plus = theta0 / rest
        else:
            plus = LogSigned.from_log(log_sinh(lam * theta0) - log_sinh(lam * rest))
            plus = plus.to_float(allow_underflow=True)
        minus = LogSigned.from_log(log_cosh(lam * theta0) - log_cosh(lam * rest))
        minus = minus.to_float(allow_underflow=True)
        return WedgeTMatrix(tM_plus=plus, tM_minus=minus, tN_plus=-minus, tN_minus=-plus)

    def wedge_lambda_integrand(self, lam: float, cfg: WedgeConfig, printed: bool = False) -> float:
        """
        Lambda-integrand of the wedge energy, U_hat = -(1/pi) int_0^inf (...) d lambda

        The default grouping multiplies all three terms by (lambda + lambda^3):

            (lambda + lambda^3) [(coth(pi lambda) - coth(b lambda)) / 3
                                 + cosh(a lambda) / sinh(b lambda)]

        with a = 2 (pi - theta), b = 2 (pi - theta0). It is finite at
        lambda = 0 and decays like exp(-2 (theta - theta0) lambda).

        Args:
            lam: lambda > 0 (lambda = 0 allowed unless printed)
            cfg: wedge geometry
            printed: return the bracket with only the first term weighted,
                (lambda + lambda^3)/3 coth(pi lambda) - coth(b lambda)/3 + cosh(a lambda)/sinh(b lambda)

        Returns:
            Integrand value
        """
        a = 2.0 * (math.pi - cfg.theta)
        b = 2.0 * (math.pi - cfg.theta0)
        if printed:
            if not lam > 0:
                raise DomainError("printed wedge integrand is not finite at lambda = 0")
            return (lam + lam ** 3) / (3.0 * math.tanh(math.pi * lam)) \
                - 1.0 / (3.0 * math.tanh(b * lam)) + self._cosh_over_sinh(a, b, lam)

        if lam < 0:
            raise DomainError(f"lambda must be nonnegative, got {lam}")
        if lam == 0.0:
            return (b - math.pi) / (3.0 * math.pi * b) + 1.0 / b

        # coth(pi l) - coth(b l) = sinh((b - pi) l) / (sinh(pi l) sinh(b l))
        shift = b - math.pi
        if shift == 0.0:
            coth_diff = 0.0
        else:
            coth_diff = math.copysign(1.0, shift) * math.exp(
                log_sinh(abs(shift) * lam) - log_sinh(math.pi * lam) - log_sinh(b * lam))
        return (lam + lam ** 3) * (coth_diff / 3.0 + self._cosh_over_sinh(a, b, lam))

    def wedge_energy_integral(self, cfg: WedgeConfig, spec: Optional[QuadSpec] = None) -> Estimate:
        """Absolute U_hat from the lambda-integral"""
        rate = 2.0 * (cfg.theta - cfg.theta0)
        est = self.quadrature_service.integrate_semi_infinite(
            lambda lam: self.wedge_lambda_integrand(lam, cfg), 0.0, rate, spec, power=3.0)
        return est.scaled(-1.0 / math.pi)

    def wedge_energy_relative(self, cfg: WedgeConfig, theta_ref: float,
                              spec: Optional[QuadSpec] = None) -> Estimate:
        """
        U_hat(theta) - U_hat(theta_ref) as an absolutely convergent lambda-integral

        -(1/pi) int (lambda + lambda^3) [cosh(a lambda) - cosh(a_ref lambda)] / sinh(b lambda)

        Args:
            cfg: geometry at theta
            theta_ref: reference angle, theta0 < theta_ref <= pi
            spec: tolerances

        Returns:
            Estimate of the energy difference
        """
        theta_ref = abs(theta_ref)
        if not cfg.theta0 < theta_ref <= math.pi:
            raise DomainError("theta_ref must exceed theta0 and not exceed pi")

        a = 2.0 * (math.pi - cfg.theta)
        a_ref = 2.0 * (math.pi - theta_ref)
        b = 2.0 * (math.pi - cfg.theta0)
        mean = 0.5 * (a + a_ref)
        half_diff = 0.5 * (a - a_ref)
        if half_diff == 0.0:
            return Estimate.exact(0.0)

        sign = math.copysign(1.0, half_diff)

        def integrand(lam: float) -> float:
            # cosh A - cosh B = 2 sinh((A + B)/2) sinh((A - B)/2)
            log_mag = math.log(2.0) + log_sinh(mean * lam) + log_sinh(abs(half_diff) * lam) \
                - log_sinh(b * lam)
            return sign * (lam + lam ** 3) * math.exp(log_mag)

        rate = 2.0 * (min(cfg.theta, theta_ref) - cfg.theta0)
        est = self.quadrature_service.integrate_semi_infinite(integrand, 0.0, rate, spec, power=3.0)
        logger.debug(f"wedge relative energy {est.value:.12g} +- {est.err:.2e}")
        return est.scaled(-1.0 / math.pi)

    def _cosh_over_sinh(self, a: float, b: float, lam: float) -> float:
        return math.exp(log_cosh(a * lam) - log_sinh(b * lam))


# Global instance
wedge_service = WedgeService()
