"""
Special-function service - conical functions and Bessel functions of imaginary order

Conical functions P^{-m}_{i lam - 1/2}(cos psi) come from the Gauss
hypergeometric series in z = sin^2(psi/2). With nu = i lam - 1/2 the
coefficient numerators are (k - nu)(k + 1 + nu) = k(k+1) + lam^2 + 1/4, real
and positive, so the whole series is summed in real arithmetic without
cancellation. Positive orders follow from P^{-m} = rho_m P^m.

K_{i lam}(x) is integrated along the steepest-descent path of
exp(-x cosh t + i lam t), where the integrand is real and positive.
"""
from dataclasses import dataclass
from typing import Any, Dict, Tuple
import math
import os
import logging

import numpy as np
from scipy.optimize import brentq
from dotenv import load_dotenv

from services import kernels
from services.errors import AccuracyError, DomainError
from services.logsigned import LogSigned, log_sinh
from services.quadrature_service import QuadSpec, quadrature_service

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

MAX_SERIES_TERMS = 1_000_000
MAX_Z = 0.999
# the path integrand is cut where it has fallen by this many e-folds
PATH_CUTOFF = 80.0


@dataclass(frozen=True)
class ConicalValue:
    """Conical function value and its derivative with respect to the angle psi"""

    p: LogSigned
    dp_dpsi: LogSigned
    terms: int = 0
    tail_bound: float = 0.0


class SpecfunService:
    """Service for conical Legendre and imaginary-order Bessel functions"""

    def __init__(self):
        self.series_eps = float(os.getenv("CASIMIR_SERIES_EPS", "1e-16"))
        if not 0 < self.series_eps < 1e-6:
            raise ValueError("CASIMIR_SERIES_EPS must lie in (0, 1e-6)")
        self.quadrature_service = quadrature_service
        self.bessel_spec = QuadSpec(rel_tol=1e-12, abs_tol=1e-300, max_subdivisions=1000)
        # the segment integral oscillates around zero; an absolute floor is meaningful
        self.segment_spec = QuadSpec(rel_tol=1e-12, abs_tol=1e-14, max_subdivisions=1000)

    # ------------------------------------------------------------------
    # Conical functions

    def conical_p_neg(self, m: int, lam: float, psi: float) -> ConicalValue:
        """
        P^{-m}_{i lam - 1/2}(cos psi) and its psi-derivative

        Args:
            m: order, m >= 0
            lam: degree parameter, lam >= 0
            psi: angle in (0, pi)

        Returns:
            ConicalValue, both entries positive
        """
        self._check_order(m, lam)
        if not 0.0 < psi < math.pi:
            raise DomainError(f"psi must lie in (0, pi), got {psi}")

        half = 0.5 * psi
        z = math.sin(half) ** 2
        if z > MAX_Z:
            raise AccuracyError(
                f"conical series argument z={z:.6f} too close to 1",
                diagnostics={"m": m, "lam": lam, "psi": psi, "z": z},
            )

        s, ds, log_scale, n_terms, status, tail = kernels.conical_series(
            m, float(lam), z, MAX_SERIES_TERMS, self.series_eps)
        if status == kernels.SERIES_NEGATIVE:
            raise AccuracyError("conical series produced a negative term",
                                diagnostics={"m": m, "lam": lam, "psi": psi})
        if status == kernels.SERIES_CAP:
            raise AccuracyError(
                f"conical series not converged after {n_terms} terms",
                bound=tail,
                diagnostics={"m": m, "lam": lam, "psi": psi, "z": z},
            )

        # tan(psi/2)^m / m!
        log_pref = m * math.log(math.tan(half)) - math.lgamma(m + 1.0) + log_scale
        sin_psi = math.sin(psi)
        p = LogSigned.from_log(log_pref + math.log(s))
        deriv = m * s / sin_psi + 0.5 * ds * sin_psi
        dp = LogSigned.from_log(log_pref + math.log(deriv)) if deriv > 0 else LogSigned.zero()
        return ConicalValue(p, dp, terms=int(n_terms), tail_bound=float(tail))

    def conical_ratio_rho_log(self, m: int, lam: float) -> LogSigned:
        """rho_m(lam) = 1 / prod_{j<m} (lam^2 + (j + 1/2)^2) in log form"""
        self._check_order(m, lam)
        lam2 = lam * lam
        log_prod = math.fsum(math.log(lam2 + (j + 0.5) ** 2) for j in range(m))
        return LogSigned.from_log(-log_prod)

    def conical_ratio_rho(self, m: int, lam: float) -> float:
        """
        Connection constant with P^{-m}_{i lam - 1/2} = rho_m(lam) P^{m}_{i lam - 1/2}

        Args:
            m: order, m >= 0
            lam: degree parameter, lam >= 0

        Returns:
            rho_m(lam), positive
        """
        return self.conical_ratio_rho_log(m, lam).to_float()

    def conical_p_pos(self, m: int, lam: float, psi: float) -> ConicalValue:
        """P^{m}_{i lam - 1/2}(cos psi) and its psi-derivative"""
        neg = self.conical_p_neg(m, lam, psi)
        rho = self.conical_ratio_rho_log(m, lam)
        return ConicalValue(neg.p / rho, neg.dp_dpsi / rho,
                            terms=neg.terms, tail_bound=neg.tail_bound)

    def mehler_dirichlet(self, lam: float, psi: float) -> LogSigned:
        """
        P_{i lam - 1/2}(cos psi) from the Mehler-Dirichlet integral

            (sqrt(2)/pi) int_0^psi cosh(lam phi) / sqrt(cos phi - cos psi) dphi
        """
        if not 0.0 < psi < math.pi:
            raise DomainError(f"psi must lie in (0, pi), got {psi}")

        def smooth(phi: float) -> float:
            d = psi - phi
            # (psi - phi) / (cos phi - cos psi), regular at phi = psi
            sinc = 0.5 if d < 1e-8 else math.sin(0.5 * d) / d
            ratio = 1.0 / (2.0 * math.sin(0.5 * (psi + phi)) * sinc)
            scaled_cosh = 0.5 * (math.exp(lam * (phi - psi)) + math.exp(-lam * (phi + psi)))
            return scaled_cosh * math.sqrt(ratio)

        spec = QuadSpec(rel_tol=1e-12, abs_tol=1e-300, max_subdivisions=500)
        est = self.quadrature_service.integrate_finite(smooth, 0.0, psi, spec,
                                                       endpoint_powers=(0.0, -0.5))
        return LogSigned.from_float(math.sqrt(2.0) / math.pi * est.value).scale_log(lam * psi)

    def cross_check_conical(self, lam: float, psi: float, tolerance: float = 1e-8) -> Dict[str, Any]:
        """
        Compare the m = 0 series against the Mehler-Dirichlet integral

        Returns:
            Dict with both values (as logs), the relative difference and a
            flag; a discrepancy above tolerance is logged, not resolved
        """
        series = self.conical_p_neg(0, lam, psi).p
        integral = self.mehler_dirichlet(lam, psi)
        rel_diff = abs(math.expm1(integral.log_mag - series.log_mag))
        agree = rel_diff <= tolerance
        if not agree:
            logger.warning(f"conical series and integral differ by {rel_diff:.3e} "
                           f"at lam={lam}, psi={psi}")
        return {
            "lam": lam,
            "psi": psi,
            "series_log": series.log_mag,
            "integral_log": integral.log_mag,
            "rel_diff": rel_diff,
            "agree": agree,
        }

    # ------------------------------------------------------------------
    # Bessel functions of imaginary order

    def bessel_k_imag(self, lam: float, x: float) -> LogSigned:
        """
        K_{i lam}(x) for lam >= 0, x > 0

        Args:
            lam: order parameter
            x: argument

        Returns:
            LogSigned value; magnitudes like exp(-pi lam / 2) stay representable
        """
        k, _, lead = self._bessel_pair(lam, x, derivative=False)
        return LogSigned.from_float(k).scale_log(lead)

    def bessel_k_imag_deriv(self, lam: float, x: float) -> LogSigned:
        """d/dx K_{i lam}(x)"""
        _, dk, lead = self._bessel_pair(lam, x, derivative=True)
        return LogSigned.from_float(dk).scale_log(lead)

    def spherical_k_imag(self, lam: float, x: float) -> LogSigned:
        """k_{i lam - 1/2}(x) = sqrt(2 / (pi x)) K_{i lam}(x)"""
        return self.bessel_k_imag(lam, x).scale_log(0.5 * math.log(2.0 / (math.pi * x)))

    def spherical_k_imag_rderiv(self, lam: float, kappa: float, r: float) -> LogSigned:
        """
        d/dr (r k_{i lam - 1/2}(kappa r)) = sqrt(2 / (pi x)) (K / 2 + x K'), x = kappa r
        """
        if kappa <= 0 or r <= 0:
            raise DomainError(f"kappa and r must be positive, got kappa={kappa}, r={r}")
        x = kappa * r
        k, dk, lead = self._bessel_pair(lam, x, derivative=True)
        return LogSigned.from_float(0.5 * k + x * dk).scale_log(
            lead + 0.5 * math.log(2.0 / (math.pi * x)))

    def spherical_pair(self, lam: float, x: float) -> Tuple[float, float, float]:
        """
        Scaled (k, d) with k_{i lam - 1/2}(x) = k e^{lead} and
        d/dr(r k)|_{r=1, kappa=x} = d e^{lead}

        Returns:
            (k, d, lead)
        """
        k, dk, lead = self._bessel_pair(lam, x, derivative=True)
        norm = math.sqrt(2.0 / (math.pi * x))
        return norm * k, norm * (0.5 * k + x * dk), lead

    def _bessel_pair(self, lam: float, x: float, derivative: bool) -> Tuple[float, float, float]:
        """K e^{-lead}, K' e^{-lead} (0.0 when not requested) and lead"""
        if not x > 0:
            raise DomainError(f"x must be positive, got {x}")
        if lam < 0:
            raise DomainError(f"lambda must be nonnegative, got {lam}")
        lam = float(lam)
        x = float(x)

        if lam <= x:
            u0 = 0.0
            g0 = lam / x
            lead = -x * math.sqrt((1.0 - g0) * (1.0 + g0)) - lam * math.asin(g0)
            breaks = None
        else:
            u0 = self._path_start(lam, x)
            lead = -0.5 * math.pi * lam
            breaks = kernels.segment_breaks(lam, x, u0)

        upper = 1.0
        while kernels.path_exponent(upper * upper, lam, x, u0) - lead > -PATH_CUTOFF:
            upper *= 2.0

        which = (0.0, 1.0) if derivative else (0.0,)
        values = []
        for w in which:
            total = self.quadrature_service.integrate_finite(
                kernels.path_integrand, 0.0, upper, self.bessel_spec,
                args=(lam, x, u0, lead, w))
            if breaks is not None:
                # cos / sin of lam u - x sinh u, split into half-waves
                segment = self.quadrature_service.integrate_finite(
                    kernels.segment_integrand, 0.0, u0, self.segment_spec,
                    args=(lam, x, w), points=breaks)
                total = total + segment
            self._check_bessel(total.value, total.err, lam, x)
            values.append(total.value)

        if not derivative:
            values.append(0.0)
        return values[0], values[1], lead

    def _path_start(self, lam: float, x: float) -> float:
        """Root u0 > 0 of x sinh(u) = lam u, where the path leaves Im t = pi/2"""
        log_target = math.log(lam / x)

        def gap(u: float) -> float:
            if u < 1e-4:
                return u * u / 6.0 - log_target
            return log_sinh(u) - math.log(u) - log_target

        hi = 1.0
        while gap(hi) < 0.0:
            hi *= 2.0
        return brentq(gap, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)

    def _check_bessel(self, value: float, err: float, lam: float, x: float) -> None:
        # near zeros of K in x only an absolute bound is meaningful
        scale = max(abs(value), 1.0 / math.sqrt(1.0 + lam)) if lam > x else abs(value)
        if err > 1e-8 * scale:
            raise AccuracyError(
                f"Bessel K quadrature error {err:.3e} too large at lam={lam}, x={x}",
                bound=err,
                diagnostics={"lam": lam, "x": x, "value": value},
            )

    def _check_order(self, m: int, lam: float) -> None:
        if int(m) != m or m < 0:
            raise DomainError(f"order m must be a nonnegative integer, got {m}")
        if not lam >= 0:
            raise DomainError(f"lambda must be nonnegative, got {lam}")


# Global instance
specfun_service = SpecfunService()
