"""
Cone service - Casimir-Polder energy of a particle near a perfectly conducting cone

The cone has half-opening angle theta0 about the z-axis and the particle sits
at spherical radius r and polar angle theta > theta0. All energies are
dimensionless, U_hat = U r^4 / (alpha hbar c).

Every product of conical functions and T-matrices is formed in LogSigned
arithmetic; only the finished integrand sample is exponentiated.
"""
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Any, Dict, List, Optional, Tuple
import math
import logging

import numpy as np

from services.errors import AccuracyError, DomainError
from services.logsigned import LogSigned, log_cosh, log_tanh
from services.quadrature_service import (
    Estimate, QuadSpec, combine, quadrature_service,
)
from services.specfun_service import specfun_service

logger = logging.getLogger(__name__)

# particles closer than this to the axis are evaluated on the axis
NEAR_AXIS = 1e-3


@dataclass(frozen=True)
class ConeConfig:
    """Cone geometry: half-opening angle, particle polar angle and radius"""

    theta0: float
    theta: float
    r: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.theta0 < math.pi:
            raise DomainError(f"theta0 must lie in (0, pi), got {self.theta0}")
        # degree input may land a few ulps above pi
        if 0.0 < self.theta - math.pi <= 4 * math.ulp(math.pi):
            object.__setattr__(self, "theta", math.pi)
        if not self.theta <= math.pi:
            raise DomainError(f"theta must not exceed pi, got {self.theta}")
        if not self.theta > self.theta0:
            raise DomainError("theta must exceed theta0")
        if not self.r > 0:
            raise DomainError(f"r must be positive, got {self.r}")


@dataclass(frozen=True)
class TMatrixPair:
    tN: float
    tM: float


@dataclass(frozen=True)
class TMatrixLog:
    tN: LogSigned
    tM: LogSigned

    def to_pair(self) -> TMatrixPair:
        return TMatrixPair(tN=self.tN.to_float(), tM=self.tM.to_float())


@dataclass(frozen=True)
class AngularWeights:
    """A = P^m(-cos theta)^2 and B = (d_theta P^m)^2 + m^2 A / sin^2 theta"""

    A: LogSigned
    B: LogSigned


@dataclass(frozen=True)
class EnergyResult:
    """
    Dimensionless energy with error bound and channel breakdown

    u_hat = electric + magnetic + ghost. The electric channel collects the
    T^N terms, the magnetic channel the T^M term.
    """

    u_hat: float
    err: float
    m_max_used: int
    electric: float
    magnetic: float
    ghost: float
    m_terms: Tuple[float, ...] = ()
    converged: bool = True
    method: str = "general"

    @property
    def channel_ratio(self) -> float:
        """(electric + ghost) : magnetic"""
        return (self.electric + self.ghost) / self.magnetic

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["m_terms"] = list(self.m_terms)
        return data


@dataclass(frozen=True, eq=False)
class KappaDensity:
    """Frequency-resolved integrand [electric, magnetic, ghost] with its error bound"""

    channels: np.ndarray
    err: float = 0.0
    converged: bool = True

    @property
    def total(self) -> float:
        return float(np.sum(self.channels))

    def scaled(self, factor: float) -> "KappaDensity":
        return KappaDensity(self.channels * factor, self.err * abs(factor), self.converged)


class ConeService:
    """Service for cone T-matrices, integrands and energies"""

    def __init__(self):
        self.specfun_service = specfun_service
        self.quadrature_service = quadrature_service

    # ------------------------------------------------------------------
    # T-matrices and angular weights

    def cone_tmatrix_log(self, lam: float, m: int, theta0: float) -> TMatrixLog:
        """
        Log-scaled cone T-matrices at (lambda, m, theta0)

        tN = -P^{-m}(cos theta0) / P^{m}(-cos theta0)
        tM = -d_theta0 P^{-m}(cos theta0) / d_theta0 P^{m}(-cos theta0)

        Args:
            lam: lambda >= 0
            m: azimuthal order, only |m| matters
            theta0: half-opening angle

        Returns:
            TMatrixLog with tN < 0 < tM
        """
        m = abs(int(m))
        if not 0.0 < theta0 < math.pi:
            raise DomainError(f"theta0 must lie in (0, pi), got {theta0}")
        num = self.specfun_service.conical_p_neg(m, lam, theta0)
        den = self.specfun_service.conical_p_pos(m, lam, math.pi - theta0)
        if den.p.is_zero or den.dp_dpsi.is_zero:
            raise AccuracyError("T-matrix denominator vanished",
                                diagnostics={"lam": lam, "m": m, "theta0": theta0})
        # d/dtheta0 of P(cos(pi - theta0)) is minus the psi-derivative
        return TMatrixLog(tN=-(num.p / den.p), tM=num.dp_dpsi / den.dp_dpsi)

    def cone_tmatrix(self, lam: float, m: int, theta0: float) -> TMatrixPair:
        """T-matrices as plain reals; AccuracyError when one is not representable"""
        return self.cone_tmatrix_log(lam, m, theta0).to_pair()

    def wronskian_difference(self, lam: float, m: int, theta0: float) -> LogSigned:
        """
        tN - tM from the Wronskian of P^m(z) and P^m(-z):

            (4 cosh(pi lam) / (pi sin theta0)) / d_theta0 [P^m(-cos theta0)^2]
        """
        m = abs(int(m))
        den = self.specfun_service.conical_p_pos(m, lam, math.pi - theta0)
        # d_theta0 [P^2] = -2 P dP/dpsi
        deriv_sq = -(2.0 * den.p * den.dp_dpsi)
        numerator = LogSigned.from_log(
            math.log(4.0) + log_cosh(math.pi * lam) - math.log(math.pi * math.sin(theta0)))
        return numerator / deriv_sq

    def cone_angular_weights(self, lam: float, m: int, theta: float) -> AngularWeights:
        """
        Angular weights A and B at the particle angle

        Args:
            lam: lambda >= 0
            m: azimuthal order
            theta: particle angle in (0, pi)

        Returns:
            AngularWeights in log form
        """
        m = abs(int(m))
        if not 0.0 < theta < math.pi:
            raise DomainError("angular weights need theta in (0, pi); use the on-axis path at theta = pi")
        pos = self.specfun_service.conical_p_pos(m, lam, math.pi - theta)
        a = pos.p ** 2
        b = pos.dp_dpsi ** 2
        if m > 0:
            b = b + a * (m * m / math.sin(theta) ** 2)
        return AngularWeights(A=a, B=b)

    @lru_cache(maxsize=65536)
    def _mode_factors(self, lam: float, m: int, theta0: float,
                      theta: float) -> Tuple[LogSigned, LogSigned, LogSigned, LogSigned]:
        tmat = self.cone_tmatrix_log(lam, m, theta0)
        weights = self.cone_angular_weights(lam, m, theta)
        return tmat.tN, tmat.tM, weights.A, weights.B

    # ------------------------------------------------------------------
    # Lambda-integrands

    def cone_lambda_channels(self, lam: float, m: int, cfg: ConeConfig) -> np.ndarray:
        """
        Electric and magnetic parts of the lambda-integrand at order m

            electric = lam sech tanh * tN (2 (lam^2 + 1/4) A + B)
            magnetic = -lam sech tanh * tM B

        Returns:
            array [electric, magnetic]
        """
        if lam < 0:
            raise DomainError(f"lambda must be nonnegative, got {lam}")
        if lam == 0.0:
            return np.zeros(2)
        tN, tM, a, b = self._mode_factors(float(lam), abs(int(m)), cfg.theta0, cfg.theta)
        shift = lam * lam + 0.25
        pref = LogSigned.from_log(
            math.log(lam) - log_cosh(math.pi * lam) + log_tanh(math.pi * lam))
        electric = pref * tN * (2.0 * shift * a + b)
        magnetic = -(pref * tM * b)
        return np.array([self._sample(electric, lam, m, cfg), self._sample(magnetic, lam, m, cfg)])

    def cone_lambda_integrand(self, lam: float, m: int, cfg: ConeConfig) -> float:
        """
        lam sech(pi lam) tanh(pi lam) [2 tN (lam^2 + 1/4) A + (tN - tM) B]

        The envelope decays like exp(-2 lam (theta - theta0)).
        """
        return float(np.sum(self.cone_lambda_channels(lam, m, cfg)))

    def on_axis_lambda_channels(self, lam: float, theta0: float) -> np.ndarray:
        """
        Electric and magnetic parts of the on-axis integrand

            electric = lam (lam^2 + 1/4) sech tanh [2 tN(0) + (lam^2 + 1/4) tN(1)]
            magnetic = -lam (lam^2 + 1/4)^2 sech tanh tM(1)
        """
        if lam == 0.0:
            return np.zeros(2)
        shift = lam * lam + 0.25
        t0 = self.cone_tmatrix_log(lam, 0, theta0)
        t1 = self.cone_tmatrix_log(lam, 1, theta0)
        pref = LogSigned.from_log(
            math.log(lam * shift) - log_cosh(math.pi * lam) + log_tanh(math.pi * lam))
        electric = pref * (2.0 * t0.tN + shift * t1.tN)
        magnetic = -(pref * shift * t1.tM)
        return np.array([electric.to_float(allow_underflow=True),
                         magnetic.to_float(allow_underflow=True)])

    # ------------------------------------------------------------------
    # Ghost mode

    def ghost_term(self, theta: float, theta0: float) -> float:
        """Closed-form ghost contribution -(1/pi) sin^2 theta0 / (cos theta - cos theta0)^2"""
        gap = math.cos(theta) - math.cos(theta0)
        if theta == theta0 or gap == 0.0:
            raise DomainError("ghost term is singular at theta = theta0")
        return -math.sin(theta0) ** 2 / (math.pi * gap * gap)

    def ghost_ratio(self, theta: float, theta0: float) -> float:
        """q = (1 + cos theta)(1 - cos theta0) / ((1 - cos theta)(1 + cos theta0))"""
        return (math.tan(0.5 * theta0) / math.tan(0.5 * theta)) ** 2

    def ghost_series(self, theta: float, theta0: float,
                     spec: Optional[QuadSpec] = None) -> Estimate:
        """Ghost term rebuilt from -(4 / (pi sin^2 theta)) sum_{m>=1} m q^m"""
        if not 0.0 < theta < math.pi:
            raise DomainError("ghost series needs theta in (0, pi)")
        q = self.ghost_ratio(theta, theta0)
        if not q < 1.0:
            raise DomainError("ghost series diverges unless theta > theta0")
        series = self.quadrature_service.sum_truncated(lambda m: m * q ** m, q, spec, start=1)
        return series.scaled(-4.0 / (math.pi * math.sin(theta) ** 2))

    # ------------------------------------------------------------------
    # Energies

    def is_near_axis(self, theta: float) -> bool:
        return theta > math.pi - NEAR_AXIS

    def cone_energy(self, cfg: ConeConfig, spec: Optional[QuadSpec] = None,
                    m_max: Optional[int] = None) -> EnergyResult:
        """
        Zero-temperature energy from the lambda-integrals summed over m

        U_hat = (1/8) {sum'_m int_0^inf integrand d lambda + ghost}, with the
        m = 0 term counted once and m >= 1 twice.

        Args:
            cfg: cone geometry
            spec: tolerances
            m_max: sum exactly m = 0..m_max instead of the adaptive truncation

        Returns:
            EnergyResult
        """
        spec = spec or self.quadrature_service.default_spec
        if self.is_near_axis(cfg.theta):
            if cfg.theta < math.pi:
                logger.warning(f"theta={cfg.theta!r} is within {NEAR_AXIS} of the axis, "
                               "evaluating on the axis")
            return self.cone_energy_on_axis(cfg.r, cfg.theta0, spec)

        q = self.ghost_ratio(cfg.theta, cfg.theta0)
        rate = 2.0 * (cfg.theta - cfg.theta0)
        channels: List[List[Estimate]] = []
        raw: List[float] = []

        def m_term(m: int) -> Estimate:
            sub_spec = spec
            if raw:
                floor = 0.1 * spec.rel_tol * abs(raw[0])
                sub_spec = QuadSpec(rel_tol=spec.rel_tol, abs_tol=max(spec.abs_tol, floor),
                                    max_subdivisions=spec.max_subdivisions)
            parts = self.quadrature_service.integrate_semi_infinite_vector(
                lambda lam: self.cone_lambda_channels(lam, m, cfg), 0.0, rate, sub_spec,
                onset=float(m), power=3.0)
            weight = 1.0 if m == 0 else 2.0
            parts = [p.scaled(weight) for p in parts]
            channels.append(parts)
            raw.append(parts[0].value + parts[1].value)
            return Estimate(raw[-1], parts[0].err + parts[1].err, parts[0].evaluations,
                            parts[0].converged and parts[1].converged)

        if m_max is None:
            series = self.quadrature_service.sum_truncated(m_term, q, spec, min_terms=3)
            err = series.err
            converged = series.converged
        else:
            if m_max < 0:
                raise DomainError("m_max must be nonnegative")
            terms = [m_term(m) for m in range(m_max + 1)]
            total = combine(terms)
            tail = abs(terms[-1].value) * q / (1.0 - q)
            err = total.err + tail
            converged = total.converged

        electric = combine([c[0] for c in channels]).value
        magnetic = combine([c[1] for c in channels]).value
        ghost = self.ghost_term(cfg.theta, cfg.theta0)
        result = EnergyResult(
            u_hat=(electric + magnetic + ghost) / 8.0,
            err=err / 8.0,
            m_max_used=len(channels) - 1,
            electric=electric / 8.0,
            magnetic=magnetic / 8.0,
            ghost=ghost / 8.0,
            m_terms=tuple(raw),
            converged=converged,
        )
        if not converged:
            logger.warning(f"cone energy at theta0={cfg.theta0}, theta={cfg.theta} "
                           f"not converged (err {result.err:.3e})")
        logger.debug(f"cone energy {result.u_hat:.12g} with m_max={result.m_max_used}")
        return result

    def cone_energy_on_axis(self, r: float, theta0: float,
                            spec: Optional[QuadSpec] = None) -> EnergyResult:
        """
        Energy of a particle on the cone axis, theta = pi

        Only m = 0 and m = +-1 contribute:

            U_hat = (1/8) {int lam (lam^2 + 1/4) sech tanh
                           [2 tN(0) + (lam^2 + 1/4)(tN(1) - tM(1))] d lambda
                           - tan^2(theta0 / 2) / pi}
        """
        ConeConfig(theta0=theta0, theta=math.pi, r=r)
        spec = spec or self.quadrature_service.default_spec
        rate = 2.0 * (math.pi - theta0)
        parts = self.quadrature_service.integrate_semi_infinite_vector(
            lambda lam: self.on_axis_lambda_channels(lam, theta0), 0.0, rate, spec, power=5.0)
        ghost = -math.tan(0.5 * theta0) ** 2 / math.pi
        electric, magnetic = parts[0].value, parts[1].value
        converged = parts[0].converged and parts[1].converged
        if not converged:
            logger.warning(f"on-axis energy at theta0={theta0} not converged")
        return EnergyResult(
            u_hat=(electric + magnetic + ghost) / 8.0,
            err=(parts[0].err + parts[1].err) / 8.0,
            m_max_used=1,
            electric=electric / 8.0,
            magnetic=magnetic / 8.0,
            ghost=ghost / 8.0,
            m_terms=(electric + magnetic,),
            converged=converged,
            method="on_axis",
        )

    def scaled_energy(self, cfg: ConeConfig, spec: Optional[QuadSpec] = None) -> float:
        """U_hat sin^4(theta - theta0), the energy in units of the surface distance"""
        return self.cone_energy(cfg, spec).u_hat * math.sin(cfg.theta - cfg.theta0) ** 4

    def surface_distance(self, cfg: ConeConfig) -> float:
        """Distance from the particle to the nearest point of the cone"""
        gap = cfg.theta - cfg.theta0
        if gap >= 0.5 * math.pi:
            return cfg.r
        return cfg.r * math.sin(gap)

    # ------------------------------------------------------------------
    # Frequency-resolved integrand

    def cone_kappa_density(self, kappa: float, cfg: ConeConfig,
                           spec: Optional[QuadSpec] = None) -> KappaDensity:
        """
        Electric, magnetic and ghost parts of the kappa-integrand with an error bound

        With x = kappa r, k = k_{i lam - 1/2}(x) and D = d/dr (r k) the
        integrand is

            r (x / 2 pi) {int d lam lam tanh(pi lam) sum'_m
                [B (tN D^2 - tM x^2 k^2) / (lam^2 + 1/4) + tN (lam^2 + 1/4) A k^2]
              - sin^2 theta0 / (cos theta - cos theta0)^2 e^{-2x}}

        The lambda-integral is done before kappa, which keeps kappa -> 0 finite.
        The m-sum truncation bound of every lambda sample is integrated
        alongside the channels and added to the error.

        Returns:
            KappaDensity with channels [electric, magnetic, ghost]
        """
        if not kappa > 0:
            raise DomainError(f"kappa must be positive, got {kappa}")
        if self.is_near_axis(cfg.theta):
            return self.cone_kappa_density_on_axis(kappa, cfg.r, cfg.theta0, spec)

        spec = spec or self.quadrature_service.default_spec
        x = kappa * cfg.r
        q = self.ghost_ratio(cfg.theta, cfg.theta0)
        rate = 2.0 * (cfg.theta - cfg.theta0)
        unconverged: List[float] = []

        def lam_channels(lam: float) -> np.ndarray:
            if lam == 0.0:
                return np.zeros(3)
            k2, d2 = self._radial_squares(lam, x)
            shift = lam * lam + 0.25
            parts: List[Tuple[float, float]] = []

            def m_term(m: int) -> float:
                tN, tM, a, b = self._mode_factors(float(lam), m, cfg.theta0, cfg.theta)
                weight = 1.0 if m == 0 else 2.0
                electric = tN * (b * d2 / shift + shift * a * k2)
                magnetic = -(tM * b * (x * x) * k2 / shift)
                parts.append((weight * electric.to_float(allow_underflow=True),
                              weight * magnetic.to_float(allow_underflow=True)))
                return parts[-1][0] + parts[-1][1]

            series = self.quadrature_service.sum_truncated(m_term, q, spec, min_terms=3)
            if not series.converged:
                unconverged.append(lam)
            pref = lam * math.tanh(math.pi * lam)
            electric, magnetic = np.sum(np.array(parts), axis=0)
            return pref * np.array([electric, magnetic, series.err])

        modes = self.quadrature_service.integrate_semi_infinite_vector(
            lam_channels, 0.0, rate, spec, onset=x, power=3.0)
        converged = modes[0].converged and modes[1].converged and not unconverged
        if unconverged:
            logger.warning(f"m-sum not converged at {len(unconverged)} lambda samples "
                           f"(kappa={kappa}, first at lambda={unconverged[0]:.6g})")
        elif not converged:
            logger.warning(f"lambda-integral at kappa={kappa} not converged")
        gap = math.cos(cfg.theta) - math.cos(cfg.theta0)
        ghost = -math.sin(cfg.theta0) ** 2 / (gap * gap) * math.exp(-2.0 * x)
        norm = cfg.r * x / (2.0 * math.pi)
        return KappaDensity(
            channels=norm * np.array([modes[0].value, modes[1].value, ghost]),
            err=norm * (modes[0].err + modes[1].err + abs(modes[2].value)),
            converged=converged,
        )

    def cone_kappa_channels(self, kappa: float, cfg: ConeConfig,
                            spec: Optional[QuadSpec] = None) -> np.ndarray:
        """Channels [electric, magnetic, ghost] of cone_kappa_density"""
        return self.cone_kappa_density(kappa, cfg, spec).channels

    def cone_kappa_integrand(self, kappa: float, cfg: ConeConfig,
                             spec: Optional[QuadSpec] = None) -> float:
        """
        Integrand over the imaginary frequency kappa, normalised so that
        int_0^inf cone_kappa_integrand d kappa = cone_energy(cfg).u_hat
        """
        return self.cone_kappa_density(kappa, cfg, spec).total

    def cone_kappa_density_on_axis(self, kappa: float, r: float, theta0: float,
                                   spec: Optional[QuadSpec] = None) -> KappaDensity:
        """
        On-axis kappa-integrand split into [electric, magnetic, ghost]:

            r (x / 2 pi) {int lam (lam^2 + 1/4) tanh(pi lam)
                [(tN(0) - x^2 tM(1)) k^2 + tN(1) D^2] d lam - tan^2(theta0 / 2) e^{-2x}}
        """
        if not kappa > 0:
            raise DomainError(f"kappa must be positive, got {kappa}")
        ConeConfig(theta0=theta0, theta=math.pi, r=r)
        spec = spec or self.quadrature_service.default_spec
        x = kappa * r
        rate = 2.0 * (math.pi - theta0)

        def lam_channels(lam: float) -> np.ndarray:
            if lam == 0.0:
                return np.zeros(2)
            k2, d2 = self._radial_squares(lam, x)
            t0 = self.cone_tmatrix_log(lam, 0, theta0)
            t1 = self.cone_tmatrix_log(lam, 1, theta0)
            electric = t0.tN * k2 + t1.tN * d2
            magnetic = -(t1.tM * (x * x) * k2)
            pref = lam * (lam * lam + 0.25) * math.tanh(math.pi * lam)
            return pref * np.array([electric.to_float(allow_underflow=True),
                                    magnetic.to_float(allow_underflow=True)])

        modes = self.quadrature_service.integrate_semi_infinite_vector(
            lam_channels, 0.0, rate, spec, onset=x, power=3.0)
        ghost = -math.tan(0.5 * theta0) ** 2 * math.exp(-2.0 * x)
        norm = r * x / (2.0 * math.pi)
        return KappaDensity(
            channels=norm * np.array([modes[0].value, modes[1].value, ghost]),
            err=norm * (modes[0].err + modes[1].err),
            converged=modes[0].converged and modes[1].converged,
        )

    def cone_kappa_channels_on_axis(self, kappa: float, r: float, theta0: float,
                                    spec: Optional[QuadSpec] = None) -> np.ndarray:
        return self.cone_kappa_density_on_axis(kappa, r, theta0, spec).channels

    def cone_kappa_integrand_on_axis(self, kappa: float, r: float, theta0: float,
                                     spec: Optional[QuadSpec] = None) -> float:
        return self.cone_kappa_density_on_axis(kappa, r, theta0, spec).total

    def _radial_squares(self, lam: float, x: float) -> Tuple[LogSigned, LogSigned]:
        """k_{i lam - 1/2}(x)^2 and (d/dr (r k))^2 at r = 1"""
        k, d, lead = self.specfun_service.spherical_pair(lam, x)
        return (LogSigned.from_float(k * k).scale_log(2.0 * lead),
                LogSigned.from_float(d * d).scale_log(2.0 * lead))

    def _sample(self, value: LogSigned, lam: float, m: int, cfg: ConeConfig) -> float:
        try:
            return value.to_float(allow_underflow=True)
        except AccuracyError as e:
            raise AccuracyError(
                "integrand overflow; theta is too close to theta0 for the requested tolerance",
                diagnostics={"lam": lam, "m": m, "theta0": cfg.theta0, "theta": cfg.theta,
                             **e.diagnostics},
            ) from e


# Global instance
cone_service = ConeService()
