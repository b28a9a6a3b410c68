"""
Thermal service - finite-temperature energy from the Matsubara sum over kappa_n
"""
from dataclasses import dataclass
from typing import List, Optional
import math
import os
import logging

import numpy as np
from dotenv import load_dotenv

from services.cone_service import ConeConfig, EnergyResult, KappaDensity, cone_service
from services.errors import AccuracyError, DomainError
from services.quadrature_service import Estimate, QuadSpec, combine, quadrature_service

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

STATIC = "static"
SINGLE_OSCILLATOR = "single_oscillator"


@dataclass(frozen=True)
class PolarizabilityModel:
    """
    Imaginary-frequency polarizability relative to its static value

    The single-oscillator model is alpha(i kappa) = alpha0 / (1 + (kappa / omega0)^2),
    with omega0 in units of c / r.
    """

    kind: str = STATIC
    alpha0: float = 1.0
    omega0: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (STATIC, SINGLE_OSCILLATOR):
            raise DomainError(f"unknown polarizability model: {self.kind}")
        if not self.alpha0 > 0:
            raise DomainError("alpha0 must be positive")
        if self.kind == SINGLE_OSCILLATOR and not (self.omega0 and self.omega0 > 0):
            raise DomainError("single-oscillator model needs a positive omega0")

    def relative(self, x: float) -> float:
        """alpha(i kappa) / alpha0 at x = kappa r"""
        if self.kind == STATIC:
            return 1.0
        return 1.0 / (1.0 + (x / self.omega0) ** 2)


@dataclass(frozen=True)
class ThermalConfig:
    """tau = 2 pi k_B T r / (hbar c); n_max fixes the number of frequencies"""

    tau: float
    model: PolarizabilityModel = PolarizabilityModel()
    n_max: Optional[int] = None

    def __post_init__(self):
        if not self.tau >= 0:
            raise DomainError(f"tau must be nonnegative, got {self.tau}")
        if self.n_max is not None and self.n_max < 0:
            raise DomainError("n_max must be nonnegative")


class ThermalService:
    """Service for Matsubara sums over the frequency-resolved cone integrand"""

    def __init__(self):
        self.cone_service = cone_service
        self.quadrature_service = quadrature_service
        self.zero_step = float(os.getenv("CASIMIR_ZERO_FREQUENCY_STEP", "1e-2"))
        if not 0 < self.zero_step < 1:
            raise ValueError("CASIMIR_ZERO_FREQUENCY_STEP must lie in (0, 1)")
        # largest tolerated |f(h) - f(h/4)| / |f(0)| in the n = 0 extrapolation
        self.max_spread = 0.1

    def density_estimate(self, x: float, cfg: ConeConfig,
                         spec: Optional[QuadSpec] = None) -> KappaDensity:
        """Energy density per unit x = kappa r with its error bound"""
        return self.cone_service.cone_kappa_density(x / cfg.r, cfg, spec).scaled(1.0 / cfg.r)

    def density_channels(self, x: float, cfg: ConeConfig,
                         spec: Optional[QuadSpec] = None) -> np.ndarray:
        """Energy density per unit x = kappa r, split into [electric, magnetic, ghost]"""
        return self.density_estimate(x, cfg, spec).channels

    def zero_frequency_density(self, cfg: ConeConfig,
                               spec: Optional[QuadSpec] = None) -> KappaDensity:
        """
        Density at x = 0 by Richardson extrapolation from x = h, h/2, h/4

        The error bound carries the sample errors through the extrapolation
        weights (1, 6, 8) / 3.

        Raises:
            AccuracyError: when the samples spread too far to trust the limit
        """
        h = self.zero_step
        samples = [self.density_estimate(step, cfg, spec) for step in (h, h / 2.0, h / 4.0)]
        limit = (samples[0].channels - 6.0 * samples[1].channels + 8.0 * samples[2].channels) / 3.0
        total = float(np.sum(limit))
        spread = abs(samples[0].total - samples[2].total)
        diagnostics = {
            "h": h,
            "samples": [s.total for s in samples],
            "limit": total,
            "spread": spread,
        }
        if not math.isfinite(total) or spread > self.max_spread * abs(total):
            raise AccuracyError("zero-frequency extrapolation is unstable",
                                bound=spread, diagnostics=diagnostics)
        if spread > 1e-3 * abs(total):
            logger.warning(f"zero-frequency samples spread by {spread:.3e} around {total:.6g}")
        err = (samples[0].err + 6.0 * samples[1].err + 8.0 * samples[2].err) / 3.0
        return KappaDensity(limit, err, all(s.converged for s in samples))

    def zero_frequency_channels(self, cfg: ConeConfig,
                                spec: Optional[QuadSpec] = None) -> np.ndarray:
        return self.zero_frequency_density(cfg, spec).channels

    def thermal_energy(self, cfg: ConeConfig, th: ThermalConfig,
                       spec: Optional[QuadSpec] = None) -> EnergyResult:
        """
        Finite-temperature energy

            U_hat(tau) = tau sum'_{n>=0} (alpha(i kappa_n) / alpha0) f(n tau)

        with f the density per unit kappa r and the n = 0 term weighted 1/2.

        Args:
            cfg: cone geometry
            th: temperature, polarizability model and optional n_max
            spec: tolerances

        Returns:
            EnergyResult; m_terms holds the weighted frequency terms and
            m_max_used the last frequency index
        """
        spec = spec or self.quadrature_service.default_spec
        if th.tau == 0.0:
            return self._zero_temperature(cfg, th.model, spec)

        tau = th.tau
        distance = self.cone_service.surface_distance(cfg) / cfg.r
        ratio = math.exp(-2.0 * tau * distance)

        zero = self.zero_frequency_density(cfg, spec).scaled(0.5 * th.model.relative(0.0))
        channels: List[np.ndarray] = [zero.channels]

        def term(n: int) -> Estimate:
            x = n * tau
            value = self.density_estimate(x, cfg, spec).scaled(th.model.relative(x))
            channels.append(value.channels)
            return Estimate(value.total, value.err, 1, value.converged)

        if th.n_max is None:
            series = self.quadrature_service.sum_truncated(term, ratio, spec, start=1)
            err, converged = series.err, series.converged
        else:
            terms = [term(n) for n in range(1, th.n_max + 1)]
            total = combine(terms)
            last = abs(terms[-1].value) if terms else abs(zero.total)
            err = total.err + last * ratio / (1.0 - ratio)
            converged = total.converged
        err += zero.err
        converged = converged and zero.converged

        total = tau * np.sum(np.array(channels), axis=0)
        result = EnergyResult(
            u_hat=float(np.sum(total)),
            err=tau * err,
            m_max_used=len(channels) - 1,
            electric=float(total[0]),
            magnetic=float(total[1]),
            ghost=float(total[2]),
            m_terms=tuple(tau * float(np.sum(c)) for c in channels),
            converged=converged,
            method="matsubara",
        )
        if not converged:
            logger.warning(f"thermal energy at tau={tau} not converged (err {result.err:.3e})")
        logger.info(f"thermal energy at tau={tau}: {result.u_hat:.10g} "
                    f"from {len(channels)} frequencies")
        return result

    def _zero_temperature(self, cfg: ConeConfig, model: PolarizabilityModel,
                          spec: QuadSpec) -> EnergyResult:
        if model.kind == STATIC:
            return self.cone_service.cone_energy(cfg, spec)

        distance = self.cone_service.surface_distance(cfg) / cfg.r
        inner: List[KappaDensity] = []

        def density(x: float) -> np.ndarray:
            if x == 0.0:
                return np.zeros(4)
            sample = self.density_estimate(x, cfg, spec).scaled(model.relative(x))
            inner.append(sample)
            return np.append(sample.channels, sample.err)

        parts = self.quadrature_service.integrate_semi_infinite_vector(
            density, 0.0, 2.0 * distance, spec, power=2.0)
        total = sum(p.value for p in parts[:3])
        err = sum(p.err for p in parts[:3]) + abs(parts[3].value)
        converged = all(p.converged for p in parts) and all(s.converged for s in inner)
        return EnergyResult(
            u_hat=total,
            err=err,
            m_max_used=0,
            electric=parts[0].value,
            magnetic=parts[1].value,
            ghost=parts[2].value,
            converged=converged,
            method="dispersive",
        )


# Global instance
thermal_service = ThermalService()
