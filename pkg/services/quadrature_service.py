"""
Quadrature service - adaptive integration and truncated sums with error estimates
"""
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Union
import math
import os
import logging

import numpy as np
from scipy.integrate import quad, quad_vec
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

TAIL_ENVELOPE = "envelope"
TAIL_FIXED = "fixed"
# windows appended past the envelope cutoff before a tail is reported unconverged
MAX_EXTENSIONS = 6


@dataclass(frozen=True)
class QuadSpec:
    """Tolerance, subdivision budget and tail policy for integrals and sums"""

    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 200
    tail_policy: str = TAIL_ENVELOPE
    upper_bound: Optional[float] = None

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("rel_tol and abs_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")
        if self.tail_policy not in (TAIL_ENVELOPE, TAIL_FIXED):
            raise ValueError(f"unknown tail policy: {self.tail_policy}")
        if self.tail_policy == TAIL_FIXED and not (self.upper_bound and self.upper_bound > 0):
            raise ValueError("fixed tail policy needs a positive upper_bound")

    def tolerance(self, value: float) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))

    def halved(self) -> "QuadSpec":
        return replace(self, rel_tol=self.rel_tol / 2, abs_tol=self.abs_tol / 2)


@dataclass(frozen=True)
class Estimate:
    """Numerical value with an error bound"""

    value: float
    err: float
    evaluations: int
    converged: bool

    def __add__(self, other: "Estimate") -> "Estimate":
        return Estimate(self.value + other.value, self.err + other.err,
                        self.evaluations + other.evaluations,
                        self.converged and other.converged)

    def scaled(self, factor: float) -> "Estimate":
        return Estimate(self.value * factor, self.err * abs(factor),
                        self.evaluations, self.converged)

    @classmethod
    def exact(cls, value: float) -> "Estimate":
        return cls(value, 0.0, 0, True)


@dataclass(frozen=True)
class SeriesEstimate(Estimate):
    """Estimate of a truncated sum, with the last index used and the terms"""

    last_index: int = 0
    terms: tuple = ()


class QuadratureService:
    """Service for adaptive integrals and truncated series"""

    def __init__(self):
        self.default_spec = QuadSpec(
            rel_tol=float(os.getenv("CASIMIR_REL_TOL", "1e-8")),
            abs_tol=float(os.getenv("CASIMIR_ABS_TOL", "1e-12")),
            max_subdivisions=int(os.getenv("CASIMIR_MAX_SUBDIVISIONS", "200")),
        )

    def integrate_finite(self, f: Callable[[float], float], a: float, b: float,
                         spec: Optional[QuadSpec] = None, args: tuple = (),
                         endpoint_powers: Optional[tuple] = None,
                         points: Optional[Sequence[float]] = None) -> Estimate:
        """
        Adaptive Gauss-Kronrod integral of f over (a, b)

        The rule never samples the endpoints, so integrable endpoint
        singularities are allowed.

        Args:
            f: integrand (a Python callable or a scipy LowLevelCallable)
            a, b: limits with a < b
            spec: tolerances
            args: extra arguments passed through to f
            endpoint_powers: (alpha, beta) to integrate f(x) (x-a)^alpha (b-x)^beta
                with the algebraic-weight rule
            points: interior breakpoints, e.g. sign changes of an oscillating
                integrand; the subdivision budget grows with their number

        Returns:
            Estimate with converged=False when the subdivision budget ran out
        """
        spec = spec or self.default_spec
        if not a < b:
            raise ValueError(f"integration limits must satisfy a < b, got ({a}, {b})")
        if endpoint_powers and points is not None and len(points):
            raise ValueError("endpoint_powers and points cannot be combined")

        limit = spec.max_subdivisions
        if endpoint_powers:
            extra = {"weight": "alg", "wvar": endpoint_powers}
        elif points is not None and len(points):
            inner = sorted(float(p) for p in points if a < p < b)
            extra = {"points": inner} if inner else {}
            limit += 2 * len(inner) + 2
        else:
            extra = {}
        out = quad(f, a, b, args=args, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                   limit=limit, full_output=1, **extra)
        value, err, info = out[0], out[1], out[2]
        converged = len(out) == 3 and err <= spec.tolerance(value)
        if not converged:
            message = out[3] if len(out) > 3 else "error above tolerance"
            logger.debug(f"quad on ({a:.6g}, {b:.6g}) not converged: {message}")
        return Estimate(float(value), float(err), int(info["neval"]), converged)

    def integrate_finite_vector(self, f: Callable[[float], np.ndarray], a: float, b: float,
                                spec: Optional[QuadSpec] = None) -> List[Estimate]:
        """
        Adaptive integral of a vector-valued integrand, one Estimate per component

        The error bound is shared between the components.
        """
        spec = spec or self.default_spec
        if not a < b:
            raise ValueError(f"integration limits must satisfy a < b, got ({a}, {b})")

        value, err, info = quad_vec(f, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                                    limit=spec.max_subdivisions, quadrature="gk15",
                                    norm="max", full_output=True)
        value = np.atleast_1d(value)
        scale = float(np.max(np.abs(value))) if value.size else 0.0
        converged = bool(info.success) and err <= spec.tolerance(scale)
        return [Estimate(float(v), float(err), int(info.neval), converged) for v in value]

    def cutoff(self, a: float, decay_rate_hint: float, spec: QuadSpec,
               onset: Optional[float] = None, power: float = 0.0) -> float:
        """
        Upper limit where an s^power e^{-rate s} envelope drops below the tolerance

        s is measured from the onset; the power term moves the limit out by
        (power / rate) log(s), solved by a short fixed-point iteration.
        """
        if spec.tail_policy == TAIL_FIXED:
            return spec.upper_bound
        if decay_rate_hint <= 0:
            raise ValueError("decay_rate_hint must be positive")
        if power < 0:
            raise ValueError("power must be nonnegative")
        start = max(a, onset if onset is not None else a)
        target = math.log(1.0 / min(spec.abs_tol, spec.rel_tol)) + 4.0
        span = target / decay_rate_hint
        for _ in range(8):
            span = (target + power * math.log(max(start + span, 1.0))) / decay_rate_hint
        return start + span

    def integrate_semi_infinite(self, f: Callable[[float], float], a: float,
                                decay_rate_hint: float, spec: Optional[QuadSpec] = None,
                                onset: Optional[float] = None, args: tuple = (),
                                power: float = 0.0) -> Estimate:
        """
        Integral of f over (a, infinity) for an exponentially decaying integrand

        Integrates up to the envelope cutoff X, then over windows (X, 2X - a),
        (2X - a, 3X - 2a), ... until a window is within tolerance. Under the
        fixed tail policy only the first window is checked.

        Args:
            f: integrand
            a: lower limit
            decay_rate_hint: rate of the e^{-rate x} envelope
            spec: tolerances
            onset: point beyond which the envelope holds (defaults to a)
            power: degree of a polynomial prefactor of the envelope

        Returns:
            Estimate including the verified extension
        """
        spec = spec or self.default_spec
        upper = self.cutoff(a, decay_rate_hint, spec, onset, power)
        if upper <= a:
            raise ValueError("cutoff must lie above the lower limit")
        main = self.integrate_finite(f, a, upper, spec, args=args)
        windows = self._windows(a, upper, spec)
        for lo, hi in windows:
            tail = self.integrate_finite(f, lo, hi, spec, args=args)
            main = main + tail
            if abs(tail.value) <= spec.tolerance(main.value):
                return main
        logger.warning(f"tail beyond {windows[-1][0]:.6g} is {tail.value:.3e}, above tolerance")
        return Estimate(main.value, main.err, main.evaluations, False)

    def integrate_semi_infinite_vector(self, f: Callable[[float], np.ndarray], a: float,
                                       decay_rate_hint: float, spec: Optional[QuadSpec] = None,
                                       onset: Optional[float] = None,
                                       power: float = 0.0) -> List[Estimate]:
        """Vector version of integrate_semi_infinite, one Estimate per component"""
        spec = spec or self.default_spec
        upper = self.cutoff(a, decay_rate_hint, spec, onset, power)
        if upper <= a:
            raise ValueError("cutoff must lie above the lower limit")
        main = self.integrate_finite_vector(f, a, upper, spec)
        windows = self._windows(a, upper, spec)
        for lo, hi in windows:
            tail = self.integrate_finite_vector(f, lo, hi, spec)
            main = [head + rest for head, rest in zip(main, tail)]
            # same max-norm as the vector error bound
            scale = max((abs(total.value) for total in main), default=0.0)
            if max((abs(rest.value) for rest in tail), default=0.0) <= spec.tolerance(scale):
                return main
        logger.warning(f"vector tail beyond {windows[-1][0]:.6g} above tolerance")
        return [Estimate(total.value, total.err, total.evaluations, False) for total in main]

    def _windows(self, a: float, upper: float, spec: QuadSpec) -> List[tuple]:
        width = upper - a
        count = 1 if spec.tail_policy == TAIL_FIXED else MAX_EXTENSIONS
        return [(upper + k * width, upper + (k + 1) * width) for k in range(count)]

    def sum_truncated(self, term: Callable[[int], Union[float, Estimate]], ratio_hint: float,
                      spec: Optional[QuadSpec] = None, start: int = 0,
                      max_terms: int = 100000, stall_limit: int = 50,
                      min_terms: int = 2) -> SeriesEstimate:
        """
        Sum term(n) for n = start, start+1, ... until the geometric tail is small

        The tail after term t is bounded by |t| r / (1 - r), with r the larger
        of ratio_hint and the observed ratio of the last two terms.

        Args:
            term: returns a float or an Estimate (whose error is accumulated)
            ratio_hint: asymptotic bound on |term(n+1) / term(n)|, in (0, 1)
            spec: tolerances
            start: first index
            max_terms: hard cap on the number of terms
            stall_limit: number of consecutive non-decreasing terms tolerated
            min_terms: terms always summed before testing the tail

        Returns:
            SeriesEstimate; converged=False when the terms stop decreasing
        """
        spec = spec or self.default_spec
        if not 0.0 <= ratio_hint < 1.0:
            raise ValueError(f"ratio_hint must lie in [0, 1), got {ratio_hint}")

        total = 0.0
        err = 0.0
        evaluations = 0
        inner_converged = True
        previous = None
        stalled = 0
        terms: List[float] = []
        n = start
        for n in range(start, start + max_terms):
            t = term(n)
            if isinstance(t, Estimate):
                err += t.err
                inner_converged = inner_converged and t.converged
                t = t.value
            total += t
            terms.append(t)
            evaluations += 1

            ratio = ratio_hint
            if previous is not None and previous != 0.0:
                observed = abs(t / previous)
                if observed >= 1.0:
                    stalled += 1
                    if stalled > stall_limit:
                        logger.warning(f"series terms stopped decreasing at n={n}")
                        return SeriesEstimate(total, err + abs(t), evaluations, False,
                                              last_index=n, terms=tuple(terms))
                else:
                    stalled = 0
                    ratio = max(ratio_hint, observed)
            previous = t

            if evaluations >= min_terms and ratio < 1.0:
                bound = abs(t) * ratio / (1.0 - ratio)
                if bound <= spec.tolerance(total):
                    return SeriesEstimate(total, err + bound, evaluations, inner_converged,
                                          last_index=n, terms=tuple(terms))

        logger.warning(f"series not converged after {max_terms} terms")
        return SeriesEstimate(total, err + abs(previous or 0.0), evaluations, False,
                              last_index=n, terms=tuple(terms))


def combine(estimates: Sequence[Estimate]) -> Estimate:
    """Sum of estimates with accumulated error"""
    total = Estimate.exact(0.0)
    for estimate in estimates:
        total = total + estimate
    return total


# Global instance
quadrature_service = QuadratureService()
