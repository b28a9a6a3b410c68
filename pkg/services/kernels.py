"""
Compiled inner loops for the special-function service

The conical series and the Bessel steepest-descent integrands are the hot
spots of every energy evaluation, so they are compiled with numba. The
Bessel integrands are exported as scipy LowLevelCallables so QUADPACK calls
them without re-entering the interpreter.
"""
import math

import numpy as np
from numba import cfunc, carray, njit
from numba.types import CPointer, float64, intc
from scipy import LowLevelCallable

# renormalise the running sums when they pass this size
_RESCALE = 1e250
_LOG_RESCALE = math.log(_RESCALE)

SERIES_OK = 0
SERIES_CAP = 1
SERIES_NEGATIVE = 2


@njit(cache=True)
def conical_series(m, lam, z, max_terms, eps):
    """
    Sum S(z) = sum_k c_k z^k and S'(z) for the negative-order conical series

    The coefficients obey c_{k+1} = c_k (k(k+1) + lam^2 + 1/4) / ((k+1+m)(k+1)),
    so every term is positive. Sums are kept as mantissa * exp(log_scale).

    Returns:
        (s, ds, log_scale, n_terms, status, tail_bound)
    """
    c = lam * lam + 0.25
    term = 1.0
    s = 1.0
    ds = 0.0
    log_scale = 0.0
    k = 0
    tail = 0.0
    while k < max_terms:
        ratio = (k * (k + 1.0) + c) * z / ((k + 1.0 + m) * (k + 1.0))
        term *= ratio
        k += 1
        if term < 0.0:
            return s, ds, log_scale, k, SERIES_NEGATIVE, tail
        s += term
        ds += k * term / z
        if s > _RESCALE:
            s /= _RESCALE
            ds /= _RESCALE
            term /= _RESCALE
            log_scale += _LOG_RESCALE
        # past the turning point every later ratio is bounded by z
        if ratio <= z:
            tail = term * z / (1.0 - z)
            dtail = (k + 1.0) * term / ((1.0 - z) * (1.0 - z))
            if tail <= eps * s and dtail <= eps * ds:
                return s, ds, log_scale, k, SERIES_OK, tail / s
    return s, ds, log_scale, k, SERIES_CAP, term * z / ((1.0 - z) * s)


@njit(cache=True)
def _u_over_sinh(u):
    if u < 1e-8:
        return 1.0
    return 2.0 * u * math.exp(-u) / (-math.expm1(-2.0 * u))


@njit(cache=True)
def _one_minus_u_over_sinh(u):
    if u < 1e-2:
        u2 = u * u
        return u2 / 6.0 - 7.0 * u2 * u2 / 360.0 + 31.0 * u2 * u2 * u2 / 15120.0
    return 1.0 - _u_over_sinh(u)


@njit(cache=True)
def _d_u_over_sinh(u):
    # derivative of u / sinh(u)
    if u < 1e-3:
        return -u / 3.0 + 7.0 * u ** 3 / 90.0
    if u > 350.0:
        return (1.0 - u) * 2.0 * math.exp(-u)
    return (1.0 - u / math.tanh(u)) / math.sinh(u)


@njit(cache=True)
def path_point(d, lam, x, u0):
    """
    Point t = u + i v of the steepest-descent path for K_{i lam}(x), u = u0 + d

    sin v = g = (lam / x) u / sinh(u). The path starts at u0 = 0 when
    lam <= x and at the root of x sinh(u0) = lam u0 otherwise, where g = 1.
    1 - g is formed from d directly, so cos v keeps its relative accuracy
    at the start of the path.

    Returns:
        (sin v, cos v, v)
    """
    if u0 == 0.0:
        one_minus = (x - lam) / x + (lam / x) * _one_minus_u_over_sinh(d)
        g = 1.0 - one_minus
    else:
        # log g = log(u / u0) - (log sinh u - log sinh u0)
        e0 = math.exp(-2.0 * u0)
        log_g = math.log1p(d / u0) - d \
            - math.log1p(e0 * (-math.expm1(-2.0 * d)) / (-math.expm1(-2.0 * u0)))
        g = math.exp(log_g)
        one_minus = -math.expm1(log_g)
    if one_minus <= 0.0:
        return 1.0, 0.0, 0.5 * math.pi
    cv = math.sqrt(one_minus * (1.0 + g))
    return g, cv, math.atan2(g, cv)


@njit(cache=True)
def path_exponent(d, lam, x, u0):
    """Real part of the phase -x cosh t + i lam t along the path"""
    sv, cv, v = path_point(d, lam, x, u0)
    return -x * math.cosh(u0 + d) * cv - lam * v


@njit(cache=True)
def _path_value(w, lam, x, u0, lead, which):
    d = w * w
    u = u0 + d
    sv, cv, v = path_point(d, lam, x, u0)
    expo = -x * math.cosh(u) * cv - lam * v - lead
    if expo < -745.0:
        return 0.0
    weight = math.exp(expo) * 2.0 * w
    if which == 0.0:
        return weight
    # dv/du times cos v, so the square-root singularity at u0 cancels
    dg = (lam / x) * _d_u_over_sinh(u)
    if cv > 0.0:
        real = math.cosh(u) * cv * cv - math.sinh(u) * sv * dg
        return -weight * real / cv
    return 0.0


@njit(cache=True)
def _segment_value(u, lam, x, which):
    phase = lam * u - x * math.sinh(u)
    if which == 0.0:
        return math.cos(phase)
    return math.sinh(u) * math.sin(phase)


@njit(cache=True)
def _phase_level(level, lam, x, a, b):
    # bisection for lam u - x sinh u = level on a monotone bracket (a, b)
    fa = lam * a - x * math.sinh(a) - level
    for _ in range(200):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        fm = lam * mid - x * math.sinh(mid) - level
        if (fm > 0.0) == (fa > 0.0):
            a = mid
            fa = fm
        else:
            b = mid
    return 0.5 * (a + b)


@njit(cache=True)
def segment_breaks(lam, x, u0):
    """
    Breakpoints of the segment integral over (0, u0) on Im t = pi/2

    The phase lam u - x sinh u rises from 0 to its peak at cosh(u) = lam / x
    and falls back to 0 at u0. The returned points are the peak and every
    crossing of pi/2 + k pi, in increasing order, so the cosine and sine
    integrands are each of one sign or a single half-wave between neighbours.
    """
    peak_u = math.acosh(lam / x)
    peak = lam * peak_u - x * math.sinh(peak_u)
    n = 0
    if peak > 0.5 * math.pi:
        n = int((peak - 0.5 * math.pi) / math.pi) + 1
    out = np.empty(2 * n + 1)
    out[n] = peak_u
    for k in range(n):
        level = 0.5 * math.pi + k * math.pi
        out[k] = _phase_level(level, lam, x, 0.0, peak_u)
        out[2 * n - k] = _phase_level(level, lam, x, peak_u, u0)
    return out


@cfunc(float64(intc, CPointer(float64)))
def _path_cfunc(n, xx):
    a = carray(xx, n)
    return _path_value(a[0], a[1], a[2], a[3], a[4], a[5])


@cfunc(float64(intc, CPointer(float64)))
def _segment_cfunc(n, xx):
    a = carray(xx, n)
    return _segment_value(a[0], a[1], a[2], a[3])


path_integrand = LowLevelCallable(_path_cfunc.ctypes)
segment_integrand = LowLevelCallable(_segment_cfunc.ctypes)


__all__ = [
    "conical_series", "path_point", "path_exponent", "path_integrand",
    "segment_integrand", "segment_breaks",
    "SERIES_OK", "SERIES_CAP", "SERIES_NEGATIVE",
]
