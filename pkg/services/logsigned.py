"""
Mantissa plus binary-exponent numbers for quantities far outside the float range
"""
from dataclasses import dataclass
import math

from services.errors import AccuracyError

# exp() is exact-to-rounding and finite below this magnitude
MAX_LOG = 700.0
LN2 = math.log(2.0)


@dataclass(frozen=True)
class LogSigned:
    """
    Real number mantissa * 2**exponent

    The mantissa is 0 or has magnitude in [0.5, 1), as math.frexp returns
    it; the exponent is an unbounded int. Values inside the float range
    convert back exactly.
    """

    mantissa: float
    exponent: int = 0

    def __post_init__(self):
        if not math.isfinite(self.mantissa):
            raise ValueError(f"mantissa must be finite, got {self.mantissa}")
        m, e = math.frexp(self.mantissa)
        object.__setattr__(self, "mantissa", m)
        object.__setattr__(self, "exponent", int(self.exponent) + e if m != 0.0 else 0)

    @classmethod
    def zero(cls) -> "LogSigned":
        return cls(0.0)

    @classmethod
    def one(cls) -> "LogSigned":
        return cls(1.0)

    @classmethod
    def from_float(cls, value: float) -> "LogSigned":
        if not math.isfinite(value):
            raise ValueError(f"cannot represent {value}")
        return cls(float(value))

    @classmethod
    def from_log(cls, log_mag: float, sign: int = 1) -> "LogSigned":
        """sign * exp(log_mag)"""
        if sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {sign}")
        if math.isnan(log_mag):
            raise ValueError("log_mag is NaN")
        if sign == 0 or log_mag == -math.inf:
            return cls.zero()
        if log_mag == math.inf:
            raise ValueError("cannot represent an infinite magnitude")
        k = math.floor(log_mag / LN2)
        return cls(sign * math.exp(log_mag - k * LN2), k)

    @property
    def sign(self) -> int:
        if self.mantissa == 0.0:
            return 0
        return 1 if self.mantissa > 0 else -1

    @property
    def log_mag(self) -> float:
        """Natural log of |value|; -inf for zero"""
        if self.mantissa == 0.0:
            return -math.inf
        return math.log(abs(self.mantissa)) + self.exponent * LN2

    @property
    def is_zero(self) -> bool:
        return self.mantissa == 0.0

    def to_float(self, allow_underflow: bool = False) -> float:
        """
        Convert to a plain float

        Args:
            allow_underflow: return 0.0 instead of raising when the value is
                too small to represent

        Returns:
            The value as a float
        """
        if self.mantissa == 0.0:
            return 0.0
        log_mag = self.log_mag
        if abs(log_mag) >= MAX_LOG:
            if allow_underflow and log_mag < 0:
                return 0.0
            raise AccuracyError(
                f"log-magnitude {log_mag:.6g} is outside the float range",
                diagnostics={"log_mag": log_mag, "sign": self.sign},
            )
        return math.ldexp(self.mantissa, self.exponent)

    def scale_log(self, log_factor: float) -> "LogSigned":
        """Multiply by exp(log_factor)"""
        if self.mantissa == 0.0:
            return self
        k = math.floor(log_factor / LN2)
        return LogSigned(self.mantissa * math.exp(log_factor - k * LN2), self.exponent + k)

    def __neg__(self) -> "LogSigned":
        return LogSigned(-self.mantissa, self.exponent)

    def __abs__(self) -> "LogSigned":
        return LogSigned(abs(self.mantissa), self.exponent)

    def __mul__(self, other) -> "LogSigned":
        other = _coerce(other)
        return LogSigned(self.mantissa * other.mantissa, self.exponent + other.exponent)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "LogSigned":
        other = _coerce(other)
        if other.mantissa == 0.0:
            raise ZeroDivisionError("LogSigned division by zero")
        return LogSigned(self.mantissa / other.mantissa, self.exponent - other.exponent)

    def __rtruediv__(self, other) -> "LogSigned":
        return _coerce(other) / self

    def __pow__(self, n: int) -> "LogSigned":
        if not isinstance(n, int):
            raise TypeError("LogSigned supports integer powers only")
        if n < 0:
            return LogSigned.one() / (self ** -n)
        result = LogSigned.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __add__(self, other) -> "LogSigned":
        other = _coerce(other)
        if other.mantissa == 0.0:
            return self
        if self.mantissa == 0.0:
            return other
        big, small = (self, other) if self.exponent >= other.exponent else (other, self)
        shift = small.exponent - big.exponent
        # beyond this shift the smaller term is below half an ulp
        if shift < -60:
            return big
        return LogSigned(big.mantissa + math.ldexp(small.mantissa, shift), big.exponent)

    __radd__ = __add__

    def __sub__(self, other) -> "LogSigned":
        return self + (-_coerce(other))

    def __rsub__(self, other) -> "LogSigned":
        return _coerce(other) + (-self)

    def __float__(self) -> float:
        return self.to_float()


def _coerce(value) -> LogSigned:
    if isinstance(value, LogSigned):
        return value
    return LogSigned.from_float(float(value))


def log_sinh(y: float) -> float:
    """log(sinh y) for y > 0 without overflow"""
    return y + math.log(-math.expm1(-2.0 * y)) - math.log(2.0)


def log_cosh(y: float) -> float:
    """log(cosh y) without overflow"""
    y = abs(y)
    return y + math.log1p(math.exp(-2.0 * y)) - math.log(2.0)


def log_tanh(y: float) -> float:
    """log(tanh y) for y > 0"""
    e = math.exp(-2.0 * y)
    return math.log(-math.expm1(-2.0 * y)) - math.log1p(e)
