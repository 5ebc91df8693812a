"""Exact scaled-integer rationals.

Every distance, gap and error term in the simulator is a ``ScaledReal``:
an arbitrary-precision integer mantissa over a positive integer scale.
All arithmetic is exact; nothing in the core ever rounds silently.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd

# Mantissas are gcd-reduced only once they get this large (lazy
# normalization keeps mixed-denominator walks cheap).
_REDUCE_BITS = 4096


class ScaledReal:
    """Immutable exact rational ``mantissa / scale`` with ``scale >= 1``.

    Equality and ordering are value-based: 1/2 == 2/4 regardless of how
    the value was produced.
    """

    __slots__ = ("m", "s")

    def __init__(self, mantissa: int, scale: int = 1):
        if scale == 0:
            raise ZeroDivisionError("scale must be nonzero")
        if scale < 0:
            mantissa, scale = -mantissa, -scale
        if mantissa.bit_length() + scale.bit_length() > _REDUCE_BITS:
            g = gcd(mantissa, scale)
            if g > 1:
                mantissa //= g
                scale //= g
        object.__setattr__(self, "m", mantissa)
        object.__setattr__(self, "s", scale)

    def __setattr__(self, *a):
        raise AttributeError("ScaledReal is immutable")

    # -- constructors -------------------------------------------------

    @staticmethod
    def from_fraction(fr: Fraction) -> "ScaledReal":
        return ScaledReal(fr.numerator, fr.denominator)

    @staticmethod
    def parse(text: str) -> "ScaledReal":
        """Parse "p/q", "p" or a decimal literal like "0.6" exactly."""
        return ScaledReal.from_fraction(Fraction(text.strip()))

    # -- conversions ---------------------------------------------------

    def as_fraction(self) -> Fraction:
        return Fraction(self.m, self.s)

    def __float__(self) -> float:
        return self.m / self.s if self.s.bit_length() < 900 else float(self.as_fraction())

    def to_decimal(self, digits: int = 12) -> str:
        """Decimal string with explicit precision (round toward zero)."""
        neg = self.m < 0
        m = -self.m if neg else self.m
        whole, rem = divmod(m, self.s)
        frac = rem * 10**digits // self.s
        body = f"{whole}.{frac:0{digits}d}" if digits else str(whole)
        return "-" + body if neg else body

    def __repr__(self):
        return f"ScaledReal({self.m}, {self.s})"

    def __str__(self):
        return f"{self.m}/{self.s}" if self.s != 1 else str(self.m)

    # -- arithmetic ----------------------------------------------------

    @staticmethod
    def _coerce(other):
        if isinstance(other, ScaledReal):
            return other
        if isinstance(other, int):
            return ScaledReal(other)
        if isinstance(other, Fraction):
            return ScaledReal(other.numerator, other.denominator)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if self.s == o.s:
            return ScaledReal(self.m + o.m, self.s)
        return ScaledReal(self.m * o.s + o.m * self.s, self.s * o.s)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if self.s == o.s:
            return ScaledReal(self.m - o.m, self.s)
        return ScaledReal(self.m * o.s - o.m * self.s, self.s * o.s)

    def __rsub__(self, other):
        return self._coerce(other).__sub__(self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return ScaledReal(self.m * o.m, self.s * o.s)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o.m == 0:
            raise ZeroDivisionError("division by zero ScaledReal")
        return ScaledReal(self.m * o.s, self.s * o.m)

    def __rtruediv__(self, other):
        return self._coerce(other).__truediv__(self)

    def __neg__(self):
        return ScaledReal(-self.m, self.s)

    def __abs__(self):
        return ScaledReal(abs(self.m), self.s)

    # -- comparisons (value-based) ------------------------------------

    def _cmp(self, other) -> int:
        o = self._coerce(other)
        lhs, rhs = self.m * o.s, o.m * self.s
        return (lhs > rhs) - (lhs < rhs)

    def __eq__(self, other):
        if not isinstance(other, (ScaledReal, int, Fraction)):
            return NotImplemented
        return self._cmp(other) == 0

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __hash__(self):
        g = gcd(self.m, self.s)
        return hash((self.m // g, self.s // g)) if g > 1 else hash((self.m, self.s))

    def __bool__(self):
        return self.m != 0

    # -- integer extractions -------------------------------------------

    def floor(self) -> int:
        return self.m // self.s

    def ceil(self) -> int:
        return -((-self.m) // self.s)

    def sign(self) -> int:
        return (self.m > 0) - (self.m < 0)


ZERO = ScaledReal(0)
ONE = ScaledReal(1)


def sr(value) -> ScaledReal:
    """Coerce int / Fraction / str / ScaledReal to ScaledReal."""
    if isinstance(value, ScaledReal):
        return value
    if isinstance(value, int):
        return ScaledReal(value)
    if isinstance(value, Fraction):
        return ScaledReal(value.numerator, value.denominator)
    if isinstance(value, str):
        return ScaledReal.parse(value)
    raise TypeError(f"cannot coerce {type(value)!r} to ScaledReal")


def round_nearest(a: ScaledReal) -> int:
    """Nearest integer to ``a``; exact halves round toward +inf."""
    return (2 * a.m + a.s) // (2 * a.s)


def floor_scaled(a: ScaledReal, n: int) -> int:
    """Exact floor(a * n) for a positive integer multiplier ``n``."""
    return (a.m * n) // a.s


def mod_reduce(a: ScaledReal, modulus: ScaledReal) -> ScaledReal:
    """Exact representative of ``a`` in [0, modulus); modulus > 0."""
    if modulus.m <= 0:
        raise ValueError("modulus must be positive")
    q = (a.m * modulus.s) // (a.s * modulus.m)
    return a - modulus * q
