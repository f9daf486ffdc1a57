"""Scalar and array arithmetic behind the Taylor engine.

Every kernel exposes the same small surface: conversion of exact rationals
into kernel scalars, array constructors, elementary functions, and a
hashable ``key`` used to memoize expansion points.  Coefficient arrays are
plain numpy arrays (float64 or object dtype) except for the float interval
kernel, which uses :class:`IntervalArray`.
"""

from __future__ import annotations

import math
from fractions import Fraction

import gmpy2
import mpmath
import numpy as np
from mpmath import libmp
from mpmath.ctx_mp import MPContext

from .errors import DivisionByZero, DomainError, UnsupportedOp

_NEG = -np.inf
_POS = np.inf


def _down(x):
    return np.nextafter(x, _NEG)


def _up(x):
    return np.nextafter(x, _POS)


class IntervalArray:
    """Array of closed float64 intervals with outward rounding.

    Each arithmetic result is rounded to nearest by the hardware and then
    pushed one ulp outward, which keeps the enclosure sound without needing
    control over the FPU rounding mode.  Results that are exactly zero
    because an operand is exactly zero are kept at zero so that padding
    stays sparse.
    """

    __slots__ = ("lo", "hi")
    __array_priority__ = 1000

    def __init__(self, lo, hi=None):
        lo = np.array(lo, dtype=np.float64)
        self.lo = lo
        self.hi = lo.copy() if hi is None else np.array(hi, dtype=np.float64)

    @property
    def shape(self):
        return self.lo.shape

    @property
    def ndim(self):
        return self.lo.ndim

    @property
    def size(self):
        return self.lo.size

    def __len__(self):
        return len(self.lo)

    def __getitem__(self, idx):
        return IntervalArray(self.lo[idx], self.hi[idx])

    def __setitem__(self, idx, value):
        value = _as_interval(value)
        self.lo[idx] = value.lo
        self.hi[idx] = value.hi

    def copy(self):
        return IntervalArray(self.lo, self.hi)

    def reshape(self, *shape):
        return IntervalArray(self.lo.reshape(*shape), self.hi.reshape(*shape))

    def sum(self):
        """Enclosure of the sum of all entries (a scalar interval)."""
        if not self.lo.size:
            return IntervalArray(0.0)
        with np.errstate(invalid="ignore", over="ignore"):
            lo, hi = np.sum(self.lo), np.sum(self.hi)
            # rounding error of a float sum is at most n * eps * sum|x|
            slack = _up(self.lo.size * 2.0**-52 * np.sum(np.maximum(np.abs(self.lo), np.abs(self.hi))))
        if slack == 0:
            return IntervalArray(lo, hi)
        return IntervalArray(_down(lo - slack), _up(hi + slack))

    def is_point_zero(self):
        return (self.lo == 0) & (self.hi == 0)

    def __add__(self, other):
        other = _as_interval(other)
        lo = _down(self.lo + other.lo)
        hi = _up(self.hi + other.hi)
        zero = self.is_point_zero() & other.is_point_zero()
        if zero.any():
            lo = np.where(zero, 0.0, lo)
            hi = np.where(zero, 0.0, hi)
        return IntervalArray(lo, hi)

    __radd__ = __add__

    def __neg__(self):
        return IntervalArray(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-_as_interval(other))

    def __rsub__(self, other):
        return _as_interval(other) + (-self)

    def __mul__(self, other):
        other = _as_interval(other)
        with np.errstate(invalid="ignore", over="ignore", under="ignore"):
            p = np.stack(np.broadcast_arrays(self.lo * other.lo, self.lo * other.hi,
                                             self.hi * other.lo, self.hi * other.hi))
        # 0 * inf only arises from an unbounded endpoint meeting a zero one
        p = np.where(np.isnan(p), 0.0, p)
        lo = _down(p.min(axis=0))
        hi = _up(p.max(axis=0))
        zero = self.is_point_zero() | other.is_point_zero()
        if zero.any():
            lo = np.where(zero, 0.0, lo)
            hi = np.where(zero, 0.0, hi)
        return IntervalArray(lo, hi)

    __rmul__ = __mul__

    def reciprocal(self):
        if np.any((self.lo <= 0) & (self.hi >= 0)):
            raise DivisionByZero("interval divisor contains zero")
        with np.errstate(over="ignore", divide="ignore"):
            return IntervalArray(_down(1.0 / self.hi), _up(1.0 / self.lo))

    def __truediv__(self, other):
        return self * _as_interval(other).reciprocal()

    def __rtruediv__(self, other):
        return _as_interval(other) * self.reciprocal()

    def __repr__(self):
        if self.ndim == 0:
            return f"[{float(self.lo)!r}, {float(self.hi)!r}]"
        return f"IntervalArray(lo={self.lo!r}, hi={self.hi!r})"


def _as_interval(value):
    if isinstance(value, IntervalArray):
        return value
    if isinstance(value, Fraction):
        raise TypeError("convert rationals through the kernel first")
    return IntervalArray(value)


class Kernel:
    """Common behaviour; subclasses fill in the scalar type."""

    name = "abstract"
    exact = False
    is_interval = False
    tolerance = 0.0

    def const(self, q):
        raise NotImplementedError

    def zeros(self, shape):
        raise NotImplementedError

    def vector(self, values):
        out = self.zeros((len(values),))
        for i, v in enumerate(values):
            out[i] = v
        return out

    def consts(self, values):
        return self.vector([self.const(v) for v in values])

    def arange(self, start: int, stop: int):
        """Constants start..stop-1 as a kernel vector; cached, do not mutate."""
        cache = self.__dict__.setdefault("_arange_cache", {})
        key = (start, stop)
        if key not in cache:
            cache[key] = self.consts(range(start, stop))
        return cache[key]

    def zero(self):
        return self.const(0)

    def one(self):
        return self.const(1)

    def ipow(self, a, n: int):
        """Natural power by repeated squaring."""
        if n < 0:
            return self.div(self.one(), self.ipow(a, -n))
        result = self.one()
        base = a
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def div(self, a, b):
        if self.is_zero(b):
            raise DivisionByZero("division by zero")
        return a / b

    def powers(self, a, n: int):
        """Vector [1, a, a^2, ..., a^n]."""
        vals = [self.one()]
        for _ in range(n):
            vals.append(vals[-1] * a)
        return self.vector(vals)

    def is_zero(self, a) -> bool:
        return a == 0

    def positive(self, a) -> bool:
        return a > 0

    def key(self, a):
        return a

    def to_float(self, a) -> float:
        return float(a)

    def bounds(self, a):
        return a, a

    def nonzero_mask(self, arr):
        return arr != 0

    def exp(self, a):
        raise NotImplementedError

    def log(self, a):
        raise NotImplementedError

    def pow(self, a, r):
        r = Fraction(r)
        if r.denominator == 1:
            if r < 0 and self.is_zero(a):
                raise DivisionByZero("zero to a negative power")
            return self.ipow(a, int(r))
        if not self.positive(a):
            raise DomainError("non-integer power of a non-positive number")
        return self.exp(self.log(a) * self.const(r))

    def describe(self) -> dict:
        return {"name": self.name}

    def __repr__(self):
        return f"<kernel {self.name}>"


class Float64Kernel(Kernel):
    name = "float64"
    tolerance = 10 * np.finfo(np.float64).eps

    def const(self, q):
        if isinstance(q, int):
            return float(q)
        return float(Fraction(q))

    def zeros(self, shape):
        return np.zeros(shape, dtype=np.float64)

    def vector(self, values):
        return np.array(values, dtype=np.float64)

    def exp(self, a):
        with np.errstate(over="ignore"):
            return float(np.exp(a))

    def log(self, a):
        if not a > 0:
            raise DomainError(f"log of non-positive value {a!r}")
        return math.log(a)

    def pow(self, a, r):
        r = Fraction(r)
        if r.denominator == 1:
            return super().pow(a, r)
        if not a > 0:
            raise DomainError("non-integer power of a non-positive number")
        return a ** float(r)


class BigFloatKernel(Kernel):
    exact = False

    def __init__(self, precision: int = 256):
        if precision < 53:
            raise ValueError("precision must be at least 53 bits")
        self.precision = precision
        self.ctx = MPContext()
        self.ctx.prec = precision
        self.name = f"bigfloat{precision}"
        self.tolerance = 10.0 * 2.0 ** (-precision)
        self._zero = self.ctx.mpf(0)

    def const(self, q):
        q = Fraction(q)
        return self.ctx.mpf(q.numerator) / q.denominator

    def zeros(self, shape):
        return np.full(shape, self._zero, dtype=object)

    def exp(self, a):
        return self.ctx.exp(a)

    def log(self, a):
        if not a > 0:
            raise DomainError(f"log of non-positive value {a}")
        return self.ctx.log(a)

    def pow(self, a, r):
        r = Fraction(r)
        if r.denominator == 1:
            return super().pow(a, r)
        if not a > 0:
            raise DomainError("non-integer power of a non-positive number")
        return self.ctx.power(a, self.const(r))

    def describe(self):
        return {"name": "bigfloat", "precision_bits": self.precision}


class RationalKernel(Kernel):
    name = "rational"
    exact = True

    def __init__(self):
        self._zero = gmpy2.mpq(0)

    def const(self, q):
        q = Fraction(q)
        return gmpy2.mpq(q.numerator, q.denominator)

    def zeros(self, shape):
        return np.full(shape, self._zero, dtype=object)

    def exp(self, a):
        if a == 0:
            return gmpy2.mpq(1)
        raise UnsupportedOp("exp of a nonzero rational is irrational")

    def log(self, a):
        if a == 1:
            return gmpy2.mpq(0)
        raise UnsupportedOp("log of a rational other than 1 is irrational")

    def pow(self, a, r):
        r = Fraction(r)
        if r.denominator == 1:
            return super().pow(a, r)
        if a < 0:
            raise DomainError("non-integer power of a negative number")
        num, num_exact = gmpy2.iroot(gmpy2.mpz(a.numerator), r.denominator)
        den, den_exact = gmpy2.iroot(gmpy2.mpz(a.denominator), r.denominator)
        if not (num_exact and den_exact):
            raise UnsupportedOp(f"{a}^{r} is not rational")
        return self.ipow(gmpy2.mpq(num, den), r.numerator)

    def to_fraction(self, a) -> Fraction:
        return Fraction(int(a.numerator), int(a.denominator))


class IntervalFloatKernel(Kernel):
    """Interval(Float64): float endpoints, outward rounded."""

    name = "interval-float64"
    is_interval = True

    def __init__(self):
        self._iv = type(mpmath.iv)()
        self._iv.prec = 53

    def const(self, q):
        q = Fraction(q)
        f = float(q)
        if Fraction(f) == q:
            return IntervalArray(f)
        lo = f if Fraction(f) < q else float(_down(f))
        hi = f if Fraction(f) > q else float(_up(f))
        return IntervalArray(lo, hi)

    def zeros(self, shape):
        return IntervalArray(np.zeros(shape))

    def vector(self, values):
        return IntervalArray([float(v.lo) for v in values], [float(v.hi) for v in values])

    def _from_iv(self, x):
        lo_raw, hi_raw = x._mpi_
        lo = libmp.to_float(lo_raw, rnd=libmp.round_floor)
        hi = libmp.to_float(hi_raw, rnd=libmp.round_ceiling)
        return IntervalArray(float(_down(lo)), float(_up(hi)))

    def _to_iv(self, a):
        return self._iv.mpf([float(a.lo), float(a.hi)])

    def exp(self, a):
        return self._from_iv(self._iv.exp(self._to_iv(a)))

    def log(self, a):
        if not float(a.lo) > 0:
            raise DomainError("log of an interval reaching zero or below")
        return self._from_iv(self._iv.log(self._to_iv(a)))

    def pow(self, a, r):
        r = Fraction(r)
        if r.denominator == 1:
            return super().pow(a, r)
        if not float(a.lo) > 0:
            raise DomainError("non-integer power of an interval reaching zero")
        exponent = self._iv.mpf(r.numerator) / r.denominator
        return self._from_iv(self._to_iv(a) ** exponent)

    def div(self, a, b):
        return a / b

    def is_zero(self, a):
        return float(a.lo) == 0 and float(a.hi) == 0

    def positive(self, a):
        return float(a.lo) > 0

    def key(self, a):
        return (float(a.lo), float(a.hi))

    def to_float(self, a):
        return 0.5 * (float(a.lo) + float(a.hi))

    def bounds(self, a):
        return float(a.lo), float(a.hi)

    def nonzero_mask(self, arr):
        return ~arr.is_point_zero()

    def interval(self, lo, hi):
        return IntervalArray(float(lo), float(hi))

    def describe(self):
        return {"name": "interval", "inner": "float64"}


class IntervalBigKernel(Kernel):
    """Interval(BigFloat) on top of mpmath's interval context."""

    is_interval = True

    def __init__(self, precision: int = 256):
        self.precision = precision
        self.ctx = type(mpmath.iv)()
        self.ctx.prec = precision
        self.name = f"interval-bigfloat{precision}"
        self._zero = self.ctx.mpf(0)
        self._real = MPContext()
        self._real.prec = precision + 64

    def const(self, q):
        q = Fraction(q)
        return self.ctx.mpf(q.numerator) / q.denominator

    def zeros(self, shape):
        return np.full(shape, self._zero, dtype=object)

    def exp(self, a):
        return self.ctx.exp(a)

    def log(self, a):
        if not self.positive(a):
            raise DomainError("log of an interval reaching zero or below")
        return self.ctx.log(a)

    def pow(self, a, r):
        r = Fraction(r)
        if r.denominator == 1:
            return super().pow(a, r)
        if not self.positive(a):
            raise DomainError("non-integer power of an interval reaching zero")
        return a ** (self.ctx.mpf(r.numerator) / r.denominator)

    def div(self, a, b):
        if not (self.positive(b) or self.positive(-b)):
            raise DivisionByZero("interval divisor contains zero")
        return a / b

    def _ends(self, a):
        lo_raw, hi_raw = a._mpi_
        return self._real.make_mpf(lo_raw), self._real.make_mpf(hi_raw)

    def is_zero(self, a):
        lo, hi = self._ends(a)
        return lo == 0 and hi == 0

    def positive(self, a):
        return self._ends(a)[0] > 0

    def key(self, a):
        return a._mpi_

    def to_float(self, a):
        lo, hi = self._ends(a)
        return float((lo + hi) / 2)

    def bounds(self, a):
        return self._ends(a)

    def nonzero_mask(self, arr):
        flat = [not self.is_zero(v) for v in arr.ravel()]
        return np.array(flat, dtype=bool).reshape(arr.shape)

    def interval(self, lo, hi):
        return self.ctx.mpf([lo, hi])

    def describe(self):
        return {"name": "interval", "inner": "bigfloat", "precision_bits": self.precision}


def make_kernel(kind: str = "float64", precision: int | None = None) -> Kernel:
    """Factory used by the CLI and tests.

    ``kind`` is one of float64, bigfloat, rational, interval.  For
    interval, any explicit precision selects the BigFloat inner kernel;
    even at 53 bits that differs from the Float64 inner kernel by having
    an unbounded exponent range.
    """
    if kind == "float64":
        return Float64Kernel()
    if kind == "bigfloat":
        return BigFloatKernel(precision or 256)
    if kind == "rational":
        return RationalKernel()
    if kind == "interval":
        if precision is None:
            return IntervalFloatKernel()
        return IntervalBigKernel(precision)
    raise ValueError(f"unknown kernel {kind!r}")


def widen_report(kernel: Kernel, value) -> dict:
    """Midpoint, radius and count of correct significant digits."""
    lo, hi = kernel.bounds(value)
    lo_f, hi_f = float(lo), float(hi)
    if kernel.is_interval and isinstance(lo, (float, np.floating)):
        mid = 0.5 * lo_f + 0.5 * hi_f
        radius = max(hi_f - mid, mid - lo_f)
    else:
        mid_x = (lo + hi) / 2
        mid = float(mid_x)
        radius = float(max(hi - mid_x, mid_x - lo))
    if radius == 0:
        digits = math.inf
    elif mid == 0 or not math.isfinite(radius):
        digits = 0
    else:
        digits = max(0, math.floor(-math.log10(radius / abs(mid))))
    return {"midpoint": mid, "radius": radius, "significant_digits": digits}
