"""Multivariate truncated Taylor polynomials.

A :class:`TaylorPoly` stores the Taylor coefficients ``c_a = d^a G(w) / a!``
of a function around a base point ``w`` in a dense array with one axis per
program variable.  The array may be shorter than ``degree + 1`` along an
axis; missing coefficients are exactly zero.  That is how low-degree
factors (``x_k``, ``p x + 1 - p``) stay cheap to multiply with.  Entries
whose total degree exceeds ``degree`` are kept at zero.
"""

from __future__ import annotations

import contextvars
import itertools
import functools
import math
from collections import Counter
from contextlib import contextmanager
from fractions import Fraction

import numpy as np

from .errors import DomainError, GfError
from .kernels import Float64Kernel, IntervalArray, Kernel

_COUNTERS: contextvars.ContextVar = contextvars.ContextVar("taylor_counters", default=None)

DEFAULT_KERNEL = Float64Kernel()


class BaseMismatch(GfError, ValueError):
    pass


@contextmanager
def count_operations():
    """Collect operation counters for the code run inside the block."""
    counter = Counter()
    token = _COUNTERS.set(counter)
    try:
        yield counter
    finally:
        _COUNTERS.reset(token)


def _tick(name, coeff_ops=0):
    counter = _COUNTERS.get()
    if counter is not None:
        counter[name] += 1
        counter[name + "_coeff_ops"] += coeff_ops
        counter["coeff_ops"] += coeff_ops


@functools.lru_cache(maxsize=16384)
def _degree_mask(shape, degree):
    total = np.zeros(shape, dtype=np.int64)
    for axis, n in enumerate(shape):
        idx = [1] * len(shape)
        idx[axis] = n
        total = total + np.arange(n).reshape(idx)
    return total > degree


def _apply_degree(kernel, coeffs, degree):
    if sum(s - 1 for s in coeffs.shape) <= degree:
        return coeffs
    mask = _degree_mask(coeffs.shape, degree)
    coeffs[mask] = kernel.zero()
    return coeffs


def _fit(kernel, coeffs, shape):
    """Pad with zeros or truncate to exactly ``shape``."""
    if coeffs.shape == shape:
        return coeffs
    common = tuple(slice(0, min(a, b)) for a, b in zip(coeffs.shape, shape))
    if all(a >= b for a, b in zip(coeffs.shape, shape)):
        return coeffs[common].copy()
    out = kernel.zeros(shape)
    out[common] = coeffs[common]
    return out


def _axis_vector(vec, axis, ndim):
    shape = [1] * ndim
    shape[axis] = len(vec)
    return vec.reshape(*shape)


def _take(coeffs, axis, start, stop=None):
    idx = [slice(None)] * coeffs.ndim
    idx[axis] = slice(start, stop)
    return coeffs[tuple(idx)]


def _index(axis, ndim, sl):
    idx = [slice(None)] * ndim
    idx[axis] = sl
    return tuple(idx)


class TaylorPoly:
    __slots__ = ("kernel", "base", "coeffs", "degree")

    def __init__(self, kernel: Kernel, base, coeffs, degree: int):
        base = tuple(base)
        if len(base) != coeffs.ndim:
            raise ValueError("base point length does not match the number of variables")
        if degree < 0:
            raise ValueError("negative truncation degree")
        self.kernel = kernel
        self.base = base
        self.coeffs = coeffs
        self.degree = degree

    @property
    def nvars(self):
        return len(self.base)

    @property
    def shape(self):
        return self.coeffs.shape

    @property
    def caps(self):
        return tuple(s - 1 for s in self.coeffs.shape)

    def effective_axes(self):
        return [i for i, s in enumerate(self.coeffs.shape) if s > 1]

    def value(self):
        return self.coeffs[(0,) * self.nvars]

    def with_coeffs(self, coeffs, base=None, degree=None):
        degree = self.degree if degree is None else degree
        coeffs = _apply_degree(self.kernel, coeffs, degree)
        return TaylorPoly(self.kernel, self.base if base is None else base, coeffs, degree)

    def copy(self):
        return TaylorPoly(self.kernel, self.base, self.coeffs.copy(), self.degree)

    # operator sugar for tests and small formulas
    def __add__(self, other):
        return add(self, _lift(self, other))

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, scale(self.kernel.const(-1), _lift(self, other)))

    def __rsub__(self, other):
        return add(_lift(self, other), scale(self.kernel.const(-1), self))

    def __mul__(self, other):
        if isinstance(other, TaylorPoly):
            return mul(self, other)
        return scale(_kconst(self.kernel, other), self)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self.kernel.const(-1), self)

    def __repr__(self):
        return f"TaylorPoly(base={self.base}, degree={self.degree}, shape={self.shape})"


def _kconst(kernel, c):
    if isinstance(c, (int, Fraction)):
        return kernel.const(c)
    return c


def _lift(p, other):
    if isinstance(other, TaylorPoly):
        return other
    return constant(p.kernel, _kconst(p.kernel, other), p.base, p.degree)


def constant(kernel, c, base, degree):
    coeffs = kernel.zeros((1,) * len(base))
    coeffs[(0,) * len(base)] = c
    return TaylorPoly(kernel, base, coeffs, degree)


def variable(kernel, i, base, degree):
    n = len(base)
    if not 0 <= i < n:
        raise IndexError(f"variable index {i} out of range for {n} variables")
    shape = [1] * n
    shape[i] = 2 if degree >= 1 else 1
    coeffs = kernel.zeros(tuple(shape))
    coeffs[(0,) * n] = base[i]
    if degree >= 1:
        idx = [0] * n
        idx[i] = 1
        coeffs[tuple(idx)] = kernel.one()
    return TaylorPoly(kernel, base, coeffs, degree)


def univariate(kernel, values, axis, base, degree):
    """Embed a 1-D coefficient vector as a polynomial along ``axis``."""
    n = len(base)
    values = values[: degree + 1]
    shape = [1] * n
    shape[axis] = len(values)
    return TaylorPoly(kernel, base, values.reshape(*shape), degree)


def const(c, nvars, D, kernel=None, base=None):
    kernel = kernel or DEFAULT_KERNEL
    base = base if base is not None else (kernel.zero(),) * nvars
    return constant(kernel, _kconst(kernel, c), base, D)


def var(i, w_i, nvars, D, kernel=None, base=None):
    kernel = kernel or DEFAULT_KERNEL
    if not 0 <= i < nvars:
        raise IndexError(f"variable index {i} out of range for {nvars} variables")
    if base is None:
        base = [kernel.zero()] * nvars
    base = list(base)
    base[i] = _kconst(kernel, w_i)
    return variable(kernel, i, tuple(base), D)


def _merge_base(p, q):
    kernel = p.kernel
    base = []
    for i, (a, b) in enumerate(zip(p.base, q.base)):
        if p.shape[i] > 1 and q.shape[i] > 1:
            if kernel.key(a) != kernel.key(b):
                raise BaseMismatch(f"base points differ along axis {i}: {a} vs {b}")
            base.append(a)
        elif p.shape[i] > 1:
            base.append(a)
        else:
            base.append(b)
    return tuple(base)


def add(p, q):
    if p.nvars != q.nvars:
        raise ValueError("polynomials over different variable counts")
    base = _merge_base(p, q)
    degree = min(p.degree, q.degree)
    shape = tuple(min(max(a, b), degree + 1) for a, b in zip(p.shape, q.shape))
    out = _fit(p.kernel, p.coeffs, shape) + _fit(p.kernel, q.coeffs, shape)
    return TaylorPoly(p.kernel, base, _apply_degree(p.kernel, out, degree), degree)


def sub(p, q):
    return add(p, scale(p.kernel.const(-1), q))


def scale(c, p):
    c = _kconst(p.kernel, c)
    return TaylorPoly(p.kernel, p.base, p.coeffs * c, p.degree)


def _nonzero_entries(p):
    mask = p.kernel.nonzero_mask(p.coeffs)
    if not isinstance(mask, np.ndarray):
        mask = np.asarray(mask, dtype=bool)
    return [tuple(int(i) for i in idx) for idx in np.argwhere(mask)]


def mul(p, q, shape=None):
    """Truncated Cauchy product.

    Loops over the nonzero coefficients of the sparser factor, so a
    product with a factor in two variables of low degree costs a small
    multiple of the size of the other factor.
    """
    if p.nvars != q.nvars:
        raise ValueError("polynomials over different variable counts")
    kernel = p.kernel
    base = _merge_base(p, q)
    degree = min(p.degree, q.degree)
    full = tuple(min(a + b - 1, degree + 1) for a, b in zip(p.shape, q.shape))
    if shape is not None:
        full = tuple(min(f, s) for f, s in zip(full, shape))
    if p.coeffs.size < q.coeffs.size:
        p, q = q, p
    if (p.nvars == 1 and isinstance(p.coeffs, np.ndarray) and p.coeffs.dtype == np.float64):
        out = np.convolve(p.coeffs, q.coeffs)[: full[0]]
        _tick("mul", p.coeffs.size * q.coeffs.size)
        return TaylorPoly(kernel, base, _fit(kernel, out, full), degree)
    entries = _nonzero_entries(q)
    out = kernel.zeros(full)
    pc = p.coeffs
    ops = 0
    for beta in entries:
        if sum(beta) > degree or any(b >= f for b, f in zip(beta, full)):
            continue
        src = tuple(slice(0, min(ps, f - b)) for ps, f, b in zip(pc.shape, full, beta))
        dst = tuple(slice(b, b + s.stop) for b, s in zip(beta, src))
        out[dst] = out[dst] + pc[src] * q.coeffs[beta]
        ops += math.prod(s.stop for s in src)
    _tick("mul", ops)
    return TaylorPoly(kernel, base, _apply_degree(kernel, out, degree), degree)


def truncate(p, shape=None, degree=None):
    degree = p.degree if degree is None else min(degree, p.degree)
    if shape is None:
        shape = p.shape
    shape = tuple(min(a, b, degree + 1) for a, b in zip(p.shape, shape))
    coeffs = _fit(p.kernel, p.coeffs, shape)
    if coeffs is p.coeffs:
        coeffs = coeffs.copy()
    return TaylorPoly(p.kernel, p.base, _apply_degree(p.kernel, coeffs, degree), degree)


def derive(p, i):
    """Partial derivative along axis ``i``; drops the degree by one."""
    if not 0 <= i < p.nvars:
        raise IndexError(f"variable index {i} out of range")
    if p.degree == 0:
        raise ValueError("cannot differentiate a degree-0 expansion")
    return divided_derivative(p, i, 1)


def divided_derivative(p, i, n):
    """Expansion of ``(1/n!) d^n/dx_i^n p``: coefficient j becomes C(j+n, n) c_{j+n}."""
    if n == 0:
        return p
    if n > p.degree:
        raise ValueError(f"derivative order {n} exceeds truncation degree {p.degree}")
    kernel = p.kernel
    length = p.shape[i]
    if length <= n:
        shape = list(p.shape)
        shape[i] = 1
        return TaylorPoly(kernel, p.base, kernel.zeros(tuple(shape)), p.degree - n)
    weights = kernel.consts([math.comb(j + n, n) for j in range(length - n)])
    coeffs = _take(p.coeffs, i, n) * _axis_vector(weights, i, p.nvars)
    _tick("derive", coeffs.size)
    return TaylorPoly(kernel, p.base, _apply_degree(kernel, coeffs, p.degree - n), p.degree - n)


def scale_axis(p, i, a, new_base=None):
    """Coefficient j along axis i multiplied by a^j.

    This is the whole cost of substituting ``x_i -> a x_i + b``: the
    degree-1 fast path.
    """
    kernel = p.kernel
    length = p.shape[i]
    base = list(p.base)
    if new_base is not None:
        base[i] = new_base
    if length == 1:
        return TaylorPoly(kernel, tuple(base), p.coeffs, p.degree)
    pw = kernel.powers(a, length - 1)
    coeffs = p.coeffs * _axis_vector(pw, i, p.nvars)
    _tick("subst_scale", coeffs.size)
    return TaylorPoly(kernel, tuple(base), coeffs, p.degree)


def coefficient(p, alpha):
    alpha = tuple(alpha)
    if len(alpha) != p.nvars or any(a < 0 for a in alpha):
        raise IndexError("multi-index does not match the polynomial")
    if sum(alpha) > p.degree:
        raise IndexError(f"multi-index {alpha} beyond truncation degree {p.degree}")
    if any(a >= s for a, s in zip(alpha, p.shape)):
        return p.kernel.zero()
    return p.coeffs[alpha]


def derivative_value(p, alpha):
    fact = math.prod(math.factorial(a) for a in alpha)
    return coefficient(p, alpha) * p.kernel.const(fact)


def _check_slot(p, k, h):
    kernel = p.kernel
    h0 = h.value()
    if p.shape[k] > 1 and kernel.key(h0) != kernel.key(p.base[k]):
        raise BaseMismatch(
            f"substituted value {h0} does not match the expansion point {p.base[k]} of slot {k}")
    for v in h.effective_axes():
        if v != k and p.shape[v] > 1 and kernel.key(p.base[v]) != kernel.key(h.base[v]):
            raise BaseMismatch(f"expansion points differ along axis {v}")


def substitute(p, k, h, shape=None, check=True):
    """Expansion of ``x -> p(x[k -> h(x)])`` at ``h``'s base point.

    ``p`` must be expanded with ``x_k`` at the constant term of ``h``.
    Constant and degree-1 univariate ``h`` use slicing and scaling; the
    rest goes through a Horner scheme over the slices of ``p`` with fixed
    exponent of ``x_k``, highest exponent first.
    """
    if check:
        _check_slot(p, k, h)
    kernel = p.kernel
    n = p.nvars
    axes = h.effective_axes()
    base = list(p.base)
    base[k] = h.base[k]
    for v in axes:
        base[v] = h.base[v]
    base = tuple(base)
    degree = min(p.degree, h.degree)

    if not axes or p.shape[k] == 1:
        coeffs = _take(p.coeffs, k, 0, 1)
        _tick("subst_const", 0)
        out = TaylorPoly(kernel, base, coeffs, degree)
        return truncate(out, shape) if shape is not None else out

    if axes == [k] and _is_linear(h, k):
        idx = [0] * n
        idx[k] = 1
        a = h.coeffs[tuple(idx)]
        out = scale_axis(p, k, a, new_base=h.base[k])
        out = TaylorPoly(kernel, base, out.coeffs, degree)
        return truncate(out, shape) if shape is not None else out

    J = p.shape[k] - 1
    if shape is None:
        shape = []
        for v in range(n):
            if v in axes:
                grow = J * (h.shape[v] - 1)
                extra = p.shape[v] if v != k else 1
                shape.append(min(extra + grow, degree + 1))
            else:
                shape.append(p.shape[v])
    shape = tuple(min(s, degree + 1) for s in shape)
    q_coeffs = h.coeffs.copy()
    q_coeffs[(0,) * n] = kernel.zero()
    q = TaylorPoly(kernel, base, q_coeffs, degree)
    slices = [TaylorPoly(kernel, base, _take(p.coeffs, k, j, j + 1), degree) for j in range(J + 1)]
    result = truncate(slices[J], shape)
    for j in range(J - 1, -1, -1):
        result = mul(result, q, shape)
        result = add(result, truncate(slices[j], shape))
        result = truncate(result, shape)
    _tick("subst_horner", 0)
    return result


def _is_linear(h, k):
    return h.shape[k] <= 2 or not kernel_any_nonzero(h, _take(h.coeffs, k, 2))


def kernel_any_nonzero(p, arr):
    mask = p.kernel.nonzero_mask(arr)
    return bool(np.any(mask))


def recenter_axis(kernel, coeffs, axis, delta, out_len):
    """Re-expand an exact polynomial along ``axis`` around a shifted point.

    ``coeffs`` holds a polynomial in ``(x - w)`` along ``axis``; the result
    holds its coefficients in ``(x - w - delta)``, truncated to ``out_len``.
    """
    length = coeffs.shape[axis]
    shape = list(coeffs.shape)
    shape[axis] = out_len
    out = kernel.zeros(tuple(shape))
    if kernel.is_zero(delta):
        m = min(length, out_len)
        out[_index(axis, coeffs.ndim, slice(0, m))] = _take(coeffs, axis, 0, m)
        return out
    dpow = [kernel.one()]
    for _ in range(length):
        dpow.append(dpow[-1] * delta)
    for j in range(min(out_len, length)):
        acc = None
        for i in range(j, length):
            w = kernel.const(math.comb(i, j)) * dpow[i - j]
            term = _take(coeffs, axis, i, i + 1) * w
            acc = term if acc is None else acc + term
        out[_index(axis, coeffs.ndim, slice(j, j + 1))] = acc
    _tick("recenter", length * out_len)
    return out


def _dot(kernel, xs, ys):
    acc = kernel.zero()
    for x, y in zip(xs, ys):
        acc = acc + x * y
    return acc


def _univariate_parts(p):
    axes = p.effective_axes()
    if len(axes) > 1:
        raise ValueError("operation needs a polynomial in one variable")
    axis = axes[0] if axes else 0
    if not p.nvars:
        return axis, [p.coeffs[()]]
    values = []
    for i in range(p.shape[axis]):
        idx = [0] * p.nvars
        idx[axis] = i
        values.append(p.coeffs[tuple(idx)])
    return axis, values


def _series_result(p, axis, values):
    kernel = p.kernel
    vec = values if hasattr(values, "shape") else kernel.vector(values)
    return univariate(kernel, vec, axis, p.base, p.degree)


def _vdot(xs, ys):
    """Sum of the elementwise product of two kernel vectors."""
    return (xs * ys).sum()


def _padded(kernel, a, D):
    return kernel.vector(a + [kernel.zero()] * (D + 1 - len(a)))


def exp_t(p, cap=None):
    kernel = p.kernel
    axis, a = _univariate_parts(p)
    D = p.degree if cap is None else min(cap, p.degree)
    av = _padded(kernel, a, D)
    ka = kernel.arange(0, D + 1) * av
    b = kernel.zeros((D + 1,))
    b[0] = kernel.exp(a[0])
    for n in range(1, D + 1):
        s = _vdot(ka[1 : n + 1], b[:n][::-1])
        b[n] = s * kernel.const(Fraction(1, n))
    return _series_result(p, axis, b)


def ln_t(p, cap=None):
    kernel = p.kernel
    axis, a = _univariate_parts(p)
    if not kernel.positive(a[0]):
        raise DomainError("logarithm needs a positive constant term")
    D = p.degree if cap is None else min(cap, p.degree)
    av = _padded(kernel, a, D)
    ks = kernel.arange(0, D + 1)
    b = kernel.zeros((D + 1,))
    b[0] = kernel.log(a[0])
    inv0 = kernel.div(kernel.one(), a[0])
    for n in range(1, D + 1):
        s = _vdot(ks[1:n] * b[1:n], av[1:n][::-1]) if n > 1 else kernel.zero()
        b[n] = (av[n] - s * kernel.const(Fraction(1, n))) * inv0
    return _series_result(p, axis, b)


def pow_t(p, r, cap=None):
    """``p^r`` for rational ``r`` via the J.C.P. Miller recurrence."""
    kernel = p.kernel
    r = Fraction(r)
    axis, a = _univariate_parts(p)
    if r.denominator != 1 and not kernel.positive(a[0]):
        raise DomainError("non-integer power needs a positive constant term")
    if kernel.is_zero(a[0]):
        if r.denominator == 1 and r >= 0:
            # polynomial power by repeated multiplication
            result = constant(kernel, kernel.one(), p.base, p.degree)
            for _ in range(int(r)):
                result = mul(result, p)
            return result
        raise DomainError("power of a series with zero constant term")
    D = p.degree if cap is None else min(cap, p.degree)
    av = _padded(kernel, a, D)
    # (r + 1) k a_k, the n-dependent part is -n a_k
    ra = kernel.consts([(r + 1) * k for k in range(D + 1)]) * av
    b = kernel.zeros((D + 1,))
    b[0] = kernel.pow(a[0], r)
    inv0 = kernel.div(kernel.one(), a[0])
    for n in range(1, D + 1):
        terms = ra[1 : n + 1] - av[1 : n + 1] * kernel.const(n)
        s = _vdot(terms, b[:n][::-1])
        b[n] = s * inv0 * kernel.const(Fraction(1, n))
    return _series_result(p, axis, b)


def div_linear(p, q, cap=None):
    """``p / q`` for ``q`` of total degree at most one."""
    kernel = p.kernel
    n = p.nvars
    high = [idx for idx in itertools.product(*(range(s) for s in q.shape)) if sum(idx) >= 2]
    if any(not kernel.is_zero(q.coeffs[idx]) for idx in high):
        raise ValueError("divisor must have degree at most one")
    q0 = q.value()
    inv0 = kernel.div(kernel.one(), q0)
    base = _merge_base(p, q)
    degree = min(p.degree, q.degree)
    lin = []
    for v in q.effective_axes():
        idx = [0] * n
        idx[v] = 1
        c = q.coeffs[tuple(idx)]
        if not kernel.is_zero(c):
            lin.append((v, c))
    if not lin:
        return TaylorPoly(kernel, base, p.coeffs * inv0, degree)
    top = degree if cap is None else min(cap, degree)
    shape = list(p.shape)
    for v, _ in lin:
        shape[v] = top + 1
    shape = tuple(min(s, degree + 1) for s in shape)
    pc = _fit(kernel, p.coeffs, shape)
    if len(lin) == 1:
        v, c1 = lin[0]
        out = kernel.zeros(shape)
        prev = None
        for j in range(shape[v]):
            cur = _take(pc, v, j, j + 1)
            if prev is not None:
                cur = cur - prev * c1
            cur = cur * inv0
            out[_index(v, n, slice(j, j + 1))] = cur
            prev = cur
        _tick("div_linear", out.size)
        return TaylorPoly(kernel, base, _apply_degree(kernel, out, degree), degree)
    # several linear terms: fixed-point sweep, one total-degree level per pass
    r = pc * inv0
    for _ in range(degree + 1):
        acc = pc.copy()
        for v, c in lin:
            shifted = kernel.zeros(shape)
            shifted[_index(v, n, slice(1, None))] = _take(r, v, 0, shape[v] - 1)
            acc = acc - shifted * c
        r = _apply_degree(kernel, acc * inv0, degree)
    return TaylorPoly(kernel, base, r, degree)


def evaluate(p, point):
    """Value of the truncated polynomial at ``point`` (for tests)."""
    kernel = p.kernel
    total = kernel.zero()
    for idx in itertools.product(*(range(s) for s in p.shape)):
        if sum(idx) > p.degree:
            continue
        term = p.coeffs[idx]
        for v, e in enumerate(idx):
            if e:
                term = term * kernel.ipow(point[v] - p.base[v], e)
        total = total + term
    return total


def as_interval_array(x):
    return x if isinstance(x, IntervalArray) else IntervalArray(x)
