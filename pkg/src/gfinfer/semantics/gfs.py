"""Taylor expansions of distribution generating functions.

Discrete distributions are expanded in the probability generating function
coordinate ``x``.  Continuous ones use the moment generating function in
``t = log x``, which keeps the expansions free of logarithms; without that
coordinate change the series of ``log x`` around small points has
coefficients ``w^-n`` and the evaluation cancels catastrophically.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .. import taylor as T
from ..ast import Dist
from ..errors import DomainError


def _f(q):
    return Fraction(q)


def poly_coeffs(dist: Dist) -> list[Fraction]:
    """Exact coefficients of the PGF of a finite-support distribution."""
    k, p = dist.kind, dist.params
    if k == "Dirac":
        a = p[0]
        if a.denominator != 1:
            raise DomainError("non-integer Dirac has no polynomial PGF")
        out = [Fraction(0)] * (int(a) + 1)
        out[int(a)] = Fraction(1)
        return out
    if k == "Bernoulli":
        return [1 - p[0], p[0]]
    if k == "Categorical":
        return list(p)
    if k == "Binomial":
        n, q = int(p[0]), p[1]
        return [math.comb(n, i) * q ** i * (1 - q) ** (n - i) for i in range(n + 1)]
    if k == "UniformDisc":
        lo, hi = int(p[0]), int(p[1])
        w = Fraction(1, hi - lo + 1)
        return [Fraction(0)] * lo + [w] * (hi - lo + 1)
    raise ValueError(f"{k} does not have finite support")


def pmf(dist: Dist, value: int, kernel):
    """Probability of ``value`` as a kernel scalar."""
    k, p = dist.kind, dist.params
    if dist.continuous:
        raise DomainError(f"{k} has no probability mass function")
    if dist.finite:
        coeffs = poly_coeffs(dist)
        return kernel.const(coeffs[value] if value < len(coeffs) else 0)
    if k == "Geometric":
        return kernel.const(p[0] * (1 - p[0]) ** value)
    if k == "NegBinomial":
        r, q = int(p[0]), p[1]
        return kernel.const(math.comb(r + value - 1, value) * q ** r * (1 - q) ** value)
    if k == "Poisson":
        lam = p[0]
        if lam == 0:
            return kernel.const(1 if value == 0 else 0)
        return kernel.exp(kernel.const(-lam)) * kernel.const(lam ** value / math.factorial(value))
    raise ValueError(f"unknown distribution {k}")


def event_probability(dist: Dist, values, kernel):
    total = kernel.zero()
    for v in sorted(values):
        total = total + pmf(dist, v, kernel)
    return total


def _shift_poly(kernel, coeffs, w, length):
    """Coefficients of sum coeffs[i] x^i re-expanded around ``w``."""
    vals = kernel.consts(coeffs)
    out = T.recenter_axis(kernel, vals, 0, w, length)
    return out


def pgf_series(dist: Dist, kernel, w, length: int):
    """First ``length`` Taylor coefficients of the PGF at ``x = w``."""
    k, p = dist.kind, dist.params
    if dist.finite:
        if k == "Binomial":
            n, q = int(p[0]), p[1]
            a = kernel.const(1 - q) + kernel.const(q) * w
            vals = []
            for j in range(min(length, n + 1)):
                vals.append(kernel.const(math.comb(n, j)) * kernel.ipow(kernel.const(q), j)
                            * kernel.ipow(a, n - j))
            vals += [kernel.zero()] * (length - len(vals))
            return kernel.vector(vals)
        return _shift_poly(kernel, poly_coeffs(dist), w, length)
    if k in ("Geometric", "NegBinomial"):
        r, q = (1, p[0]) if k == "Geometric" else (int(p[0]), p[1])
        c1 = kernel.const(1 - q)
        c0 = kernel.one() - c1 * w
        if not kernel.positive(c0):
            raise DomainError(f"{k} generating function undefined at this point")
        inv = kernel.div(kernel.one(), c0)
        lead = kernel.ipow(kernel.const(q) * inv, r)
        ratio = c1 * inv
        vals = []
        term = lead
        for j in range(length):
            if j:
                term = term * ratio
            vals.append(term * kernel.const(math.comb(r + j - 1, j)))
        return kernel.vector(vals)
    if k == "Poisson":
        lam = kernel.const(p[0])
        lead = kernel.exp(lam * (w - kernel.one()))
        vals = [lead]
        for j in range(1, length):
            vals.append(vals[-1] * lam * kernel.const(Fraction(1, j)))
        return kernel.vector(vals)
    raise ValueError(f"{k} is not a discrete distribution")


def mgf_series(dist: Dist, kernel, t0, length: int):
    """First ``length`` Taylor coefficients of E[exp(tX)] at ``t = t0``."""
    k, p = dist.kind, dist.params
    if k == "Exponential":
        gap = kernel.const(p[0]) - t0
        if not kernel.positive(gap):
            raise DomainError("Exponential MGF undefined at this point")
        inv = kernel.div(kernel.one(), gap)
        vals = [kernel.const(p[0]) * inv]
        for _ in range(1, length):
            vals.append(vals[-1] * inv)
        return kernel.vector(vals)
    if k == "Gamma":
        alpha, beta = p
        gap = kernel.const(beta) - t0
        if not kernel.positive(gap):
            raise DomainError("Gamma MGF undefined at this point")
        inv = kernel.div(kernel.one(), gap)
        vals = [kernel.pow(kernel.const(beta) * inv, alpha)]
        for j in range(1, length):
            vals.append(vals[-1] * inv * kernel.const((alpha + j - 1) / j))
        return kernel.vector(vals)
    if k == "UniformCont":
        a, b = p
        if a == b:
            return _exp_series(kernel, kernel.const(a), t0, length)
        if kernel.is_zero(t0):
            vals = []
            fact = 1
            for j in range(length):
                fact *= j + 1
                vals.append(kernel.const(Fraction(b ** (j + 1) - a ** (j + 1), (b - a) * fact)))
            return kernel.vector(vals)
        # (e^{bt} - e^{at}) / ((b - a) t), dividing the numerator series by t0 + dt
        eb = _exp_series(kernel, kernel.const(b), t0, length)
        ea = _exp_series(kernel, kernel.const(a), t0, length)
        scale = kernel.const(Fraction(1) / (b - a))
        inv = kernel.div(kernel.one(), t0)
        vals = []
        prev = None
        for j in range(length):
            cur = (eb[j] - ea[j]) * scale
            if prev is not None:
                cur = cur - prev
            cur = cur * inv
            vals.append(cur)
            prev = cur
        return kernel.vector(vals)
    if not dist.continuous:
        # MGF of a count variable: PGF composed with exp
        lead = kernel.exp(t0)
        pg = pgf_series(dist, kernel, lead, length)
        poly = T.univariate(kernel, pg, 0, (lead,), length - 1)
        inner = T.univariate(kernel, _exp_series(kernel, kernel.one(), t0, length), 0, (t0,), length - 1)
        out = T.substitute(poly, 0, inner, check=False)
        return T.truncate(out, (length,)).coeffs if out.shape[0] >= length else \
            T._fit(kernel, out.coeffs, (length,))
    raise ValueError(f"unknown distribution {k}")


def _exp_series(kernel, a, t0, length):
    """Coefficients of exp(a t) around t0."""
    vals = [kernel.exp(a * t0)]
    for j in range(1, length):
        vals.append(vals[-1] * a * kernel.const(Fraction(1, j)))
    return kernel.vector(vals)


def exp_series(kernel, a, t0, length):
    return _exp_series(kernel, a, t0, length)


def power_series(kernel, a: Fraction, w, length):
    """Coefficients of x^a around w (a natural, or rational with w > 0)."""
    a = Fraction(a)
    if a.denominator == 1 and a >= 0:
        n = int(a)
        vals = []
        for j in range(length):
            if j > n:
                vals.append(kernel.zero())
            else:
                vals.append(kernel.const(math.comb(n, j)) * kernel.ipow(w, n - j))
        return kernel.vector(vals)
    if not kernel.positive(w):
        raise DomainError("non-integer power around a non-positive point")
    vals = [kernel.pow(w, a)]
    inv = kernel.div(kernel.one(), w)
    for j in range(1, length):
        vals.append(vals[-1] * inv * kernel.const((a - j + 1) / j))
    return kernel.vector(vals)


def log_series(kernel, w, length):
    """Coefficients of log x around w > 0."""
    if not kernel.positive(w):
        raise DomainError("log around a non-positive point")
    vals = [kernel.log(w)]
    inv = kernel.div(kernel.one(), w)
    pw = kernel.one()
    for j in range(1, length):
        pw = pw * inv
        sign = 1 if j % 2 else -1
        vals.append(pw * kernel.const(Fraction(sign, j)))
    return kernel.vector(vals)


def gf_series(dist: Dist, kernel, w, length: int, mgf: bool):
    """Expansion of the sampled variable's generating function.

    ``mgf`` says whether the variable lives in the ``t`` coordinate.  A
    continuous distribution in the ``x`` coordinate (the debug mode that
    disables the coordinate change) is the MGF composed with ``log x``.
    """
    if mgf:
        return mgf_series(dist, kernel, w, length)
    if not dist.continuous:
        return pgf_series(dist, kernel, w, length)
    if dist.kind in ("Exponential", "Gamma"):
        # (1 - log(x)/beta)^(-alpha), one power recurrence instead of a composition
        alpha, beta = (Fraction(1), dist.params[0]) if dist.kind == "Exponential" else dist.params
        lg = log_series(kernel, w, length) * kernel.div(kernel.one(), kernel.const(beta))
        lg = -lg
        lg[0] = lg[0] + kernel.one()
        g = T.univariate(kernel, lg, 0, (w,), length - 1)
        return T._fit(kernel, T.pow_t(g, -alpha).coeffs, (length,))
    t0 = kernel.log(w)
    m = T.univariate(kernel, mgf_series(dist, kernel, t0, length), 0, (t0,), length - 1)
    lg = T.univariate(kernel, log_series(kernel, w, length), 0, (w,), length - 1)
    out = T.substitute(m, 0, lg, shape=(length,), check=False)
    return T._fit(kernel, out.coeffs, (length,))
