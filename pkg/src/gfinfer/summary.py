"""Posterior statistics from generating-function expansions."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import ast as A
from . import semantics as S
from .errors import MassesUnavailable, NegativeMass, UnsupportedOp, ZeroEvidence
from .kernels import Kernel, make_kernel
from .taylor import count_operations


@dataclass
class MomentSet:
    evidence: object
    raw: list
    mean: object
    variance: object
    skewness: object = None
    kurtosis: object = None
    central4: object = None
    factorial: list | None = None


@dataclass
class MassTable:
    var: str
    entries: list
    cutoff: int
    tail_bound: object

    def total(self, kernel):
        acc = kernel.zero()
        for _, p in self.entries:
            acc = acc + p
        return acc


@dataclass
class PosteriorReport:
    query: str
    kernel: Kernel
    evidence: object
    moments: MomentSet
    masses: MassTable | None
    timings: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    counters: dict = field(default_factory=dict)


def _coeff(p, k, j):
    if j >= p.shape[k]:
        return p.kernel.zero()
    idx = [0] * p.nvars
    idx[k] = j
    return p.coeffs[tuple(idx)]


def _sigma_power(kernel, var, r):
    """var^(r/2); falls back to a float value when the root is irrational."""
    try:
        return kernel.pow(var, Fraction(r, 2)), False
    except UnsupportedOp:
        return kernel.const(Fraction(float(var) ** (r / 2))), True


def moments(poly, k: int, coord: str, evidence=None, warnings=None) -> MomentSet:
    """Moments of variable ``k`` from an expansion at one (t = 0 if ``coord`` is t).

    The expansion may be unnormalized; ``evidence`` defaults to its value.
    In the x coordinate the coefficients are factorial moments over j!, in
    the t coordinate raw moments over j!.
    """
    kernel = poly.kernel
    ev = poly.value() if evidence is None else evidence
    inv = kernel.div(kernel.one(), ev)
    scaled = [_coeff(poly, k, j) * inv * kernel.const(math.factorial(j)) for j in range(5)]
    factorial = None
    if coord == "t":
        m1, m2, m3, m4 = scaled[1:5]
    else:
        f1, f2, f3, f4 = scaled[1:5]
        factorial = [f1, f2, f3, f4]
        c = kernel.const
        m1 = f1
        m2 = f2 + f1
        m3 = f3 + c(3) * f2 + f1
        m4 = f4 + c(6) * f3 + c(7) * f2 + f1
    c = kernel.const
    mu = m1
    var = m2 - mu * mu
    mu3 = m3 - c(3) * mu * m2 + c(2) * mu * mu * mu
    mu4 = m4 - c(4) * mu * m3 + c(6) * mu * mu * m2 - c(3) * mu * mu * mu * mu
    out = MomentSet(evidence=ev, raw=[m1, m2, m3, m4], mean=mu, variance=var,
                    central4=mu4, factorial=factorial)
    tol = max(getattr(kernel, "tolerance", 0.0), 0.0)
    lo, hi = kernel.bounds(var)
    scale_ = max(abs(float(kernel.to_float(mu))) ** 2, 1.0)
    if float(hi) <= tol * scale_ * 10 or kernel.is_zero(var) or float(lo) <= 0:
        if warnings is not None:
            warnings.append("variance is zero (or not provably positive); skewness and kurtosis undefined")
        return out
    s3, approx3 = _sigma_power(kernel, var, 3)
    out.skewness = kernel.div(mu3, s3)
    out.kurtosis = kernel.div(mu4, var * var)
    if approx3 and warnings is not None:
        warnings.append("skewness is irrational; reported as a rounded rational")
    return out


def mass_cutoff(ms: MomentSet, kernel: Kernel) -> int:
    """Smallest integer m with m >= mu + 4 * mu4^(1/4)."""
    mu, mu4 = ms.mean, ms.central4
    if kernel.exact:
        mu = kernel.to_fraction(mu)
        mu4 = max(kernel.to_fraction(mu4), Fraction(0))
        m = max(0, math.floor(float(mu) + 4 * float(mu4) ** 0.25) - 2)
        while True:
            d = m - mu
            if d >= 0 and (d / 4) ** 4 >= mu4:
                return m
            m += 1
    _, mu_hi = kernel.bounds(mu)
    _, mu4_hi = kernel.bounds(mu4)
    mu_hi, mu4_hi = float(mu_hi), max(float(mu4_hi), 0.0)
    if not (math.isfinite(mu_hi) and math.isfinite(mu4_hi)):
        raise MassesUnavailable("moments are not finite; cannot choose a mass cutoff")
    value = mu_hi + 4 * mu4_hi ** 0.25
    m = math.ceil(value - 1e-9 * max(1.0, abs(value)))
    return max(m, 0)


def mass_table(poly, k: int, evidence, kernel: Kernel, var: str, cutoff: int, warnings) -> MassTable:
    inv = kernel.div(kernel.one(), evidence)
    entries = []
    tol = 10 * max(getattr(kernel, "tolerance", 0.0), 0.0)
    for j in range(cutoff + 1):
        p = _coeff(poly, k, j) * inv
        lo, hi = kernel.bounds(p)
        if float(lo) < 0:
            if float(hi) < -tol:
                raise NegativeMass(f"P[{var}={j}] = {kernel.to_float(p):.3e} is negative")
            if kernel.is_interval:
                p = kernel.const(0) if float(hi) <= 0 else _clip_interval(kernel, p)
            else:
                warnings.append(f"clamped rounding-level negative mass at {var}={j}")
                p = kernel.zero()
        entries.append((j, p))
    total = kernel.zero()
    for _, p in entries:
        total = total + p
    return MassTable(var=var, entries=entries, cutoff=cutoff, tail_bound=kernel.one() - total)


def _clip_interval(kernel, p):
    _, hi = kernel.bounds(p)
    return kernel.interval(0, hi) if hasattr(kernel, "interval") else p


def query_of(program: A.Program, name: str | None) -> A.VarId:
    if name is not None:
        return program.var(name)
    if program.query is not None:
        return program.query
    last = A.last_written(program.body)
    if last is None:
        if not program.variables:
            raise MassesUnavailable("the program has no variables to query")
        return program.variables[-1]
    return last


def infer(program: A.Program, kernel: Kernel | None = None, *, var: str | None = None,
          mass_limit: int | None = None, masses: bool = True, naive_observe: bool = False,
          mgf: bool = True, memo: bool = True, order: int = 4) -> PosteriorReport:
    """Evidence, moments and masses of the query variable."""
    kernel = kernel or make_kernel("float64")
    t0 = time.perf_counter()
    support = A.validate(program)
    warnings = list(support.warnings)
    q = query_of(program, var)
    with count_operations() as counters:
        g, core = S.translate(program, kernel, mgf=mgf, naive_observe=naive_observe)
        k = q.index
        coord = g.coords[k] if k < len(g.coords) else "x"
        if g.is_zero:
            raise ZeroEvidence("every execution path fails")
        n = len(g.coords)
        caps = tuple(order if i == k else 0 for i in range(n))
        t_eval = time.perf_counter()
        poly = S.eval_state(g, (1,) * n, order, caps=caps, memo=memo)
        eval_s = time.perf_counter() - t_eval
        evidence = poly.value()
        if not kernel.positive(evidence):
            if kernel.is_interval and not kernel.is_zero(evidence):
                lo, hi = kernel.bounds(evidence)
                raise ZeroEvidence(f"evidence enclosure [{float(lo):.6g}, {float(hi):.6g}] reaches zero: "
                                   "precision was lost, try a larger --precision")
            raise ZeroEvidence("the observations have probability zero")
        ms = moments(poly, k, coord, warnings=warnings)
        table = None
        if masses:
            if support[q] is A.Support.CONTINUOUS or coord == "t":
                warnings.append(f"{q.name} is continuous; probability masses are not available")
            else:
                cutoff = mass_limit if mass_limit is not None else mass_cutoff(ms, kernel)
                top = g.bound(k)
                if mass_limit is None and top is not None and (kernel.exact or top < cutoff):
                    # finite static support: the table can be complete
                    cutoff = top
                spec = tuple(0 if i == k else 1 for i in range(n))
                mcaps = tuple(cutoff if i == k else 0 for i in range(n))
                t_eval = time.perf_counter()
                mpoly = S.eval_state(g, spec, cutoff, caps=mcaps, memo=memo)
                eval_s += time.perf_counter() - t_eval
                table = mass_table(mpoly, k, evidence, kernel, q.name, cutoff, warnings)
    total = time.perf_counter() - t0
    return PosteriorReport(query=q.name, kernel=kernel, evidence=evidence, moments=ms,
                           masses=table, warnings=warnings, counters=dict(counters),
                           timings={"eval_ms": eval_s * 1e3, "total_ms": total * 1e3})


def as_float(kernel: Kernel, value) -> float:
    return float(kernel.to_float(value))


def float_masses(report: PosteriorReport) -> np.ndarray:
    if report.masses is None:
        return np.zeros(0)
    return np.array([as_float(report.kernel, p) for _, p in report.masses.entries])
