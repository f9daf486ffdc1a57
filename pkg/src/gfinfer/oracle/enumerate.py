"""Exhaustive enumeration of the measure semantics.

The frontier is a table of joint valuations (one integer row per
valuation) with a mass column.  Each statement maps the table to a new
table; sampling multiplies rows out over the support and then merges equal
rows.  Infinite supports are cut where the remaining tail falls below
``tail`` or at ``truncate_at``, whichever comes first.

This path shares nothing with the generating-function engine beyond the
AST, which is the point: it is the independent ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import stats

from .. import ast as A
from ..errors import OracleUnavailable, ZeroEvidence


@dataclass
class MassFunction:
    """Normalized posterior over joint valuations."""

    names: tuple
    vals: np.ndarray
    mass: np.ndarray
    evidence: object
    exact: bool
    truncated: bool = False

    def index(self, name: str) -> int:
        return self.names.index(name)

    def as_dict(self) -> dict:
        return {tuple(int(v) for v in row): m for row, m in zip(self.vals, self.mass)}

    def marginal(self, name: str) -> dict:
        col = self.vals[:, self.index(name)]
        out: dict = {}
        for v, m in zip(col, self.mass):
            out[int(v)] = out.get(int(v), 0) + m
        return dict(sorted(out.items()))

    def moment(self, name: str, r: int = 1):
        col = self.vals[:, self.index(name)]
        if self.exact:
            return sum((Fraction(int(v)) ** r * m for v, m in zip(col, self.mass)), Fraction(0))
        return float(np.sum(col.astype(np.float64) ** r * self.mass))

    def mean(self, name: str):
        return self.moment(name, 1)

    def variance(self, name: str):
        mu = self.mean(name)
        return self.moment(name, 2) - mu * mu

    @property
    def total(self):
        return sum(self.mass, Fraction(0)) if self.exact else float(np.sum(self.mass))


def _tail_point(frozen, tail: float) -> int:
    """Smallest k with P[X > k] < tail (isf is unreliable far out)."""
    target = math.log(tail)
    hi = max(int(frozen.mean()), 1)
    while frozen.logsf(hi) >= target:
        hi *= 2
    lo = 0
    while lo < hi:
        mid = (lo + hi) // 2
        if frozen.logsf(mid) < target:
            hi = mid
        else:
            lo = mid + 1
    return lo


class _Support:
    def __init__(self, exact: bool, truncate_at: int | None, tail: float):
        self.exact = exact
        self.truncate_at = truncate_at
        self.tail = tail
        self.truncated = False

    def _cut(self, frozen):
        k = _tail_point(frozen, self.tail) if self.tail > 0 else self.truncate_at
        if self.truncate_at is not None:
            k = min(k, self.truncate_at) if k is not None else self.truncate_at
        if k is None:
            raise OracleUnavailable("infinite support needs a truncation point")
        if frozen.sf(k) > 0:
            self.truncated = True
        return max(int(k), 0)

    def table(self, kind: str, params):
        """(values, probabilities) of a distribution with concrete parameters."""
        ex = self.exact
        if kind in A.CONTINUOUS_KINDS:
            raise OracleUnavailable(f"cannot enumerate continuous {kind}")
        if kind == "Dirac":
            a = Fraction(params[0])
            if a.denominator != 1:
                raise OracleUnavailable("non-integer Dirac")
            return np.array([int(a)]), self._probs([Fraction(1)])
        if kind == "Bernoulli":
            p = Fraction(params[0])
            return np.array([0, 1]), self._probs([1 - p, p])
        if kind == "Categorical":
            return np.arange(len(params)), self._probs([Fraction(q) for q in params])
        if kind == "UniformDisc":
            lo, hi = int(params[0]), int(params[1])
            w = Fraction(1, hi - lo + 1)
            return np.arange(lo, hi + 1), self._probs([w] * (hi - lo + 1))
        if kind == "Binomial":
            n, p = int(params[0]), Fraction(params[1])
            ks = np.arange(n + 1)
            if ex:
                return ks, self._probs([math.comb(n, k) * p ** k * (1 - p) ** (n - k) for k in ks.tolist()])
            return ks, stats.binom.pmf(ks, n, float(p))
        if kind in ("Geometric", "NegBinomial"):
            r, p = (1, Fraction(params[0])) if kind == "Geometric" else (int(params[0]), Fraction(params[1]))
            if r == 0 or p == 1:
                return np.array([0]), self._probs([Fraction(1)])
            k = self._cut(stats.nbinom(r, float(p)))
            ks = np.arange(k + 1)
            if ex:
                return ks, self._probs([math.comb(int(j) + r - 1, int(j)) * p ** r * (1 - p) ** int(j)
                                        for j in ks.tolist()])
            return ks, stats.nbinom.pmf(ks, r, float(p))
        if kind == "Poisson":
            lam = Fraction(params[0])
            if lam == 0:
                return np.array([0]), self._probs([Fraction(1)])
            if ex:
                raise OracleUnavailable("Poisson masses are irrational")
            k = self._cut(stats.poisson(float(lam)))
            ks = np.arange(k + 1)
            return ks, stats.poisson.pmf(ks, float(lam))
        raise OracleUnavailable(f"unknown distribution {kind}")

    def pmf(self, kind: str, params, value: int):
        vals, probs = self.table(kind, params)
        hit = np.nonzero(vals == value)[0]
        if len(hit):
            return probs[hit[0]]
        return Fraction(0) if self.exact else 0.0

    def _probs(self, values):
        if self.exact:
            out = np.empty(len(values), dtype=object)
            out[:] = [Fraction(v) for v in values]
            return out
        return np.array([float(v) for v in values])


def _concrete(dist, value):
    """Kind and parameters of a compound distribution for one parameter value."""
    v = int(value)
    if dist.kind == "Binomial":
        return "Binomial", (v, dist.param)
    if dist.kind == "NegBinomial":
        return "NegBinomial", (v, dist.param)
    if dist.kind == "Poisson":
        return "Poisson", (dist.param * v,)
    if dist.kind == "Bernoulli":
        if v not in (0, 1):
            raise OracleUnavailable(f"Bernoulli parameter {v} outside [0, 1]")
        return "Bernoulli", (v,)
    raise OracleUnavailable(f"unknown compound {dist.kind}")


class Enumerator:
    def __init__(self, program: A.Program, exact: bool, truncate_at: int | None, tail: float):
        self.program = program
        self.n = len(program.variables)
        self.exact = exact
        self.support = _Support(exact, truncate_at, tail)

    def zeros(self, size):
        if self.exact:
            out = np.empty(size, dtype=object)
            out[:] = [Fraction(0)] * size
            return out
        return np.zeros(size)

    def one(self):
        return Fraction(1) if self.exact else 1.0

    # frontier helpers

    def merge(self, vals, mass):
        keep = np.array([m != 0 for m in mass], dtype=bool) if self.exact else mass != 0
        vals, mass = vals[keep], mass[keep]
        if len(mass) == 0:
            return vals, mass
        uniq, inv = np.unique(vals, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        out = self.zeros(len(uniq))
        np.add.at(out, inv, mass)
        return uniq, out

    def run(self):
        vals = np.zeros((1, self.n), dtype=np.int64)
        mass = self.zeros(1)
        mass[0] = self.one()
        vals, mass = self.stmt(self.program.body, vals, mass)
        return vals, mass

    def stmt(self, s, vals, mass):
        if len(mass) == 0:
            return vals, mass
        if isinstance(s, A.Skip):
            return vals, mass
        if isinstance(s, A.Seq):
            for t in s.stmts:
                vals, mass = self.stmt(t, vals, mass)
            return vals, mass
        if isinstance(s, A.Fail):
            return vals[:0], mass[:0]
        if isinstance(s, (A.Affine, A.AddAssign)):
            k = s.target.index
            acc = [Fraction(s.const)] * len(vals)
            terms = list(s.coeffs)
            if isinstance(s, A.AddAssign):
                terms.append((s.target, Fraction(1)))
            new = np.zeros(len(vals), dtype=object)
            new[:] = acc
            for v, a in terms:
                new = new + vals[:, v.index].astype(object) * Fraction(a)
            if any(Fraction(x).denominator != 1 for x in new):
                raise OracleUnavailable("affine assignment produced a non-integer value")
            vals = vals.copy()
            vals[:, k] = np.array([int(x) for x in new], dtype=np.int64)
            return self.merge(vals, mass)
        if isinstance(s, (A.Sample, A.AddSample)):
            return self.sample(s.target.index, s.dist, vals, mass, add=isinstance(s, A.AddSample))
        if isinstance(s, A.Observe):
            return self.merge(vals, mass * self.cond(s.cond, vals))
        if isinstance(s, A.ObserveEvent):
            return self.merge(vals, mass * self.cond(s.event, vals))
        if isinstance(s, A.ObserveFrom):
            return self.merge(vals, mass * self.cond(A.SampleCond(s.value, s.dist), vals))
        if isinstance(s, (A.If, A.IfEvent)):
            c = s.cond if isinstance(s, A.If) else s.event
            p = self.cond(c, vals)
            v1, m1 = self.stmt(s.then, vals, mass * p)
            v2, m2 = self.stmt(s.orelse, vals, mass * (self.one() - p))
            return self.merge(np.concatenate([v1, v2]), np.concatenate([m1, m2]))
        raise TypeError(f"unexpected statement {s!r}")

    def sample(self, k, dist, vals, mass, add=False):
        if isinstance(dist, A.Dist):
            groups = [(np.ones(len(vals), dtype=bool), (dist.kind, dist.params))]
        else:
            col = vals[:, dist.var.index]
            groups = [(col == v, _concrete(dist, v)) for v in np.unique(col)]
        out_v, out_m = [], []
        for mask, (kind, params) in groups:
            support, probs = self.support.table(kind, params)
            rows, m = vals[mask], mass[mask]
            rep = np.repeat(rows, len(support), axis=0)
            draws = np.tile(support, len(rows))
            rep[:, k] = rep[:, k] + draws if add else draws
            if self.exact:
                mm = np.empty(len(rep), dtype=object)
                mm[:] = [a * b for a in m for b in probs]
            else:
                mm = np.outer(m, probs).reshape(-1)
            out_v.append(rep)
            out_m.append(mm)
        return self.merge(np.concatenate(out_v), np.concatenate(out_m))

    def cond(self, c, vals):
        """Probability (per row) that condition ``c`` holds."""
        one = self.one()
        if isinstance(c, A.InSet):
            col = vals[:, c.var.index]
            return self._bool(np.isin(col, list(c.values)))
        if isinstance(c, A.Complement):
            return one - self.cond(c.event, vals)
        if isinstance(c, A.Cmp):
            col = vals[:, c.var.index]
            ops = {"=": np.equal, "!=": np.not_equal, "<": np.less, "<=": np.less_equal,
                   ">": np.greater, ">=": np.greater_equal}
            return self._bool(ops[c.op](col, c.value))
        if isinstance(c, A.Not):
            return one - self.cond(c.cond, vals)
        if isinstance(c, A.And):
            return self.cond(c.left, vals) * self.cond(c.right, vals)
        if isinstance(c, A.Or):
            a, b = self.cond(c.left, vals), self.cond(c.right, vals)
            return a + b - a * b
        if isinstance(c, A.SampleCond):
            d = c.dist
            if isinstance(d, A.Dist):
                p = self.support.pmf(d.kind, d.params, c.value)
                out = self.zeros(len(vals))
                out[:] = p
                return out
            col = vals[:, d.var.index]
            out = self.zeros(len(vals))
            for v in np.unique(col):
                kind, params = _concrete(d, v)
                out[col == v] = self.support.pmf(kind, params, c.value)
            return out
        raise TypeError(f"unexpected condition {c!r}")

    def _bool(self, mask):
        if self.exact:
            out = np.empty(len(mask), dtype=object)
            out[:] = [Fraction(int(b)) for b in mask]
            return out
        return mask.astype(np.float64)


def enumerate_program(program: A.Program, *, exact: bool = False, truncate_at: int | None = None,
                      tail: float = 1e-12) -> MassFunction:
    """Posterior mass function of ``program`` by enumeration."""
    A.validate(program)
    en = Enumerator(program, exact, truncate_at, tail if not exact or truncate_at is None else 0.0)
    vals, mass = en.run()
    total = sum(mass, Fraction(0)) if exact else float(np.sum(mass))
    if total == 0:
        raise ZeroEvidence("the observations have probability zero")
    mass = np.array([m / total for m in mass], dtype=object) if exact else mass / total
    names = tuple(v.name for v in program.variables)
    return MassFunction(names, vals, mass, total, exact, en.support.truncated)


def tvd(p: dict, q: dict) -> float:
    """Total variation distance between two mass dictionaries."""
    keys = set(p) | set(q)
    return 0.5 * sum(abs(float(p.get(k, 0)) - float(q.get(k, 0))) for k in keys)
