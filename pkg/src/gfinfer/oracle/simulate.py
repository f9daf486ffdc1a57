"""Likelihood-weighted forward simulation.

Samples run in a vectorized batch: each statement acts on an index array
of the particles that reach it.  Observations add log-likelihoods instead
of rejecting, so discrete data on rare events still gets weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .. import ast as A
from ..errors import OracleUnavailable, ZeroEvidence


@dataclass
class SampleSet:
    names: tuple
    vals: np.ndarray
    logw: np.ndarray

    def index(self, name: str) -> int:
        return self.names.index(name)

    @property
    def weights(self) -> np.ndarray:
        top = np.max(self.logw)
        if not np.isfinite(top):
            raise ZeroEvidence("every particle has weight zero")
        w = np.exp(self.logw - top)
        return w / w.sum()

    @property
    def ess(self) -> float:
        w = self.weights
        return float(1.0 / np.sum(w * w))

    @property
    def log_evidence(self) -> float:
        top = np.max(self.logw)
        return float(top + np.log(np.mean(np.exp(self.logw - top))))

    def mean(self, name: str) -> float:
        return float(np.sum(self.weights * self.vals[:, self.index(name)]))

    def variance(self, name: str) -> float:
        x = self.vals[:, self.index(name)]
        mu = np.sum(self.weights * x)
        return float(np.sum(self.weights * (x - mu) ** 2))

    def stderr(self, name: str) -> float:
        """Standard error of the self-normalized mean (delta method)."""
        w = self.weights
        x = self.vals[:, self.index(name)]
        mu = np.sum(w * x)
        return float(np.sqrt(np.sum(w * w * (x - mu) ** 2)))

    def marginal(self, name: str) -> dict:
        x = self.vals[:, self.index(name)]
        uniq, inv = np.unique(x, return_inverse=True)
        acc = np.bincount(inv.reshape(-1), weights=self.weights)
        return {int(u): float(m) for u, m in zip(uniq, acc) if m > 0}


def _f(q) -> float:
    return float(q)


class _Sim:
    def __init__(self, program: A.Program, rng: np.random.Generator, n: int):
        self.rng = rng
        self.vals = np.zeros((n, len(program.variables)))
        self.logw = np.zeros(n)

    def draw(self, dist, idx):
        rng, m = self.rng, len(idx)
        if isinstance(dist, A.Compound):
            x = self.vals[idx, dist.var.index]
            p = _f(dist.param)
            if dist.kind == "Binomial":
                return rng.binomial(x.astype(np.int64), p).astype(float)
            if dist.kind == "NegBinomial":
                r = x.astype(np.int64)
                out = np.zeros(m)
                pos = r > 0
                out[pos] = rng.negative_binomial(r[pos], p) if p < 1 else 0
                return out
            if dist.kind == "Poisson":
                return rng.poisson(p * x).astype(float)
            if dist.kind == "Bernoulli":
                return (rng.random(m) < x).astype(float)
            raise OracleUnavailable(f"unknown compound {dist.kind}")
        k, ps = dist.kind, [_f(q) for q in dist.params]
        if k == "Dirac":
            return np.full(m, ps[0])
        if k == "Bernoulli":
            return (rng.random(m) < ps[0]).astype(float)
        if k == "Categorical":
            return rng.choice(len(ps), size=m, p=np.array(ps) / sum(ps)).astype(float)
        if k == "Binomial":
            return rng.binomial(int(ps[0]), ps[1], m).astype(float)
        if k == "UniformDisc":
            return rng.integers(int(ps[0]), int(ps[1]) + 1, m).astype(float)
        if k == "Geometric":
            # numpy counts trials; the language counts failures
            return (rng.geometric(ps[0], m) - 1).astype(float) if ps[0] < 1 else np.zeros(m)
        if k == "NegBinomial":
            if ps[0] == 0 or ps[1] == 1:
                return np.zeros(m)
            return rng.negative_binomial(ps[0], ps[1], m).astype(float)
        if k == "Poisson":
            return rng.poisson(ps[0], m).astype(float)
        if k == "Exponential":
            return rng.exponential(1.0 / ps[0], m)
        if k == "Gamma":
            return rng.gamma(ps[0], 1.0 / ps[1], m)
        if k == "UniformCont":
            return rng.uniform(ps[0], ps[1], m)
        raise OracleUnavailable(f"unknown distribution {k}")

    def logpmf(self, value, dist, idx):
        m = len(idx)
        if isinstance(dist, A.Compound):
            x = self.vals[idx, dist.var.index]
            p = _f(dist.param)
            if dist.kind == "Binomial":
                return stats.binom.logpmf(value, x, p)
            if dist.kind == "NegBinomial":
                out = np.where(value == 0, 0.0, -np.inf)
                pos = x > 0
                out[pos] = stats.nbinom.logpmf(value, x[pos], p)
                return out
            if dist.kind == "Poisson":
                lam = p * x
                with np.errstate(divide="ignore"):
                    return np.where(lam > 0, stats.poisson.logpmf(value, np.maximum(lam, 1e-300)),
                                    0.0 if value == 0 else -np.inf)
            if dist.kind == "Bernoulli":
                pr = x if value == 1 else (1 - x if value == 0 else np.zeros(m))
                with np.errstate(divide="ignore"):
                    return np.log(np.clip(pr, 0, 1))
        k, ps = dist.kind, [_f(q) for q in dist.params]
        table = {
            "Dirac": lambda: 0.0 if value == ps[0] else -np.inf,
            "Bernoulli": lambda: stats.bernoulli.logpmf(value, ps[0]),
            "Categorical": lambda: np.log(ps[value] / sum(ps)) if 0 <= value < len(ps) else -np.inf,
            "Binomial": lambda: stats.binom.logpmf(value, int(ps[0]), ps[1]),
            "UniformDisc": lambda: -np.log(ps[1] - ps[0] + 1) if ps[0] <= value <= ps[1] else -np.inf,
            "Geometric": lambda: stats.geom.logpmf(value + 1, ps[0]),
            "NegBinomial": lambda: stats.nbinom.logpmf(value, ps[0], ps[1]) if ps[0] > 0 else
            (0.0 if value == 0 else -np.inf),
            "Poisson": lambda: stats.poisson.logpmf(value, ps[0]) if ps[0] > 0 else
            (0.0 if value == 0 else -np.inf),
        }
        if k not in table:
            raise OracleUnavailable(f"cannot observe from {k}")
        with np.errstate(divide="ignore"):
            return np.full(m, float(table[k]()))

    def holds(self, c, idx):
        """Boolean per particle; random conditions are drawn afresh."""
        if isinstance(c, A.InSet):
            return np.isin(self.vals[idx, c.var.index], list(c.values))
        if isinstance(c, A.Complement):
            return ~self.holds(c.event, idx)
        if isinstance(c, A.Cmp):
            x = self.vals[idx, c.var.index]
            return {"=": x == c.value, "!=": x != c.value, "<": x < c.value,
                    "<=": x <= c.value, ">": x > c.value, ">=": x >= c.value}[c.op]
        if isinstance(c, A.Not):
            return ~self.holds(c.cond, idx)
        if isinstance(c, A.And):
            return self.holds(c.left, idx) & self.holds(c.right, idx)
        if isinstance(c, A.Or):
            return self.holds(c.left, idx) | self.holds(c.right, idx)
        if isinstance(c, A.SampleCond):
            return self.draw(c.dist, idx) == c.value
        raise TypeError(f"unexpected condition {c!r}")

    def observe(self, c, idx):
        """Log-weight of ``observe c``; exact likelihood where possible."""
        if isinstance(c, A.SampleCond):
            return self.logpmf(c.value, c.dist, idx)
        if isinstance(c, A.And):
            return self.observe(c.left, idx) + self.observe(c.right, idx)
        return np.where(self.holds(c, idx), 0.0, -np.inf)

    def run(self, s, idx):
        if len(idx) == 0 or isinstance(s, A.Skip):
            return
        if isinstance(s, A.Seq):
            for t in s.stmts:
                self.run(t, idx)
        elif isinstance(s, A.Fail):
            self.logw[idx] = -np.inf
        elif isinstance(s, (A.Affine, A.AddAssign)):
            acc = np.full(len(idx), _f(s.const))
            for v, a in s.coeffs:
                acc = acc + _f(a) * self.vals[idx, v.index]
            if isinstance(s, A.AddAssign):
                acc = acc + self.vals[idx, s.target.index]
            self.vals[idx, s.target.index] = acc
        elif isinstance(s, A.Sample):
            self.vals[idx, s.target.index] = self.draw(s.dist, idx)
        elif isinstance(s, A.AddSample):
            self.vals[idx, s.target.index] += self.draw(s.dist, idx)
        elif isinstance(s, A.Observe):
            self.logw[idx] += self.observe(s.cond, idx)
        elif isinstance(s, A.ObserveEvent):
            self.logw[idx] += self.observe(s.event, idx)
        elif isinstance(s, A.ObserveFrom):
            self.logw[idx] += self.logpmf(s.value, s.dist, idx)
        elif isinstance(s, (A.If, A.IfEvent)):
            c = s.cond if isinstance(s, A.If) else s.event
            mask = self.holds(c, idx)
            self.run(s.then, idx[mask])
            self.run(s.orelse, idx[~mask])
        else:
            raise TypeError(f"unexpected statement {s!r}")


def simulate_program(program: A.Program, n: int = 100_000, seed: int = 0, shards: int = 1) -> SampleSet:
    """Weighted samples from ``program``.

    ``n`` is split into ``shards`` batches with independent PCG64 streams
    spawned from ``seed``; the result is deterministic for fixed
    ``(n, seed, shards)``.
    """
    A.validate(program)
    children = np.random.SeedSequence(seed).spawn(shards)
    sizes = [n // shards + (1 if i < n % shards else 0) for i in range(shards)]
    vals, logw = [], []
    for ss, m in zip(children, sizes):
        sim = _Sim(program, np.random.Generator(np.random.PCG64(ss)), m)
        sim.run(program.body, np.arange(m))
        vals.append(sim.vals)
        logw.append(sim.logw)
    names = tuple(v.name for v in program.variables)
    return SampleSet(names, np.concatenate(vals), np.concatenate(logw))
