"""Abstract syntax of the statistical guarded command language.

Surface and core statements share one module: the core forms are the
subset that survives :func:`gfinfer.desugar.desugar`.  All nodes are
frozen dataclasses, so structural equality is plain ``==``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (ContinuousObservation, UnknownVariable, UnsupportedEvent,
                     ValidationError)


@dataclass(frozen=True, order=True)
class VarId:
    index: int
    name: str

    def __str__(self):
        return self.name


# -- distributions ---------------------------------------------------------

DISCRETE_KINDS = ("Dirac", "Bernoulli", "Categorical", "Binomial", "UniformDisc",
                  "NegBinomial", "Geometric", "Poisson")
CONTINUOUS_KINDS = ("Exponential", "Gamma", "UniformCont")
DIST_KINDS = DISCRETE_KINDS + CONTINUOUS_KINDS
FINITE_KINDS = ("Dirac", "Bernoulli", "Categorical", "Binomial", "UniformDisc")
COMPOUND_KINDS = ("Binomial", "NegBinomial", "Poisson", "Bernoulli")


@dataclass(frozen=True)
class Dist:
    """Distribution with constant parameters."""

    kind: str
    params: tuple

    @property
    def continuous(self):
        return self.kind in CONTINUOUS_KINDS

    @property
    def finite(self):
        return self.kind in FINITE_KINDS

    def __str__(self):
        from .parser import render_dist
        return render_dist(self)


@dataclass(frozen=True)
class Compound:
    """Distribution whose count or rate parameter is a program variable.

    ``param`` is the success probability for Binomial and NegBinomial, the
    rate multiplier for Poisson and unused (1) for Bernoulli.
    """

    kind: str
    var: VarId
    param: Fraction = Fraction(1)

    continuous = False
    finite = False

    def unit(self) -> Dist:
        """The distribution D(1) used in the compound sampling rule."""
        if self.kind == "Binomial":
            return Dist("Bernoulli", (self.param,))
        if self.kind == "NegBinomial":
            return Dist("NegBinomial", (Fraction(1), self.param))
        if self.kind == "Poisson":
            return Dist("Poisson", (self.param,))
        raise ValueError("Bernoulli(X) has no unit distribution")

    def __str__(self):
        from .parser import render_dist
        return render_dist(self)


def check_dist(dist):
    """Parameter sanity; returns an error message or None."""
    k, p = dist.kind, getattr(dist, "params", ())
    if isinstance(dist, Compound):
        if dist.kind in ("Binomial", "NegBinomial") and not 0 <= dist.param <= 1:
            return "probability must lie in [0, 1]"
        if dist.kind == "NegBinomial" and dist.param == 0:
            return "NegBinomial needs p > 0"
        if dist.param < 0:
            return "rate multiplier must be nonnegative"
        return None
    arity = {"Dirac": 1, "Bernoulli": 1, "Binomial": 2, "UniformDisc": 2, "NegBinomial": 2,
             "Geometric": 1, "Poisson": 1, "Exponential": 1, "Gamma": 2, "UniformCont": 2}
    if k == "Categorical":
        if not p:
            return "Categorical needs at least one weight"
        if any(not 0 <= q <= 1 for q in p):
            return "probabilities must lie in [0, 1]"
        if sum(p) != 1:
            return f"Categorical weights sum to {sum(p)}, not 1"
        return None
    if len(p) != arity[k]:
        return f"{k} takes {arity[k]} argument(s), got {len(p)}"
    if any(q < 0 for q in p):
        return "parameters must be nonnegative"
    if k in ("Bernoulli", "Geometric") and not p[0] <= 1:
        return "probability must lie in [0, 1]"
    if k == "Geometric" and p[0] == 0:
        return "Geometric needs p > 0"
    if k in ("Binomial", "NegBinomial"):
        if p[0].denominator != 1:
            return f"{k} count must be a natural number"
        if p[1] > 1:
            return "probability must lie in [0, 1]"
        if k == "NegBinomial" and p[1] == 0:
            return "NegBinomial needs p > 0"
    if k == "UniformDisc":
        if any(q.denominator != 1 for q in p):
            return "UniformDisc bounds must be natural numbers"
        if p[0] > p[1]:
            return "UniformDisc needs l <= m"
    if k == "Exponential" and p[0] <= 0:
        return "Exponential needs a positive rate"
    if k == "Gamma" and (p[0] <= 0 or p[1] <= 0):
        return "Gamma needs positive shape and rate"
    if k == "UniformCont" and p[0] > p[1]:
        return "UniformCont needs a <= b"
    return None


# -- events and conditions ---------------------------------------------------

@dataclass(frozen=True)
class InSet:
    var: VarId
    values: frozenset

    @property
    def vars(self):
        return (self.var,)


@dataclass(frozen=True)
class Complement:
    event: object

    @property
    def var(self):
        return self.event.var


@dataclass(frozen=True)
class Cmp:
    var: VarId
    op: str
    value: int


@dataclass(frozen=True)
class SampleCond:
    value: int
    dist: object


@dataclass(frozen=True)
class Not:
    cond: object


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Or:
    left: object
    right: object


def event_base(event):
    """Return (InSet, negated) for an event."""
    negated = False
    while isinstance(event, Complement):
        negated = not negated
        event = event.event
    return event, negated


# -- statements --------------------------------------------------------------

@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Seq:
    stmts: tuple = ()


@dataclass(frozen=True)
class Affine:
    """``target := sum coeffs[v] * v + const``; coefficients canonical."""

    target: VarId
    coeffs: tuple = ()
    const: Fraction = Fraction(0)

    def coeff_map(self):
        return dict(self.coeffs)


@dataclass(frozen=True)
class AddAssign:
    target: VarId
    coeffs: tuple = ()
    const: Fraction = Fraction(0)


@dataclass(frozen=True)
class Sample:
    target: VarId
    dist: object


@dataclass(frozen=True)
class AddSample:
    target: VarId
    dist: object


@dataclass(frozen=True)
class Observe:
    cond: object


@dataclass(frozen=True)
class ObserveEvent:
    event: object


@dataclass(frozen=True)
class ObserveFrom:
    value: int
    dist: object


@dataclass(frozen=True)
class If:
    cond: object
    then: object
    orelse: object = field(default_factory=Seq)


@dataclass(frozen=True)
class IfEvent:
    event: object
    then: object
    orelse: object = field(default_factory=Seq)


@dataclass(frozen=True)
class Fail:
    pass


CORE_TYPES = (Skip, Seq, Affine, IfEvent, Sample, ObserveEvent, ObserveFrom, Fail)


def make_affine(terms, const=Fraction(0)):
    """Canonical coefficient tuple: merged, zero-free, sorted by variable."""
    merged: dict = {}
    for v, c in terms:
        merged[v] = merged.get(v, Fraction(0)) + Fraction(c)
    return tuple(sorted(((v, c) for v, c in merged.items() if c != 0), key=lambda t: t[0].index)), Fraction(const)


@dataclass(frozen=True)
class Program:
    variables: tuple
    body: Seq
    query: VarId | None = None

    def var(self, name: str) -> VarId:
        for v in self.variables:
            if v.name == name:
                return v
        raise UnknownVariable(f"unknown variable {name!r}")

    def with_query(self, name: str | None) -> "Program":
        if name is None:
            return self
        return Program(self.variables, self.body, self.var(name))


def walk(stmt):
    """Pre-order traversal over statements."""
    stack = [stmt]
    while stack:
        s = stack.pop()
        yield s
        if isinstance(s, Seq):
            stack.extend(reversed(s.stmts))
        elif isinstance(s, (If, IfEvent)):
            stack.append(s.orelse)
            stack.append(s.then)


def last_written(body) -> VarId | None:
    last = None
    for s in walk(body):
        if isinstance(s, (Affine, AddAssign, Sample, AddSample)):
            last = s.target
    return last


# -- support classification --------------------------------------------------

class Support(enum.Enum):
    DISCRETE = "DiscreteNat"
    CONTINUOUS = "ContinuousNonneg"

    def __str__(self):
        return self.value


class SupportMap(dict):
    """VarId -> Support, plus warnings collected during validation."""

    def __init__(self, *args, warnings=None, **kw):
        super().__init__(*args, **kw)
        self.warnings = list(warnings or [])

    def by_name(self):
        return {v.name: s for v, s in self.items()}


class ContinuousParameter(ValidationError):
    pass


def _is_integral(q: Fraction) -> bool:
    return q.denominator == 1


def _unit_interval_source(src):
    if src is None:
        return False
    if isinstance(src, Dist):
        if src.kind in ("Bernoulli", "Dirac") and (src.kind == "Bernoulli" or src.params[0] <= 1):
            return True
        if src.kind == "UniformCont":
            return src.params[1] <= 1
    if isinstance(src, Compound) and src.kind == "Bernoulli":
        return True
    return False


class _Validator:
    def __init__(self, variables, strict_vars=True):
        self.variables = set(variables)
        self.strict = strict_vars
        self.warnings: list[str] = []

    def known(self, v):
        if self.strict and v not in self.variables:
            raise UnknownVariable(f"unknown variable {v.name!r}")

    def stmt(self, s, cont: dict, src: dict):
        if isinstance(s, (Skip, Fail)):
            return
        if isinstance(s, Seq):
            for t in s.stmts:
                self.stmt(t, cont, src)
            return
        if isinstance(s, (Affine, AddAssign)):
            self.known(s.target)
            terms = dict(s.coeffs)
            if isinstance(s, AddAssign):
                terms[s.target] = terms.get(s.target, Fraction(0)) + 1
            for v in terms:
                self.known(v)
            c = any(cont.get(v, False) for v, a in terms.items() if a != 0)
            c = c or not all(_is_integral(a) for a in terms.values()) or not _is_integral(s.const)
            cont[s.target] = c
            src[s.target] = None
            return
        if isinstance(s, (Sample, AddSample)):
            self.known(s.target)
            d = s.dist
            self.dist(d, cont, src)
            was = cont.get(s.target, False) if isinstance(s, AddSample) else False
            cont[s.target] = was or d.continuous
            src[s.target] = d if isinstance(s, Sample) else None
            return
        if isinstance(s, (ObserveEvent,)):
            self.event(s.event, cont)
            return
        if isinstance(s, Observe):
            self.cond(s.cond, cont, src)
            return
        if isinstance(s, ObserveFrom):
            if s.dist.continuous:
                raise ContinuousObservation(f"cannot observe a value from continuous {s.dist}")
            self.dist(s.dist, cont, src)
            return
        if isinstance(s, (If, IfEvent)):
            if isinstance(s, If):
                self.cond(s.cond, cont, src)
            else:
                self.event(s.event, cont)
            c1, s1 = dict(cont), dict(src)
            c2, s2 = dict(cont), dict(src)
            self.stmt(s.then, c1, s1)
            self.stmt(s.orelse, c2, s2)
            for v in set(c1) | set(c2):
                cont[v] = c1.get(v, False) or c2.get(v, False)
                src[v] = s1.get(v) if s1.get(v) == s2.get(v) else None
            return
        raise TypeError(f"unexpected statement {s!r}")

    def dist(self, d, cont, src):
        if isinstance(d, Compound):
            self.known(d.var)
            if d.kind in ("Binomial", "NegBinomial") and cont.get(d.var, False):
                raise ContinuousParameter(
                    f"{d.kind} needs a count parameter on the naturals, {d.var} is continuous")
            if d.kind == "Bernoulli" and not _unit_interval_source(src.get(d.var)):
                self.warnings.append(
                    f"Bernoulli({d.var}) assumes {d.var} lies in [0, 1]; this is not checked")

    def event(self, e, cont):
        base, _ = event_base(e)
        self.known(base.var)
        if cont.get(base.var, False):
            raise UnsupportedEvent(f"event on continuous variable {base.var}")

    def cond(self, c, cont, src):
        if isinstance(c, (InSet, Complement)):
            self.event(c, cont)
        elif isinstance(c, Cmp):
            self.known(c.var)
            if cont.get(c.var, False):
                raise UnsupportedEvent(f"event on continuous variable {c.var}")
        elif isinstance(c, SampleCond):
            if c.dist.continuous:
                raise ContinuousObservation(f"cannot compare a value with continuous {c.dist}")
            self.dist(c.dist, cont, src)
        elif isinstance(c, Not):
            self.cond(c.cond, cont, src)
        elif isinstance(c, (And, Or)):
            self.cond(c.left, cont, src)
            self.cond(c.right, cont, src)
        else:
            raise TypeError(f"unexpected condition {c!r}")


def validate(program: Program) -> SupportMap:
    """Classify every variable and reject programs outside the language.

    Works on surface and core programs alike.  The classification is the
    state after the last statement; inside the program a variable turns
    continuous when drawn from a continuous distribution or assigned from a
    continuous one, and back to discrete when resampled discretely.
    """
    checker = _Validator(program.variables)
    cont: dict = {}
    src: dict = {}
    checker.stmt(program.body, cont, src)
    if program.query is not None:
        checker.known(program.query)
    result = SupportMap(warnings=checker.warnings)
    for v in program.variables:
        result[v] = Support.CONTINUOUS if cont.get(v, False) else Support.DISCRETE
    return result


def degree_budget(program: Program, query_order: int = 4, mass_order: int = 0) -> int:
    """Observed values plus event maxima plus the requested output order.

    An upper bound for the derivative orders a single pass can need; the
    evaluator tracks tighter per-request orders and checks against this.
    """
    from .desugar import desugar_program

    core = desugar_program(program)
    total = 0
    for s in walk(core.body):
        if isinstance(s, ObserveFrom):
            total += s.value
        elif isinstance(s, (ObserveEvent, IfEvent)):
            base, _ = event_base(s.event)
            if base.values:
                total += max(base.values)
    return total + max(query_order, mass_order)
