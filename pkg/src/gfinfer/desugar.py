"""Expansion of surface sugar into the core statement forms.

Observations from distributions stay primitive so the specialised
conditioning rules apply; ``naive_observe=True`` expands them through a
fresh variable instead, which is what the differential tests compare
against.  All sugar shares one scratch variable, ``__aux``: every use
samples it immediately before reading it, so values never leak between
uses.
"""

from __future__ import annotations

from fractions import Fraction

from . import ast as A
from .errors import DesugarError

AUX_NAME = "__aux"


def cmp_event(c: A.Cmp):
    m = c.value
    if c.op == "=":
        return A.InSet(c.var, frozenset({m}))
    if c.op == "<":
        return A.InSet(c.var, frozenset(range(m)))
    if c.op == "<=":
        return A.InSet(c.var, frozenset(range(m + 1)))
    if c.op == ">":
        return A.Complement(A.InSet(c.var, frozenset(range(m + 1))))
    if c.op == ">=":
        return A.Complement(A.InSet(c.var, frozenset(range(m))))
    if c.op == "!=":
        return A.Complement(A.InSet(c.var, frozenset({m})))
    raise DesugarError(f"unknown comparison {c.op!r}")


def normalize_event(e):
    base, negated = A.event_base(e)
    return A.Complement(base) if negated else base


def _as_event(c):
    """Event for simple conditions (possibly negated), else None."""
    if isinstance(c, (A.InSet, A.Complement)):
        return normalize_event(c)
    if isinstance(c, A.Cmp):
        return cmp_event(c)
    if isinstance(c, A.Not):
        inner = _as_event(c.cond)
        if inner is not None:
            return normalize_event(A.Complement(inner))
    return None


def _seq(stmts):
    flat = []
    for s in stmts:
        if isinstance(s, A.Seq):
            flat.extend(s.stmts)
        else:
            flat.append(s)
    return A.Seq(tuple(flat))


def _block(stmt):
    return stmt if isinstance(stmt, A.Seq) else A.Seq((stmt,))


class Desugarer:
    def __init__(self, aux: A.VarId, naive_observe: bool = False):
        self.aux = aux
        self.naive = naive_observe
        self.used_aux = False

    def fresh(self):
        self.used_aux = True
        return self.aux

    def stmt(self, s):
        if isinstance(s, (A.Skip, A.Fail)):
            return s
        if isinstance(s, A.Seq):
            return _seq(self.stmt(t) for t in s.stmts)
        if isinstance(s, A.Affine):
            if any(c < 0 for _, c in s.coeffs) or s.const < 0:
                raise DesugarError(f"negative coefficient in assignment to {s.target}")
            return s
        if isinstance(s, A.AddAssign):
            coeffs, const = A.make_affine(list(s.coeffs) + [(s.target, Fraction(1))], s.const)
            if any(c < 0 for _, c in coeffs) or const < 0:
                raise DesugarError(f"negative coefficient in assignment to {s.target}")
            return A.Affine(s.target, coeffs, const)
        if isinstance(s, A.Sample):
            return s
        if isinstance(s, A.AddSample):
            aux = self.fresh()
            coeffs, const = A.make_affine([(s.target, 1), (aux, 1)])
            return _seq([A.Sample(aux, s.dist), A.Affine(s.target, coeffs, const)])
        if isinstance(s, A.Observe):
            return self.observe(s.cond)
        if isinstance(s, A.ObserveEvent):
            event = normalize_event(s.event)
            if self.naive:
                return A.IfEvent(event, A.Seq((A.Skip(),)), A.Seq((A.Fail(),)))
            return A.ObserveEvent(event)
        if isinstance(s, A.ObserveFrom):
            if self.naive:
                aux = self.fresh()
                return _seq([A.Sample(aux, s.dist),
                             A.IfEvent(A.InSet(aux, frozenset({s.value})),
                                       A.Seq((A.Skip(),)), A.Seq((A.Fail(),)))])
            return s
        if isinstance(s, A.If):
            return self.branch(s.cond, s.then, s.orelse)
        if isinstance(s, A.IfEvent):
            return A.IfEvent(normalize_event(s.event), _block(self.stmt(s.then)),
                             _block(self.stmt(s.orelse)))
        raise DesugarError(f"unexpected statement {s!r}")

    def observe(self, c):
        event = _as_event(c)
        if event is not None:
            return self.stmt(A.ObserveEvent(event))
        if isinstance(c, A.SampleCond):
            return self.stmt(A.ObserveFrom(c.value, c.dist))
        if isinstance(c, A.And):
            return _seq([self.observe(c.left), self.observe(c.right)])
        return self.branch(c, A.Seq((A.Skip(),)), A.Seq((A.Fail(),)))

    def branch(self, c, then, orelse):
        if isinstance(c, A.Not):
            return self.branch(c.cond, orelse, then)
        event = _as_event(c)
        if event is not None:
            return A.IfEvent(event, _block(self.stmt(then)), _block(self.stmt(orelse)))
        if isinstance(c, A.And):
            return self.branch(c.left, A.If(c.right, then, orelse), orelse)
        if isinstance(c, A.Or):
            return self.branch(c.left, then, A.If(c.right, then, orelse))
        if isinstance(c, A.SampleCond):
            aux = self.fresh()
            # branches are expanded after the test so nested sugar may reuse the scratch
            return _seq([A.Sample(aux, c.dist),
                         A.IfEvent(A.InSet(aux, frozenset({c.value})),
                                   _block(self.stmt(then)), _block(self.stmt(orelse)))])
        raise DesugarError(f"unsupported condition {c!r}")


def aux_var(program: A.Program) -> A.VarId:
    for v in program.variables:
        if v.name == AUX_NAME:
            return v
    return A.VarId(len(program.variables), AUX_NAME)


def desugar(stmt, aux: A.VarId, naive_observe: bool = False):
    """Core form of one statement (scratch variable supplied by the caller)."""
    return Desugarer(aux, naive_observe).stmt(stmt)


def desugar_program(program: A.Program, naive_observe: bool = False) -> A.Program:
    aux = aux_var(program)
    d = Desugarer(aux, naive_observe)
    body = _block(d.stmt(program.body))
    variables = program.variables
    if d.used_aux and aux not in variables:
        variables = variables + (aux,)
    return A.Program(variables, body, program.query)


def is_core(stmt) -> bool:
    return all(isinstance(s, A.CORE_TYPES) for s in A.walk(stmt))
