"""Generating-function semantics of core programs.

Typical use goes through :func:`translate` and :func:`eval_state`; the
smaller functions mirror single transformer steps and are mainly there for
tests and experiments.
"""

from __future__ import annotations

from fractions import Fraction

from .. import ast as A
from ..desugar import desugar_program
from ..errors import DomainError, ZeroEvidence
from ..kernels import Kernel
from ..taylor import TaylorPoly
from . import engine as E
from .engine import EvaluationStats, Request, lah_numbers
from .gfs import gf_series, mgf_series, pgf_series, pmf
from .translate import GfState, Translator, initial_state

__all__ = [
    "GfState", "Request", "EvaluationStats", "Translator", "initial_state", "translate",
    "transform", "observe_event", "observe_compound_binomial", "observe_compound_poisson",
    "observe_compound_negbinomial", "observe_compound_bernoulli", "marginalize", "normalize",
    "eval_state", "eval", "lah_numbers", "pgf_series", "mgf_series", "gf_series", "pmf",
    "point_of",
]


def translate(program: A.Program, kernel: Kernel, *, mgf: bool = True,
              naive_observe: bool = False, fuse: bool = True) -> tuple[GfState, A.Program]:
    """Desugar and translate ``program``; returns the final state and the core program."""
    core = desugar_program(program, naive_observe=naive_observe)
    g = initial_state(kernel, len(core.variables))
    g = Translator(mgf=mgf, fuse=fuse).run(core.body, g)
    return g, core


def transform(stmt, g: GfState, mgf: bool = True) -> GfState:
    """Apply one core statement."""
    return Translator(mgf=mgf, fuse=False).stmt(stmt, g)


def observe_event(g: GfState, event) -> GfState:
    return Translator().observe_event(event, g)


def _observe(g, d, kind, var, param):
    dist = A.Compound(kind, A.VarId(var, f"v{var}"), Fraction(param))
    return Translator().observe_from(d, dist, g)


def observe_compound_binomial(g: GfState, d: int, k: int, p) -> GfState:
    return _observe(g, d, "Binomial", k, p)


def observe_compound_poisson(g: GfState, d: int, k: int, lam) -> GfState:
    return _observe(g, d, "Poisson", k, lam)


def observe_compound_negbinomial(g: GfState, d: int, k: int, p) -> GfState:
    return _observe(g, d, "NegBinomial", k, p)


def observe_compound_bernoulli(g: GfState, d: int, k: int) -> GfState:
    return _observe(g, d, "Bernoulli", k, 1)


def marginalize(g: GfState, keep: int) -> GfState:
    """Set every variable except ``keep`` to one (t = 0 for continuous ones)."""
    kernel = g.kernel
    slots = [(i, E.ConstH(E.one(kernel, c))) for i, c in enumerate(g.coords) if i != keep]
    if not slots:
        return g
    return g.with_node(E.Subst(g.graph, g.node, slots))


def point_of(g: GfState, spec) -> tuple:
    """Kernel point for a 0/1 specification per variable."""
    kernel = g.kernel
    out = []
    for c, v in zip(g.coords, spec):
        if c == "t":
            if v != 1:
                raise DomainError("continuous variables can only be evaluated at one")
            out.append(kernel.zero())
        else:
            out.append(kernel.const(v))
    return tuple(out)


def eval_state(g: GfState, spec=None, order: int = 0, caps=None, memo: bool = True,
               stats: EvaluationStats | None = None) -> TaylorPoly:
    """Taylor expansion of the state at the 0/1 point ``spec`` to ``order``."""
    n = len(g.coords)
    spec = tuple(spec or ())
    spec = spec + (1,) * (n - len(spec))
    caps = (order,) * n if caps is None else tuple(min(c, order) for c in caps) + (0,) * (n - len(caps))
    req = Request(point_of(g, spec), caps, order)
    return E.evaluate(g.graph, g.node, req, memo=memo, stats=stats)


def normalize(g: GfState, memo: bool = True):
    """(normalized state, evidence)."""
    kernel = g.kernel
    evidence = eval_state(g, memo=memo).value()
    if g.is_zero or not kernel.positive(evidence):
        raise ZeroEvidence("the observations have probability zero")
    scaled = g.with_node(E.Scale(g.graph, g.node, kernel.div(kernel.one(), evidence)))
    return scaled, evidence


def eval(program: A.Program, spec, order: int, kernel: Kernel, *, normalized: bool = True,
         mgf: bool = True, memo: bool = True) -> TaylorPoly:
    """Expansion of the program's (normalized) generating function."""
    g, _ = translate(program, kernel, mgf=mgf)
    if normalized:
        g, _ = normalize(g, memo=memo)
    return eval_state(g, spec, order, memo=memo)
