"""Deferred evaluation of generating-function transformers.

Translation builds a DAG of nodes; each node is the generating function of
the program state after some statement.  A node cannot be evaluated in
isolation: to get its expansion at a point it asks its inputs for
expansions at (usually different) points and to higher order.  Evaluation
therefore runs in two sweeps:

* planning walks the nodes from the output backwards and collects, per
  node, the points at which it is needed together with the largest caps and
  degree anyone asked for at that point;
* computing walks forward, evaluating every requested (node, point) once
  and dropping results as soon as their last consumer has run.

The merge in the planning sweep is the memoization of shared branch
prefixes: the slice and the complement of an ``if`` both ask the pre-branch
state for the same point, which is then expanded only once.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .. import taylor as T
from ..taylor import TaylorPoly
from . import gfs


@dataclass(frozen=True)
class Request:
    point: tuple
    caps: tuple
    degree: int

    def shape(self):
        return tuple(min(c, self.degree) + 1 for c in self.caps)


def _with(seq, i, value):
    out = list(seq)
    out[i] = value
    return tuple(out)


def one(kernel, coord):
    """The all-ones point: x = 1 or t = 0."""
    return kernel.one() if coord == "x" else kernel.zero()


def _rebase(p, point, degree, shape):
    p = T.truncate(p, shape, degree)
    return TaylorPoly(p.kernel, point, p.coeffs, p.degree)


def _length(req, k):
    return min(req.caps[k], req.degree) + 1


# -- slot builders ------------------------------------------------------------
#
# A builder describes what one input slot becomes in terms of the output
# variables.  ``value`` gives the input expansion point, ``build`` the Taylor
# polynomial of the substituted expression at the output point.

class ConstH:
    deps = ()

    def __init__(self, c):
        self.c = c

    def value(self, kernel, point):
        return self.c

    def build(self, kernel, req):
        return T.constant(kernel, self.c, req.point, req.degree)


class SeriesH:
    """``g(x_k)`` for a univariate expansion ``fn(kernel, w, length)``."""

    def __init__(self, k, fn):
        self.k = k
        self.fn = fn
        self.deps = (k,)

    def value(self, kernel, point):
        return self.fn(kernel, point[self.k], 1)[0]

    def build(self, kernel, req):
        vals = self.fn(kernel, req.point[self.k], _length(req, self.k))
        return T.univariate(kernel, vals, self.k, req.point, req.degree)


class ProdH:
    """``x_s * g(x_k)`` with ``s != k``."""

    def __init__(self, s, k, fn):
        self.s, self.k, self.fn = s, k, fn
        self.deps = (s, k)

    def value(self, kernel, point):
        return point[self.s] * self.fn(kernel, point[self.k], 1)[0]

    def build(self, kernel, req):
        n = len(req.point)
        g = self.fn(kernel, req.point[self.k], _length(req, self.k))
        ls = min(2, _length(req, self.s))
        shape = [1] * n
        shape[self.s] = ls
        shape[self.k] = len(g)
        coeffs = kernel.zeros(tuple(shape))
        gk = T._axis_vector(g, self.k, n)
        coeffs[T._index(self.s, n, slice(0, 1))] = gk * req.point[self.s]
        if ls > 1:
            coeffs[T._index(self.s, n, slice(1, 2))] = gk
        return TaylorPoly(kernel, req.point, T._apply_degree(kernel, coeffs, req.degree), req.degree)


class SumH:
    """``t_s + a * u_k + b`` (``s`` may be None), the additive MGF shift."""

    def __init__(self, s, k, a, b=Fraction(0)):
        self.s, self.k, self.a, self.b = s, k, Fraction(a), Fraction(b)
        self.deps = (k,) if s is None else (s, k)

    def value(self, kernel, point):
        v = kernel.const(self.a) * point[self.k] + kernel.const(self.b)
        return v if self.s is None else point[self.s] + v

    def build(self, kernel, req):
        n = len(req.point)
        out = T.constant(kernel, self.value(kernel, req.point), req.point, req.degree)
        if req.degree == 0:
            return out
        terms = [(self.k, kernel.const(self.a))]
        if self.s is not None:
            terms.append((self.s, kernel.one()))
        shape = [1] * n
        for v, _ in terms:
            if req.caps[v] > 0:
                shape[v] = 2
        coeffs = kernel.zeros(tuple(shape))
        coeffs[(0,) * n] = out.value()
        for v, c in terms:
            if shape[v] == 2:
                idx = [0] * n
                idx[v] = 1
                coeffs[tuple(idx)] = coeffs[tuple(idx)] + c
        return TaylorPoly(kernel, req.point, coeffs, req.degree)


def pow_fn(a):
    return lambda kernel, w, length: gfs.power_series(kernel, a, w, length)


def exp_fn(a):
    return lambda kernel, w, length: gfs.exp_series(kernel, kernel.const(a), w, length)


def gf_fn(dist, mgf=False):
    return lambda kernel, w, length: gfs.gf_series(dist, kernel, w, length, mgf)


def times_x_fn(fn):
    """Expansion of ``x * g(x)`` from one of ``g``."""
    def build(kernel, w, length):
        g = fn(kernel, w, length)
        vals = [g[0] * w]
        for j in range(1, length):
            vals.append(g[j] * w + g[j - 1])
        return kernel.vector(vals)
    return build


# -- nodes ------------------------------------------------------------------

class Node:
    """One generating function in the DAG; ``inputs`` have smaller ids."""

    inputs: tuple = ()
    is_zero = False

    def __init__(self, graph, inputs=()):
        self.graph = graph
        self.kernel = graph.kernel
        self.inputs = tuple(inputs)
        self.id = graph.register(self)

    def plan(self, req):
        return [req for _ in self.inputs]

    def compute(self, req, inputs):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}#{self.id}"


class Init(Node):
    """The constant 1: every variable is 0 with probability one."""

    def compute(self, req, inputs):
        return T.constant(self.kernel, self.kernel.one(), req.point, req.degree)


class Zero(Node):
    is_zero = True

    def compute(self, req, inputs):
        return T.constant(self.kernel, self.kernel.zero(), req.point, req.degree)


class Scale(Node):
    def __init__(self, graph, parent, c):
        super().__init__(graph, (parent,))
        self.c = c

    def compute(self, req, inputs):
        return _rebase(T.scale(self.c, inputs[0]), req.point, req.degree, req.shape())


class Sum(Node):
    def compute(self, req, inputs):
        shape = req.shape()
        a = _rebase(inputs[0], req.point, req.degree, shape)
        b = _rebase(inputs[1], req.point, req.degree, shape)
        return _rebase(T.add(a, b), req.point, req.degree, shape)


class Subst(Node):
    """``G(x[slot -> h_slot(x)]) * factor(x_k)``.

    ``slots`` is an ordered list of (input slot, builder); a builder may
    refer to output variables whose slots were substituted earlier in the
    list, never later.  ``factor`` is an optional (axis, fn) pair giving a
    univariate multiplier.
    """

    def __init__(self, graph, parent, slots, factor=None):
        super().__init__(graph, (parent,))
        self.slots = list(slots)
        self.factor = factor

    def _input_request(self, req):
        point = list(req.point)
        caps = list(req.caps)
        for slot, b in self.slots:
            point[slot] = b.value(self.kernel, req.point)
            caps[slot] = min(req.degree, sum(req.caps[v] for v in b.deps)) if b.deps else 0
        return Request(tuple(point), tuple(caps), req.degree)

    def plan(self, req):
        return [self._input_request(req)]

    def compute(self, req, inputs):
        kernel = self.kernel
        inreq = self._input_request(req)
        p = T.truncate(inputs[0], inreq.shape(), req.degree)
        pending = {slot for slot, _ in self.slots}
        for slot, b in self.slots:
            pending.discard(slot)
            shape = tuple((inreq.caps[v] if v in pending else min(req.caps[v], req.degree)) + 1
                          for v in range(len(req.point)))
            p = T.substitute(p, slot, b.build(kernel, req), shape=shape, check=False)
        if self.factor is not None:
            k, fn = self.factor
            vals = fn(kernel, req.point[k], _length(req, k))
            f = T.univariate(kernel, vals, k, req.point, req.degree)
            p = T.mul(_rebase(p, req.point, req.degree, req.shape()), f, shape=req.shape())
        return _rebase(p, req.point, req.degree, req.shape())


def slice_coeffs(kernel, p, k, values, w_k, out_len):
    """Keep the x_k-exponents in ``values`` of an expansion at x_k = 0 and
    re-expand at ``w_k``."""
    coeffs = p.coeffs
    n = coeffs.ndim
    keep = kernel.zeros(coeffs.shape)
    for i in values:
        if i < coeffs.shape[k]:
            sl = T._index(k, n, slice(i, i + 1))
            keep[sl] = coeffs[sl]
    return T.recenter_axis(kernel, keep, k, w_k, out_len)


class Slice(Node):
    """``G_{X_k in A}``: the part of the mass where X_k lies in A."""

    def __init__(self, graph, parent, k, values):
        super().__init__(graph, (parent,))
        self.k = k
        self.values = frozenset(values)
        self.top = max(self.values)

    def plan(self, req):
        return [Request(_with(req.point, self.k, self.kernel.zero()),
                        _with(req.caps, self.k, self.top), req.degree + self.top)]

    def compute(self, req, inputs):
        kernel = self.kernel
        inreq = self.plan(req)[0]
        p = T.truncate(inputs[0], inreq.shape(), inreq.degree)
        coeffs = slice_coeffs(kernel, p, self.k, self.values, req.point[self.k],
                              _length(req, self.k))
        T._tick("slice", coeffs.size)
        coeffs = T._apply_degree(kernel, coeffs, req.degree)
        return _rebase(TaylorPoly(kernel, req.point, coeffs, req.degree),
                       req.point, req.degree, req.shape())


def _bump(req, k, point_k, extra):
    return Request(_with(req.point, k, point_k),
                   _with(req.caps, k, min(req.caps[k], req.degree) + extra), req.degree + extra)


def x_derivative(p, k):
    """``x_k * d/dx_k`` of an expansion at ``w_k``; degree drops by one."""
    kernel = p.kernel
    n = p.nvars
    length = p.shape[k]
    w = p.base[k]
    js = T._axis_vector(kernel.arange(0, length), k, n)
    out = p.coeffs * js
    if length > 1:
        up = T._axis_vector(kernel.arange(1, length), k, n)
        shifted = T._take(p.coeffs, k, 1) * up * w
        sl = T._index(k, n, slice(0, length - 1))
        out[sl] = out[sl] + shifted
    T._tick("x_derivative", out.size)
    degree = p.degree - 1
    return TaylorPoly(kernel, p.base, T._apply_degree(kernel, out, degree), degree)


class ObserveBinomial(Node):
    """Observe d ~ Binomial(X_k, p) without a fresh variable."""

    def __init__(self, graph, parent, k, d, p):
        super().__init__(graph, (parent,))
        self.k, self.d, self.p = k, d, Fraction(p)

    def plan(self, req):
        q = self.kernel.const(1 - self.p)
        return [_bump(req, self.k, q * req.point[self.k], self.d)]

    def compute(self, req, inputs):
        kernel, k, d = self.kernel, self.k, self.d
        inreq = self.plan(req)[0]
        g = T.truncate(inputs[0], inreq.shape(), inreq.degree)
        g = T.divided_derivative(g, k, d)
        g = T.scale_axis(g, k, kernel.const(1 - self.p), new_base=req.point[k])
        g = _rebase(g, req.point, req.degree, req.shape())
        if d:
            mono = gfs.power_series(kernel, d, req.point[k], _length(req, k)) * kernel.const(self.p ** d)
            g = T.mul(g, T.univariate(kernel, mono, k, req.point, req.degree), shape=req.shape())
        return _rebase(g, req.point, req.degree, req.shape())


class ObservePoisson(Node):
    """Observe d ~ Poisson(lam * X_k).

    In the x coordinate this applies ``(lam x d/dx)`` d times and then
    evaluates at ``exp(-lam) x``.  In the t coordinate the likelihood
    ``exp(-lam X) (lam X)^d / d!`` is a shift by ``-lam`` followed by a
    plain d-th derivative.
    """

    def __init__(self, graph, parent, k, d, lam, coord):
        super().__init__(graph, (parent,))
        self.k, self.d, self.lam, self.coord = k, d, Fraction(lam), coord

    def plan(self, req):
        kernel = self.kernel
        w = req.point[self.k]
        lam = kernel.const(self.lam)
        if self.coord == "t":
            return [_bump(req, self.k, w - lam, self.d)]
        return [_bump(req, self.k, kernel.exp(-lam) * w, self.d)]

    def compute(self, req, inputs):
        kernel, k, d = self.kernel, self.k, self.d
        inreq = self.plan(req)[0]
        g = T.truncate(inputs[0], inreq.shape(), inreq.degree)
        lam = kernel.const(self.lam)
        if self.coord == "t":
            g = T.scale(kernel.ipow(lam, d), T.divided_derivative(g, k, d))
            return _rebase(g, req.point, req.degree, req.shape())
        for i in range(1, d + 1):
            g = T.scale(lam * kernel.const(Fraction(1, i)), x_derivative(g, k))
        g = T.scale_axis(g, k, kernel.exp(-lam), new_base=req.point[k])
        return _rebase(g, req.point, req.degree, req.shape())


def lah_numbers(d: int) -> list[int]:
    """Row d of the (unsigned) Lah triangle."""
    row = [1]
    for m in range(d):
        nxt = [0] * (m + 2)
        for i in range(m + 2):
            a = (m + i) * row[i] if i <= m else 0
            b = row[i - 1] if i >= 1 else 0
            nxt[i] = a + b
        row = nxt
    return row


class ObserveNegBinomial(Node):
    """Observe d ~ NegBinomial(X_k, p) through Lah numbers."""

    def __init__(self, graph, parent, k, d, p):
        super().__init__(graph, (parent,))
        self.k, self.d, self.p = k, d, Fraction(p)

    def plan(self, req):
        return [_bump(req, self.k, self.kernel.const(self.p) * req.point[self.k], self.d)]

    def compute(self, req, inputs):
        kernel, k, d, p = self.kernel, self.k, self.d, self.p
        inreq = self.plan(req)[0]
        g = T.truncate(inputs[0], inreq.shape(), inreq.degree)
        lah = lah_numbers(d)
        shape = req.shape()
        xk = T.variable(kernel, k, req.point, req.degree)
        result = None
        for i in range(d, -1, -1):
            coef = Fraction(lah[i] * math.factorial(i), math.factorial(d)) * (1 - p) ** d * p ** i
            term = T.truncate(T.divided_derivative(g, k, i), None, req.degree)
            term = T.scale_axis(term, k, kernel.const(p), new_base=req.point[k])
            term = _rebase(T.scale(kernel.const(coef), term), req.point, req.degree, shape)
            if result is None:
                result = term
            else:
                result = T.add(T.mul(result, xk, shape=shape), term)
        return _rebase(result, req.point, req.degree, shape)


class ObserveBernoulli(Node):
    """Observe d ~ Bernoulli(X_j) for d in {0, 1}."""

    def __init__(self, graph, parent, j, d, coord):
        super().__init__(graph, (parent,))
        self.j, self.d, self.coord = j, d, coord

    def plan(self, req):
        return [_bump(req, self.j, req.point[self.j], 1)]

    def _weighted(self, g, req):
        # x_j dG/dx_j, or dH/dt_j in the t coordinate
        if self.coord == "t":
            return T.divided_derivative(g, self.j, 1)
        dj = T.divided_derivative(g, self.j, 1)
        return T.mul(dj, T.variable(self.kernel, self.j, g.base, dj.degree), shape=req.shape())

    def compute(self, req, inputs):
        inreq = self.plan(req)[0]
        g = T.truncate(inputs[0], inreq.shape(), inreq.degree)
        b = _rebase(self._weighted(g, req), req.point, req.degree, req.shape())
        if self.d == 1:
            return b
        return _rebase(T.sub(_rebase(g, req.point, req.degree, req.shape()), b),
                       req.point, req.degree, req.shape())


class BernoulliSample(Node):
    """``X_k ~ Bernoulli(X_j)``: G(x[k->1]) + (x_k - 1) x_j dG/dx_j (x[k->1])."""

    def __init__(self, graph, parent, k, j, in_coords):
        super().__init__(graph, (parent,))
        self.k, self.j = k, j
        self.k_one = one(self.kernel, in_coords[k])
        self.j_coord = in_coords[j]

    def plan(self, req):
        point = _with(req.point, self.k, self.k_one)
        if self.j == self.k:
            return [Request(point, _with(req.caps, self.k, 1), req.degree + 1)]
        caps = _with(req.caps, self.k, 0)
        caps = _with(caps, self.j, min(req.caps[self.j], req.degree) + 1)
        return [Request(point, caps, req.degree + 1)]

    def compute(self, req, inputs):
        kernel, k, j = self.kernel, self.k, self.j
        inreq = self.plan(req)[0]
        g = T.truncate(inputs[0], inreq.shape(), inreq.degree)
        shape = req.shape()
        a = TaylorPoly(kernel, g.base, T._take(g.coeffs, k, 0, 1), g.degree)
        if j == k:
            coeffs = T._take(g.coeffs, k, 1, 2) if g.shape[k] > 1 else \
                kernel.zeros(a.coeffs.shape)
            b = TaylorPoly(kernel, g.base, coeffs, g.degree - 1)
        else:
            b = T.divided_derivative(a, j, 1)
            if self.j_coord == "x":
                b = T.mul(b, T.variable(kernel, j, b.base, b.degree))
        a = TaylorPoly(kernel, req.point, a.coeffs, a.degree)
        b = _rebase(b, req.point, req.degree, shape)
        w = req.point[k]
        vals = kernel.vector([w - kernel.one(), kernel.one()][: _length(req, k)])
        factor = T.univariate(kernel, vals, k, req.point, req.degree)
        out = T.add(_rebase(a, req.point, req.degree, shape), T.mul(b, factor, shape=shape))
        return _rebase(out, req.point, req.degree, shape)


# -- graph and evaluator --------------------------------------------------------

class Graph:
    def __init__(self, kernel, nvars: int):
        self.kernel = kernel
        self.nvars = nvars
        self.nodes: list[Node] = []
        self._zero = None

    def register(self, node) -> int:
        self.nodes.append(node)
        return len(self.nodes) - 1

    def zero(self):
        if self._zero is None:
            self._zero = Zero(self)
        return self._zero


class EvaluationStats:
    def __init__(self):
        self.requests = 0
        self.nodes = 0
        self.max_degree = 0


def evaluate(graph: Graph, root: Node, request: Request, memo: bool = True,
             stats: EvaluationStats | None = None) -> TaylorPoly:
    """Expansion of ``root`` for ``request``."""
    kernel = graph.kernel
    serial = itertools.count()

    def key_of(req):
        if memo:
            return tuple(kernel.key(c) for c in req.point)
        return next(serial)

    root_key = key_of(request)
    tables: dict[int, dict] = {root.id: {root_key: request}}
    links: dict = {}
    refs: dict = {}
    nodes = graph.nodes
    for nid in range(root.id, -1, -1):
        table = tables.get(nid)
        if not table:
            continue
        node = nodes[nid]
        for key, req in table.items():
            targets = []
            for parent, preq in zip(node.inputs, node.plan(req)):
                preq = Request(preq.point, tuple(min(c, preq.degree) for c in preq.caps), preq.degree)
                ptable = tables.setdefault(parent.id, {})
                pkey = key_of(preq)
                old = ptable.get(pkey)
                if old is not None:
                    preq = Request(old.point, tuple(map(max, old.caps, preq.caps)),
                                   max(old.degree, preq.degree))
                ptable[pkey] = preq
                targets.append((parent.id, pkey))
                refs[(parent.id, pkey)] = refs.get((parent.id, pkey), 0) + 1
            links[(nid, key)] = targets

    results: dict = {}
    for nid in sorted(tables):
        node = nodes[nid]
        for key, req in tables[nid].items():
            ins = [results[t] for t in links[(nid, key)]]
            results[(nid, key)] = node.compute(req, ins)
            if stats is not None:
                stats.requests += 1
                stats.max_degree = max(stats.max_degree, req.degree)
            for t in links[(nid, key)]:
                refs[t] -= 1
                if refs[t] == 0:
                    del results[t]
        if stats is not None:
            stats.nodes += 1
    out = results[(root.id, root_key)]
    return _rebase(out, request.point, request.degree, request.shape())
