"""Statement-by-statement translation of core programs into node graphs."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .. import ast as A
from ..desugar import AUX_NAME
from ..errors import UnsupportedEvent, UnsupportedOp
from . import engine as E
from . import gfs


@dataclass(frozen=True)
class GfState:
    """Handle on the generating function of the current program state.

    ``coords[i]`` is ``"x"`` when variable i is represented by its PGF
    coordinate and ``"t"`` when it is continuous and represented through
    ``x_i = exp(t_i)``.
    """

    graph: E.Graph
    node: E.Node
    coords: tuple
    bounds: tuple = ()

    @property
    def kernel(self):
        return self.graph.kernel

    @property
    def is_zero(self):
        return self.node.is_zero

    def with_node(self, node, coords=None, bounds=None):
        return GfState(self.graph, node, self.coords if coords is None else coords,
                       self.bounds if bounds is None else bounds)

    def bound(self, i):
        """Static upper bound on the support of variable i, or None."""
        return self.bounds[i] if i < len(self.bounds) else None


def initial_state(kernel, nvars: int) -> GfState:
    g = E.Graph(kernel, nvars)
    return GfState(g, E.Init(g), ("x",) * nvars, (0,) * nvars)


def _set(coords, i, c):
    out = list(coords)
    out[i] = c
    return tuple(out)


def _integral(q) -> bool:
    return Fraction(q).denominator == 1


def _dist_bound(dist, g):
    if isinstance(dist, A.Dist):
        p = dist.params
        top = {"Dirac": lambda: p[0], "Bernoulli": lambda: 1, "Categorical": lambda: len(p) - 1,
               "Binomial": lambda: p[0], "UniformDisc": lambda: p[1]}.get(dist.kind)
        if top is None or not _integral(top()):
            return None
        return int(top())
    if dist.kind == "Bernoulli":
        return 1
    if dist.kind == "Binomial":
        return g.bound(dist.var.index)
    return None


def _affine_bound(s, g):
    if not _integral(s.const) or s.const < 0:
        return None
    total = int(s.const)
    for v, a in s.coeffs:
        if a == 0:
            continue
        b = g.bound(v.index)
        if a < 0 or not _integral(a) or b is None:
            return None
        total += int(a) * b
    return total


def _max_bound(a, b):
    return None if a is None or b is None else max(a, b)


def _add_bounds(a, b):
    return None if a is None or b is None else a + b


class Translator:
    """Builds nodes for core statements.

    ``mgf=False`` keeps continuous variables in the x coordinate, which is
    numerically fragile; it exists to demonstrate why the t coordinate is
    the default.
    """

    def __init__(self, mgf: bool = True, fuse: bool = True):
        self.mgf = mgf
        self.fuse = fuse

    def cont_coord(self):
        return "t" if self.mgf else "x"

    # -- statements ------------------------------------------------------------

    def run(self, stmt, g: GfState) -> GfState:
        if isinstance(stmt, A.Seq):
            return self.seq(list(stmt.stmts), g)
        return self.stmt(stmt, g)

    def seq(self, stmts, g):
        i = 0
        while i < len(stmts):
            if self.fuse and i + 1 < len(stmts):
                fused = self.try_fuse(stmts[i], stmts[i + 1], g)
                if fused is not None:
                    g = fused
                    i += 2
                    continue
            g = self.stmt(stmts[i], g)
            i += 1
        return g

    def stmt(self, s, g: GfState) -> GfState:
        if isinstance(s, A.Skip):
            return g
        if isinstance(s, A.Seq):
            return self.seq(list(s.stmts), g)
        if isinstance(s, A.Fail):
            return g.with_node(g.graph.zero())
        if g.is_zero and not isinstance(s, (A.IfEvent,)):
            return self._zero_track(s, g)
        if isinstance(s, A.Affine):
            return self.affine(s, g)
        if isinstance(s, A.Sample):
            return self.sample(s.target.index, s.dist, g)
        if isinstance(s, A.ObserveEvent):
            return self.observe_event(s.event, g)
        if isinstance(s, A.ObserveFrom):
            return self.observe_from(s.value, s.dist, g)
        if isinstance(s, A.IfEvent):
            return self.if_event(s.event, s.then, s.orelse, g)
        raise TypeError(f"not a core statement: {s!r}")

    def _zero_track(self, s, g):
        # zero stays zero; only keep the coordinates in step
        if isinstance(s, A.Affine):
            return g.with_node(g.node, _set(g.coords, s.target.index, self._affine_coord(s, g)),
                               _set(g.bounds, s.target.index, None))
        if isinstance(s, A.Sample):
            c = self.cont_coord() if s.dist.continuous else "x"
            return g.with_node(g.node, _set(g.coords, s.target.index, c),
                               _set(g.bounds, s.target.index, None))
        return g

    # -- affine assignment -------------------------------------------------------

    def _affine_coord(self, s, g):
        terms = s.coeffs
        cont = any(g.coords[v.index] == "t" for v, a in terms if a != 0)
        fractional = not all(_integral(a) for _, a in terms) or not _integral(s.const)
        if not self.mgf:
            return "x"
        return "t" if cont or fractional else "x"

    def affine(self, s: A.Affine, g: GfState) -> GfState:
        k = s.target.index
        coeffs = {v.index: a for v, a in s.coeffs}
        if coeffs == {k: 1} and s.const == 0:
            return g
        kernel = g.kernel
        out = self._affine_coord(s, g)
        cin = g.coords
        ak = coeffs.get(k, Fraction(0))
        slots = []
        if ak == 0:
            slots.append((k, E.ConstH(E.one(kernel, cin[k]))))
        elif out == "t" and cin[k] == "t":
            if ak != 1:
                slots.append((k, E.SumH(None, k, ak)))
        elif out == "t":
            slots.append((k, E.SeriesH(k, E.exp_fn(ak))))
        elif ak != 1:
            slots.append((k, E.SeriesH(k, E.pow_fn(ak))))
        for i, a in sorted(coeffs.items()):
            if i == k:
                continue
            if out == "t" and cin[i] == "t":
                slots.append((i, E.SumH(i, k, a)))
            elif out == "t":
                slots.append((i, E.ProdH(i, k, E.exp_fn(a))))
            else:
                slots.append((i, E.ProdH(i, k, E.pow_fn(a))))
        factor = None
        if s.const != 0:
            factor = (k, E.exp_fn(s.const) if out == "t" else E.pow_fn(s.const))
        node = E.Subst(g.graph, g.node, slots, factor)
        return g.with_node(node, _set(g.coords, k, out), _set(g.bounds, k, _affine_bound(s, g)))

    # -- sampling -----------------------------------------------------------------

    def sample(self, k, dist, g: GfState) -> GfState:
        g = g.with_node(g.node, bounds=_set(g.bounds, k, _dist_bound(dist, g)))
        kernel = g.kernel
        cin = g.coords
        if isinstance(dist, A.Dist):
            out = self.cont_coord() if dist.continuous else "x"
            factor = (k, E.gf_fn(dist, mgf=(out == "t")))
            node = E.Subst(g.graph, g.node, [(k, E.ConstH(E.one(kernel, cin[k])))], factor)
            return g.with_node(node, _set(cin, k, out))
        j = dist.var.index
        if dist.kind == "Bernoulli":
            node = E.BernoulliSample(g.graph, g.node, k, j, cin)
            return g.with_node(node, _set(cin, k, "x"))
        unit = dist.unit()
        gf1 = E.gf_fn(unit)
        if j == k:
            if cin[k] == "t":
                builder = E.SumH(None, k, dist.param, -dist.param)
            else:
                builder = E.SeriesH(k, gf1)
            node = E.Subst(g.graph, g.node, [(k, builder)])
            return g.with_node(node, _set(cin, k, "x"))
        if cin[j] == "t":
            if dist.kind != "Poisson":
                raise UnsupportedOp(f"{dist.kind} needs a count variable, {dist.var} is continuous")
            hj = E.SumH(j, k, dist.param, -dist.param)
        else:
            hj = E.ProdH(j, k, gf1)
        node = E.Subst(g.graph, g.node, [(k, E.ConstH(E.one(kernel, cin[k]))), (j, hj)])
        return g.with_node(node, _set(cin, k, "x"))

    # -- observations --------------------------------------------------------------

    def _event(self, event, g):
        base, negated = A.event_base(event)
        k = base.var.index
        if g.coords[k] == "t":
            raise UnsupportedEvent(f"event on continuous variable {base.var}")
        return k, base.values, negated

    def slice_parts(self, event, g):
        """(in-event state, out-of-event state) for a discrete event."""
        k, values, negated = self._event(event, g)
        graph = g.graph
        top = g.bound(k)
        rest = None if top is None else frozenset(range(top + 1)) - values
        if g.is_zero:
            inside = outside = g
        elif not values:
            inside, outside = g.with_node(graph.zero()), g
        elif rest is not None and not rest:
            inside, outside = g, g.with_node(graph.zero())
        else:
            sl = E.Slice(graph, g.node, k, values)
            inside = g.with_node(sl)
            if rest is not None and max(rest) <= max(values):
                # the complement is no deeper than the event: slice it too
                # rather than subtract (avoids cancellation at no extra cost)
                outside = g.with_node(E.Slice(graph, g.node, k, rest))
            else:
                outside = g.with_node(E.Sum(graph, (g.node, E.Scale(graph, sl, g.kernel.const(-1)))))
        return (outside, inside) if negated else (inside, outside)

    def observe_event(self, event, g):
        return self.slice_parts(event, g)[0]

    def observe_from(self, value: int, dist, g: GfState) -> GfState:
        graph, kernel = g.graph, g.kernel
        if isinstance(dist, A.Dist):
            p = gfs.pmf(dist, value, kernel)
            if kernel.is_zero(p):
                return g.with_node(graph.zero())
            return g.with_node(E.Scale(graph, g.node, p))
        k = dist.var.index
        coord = g.coords[k]
        if dist.kind == "Binomial":
            node = E.ObserveBinomial(graph, g.node, k, value, dist.param)
        elif dist.kind == "NegBinomial":
            node = E.ObserveNegBinomial(graph, g.node, k, value, dist.param)
        elif dist.kind == "Poisson":
            node = E.ObservePoisson(graph, g.node, k, value, dist.param, coord)
        elif dist.kind == "Bernoulli":
            if value >= 2:
                return g.with_node(graph.zero())
            node = E.ObserveBernoulli(graph, g.node, k, value, coord)
        else:
            raise UnsupportedOp(f"no observation rule for compound {dist.kind}")
        if dist.kind in ("Binomial", "NegBinomial") and coord == "t":
            raise UnsupportedOp(f"{dist.kind} needs a count variable, {dist.var} is continuous")
        return g.with_node(node)

    # -- branching -----------------------------------------------------------------

    def merge(self, a: GfState, b: GfState) -> GfState:
        if a.is_zero:
            return b
        if b.is_zero:
            return a
        bounds = tuple(_max_bound(u, v) for u, v in zip(a.bounds, b.bounds))
        a, b = self.to_common(a, b.coords), self.to_common(b, a.coords)
        return a.with_node(E.Sum(a.graph, (a.node, b.node)), bounds=bounds)

    def to_common(self, g: GfState, other):
        """Move x-coordinate variables that are t in ``other`` to t."""
        slots = [(i, E.SeriesH(i, E.exp_fn(1))) for i, (c, o) in enumerate(zip(g.coords, other))
                 if c == "x" and o == "t"]
        if not slots:
            return g
        coords = tuple("t" if o == "t" else c for c, o in zip(g.coords, other))
        return g.with_node(E.Subst(g.graph, g.node, slots), coords)

    def if_event(self, event, then, orelse, g):
        inside, outside = self.slice_parts(event, g)
        return self.merge(self.run(then, inside), self.run(orelse, outside))

    # -- fusions ---------------------------------------------------------------------

    def try_fuse(self, s1, s2, g: GfState):
        """Peephole rules for the sugar expansions that go through ``__aux``.

        The scratch variable is always dead after these pairs, so its value
        need not be tracked.
        """
        if not isinstance(s1, A.Sample) or s1.target.name != AUX_NAME or g.is_zero:
            return None
        aux = s1.target
        dist = s1.dist
        if isinstance(s2, A.Affine):
            x = s2.target
            if x == aux or dict(s2.coeffs) != {x: 1, aux: 1} or s2.const != 0:
                return None
            xi = x.index
            coord = g.coords[xi]
            bounds = _set(g.bounds, xi, _add_bounds(g.bound(xi), _dist_bound(dist, g)))
            if isinstance(dist, A.Dist):
                want = self.cont_coord() if dist.continuous else "x"
                if coord != want or (dist.continuous and not self.mgf):
                    return None
                node = E.Subst(g.graph, g.node, [], (xi, E.gf_fn(dist, mgf=(want == "t"))))
                return g.with_node(node, bounds=bounds)
            if dist.kind == "Bernoulli" or coord != "x":
                return None
            j = dist.var.index
            if j == aux.index:
                return None
            gf1 = E.gf_fn(dist.unit())
            if j == xi:
                builder = E.SeriesH(xi, E.times_x_fn(gf1))
            elif g.coords[j] == "t":
                builder = E.SumH(j, xi, dist.param, -dist.param)
            else:
                builder = E.ProdH(j, xi, gf1)
            return g.with_node(E.Subst(g.graph, g.node, [(j, builder)]), bounds=bounds)
        if isinstance(s2, A.IfEvent) and isinstance(dist, A.Dist) and not dist.continuous:
            base, negated = A.event_base(s2.event)
            if base.var != aux:
                return None
            kernel, graph = g.kernel, g.graph
            p = gfs.event_probability(dist, base.values, kernel)
            q = kernel.one() - p
            if negated:
                p, q = q, p
            inside = g.with_node(graph.zero()) if kernel.is_zero(p) else g.with_node(E.Scale(graph, g.node, p))
            outside = g.with_node(graph.zero()) if kernel.is_zero(q) else g.with_node(E.Scale(graph, g.node, q))
            return self.merge(self.run(s2.then, inside), self.run(s2.orelse, outside))
        return None
