import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gfinfer import taylor as T
from gfinfer.errors import DivisionByZero, DomainError, UnsupportedOp
from gfinfer.kernels import make_kernel

F64 = make_kernel("float64")
RAT = make_kernel("rational")


def dense(p, shape=None):
    """Coefficients as a float array padded to ``shape``."""
    k = p.kernel
    arr = np.vectorize(lambda c: float(k.to_float(c)), otypes=[float])(p.coeffs)
    if shape is None:
        return arr
    out = np.zeros(shape)
    out[tuple(slice(0, s) for s in arr.shape)] = arr[tuple(slice(0, s) for s in shape)]
    return out


def exact(p, n):
    return [RAT.to_fraction(T.coefficient(p, (j,))) if j < p.shape[0] else 0 for j in range(n)]


def series(kernel, values, base, degree):
    return T.TaylorPoly(kernel, (base,), kernel.vector([kernel.const(v) for v in values]), degree)


# -- generators --------------------------------------------------------------

def test_const_and_var():
    c = T.const(1, 2, 3)
    assert T.coefficient(c, (0, 0)) == 1 and c.degree == 3
    v = T.var(0, 0.9, 2, 3)
    assert T.coefficient(v, (0, 0)) == 0.9 and T.coefficient(v, (1, 0)) == 1
    assert T.coefficient(v, (0, 1)) == 0
    with pytest.raises(IndexError):
        T.var(2, 0.0, 2, 3)


def test_add_and_scale():
    x = T.var(0, 0, 1, 3, kernel=RAT)
    s = (1 + x) + (1 - x)
    assert exact(s, 4) == [2, 0, 0, 0]
    assert exact(T.scale(RAT.zero(), 1 + x), 2) == [0, 0]


def test_base_mismatch():
    p = T.var(0, 0.5, 1, 2)
    q = T.var(0, 0.0, 1, 2)
    with pytest.raises(T.BaseMismatch):
        T.add(p, q)


def test_truncated_products():
    x = T.var(0, 0, 1, 2, kernel=RAT)
    assert exact((1 + x) * (1 + x), 3) == [1, 2, 1]
    x1 = T.var(0, 0, 1, 1, kernel=RAT)
    assert exact((1 + x1) * (1 + x1), 3) == [1, 2, 0]


def test_exponential_square():
    D = 30
    a = series(F64, [math.exp(-2) * 20**j / math.factorial(j) for j in range(D + 1)], 0.9, D)
    want = [math.exp(-4) * 40**j / math.factorial(j) for j in range(D + 1)]
    np.testing.assert_allclose(dense(T.mul(a, a)), want, rtol=1e-12)


def test_div_linear():
    x = T.var(0, 0, 1, 3, kernel=RAT)
    assert exact(T.div_linear(T.const(1, 1, 3, kernel=RAT), 1 - x), 4) == [1, 1, 1, 1]
    p = (1 + x) * (2 + x)
    assert exact(T.div_linear(p, T.const(1, 1, 3, kernel=RAT)), 4) == exact(p, 4)
    t = T.var(0, 0, 1, 2, kernel=RAT)
    assert exact(T.div_linear(T.const(1, 1, 2, kernel=RAT), 1 - t), 3) == [1, 1, 1]
    with pytest.raises(DivisionByZero):
        T.div_linear(T.const(1, 1, 2, kernel=RAT), x)


def test_elementary_series():
    x = T.var(0, 0, 1, 2, kernel=F64)
    np.testing.assert_allclose(dense(T.exp_t(x)), [1, 1, 0.5])
    y = T.var(0, 0, 1, 8, kernel=F64)
    np.testing.assert_allclose(dense(T.ln_t(T.exp_t(y)), (9,)), [0, 1] + [0] * 7, atol=1e-15)
    z = T.var(0, 0, 1, 2, kernel=RAT)
    assert exact(T.pow_t(1 + z, 2), 3) == [1, 2, 1]
    # a negative and a fractional power against the binomial series
    w = T.var(0, 0, 1, 6, kernel=F64)
    got = dense(T.pow_t(1 + w, -3))
    np.testing.assert_allclose(got, [((-1) ** j) * math.comb(j + 2, 2) for j in range(7)])
    half = dense(T.pow_t(1 + w, Fraction(1, 2)))
    np.testing.assert_allclose(half[:4], [1, 0.5, -0.125, 0.0625])


def test_series_errors():
    x = T.var(0, 0, 1, 3, kernel=F64)
    with pytest.raises(DomainError):
        T.ln_t(x)
    with pytest.raises(DomainError):
        T.pow_t(x, Fraction(1, 2))
    with pytest.raises(UnsupportedOp):
        T.exp_t(T.var(0, 1, 1, 3, kernel=RAT))
    xy = T.mul(T.var(0, 0, 2, 3), T.var(1, 0, 2, 3))
    with pytest.raises(ValueError):
        T.exp_t(xy)


def test_series_agree_across_kernels():
    for kind, prec in [("bigfloat", 100), ("interval", None), ("interval", 80)]:
        k = make_kernel(kind, prec)
        x = T.var(0, Fraction(1, 2), 1, 10, kernel=k)
        want = dense(T.pow_t(T.var(0, 0.5, 1, 10, kernel=F64) + 1, Fraction(-3, 2)))
        got = dense(T.pow_t(x + 1, Fraction(-3, 2)))
        np.testing.assert_allclose(got, want, rtol=1e-13)


def test_derive():
    p = series(RAT, [3, 5, 7], 0, 2)
    assert exact(T.derive(p, 0), 2) == [5, 14]
    c = T.const(4, 1, 3, kernel=RAT)
    assert exact(T.derive(c, 0), 1) == [0]
    with pytest.raises(ValueError):
        T.derive(T.const(1, 1, 0), 0)
    # x^2 y^2 at (1, 1)
    x = T.var(0, 1, 2, 4, kernel=RAT)
    y = T.var(1, 1, 2, 4, kernel=RAT)
    dx = T.derive(x * x * y * y, 0)
    assert RAT.to_fraction(T.coefficient(dx, (0, 2))) == 2


def test_substitute_worked_example():
    D = 3
    p = series(F64, [math.exp(-2) * 20**j / math.factorial(j) for j in range(D + 1)], 0.9, D)
    p = T.TaylorPoly(F64, (0.9, 0.0), p.coeffs.reshape(-1, 1), D)
    x = T.var(0, 1.0, 2, D, base=(1.0, 0.0))
    y = T.var(1, 0.0, 2, D, base=(1.0, 0.0))
    r = T.substitute(p, 0, x * (0.9 + 0.1 * y))
    assert math.isclose(T.coefficient(r, (1, 0)), 18 * math.exp(-2), rel_tol=1e-14)
    assert math.isclose(T.coefficient(r, (0, 1)), 2 * math.exp(-2), rel_tol=1e-14)


def test_substitute_identity_and_constant():
    x = T.var(0, Fraction(1, 2), 2, 4, kernel=RAT)
    y = T.var(1, Fraction(1, 3), 2, 4, kernel=RAT)
    p = (1 + x * y) * (2 + x) * (1 + y * y)
    same = T.substitute(p, 0, x)
    assert np.array_equal(dense(same, (5, 5)), dense(p, (5, 5)))
    # G(x, y) expanded with x at 1, then x -> 1
    x1 = T.var(0, 1, 2, 4, kernel=RAT)
    q = (1 + x1 * y) * (2 + x1)
    sliced = T.substitute(q, 0, T.const(1, 2, 4, kernel=RAT, base=(RAT.one(), RAT.const(Fraction(1, 3)))))
    direct = (1 + y) * 3
    assert np.array_equal(dense(sliced, (1, 5)), dense(direct, (1, 5)))


def test_degree_one_substitution_uses_fast_path():
    D = 40
    p = series(F64, [1 / 2**j for j in range(D + 1)], 0.25, D)
    with T.count_operations() as c:
        T.substitute(p, 0, T.var(0, 0.5, 1, D) * 0.5)
    assert c["subst_scale"] == 1 and c["subst_horner"] == 0


def test_coefficient_example():
    D = 12
    e18 = series(F64, [math.exp(-18) * 18**j / math.factorial(j) for j in range(D + 1)], 0.0, D)
    x = T.var(0, 0.0, 1, D)
    p = e18 * x * x
    c = T.coefficient(p, (10,))
    assert math.isclose(c, 18**8 / math.factorial(8) * math.exp(-18), rel_tol=1e-13)
    # the commonly quoted 4.1631e-3 is itself rounded loosely: exact is 4.16254e-3
    assert math.isclose(c, 4.1631e-3, rel_tol=5e-4)
    assert T.coefficient(p, (0,)) == p.value()
    assert T.derivative_value(p, (2,)) == 2 * T.coefficient(p, (2,))
    with pytest.raises(IndexError):
        T.coefficient(p, (D + 1,))


# -- properties ---------------------------------------------------------------

small_q = st.fractions(min_value=-3, max_value=3, max_denominator=7)


@st.composite
def bivariate(draw, degree=4, kernel=RAT):
    n = draw(st.integers(1, degree + 1))
    m = draw(st.integers(1, degree + 1))
    vals = draw(st.lists(small_q, min_size=n * m, max_size=n * m))
    coeffs = kernel.zeros((n, m))
    for i in range(n):
        for j in range(m):
            coeffs[i, j] = kernel.const(vals[i * m + j])
    base = (kernel.const(Fraction(1, 2)), kernel.zero())
    return T.TaylorPoly(kernel, base, T._apply_degree(kernel, coeffs, degree), degree)


def same(p, q):
    shape = tuple(max(a, b) for a, b in zip(p.shape, q.shape))
    return np.array_equal(T._fit(p.kernel, p.coeffs, shape), T._fit(q.kernel, q.coeffs, shape))


@settings(max_examples=60, deadline=None)
@given(bivariate(), bivariate(), bivariate())
def test_ring_laws_exact(p, q, r):
    assert same(T.add(p, q), T.add(q, p))
    assert same(T.mul(p, q), T.mul(q, p))
    assert same(T.mul(T.mul(p, q), r), T.mul(p, T.mul(q, r)))
    assert same(T.add(T.add(p, q), r), T.add(p, T.add(q, r)))
    assert same(T.mul(p, T.add(q, r)), T.add(T.mul(p, q), T.mul(p, r)))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=9, max_size=9),
       st.lists(st.floats(-2, 2), min_size=9, max_size=9),
       st.lists(st.floats(-2, 2), min_size=9, max_size=9))
def test_ring_laws_float(a, b, c):
    p, q, r = (T.TaylorPoly(F64, (0.0,), np.array(v), 8) for v in (a, b, c))
    lhs = dense(T.mul(p, T.add(q, r)), (9,))
    rhs = dense(T.add(T.mul(p, q), T.mul(p, r)), (9,))
    scale_ = np.abs(a).sum() * (np.abs(b).sum() + np.abs(c).sum()) + 1e-300
    assert np.all(np.abs(lhs - rhs) <= 1e-9 * scale_)
    np.testing.assert_allclose(dense(T.mul(T.mul(p, q), r), (9,)), dense(T.mul(p, T.mul(q, r)), (9,)),
                               atol=1e-9 * (scale_ + 1) * (np.abs(c).sum() + 1))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=2, max_size=7), st.floats(-0.8, 0.8))
def test_derivative_matches_finite_difference(vals, w):
    # a polynomial expanded at w; compare derive() with a central difference
    D = len(vals) - 1
    p = T.TaylorPoly(F64, (w,), np.array(vals), D)
    d = T.derive(p, 0)
    h = 1e-5

    def f(x):
        return sum(c * (x - w) ** j for j, c in enumerate(vals))

    fd = (f(w + h) - f(w - h)) / (2 * h)
    assert math.isclose(d.value(), fd, rel_tol=1e-6, abs_tol=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 3), st.floats(-1, 1), st.floats(0.05, 0.5))
def test_composition_consistency(a, b, x0):
    # exp(a * h(x)) with h affine, and 1 / (1 - h(x)), against closed forms
    D = 10
    h = T.var(0, x0, 1, D) * 0.5 + b * 0.1
    h0 = 0.5 * x0 + 0.1 * b
    outer = series(F64, [math.exp(a * h0) * a**j / math.factorial(j) for j in range(D + 1)], h0, D)
    got = dense(T.substitute(outer, 0, h), (D + 1,))
    want = [math.exp(a * h0) * (0.5 * a) ** j / math.factorial(j) for j in range(D + 1)]
    np.testing.assert_allclose(got, want, rtol=1e-9)
    geo = series(F64, [1 / (1 - h0) ** (j + 1) for j in range(D + 1)], h0, D)
    got = dense(T.substitute(geo, 0, h), (D + 1,))
    np.testing.assert_allclose(got, [0.5**j / (1 - h0) ** (j + 1) for j in range(D + 1)], rtol=1e-9)


@settings(max_examples=40, deadline=None)
@given(bivariate(degree=6), bivariate(degree=6), st.integers(0, 5))
def test_truncation_monotone(p, q, d2):
    full = T.truncate(T.mul(p, q), degree=d2)
    direct = T.mul(T.truncate(p, degree=d2), T.truncate(q, degree=d2))
    assert same(full, direct)


def test_substitution_cost_is_cubic():
    ops = []
    sizes = [20, 40, 80]
    for D in sizes:
        x = T.var(0, 0.5, 1, D)
        p = T.exp_t(x)
        h = T.var(0, 0.5, 1, D) * T.var(0, 0.5, 1, D)  # degree two: Horner path
        h = T.TaylorPoly(F64, (0.5,), h.coeffs, D)
        with T.count_operations() as c:
            T.substitute(T.TaylorPoly(F64, (0.25,), p.coeffs, D), 0, h)
        ops.append(c["coeff_ops"])
    slope = np.polyfit(np.log(sizes), np.log(ops), 1)[0]
    assert slope <= 3.2
