import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gfinfer.errors import DivisionByZero, DomainError, UnsupportedOp
from gfinfer.kernels import make_kernel, widen_report

KINDS = [("float64", None), ("bigfloat", 128), ("rational", None), ("interval", None),
         ("interval", 80)]


def test_rational_exact_sum():
    k = make_kernel("rational")
    assert k.to_fraction(k.const(Fraction(1, 10)) + k.const(Fraction(2, 10))) == Fraction(3, 10)


def test_interval_exp_contains_e():
    k = make_kernel("interval")
    lo, hi = k.bounds(k.exp(k.const(1)))
    assert lo <= 2.718281828459045 <= hi
    assert lo < hi


def test_rational_rejects_transcendentals():
    k = make_kernel("rational")
    with pytest.raises(UnsupportedOp):
        k.exp(k.const(1))
    with pytest.raises(UnsupportedOp):
        k.log(k.const(2))
    assert k.to_fraction(k.log(k.one())) == 0


@pytest.mark.parametrize("kind, prec", KINDS)
def test_division_by_zero(kind, prec):
    k = make_kernel(kind, prec)
    with pytest.raises(DivisionByZero):
        k.div(k.one(), k.zero())


@pytest.mark.parametrize("kind, prec", [x for x in KINDS if x[0] != "rational"])
def test_log_domain(kind, prec):
    k = make_kernel(kind, prec)
    with pytest.raises(DomainError):
        k.log(k.const(-1))


def test_interval_division_straddling_zero():
    k = make_kernel("interval")
    with pytest.raises(DivisionByZero):
        k.div(k.one(), k.interval(-1, 1))


def test_widen_report_examples():
    k = make_kernel("interval")
    r = widen_report(k, k.interval(0.9999999, 1.0000001))
    assert r["significant_digits"] in (6, 7)
    assert widen_report(k, k.const(2))["significant_digits"] == math.inf
    r = widen_report(k, k.interval(-1, 1))
    assert r["significant_digits"] == 0 and r["radius"] == 1


def test_widen_report_big_interval():
    k = make_kernel("interval", 200)
    third = k.div(k.one(), k.const(3))
    assert widen_report(k, third)["significant_digits"] >= 55


def test_integer_power_all_kernels():
    for kind, prec in KINDS:
        k = make_kernel(kind, prec)
        assert math.isclose(float(k.to_float(k.ipow(k.const(Fraction(3, 2)), 5))), 7.59375)


def test_rational_power_rules():
    k = make_kernel("rational")
    assert k.to_fraction(k.pow(k.const(Fraction(4, 9)), Fraction(3, 2))) == Fraction(8, 27)
    with pytest.raises(UnsupportedOp):
        k.pow(k.const(2), Fraction(1, 2))


# -- straight-line programs -------------------------------------------------

OPS = st.sampled_from(["add", "sub", "mul", "div"])
CONSTS = st.fractions(min_value=Fraction(-20), max_value=Fraction(20), max_denominator=50)


def run_program(k, seed_vals, ops):
    regs = [k.const(v) for v in seed_vals]
    for op, i, j in ops:
        a, b = regs[i % len(regs)], regs[j % len(regs)]
        if op == "add":
            regs.append(a + b)
        elif op == "sub":
            regs.append(a - b)
        elif op == "mul":
            regs.append(a * b)
        else:
            regs.append(k.div(a, b))
    return regs[-1]


programs = st.tuples(
    st.lists(CONSTS.filter(lambda q: q != 0), min_size=2, max_size=4),
    st.lists(st.tuples(OPS, st.integers(0, 20), st.integers(0, 20)), min_size=1, max_size=12),
)


def exact(x):
    """Exact value of a float or mpf endpoint (None when infinite)."""
    if not math.isfinite(float(x)) and isinstance(x, float):
        return None
    if isinstance(x, float):
        return Fraction(x)
    if x in (mpmath.inf, -mpmath.inf):
        return None
    man, exp = x.man_exp
    return (-1 if x < 0 else 1) * Fraction(man) * Fraction(2) ** exp


def rational_result(vals, ops):
    k = make_kernel("rational")
    try:
        return k.to_fraction(run_program(k, vals, ops))
    except DivisionByZero:
        return None


@settings(max_examples=150, deadline=None)
@given(programs)
def test_interval_encloses_rational(prog):
    vals, ops = prog
    value = rational_result(vals, ops)
    if value is None:
        return
    for prec in (None, 64):
        k = make_kernel("interval", prec)
        try:
            v = run_program(k, vals, ops)
        except DivisionByZero:
            continue  # the enclosure of some divisor reached zero
        lo, hi = k.bounds(v)
        lo, hi = exact(lo), exact(hi)
        assert lo is None or lo <= value
        assert hi is None or value <= hi


positive_programs = st.tuples(
    st.lists(st.fractions(min_value=Fraction(1, 50), max_value=Fraction(50), max_denominator=50),
             min_size=2, max_size=4),
    st.lists(st.tuples(st.sampled_from(["add", "mul", "div"]), st.integers(0, 20), st.integers(0, 20)),
             min_size=1, max_size=12),
)


@settings(max_examples=150, deadline=None)
@given(positive_programs)
def test_float_matches_rational(prog):
    # positive operands: no cancellation, so the relative error stays tiny
    vals, ops = prog
    r = make_kernel("rational")
    regs = [r.const(v) for v in vals]
    for op, i, j in ops:
        a, b = regs[i % len(regs)], regs[j % len(regs)]
        regs.append(a + b if op == "add" else a * b if op == "mul" else r.div(a, b))
    if not all(Fraction(1, 10**30) <= r.to_fraction(x) <= 10**30 for x in regs):
        return
    got = run_program(make_kernel("float64"), vals, ops)
    assert math.isclose(got, float(r.to_fraction(regs[-1])), rel_tol=1e-12)


@settings(max_examples=80, deadline=None)
@given(programs)
def test_more_precision_never_widens(prog):
    vals, ops = prog
    widths = []
    for prec in (64, 128, 256):
        k = make_kernel("interval", prec)
        try:
            lo, hi = k.bounds(run_program(k, vals, ops))
        except DivisionByZero:
            return
        widths.append(hi - lo)
    assert widths[0] >= widths[1] >= widths[2]
