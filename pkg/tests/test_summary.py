import math
from fractions import Fraction

import numpy as np
import pytest

from gfinfer import ast as A
from gfinfer import models
from gfinfer.errors import MassesUnavailable, UnsupportedOp, ZeroEvidence
from gfinfer.kernels import make_kernel
from gfinfer.parser import parse
from gfinfer.summary import float_masses, infer, mass_cutoff

from randprog import corpus

F64 = make_kernel("float64")
RAT = make_kernel("rational")


def example1(kernel=F64, **kw):
    return infer(models.load("population_simple"), kernel, **kw)


def test_example_moments():
    r = example1()
    m = r.moments
    assert math.isclose(m.mean, 20, rel_tol=1e-12)
    assert math.isclose(m.variance, 18, rel_tol=1e-11)
    assert math.isclose(m.skewness, 18**-0.5, rel_tol=1e-9)
    assert round(m.skewness, 5) == 0.23570
    # shifted Poisson: kurtosis 3 + 1/lambda
    assert math.isclose(m.kurtosis, 3 + 1 / 18, rel_tol=1e-9)
    assert math.isclose(m.factorial[1], 398, rel_tol=1e-11)


def test_dirac_posterior_has_undefined_shape():
    r = infer(parse("X ~ Dirac(1);"), RAT)
    assert RAT.to_fraction(r.moments.mean) == 1
    assert RAT.to_fraction(r.moments.variance) == 0
    assert r.moments.skewness is None and r.moments.kurtosis is None
    assert any("variance is zero" in w for w in r.warnings)


def test_cutoffs():
    assert example1().masses.cutoff == 43
    for c in (0, 3, 7):
        assert infer(parse(f"X ~ Dirac({c});"), F64).masses.cutoff == c
    ms = infer(parse("X ~ Bernoulli(1/2);"), F64).moments
    assert mass_cutoff(ms, F64) == 3
    assert mass_cutoff(infer(parse("X ~ Bernoulli(1/2);"), RAT).moments, RAT) == 3


def test_example_masses():
    r = example1()
    p = float_masses(r)
    assert p[0] == 0 and p[1] == 0
    assert math.isclose(p[2], math.exp(-18), rel_tol=1e-10)
    assert math.isclose(p[10], 18**8 / math.factorial(8) * math.exp(-18), rel_tol=1e-10)
    d = infer(parse("X ~ Dirac(3);"), RAT)
    assert [RAT.to_fraction(v) for _, v in d.masses.entries] == [0, 0, 0, 1]


def test_continuous_query_has_no_masses():
    r = infer(parse("L ~ Exponential(2);"), F64)
    assert r.masses is None or not r.masses.entries
    assert any("continuous" in w for w in r.warnings)
    assert math.isclose(r.moments.mean, 0.5, rel_tol=1e-14)
    assert math.isclose(r.moments.variance, 0.25, rel_tol=1e-13)


def test_zero_evidence():
    with pytest.raises(ZeroEvidence):
        infer(parse("X ~ Bernoulli(1/2); observe X = 3;"), RAT)
    with pytest.raises(ZeroEvidence):
        infer(parse("X ~ Poisson(2); fail;"), F64)


def test_rational_rejects_irrational_programs():
    with pytest.raises(UnsupportedOp):
        infer(parse("X ~ Poisson(2);"), RAT)


def test_query_selection():
    r = infer(parse("X ~ Poisson(2); Y ~ Binomial(X, 1/2);"), F64)
    assert r.query == "Y"
    r = infer(parse("X ~ Poisson(2); Y ~ Binomial(X, 1/2);"), F64, var="X")
    assert math.isclose(r.moments.mean, 2, rel_tol=1e-14)
    with pytest.raises(Exception):
        infer(parse("X ~ Poisson(2);"), F64, var="Q")


@pytest.mark.parametrize("src, mean, var", [
    ("X ~ Poisson(7/2);", Fraction(7, 2), Fraction(7, 2)),
    ("X ~ Binomial(6, 1/3);", Fraction(2), Fraction(4, 3)),
    ("X ~ Geometric(1/4);", Fraction(3), Fraction(12)),
    ("X ~ NegBinomial(3, 1/2);", Fraction(3), Fraction(6)),
    ("X ~ UniformDisc(2, 6);", Fraction(4), Fraction(2)),
    ("X ~ Categorical(1/2, 1/4, 1/4);", Fraction(3, 4), Fraction(11, 16)),
    ("X ~ Gamma(3, 2);", Fraction(3, 2), Fraction(3, 4)),
    ("X ~ UniformCont(1, 3);", Fraction(2), Fraction(1, 3)),
])
def test_prior_moments(src, mean, var):
    prog = parse(src)
    try:
        r = infer(prog, RAT)
        assert RAT.to_fraction(r.moments.mean) == mean
        assert RAT.to_fraction(r.moments.variance) == var
    except UnsupportedOp:
        r = infer(prog, F64)
        assert math.isclose(r.moments.mean, mean, rel_tol=1e-9)
        assert math.isclose(r.moments.variance, var, rel_tol=1e-9)


def test_factorial_moments_match_mass_table():
    r = infer(parse("X ~ Poisson(3); observe 2 ~ Binomial(X, 1/3);"), F64, mass_limit=80)
    p = float_masses(r)
    k = np.arange(len(p))
    assert math.isclose((k * p).sum(), r.moments.mean, rel_tol=1e-12)
    assert math.isclose((k * (k - 1) * p).sum(), r.moments.factorial[1], rel_tol=1e-12)
    assert abs(1 - p.sum()) < 1e-12


def test_markov_cutoff_guarantee():
    total = Fraction(255, 256)
    for _, src, prog in corpus(30, start=5000):
        try:
            r = infer(prog, RAT)
        except ZeroEvidence:
            continue
        assert RAT.to_fraction(r.masses.total(RAT)) >= total


def test_point_results_inside_intervals():
    iv = make_kernel("interval")
    big = make_kernel("interval", 80)
    checked = 0
    for _, src, prog in corpus(25, start=6000):
        try:
            exact = infer(prog, RAT)
        except ZeroEvidence:
            continue
        for k in (iv, big):
            r = infer(prog, k, mass_limit=exact.masses.cutoff)
            pairs = [(exact.moments.mean, r.moments.mean), (exact.moments.variance, r.moments.variance),
                     (exact.evidence, r.evidence)]
            pairs += [(a, b) for (_, a), (_, b) in zip(exact.masses.entries, r.masses.entries)]
            for a, b in pairs:
                lo, hi = k.bounds(b)
                q = RAT.to_fraction(a)
                assert float(lo) <= q <= float(hi) or math.isclose(float(lo), q, abs_tol=1e-300)
        checked += 1
    assert checked >= 10
