from fractions import Fraction

import pytest

from gfinfer import ast as A
from gfinfer import models
from gfinfer.desugar import AUX_NAME, desugar_program, is_core
from gfinfer.errors import (ContinuousObservation, DesugarError, FrontEndError, UnknownVariable,
                            UnsupportedEvent, ValidationError)
from gfinfer.parser import parse

from randprog import corpus


def test_support_classification():
    p = parse("X ~ Poisson(3); L ~ Exponential(1); Y ~ Poisson(2 * L); Z := X + 1;")
    sup = A.validate(p).by_name()
    assert sup == {"X": A.Support.DISCRETE, "L": A.Support.CONTINUOUS,
                   "Y": A.Support.DISCRETE, "Z": A.Support.DISCRETE}


def test_resampling_restores_discreteness():
    p = parse("X ~ Exponential(1); X ~ Poisson(1);")
    assert A.validate(p).by_name()["X"] is A.Support.DISCRETE


def test_fractional_affine_makes_continuous():
    p = parse("X ~ Poisson(1); Y := 1/2 * X;")
    assert A.validate(p).by_name()["Y"] is A.Support.CONTINUOUS


@pytest.mark.parametrize("src, err", [
    ("L ~ Exponential(1); observe L = 1;", UnsupportedEvent),
    ("L ~ Gamma(2, 1); if L > 3 { skip; }", UnsupportedEvent),
    ("observe 2 ~ Exponential(1);", ContinuousObservation),
    ("L ~ Exponential(1); X ~ Binomial(L, 0.5);", ValidationError),
    ("X ~ Categorical(0.5, 0.4);", FrontEndError),
    ("X ~ Binomial(2.5, 0.5);", FrontEndError),
])
def test_rejected_programs(src, err):
    with pytest.raises(err):
        A.validate(parse(src))


def test_unknown_query():
    with pytest.raises(UnknownVariable):
        parse("X ~ Poisson(1);").var("Y")


def test_unchecked_bernoulli_parameter_warns():
    sup = A.validate(parse("X ~ Poisson(1); Y ~ Bernoulli(X);"))
    assert any("Bernoulli(X)" in w for w in sup.warnings)
    sup = A.validate(parse("X ~ UniformCont(0, 1); Y ~ Bernoulli(X);"))
    assert not sup.warnings


def test_degree_budget_examples():
    assert A.degree_budget(parse("X ~ Poisson(20); Y ~ Binomial(X, 0.1); observe Y = 2;")) == 6
    assert A.degree_budget(parse("X ~ Poisson(2);"), query_order=1) == 1
    assert A.degree_budget(models.load("population")) == 258


def test_desugar_comparisons():
    p = desugar_program(parse("X ~ Poisson(2); observe X >= 2; if X != 3 { skip; }"))
    obs = p.body.stmts[1]
    assert obs == A.ObserveEvent(A.Complement(A.InSet(p.variables[0], frozenset({0, 1}))))
    branch = p.body.stmts[2]
    assert branch.event == A.Complement(A.InSet(p.variables[0], frozenset({3})))


def test_desugar_add_sample_uses_scratch():
    p = desugar_program(parse("X ~ Poisson(2); X +~ Poisson(3);"))
    assert p.variables[-1].name == AUX_NAME
    assert is_core(p.body)


def test_naive_observe_expands_through_scratch():
    p = desugar_program(parse("X ~ Poisson(2); observe 1 ~ Binomial(X, 0.5);"), naive_observe=True)
    assert not any(isinstance(s, A.ObserveFrom) for s in A.walk(p.body))
    assert any(isinstance(s, A.Fail) for s in A.walk(p.body))


def test_negative_coefficients_rejected():
    with pytest.raises(DesugarError):
        desugar_program(A.Program((A.VarId(0, "X"),), A.Seq((
            A.Affine(A.VarId(0, "X"), ((A.VarId(0, "X"), Fraction(-1)),), Fraction(3)),))))


def test_desugared_random_programs_are_core():
    for _, _, prog in corpus(40, start=500):
        core = desugar_program(prog)
        assert is_core(core.body)
        # desugaring is idempotent on core programs
        assert desugar_program(core).body == core.body
