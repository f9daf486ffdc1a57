from fractions import Fraction

import pytest

from gfinfer import ast as A
from gfinfer.parser import ParseError, parse, render

EXAMPLE = "X ~ Poisson(20); Y ~ Binomial(X, 0.1); observe Y = 2;"


def test_example_program_shape():
    p = parse(EXAMPLE)
    assert [v.name for v in p.variables] == ["X", "Y"]
    assert len(p.body.stmts) == 3
    x, y = p.variables
    assert p.body.stmts[0] == A.Sample(x, A.Dist("Poisson", (Fraction(20),)))
    assert p.body.stmts[1] == A.Sample(y, A.Compound("Binomial", x, Fraction(1, 10)))


def test_empty_program():
    p = parse("")
    assert p.variables == () and p.body.stmts == ()
    assert render(p) == ""


def test_affine_statement():
    p = parse("X := 2*X + 3*Y + 5;")
    x, y = p.variables
    assert p.body.stmts[0] == A.Affine(x, ((x, Fraction(2)), (y, Fraction(3))), Fraction(5))


def test_decimal_literals_are_exact():
    p = parse("X ~ Bernoulli(0.1);")
    assert p.body.stmts[0].dist.params == (Fraction(1, 10),)


def test_zero_coefficients_dropped_in_render():
    p = parse("X := 0*Y + X + 1;")
    assert "Y" not in render(p)


def test_render_one_statement_per_line():
    text = render(parse(EXAMPLE))
    assert text.count("\n") == 3
    assert parse(text) == parse(EXAMPLE)


def test_comments_and_optional_else():
    src = """
    # header
    X ~ Bernoulli(1/2);  # trailing
    if X = 1 { Y := 3; }
    """
    p = parse(src)
    stmt = p.body.stmts[1]
    assert isinstance(stmt, A.If) and stmt.orelse == A.Seq()


@pytest.mark.parametrize("src", [
    "X ~ ;",
    "X := ;",
    "if X = 1 { Y := 1;",
    "X ~ Poisson(1.5.2);",
    "observe X == 2;",
    "X ~ Binomial(2, Y);",
    "X ~ Geometric(Y, 0.5);",
    "X := 2 * 3;",
    "X @ 1;",
])
def test_errors_carry_spans(src):
    with pytest.raises(ParseError) as info:
        parse(src)
    span = info.value.span
    assert 0 <= span.start <= len(src)
    assert span.line >= 1 and span.column >= 1


def test_nested_if_else_round_trip():
    src = """
    X ~ UniformDisc(0, 4);
    if X in {1, 3} { if not (X = 1) { Y := X; } else { fail; } } else { Y +~ Dirac(2); }
    observe (X < 3 and Y >= 1) or 2 ~ Binomial(X, 1/2);
    observe 1 ~ Poisson(1/2 * Y);
    """
    p = parse(src)
    assert parse(render(p)) == p


def test_compound_argument_forms():
    p = parse("X ~ Poisson(3); Y ~ Poisson(0.5 * X); Z ~ NegBinomial(X, 1/3); W ~ Bernoulli(Z);")
    kinds = [s.dist for s in p.body.stmts[1:]]
    assert kinds[0] == A.Compound("Poisson", p.variables[0], Fraction(1, 2))
    assert kinds[1].kind == "NegBinomial" and kinds[1].param == Fraction(1, 3)
    assert kinds[2].kind == "Bernoulli"


def test_round_trip_random_programs():
    from randprog import random_program
    from gfinfer import models
    sources = [random_program(s) for s in range(300)] + [models.source(n) for n in ("hmm", "mixture")]
    for src in sources:
        p = parse(src)
        assert parse(render(p)) == p
        assert render(parse(render(p))) == render(p)
