"""Benchmark models shipped with the package.

The ``.sgcl`` files are plain programs; :func:`switchpoint_nested` writes
the branch-per-switchpoint variant, which is too repetitive to keep by hand.
"""

from __future__ import annotations

from fractions import Fraction
from importlib import resources

# British coal-mining disasters per year; None marks the two missing years.
COAL_COUNTS = (
    4, 5, 4, 0, 1, 4, 3, 4, 0, 6, 3, 3, 4, 0, 2, 6, 3, 3, 5, 4, 5, 3, 1, 4, 4, 1, 5, 5, 3, 4,
    2, 5, 2, 2, 3, 4, 2, 1, 3, None, 2, 1, 1, 1, 1, 3, 0, 0, 1, 0, 1, 1, 0, 0, 3, 1, 0, 3, 2, 2,
    0, 1, 1, 1, 0, 1, 0, 1, 0, 0, 0, 2, 1, 0, 0, 0, 1, 1, 0, 2, 3, 3, 1, None, 2, 1, 1, 1, 1, 2,
    4, 2, 0, 0, 1, 4, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 1,
)

HMM_COUNTS = (2, 2, 4, 0, 0, 0, 0, 0, 1, 1, 0, 2, 4, 3, 3, 5, 1, 2, 3, 1, 3, 3, 0, 0, 2, 0, 0, 2, 6, 1)

NAMES = ("population_simple", "population", "population_modified", "population_two",
         "switchpoint", "switchpoint_nested", "mixture", "hmm")


def path(name: str):
    """Filesystem path of a shipped model."""
    return resources.files(__name__).joinpath(f"{name}.sgcl")


def source(name: str) -> str:
    if name == "switchpoint_nested":
        return switchpoint_nested()
    return path(name).read_text()


def load(name: str):
    from ..parser import parse
    return parse(source(name))


def switchpoint(data=COAL_COUNTS) -> str:
    """Switchpoint model with one rate before and one after year T."""
    n = len(data)
    lines = ["# Poisson counts whose rate changes once, at an unknown year T.",
             "L1 ~ Exponential(1);", "L2 ~ Exponential(1);", f"T ~ UniformDisc(1, {n});"]
    for t, y in enumerate(data, start=1):
        if y is not None:
            lines.append(f"if T > {t} {{ observe {y} ~ Poisson(L1); }} else {{ observe {y} ~ Poisson(L2); }}")
    return "\n".join(lines) + "\n"


def _ratio(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def switchpoint_nested(data=COAL_COUNTS) -> str:
    """Same posterior as :func:`switchpoint`, written as a chain of branches.

    Branch i is taken with probability 1/n overall.  The first rate serves
    years before i, then the rate is redrawn for years i..n, so only one
    rate variable is live at a time.
    """
    n = len(data)
    obs = lambda lo, hi: [f"observe {y} ~ Poisson(L);" for y in data[lo:hi] if y is not None]
    lines = ["# Switchpoint model unrolled over the possible switch years.", "L ~ Exponential(1);"]
    depth = 0
    for i in range(1, n + 1):
        body = obs(0, i - 1) + ["L ~ Exponential(1);"] + obs(i - 1, n) + [f"T := {i};"]
        pad = "  " * depth
        if i < n:
            p = Fraction(1, n - i + 1)
            lines.append(f"{pad}if 1 ~ Bernoulli({_ratio(p)}) {{")
            lines += [pad + "  " + b for b in body]
            lines.append(f"{pad}}} else {{")
            depth += 1
        else:
            lines += [pad + b for b in body]
    for d in range(depth - 1, -1, -1):
        lines.append("  " * d + "}")
    return "\n".join(lines) + "\n"


def mixture(data=COAL_COUNTS) -> str:
    lines = ["# Two-component Poisson mixture with geometric rate priors.",
             "L2 ~ Geometric(1/10);", "L1 ~ Geometric(1/10);"]
    for y in data:
        if y is not None:
            lines.append(f"if 1 ~ Bernoulli(1/2) {{ observe {y} ~ Poisson(1/10 * L1); }} "
                         f"else {{ observe {y} ~ Poisson(1/10 * L2); }}")
    return "\n".join(lines) + "\n"


def hmm(data=HMM_COUNTS) -> str:
    lines = ["# Two-state hidden Markov model with Poisson emissions.",
             "Z := 1;", "L2 ~ Geometric(1/10);", "L1 ~ Geometric(1/10);"]
    for y in data:
        lines.append(f"if Z = 0 {{ observe {y} ~ Poisson(1/10 * L1); Z ~ Bernoulli(1/5); }} "
                     f"else {{ observe {y} ~ Poisson(1/10 * L2); Z ~ Bernoulli(4/5); }}")
    lines.append("L1 := L1;")
    return "\n".join(lines) + "\n"
