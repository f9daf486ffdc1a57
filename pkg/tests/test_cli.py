import io
import json
import math

import pytest

from gfinfer import cli
from gfinfer.report import parse_scalar, scalar_float

KEYS = {"query", "evidence", "moments", "masses", "cutoff", "tail_bound", "kernel", "timings", "warnings"}


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    try:
        code = cli.run(list(argv), out, err)
    except SystemExit as e:
        code = e.code
    return code, out.getvalue(), err.getvalue()


def run_json(*argv):
    code, out, err = run(*argv, "--json", "--no-timings")
    assert code == 0, err
    return json.loads(out)


@pytest.fixture
def prog(tmp_path):
    def write(text, name="p.sgcl"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return write


def test_example_defaults():
    doc = run_json("population_simple")
    assert KEYS <= doc.keys()
    assert doc["query"] == "X"
    assert math.isclose(float(doc["moments"]["mean"]), 20, rel_tol=1e-12)
    assert abs(float(doc["evidence"]) - 0.2706706) < 5e-8
    assert [r["k"] for r in doc["masses"]] == list(range(44))
    assert doc["cutoff"] == 43


def test_exit_codes(prog, tmp_path):
    assert run(prog("X ~ Poisson(2);"))[0] == 0
    assert run(prog("X ~ Poisson(2"))[0] == 2
    assert run(prog("X := Y;"))[0] == 0  # implicit Dirac(0) start
    assert run(prog("X ~ Binomial(2.5, 1/2);"))[0] == 2
    assert run(prog("X ~ Dirac(1); observe X = 0;"))[0] == 3
    assert run(str(tmp_path / "missing.sgcl"))[0] == 4
    assert run(prog("X ~ Poisson(2);"), "--precision", "8")[0] == 4
    assert run(prog("X ~ Poisson(2);"), "--rational", "--bounds")[0] == 4
    assert run()[0] == 4


def test_rational_poisson_is_evaluation_error():
    code, _, err = run("population_simple", "--rational")
    assert code == 3 and "UnsupportedOp" in err


def test_byte_identical(prog):
    p = prog("X ~ Geometric(1/3); observe 2 ~ Binomial(X, 1/2);")
    for flags in ([], ["--json"], ["--rational", "--json"], ["--bounds"]):
        a = run(p, "--no-timings", *flags)
        b = run(p, "--no-timings", *flags)
        assert a == b


def test_json_round_trip_and_text_agreement(prog):
    p = prog("X ~ Binomial(5, 1/3); observe 1 ~ Binomial(X, 1/2);")
    code, out, _ = run(p, "--rational", "--json", "--no-timings")
    doc = json.loads(out)
    assert json.loads(json.dumps(doc)) == doc
    _, text, _ = run(p, "--rational", "--no-timings")
    for name in ("mean", "variance"):
        line = next(l for l in text.splitlines() if l.startswith(name))
        assert line.split()[-1] == doc["moments"][name]
    assert parse_scalar(doc["moments"]["mean"]) == sum(
        parse_scalar(r["p"]) * r["k"] for r in doc["masses"])


def test_zero_variance(prog):
    code, out, err = run(prog("X ~ Dirac(4);"), "--json", "--no-timings")
    doc = json.loads(out)
    assert code == 0
    assert doc["moments"]["skewness"] is None and doc["moments"]["kurtosis"] is None
    assert doc["warnings"] and "warning" in err


def test_interval_fields():
    doc = run_json("population_simple", "--bounds")
    mean = doc["moments"]["mean"]
    assert {"lo", "hi", "digits"} <= mean.keys()
    lo, hi = parse_scalar(mean)
    assert lo <= 20 <= hi and mean["digits"] >= 10
    doc = run_json("population_simple", "--bounds", "--precision", "128")
    assert doc["moments"]["mean"]["digits"] >= 30


def test_precision_and_mass_limit():
    doc = run_json("population_simple", "--precision", "200", "--mass-limit", "5")
    assert len(doc["masses"]) == 6
    assert abs(parse_scalar(doc["moments"]["mean"]) - 20) < 1e-50


def test_var_selection(prog):
    p = prog("X ~ Poisson(3); Y ~ Binomial(X, 1/2);")
    assert run_json(p)["query"] == "Y"
    assert math.isclose(scalar_float(parse_scalar(run_json(p, "--var", "X")["moments"]["mean"])), 3)
    assert run(p, "--var", "Q")[0] == 2


def test_naive_observe_matches(prog):
    p = prog("X ~ Geometric(1/4); observe 3 ~ Binomial(X, 1/3);")
    a = run_json(p, "--rational")
    b = run_json(p, "--rational", "--naive-observe")
    assert a["moments"] == b["moments"] and a["masses"] == b["masses"]


def test_enumerate_oracle(prog):
    p = prog("X ~ Binomial(4, 1/2); observe 1 ~ Binomial(X, 1/2);")
    a = run_json(p, "--rational")
    b = run_json(p, "--rational", "--oracle", "enumerate")
    assert a["evidence"] == b["evidence"] and a["moments"]["mean"] == b["moments"]["mean"]
    c = run_json("population_simple", "--oracle", "enumerate", "--truncate-at", "200")
    assert math.isclose(float(c["moments"]["mean"]), 20, rel_tol=1e-12)


def test_simulate_switchpoint():
    doc = run_json("switchpoint", "--oracle", "simulate", "--samples", "1000", "--seed", "7")
    assert doc["kernel"]["seed"] == 7 and doc["kernel"]["samples"] == 1000
    assert doc["query"] == "T"
    assert 1 <= float(doc["moments"]["mean"]) <= 111
    assert doc == run_json("switchpoint", "--oracle", "simulate", "--samples", "1000", "--seed", "7")


def test_simulate_all_rejected(prog):
    code, out, _ = run(prog("X ~ Bernoulli(1/2); observe X = 5;"), "--oracle", "simulate", "--samples", "100")
    assert code == 0 and "undefined" in out


@pytest.mark.parametrize("name", ["population", "population_modified", "population_two", "mixture", "hmm"])
def test_shipped_models_run(name):
    doc = run_json(name)
    assert math.isfinite(float(doc["moments"]["mean"]))
