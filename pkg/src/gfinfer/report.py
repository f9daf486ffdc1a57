"""Machine-readable and text rendering of posterior reports.

Both renderings come from the same document dictionary, so they print the
same digits.  Numbers are strings: rationals as ``p/q``, floats with enough
digits to round-trip, intervals as ``{"lo", "hi", "digits"}``.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction

import mpmath
import numpy as np

from .kernels import Kernel, widen_report
from .summary import PosteriorReport

STAT_NAMES = ("mean", "variance", "skewness", "kurtosis")


def _digits_for(bits: int) -> int:
    return int(math.ceil(bits * math.log10(2))) + 2


def _real_str(kernel: Kernel, x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    bits = getattr(kernel, "precision", 53) + 64
    return mpmath.nstr(x, _digits_for(bits), strip_zeros=True, min_fixed=-4, max_fixed=20)


def format_scalar(kernel: Kernel, value):
    """JSON-ready form of one kernel value (``None`` stays ``None``)."""
    if value is None:
        return None
    if kernel.exact:
        q = kernel.to_fraction(value)
        return f"{q.numerator}/{q.denominator}"
    if kernel.is_interval:
        lo, hi = kernel.bounds(value)
        digits = widen_report(kernel, value)["significant_digits"]
        return {"lo": _real_str(kernel, lo), "hi": _real_str(kernel, hi),
                "digits": None if digits == math.inf else int(digits)}
    return _real_str(kernel, value)


def parse_scalar(text):
    """Inverse of :func:`format_scalar` into Fraction, mpf or (lo, hi)."""
    if text is None:
        return None
    if isinstance(text, dict):
        return parse_scalar(text["lo"]), parse_scalar(text["hi"])
    if "/" in text:
        return Fraction(text)
    v = mpmath.mpf(text) if len(text) > 20 else float(text)
    return v


def scalar_float(value) -> float:
    """Midpoint as a float, for any parsed scalar."""
    if isinstance(value, tuple):
        return float((value[0] + value[1]) / 2)
    return float(value)


def report_document(report: PosteriorReport, timings: bool = True) -> dict:
    k = report.kernel
    ms = report.moments
    doc = {
        "query": report.query,
        "evidence": format_scalar(k, report.evidence),
        "moments": {name: format_scalar(k, getattr(ms, name)) for name in STAT_NAMES},
        "masses": [],
        "cutoff": None,
        "tail_bound": None,
        "kernel": k.describe(),
        "timings": {key: round(report.timings.get(key, 0.0), 3) if timings else 0.0
                    for key in ("eval_ms", "total_ms")},
        "warnings": list(report.warnings),
    }
    if report.masses is not None:
        doc["masses"] = [{"k": j, "p": format_scalar(k, p)} for j, p in report.masses.entries]
        doc["cutoff"] = report.masses.cutoff
        doc["tail_bound"] = format_scalar(k, report.masses.tail_bound)
    if report.counters:
        doc["counters"] = dict(sorted(report.counters.items()))
    return doc


def _moments_from_masses(masses: dict):
    m1 = sum(k * p for k, p in masses.items())
    c = [sum((k - m1) ** r * p for k, p in masses.items()) for r in (2, 3, 4)]
    return m1, c[0], c[1], c[2]


def enumerate_document(mf, var: str, timings: dict | None = None) -> dict:
    """Document for the enumeration oracle (same schema as the GF report)."""
    masses = mf.marginal(var)
    mu, var2, c3, c4 = _moments_from_masses(masses)
    exact = mf.exact
    conv = (lambda q: f"{Fraction(q).numerator}/{Fraction(q).denominator}") if exact else (lambda x: repr(float(x)))
    pos = var2 > 0
    skew = None
    if pos:
        skew = c3 / var2 ** Fraction(3, 2) if exact and _is_square(var2) else float(c3) / float(var2) ** 1.5
    moments = {"mean": conv(mu), "variance": conv(var2),
               "skewness": (conv(skew) if isinstance(skew, Fraction) else repr(float(skew))) if pos else None,
               "kurtosis": conv(c4 / (var2 * var2)) if pos else None}
    warnings = [] if pos else ["variance is zero; skewness and kurtosis undefined"]
    if mf.truncated:
        warnings.append("infinite supports were truncated")
    hi = max(masses) if masses else 0
    return {
        "query": var,
        "evidence": conv(mf.evidence),
        "moments": moments,
        "masses": [{"k": j, "p": conv(masses.get(j, 0))} for j in range(0, hi + 1)],
        "cutoff": hi,
        "tail_bound": conv(0),
        "kernel": {"name": "oracle-enumerate", "exact": exact},
        "timings": timings or {"eval_ms": 0.0, "total_ms": 0.0},
        "warnings": warnings,
    }


def _is_square(q: Fraction) -> bool:
    return all(math.isqrt(v) ** 2 == v for v in (q.numerator, q.denominator))


def simulate_document(ss, var: str, seed: int, timings: dict | None = None) -> dict:
    x = ss.vals[:, ss.index(var)]
    kernel = {"name": "oracle-simulate", "prng": "PCG64", "seed": seed, "samples": int(len(x))}
    if not np.isfinite(np.max(ss.logw)):
        none = {"mean": None, "variance": None, "skewness": None, "kurtosis": None}
        return {
            "query": var, "evidence": repr(0.0), "moments": none, "stderr": {"mean": None},
            "masses": [], "cutoff": None, "tail_bound": None, "kernel": {**kernel, "ess": 0.0},
            "timings": timings or {"eval_ms": 0.0, "total_ms": 0.0},
            "warnings": ["effective sample size is zero: every sample violated an observation"],
        }
    w = ss.weights
    mu = float(np.sum(w * x))
    d = x - mu
    v = float(np.sum(w * d * d))
    skew = float(np.sum(w * d ** 3)) / v ** 1.5 if v > 0 else None
    kurt = float(np.sum(w * d ** 4)) / v ** 2 if v > 0 else None
    f = lambda z: None if z is None else repr(float(z))
    return {
        "query": var,
        "evidence": f(math.exp(ss.log_evidence)),
        "moments": {"mean": f(mu), "variance": f(v), "skewness": f(skew), "kurtosis": f(kurt)},
        "stderr": {"mean": f(ss.stderr(var))},
        "masses": [],
        "cutoff": None,
        "tail_bound": None,
        "kernel": {**kernel, "ess": round(ss.ess, 3)},
        "timings": timings or {"eval_ms": 0.0, "total_ms": 0.0},
        "warnings": [],
    }


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def loads(text: str) -> dict:
    return json.loads(text)


def _show(v) -> str:
    if v is None:
        return "undefined"
    if isinstance(v, dict):
        digits = "exact" if v["digits"] is None else f"{v['digits']} digits"
        return f"[{v['lo']}, {v['hi']}] ({digits})"
    return v


def render_text(doc: dict) -> str:
    """Human-readable report built from the same document as the JSON output."""
    kern = doc["kernel"]
    lines = [f"query       {doc['query']}",
             f"kernel      {', '.join(f'{a}={b}' for a, b in kern.items())}",
             f"evidence    {_show(doc['evidence'])}"]
    for name in STAT_NAMES:
        lines.append(f"{name:<11} {_show(doc['moments'][name])}")
    for name, v in doc.get("stderr", {}).items():
        lines.append(f"{'stderr(' + name + ')':<11} {_show(v)}")
    if doc["masses"]:
        lines.append(f"masses      k = 0..{doc['cutoff']}, tail bound {_show(doc['tail_bound'])}")
        for row in doc["masses"]:
            lines.append(f"  {row['k']:>5}  {_show(row['p'])}")
    t = doc["timings"]
    lines.append(f"time        eval {t['eval_ms']} ms, total {t['total_ms']} ms")
    for w in doc["warnings"]:
        lines.append(f"warning     {w}")
    return "\n".join(lines) + "\n"
