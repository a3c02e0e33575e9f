"""Height functions on trees: exact marginals, counts and experiments.

Configs are plain dicts; rationals come back as ``fractions.Fraction``.
"""

import json
from fractions import Fraction

from . import _core
from ._core import HtreeError, commands, reference_variance_bound

__all__ = [
    "HtreeError",
    "commands",
    "default_config",
    "resolve_config",
    "run",
    "exact_marginal",
    "monotone_count",
    "child_zero_probability",
    "child_zero_lower_bound",
    "lambda_bracket",
    "reference_variance_bound",
    "run_acceptance",
]


def default_config(command):
    return json.loads(_core.default_config(command))


def resolve_config(command, config=None, **flags):
    """Defaults <- ``config`` <- keyword flags (values given as CLI strings)."""
    text = "" if config is None else json.dumps(config)
    pairs = [(k, v if isinstance(v, str) else json.dumps(v)) for k, v in flags.items()]
    return json.loads(_core.resolve_config(command, text, pairs))


def run(command, config=None, **flags):
    """Resolve and run one experiment; returns the record as a dict."""
    cfg = resolve_config(command, config, **flags)
    rec = _core.run_experiment(command, json.dumps(cfg))
    rec["config"] = json.loads(rec["config"])
    return rec


def exact_marginal(region, vertex=0):
    text = region if isinstance(region, str) else json.dumps(region)
    return {h: Fraction(p) for h, p in _core.exact_marginal(text, vertex)}


def monotone_count(d, n, k):
    return int(_core.monotone_count(d, n, k))


def child_zero_probability(d, n, k):
    return Fraction(_core.child_zero_probability(d, n, k))


def child_zero_lower_bound(d, n, k):
    return Fraction(_core.child_zero_lower_bound(d, n, k))


def lambda_bracket(tol=1e-9):
    lo, hi = _core.lambda_bracket(tol)
    return Fraction(lo), Fraction(hi)


def run_acceptance(seed=20240601, only=0, fixture_dir=""):
    return _core.run_acceptance(seed, only, fixture_dir)
