"""Disturbance-set synthesis for mu-RPI sets.

The heavy lifting lives in the compiled ``_core`` module. The helpers here
accept and return plain dicts in the JSON layouts of docs/formats.md.
"""

import json

from ._core import (
    AssumptionError,
    InputError,
    RpiConstants,
    RpiParams,
    SolverError,
    compute_constants,
    contains_point,
    select_params,
    support_hull,
)
from . import _core

__all__ = [
    "AssumptionError",
    "InputError",
    "RpiConstants",
    "RpiParams",
    "SolverError",
    "compute_constants",
    "contains_point",
    "select_params",
    "support_hull",
    "params",
    "synth",
    "verify",
    "generate",
    "reduce",
]


def _text(doc):
    return doc if isinstance(doc, str) else json.dumps(doc)


def _with_options(spec, options):
    # keyword arguments override the spec's "options" block
    if not options:
        return _text(spec)
    doc = json.loads(spec) if isinstance(spec, str) else dict(spec)
    doc["options"] = {**doc.get("options", {}), **options}
    return json.dumps(doc)


def params(spec, **options):
    """Parameter selection only; returns a result dict without W."""
    return json.loads(_core.params_json(_with_options(spec, options)))


def synth(spec, threads=0, **options):
    """Full synthesis; returns the result dict with W, epsilon and certificate."""
    return json.loads(_core.synth_json(_with_options(spec, options), threads))


def verify(spec, result):
    """Re-checks a result; returns (passed, list of checks)."""
    ok, cert = _core.verify_json(_text(spec), _text(result))
    return ok, json.loads(cert)


def generate(nx, nw, ny, rho, seed):
    return json.loads(_core.generate_json(nx, nw, ny, rho, seed))


def reduce(partitioned):
    return json.loads(_core.reduce_json(_text(partitioned)))
