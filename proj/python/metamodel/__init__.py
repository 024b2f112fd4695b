"""Sparse polynomial chaos and canonical low-rank approximation surrogates."""

import json

from ._core import (
    Benchmark,
    ConfigError,
    FitError,
    InputModel,
    LraModel,
    LraResult,
    ModelEvaluationError,
    PceModel,
    benchmark_names,
    conditional_error,
    enumerate_hyperbolic,
    eole_terms,
    fit_lra,
    fit_pce,
    generalization_error,
    lhs,
    make_benchmark,
    maximin_lhs,
    mcs,
    response_quantile,
    run_cli,
    sobol,
)

__all__ = [
    "Benchmark",
    "ConfigError",
    "FitError",
    "InputModel",
    "LraModel",
    "LraResult",
    "ModelEvaluationError",
    "PceModel",
    "benchmark_names",
    "conditional_error",
    "enumerate_hyperbolic",
    "eole_terms",
    "fit_lra",
    "fit_pce",
    "generalization_error",
    "lhs",
    "load_model",
    "make_benchmark",
    "maximin_lhs",
    "mcs",
    "response_quantile",
    "run_cli",
    "sobol",
]


def load_model(path):
    """Load a surrogate document written by `metamodel fit` (PCE or LRA)."""
    with open(path, encoding="utf-8") as handle:
        document = json.load(handle)
    text = json.dumps(document)
    if document.get("type") == "pce":
        return PceModel.from_json(text)
    if document.get("type") == "lra":
        return LraModel.from_json(text)
    raise ConfigError(f"{path}: unknown surrogate type {document.get('type')!r}")
