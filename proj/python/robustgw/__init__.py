"""Robust Gromov-Wasserstein solvers (Python bindings)."""

import json as _json

from ._robustgw import (
    NumericalError,
    contaminate,
    distortion_samples,
    exact_ot,
    gw,
    heart_shape,
    levy,
    lrgw,
    lrigw,
    mixture_gw,
    robust_w,
    rotate2d,
    select_tau,
    sinkhorn,
    w2_gaussian,
)
from ._robustgw import run_sweep as _run_sweep


def run_sweep(manifest):
    """Run a contamination sweep. manifest is a dict or a JSON string."""
    if not isinstance(manifest, str):
        manifest = _json.dumps(manifest)
    return _json.loads(_run_sweep(manifest))


__all__ = [
    "NumericalError",
    "contaminate",
    "distortion_samples",
    "exact_ot",
    "gw",
    "heart_shape",
    "levy",
    "lrgw",
    "lrigw",
    "mixture_gw",
    "robust_w",
    "rotate2d",
    "run_sweep",
    "select_tau",
    "sinkhorn",
    "w2_gaussian",
]
