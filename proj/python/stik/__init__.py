"""Sampled Tikhonov iterations for large linear inverse problems.

Thin wrapper over the C++ core. Experiment entry points take an optional
INI config path plus ``section.key`` overrides, e.g.::

    stik.run(overrides={"problem.name": "shaw", "run.epochs": 5})
"""

from ._core import (
    InvalidArgument,
    NumericalBreakdown,
    SelectionFailed,
    affine,
    affine_adjoint,
    config_keys,
    default_config,
    exact_trace,
    full_data_select,
    gen_test_problem,
    hutchinson_trace,
    restrict,
    restrict_adjoint,
    run,
    select_param,
    superres_run,
    synthetic_moon,
    tikhonov,
    toy_figure,
)

__all__ = [
    "InvalidArgument",
    "NumericalBreakdown",
    "SelectionFailed",
    "affine",
    "affine_adjoint",
    "config_keys",
    "default_config",
    "exact_trace",
    "full_data_select",
    "gen_test_problem",
    "hutchinson_trace",
    "restrict",
    "restrict_adjoint",
    "run",
    "select_param",
    "superres_run",
    "synthetic_moon",
    "tikhonov",
    "toy_figure",
]
