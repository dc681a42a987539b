"""Decomposable forms: heights, volumes, lattice point counts and explicit inequality checks."""

from dform.forms import (
    DecomposableForm,
    FormError,
    Transform,
    compose,
    evaluate,
    expand,
    factor_binary,
    parse_form,
    scale,
)

__version__ = "0.1.0"

__all__ = [
    "DecomposableForm",
    "FormError",
    "Transform",
    "compose",
    "evaluate",
    "expand",
    "factor_binary",
    "parse_form",
    "scale",
    "__version__",
]
