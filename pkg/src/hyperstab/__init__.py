"""Finite abelian hypergroups, normalizer circuits over them, and hidden-subhypergroup algorithms."""

from .hypergroup import (
    HypergroupTable,
    SubhypergroupView,
    closure,
    coset,
    cosets,
    quotient,
    validate,
)
from .kernels import BACKEND_NAME

__all__ = [
    "BACKEND_NAME",
    "HypergroupTable",
    "SubhypergroupView",
    "closure",
    "coset",
    "cosets",
    "quotient",
    "validate",
]
__version__ = "0.1.0"
