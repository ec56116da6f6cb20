"""Exact toolkit for Presburger arithmetic over Z-groups.

Submodules:

* ``terms``, ``syntax``, ``parse``, ``rewrite`` -- formula language
* ``qe`` -- Cooper-style quantifier elimination, decide, dnf
* ``model`` -- evaluation over Z and over M_s = Q^s x Z, enumeration oracle
* ``cells`` -- cell data structure and cell decomposition
* ``normal_form`` -- unboundedness degree and piecewise-affine normal forms
* ``groups`` -- scales, local lattices, quotient and extension groups
* ``cli`` -- batch command-line front end
"""

from .parse import NonlinearTermError, ParseError, parse, parse_term
from .qe import decide, dnf, eliminate, eliminate_exists
from .rewrite import normalize
from .syntax import (
    FALSE,
    TRUE,
    And,
    Divides,
    EqZero,
    Exists,
    Forall,
    Formula,
    GtZero,
    Not,
    Or,
    free_vars,
    show,
    substitute,
)
from .terms import LinearTerm, RatTerm

__all__ = [
    "And",
    "Divides",
    "EqZero",
    "Exists",
    "FALSE",
    "Forall",
    "Formula",
    "GtZero",
    "LinearTerm",
    "NonlinearTermError",
    "Not",
    "Or",
    "ParseError",
    "RatTerm",
    "TRUE",
    "decide",
    "dnf",
    "eliminate",
    "eliminate_exists",
    "free_vars",
    "normalize",
    "parse",
    "parse_term",
    "show",
    "substitute",
]
