"""Normalization: negation normal form plus atom canonicalization.

After ``normalize``:

* negations appear only directly on divisibility atoms (comparisons are
  negated away using discreteness: not(t > 0) <=> -t + 1 > 0);
* no ``1 | t`` atoms; ground atoms are folded to true/false;
* each atom's coefficients are gcd-reduced (jointly with the modulus for
  divisibility atoms, whose terms are also reduced mod the modulus);
* and/or are flattened, deduplicated and sorted canonically, and vacuous
  quantifiers are dropped.

The result is equivalent in every Z-group, and normalize is idempotent.
"""

from __future__ import annotations

from math import gcd

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
    land,
    lor,
    show,
)
from .terms import LinearTerm


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def norm_gt(t: LinearTerm) -> Formula:
    """Canonical form of t > 0."""
    if t.is_constant:
        return TRUE if t.const > 0 else FALSE
    g = t.content()
    if g > 1:
        # g*u + k > 0  <=>  u + ceil(k/g) > 0 over any discretely ordered group
        t = LinearTerm(tuple((v, c // g) for v, c in t.coeffs), _ceil_div(t.const, g))
    return GtZero(t)


def norm_eq(t: LinearTerm) -> Formula:
    """Canonical form of t = 0."""
    if t.is_constant:
        return TRUE if t.const == 0 else FALSE
    g = t.content()
    if t.const % g != 0:
        return FALSE
    if g > 1:
        t = LinearTerm(tuple((v, c // g) for v, c in t.coeffs), t.const // g)
    if t.coeffs[0][1] < 0:
        t = -t
    return EqZero(t)


def norm_divides(n: int, t: LinearTerm) -> Formula:
    """Canonical form of n | t."""
    if n == 1:
        return TRUE
    coeffs = tuple((v, c % n) for v, c in t.coeffs)
    t = LinearTerm(coeffs, t.const % n)
    if t.is_constant:
        return TRUE if t.const == 0 else FALSE
    d = gcd(n, gcd(t.content(), t.const))
    if d > 1:
        n //= d
        t = LinearTerm(tuple((v, c // d) for v, c in t.coeffs), t.const // d)
    if n == 1:
        return TRUE
    return Divides(n, t)


def _neg(f: Formula) -> Formula:
    """Normalized negation of an already-normalized formula."""
    if f == TRUE:
        return FALSE
    if f == FALSE:
        return TRUE
    if isinstance(f, GtZero):
        return norm_gt(-f.term + 1)
    if isinstance(f, EqZero):
        return _sorted_or([norm_gt(f.term), norm_gt(-f.term)])
    if isinstance(f, Divides):
        return Not(f)
    if isinstance(f, Not):
        return f.body
    if isinstance(f, And):
        return _sorted_or([_neg(a) for a in f.args])
    if isinstance(f, Or):
        return _sorted_and([_neg(a) for a in f.args])
    if isinstance(f, Exists):
        return Forall(f.var, _neg(f.body))
    if isinstance(f, Forall):
        return Exists(f.var, _neg(f.body))
    raise TypeError(f"not a formula: {f!r}")


def _sorted_args(args: list[Formula]) -> list[Formula]:
    seen = set()
    uniq = []
    for a in args:
        if a not in seen:
            seen.add(a)
            uniq.append(a)
    uniq.sort(key=show)
    return uniq


def sorted_and(args) -> Formula:
    """Flattened, deduplicated, canonically sorted conjunction.

    Arguments must already be normalized."""
    f = land(args)
    if isinstance(f, And):
        return land(_sorted_args(list(f.args)))
    return f


def sorted_or(args) -> Formula:
    f = lor(args)
    if isinstance(f, Or):
        return lor(_sorted_args(list(f.args)))
    return f


_sorted_and = sorted_and
_sorted_or = sorted_or


def normalize(f: Formula) -> Formula:
    if f == TRUE or f == FALSE:
        return f
    if isinstance(f, GtZero):
        return norm_gt(f.term)
    if isinstance(f, EqZero):
        return norm_eq(f.term)
    if isinstance(f, Divides):
        return norm_divides(f.modulus, f.term)
    if isinstance(f, Not):
        return _neg(normalize(f.body))
    if isinstance(f, And):
        return _sorted_and([normalize(a) for a in f.args])
    if isinstance(f, Or):
        return _sorted_or([normalize(a) for a in f.args])
    if isinstance(f, (Exists, Forall)):
        body = normalize(f.body)
        if body == TRUE or body == FALSE or f.var not in free_vars(body):
            return body
        return type(f)(f.var, body)
    raise TypeError(f"not a formula: {f!r}")
