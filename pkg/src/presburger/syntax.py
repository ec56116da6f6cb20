"""Formula trees for Presburger arithmetic.

Atoms are ``t = 0``, ``t > 0`` and ``N | t``; everything else (<=, >=, !=,
subtraction, ...) is desugared at parse time.  All nodes are immutable and
hashable, so formulas can be deduplicated and used as dict keys.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

from .terms import LinearTerm


class Formula:
    """Base class; see the concrete node types below."""

    __slots__ = ()

    def __and__(self, other: "Formula") -> "Formula":
        return land([self, other])

    def __or__(self, other: "Formula") -> "Formula":
        return lor([self, other])

    def __invert__(self) -> "Formula":
        return Not(self)


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


TRUE = TrueF()
FALSE = FalseF()


@dataclass(frozen=True)
class EqZero(Formula):
    term: LinearTerm


@dataclass(frozen=True)
class GtZero(Formula):
    term: LinearTerm


@dataclass(frozen=True)
class Divides(Formula):
    modulus: int
    term: LinearTerm

    def __post_init__(self) -> None:
        if self.modulus < 1:
            raise ValueError(f"modulus must be >= 1, got {self.modulus}")


ATOMS = (EqZero, GtZero, Divides)


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


def land(args) -> Formula:
    """Conjunction with flattening and unit folding."""
    flat: list[Formula] = []
    for a in args:
        if isinstance(a, TrueF):
            continue
        if isinstance(a, FalseF):
            return FALSE
        if isinstance(a, And):
            flat.extend(a.args)
        else:
            flat.append(a)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def lor(args) -> Formula:
    flat: list[Formula] = []
    for a in args:
        if isinstance(a, FalseF):
            continue
        if isinstance(a, TrueF):
            return TRUE
        if isinstance(a, Or):
            flat.extend(a.args)
        else:
            flat.append(a)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def _install_hash_cache(cls):
    base = cls.__hash__

    def cached(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = base(self)
            object.__setattr__(self, "_hash", h)
        return h

    cls.__hash__ = cached


for _cls in (TrueF, FalseF, EqZero, GtZero, Divides, Not, And, Or, Exists, Forall):
    _install_hash_cache(_cls)


def is_atom(f: Formula) -> bool:
    return isinstance(f, ATOMS)


def free_vars(f: Formula) -> frozenset[str]:
    fv = f.__dict__.get("_fv")
    if fv is not None:
        return fv
    if isinstance(f, (TrueF, FalseF)):
        fv = frozenset()
    elif isinstance(f, (EqZero, GtZero, Divides)):
        fv = f.term.variables()
    elif isinstance(f, Not):
        fv = free_vars(f.body)
    elif isinstance(f, (And, Or)):
        fv = reduce(frozenset.union, (free_vars(a) for a in f.args), frozenset())
    elif isinstance(f, (Exists, Forall)):
        fv = free_vars(f.body) - {f.var}
    else:
        raise TypeError(f"not a formula: {f!r}")
    object.__setattr__(f, "_fv", fv)
    return fv


def all_names(f: Formula) -> frozenset[str]:
    """Every identifier occurring in f, bound or free."""
    if isinstance(f, (Exists, Forall)):
        return all_names(f.body) | {f.var}
    if isinstance(f, Not):
        return all_names(f.body)
    if isinstance(f, (And, Or)):
        return reduce(frozenset.union, (all_names(a) for a in f.args), frozenset())
    return free_vars(f)


def fresh_name(base: str, taken) -> str:
    if base not in taken:
        return base
    i = 2
    while f"{base}_{i}" in taken:
        i += 1
    return f"{base}_{i}"


def map_terms(f: Formula, fn) -> Formula:
    """Rebuild f with fn applied to every atom's term."""
    if isinstance(f, EqZero):
        return EqZero(fn(f.term))
    if isinstance(f, GtZero):
        return GtZero(fn(f.term))
    if isinstance(f, Divides):
        return Divides(f.modulus, fn(f.term))
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, Not):
        return Not(map_terms(f.body, fn))
    if isinstance(f, And):
        return And(tuple(map_terms(a, fn) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(map_terms(a, fn) for a in f.args))
    if isinstance(f, Exists):
        return Exists(f.var, map_terms(f.body, fn))
    if isinstance(f, Forall):
        return Forall(f.var, map_terms(f.body, fn))
    raise TypeError(f"not a formula: {f!r}")


def substitute(f: Formula, var: str, replacement: LinearTerm) -> Formula:
    """Capture-avoiding substitution of a term for a free variable."""
    if var not in free_vars(f):
        return f
    if isinstance(f, (Exists, Forall)):
        ctor = type(f)
        if f.var == var:
            return f
        if f.var in replacement.variables():
            taken = all_names(f.body) | replacement.variables() | {var}
            nv = fresh_name(f.var, taken)
            body = substitute(f.body, f.var, LinearTerm.var(nv))
            return ctor(nv, substitute(body, var, replacement))
        return ctor(f.var, substitute(f.body, var, replacement))
    if isinstance(f, Not):
        return Not(substitute(f.body, var, replacement))
    if isinstance(f, And):
        return And(tuple(substitute(a, var, replacement) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(substitute(a, var, replacement) for a in f.args))
    return map_terms(f, lambda t: t.substitute(var, replacement))


def rename_var(f: Formula, old: str, new: str) -> Formula:
    return substitute(f, old, LinearTerm.var(new))


# --- canonical printer ---------------------------------------------------
#
# Precedence: or < and < not/atom; quantifier bodies extend maximally right,
# so quantifiers are parenthesized whenever they appear as an operand.

def show(f: Formula) -> str:
    return _show(f, 0)


def _show(f: Formula, prec: int) -> str:
    cached = f.__dict__.get("_show3")
    if cached is None:
        cached = _render(f)
        object.__setattr__(f, "_show3", cached)
    # cached = (string, min precedence at which parens are needed)
    s, parens_at = cached
    return f"({s})" if prec >= parens_at else s


def _render(f: Formula) -> tuple[str, int]:
    """Bare rendering plus the operand precedence that forces parentheses."""
    if isinstance(f, TrueF):
        return "true", 99
    if isinstance(f, FalseF):
        return "false", 99
    if isinstance(f, EqZero):
        return f"{f.term} = 0", 99
    if isinstance(f, GtZero):
        return f"{f.term} > 0", 99
    if isinstance(f, Divides):
        return f"{f.modulus} | {f.term}", 99
    if isinstance(f, Not):
        return f"not {_show(f.body, 3)}", 99
    if isinstance(f, And):
        return " and ".join(_show(a, 2) for a in f.args), 2
    if isinstance(f, Or):
        return " or ".join(_show(a, 1) for a in f.args), 1
    if isinstance(f, (Exists, Forall)):
        kw = "exists" if isinstance(f, Exists) else "forall"
        return f"{kw} {f.var}. {_show(f.body, 0)}", 1
    raise TypeError(f"not a formula: {f!r}")
