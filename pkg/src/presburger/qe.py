"""Quantifier elimination in the style of Cooper.

``eliminate_exists`` removes one innermost existential from a
quantifier-free body: the quantified variable's coefficients are
harmonized to +-1 by scaling each atom up to their lcm (recording the
scale as a divisibility constraint), and the quantifier is replaced by the
standard disjunction over the lcm period of test points taken from the
lower-bound atoms, plus the "minus infinity" case.  The output is
equivalent to the input in every Z-group, not just in the standard
integers, since only discreteness and division with remainder are used.

``eliminate`` applies this innermost-first over an arbitrary formula,
treating forall as not-exists-not.  ``decide`` settles sentences;
``dnf`` converts quantifier-free formulas to satisfiable conjunctions of
atoms for the cell machinery.
"""

from __future__ import annotations

from math import gcd, lcm

from .model import evaluate
from .rewrite import norm_divides, norm_eq, norm_gt, normalize, sorted_and, sorted_or
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
    is_atom,
    land,
    lor,
    show,
)
from .terms import LinearTerm


def _split_equalities(f: Formula, var: str) -> Formula:
    """Replace t = 0 atoms containing var by the pair of strict bounds."""
    if var not in free_vars(f):
        return f
    if isinstance(f, EqZero) and f.term.coeff(var) != 0:
        return land([GtZero(f.term + 1), GtZero(-f.term + 1)])
    if isinstance(f, And):
        return land([_split_equalities(a, var) for a in f.args])
    if isinstance(f, Or):
        return lor([_split_equalities(a, var) for a in f.args])
    if isinstance(f, Not):
        return Not(_split_equalities(f.body, var))
    return f


def _harmonize(f: Formula, var: str, delta: int) -> Formula:
    """Scale every atom so var's coefficient becomes +-1.

    Conceptually substitutes y = delta * var; the caller adds the
    compensating constraint delta | y.
    """
    if var not in free_vars(f):
        return f
    if isinstance(f, GtZero):
        c = f.term.coeff(var)
        if c == 0:
            return f
        k = delta // abs(c)
        rest = (f.term.drop(var)) * k
        sign = 1 if c > 0 else -1
        return GtZero(rest + LinearTerm.var(var, sign))
    if isinstance(f, (EqZero, Divides)):
        t = f.term
        c = t.coeff(var)
        if c == 0:
            return f
        k = delta // abs(c)
        rest = t.drop(var) * k
        sign = 1 if c > 0 else -1
        scaled = rest + LinearTerm.var(var, sign)
        if isinstance(f, EqZero):
            return EqZero(scaled)
        if sign < 0:
            scaled = -scaled  # N | t <=> N | -t
        return Divides(f.modulus * k, scaled)
    if isinstance(f, Not):
        return Not(_harmonize(f.body, var, delta))
    if isinstance(f, And):
        return And(tuple(_harmonize(a, var, delta) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(_harmonize(a, var, delta) for a in f.args))
    return f


def _atoms_with(f: Formula, var: str, acc: list) -> None:
    if is_atom(f):
        if f.term.coeff(var) != 0:
            acc.append(f)
    elif isinstance(f, Not):
        _atoms_with(f.body, var, acc)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            _atoms_with(a, var, acc)


def _minus_inf(f: Formula, var: str) -> Formula:
    """Limit of f as var -> -infinity (var's coefficients are +-1)."""
    if var not in free_vars(f):
        return f
    if isinstance(f, GtZero):
        return FALSE if f.term.coeff(var) > 0 else TRUE
    if isinstance(f, EqZero):
        return FALSE
    if isinstance(f, Not):
        return Not(_minus_inf(f.body, var))
    if isinstance(f, And):
        return land([_minus_inf(a, var) for a in f.args])
    if isinstance(f, Or):
        return lor([_minus_inf(a, var) for a in f.args])
    return f


def _subst_term(f: Formula, var: str, t: LinearTerm) -> Formula:
    """Substitute t for var in a quantifier-free formula."""
    if var not in free_vars(f):
        return f
    if is_atom(f):
        c = f.term.coeff(var)
        new = f.term.drop(var) + t * c
        if isinstance(f, GtZero):
            return GtZero(new)
        if isinstance(f, EqZero):
            return EqZero(new)
        return Divides(f.modulus, new)
    if isinstance(f, Not):
        return Not(_subst_term(f.body, var, t))
    if isinstance(f, And):
        return land([_subst_term(a, var, t) for a in f.args])
    if isinstance(f, Or):
        return lor([_subst_term(a, var, t) for a in f.args])
    return f


def _compile_subst(f: Formula, var: str):
    """Build an instantiator mapping a substitute term to f[var := t].

    Atom decompositions are computed once so each test point costs one
    term addition per atom containing var (whose coefficient is +-1 after
    harmonization).
    """
    if var not in free_vars(f):
        return lambda pos, neg: f
    if is_atom(f):
        c = f.term.coeff(var)
        rest = f.term.drop(var)
        if isinstance(f, GtZero):
            ctor = GtZero
        elif isinstance(f, EqZero):
            ctor = EqZero
        else:
            n = f.modulus
            if c == 1:
                return lambda pos, neg: Divides(n, rest + pos)
            if c == -1:
                return lambda pos, neg: Divides(n, rest + neg)
            return lambda pos, neg: Divides(n, rest + pos * c)
        if c == 1:
            return lambda pos, neg: ctor(rest + pos)
        if c == -1:
            return lambda pos, neg: ctor(rest + neg)
        return lambda pos, neg: ctor(rest + pos * c)
    if isinstance(f, Not):
        sub = _compile_subst(f.body, var)
        return lambda pos, neg: Not(sub(pos, neg))
    if isinstance(f, And):
        subs = [_compile_subst(a, var) for a in f.args]
        return lambda pos, neg: land([s(pos, neg) for s in subs])
    if isinstance(f, Or):
        subs = [_compile_subst(a, var) for a in f.args]
        return lambda pos, neg: lor([s(pos, neg) for s in subs])
    raise ValueError(f"quantifier under substitution: {f!r}")


def _propagate_equality(var: str, body: Formula) -> Formula | None:
    """Use a top-level equality conjunct c*var + t = 0 to remove var.

    Each atom containing var is scaled by |c| (an equivalence, as in
    coefficient harmonization) so c*var can be replaced by -t wholesale;
    the divisibility constraint |c| divides t keeps the substitution
    faithful.  Returns None when no equality conjunct mentions var.
    """
    conjuncts = list(body.args) if isinstance(body, And) else [body]
    pivot = None
    for a in conjuncts:
        if isinstance(a, EqZero) and a.term.coeff(var) != 0:
            pivot = a
            break
    if pivot is None:
        return None
    c = pivot.term.coeff(var)
    t = pivot.term.drop(var)
    if c < 0:
        c, t = -c, -t
    rest = [a for a in conjuncts if a is not pivot]

    def subst(g: Formula) -> Formula:
        if var not in free_vars(g):
            return g
        if is_atom(g):
            a = g.term.coeff(var)
            s = g.term.drop(var)
            new = s * c - t * a  # c*(a*var + s) with c*var = -t
            if isinstance(g, GtZero):
                return GtZero(new)
            if isinstance(g, EqZero):
                return EqZero(new)
            return Divides(g.modulus * c, new)
        if isinstance(g, Not):
            return Not(subst(g.body))
        if isinstance(g, And):
            return land([subst(a) for a in g.args])
        if isinstance(g, Or):
            return lor([subst(a) for a in g.args])
        raise TypeError(f"not quantifier-free: {g!r}")

    out = [subst(a) for a in rest]
    if c > 1:
        out.append(Divides(c, t))
    return normalize(land(out))


def eliminate_exists(var: str, body: Formula) -> Formula:
    """Quantifier-free equivalent of (exists var. body), body QF."""
    body = normalize(body)
    if var not in free_vars(body):
        return body
    if isinstance(body, Or):
        # the existential distributes; smaller disjuncts keep the test-point
        # expansion from multiplying across the whole disjunction
        return sorted_or([eliminate_exists(var, a) for a in body.args])
    propagated = _propagate_equality(var, body)
    if propagated is not None:
        return propagated
    body = normalize(_split_equalities(body, var))
    if var not in free_vars(body):
        return body
    if isinstance(body, Or):
        return sorted_or([eliminate_exists(var, a) for a in body.args])

    atoms: list = []
    _atoms_with(body, var, atoms)
    delta = 1
    for a in atoms:
        delta = lcm(delta, abs(a.term.coeff(var)))
    body = _harmonize(body, var, delta)
    if delta > 1:
        body = land([body, Divides(delta, LinearTerm.var(var))])

    atoms = []
    _atoms_with(body, var, atoms)
    period = 1
    lowers: list[LinearTerm] = []
    seen_lowers = set()
    for a in atoms:
        if isinstance(a, Divides):
            period = lcm(period, a.modulus)
        elif isinstance(a, GtZero) and a.term.coeff(var) > 0:
            bound = -(a.term.drop(var))  # var > bound
            if bound not in seen_lowers:
                seen_lowers.add(bound)
                lowers.append(bound)

    pieces: list[Formula] = []
    ninf_inst = _compile_subst(normalize(_minus_inf(body, var)), var)
    body_inst = _compile_subst(body, var)
    for j in range(1, period + 1):
        t = LinearTerm.constant(j)
        pieces.append(ninf_inst(t, -t))
    for bound in lowers:
        for j in range(1, period + 1):
            t = bound + j
            pieces.append(body_inst(t, -t))

    out: list[Formula] = []
    seen: set[Formula] = set()
    for p in pieces:
        p = normalize(p)
        if p == TRUE:
            return TRUE
        if p == FALSE or p in seen:
            continue
        seen.add(p)
        out.append(p)
    return sorted_or(out)


def eliminate(f: Formula) -> Formula:
    """Equivalent quantifier-free formula, valid in every Z-group."""
    if is_atom(f) or f == TRUE or f == FALSE:
        return normalize(f)
    if isinstance(f, Not):
        return normalize(Not(eliminate(f.body)))
    if isinstance(f, And):
        return sorted_and([eliminate(a) for a in f.args])
    if isinstance(f, Or):
        return sorted_or([eliminate(a) for a in f.args])
    if isinstance(f, Exists):
        return eliminate_exists(f.var, eliminate(f.body))
    if isinstance(f, Forall):
        inner = normalize(Not(eliminate(f.body)))
        return normalize(Not(eliminate_exists(f.var, inner)))
    raise TypeError(f"not a formula: {f!r}")


def decide(sentence: Formula) -> bool:
    """Truth value of a sentence in Presburger arithmetic."""
    fv = free_vars(sentence)
    if fv:
        raise ValueError(f"decide requires a sentence; free variables {sorted(fv)}")
    result = eliminate(sentence)
    if result == TRUE:
        return True
    if result == FALSE:
        return False
    # ground but unfolded atoms cannot survive normalize; evaluate defensively
    return evaluate(result, {})


def _expand_ndivides(f: Formula) -> Formula:
    """not(N | t)  ->  or over k in 1..N-1 of N | t - k."""
    if isinstance(f, Not) and isinstance(f.body, Divides):
        n, t = f.body.modulus, f.body.term
        return lor([norm_divides(n, t - k) for k in range(1, n)])
    if isinstance(f, And):
        return land([_expand_ndivides(a) for a in f.args])
    if isinstance(f, Or):
        return lor([_expand_ndivides(a) for a in f.args])
    return f


def dnf(f: Formula) -> list[list[Formula]]:
    """Satisfiable disjuncts of a quantifier-free formula, as atom lists.

    Each disjunct is a conjunction of positive atoms (negated divisibility
    is expanded through residues); unsatisfiable disjuncts are dropped,
    certified by decide on their existential closure.
    """
    f = _expand_ndivides(normalize(f))
    f = normalize(f)

    def go(g: Formula) -> list[tuple[Formula, ...]]:
        if g == TRUE:
            return [()]
        if g == FALSE:
            return []
        if is_atom(g):
            return [(g,)]
        if isinstance(g, Or):
            out = []
            for a in g.args:
                out.extend(go(a))
            return out
        if isinstance(g, And):
            acc: list[tuple[Formula, ...]] = [()]
            for a in g.args:
                parts = go(a)
                acc = [c + p for c in acc for p in parts]
            return acc
        raise ValueError(f"dnf requires a quantifier-free formula, got {show(g)}")

    out: list[list[Formula]] = []
    seen = set()
    for conj in go(f):
        atoms = sorted(set(conj), key=show)
        key = tuple(atoms)
        if key in seen:
            continue
        seen.add(key)
        closure: Formula = land(atoms)
        for v in sorted(free_vars(closure)):
            closure = Exists(v, closure)
        if decide(closure):
            out.append(list(atoms))
    return out


def witness_radius(body: Formula, var: str, ranges: dict[str, int]) -> int:
    """Sound search radius for witnesses of (exists var. body), body QF.

    By the test-point argument, a witness exists among the lower-bound
    values shifted by at most the harmonized divisibility period, or (in
    the minus-infinity case) anywhere a period below all atom thresholds;
    with every other free variable v confined to |v| <= ranges[v], all such
    candidates satisfy |candidate| <= max-threshold + period.
    """
    body = normalize(_split_equalities(normalize(body), var))
    atoms: list = []
    _atoms_with(body, var, atoms)
    if not atoms:
        return 1
    delta = 1
    for a in atoms:
        delta = lcm(delta, abs(a.term.coeff(var)))
    period = delta
    for a in atoms:
        if isinstance(a, Divides):
            period = lcm(period, a.modulus * (delta // abs(a.term.coeff(var))))
    threshold = 0
    for a in atoms:
        c = abs(a.term.coeff(var))
        t = a.term.drop(var)
        mag = abs(t.const)
        for v, cv in t.coeffs:
            if v not in ranges:
                raise ValueError(f"no range for free variable {v!r}")
            mag += abs(cv) * ranges[v]
        threshold = max(threshold, -(-mag // c))
    return threshold + period + 1
