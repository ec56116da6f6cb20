"""Cells and cell decomposition.

A cell constrains each coordinate, in order, between optional affine bounds
of the earlier coordinates (exact on the cell thanks to divisibility side
conditions) together with a congruence condition.  ``decompose`` rewrites an
arbitrary definable set into disjoint cells, refining a given partition and
attaching an affine rule for each supplied definable function; every claim
it makes is certified post-hoc through ``decide``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

from .qe import decide, eliminate
from .rewrite import norm_divides, norm_eq, norm_gt, normalize, sorted_and
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
from .terms import LinearTerm, RatTerm


class DecomposeError(ValueError):
    """Raised when preconditions fail; carries the offending sentence."""

    def __init__(self, message: str, sentence: Formula | None = None):
        if sentence is not None:
            message = f"{message}: {show(sentence)}"
        super().__init__(message)
        self.sentence = sentence


@dataclass(frozen=True)
class AffineRule:
    """x -> M x + c with rational matrix entries and affine parameter offsets.

    ``matrix`` has one row per output and one column per input coordinate;
    ``offset`` holds one rational-affine form over parameter variables per
    row.  Divisibility conditions of the enclosing cell guarantee integer
    values on the cell.
    """

    matrix: tuple[tuple[Fraction, ...], ...]
    offset: tuple[RatTerm, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "matrix", tuple(tuple(Fraction(c) for c in row) for row in self.matrix)
        )
        if len(self.matrix) != len(self.offset):
            raise ValueError("matrix rows and offsets disagree")

    @property
    def rows(self) -> int:
        return len(self.matrix)

    @property
    def cols(self) -> int:
        return len(self.matrix[0]) if self.matrix else 0

    @staticmethod
    def from_terms(terms: list[RatTerm], inputs: tuple[str, ...]) -> "AffineRule":
        matrix = []
        offsets = []
        for t in terms:
            matrix.append(tuple(t.coeff(v) for v in inputs))
            rest = RatTerm(
                tuple((v, c) for v, c in t.coeffs if v not in inputs), t.const
            )
            offsets.append(rest)
        return AffineRule(tuple(matrix), tuple(offsets))

    def row_term(self, row: int, inputs: tuple[str, ...]) -> RatTerm:
        """The row as a rational-affine form over input names and parameters."""
        t = self.offset[row]
        for j, v in enumerate(inputs):
            c = self.matrix[row][j]
            if c:
                t = t + RatTerm.var(v, c)
        return t

    def apply_terms(self, args: list[RatTerm]) -> list[RatTerm]:
        """Compose: substitute rational-affine forms for the inputs."""
        out = []
        for r in range(self.rows):
            t = self.offset[r]
            for j, a in enumerate(args):
                c = self.matrix[r][j]
                if c:
                    t = t + a * c
            out.append(t)
        return out

    def evaluate(self, point, params: dict | None = None):
        """Exact values at an integer/model point; errors if non-integral."""
        vals = []
        for r in range(self.rows):
            acc = Fraction(0)
            for j, x in enumerate(point):
                c = self.matrix[r][j]
                if c:
                    if not isinstance(x, int):
                        return self._evaluate_model(point, params)
                    acc += c * x
            off = self.offset[r].evaluate(params or {})
            val = acc + off
            if isinstance(val, Fraction):
                if val.denominator != 1:
                    raise ValueError(f"rule row {r} non-integral at {point}: {val}")
                val = int(val)
            vals.append(val)
        return vals

    def _evaluate_model(self, point, params):
        from .terms import scale_exact

        vals = []
        for r in range(self.rows):
            acc = None
            for j, x in enumerate(point):
                c = self.matrix[r][j]
                if c:
                    part = scale_exact(x, c)
                    acc = part if acc is None else acc + part
            off = self.offset[r].evaluate(params or {})
            vals.append(off if acc is None else acc + off)
        return vals


@dataclass(frozen=True)
class CellLevel:
    lower: AffineRule | None = None
    upper: AffineRule | None = None
    modulus: int = 1
    residue: int = 0

    def __post_init__(self) -> None:
        if self.modulus < 1 or not 0 <= self.residue < self.modulus:
            raise ValueError(f"bad congruence {self.residue} mod {self.modulus}")


@dataclass(frozen=True)
class Cell:
    """Paper-shaped cell: per-level bounds plus congruence, with an optional
    parameter-only guard formula."""

    variables: tuple[str, ...]
    levels: tuple[CellLevel, ...]
    guard: Formula = TRUE

    def __post_init__(self) -> None:
        if len(self.variables) != len(self.levels):
            raise ValueError("variables and levels disagree")

    @property
    def arity(self) -> int:
        return len(self.variables)


@dataclass(frozen=True)
class FunctionSpec:
    """Definable function given by its graph formula."""

    name: str
    graph: Formula
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]


def _bound_atom_gt(a: RatTerm, b: RatTerm) -> Formula:
    """a > b as an integer atom (denominators cleared; both integer-valued)."""
    t, _ = (a - b).cleared()
    return norm_gt(t)


def _bound_atom_ge(a: RatTerm, b: RatTerm) -> Formula:
    t, _ = (a - b).cleared()
    return norm_gt(t + 1)


def cell_formula(cell: Cell) -> Formula:
    """Quantifier-free formula over the cell's variables plus parameters."""
    parts: list[Formula] = []
    if cell.guard != TRUE:
        parts.append(cell.guard)
    for i, level in enumerate(cell.levels):
        prev = cell.variables[:i]
        y = RatTerm.var(cell.variables[i])
        if level.lower is not None:
            parts.append(_bound_atom_gt(y, level.lower.row_term(0, prev)))
        if level.upper is not None:
            parts.append(_bound_atom_gt(level.upper.row_term(0, prev), y))
        if level.modulus > 1:
            parts.append(
                norm_divides(level.modulus, LinearTerm.var(cell.variables[i]) - level.residue)
            )
    return sorted_and([normalize(p) for p in parts])


# --- disjoint region expansion --------------------------------------------


def _atoms_of(f: Formula) -> list[Formula]:
    out: list[Formula] = []
    seen = set()

    def walk(g):
        if is_atom(g):
            if g not in seen:
                seen.add(g)
                out.append(g)
        elif isinstance(g, Not):
            walk(g.body)
        elif isinstance(g, (And, Or)):
            for a in g.args:
                walk(a)

    walk(f)
    out.sort(key=show)
    return out


def _subst_atom(f: Formula, atom: Formula, value: Formula) -> Formula:
    if f == atom:
        return value
    if isinstance(f, Not):
        return Not(_subst_atom(f.body, atom, value))
    if isinstance(f, And):
        return land([_subst_atom(a, atom, value) for a in f.args])
    if isinstance(f, Or):
        return lor([_subst_atom(a, atom, value) for a in f.args])
    return f


def _fm_unsat(atoms) -> bool:
    """True when the conjunction is unsatisfiable already over the rationals.

    Equalities are removed by exact substitution, then Fourier-Motzkin runs
    on the strict inequalities; divisibility atoms are ignored, so True is
    a sound verdict and False means unknown.  Work is capped; a blown cap
    also reports unknown.
    """
    eqs: list[RatTerm] = []
    ineqs: list[RatTerm] = []  # each means term > 0
    for a in atoms:
        if isinstance(a, GtZero):
            ineqs.append(RatTerm.from_linear(a.term))
        elif isinstance(a, EqZero):
            eqs.append(RatTerm.from_linear(a.term))
    # Gaussian substitution of the equalities
    while eqs:
        t = eqs.pop()
        if t.is_constant:
            if t.const != 0:
                return True
            continue
        v, c = t.coeffs[0]
        sol = (t - RatTerm.var(v, c)) * (Fraction(-1) / c)
        eqs = [e.substitute(v, sol) for e in eqs]
        ineqs = [i.substitute(v, sol) for i in ineqs]
    # Fourier-Motzkin on strict inequalities
    rounds = 0
    while ineqs and rounds < 12:
        rounds += 1
        ground = [i for i in ineqs if i.is_constant]
        if any(i.const <= 0 for i in ground):
            return True
        ineqs = [i for i in ineqs if not i.is_constant]
        if not ineqs:
            return False
        counts: dict[str, tuple[int, int]] = {}
        for i in ineqs:
            for v, c in i.coeffs:
                pos, neg = counts.get(v, (0, 0))
                counts[v] = (pos + (c > 0), neg + (c < 0))
        v = min(counts, key=lambda w: (counts[w][0] * counts[w][1], w))
        pos = [i for i in ineqs if i.coeff(v) > 0]
        neg = [i for i in ineqs if i.coeff(v) < 0]
        rest = [i for i in ineqs if i.coeff(v) == 0]
        if len(pos) * len(neg) > 64:
            return False
        for p in pos:
            for q in neg:
                rest.append(p * (-q.coeff(v)) + q * p.coeff(v))
        ineqs = rest
    if any(i.is_constant and i.const <= 0 for i in ineqs):
        return True
    return False


class _Decider:
    """decide() with per-run memoization and a rational-relaxation filter."""

    def __init__(self) -> None:
        self.memo: dict[Formula, bool] = {}

    def __call__(self, sentence: Formula) -> bool:
        hit = self.memo.get(sentence)
        if hit is None:
            hit = decide(sentence)
            self.memo[sentence] = hit
        return hit

    def feasible(self, atoms) -> bool:
        """Cheap one-sided filter: False only when certainly empty."""
        normed = [normalize(a) for a in atoms]
        if FALSE in normed:
            return False
        return not _fm_unsat(normed)

    def satisfiable(self, atoms) -> bool:
        normed = [normalize(a) for a in atoms]
        f: Formula = sorted_and(normed)
        if f == FALSE:
            return False
        if _fm_unsat(normed):
            return False
        for v in sorted(free_vars(f)):
            f = Exists(v, f)
        return self(f)


def disjoint_regions(f: Formula, dec: _Decider) -> list[list[Formula]]:
    """Pairwise-disjoint satisfiable atom conjunctions covering f.

    Shannon-style expansion on canonical atoms: comparisons branch two
    ways, equalities three ways, divisibility over its residues, so sibling
    branches are disjoint and their union is the whole space.
    """
    out: list[list[Formula]] = []

    def go(constraints: list[Formula], g: Formula) -> None:
        g = normalize(g)
        if g == FALSE:
            return
        if not dec.feasible(constraints):
            return
        if g == TRUE:
            if dec.satisfiable(constraints):
                out.append(list(constraints))
            return
        atom = _atoms_of(g)[0]
        if isinstance(atom, GtZero):
            branches = [(atom, TRUE), (norm_gt(-atom.term + 1), FALSE)]
        elif isinstance(atom, EqZero):
            branches = [
                (atom, TRUE),
                (norm_gt(atom.term), FALSE),
                (norm_gt(-atom.term), FALSE),
            ]
        else:
            branches = [
                (norm_divides(atom.modulus, atom.term - r), TRUE if r == 0 else FALSE)
                for r in range(atom.modulus)
            ]
        for batom, value in branches:
            if batom == FALSE:
                continue
            extra = [] if batom == TRUE else [batom]
            go(constraints + extra, _subst_atom(g, atom, value))

    go([], normalize(f))
    return out


# --- the decomposition recursion ------------------------------------------


@dataclass
class _Region:
    """One emitted region: levels for the processed variables (innermost
    last) plus the residual base atoms."""

    base_atoms: list[Formula]
    levels: list[CellLevel]


def _lower_candidates(c: int, t: LinearTerm):
    """Residue cases for a lower bound from c*z + t > 0 with c > 0.

    Yields (guard_atoms, bound) with bound integer-valued where the guard
    holds and z > bound equivalent to the atom.
    """
    if c == 1:
        yield [], RatTerm.from_linear(-t)
        return
    for rho in range(c):
        guard = norm_divides(c, t + rho)
        if guard == FALSE:
            continue
        bound = RatTerm.from_linear(-t - rho) * Fraction(1, c)
        yield [] if guard == TRUE else [guard], bound


def _upper_candidates(a: int, t: LinearTerm):
    """Residue cases for an upper bound from -a*z + t > 0 with a > 0."""
    if a == 1:
        yield [], RatTerm.from_linear(t)
        return
    for rho in range(a):
        guard = norm_divides(a, t - rho)
        if guard == FALSE:
            continue
        bound = RatTerm.from_linear(t - rho) * Fraction(1, a)
        if rho:
            bound = bound + 1
        yield [] if guard == TRUE else [guard], bound


def _argmax_splits(cands: list[RatTerm]):
    """Regions where candidate i is the strict-max (ties go to the earliest)."""
    if not cands:
        yield [], None
        return
    if len(cands) == 1:
        yield [], cands[0]
        return
    for i, f in enumerate(cands):
        conds: list[Formula] = []
        for j, g in enumerate(cands):
            if i == j:
                continue
            conds.append(_bound_atom_gt(f, g) if j < i else _bound_atom_ge(f, g))
        yield conds, f


def _argmin_splits(cands: list[RatTerm]):
    if not cands:
        yield [], None
        return
    if len(cands) == 1:
        yield [], cands[0]
        return
    for i, f in enumerate(cands):
        conds: list[Formula] = []
        for j, g in enumerate(cands):
            if i == j:
                continue
            conds.append(_bound_atom_gt(g, f) if j < i else _bound_atom_ge(g, f))
        yield conds, f


def _congruence_guard(value: RatTerm, residue: int, modulus: int) -> Formula:
    """modulus | (value - residue) for an integer-valued rational form."""
    t, d = (value - residue).cleared()
    return norm_divides(d * modulus, t)


def _window_level(value: RatTerm, inputs: tuple[str, ...]) -> CellLevel:
    """Exact-value level: value-1 < z < value+1."""
    lo = AffineRule.from_terms([value - 1], inputs)
    hi = AffineRule.from_terms([value + 1], inputs)
    return CellLevel(lower=lo, upper=hi, modulus=1, residue=0)


def _build(
    atoms: list[Formula],
    evars: tuple[str, ...],
    exact_vars: frozenset[str],
    dec: _Decider,
) -> list[_Region]:
    """Recursively peel the last variable into a cell level."""
    atoms = [normalize(a) for a in atoms]
    if FALSE in atoms:
        return []
    atoms = [a for a in atoms if a != TRUE]
    if not evars:
        return [_Region(base_atoms=atoms, levels=[])]
    if not dec.feasible(atoms):
        return []
    z = evars[-1]
    rest = evars[:-1]

    with_z: list[Formula] = []
    base: list[Formula] = []
    for a in atoms:
        (with_z if z in free_vars(a) else base).append(a)

    # equalities on z become two strict inequalities
    ineqs: list[tuple[int, LinearTerm]] = []  # (coeff of z, remainder)
    congs: list[tuple[int, int, LinearTerm]] = []  # (modulus, coeff, remainder)
    for a in with_z:
        c = a.term.coeff(z)
        t = a.term.drop(z)
        if isinstance(a, GtZero):
            ineqs.append((c, t))
        elif isinstance(a, EqZero):
            ineqs.append((c, t + 1))
            ineqs.append((-c, -t + 1))
        else:
            congs.append((a.modulus, c, t))

    modulus = 1
    for n, _, _ in congs:
        modulus = lcm(modulus, n)

    out: list[_Region] = []
    for k in range(modulus):
        cong_guards: list[Formula] = []
        dead = False
        for n, c, t in congs:
            g = norm_divides(n, t + c * k)
            if g == FALSE:
                dead = True
                break
            if g != TRUE:
                cong_guards.append(g)
        if dead:
            continue

        lower_cases = [list(_lower_candidates(c, t)) for c, t in ineqs if c > 0]
        upper_cases = [list(_upper_candidates(-c, t)) for c, t in ineqs if c < 0]

        for combo_low in itertools.product(*lower_cases):
            for combo_up in itertools.product(*upper_cases):
                res_guards = [g for gs, _ in combo_low for g in gs]
                res_guards += [g for gs, _ in combo_up for g in gs]
                lows = [b for _, b in combo_low]
                ups = [b for _, b in combo_up]
                region0 = base + cong_guards + res_guards
                if not dec.feasible(region0):
                    continue
                for max_conds, f_low in _argmax_splits(lows):
                    for min_conds, g_up in _argmin_splits(ups):
                        region = region0 + max_conds + min_conds
                        if not dec.feasible(region):
                            continue
                        out.extend(
                            _emit_level(
                                region, rest, z, f_low, g_up, modulus, k,
                                exact=z in exact_vars, exact_vars=exact_vars, dec=dec,
                            )
                        )
    return out


def _emit_level(
    region: list[Formula],
    rest: tuple[str, ...],
    z: str,
    f_low: RatTerm | None,
    g_up: RatTerm | None,
    modulus: int,
    residue: int,
    exact: bool,
    exact_vars: frozenset[str],
    dec: _Decider,
) -> list[_Region]:
    out: list[_Region] = []

    def finish(extra: list[Formula], level: CellLevel) -> None:
        for sub in _build(region + extra, rest, exact_vars, dec):
            sub.levels.append(level)
            out.append(sub)

    if exact:
        if f_low is None or g_up is None:
            raise DecomposeError(
                f"function output {z!r} is not pinned by the graph on a region"
            )
        for d in range(1, modulus + 1):
            value = f_low + d
            extra = [_bound_atom_gt(g_up, value)]
            if modulus > 1:
                extra.append(_congruence_guard(value, residue, modulus))
            out_level = _window_level(value, rest)
            finish(extra, out_level)
        return out

    if f_low is not None and g_up is not None:
        # wide part: the paper's gap condition upper - lower > modulus
        wide = _bound_atom_gt(g_up - f_low, RatTerm.constant(modulus))
        lo = AffineRule.from_terms([f_low], rest)
        hi = AffineRule.from_terms([g_up], rest)
        finish([wide], CellLevel(lower=lo, upper=hi, modulus=modulus, residue=residue))
        # thin part: at most modulus - 1 values, emitted as exact windows
        thin = _bound_atom_ge(RatTerm.constant(modulus), g_up - f_low)
        for d in range(1, modulus):
            value = f_low + d
            extra = [thin, _bound_atom_gt(g_up, value)]
            if modulus > 1:
                extra.append(_congruence_guard(value, residue, modulus))
            finish(extra, _window_level(value, rest))
        return out

    lo = AffineRule.from_terms([f_low], rest) if f_low is not None else None
    hi = AffineRule.from_terms([g_up], rest) if g_up is not None else None
    finish([], CellLevel(lower=lo, upper=hi, modulus=modulus, residue=residue))
    return out


# --- decompose -------------------------------------------------------------


def _forall_closure(f: Formula, free_order: list[str]) -> Formula:
    for v in reversed(free_order):
        f = Forall(v, f)
    return f


def _certify(dec: _Decider, claim: Formula, message: str) -> None:
    sentence = _forall_closure(claim, sorted(free_vars(claim)))
    if not dec(sentence):
        raise DecomposeError(message, sentence)


@dataclass
class DecomposedCell:
    cell: Cell
    part: int
    rules: dict[str, AffineRule] = field(default_factory=dict)


def decompose(
    region: Formula,
    point_vars: tuple[str, ...],
    refine: tuple[Formula, ...] = (),
    funcs: tuple[FunctionSpec, ...] = (),
    certify: bool = True,
) -> list[DecomposedCell]:
    """Cell decomposition of ``region`` refining ``refine`` and linearizing
    each function in ``funcs``.

    Returns disjoint cells whose union is the region; each cell lies in
    exactly one refinement part and carries one affine rule per function,
    valid on that cell.  All structural claims are checked through decide
    (universally over any parameter variables) unless ``certify`` is False.
    """
    dec = _Decider()
    region = normalize(eliminate(region))
    parts = [normalize(eliminate(p)) for p in refine] or [TRUE]

    if refine:
        for i in range(len(parts)):
            for j in range(i + 1, len(parts)):
                _certify(
                    dec,
                    Not(land([region, parts[i], parts[j]])),
                    f"refinement parts {i} and {j} overlap inside the region",
                )
        _certify(
            dec,
            lor([Not(region), lor(parts)]),
            "refinement does not cover the region",
        )

    outputs: list[str] = []
    for fn in funcs:
        if tuple(fn.inputs) != tuple(point_vars):
            raise DecomposeError(
                f"function {fn.name!r} inputs {fn.inputs} differ from point variables"
            )
        for o in fn.outputs:
            if o in point_vars or o in outputs:
                raise DecomposeError(f"output variable {o!r} reused")
            outputs.append(o)
        if certify:
            _check_functional(dec, region, fn)

    evars = tuple(point_vars) + tuple(outputs)
    exact = frozenset(outputs)

    results: list[DecomposedCell] = []
    for part_idx, part in enumerate(parts):
        body = land([region, part] + [normalize(eliminate(fn.graph)) for fn in funcs])
        body = normalize(eliminate(body))
        for leaf in disjoint_regions(body, dec):
            for reg in _build(leaf, evars, exact, dec):
                results.append(_assemble(reg, point_vars, outputs, funcs, part_idx))

    # exact final prune: interior pruning is a rational relaxation only
    alive = []
    for r in results:
        f: Formula = cell_formula(r.cell)
        for v in sorted(free_vars(f)):
            f = Exists(v, f)
        if dec(f):
            alive.append(r)
    results = alive
    results.sort(key=lambda r: (r.part, show(cell_formula(r.cell))))
    if certify:
        _certify_results(dec, region, parts, results, funcs, bool(refine))
    return results


def _check_functional(dec: _Decider, region: Formula, fn: FunctionSpec) -> None:
    from .syntax import rename_var

    ys = fn.outputs
    graph = fn.graph
    exists_y: Formula = graph
    for y in reversed(ys):
        exists_y = Exists(y, exists_y)
    _certify(
        dec,
        lor([Not(region), exists_y]),
        f"function {fn.name!r} has no value somewhere on the region",
    )
    primed = {y: f"{y}__p" for y in ys}
    g2 = graph
    for y, yp in primed.items():
        g2 = rename_var(g2, y, yp)
    same = land(
        [EqZero(LinearTerm.var(y) - LinearTerm.var(primed[y])) for y in ys]
    )
    _certify(
        dec,
        lor([Not(land([region, graph, g2])), same]),
        f"function {fn.name!r} is multi-valued on the region",
    )


def _assemble(
    reg: _Region,
    point_vars: tuple[str, ...],
    outputs: list[str],
    funcs: tuple[FunctionSpec, ...],
    part_idx: int,
) -> DecomposedCell:
    n = len(point_vars)
    point_levels = tuple(reg.levels[:n])
    guard = sorted_and([normalize(a) for a in reg.base_atoms])
    cell = Cell(variables=tuple(point_vars), levels=point_levels, guard=guard)

    # output levels are exact windows; value = lower + 1, then substitute
    # earlier outputs so every rule is over the point coordinates alone
    value_terms: dict[str, RatTerm] = {}
    for idx, o in enumerate(outputs):
        level = reg.levels[n + idx]
        prev = tuple(point_vars) + tuple(outputs[:idx])
        if level.lower is None or level.upper is None or level.modulus != 1:
            raise DecomposeError(f"output level for {o!r} is not an exact window")
        value = level.lower.row_term(0, prev) + 1
        width = level.upper.row_term(0, prev) - level.lower.row_term(0, prev)
        if not (width.is_constant and width.const == 2):
            raise DecomposeError(f"output level for {o!r} is not an exact window")
        for e in outputs[:idx]:
            value = value.substitute(e, value_terms[e])
        value_terms[o] = value

    rules: dict[str, AffineRule] = {}
    for fn in funcs:
        rules[fn.name] = AffineRule.from_terms(
            [value_terms[o] for o in fn.outputs], tuple(point_vars)
        )
    return DecomposedCell(cell=cell, part=part_idx, rules=rules)


def _rule_formula(rule: AffineRule, inputs: tuple[str, ...], outs: tuple[str, ...]) -> Formula:
    """Graph of the rule: conjunction of cleared equalities d*y = d*row(x)."""
    parts = []
    for r, y in enumerate(outs):
        t, _ = (RatTerm.var(y) - rule.row_term(r, inputs)).cleared()
        parts.append(norm_eq(t))
    return land(parts)


def _certify_results(
    dec: _Decider,
    region: Formula,
    parts: list[Formula],
    results: list[DecomposedCell],
    funcs: tuple[FunctionSpec, ...],
    have_refine: bool,
) -> None:
    formulas = [cell_formula(r.cell) for r in results]
    # pairwise disjoint
    for i in range(len(results)):
        for j in range(i + 1, len(results)):
            _certify(
                dec,
                Not(land([formulas[i], formulas[j]])),
                f"cells {i} and {j} overlap",
            )
    # union equals the region
    _certify(
        dec,
        lor([Not(region), lor(formulas)]) if formulas else Not(region),
        "cells do not cover the region",
    )
    for i, f in enumerate(formulas):
        _certify(dec, lor([Not(f), region]), f"cell {i} leaves the region")
        if have_refine:
            _certify(
                dec,
                lor([Not(f), parts[results[i].part]]),
                f"cell {i} leaves its refinement part",
            )
    # gap condition for two-sided levels, under the earlier levels' prefix
    for i, r in enumerate(results):
        for li, level in enumerate(r.cell.levels):
            if level.lower is None or level.upper is None:
                continue
            prev = r.cell.variables[:li]
            prefix = cell_formula(
                Cell(variables=prev, levels=r.cell.levels[:li], guard=r.cell.guard)
            )
            gap = _bound_atom_gt(
                level.upper.row_term(0, prev) - level.lower.row_term(0, prev),
                RatTerm.constant(level.modulus),
            )
            _certify(
                dec,
                lor([Not(prefix), gap]),
                f"cell {i} level {li} violates the gap condition",
            )
    # rules match the graphs
    for i, r in enumerate(results):
        for fn in funcs:
            rf = _rule_formula(r.rules[fn.name], r.cell.variables, fn.outputs)
            _certify(
                dec,
                lor([Not(land([formulas[i], rf])), fn.graph]),
                f"cell {i} rule for {fn.name!r} disagrees with the graph",
            )


# --- JSON ------------------------------------------------------------------


def _frac_json(q: Fraction) -> dict:
    return {"num": q.numerator, "den": q.denominator}


def _ratterm_json(t: RatTerm) -> dict:
    return {
        "coeffs": {v: _frac_json(c) for v, c in t.coeffs},
        "const": _frac_json(t.const),
    }


def rule_json(rule: AffineRule) -> dict:
    return {
        "matrix": [[_frac_json(c) for c in row] for row in rule.matrix],
        "offset": [_ratterm_json(t) for t in rule.offset],
    }


def cell_json(cell: Cell) -> dict:
    levels = []
    for level in cell.levels:
        entry: dict = {}
        if level.lower is not None:
            entry["lower"] = rule_json(level.lower)
        if level.upper is not None:
            entry["upper"] = rule_json(level.upper)
        entry["modulus"] = level.modulus
        entry["residue"] = level.residue
        levels.append(entry)
    out = {"variables": list(cell.variables), "levels": levels}
    if cell.guard != TRUE:
        out["guard"] = show(cell.guard)
    return out
