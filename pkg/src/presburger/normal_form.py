"""Unboundedness degree and piecewise-affine normal forms.

``normal_form`` rewrites a definable set X as the bijective image of a set
X' inside Z_{>=0}^r x [0,a)^s, where r is the number of genuinely unbounded
directions and the s bounded coordinates sit in half-open boxes.  The
construction works cell by cell, peeling the last coordinate:

* congruences are absorbed by re-parameterizing the coordinate over its
  residue class;
* a coordinate with no bounds splits into nonnegative and negative halves,
  each a copy of Z_{>=0}; with a single bound it is translated/reflected;
* a doubly bounded coordinate whose window width does not involve the free
  coordinates is absorbed into the bounded box;
* an unboundedly wide window is split, after reducing the leading width
  coefficient to one, into the part below the free-coordinate-independent
  threshold (one fewer coordinate, recurse) and a band that is sheared onto
  a product with a fresh nonnegative coordinate.

Pieces are finally packed into disjoint congruence slots of the first
coordinate, which also realizes the even/odd folding of Z onto Z_{>=0}.
``ubd`` is the r of the constructed normal form; minimality is certified by
the emitted bijection plus the rank-r piece it contains.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import gcd, lcm

from .cells import (
    AffineRule,
    Cell,
    CellLevel,
    DecomposedCell,
    _Decider,
    cell_formula,
    decompose,
    _bound_atom_ge,
    _bound_atom_gt,
)
from .model import NonstdInt, evaluate
from .qe import decide, eliminate
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
    land,
    lor,
    show,
)
from .terms import LinearTerm, RatTerm


class NormalFormError(ValueError):
    pass


# --- parametric decision helper --------------------------------------------


@dataclass
class _Context:
    dec: _Decider
    params: tuple[str, ...]
    val: dict | None  # parameter valuation (ints or NonstdInt), or None
    counter: int = 0

    def fresh(self, prefix: str = "c") -> str:
        self.counter += 1
        return f"_{prefix}{self.counter}"

    def holds(self, claim: Formula) -> bool:
        """Truth of a universally quantified claim; parameters are fixed by
        the valuation when one is given, else universally quantified."""
        body = claim
        for v in sorted(free_vars(claim) - set(self.params)):
            body = Forall(v, body)
        if self.val is None:
            for p in sorted(free_vars(body)):
                body = Forall(p, body)
            return self.dec(body)
        qf = normalize(eliminate(body))
        return evaluate(qf, self.val)

    def guard_true(self, guard: Formula) -> bool:
        """Is the parameter-only guard satisfied (at val) / satisfiable?"""
        guard = normalize(guard)
        if guard == TRUE:
            return True
        if guard == FALSE:
            return False
        if self.val is not None:
            return evaluate(guard, self.val)
        g = guard
        for p in sorted(free_vars(g)):
            g = Exists(p, g)
        return self.dec(g)


# --- pieces ----------------------------------------------------------------


@dataclass(frozen=True)
class _BoxLevel:
    upper: RatTerm  # strict upper bound over earlier box coords + parameters
    modulus: int = 1
    residue: int = 0


@dataclass
class _Piece:
    """Z_{>=0}^l x B piece with an affine map back to the original set.

    ``free`` coordinates are unconstrained nonnegative; ``box`` coordinates
    carry [0, upper) windows plus congruences, with uppers referencing only
    earlier box coordinates and parameters.  ``target`` expresses the
    original coordinates as rational-affine forms over the piece
    coordinates and parameters.  ``guards`` are parameter-only atoms.
    """

    free: list[str] = field(default_factory=list)
    box: list[str] = field(default_factory=list)
    box_levels: list[_BoxLevel] = field(default_factory=list)
    guards: list[Formula] = field(default_factory=list)
    target: list[RatTerm] = field(default_factory=list)

    def clone(self) -> "_Piece":
        return _Piece(
            free=list(self.free),
            box=list(self.box),
            box_levels=list(self.box_levels),
            guards=list(self.guards),
            target=list(self.target),
        )

    @property
    def rank(self) -> int:
        return len(self.free)

    def coords(self) -> list[str]:
        return self.free + self.box

    def substitute(self, var: str, repl: RatTerm) -> None:
        self.box_levels = [
            _BoxLevel(lv.upper.substitute(var, repl), lv.modulus, lv.residue)
            for lv in self.box_levels
        ]
        self.target = [t.substitute(var, repl) for t in self.target]

    def region_formula(self) -> Formula:
        """Constraints over the piece coordinates (free >= 0 and box levels)."""
        parts: list[Formula] = list(self.guards)
        for u in self.free:
            parts.append(norm_gt(LinearTerm.var(u) + 1))
        for v, lv in zip(self.box, self.box_levels):
            parts.append(norm_gt(LinearTerm.var(v) + 1))
            parts.append(_bound_atom_gt(lv.upper, RatTerm.var(v)))
            if lv.modulus > 1:
                parts.append(norm_divides(lv.modulus, LinearTerm.var(v) - lv.residue))
        return sorted_and([normalize(p) for p in parts])


def _interval_sup(piece: _Piece, rt: RatTerm) -> RatTerm:
    """A parameter-only form dominating rt over the piece (free coords must
    appear with nonpositive coefficients, box coords are bounded)."""
    out = RatTerm((), rt.const)
    sup: dict[str, RatTerm] = {}
    for v, lv in zip(piece.box, piece.box_levels):
        sup[v] = _subst_all(lv.upper, sup)
    for v, c in rt.coeffs:
        if v in piece.free:
            if c > 0:
                raise NormalFormError("unbounded supremum over a free coordinate")
            continue  # c <= 0 and coord >= 0: contributes at most 0
        if v in sup:
            if c > 0:
                out = out + sup[v] * c
            continue  # negative coefficient over [0, sup): at most 0
        out = out + RatTerm.var(v, c)  # parameter: keep symbolic
    return out


def _subst_all(rt: RatTerm, mapping: dict[str, RatTerm]) -> RatTerm:
    for v, repl in mapping.items():
        rt = rt.substitute(v, repl)
    return rt


# --- integerizing rational bounds ------------------------------------------


def _split_param_floor(rt: RatTerm, ctx: _Context):
    """Cases (guard_atoms, floor_term) for floor(rt).

    rt must have integer coordinate coefficients; the fractional part then
    depends only on parameters mod the common denominator, which is split
    into residue classes.
    """
    coord_part = []
    rest = RatTerm((), rt.const)
    for v, c in rt.coeffs:
        if c.denominator == 1 and v not in ctx.params:
            coord_part.append((v, c))
        else:
            rest = rest + RatTerm.var(v, c)
    for v, c in coord_part:
        if c.denominator != 1:
            raise NormalFormError(f"uncleared coordinate denominator in {rt}")
    t, q = rest.cleared()  # rest == t / q with t an integer LinearTerm
    base = RatTerm(tuple(coord_part), Fraction(0))
    if q == 1:
        yield [], base + RatTerm.from_linear(t)
        return
    for rho in range(q):
        guard = norm_divides(q, t - rho)
        if guard == FALSE:
            continue
        floor_term = base + RatTerm.from_linear(t - rho) * Fraction(1, q)
        yield [] if guard == TRUE else [guard], floor_term


def _integer_bounds(
    piece: _Piece,
    lower: RatTerm | None,
    upper: RatTerm | None,
    ctx: _Context,
):
    """Yield (piece', lo, hi): strict rational bounds turned into inclusive
    integer-affine bounds, splitting parameters when their coefficients have
    denominators.  Coordinate denominators must already be cleared."""
    lo_cases = [(None, None)]
    if lower is not None:
        lo_cases = [(g, t + 1) for g, t in _split_param_floor(lower, ctx)]
    hi_cases = [(None, None)]
    if upper is not None:
        # ceil(u) - 1 == -floor(-u) - 1
        hi_cases = [(g, -t - 1) for g, t in _split_param_floor(-upper, ctx)]
    for glo, lo in lo_cases:
        for ghi, hi in hi_cases:
            guards = (glo or []) + (ghi or [])
            if guards and not ctx.guard_true(land(guards)):
                continue
            p = piece.clone()
            p.guards.extend(guards)
            yield p, lo, hi


# --- coordinate reparameterizations -----------------------------------------


def _mod_split_free(piece: _Piece, u: str, q: int, ctx: _Context):
    """u = q*u' + j over j in 0..q-1; free coordinates stay free."""
    for j in range(q):
        p = piece.clone()
        nu = ctx.fresh("u")
        p.free = [nu if w == u else w for w in p.free]
        p.substitute(u, RatTerm.var(nu, q) + j)
        yield p, j


def _mod_split_box(piece: _Piece, v: str, q: int, ctx: _Context):
    """v = q*v' + j, adjusting the window and congruence of v."""
    idx = piece.box.index(v)
    lv = piece.box_levels[idx]
    g = gcd(q, lv.modulus)
    for j in range(q):
        if (lv.residue - j) % g != 0:
            continue
        # solve q*v' == residue - j (mod modulus)
        m2 = lv.modulus // g
        q2 = (q // g) % m2
        rhs = ((lv.residue - j) // g) % m2 if m2 > 1 else 0
        r2 = (rhs * pow(q2, -1, m2)) % m2 if m2 > 1 else 0
        p = piece.clone()
        nv = ctx.fresh("v")
        p.box = [nv if w == v else w for w in p.box]
        repl = RatTerm.var(nv, q) + j
        # window: 0 <= q v' + j < upper  <=>  0 <= v' < (upper - j)/q
        new_upper = (lv.upper - j) * Fraction(1, q)
        p.box_levels = list(p.box_levels)
        p.box_levels[idx] = _BoxLevel(new_upper, m2, r2)
        # substitute in later levels and target, but not in v's own level
        for i in range(len(p.box_levels)):
            if i != idx:
                bl = p.box_levels[i]
                p.box_levels[i] = _BoxLevel(
                    bl.upper.substitute(v, repl), bl.modulus, bl.residue
                )
        p.target = [t.substitute(v, repl) for t in p.target]
        yield p, j


def _clear_coord_denominators(
    piece: _Piece, bounds: list[RatTerm | None], ctx: _Context
):
    """Mod-split coordinates so every bound has integer coordinate coeffs.

    Yields (piece', bounds') pairs; parameters keep their denominators (they
    are handled later by guard splits).
    """
    need: dict[str, int] = {}
    for b in bounds:
        if b is None:
            continue
        for v, c in b.coeffs:
            if v in ctx.params:
                continue
            if c.denominator > 1:
                need[v] = lcm(need.get(v, 1), c.denominator)
    if not need:
        yield piece, bounds
        return
    v, q = sorted(need.items())[0]
    splits = (
        _mod_split_free(piece, v, q, ctx)
        if v in piece.free
        else _mod_split_box(piece, v, q, ctx)
    )
    for p, j in splits:
        repl = RatTerm.var(_new_name_of(p, piece, v), q) + j
        nb = [b.substitute(v, repl) if b is not None else None for b in bounds]
        yield from _clear_coord_denominators(p, nb, ctx)


def _new_name_of(new_piece: _Piece, old_piece: _Piece, v: str) -> str:
    """Name that replaced v in a clone produced by a mod split."""
    if v in old_piece.free:
        return new_piece.free[old_piece.free.index(v)]
    return new_piece.box[old_piece.box.index(v)]


# --- attaching one level -----------------------------------------------------


def _attach(piece: _Piece, level: CellLevel, base_vars: tuple[str, ...],
            target_row: RatTerm, ctx: _Context) -> list[_Piece]:
    """Attach a cell level for the next original coordinate to a piece.

    ``target_row`` is the expression for the new original coordinate in
    terms of a placeholder variable ``_z`` (the integer coordinate that the
    level constrains) and the piece coordinates.
    """
    lower = upper = None
    if level.lower is not None:
        lower = _transport(level.lower, base_vars, piece)
    if level.upper is not None:
        upper = _transport(level.upper, base_vars, piece)

    # congruence: z = M z' + k
    m, k = level.modulus, level.residue
    if m > 1:
        target_row = target_row.substitute("_z", RatTerm.var("_z", m) + k)
        if lower is not None:
            lower = (lower - k) * Fraction(1, m)
        if upper is not None:
            upper = (upper - k) * Fraction(1, m)

    out: list[_Piece] = []
    for p1, bs in _clear_coord_denominators(piece, [lower, upper], ctx):
        lo_rt, hi_rt = bs
        for p2, lo, hi in _integer_bounds(p1, lo_rt, hi_rt, ctx):
            out.extend(_attach_int(p2, lo, hi, target_row, ctx))
    return out


def _transport(rule: AffineRule, base_vars: tuple[str, ...], piece: _Piece) -> RatTerm:
    rt = rule.row_term(0, base_vars)
    for v, expr in zip(base_vars, piece.target):
        rt = rt.substitute(v, expr)
    return rt


def _finish_free(piece: _Piece, target_row: RatTerm, expr: RatTerm, ctx: _Context) -> _Piece:
    """Add a fresh free coordinate z' with original coordinate expr(z')."""
    p = piece.clone()
    nz = ctx.fresh("u")
    p.free.append(nz)
    p.target.append(target_row.substitute("_z", expr.substitute("_z", RatTerm.var(nz))))
    return p


def _finish_box(piece: _Piece, target_row: RatTerm, offset: RatTerm,
                width: RatTerm, ctx: _Context) -> _Piece:
    """Add a box coordinate z' in [0, width) with original = offset + z'."""
    p = piece.clone()
    nz = ctx.fresh("v")
    p.box.append(nz)
    p.box_levels.append(_BoxLevel(upper=width))
    z_expr = RatTerm.var(nz) + offset
    p.target.append(target_row.substitute("_z", z_expr))
    return p


def _attach_int(piece: _Piece, lo: RatTerm | None, hi: RatTerm | None,
                target_row: RatTerm, ctx: _Context) -> list[_Piece]:
    """Attach with inclusive integer-affine bounds lo <= z <= hi."""
    if lo is None and hi is None:
        nonneg = _finish_free(piece, target_row, RatTerm.var("_z"), ctx)
        negative = _finish_free(piece, target_row, RatTerm.var("_z", -1) - 1, ctx)
        return [nonneg, negative]
    if lo is not None and hi is None:
        return [_finish_free(piece, target_row, RatTerm.var("_z") + lo, ctx)]
    if lo is None and hi is not None:
        return [_finish_free(piece, target_row, RatTerm.var("_z", -1) + hi, ctx)]

    width = hi - lo + 1
    free_coeffs = [(u, width.coeff(u)) for u in piece.free if width.coeff(u) != 0]
    positives = [(u, c) for u, c in free_coeffs if c > 0]

    if not free_coeffs:
        return [_finish_box(piece, target_row, lo, width, ctx)]

    if not positives:
        # all free coefficients negative: those directions are bounded here;
        # move them into the box under loose parameter-only windows, then
        # absorb z as the exact final window
        p = piece.clone()
        w = width
        for u, c in free_coeffs:
            # z range nonempty forces width >= 1: c*u >= c*u, u < sup bound
            residual = w - RatTerm.var(u, c)
            loose = _interval_sup(p, residual * Fraction(1, -c))
            idx = p.free.index(u)
            p.free.pop(idx)
            p.box.append(u)
            p.box_levels.append(_BoxLevel(upper=loose + 1))
        return [_finish_box(p, target_row, lo, w, ctx)]

    u_star, c_star = positives[0]
    if c_star > 1:
        out: list[_Piece] = []
        # reduce the leading width coefficient to 1: split the window
        # coordinate mod c_star (the residue classes re-parameterize it)
        n = int(c_star)
        for i in range(n):
            # z = lo + d with d in [0, width); d = n*d' + i gives
            # d' in [0, (width - i)/n), a window whose u_star coefficient is 1
            shifted = target_row.substitute("_z", RatTerm.var("_z") + lo)
            new_target = shifted.substitute("_z", RatTerm.var("_z", n) + i)
            new_width = (width - i) * Fraction(1, n)
            for p2, bs in _clear_coord_denominators(piece, [new_width], ctx):
                nw = bs[0]
                for p3, lo2, hi2 in _integer_bounds(
                    p2, RatTerm.constant(-1), nw, ctx
                ):
                    out.extend(_attach_int(p3, lo2, hi2, new_target, ctx))
        return out

    # c_star == 1: split below/above the u_star-free threshold
    w_rest = width - RatTerm.var(u_star)
    shifted_target = target_row.substitute("_z", RatTerm.var("_z") + lo)

    out = []
    # low part: 0 <= z' < w_rest; u_star is unconstrained there
    low = piece.clone()
    low_inner = _drop_free(low, u_star)
    for p in _attach_int(low_inner, RatTerm.constant(0), w_rest - 1, shifted_target, ctx):
        p.free.append(_reuse(p, u_star, ctx))
        out.append(p)

    # band part: w_rest <= z' < w_rest + u_star, sheared onto s >= 0 via
    # u_star = (z' - w_rest) + s + 1
    band_inner = _drop_free(piece.clone(), u_star)
    branches = (
        (_bound_atom_ge(RatTerm.constant(0), w_rest), RatTerm.constant(0)),
        (_bound_atom_gt(w_rest, RatTerm.constant(0)), w_rest),
    )
    for cond, z_lower in branches:
        for sub, decode in _region_condition(band_inner.clone(), cond, ctx):
            # transport the pending data through the refinement's decoding
            w_rest_s = _subst_all(w_rest, decode)
            z_lower_s = _subst_all(z_lower, decode)
            shifted_s = _subst_all(shifted_target, decode)
            for p in _attach_int(sub, z_lower_s, None, shifted_s, ctx):
                # p's last free coordinate is z'; add the shear coordinate
                zname = p.free[-1]
                s = ctx.fresh("u")
                p.free.append(s)
                # u_star = z' - w_rest + s + 1, where z' = zname + z_lower
                u_val = (
                    RatTerm.var(zname) + z_lower_s - w_rest_s + RatTerm.var(s) + 1
                )
                p.target = [t.substitute(u_star, u_val) for t in p.target]
                out.append(p)
    return out


def _drop_free(piece: _Piece, u: str) -> _Piece:
    p = piece.clone()
    p.free.remove(u)
    return p


def _reuse(piece: _Piece, u: str, ctx: _Context) -> str:
    """Re-attach a dropped free coordinate; names are globally fresh, so a
    collision would indicate a bookkeeping bug."""
    assert u not in piece.free and u not in piece.box, u
    return u


def _region_condition(
    piece: _Piece, cond: Formula, ctx: _Context
) -> list[tuple["_Piece", dict[str, RatTerm]]]:
    """Refine the piece by a condition over its coordinates.

    The condition formula is conjoined to the reified piece region and the
    result re-decomposed from scratch (strictly fewer coordinates than the
    enclosing attachment, so the recursion terminates).  Each refined piece
    comes with the decoding of the old piece coordinates in terms of its
    own, so pending data can be transported.
    """
    cond = normalize(cond)
    if cond == FALSE:
        return []
    if cond == TRUE and not piece.box:
        return [(piece, {c: RatTerm.var(c) for c in piece.coords()})]
    region = land([piece.region_formula(), cond])
    sub = _pieces_for(region, tuple(piece.coords()), ctx)
    out = []
    for p in sub:
        decode = dict(zip(piece.coords(), p.target))
        comp = [_subst_all(t, decode) for t in piece.target]
        q = _Piece(
            free=list(p.free),
            box=list(p.box),
            box_levels=list(p.box_levels),
            guards=list(p.guards),
            target=comp,
        )
        out.append((q, decode))
    return out


# --- building pieces from cells ---------------------------------------------


def _squeeze(piece: _Piece) -> _Piece | None:
    """Drop box coordinates pinned to zero by a width-one window; returns
    None when a window is empty."""
    changed = True
    p = piece
    while changed:
        changed = False
        for idx, lv in enumerate(p.box_levels):
            if lv.upper.is_constant and lv.upper.const <= 0:
                return None
            if lv.upper.is_constant and lv.upper.const <= 1:
                if lv.residue != 0:
                    return None
                v = p.box[idx]
                q = p.clone()
                q.box.pop(idx)
                q.box_levels.pop(idx)
                q.substitute(v, RatTerm.constant(0))
                p = q
                changed = True
                break
    return p


def _pieces_of_cell(cell: Cell, ctx: _Context) -> list[_Piece]:
    if cell.guard != TRUE and not ctx.guard_true(cell.guard):
        return []
    guards = [cell.guard] if cell.guard != TRUE else []
    pieces: list[_Piece] = [_Piece(guards=list(guards))]
    for i in range(cell.arity):
        level = cell.levels[i]
        base_vars = cell.variables[:i]
        nxt: list[_Piece] = []
        for p in pieces:
            nxt.extend(_attach(p, level, base_vars, RatTerm.var("_z"), ctx))
        pieces = nxt
    # squeeze pinned coordinates, then drop empty pieces
    alive = []
    for p in pieces:
        sq = _squeeze(p)
        if sq is None:
            continue
        f = sq.region_formula()
        sat: Formula = f
        for v in sorted(free_vars(f)):
            sat = Exists(v, sat)
        keep = ctx.dec(sat) if ctx.val is None else _sat_at(f, ctx)
        if keep:
            alive.append(sq)
    return alive


def _sat_at(f: Formula, ctx: _Context) -> bool:
    body = f
    for v in sorted(free_vars(f) - set(ctx.params)):
        body = Exists(v, body)
    qf = normalize(eliminate(body))
    return evaluate(qf, ctx.val)


def _pieces_for(region: Formula, point_vars: tuple[str, ...], ctx: _Context) -> list[_Piece]:
    out: list[_Piece] = []
    for dcell in decompose(region, point_vars, certify=False):
        out.extend(_pieces_of_cell(dcell.cell, ctx))
    return out


# --- assembly ---------------------------------------------------------------


@dataclass(frozen=True)
class PiecewiseAffineMap:
    """Finite list of (cell, affine rule) pairs: a definable map given by an
    affine rule on each cell of a partition of the source."""

    pieces: tuple[tuple[Cell, AffineRule], ...]
    source_vars: tuple[str, ...]
    target_vars: tuple[str, ...]
    source: Formula
    target: Formula


@dataclass(frozen=True)
class NormalForm:
    rank: int  # r: number of unbounded coordinates
    box_dim: int  # s: number of bounded coordinates
    bounds: tuple[RatTerm, ...]  # strict upper bounds of the s box coordinates
    domain: Formula  # X' over the map's source variables
    bijection: PiecewiseAffineMap  # X' -> X

    @property
    def r(self) -> int:
        return self.rank

    @property
    def s(self) -> int:
        return self.box_dim


def _piece_domain_cell(
    piece: _Piece,
    slot: int,
    n_slots: int,
    r: int,
    s: int,
    u_names: tuple[str, ...],
    v_names: tuple[str, ...],
) -> tuple[Cell, AffineRule, dict[str, RatTerm]]:
    """Domain cell of one piece inside X' and the decoding of piece coords."""
    levels: list[CellLevel] = []
    decode: dict[str, RatTerm] = {}
    all_names = u_names + v_names
    minus_one = AffineRule.from_terms([RatTerm.constant(-1)], ())

    l = piece.rank
    for i, u in enumerate(u_names):
        prev = all_names[:i]

        def rule(t: RatTerm) -> AffineRule:
            return AffineRule.from_terms([t], prev)

        if i == 0:
            if l == 0:
                # pinned slot: u0 = slot
                levels.append(CellLevel(
                    lower=rule(RatTerm.constant(slot - 1)),
                    upper=rule(RatTerm.constant(slot + 1)),
                ))
            else:
                levels.append(CellLevel(
                    lower=rule(RatTerm.constant(-1)),
                    modulus=n_slots,
                    residue=slot % n_slots,
                ))
                decode[piece.free[0]] = (RatTerm.var(u) - slot) * Fraction(1, n_slots)
        elif i < l:
            levels.append(CellLevel(lower=rule(RatTerm.constant(-1))))
            decode[piece.free[i]] = RatTerm.var(u)
        else:
            # pinned zero
            levels.append(CellLevel(
                lower=rule(RatTerm.constant(-1)),
                upper=rule(RatTerm.constant(1)),
            ))

    for j, v in enumerate(v_names):
        prev = all_names[: r + j]

        def rule_v(t: RatTerm) -> AffineRule:
            return AffineRule.from_terms([t], prev)

        if j < len(piece.box):
            lv = piece.box_levels[j]
            up = _subst_all(lv.upper, decode)
            levels.append(CellLevel(
                lower=rule_v(RatTerm.constant(-1)),
                upper=rule_v(up),
                modulus=lv.modulus,
                residue=lv.residue,
            ))
            decode[piece.box[j]] = RatTerm.var(v)
        else:
            levels.append(CellLevel(
                lower=rule_v(RatTerm.constant(-1)),
                upper=rule_v(RatTerm.constant(1)),
            ))

    guard = sorted_and([normalize(g) for g in piece.guards])
    cell = Cell(variables=all_names, levels=tuple(levels), guard=guard)
    rule_terms = [_subst_all(t, decode) for t in piece.target]
    rule = AffineRule.from_terms(rule_terms, all_names)
    return cell, rule, decode


def normal_form(
    region: Formula,
    point_vars: tuple[str, ...],
    param_values: dict | None = None,
    certify: bool = False,
) -> NormalForm:
    """Normal form of the set of ``point_vars`` tuples satisfying ``region``.

    Remaining free variables are parameters; when the region is parametric a
    valuation in Z or M_s picks the branch of the construction.
    """
    params = tuple(sorted(free_vars(region) - set(point_vars)))
    if params and param_values is None:
        # allow purely symbolic runs; comparisons that need a valuation raise
        pass
    ctx = _Context(dec=_Decider(), params=params, val=param_values)
    pieces = _pieces_for(normalize(eliminate(region)), tuple(point_vars), ctx)

    # deterministic order: rank descending, then canonical region text
    pieces.sort(key=lambda p: (-p.rank, show(p.region_formula())))

    r = max((p.rank for p in pieces), default=0)
    n_slots = len(pieces)
    if n_slots > 1 and r == 0:
        # no free coordinate can carry the slot congruence: pin a fresh box
        # coordinate to the slot index instead
        for slot, p in enumerate(pieces):
            p.box.insert(0, ctx.fresh("v"))
            p.box_levels.insert(
                0,
                _BoxLevel(
                    upper=RatTerm.constant(n_slots), modulus=n_slots, residue=slot
                ),
            )
    s = max((len(p.box) for p in pieces), default=0)
    u_names = tuple(f"u{i + 1}" for i in range(r))
    v_names = tuple(f"v{j + 1}" for j in range(s))

    map_pieces: list[tuple[Cell, AffineRule]] = []
    domains: list[Formula] = []
    raw_bounds: list[RatTerm | None] = [None] * s
    for slot, p in enumerate(pieces):
        cell, rule, decode = _piece_domain_cell(p, slot, max(n_slots, 1), r, s, u_names, v_names)
        map_pieces.append((cell, rule))
        domains.append(cell_formula(cell))
        for j in range(len(p.box)):
            up = _subst_all(p.box_levels[j].upper, decode)
            prev = [b if b is not None else RatTerm.constant(1) for b in raw_bounds[:j]]
            cand = _interval_sup_names(up, v_names[:j], prev)
            raw_bounds[j] = cand if raw_bounds[j] is None else _rat_max(raw_bounds[j], cand)
    bounds: list[RatTerm] = [b if b is not None else RatTerm.constant(1) for b in raw_bounds]

    domain = sorted_or(domains)
    target = normalize(eliminate(region))
    pam = PiecewiseAffineMap(
        pieces=tuple(map_pieces),
        source_vars=u_names + v_names,
        target_vars=tuple(point_vars),
        source=domain,
        target=target,
    )
    nf = NormalForm(rank=r, box_dim=s, bounds=tuple(bounds), domain=domain, bijection=pam)
    if certify:
        errors = verify_map(pam, param_values)
        if errors:
            raise NormalFormError("; ".join(errors))
    return nf


def _interval_sup_names(rt: RatTerm, names: tuple[str, ...], sups: list[RatTerm]) -> RatTerm:
    out = RatTerm((), rt.const)
    by_name = dict(zip(names, sups))
    for v, c in rt.coeffs:
        if v in by_name:
            if c > 0:
                out = out + by_name[v] * c
        else:
            out = out + RatTerm.var(v, c)
    return out


def _rat_max(a: RatTerm, b: RatTerm) -> RatTerm:
    if a.is_constant and b.is_constant:
        return a if a.const >= b.const else b
    if a == b:
        return a
    if a.is_constant and a.const <= 0:
        return b
    if b.is_constant and b.const <= 0:
        return a
    # sum dominates the max of nonnegative bound terms
    return a + b


def ubd(region: Formula, point_vars: tuple[str, ...], param_values: dict | None = None) -> int:
    """Degree of unboundedness: the greatest r with Z^r definably injecting
    into the set; computed as the rank of the constructed normal form."""
    return normal_form(region, point_vars, param_values).rank


def is_bounded(region: Formula, point_vars: tuple[str, ...]):
    """True/False for parameter-free sets; otherwise the parameter condition
    formula (eliminated) describing where the family is bounded."""
    params = sorted(free_vars(region) - set(point_vars))
    bound = "_bound"
    body: Formula = Not(region)
    comps = [
        land([
            norm_gt(LinearTerm.var(bound) - LinearTerm.var(v)),
            norm_gt(LinearTerm.var(bound) + LinearTerm.var(v)),
        ])
        for v in point_vars
    ]
    claim: Formula = lor([Not(region), land(comps)])
    for v in point_vars:
        claim = Forall(v, claim)
    sentence: Formula = Exists(bound, claim)
    if not params:
        return decide(sentence)
    return normalize(eliminate(sentence))


@dataclass
class LawReport:
    ubd_x: int
    ubd_y: int
    ubd_union: int | None
    ubd_product: int
    union_law: bool | None
    product_law: bool

    @property
    def passed(self) -> bool:
        return self.product_law and (self.union_law is not False)


def product_union_laws(
    x_region: Formula,
    x_vars: tuple[str, ...],
    y_region: Formula,
    y_vars: tuple[str, ...],
) -> LawReport:
    """Check ubd(X u Y) = max and ubd(X x Y) = sum on parameter-free sets."""
    ux = ubd(x_region, x_vars)
    uy = ubd(y_region, y_vars)

    from .syntax import rename_var

    fresh_y = tuple(f"_y{i}" for i in range(len(y_vars)))
    y2 = y_region
    for old, new in zip(y_vars, fresh_y):
        y2 = rename_var(y2, old, new)
    prod = land([x_region, y2])
    up = ubd(prod, tuple(x_vars) + fresh_y)

    uu = None
    union_ok = None
    if len(x_vars) == len(y_vars):
        yx = y_region
        for old, new in zip(y_vars, x_vars):
            yx = rename_var(yx, old, new)
        uu = ubd(lor([x_region, yx]), x_vars)
        union_ok = uu == max(ux, uy)
    return LawReport(
        ubd_x=ux,
        ubd_y=uy,
        ubd_union=uu,
        ubd_product=up,
        union_law=union_ok,
        product_law=up == ux + uy,
    )


# --- verification ------------------------------------------------------------


def verify_map(pam: PiecewiseAffineMap, param_values: dict | None = None) -> list[str]:
    """decide-certified soundness of a piecewise-affine bijection.

    Returns a list of failed certificate descriptions (empty = verified).
    """
    params = tuple(
        sorted(
            (free_vars(pam.source) | free_vars(pam.target))
            - set(pam.source_vars)
            - set(pam.target_vars)
        )
    )
    ctx = _Context(dec=_Decider(), params=params, val=param_values)
    errors: list[str] = []

    doms = [cell_formula(c) for c, _ in pam.pieces]
    n = len(pam.pieces)
    for i in range(n):
        for j in range(i + 1, n):
            if not ctx.holds(Not(land([doms[i], doms[j]]))):
                errors.append(f"domains {i} and {j} overlap")
    if not ctx.holds(lor([Not(pam.source), sorted_or(doms)]) if doms else Not(pam.source)):
        errors.append("domains do not cover the source")
    for i, d in enumerate(doms):
        if not ctx.holds(lor([Not(d), pam.source])):
            errors.append(f"domain {i} leaves the source")

    # graph formulas: target vars as the image of source vars
    graphs = []
    for i, (c, rule) in enumerate(pam.pieces):
        eqs = []
        for row, tv in enumerate(pam.target_vars):
            t, _ = (RatTerm.var(tv) - rule.row_term(row, pam.source_vars)).cleared()
            eqs.append(norm_eq(t))
        graphs.append(land(eqs))
        if not ctx.holds(lor([Not(land([doms[i], graphs[i]])), pam.target])):
            errors.append(f"piece {i} maps outside the target")
        # integrality of the rule on the domain
        for row in range(rule.rows):
            rt = rule.row_term(row, pam.source_vars)
            t, d = rt.cleared()
            if d > 1 and not ctx.holds(lor([Not(doms[i]), norm_divides(d, t)])):
                errors.append(f"piece {i} row {row} is non-integral on its domain")

    # injectivity across (and within) pieces
    primed = {v: f"{v}__p" for v in pam.source_vars}
    from .syntax import rename_var

    for i in range(n):
        for j in range(i, n):
            di = doms[i]
            gi = graphs[i]
            dj = doms[j]
            gj = graphs[j]
            for v, vp in primed.items():
                dj = rename_var(dj, v, vp)
                gj = rename_var(gj, v, vp)
            same = land([
                norm_eq(LinearTerm.var(v) - LinearTerm.var(vp))
                for v, vp in primed.items()
            ])
            claim = lor([Not(land([di, gi, dj, gj])), same])
            if not ctx.holds(claim):
                errors.append(f"pieces {i} and {j} collide (injectivity)")

    # surjectivity
    cover = []
    for i in range(n):
        piece = land([doms[i], graphs[i]])
        for v in pam.source_vars:
            piece = Exists(v, piece)
        cover.append(piece)
    if not ctx.holds(lor([Not(pam.target), sorted_or(cover)]) if cover else Not(pam.target)):
        errors.append("map is not surjective onto the target")
    return errors


# --- JSON --------------------------------------------------------------------


def normal_form_json(nf: NormalForm) -> dict:
    from .cells import cell_json, rule_json

    return {
        "r": nf.rank,
        "s": nf.box_dim,
        "bounds": [str(b) for b in nf.bounds],
        "source_vars": list(nf.bijection.source_vars),
        "target_vars": list(nf.bijection.target_vars),
        "domain": show(nf.domain),
        "pieces": [
            {"cell": cell_json(c), "rule": rule_json(r)} for c, r in nf.bijection.pieces
        ],
    }
