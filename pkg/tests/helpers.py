"""Shared test machinery: vectorized grid evaluation, the verified
bounded-search oracle for quantified formulas, and formula samplers."""

from __future__ import annotations

import random

import numpy as np

from functools import lru_cache

from presburger.qe import eliminate, eliminate_exists, witness_radius
from presburger.rewrite import normalize, sorted_and, sorted_or
from presburger.syntax import (
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
)
from presburger.terms import LinearTerm

INT_CAP = 2**62


class OverBudget(Exception):
    pass


class Grid:
    """Named integer axes; formulas evaluate to broadcast boolean arrays."""

    def __init__(self, axes: dict[str, np.ndarray]):
        self.names = list(axes)
        self.axes = axes
        self.shape = tuple(len(axes[v]) for v in self.names)
        self._ranges = {
            v: int(max(abs(int(a[0])), abs(int(a[-1])))) if len(a) else 0
            for v, a in axes.items()
        }

    @staticmethod
    def from_box(box: dict[str, tuple[int, int]]) -> "Grid":
        return Grid({v: np.arange(lo, hi + 1, dtype=np.int64) for v, (lo, hi) in box.items()})

    def with_axis(self, var: str, radius: int) -> "Grid":
        axes = dict(self.axes)
        axes[var] = np.arange(-radius, radius + 1, dtype=np.int64)
        return Grid(axes)

    @property
    def size(self) -> int:
        n = 1
        for d in self.shape:
            n *= d
        return n

    def ranges(self) -> dict[str, int]:
        return self._ranges

    def axis_view(self, var: str) -> np.ndarray:
        i = self.names.index(var)
        shape = [1] * len(self.shape)
        shape[i] = self.shape[i]
        return self.axes[var].reshape(shape)

    def term(self, t: LinearTerm) -> np.ndarray:
        bound = abs(t.const)
        for v, c in t.coeffs:
            bound += abs(c) * self._ranges[v]
        if bound >= INT_CAP:
            raise OverBudget(f"term magnitude {bound} risks int64 overflow")
        acc = np.int64(t.const)
        for v, c in t.coeffs:
            acc = acc + np.int64(c) * self.axis_view(v)
        return acc

    def eval(self, f: Formula) -> np.ndarray:
        out = self._eval(f)
        return np.broadcast_to(out, self.shape)

    def _eval(self, f: Formula) -> np.ndarray:
        if f == TRUE:
            return np.ones((), dtype=bool)
        if f == FALSE:
            return np.zeros((), dtype=bool)
        if isinstance(f, GtZero):
            return self.term(f.term) > 0
        if isinstance(f, EqZero):
            return self.term(f.term) == 0
        if isinstance(f, Divides):
            return self.term(f.term) % f.modulus == 0
        if isinstance(f, Not):
            return ~self._eval(f.body)
        if isinstance(f, And):
            acc = np.ones((), dtype=bool)
            for a in f.args:
                acc = acc & self._eval(a)
            return acc
        if isinstance(f, Or):
            acc = np.zeros((), dtype=bool)
            for a in f.args:
                acc = acc | self._eval(a)
            return acc
        raise ValueError(f"grid eval needs a quantifier-free formula: {f!r}")


class StepMismatch(AssertionError):
    pass


def count_atoms(f: Formula) -> int:
    if is_atom(f):
        return 1
    if isinstance(f, (Not, Exists, Forall)):
        return count_atoms(f.body)
    if isinstance(f, (And, Or)):
        return sum(count_atoms(a) for a in f.args)
    return 0


def _cooper_cost(var: str, body: Formula) -> int:
    """Upper estimate of the piece work for one elimination step."""
    from math import lcm

    atoms: list = []

    def walk(g):
        if is_atom(g):
            if g.term.coeff(var) != 0:
                atoms.append(g)
        elif isinstance(g, Not):
            walk(g.body)
        elif isinstance(g, (And, Or)):
            for a in g.args:
                walk(a)

    walk(body)
    if not atoms:
        return count_atoms(body)
    delta = 1
    for a in atoms:
        delta = lcm(delta, abs(a.term.coeff(var)))
    period = delta
    lowers = 0
    for a in atoms:
        c = a.term.coeff(var)
        if isinstance(a, Divides):
            period = lcm(period, a.modulus * (delta // abs(c)))
        elif isinstance(a, GtZero) and c > 0:
            lowers += 1
        elif isinstance(a, EqZero):
            lowers += 1
    return period * (lowers + 1) * count_atoms(body)


class GuardedEliminator:
    """Mirror of qe.eliminate with deterministic work caps.

    Identical recursion to the engine, but raises OverBudget before a step
    whose estimated piece count, or whose output size, exceeds the caps.
    Used by samplers to skip pathological instances without running out of
    memory; accepted formulas are re-run through qe.eliminate unguarded.
    """

    def __init__(self, cap_step: int = 400_000, cap_atoms: int = 4000):
        self.cap_step = cap_step
        self.cap_atoms = cap_atoms
        self._memo: dict[Formula, Formula] = {}

    def _step(self, var: str, body: Formula) -> Formula:
        cost = _cooper_cost(var, body)
        if cost > self.cap_step:
            raise OverBudget(f"estimated step cost {cost}")
        out = eliminate_exists(var, body)
        n = count_atoms(out)
        if n > self.cap_atoms:
            raise OverBudget(f"eliminated form has {n} atoms")
        return out

    def __call__(self, f: Formula) -> Formula:
        hit = self._memo.get(f)
        if hit is not None:
            return hit
        if is_atom(f) or f in (TRUE, FALSE):
            out = normalize(f)
        elif isinstance(f, Not):
            out = normalize(Not(self(f.body)))
        elif isinstance(f, And):
            out = sorted_and([self(a) for a in f.args])
        elif isinstance(f, Or):
            out = sorted_or([self(a) for a in f.args])
        elif isinstance(f, Exists):
            out = self._step(f.var, self(f.body))
        elif isinstance(f, Forall):
            inner = normalize(Not(self(f.body)))
            out = normalize(Not(self._step(f.var, inner)))
        else:
            raise TypeError(f"not a formula: {f!r}")
        self._memo[f] = out
        return out


def verified_truth(
    f: Formula,
    grid: Grid,
    elim: GuardedEliminator,
    *,
    cap_radius: int = 20000,
    cap_cells: int = 4_000_000,
) -> np.ndarray:
    """Ground truth of f over the grid via bounded witness search.

    Every quantifier is reduced by searching the eliminated body over a
    Cooper-derived radius, and each single-quantifier elimination step of
    the engine is checked against that search on its full sub-grid.  Raises
    StepMismatch on disagreement and OverBudget when the plan exceeds caps.
    """
    if is_atom(f) or f in (TRUE, FALSE):
        return grid.eval(f)
    kw = dict(cap_radius=cap_radius, cap_cells=cap_cells)
    if isinstance(f, Not):
        return ~verified_truth(f.body, grid, elim, **kw)
    if isinstance(f, And):
        acc = np.ones(grid.shape, dtype=bool)
        for a in f.args:
            acc = acc & verified_truth(a, grid, elim, **kw)
        return acc
    if isinstance(f, Or):
        acc = np.zeros(grid.shape, dtype=bool)
        for a in f.args:
            acc = acc | verified_truth(a, grid, elim, **kw)
        return acc
    if isinstance(f, (Exists, Forall)):
        body_qf = elim(f.body)
        needed = free_vars(body_qf) | free_vars(f.body)
        ranges = {v: grid.ranges()[v] for v in needed if v != f.var}
        if isinstance(f, Exists):
            radius = witness_radius(body_qf, f.var, ranges)
        else:
            radius = witness_radius(normalize(Not(body_qf)), f.var, ranges)
        if radius > cap_radius:
            raise OverBudget(f"radius {radius} over cap")
        sub = grid.with_axis(f.var, radius)
        if sub.size > cap_cells:
            raise OverBudget(f"grid {sub.size} cells over cap")
        body_truth = verified_truth(f.body, sub, elim, **kw)
        if not np.array_equal(body_truth, sub.eval(body_qf)):
            raise StepMismatch(f"inner elimination disagrees under {f.var}")
        axis = sub.names.index(f.var)
        if isinstance(f, Exists):
            reduced = body_truth.any(axis=axis)
            node_out = elim._step(f.var, body_qf)
        else:
            reduced = body_truth.all(axis=axis)
            node_out = normalize(Not(elim._step(f.var, normalize(Not(body_qf)))))
        # sub-grid drops f.var's axis in the same position it was added (last)
        reduced = np.broadcast_to(reduced, grid.shape)
        if not np.array_equal(reduced, grid.eval(node_out)):
            raise StepMismatch(f"step for {type(f).__name__} {f.var} disagrees")
        return reduced
    raise TypeError(f"not a formula: {f!r}")


def check_eliminate_on_box(
    f: Formula,
    box: dict[str, tuple[int, int]],
    *,
    run_engine: bool = True,
    **caps,
) -> None:
    """Assert eliminate(f) agrees with f at every point of the box.

    The truth side is established by guarded bounded search; the engine's
    full output is then compared on the same grid.  Raises OverBudget if
    the instance exceeds the oracle's deterministic work caps.
    """
    fv = sorted(free_vars(f))
    grid = Grid.from_box({v: box[v] for v in fv})
    elim = GuardedEliminator()
    truth = verified_truth(f, grid, elim, **caps)
    out = eliminate(f) if run_engine else elim(f)
    assert out == elim(f), "guarded mirror diverged from the engine"
    assert not (free_vars(out) - set(fv)), "eliminate introduced variables"
    got = grid.eval(out)
    if not np.array_equal(truth, got):
        bad = np.argwhere(truth != got)
        raise StepMismatch(f"{len(bad)} box points disagree (first {bad[0] if len(bad) else None})")


# --- samplers -------------------------------------------------------------


def sample_term(rng: random.Random, scope: list[str], must_use: str | None = None,
                coeff_bound: int = 4, const_bound: int = 4) -> LinearTerm:
    n = rng.randint(1, min(3, len(scope)))
    chosen = rng.sample(scope, n)
    if must_use and must_use not in chosen:
        chosen[rng.randrange(len(chosen))] = must_use
    coeffs = {}
    for v in chosen:
        c = rng.randint(1, coeff_bound) * rng.choice((1, -1))
        coeffs[v] = c
    return LinearTerm.of(coeffs, rng.randint(-const_bound, const_bound))


def sample_atom(rng: random.Random, scope: list[str], must_use: str | None = None,
                moduli=(2, 3, 4)) -> Formula:
    t = sample_term(rng, scope, must_use)
    kind = rng.randrange(4)
    if kind == 0:
        return GtZero(t)
    if kind == 1:
        return EqZero(t)
    if kind == 2:
        return Not(GtZero(t))
    return Divides(rng.choice(moduli), t)


def sample_matrix(rng: random.Random, scope: list[str], n_atoms: int,
                  must_use: list[str] = ()) -> Formula:
    atoms = []
    musts = list(must_use)
    for i in range(n_atoms):
        mu = musts.pop() if musts else None
        atoms.append(sample_atom(rng, scope, mu))
    while musts:
        atoms.append(sample_atom(rng, scope, musts.pop()))
    rng.shuffle(atoms)
    out = atoms[0]
    for a in atoms[1:]:
        op = rng.random()
        if op < 0.45:
            out = land([out, a])
        elif op < 0.9:
            out = lor([out, a])
        else:
            out = lor([Not(out), a])
    return out


def sample_quantified(
    rng: random.Random,
    n_free: int,
    n_quant: int,
    n_atoms: int | None = None,
) -> Formula:
    """Random formula with the given free/quantified variable counts."""
    if n_free == 0 and n_quant == 0:
        n_free = 1
    free = [f"x{i}" for i in range(1, n_free + 1)]
    qvars = [f"q{i}" for i in range(1, n_quant + 1)]
    if n_atoms is None:
        n_atoms = rng.randint(max(2, n_quant), 4 + n_quant)
    body = sample_matrix(rng, free + qvars, n_atoms, must_use=list(qvars))
    for i, v in enumerate(qvars):
        ctor = Exists if rng.random() < 0.7 else Forall
        body = ctor(v, body)
        # occasionally sandwich a connective between quantifiers
        if i + 1 < n_quant and free and rng.random() < 0.3:
            side = sample_matrix(rng, free, rng.randint(1, 2))
            body = land([body, side]) if rng.random() < 0.5 else lor([body, side])
    return body
