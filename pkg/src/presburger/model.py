"""Ground-truth semantics.

Two models are supported: the standard integers, and the computable
nonstandard Z-group M_s = Q^s x Z ordered lexicographically.  M_s is a
discretely ordered abelian group with exact division-with-remainder for
every positive integer, so every Presburger formula can be evaluated in it
exactly.  ``enumerate_box`` is the brute-force oracle the differential
tests compare against.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction

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
)


class EvalError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class NonstdInt:
    """Element of M_s: s exact rationals (most significant first) + an int.

    Order is lexicographic; dataclass field order makes the derived
    comparisons implement it directly.
    """

    levels: tuple[Fraction, ...]
    finite: int

    @property
    def s(self) -> int:
        return len(self.levels)

    @staticmethod
    def of(levels, finite: int) -> "NonstdInt":
        return NonstdInt(tuple(Fraction(q) for q in levels), finite)

    @staticmethod
    def zero(s: int) -> "NonstdInt":
        return NonstdInt((Fraction(0),) * s, 0)

    @staticmethod
    def from_int(n: int, s: int) -> "NonstdInt":
        return NonstdInt((Fraction(0),) * s, n)

    @staticmethod
    def unit(s: int, level: int) -> "NonstdInt":
        """The canonical infinite element at archimedean level 1..s."""
        if not 1 <= level <= s:
            raise ValueError(f"level must be in 1..{s}")
        qs = [Fraction(0)] * s
        qs[s - level] = Fraction(1)
        return NonstdInt(tuple(qs), 0)

    def _check(self, other: "NonstdInt") -> None:
        if self.s != other.s:
            raise EvalError(f"mixed models M_{self.s} and M_{other.s}")

    def __add__(self, other):
        if isinstance(other, int):
            return NonstdInt(self.levels, self.finite + other)
        self._check(other)
        return NonstdInt(
            tuple(a + b for a, b in zip(self.levels, other.levels)),
            self.finite + other.finite,
        )

    __radd__ = __add__

    def __neg__(self):
        return NonstdInt(tuple(-a for a in self.levels), -self.finite)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        return NonstdInt(tuple(a * k for a in self.levels), self.finite * k)

    __rmul__ = __mul__

    def scale(self, q: Fraction) -> "NonstdInt":
        """Exact multiplication by a rational; the finite part must stay integral."""
        q = Fraction(q)
        fin = q * self.finite
        if fin.denominator != 1:
            raise EvalError(f"{q} * {self} is not a model element")
        return NonstdInt(tuple(a * q for a in self.levels), int(fin))

    @property
    def is_zero(self) -> bool:
        return self.finite == 0 and all(a == 0 for a in self.levels)

    def sign(self) -> int:
        for a in self.levels:
            if a != 0:
                return 1 if a > 0 else -1
        return 0 if self.finite == 0 else (1 if self.finite > 0 else -1)

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def archimedean_level(self) -> int:
        """0 for finite elements, i when comparable to unit(s, i)."""
        for pos, a in enumerate(self.levels):
            if a != 0:
                return self.s - pos
        return 0

    def divmod_int(self, n: int) -> tuple["NonstdInt", int]:
        """Unique (q, r) with self = n*q + r and 0 <= r < n."""
        if n < 1:
            raise ValueError("divisor must be >= 1")
        qs = tuple(a / n for a in self.levels)
        q, r = divmod(self.finite, n)
        return NonstdInt(qs, q), r

    def divisible_by(self, n: int) -> bool:
        return self.divmod_int(n)[1] == 0

    def __str__(self) -> str:
        qs = ",".join(str(a) for a in self.levels)
        return f"{qs};{self.finite}" if self.levels else str(self.finite)

    @staticmethod
    def parse(text: str, s: int | None = None) -> "NonstdInt":
        """Parse 'q1,...,qs;m' (or a bare integer, given s)."""
        text = text.strip()
        if ";" not in text:
            if s is None:
                raise ValueError(f"bare integer {text!r} needs an explicit level count")
            return NonstdInt.from_int(int(text), s)
        qs_text, fin = text.rsplit(";", 1)
        levels = tuple(Fraction(p) for p in qs_text.split(",")) if qs_text else ()
        if s is not None and len(levels) != s:
            raise ValueError(f"expected {s} infinite parts, got {len(levels)}")
        return NonstdInt(levels, int(fin))


def _divisible(value, n: int) -> bool:
    if isinstance(value, int):
        return value % n == 0
    return value.divisible_by(n)


def _positive(value) -> bool:
    if isinstance(value, int):
        return value > 0
    return value.sign() > 0


def _is_zero(value) -> bool:
    if isinstance(value, int):
        return value == 0
    return value.is_zero


def evaluate(f: Formula, assignment: dict) -> bool:
    """Truth of a quantifier-free formula under a total assignment.

    Values may be ints or NonstdInt drawn from one model; divisibility in
    M_s is decided by exact division with remainder.
    """
    if f == TRUE:
        return True
    if f == FALSE:
        return False
    if isinstance(f, GtZero):
        return _positive(_value(f.term, assignment))
    if isinstance(f, EqZero):
        return _is_zero(_value(f.term, assignment))
    if isinstance(f, Divides):
        return _divisible(_value(f.term, assignment), f.modulus)
    if isinstance(f, Not):
        return not evaluate(f.body, assignment)
    if isinstance(f, And):
        return all(evaluate(a, assignment) for a in f.args)
    if isinstance(f, Or):
        return any(evaluate(a, assignment) for a in f.args)
    if isinstance(f, (Exists, Forall)):
        raise EvalError("evaluate requires a quantifier-free formula")
    raise TypeError(f"not a formula: {f!r}")


def _value(term, assignment):
    try:
        return term.evaluate(assignment)
    except KeyError as e:
        raise EvalError(f"assignment missing variable {e.args[0]!r}") from None


DEFAULT_BOX_CAP = 10**7


def enumerate_box(
    f: Formula,
    box: dict[str, tuple[int, int]],
    cap: int = DEFAULT_BOX_CAP,
) -> list[tuple[int, ...]]:
    """All integer tuples in the box satisfying f, in lexicographic order.

    Tuple coordinates follow sorted variable-name order.  Boxes larger than
    ``cap`` points are rejected.
    """
    missing = free_vars(f) - set(box)
    if missing:
        raise EvalError(f"box does not cover variables {sorted(missing)}")
    names = sorted(box)
    volume = 1
    for lo, hi in box.values():
        volume *= max(0, hi - lo + 1)
    if volume > cap:
        raise EvalError(f"box volume {volume} exceeds cap {cap}")
    ranges = [range(box[v][0], box[v][1] + 1) for v in names]
    out = []
    for point in itertools.product(*ranges):
        if evaluate(f, dict(zip(names, point))):
            out.append(point)
    return out


def eval_bounded(f: Formula, assignment: dict, radii: dict[str, int]) -> bool:
    """Evaluate with quantifiers restricted to |v| <= radii[v].

    This is the reference bounded-search semantics used by differential
    tests; it is exact whenever the radii dominate the true witness bounds.
    """
    if isinstance(f, Exists):
        r = radii[f.var]
        return any(
            eval_bounded(f.body, {**assignment, f.var: v}, radii)
            for v in range(-r, r + 1)
        )
    if isinstance(f, Forall):
        r = radii[f.var]
        return all(
            eval_bounded(f.body, {**assignment, f.var: v}, radii)
            for v in range(-r, r + 1)
        )
    if isinstance(f, Not):
        return not eval_bounded(f.body, assignment, radii)
    if isinstance(f, And):
        return all(eval_bounded(a, assignment, radii) for a in f.args)
    if isinstance(f, Or):
        return any(eval_bounded(a, assignment, radii) for a in f.args)
    return evaluate(f, assignment)


# --- Z-group axiom checking ----------------------------------------------


@dataclass
class AxiomReport:
    s: int
    trials: int
    seed: int
    passed: bool = True
    failures: list[str] = field(default_factory=list)

    def fail(self, message: str) -> None:
        self.passed = False
        if len(self.failures) < 10:
            self.failures.append(message)


def random_element(
    rng: random.Random,
    s: int,
    num_bound: int = 1000,
    den_bound: int = 1000,
    finite_bound: int = 10**6,
) -> NonstdInt:
    levels = tuple(
        Fraction(rng.randint(-num_bound, num_bound), rng.randint(1, den_bound))
        for _ in range(s)
    )
    return NonstdInt(levels, rng.randint(-finite_bound, finite_bound))


def check_zgroup_axioms(s: int, trials: int, seed: int) -> AxiomReport:
    """Sampled Z-group axioms for M_s: ordered group compatibility,
    discreteness, and unique division with remainder for n in 2..12."""
    rng = random.Random(seed)
    report = AxiomReport(s=s, trials=trials, seed=seed)
    one = NonstdInt.from_int(1, s)
    for _ in range(trials):
        x = random_element(rng, s)
        y = random_element(rng, s)
        z = random_element(rng, s)
        # total order compatible with addition
        if (x < y) != (x + z < y + z):
            report.fail(f"order/translation mismatch: x={x} y={y} z={z}")
        if (x < y) and (y < z) and not (x < z):
            report.fail(f"transitivity: x={x} y={y} z={z}")
        # discreteness: z > x implies z >= x + 1
        if z > x and not (z >= x + one):
            report.fail(f"element strictly between {x} and {x}+1: {z}")
        # division with remainder, existence and uniqueness
        for n in range(2, 13):
            q, r = x.divmod_int(n)
            if not (0 <= r < n):
                report.fail(f"remainder out of range: x={x} n={n} r={r}")
            if q * n + r != x:
                report.fail(f"divmod identity fails: x={x} n={n} q={q} r={r}")
            hits = sum(1 for r2 in range(n) if (x - r2).divisible_by(n))
            if hits != 1:
                report.fail(f"non-unique remainder: x={x} n={n} ({hits} residues)")
    return report
