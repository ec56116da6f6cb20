"""Linear terms: integer-coefficient affine combinations of variables.

Terms are canonical: zero coefficients are dropped and variables are kept
sorted, so structural equality coincides with term equality.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd


@dataclass(frozen=True)
class LinearTerm:
    """Sum of ``coeff * var`` pairs plus an integer constant."""

    coeffs: tuple[tuple[str, int], ...] = ()
    const: int = 0

    def __post_init__(self) -> None:
        items = [vc for vc in self.coeffs if vc[1] != 0]
        items.sort()
        object.__setattr__(self, "coeffs", tuple(items))

    def __hash__(self) -> int:
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.coeffs, self.const))
            object.__setattr__(self, "_hash", h)
        return h

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, LinearTerm):
            return NotImplemented
        return self.const == other.const and self.coeffs == other.coeffs

    @staticmethod
    def constant(n: int) -> "LinearTerm":
        return LinearTerm((), n)

    @staticmethod
    def var(name: str, coeff: int = 1) -> "LinearTerm":
        return LinearTerm(((name, coeff),), 0)

    @staticmethod
    def of(mapping: dict[str, int], const: int = 0) -> "LinearTerm":
        return LinearTerm(tuple(mapping.items()), const)

    def coeff(self, var: str) -> int:
        for v, c in self.coeffs:
            if v == var:
                return c
        return 0

    def variables(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.coeffs)

    @property
    def is_constant(self) -> bool:
        return not self.coeffs

    def drop(self, var: str) -> "LinearTerm":
        """Term with ``var``'s contribution removed."""
        return _raw(tuple(vc for vc in self.coeffs if vc[0] != var), self.const)

    def __add__(self, other: "LinearTerm | int") -> "LinearTerm":
        if isinstance(other, int):
            return _raw(self.coeffs, self.const + other)
        a, b = self.coeffs, other.coeffs
        if not a:
            return _raw(b, self.const + other.const)
        if not b:
            return _raw(a, self.const + other.const)
        out: list[tuple[str, int]] = []
        i = j = 0
        la, lb = len(a), len(b)
        while i < la and j < lb:
            va, ca = a[i]
            vb, cb = b[j]
            if va == vb:
                c = ca + cb
                if c:
                    out.append((va, c))
                i += 1
                j += 1
            elif va < vb:
                out.append(a[i])
                i += 1
            else:
                out.append(b[j])
                j += 1
        out.extend(a[i:])
        out.extend(b[j:])
        return _raw(tuple(out), self.const + other.const)

    __radd__ = __add__

    def __sub__(self, other: "LinearTerm | int") -> "LinearTerm":
        return self + (-other)

    def __rsub__(self, other: int) -> "LinearTerm":
        return (-self) + other

    def __neg__(self) -> "LinearTerm":
        return _raw(tuple((v, -c) for v, c in self.coeffs), -self.const)

    def __mul__(self, k: int) -> "LinearTerm":
        if k == 0:
            return _raw((), 0)
        return _raw(tuple((v, c * k) for v, c in self.coeffs), self.const * k)

    __rmul__ = __mul__

    def substitute(self, var: str, replacement: "LinearTerm") -> "LinearTerm":
        c = self.coeff(var)
        if c == 0:
            return self
        return self.drop(var) + replacement * c

    def content(self) -> int:
        """gcd of the variable coefficients (0 for constant terms)."""
        g = 0
        for _, c in self.coeffs:
            g = gcd(g, abs(c))
        return g

    def evaluate(self, assignment):
        """Value under an assignment; works for int and NonstdInt values."""
        total = None
        for v, c in self.coeffs:
            part = c * assignment[v]
            total = part if total is None else total + part
        if total is None:
            return self.const
        return total + self.const

    def __str__(self) -> str:
        parts: list[str] = []
        for v, c in self.coeffs:
            if not parts:
                if c == 1:
                    parts.append(v)
                elif c == -1:
                    parts.append(f"-{v}")
                else:
                    parts.append(f"{c}*{v}")
            else:
                sign = "+" if c > 0 else "-"
                a = abs(c)
                parts.append(f"{sign} {v}" if a == 1 else f"{sign} {a}*{v}")
        if self.const or not parts:
            if not parts:
                parts.append(str(self.const))
            else:
                sign = "+" if self.const > 0 else "-"
                parts.append(f"{sign} {abs(self.const)}")
        return " ".join(parts)


@dataclass(frozen=True)
class RatTerm:
    """Affine form with exact rational coefficients and constant.

    Used for cell bounds and affine rules, where dividing through by a leading
    coefficient introduces denominators; the logical syntax stays integral.
    """

    coeffs: tuple[tuple[str, Fraction], ...] = ()
    const: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        items = [(v, Fraction(c)) for v, c in self.coeffs if c != 0]
        items.sort(key=lambda vc: vc[0])
        object.__setattr__(self, "coeffs", tuple(items))
        object.__setattr__(self, "const", Fraction(self.const))

    @staticmethod
    def constant(q) -> "RatTerm":
        return RatTerm((), Fraction(q))

    @staticmethod
    def var(name: str, coeff=1) -> "RatTerm":
        return RatTerm(((name, Fraction(coeff)),), Fraction(0))

    @staticmethod
    def from_linear(t: LinearTerm) -> "RatTerm":
        return RatTerm(tuple((v, Fraction(c)) for v, c in t.coeffs), Fraction(t.const))

    def coeff(self, var: str) -> Fraction:
        for v, c in self.coeffs:
            if v == var:
                return c
        return Fraction(0)

    def variables(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.coeffs)

    @property
    def is_constant(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "RatTerm | int | Fraction") -> "RatTerm":
        if isinstance(other, (int, Fraction)):
            return RatTerm(self.coeffs, self.const + other)
        acc = dict(self.coeffs)
        for v, c in other.coeffs:
            acc[v] = acc.get(v, Fraction(0)) + c
        return RatTerm(tuple(acc.items()), self.const + other.const)

    __radd__ = __add__

    def __sub__(self, other) -> "RatTerm":
        return self + (-other)

    def __rsub__(self, other) -> "RatTerm":
        return (-self) + other

    def __neg__(self) -> "RatTerm":
        return RatTerm(tuple((v, -c) for v, c in self.coeffs), -self.const)

    def __mul__(self, k) -> "RatTerm":
        k = Fraction(k)
        if k == 0:
            return RatTerm()
        return RatTerm(tuple((v, c * k) for v, c in self.coeffs), self.const * k)

    __rmul__ = __mul__

    def substitute(self, var: str, replacement: "RatTerm") -> "RatTerm":
        c = self.coeff(var)
        if c == 0:
            return self
        rest = RatTerm(tuple((v, w) for v, w in self.coeffs if v != var), self.const)
        return rest + replacement * c

    def denominator(self) -> int:
        """lcm of all denominators (1 for integral forms)."""
        d = self.const.denominator
        for _, c in self.coeffs:
            d = d * c.denominator // gcd(d, c.denominator)
        return d

    def cleared(self) -> tuple[LinearTerm, int]:
        """Return (d * self as a LinearTerm, d) for d the common denominator."""
        d = self.denominator()
        coeffs = tuple((v, int(c * d)) for v, c in self.coeffs)
        return LinearTerm(coeffs, int(self.const * d)), d

    def to_linear(self) -> LinearTerm:
        t, d = self.cleared()
        if d != 1:
            raise ValueError(f"term has denominator {d}: {self}")
        return t

    def evaluate(self, assignment):
        total = None
        for v, c in self.coeffs:
            part = scale_exact(assignment[v], c)
            total = part if total is None else total + part
        if total is None:
            return self.const
        return total + self.const

    def __str__(self) -> str:
        parts = []
        for v, c in self.coeffs:
            parts.append(f"{c}*{v}" if c != 1 else v)
        if self.const or not parts:
            parts.append(str(self.const))
        return " + ".join(parts)


def _raw(coeffs: tuple[tuple[str, int], ...], const: int) -> LinearTerm:
    """Construct a LinearTerm from already-canonical coefficients."""
    t = object.__new__(LinearTerm)
    object.__setattr__(t, "coeffs", coeffs)
    object.__setattr__(t, "const", const)
    return t


def scale_exact(value, q: Fraction):
    """q * value for int or model-element value, exact (no rounding)."""
    if isinstance(value, int):
        r = q * value
        if r.denominator != 1:
            return r
        return int(r)
    return value.scale(q)
