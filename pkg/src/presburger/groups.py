"""Group objects inside the nonstandard model M_s.

For a scale 1 << a_1 << ... << a_s, O(a) collects the tuples bounded by
integer multiples of the a_i and o(a) the tuples infinitesimal against
them; the exact standard-part map O(a) -> Q^s has kernel o(a).  A local
lattice is spanned by s generators whose standard parts are linearly
independent; reducing into its half-open fundamental parallelepiped
realizes the bounded quotient group C(a,b), and together with r twist
vectors the extension group with underlying set Z^r x X1.  The section
x -> (0, x) has an explicit symmetric 2-cocycle read off the reduction
carry.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .model import NonstdInt

Vec = tuple[NonstdInt, ...]


class GroupError(ValueError):
    pass


def _vec_add(x: Vec, y: Vec) -> Vec:
    return tuple(a + b for a, b in zip(x, y))


def _vec_neg(x: Vec) -> Vec:
    return tuple(-a for a in x)


def _vec_scale(x: Vec, k: int) -> Vec:
    return tuple(a * k for a in x)


@dataclass(frozen=True)
class Scale:
    """Positive elements 1 << a_1 << ... << a_s of one model M_s."""

    elements: tuple[NonstdInt, ...]

    def __post_init__(self) -> None:
        a = self.elements
        if not a:
            raise GroupError("scale needs at least one element")
        levels = [e.archimedean_level() for e in a]
        s = a[0].s
        for e in a:
            if e.s != s:
                raise GroupError("scale elements from different models")
            if e.sign() <= 0:
                raise GroupError(f"scale element not positive: {e}")
        if levels[0] < 1:
            raise GroupError("first scale element is not infinite")
        for i in range(1, len(a)):
            if levels[i] <= levels[i - 1]:
                raise GroupError("scale elements must have increasing magnitude")

    @staticmethod
    def default(s: int) -> "Scale":
        return Scale(tuple(NonstdInt.unit(s, i) for i in range(1, s + 1)))

    @property
    def s(self) -> int:
        return len(self.elements)

    @property
    def model_levels(self) -> int:
        return self.elements[0].s

    def zero(self) -> NonstdInt:
        return NonstdInt.zero(self.model_levels)


def in_O(x: Vec, scale: Scale) -> bool:
    """Componentwise |x_i| < n * a_i for some integer n."""
    if len(x) != scale.s:
        raise GroupError(f"arity {len(x)} does not match scale {scale.s}")
    return all(
        xi.archimedean_level() <= ai.archimedean_level()
        for xi, ai in zip(x, scale.elements)
    )


def in_o(x: Vec, scale: Scale) -> bool:
    """Componentwise n * |x_i| < a_i for every integer n."""
    if len(x) != scale.s:
        raise GroupError(f"arity {len(x)} does not match scale {scale.s}")
    return all(
        xi.archimedean_level() < ai.archimedean_level()
        for xi, ai in zip(x, scale.elements)
    )


def std_part(x: Vec, scale: Scale) -> tuple[Fraction, ...]:
    """Exact coordinates of x's class in O(a)/o(a), normalized so a_i -> 1."""
    if not in_O(x, scale):
        raise GroupError(f"{x} is not in O(a)")
    out = []
    for xi, ai in zip(x, scale.elements):
        level = ai.archimedean_level()
        pos = ai.s - level
        lead = ai.levels[pos]
        out.append(xi.levels[pos] / lead if xi.archimedean_level() == level else Fraction(0))
    return tuple(out)


def _solve_exact(matrix: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    """Gaussian elimination over the rationals; matrix must be invertible."""
    n = len(matrix)
    m = [row[:] + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            raise GroupError("standard-part matrix is singular")
        m[col], m[pivot] = m[pivot], m[col]
        inv = 1 / m[col][col]
        m[col] = [v * inv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                factor = m[r][col]
                m[r] = [v - factor * w for v, w in zip(m[r], m[col])]
    return [m[i][n] for i in range(n)]


@dataclass(frozen=True)
class LocalLattice:
    """Subgroup of O(a) meeting o(a) trivially with full standard-part image."""

    scale: Scale
    generators: tuple[Vec, ...]

    def __post_init__(self) -> None:
        s = self.scale.s
        if len(self.generators) != s:
            raise GroupError(f"need {s} generators, got {len(self.generators)}")
        for b in self.generators:
            if not in_O(b, self.scale):
                raise GroupError(f"generator {b} is not in O(a)")
        # column j = standard part of generator j
        cols = [std_part(b, self.scale) for b in self.generators]
        matrix = [[cols[j][i] for j in range(s)] for i in range(s)]
        try:
            _solve_exact([row[:] for row in matrix], [Fraction(0)] * s)
        except GroupError:
            raise GroupError("standard parts of the generators are not a basis")
        object.__setattr__(self, "_matrix", matrix)

    @property
    def matrix(self) -> list[list[Fraction]]:
        return [row[:] for row in self._matrix]

    def coordinates(self, x: Vec) -> list[Fraction]:
        """Solve pi(b) t = std_part(x)."""
        return _solve_exact(self.matrix, list(std_part(x, self.scale)))

    def reduce(self, x: Vec) -> tuple[Vec, tuple[int, ...]]:
        """Unique (rep, coeffs) with x = rep + sum coeffs_j b_j and rep's
        lattice coordinates in [0, 1)."""
        t = self.coordinates(x)
        coeffs = tuple(q.numerator // q.denominator for q in t)  # floor
        rep = x
        for c, b in zip(coeffs, self.generators):
            if c:
                rep = _vec_add(rep, _vec_scale(b, -c))
        return rep, coeffs

    def is_reduced(self, x: Vec) -> bool:
        return all(0 <= q < 1 for q in self.coordinates(x))


@dataclass(frozen=True)
class ExtGroupSpec:
    """Extension of C(a,b) by Z^r with twist vectors v_1..v_s in Z^r.

    The group law canonicalizes (u, x) to (u + sum(carry_i * v_i), rep);
    with that sign convention the section x -> (0, x) has carry cocycle
    g(x, y) = sum(carry_i * v_i) and i(g(x,y)) = s(x+y) - s(x) - s(y).
    """

    r: int
    lattice: LocalLattice
    twists: tuple[Vec, ...]  # one r-tuple of model elements per generator

    def __post_init__(self) -> None:
        if len(self.twists) != self.lattice.scale.s:
            raise GroupError("one twist vector per lattice generator required")
        for v in self.twists:
            if len(v) != self.r:
                raise GroupError(f"twist {v} does not have arity {self.r}")

    @property
    def scale(self) -> Scale:
        return self.lattice.scale

    def zero_u(self) -> Vec:
        z = self.scale.zero()
        return tuple(z for _ in range(self.r))

    def twist_sum(self, coeffs: tuple[int, ...]) -> Vec:
        acc = self.zero_u()
        for c, v in zip(coeffs, self.twists):
            if c:
                acc = _vec_add(acc, _vec_scale(v, c))
        return acc


@dataclass(frozen=True)
class ExtElement:
    """Canonical representative: u free part, x reduced in X1."""

    u: Vec
    x: Vec

    def __str__(self) -> str:
        us = " ".join(str(a) for a in self.u)
        xs = " ".join(str(a) for a in self.x)
        return f"({us} | {xs})"


def make_element(spec: ExtGroupSpec, u: Vec, x: Vec) -> ExtElement:
    """Canonicalize an arbitrary (u, x) pair into the group."""
    rep, coeffs = spec.lattice.reduce(x)
    return ExtElement(u=_vec_add(u, spec.twist_sum(coeffs)), x=rep)


def ext_zero(spec: ExtGroupSpec) -> ExtElement:
    return ExtElement(u=spec.zero_u(), x=tuple(spec.scale.zero() for _ in range(spec.scale.s)))


def ext_add(g1: ExtElement, g2: ExtElement, spec: ExtGroupSpec) -> ExtElement:
    rep, coeffs = spec.lattice.reduce(_vec_add(g1.x, g2.x))
    return ExtElement(
        u=_vec_add(_vec_add(g1.u, g2.u), spec.twist_sum(coeffs)),
        x=rep,
    )


def ext_neg(g: ExtElement, spec: ExtGroupSpec) -> ExtElement:
    rep, coeffs = spec.lattice.reduce(_vec_neg(g.x))
    return ExtElement(u=_vec_add(_vec_neg(g.u), spec.twist_sum(coeffs)), x=rep)


def ext_sub(g1: ExtElement, g2: ExtElement, spec: ExtGroupSpec) -> ExtElement:
    return ext_add(g1, ext_neg(g2, spec), spec)


def cocycle(x: Vec, y: Vec, spec: ExtGroupSpec) -> Vec:
    """Carry cocycle of the canonical section s(x) = (0, x).

    Requires reduced inputs; returns the u-part of s(x) + s(y) - s(x +_C y),
    concretely sum(carry_i * v_i) for the reduction carry of x + y.
    """
    if not spec.lattice.is_reduced(x) or not spec.lattice.is_reduced(y):
        raise GroupError("cocycle requires reduced representatives")
    _, coeffs = spec.lattice.reduce(_vec_add(x, y))
    return spec.twist_sum(coeffs)


# --- sampling and verification ----------------------------------------------


def random_in_O(rng: random.Random, scale: Scale,
                num_bound: int = 1000, den_bound: int = 1000,
                finite_bound: int = 10**6) -> Vec:
    """Random element of O(a): per coordinate, random rational weights on
    the levels up to a_i's and a random finite part."""
    out = []
    n_model = scale.model_levels
    for ai in scale.elements:
        level = ai.archimedean_level()
        qs = [Fraction(0)] * n_model
        for lv in range(1, level + 1):
            if rng.random() < 0.7:
                qs[n_model - lv] = Fraction(
                    rng.randint(-num_bound, num_bound), rng.randint(1, den_bound)
                )
        out.append(NonstdInt(tuple(qs), rng.randint(-finite_bound, finite_bound)))
    return tuple(out)


def random_reduced(rng: random.Random, spec: ExtGroupSpec) -> Vec:
    x = random_in_O(rng, spec.scale)
    rep, _ = spec.lattice.reduce(x)
    return rep


def random_element(rng: random.Random, spec: ExtGroupSpec,
                   u_bound: int = 1000) -> ExtElement:
    z = spec.scale.zero()
    u = tuple(z + rng.randint(-u_bound, u_bound) for _ in range(spec.r))
    return ExtElement(u=u, x=random_reduced(rng, spec))


@dataclass
class ExtReport:
    spec_r: int
    spec_s: int
    trials: int
    seed: int
    checks: dict[str, int] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def record(self, name: str, ok: bool, detail: str = "") -> None:
        self.checks[name] = self.checks.get(name, 0) + 1
        if not ok and len(self.failures) < 10:
            self.failures.append(f"{name}: {detail}")


def verify_extension(spec: ExtGroupSpec, trials: int = 1000, seed: int = 0) -> ExtReport:
    """Sampled exactness, group-law, standard-part and cocycle checks."""
    rng = random.Random(seed)
    report = ExtReport(spec_r=spec.r, spec_s=spec.scale.s, trials=trials, seed=seed)
    zero = ext_zero(spec)
    scale = spec.scale

    for _ in range(trials):
        g1 = random_element(rng, spec)
        g2 = random_element(rng, spec)
        g3 = random_element(rng, spec)

        # abelian group axioms
        lhs = ext_add(ext_add(g1, g2, spec), g3, spec)
        rhs = ext_add(g1, ext_add(g2, g3, spec), spec)
        report.record("associativity", lhs == rhs, f"{g1} {g2} {g3}")
        report.record(
            "commutativity",
            ext_add(g1, g2, spec) == ext_add(g2, g1, spec),
            f"{g1} {g2}",
        )
        report.record("identity", ext_add(g1, zero, spec) == g1, str(g1))
        report.record(
            "inverse", ext_add(g1, ext_neg(g1, spec), spec) == zero, str(g1)
        )

        # standard part: morphism with kernel o(a)
        x = random_in_O(rng, scale)
        y = random_in_O(rng, scale)
        sx = std_part(x, scale)
        sy = std_part(y, scale)
        sxy = std_part(_vec_add(x, y), scale)
        report.record(
            "std_part morphism",
            all(a + b == c for a, b, c in zip(sx, sy, sxy)),
            f"{x} {y}",
        )
        report.record(
            "std_part kernel",
            (all(q == 0 for q in sx)) == in_o(x, scale),
            str(x),
        )

        # reduction: idempotent and lattice-equivariant
        rep, coeffs = spec.lattice.reduce(x)
        rep2, coeffs2 = spec.lattice.reduce(rep)
        report.record(
            "reduce idempotent",
            rep2 == rep and all(c == 0 for c in coeffs2),
            str(x),
        )
        j = rng.randrange(scale.s)
        repb, coeffsb = spec.lattice.reduce(_vec_add(x, spec.lattice.generators[j]))
        shifted = list(coeffs)
        shifted[j] += 1
        report.record(
            "reduce equivariant",
            repb == rep and list(coeffsb) == shifted,
            str(x),
        )
        report.record("reduced in window", spec.lattice.is_reduced(rep), str(rep))

        # cocycle symmetry and the 2-cocycle identity on reduced triples
        xb = random_reduced(rng, spec)
        yb = random_reduced(rng, spec)
        zb = random_reduced(rng, spec)
        report.record(
            "cocycle symmetry",
            cocycle(xb, yb, spec) == cocycle(yb, xb, spec),
            f"{xb} {yb}",
        )
        xy = spec.lattice.reduce(_vec_add(xb, yb))[0]
        yz = spec.lattice.reduce(_vec_add(yb, zb))[0]
        lhs_c = _vec_add(cocycle(xb, yb, spec), cocycle(xy, zb, spec))
        rhs_c = _vec_add(cocycle(yb, zb, spec), cocycle(xb, yz, spec))
        report.record("cocycle identity", lhs_c == rhs_c, f"{xb} {yb} {zb}")
        report.record(
            "cocycle at zero",
            cocycle(xb, zero.x, spec) == spec.zero_u(),
            str(xb),
        )

        # exactness: j injective morphism, q surjective, ker q = im j
        z = scale.zero()
        u1 = tuple(z + rng.randint(-1000, 1000) for _ in range(spec.r))
        u2 = tuple(z + rng.randint(-1000, 1000) for _ in range(spec.r))
        j1 = make_element(spec, u1, zero.x)
        j2 = make_element(spec, u2, zero.x)
        report.record(
            "j morphism",
            ext_add(j1, j2, spec) == make_element(spec, _vec_add(u1, u2), zero.x),
            f"{u1} {u2}",
        )
        report.record(
            "j injective", (j1 == zero) == all(a.is_zero for a in u1), str(u1)
        )
        # q(g) = class of the x part; kernel of q is exactly the image of j
        report.record("q(j(u)) = 0", all(a.is_zero for a in j1.x), str(u1))
        # kernel of q is the image of j: a lattice point in the x slot lands
        # exactly on j of the twisted u
        lam = tuple(rng.randint(-20, 20) for _ in range(scale.s))
        lattice_pt = tuple(scale.zero() for _ in range(scale.s))
        for c, b in zip(lam, spec.lattice.generators):
            if c:
                lattice_pt = _vec_add(lattice_pt, _vec_scale(b, c))
        lhs_k = make_element(spec, u1, lattice_pt)
        rhs_k = make_element(spec, _vec_add(u1, spec.twist_sum(lam)), zero.x)
        report.record("ker q = im j", lhs_k == rhs_k, f"{u1} {lam}")
        # q respects addition: the x part of a sum is the C(a,b) sum
        s_sum = ext_add(g1, g2, spec).x
        c_sum = spec.lattice.reduce(_vec_add(g1.x, g2.x))[0]
        report.record("q morphism", s_sum == c_sum, f"{g1} {g2}")

    # pushout presentation: the class of (0, b_i) is j(v_i), read off the
    # reduction carry of the generator itself
    for i, b in enumerate(spec.lattice.generators):
        lifted = make_element(spec, spec.zero_u(), b)
        expect = make_element(spec, spec.twists[i], zero.x)
        report.record("generator carry", lifted == expect, f"b_{i + 1}")

    # unboundedness accounting: the free part contributes r, the bounded
    # quotient contributes 0
    from .normal_form import ubd
    from .syntax import TRUE

    free_rank = ubd(TRUE, tuple(f"t{i}" for i in range(spec.r)))
    report.record("free part rank", free_rank == spec.r, str(free_rank))
    sample_bounded = all(
        in_O(random_reduced(rng, spec), scale) for _ in range(min(50, trials))
    )
    report.record("quotient bounded", sample_bounded, "")
    return report


# --- serialization -----------------------------------------------------------


def _parse_component(raw, scale: Scale, index: int) -> NonstdInt:
    """A generator/twist component: NonstdInt literal, or a rational weight
    applied to the scale element a_{index+1}."""
    if isinstance(raw, str) and ";" in raw:
        v = NonstdInt.parse(raw)
        if v.s != scale.model_levels:
            raise GroupError(f"component {raw!r} has {v.s} levels, expected {scale.model_levels}")
        return v
    q = Fraction(raw)
    return scale.elements[index].scale(q)


def _parse_int_component(raw, scale: Scale) -> NonstdInt:
    if isinstance(raw, str) and ";" in raw:
        v = NonstdInt.parse(raw)
        if v.s != scale.model_levels:
            raise GroupError(f"component {raw!r} has {v.s} levels")
        return v
    q = Fraction(raw)
    if q.denominator != 1:
        raise GroupError(f"twist component {raw!r} must be an integer or literal")
    return NonstdInt.from_int(int(q), scale.model_levels)


def spec_from_json(data: dict) -> ExtGroupSpec:
    """Load {s, r, a?, b, v} (see the README for the field shapes)."""
    s = int(data["s"])
    r = int(data["r"])
    if "a" in data and data["a"] is not None:
        elements = tuple(NonstdInt.parse(t, s) for t in data["a"])
        scale = Scale(elements)
    else:
        scale = Scale.default(s)
    b_rows = data["b"]
    if len(b_rows) != s:
        raise GroupError(f"need {s} generators in 'b'")
    gens = []
    for row in b_rows:
        if len(row) != s:
            raise GroupError("each generator needs one component per scale entry")
        gens.append(tuple(_parse_component(raw, scale, i) for i, raw in enumerate(row)))
    lattice = LocalLattice(scale=scale, generators=tuple(gens))
    v_rows = data.get("v") or [[0] * r for _ in range(s)]
    if len(v_rows) != s:
        raise GroupError(f"need {s} twist vectors in 'v'")
    twists = []
    for row in v_rows:
        if len(row) != r:
            raise GroupError(f"each twist vector needs {r} components")
        twists.append(tuple(_parse_int_component(raw, scale) for raw in row))
    return ExtGroupSpec(r=r, lattice=lattice, twists=tuple(twists))


def load_spec(path: str) -> ExtGroupSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return spec_from_json(json.load(fh))


def parse_element(text: str, spec: ExtGroupSpec) -> ExtElement:
    """Parse '(u1 u2 | x1 x2)' with NonstdInt literals as components."""
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        text = text[1:-1]
    if "|" not in text:
        raise GroupError("element must look like '(u... | x...)'")
    u_text, x_text = text.split("|", 1)
    n = spec.scale.model_levels
    u = tuple(NonstdInt.parse(t, n) for t in u_text.split())
    x = tuple(NonstdInt.parse(t, n) for t in x_text.split())
    if len(u) != spec.r or len(x) != spec.scale.s:
        raise GroupError(
            f"element arity ({len(u)}|{len(x)}) does not match spec ({spec.r}|{spec.scale.s})"
        )
    return make_element(spec, u, x)
