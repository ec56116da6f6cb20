"""Evaluation over Z and M_s, the enumeration oracle, Z-group axioms."""

from fractions import Fraction

import pytest

from presburger import parse, eliminate, normalize
from presburger.model import (
    EvalError,
    NonstdInt,
    check_zgroup_axioms,
    enumerate_box,
    evaluate,
    random_element,
)

import random


def ns(levels, finite):
    return NonstdInt.of(levels, finite)


class TestNonstdInt:
    def test_lexicographic_order(self):
        a = ns([0], 100)
        b = ns([1], -100)
        assert a < b
        assert ns([Fraction(1, 2)], 0) < ns([1], -(10**9))

    def test_unique_division(self):
        x = ns([Fraction(1, 2)], 5)
        q, r = x.divmod_int(2)
        assert q == ns([Fraction(1, 4)], 2)
        assert r == 1
        assert 2 * q + r == x
        # no other residue works
        assert sum(1 for r2 in range(2) if (x - r2).divisible_by(2)) == 1

    def test_scale_exactness(self):
        a = ns([Fraction(3, 2)], 4)
        assert a.scale(Fraction(1, 2)) == ns([Fraction(3, 4)], 2)
        with pytest.raises(EvalError):
            ns([1], 3).scale(Fraction(1, 2))

    def test_parse_print(self):
        a = ns([Fraction(1, 2), 3], -7)
        assert NonstdInt.parse(str(a)) == a
        assert NonstdInt.parse("5", s=2) == NonstdInt.from_int(5, 2)


class TestEvaluate:
    def test_negative_finite(self):
        f = parse("x > 0")
        assert evaluate(f, {"x": ns([0], -3)}) is False

    def test_infinite_dominates(self):
        f = parse("y - x > 0")
        assert evaluate(f, {"x": ns([0], 100), "y": ns([1], -100)}) is True

    def test_divisibility_nonstandard(self):
        f = parse("2 | x")
        # (1/2; 5) = 2*(1/4; 2) + 1, so it is odd
        assert evaluate(f, {"x": ns([Fraction(1, 2)], 5)}) is False
        assert evaluate(f, {"x": ns([Fraction(1, 2)], 4)}) is True

    def test_missing_variable(self):
        with pytest.raises(EvalError):
            evaluate(parse("x > 0"), {})

    def test_quantifier_rejected(self):
        with pytest.raises(EvalError):
            evaluate(parse("exists y. y > x"), {"x": 0})

    def test_int_and_model_agree_on_finite(self):
        rng = random.Random(3)
        f = parse("2*x - 3*y + 1 > 0 and 3 | x + y")
        for _ in range(200):
            a, b = rng.randint(-50, 50), rng.randint(-50, 50)
            plain = evaluate(f, {"x": a, "y": b})
            lifted = evaluate(
                f, {"x": NonstdInt.from_int(a, 2), "y": NonstdInt.from_int(b, 2)}
            )
            assert plain == lifted


class TestEnumerate:
    def test_evens(self):
        f = parse("2 | x")
        assert enumerate_box(f, {"x": (-4, 4)}) == [(-4,), (-2,), (0,), (2,), (4,)]

    def test_pairs(self):
        f = parse("x - y > 0 and y + 1 > 0")
        assert enumerate_box(f, {"x": (0, 3), "y": (0, 3)}) == [
            (1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2),
        ]

    def test_eliminated_evens_count(self):
        f = eliminate(parse("exists y. x = 2*y"))
        assert len(enumerate_box(f, {"x": (-20, 20)})) == 21

    def test_cap(self):
        with pytest.raises(EvalError):
            enumerate_box(parse("x > 0"), {"x": (0, 10**8)}, cap=10**6)

    def test_box_must_cover(self):
        with pytest.raises(EvalError):
            enumerate_box(parse("x + y > 0"), {"x": (0, 1)})

    def test_agrees_with_normalize_and_eliminate(self):
        rng = random.Random(4)
        from helpers import sample_matrix

        for _ in range(60):
            f = sample_matrix(rng, ["x", "y"], rng.randint(1, 4))
            box = {"x": (-7, 7), "y": (-7, 7)}
            base = enumerate_box(f, box)
            assert enumerate_box(normalize(f), box) == base
            assert enumerate_box(eliminate(f), box) == base


class TestZGroupAxioms:
    def test_degenerate_is_standard_integers(self):
        rep = check_zgroup_axioms(0, 2000, 1)
        assert rep.passed, rep.failures

    def test_one_level_seed_42(self):
        rep = check_zgroup_axioms(1, 10**4, 42)
        assert rep.passed, rep.failures

    @pytest.mark.parametrize("s", [0, 1, 2, 3])
    def test_all_levels(self, s):
        rep = check_zgroup_axioms(s, 2000, 5 + s)
        assert rep.passed, rep.failures

    def test_sampler_shape(self):
        rng = random.Random(0)
        x = random_element(rng, 3)
        assert x.s == 3
