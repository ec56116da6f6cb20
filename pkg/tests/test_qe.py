"""Quantifier elimination: examples, structural checks, differential tests."""

import random

import pytest

from presburger import (
    Divides,
    Exists,
    Forall,
    Not,
    And,
    Or,
    TRUE,
    decide,
    dnf,
    eliminate,
    free_vars,
    normalize,
    parse,
    show,
)
from presburger.model import NonstdInt, enumerate_box, evaluate
from presburger.syntax import is_atom

from helpers import (
    GuardedEliminator,
    OverBudget,
    check_eliminate_on_box,
    sample_quantified,
)

from fractions import Fraction


def quantifier_free(f):
    if is_atom(f) or f in (TRUE,) or not hasattr(f, "__dict__"):
        return True
    if isinstance(f, (Exists, Forall)):
        return False
    if isinstance(f, Not):
        return quantifier_free(f.body)
    if isinstance(f, (And, Or)):
        return all(quantifier_free(a) for a in f.args)
    return True


class TestEliminate:
    def test_evenness(self):
        out = eliminate(parse("exists y. x = 2*y"))
        assert out == Divides(2, parse("x > 0").term)

    def test_gap_always_realized(self):
        assert eliminate(parse("exists y. (x < y and y < x + 2)")) == TRUE

    def test_output_quantifier_free(self):
        rng = random.Random(20)
        checked = 0
        while checked < 120:
            f = sample_quantified(rng, rng.randint(0, 2), rng.randint(1, 2))
            try:
                out = GuardedEliminator()(f)
            except OverBudget:
                continue
            assert out == eliminate(f)
            assert quantifier_free(out)
            assert free_vars(out) <= free_vars(f)
            checked += 1

    def test_differential_small_batch(self):
        rng = random.Random(21)
        accepted = 0
        while accepted < 80:
            n_q = rng.randint(1, 3)
            n_f = rng.randint(0, 3 - n_q + 1)
            f = sample_quantified(rng, n_f, n_q)
            box = {v: (-15, 15) for v in sorted(free_vars(f))}
            try:
                check_eliminate_on_box(f, box)
            except OverBudget:
                continue
            accepted += 1

    def test_truth_preserved_in_nonstandard_model(self):
        # hand-checked quantified truths at nonstandard points: evaluate the
        # eliminated (quantifier-free) form in M_1
        w = NonstdInt.unit(1, 1)

        f = eliminate(parse("exists y. x = 2*y"))
        assert evaluate(f, {"x": 2 * w}) is True  # x = 2*(w)
        assert evaluate(f, {"x": 2 * w + 1}) is False

        g = eliminate(parse("exists y. (x < y and y < z)"))
        # between x and z there is a gap iff z - x >= 2
        assert evaluate(g, {"x": NonstdInt.from_int(0, 1), "z": w}) is True
        assert evaluate(g, {"x": w, "z": w + 1}) is False

        h = eliminate(parse("exists y. (x < 3*y and 3*y < x + 3)"))
        # a multiple of 3 strictly inside (x, x+3) exists unless 3 | x
        assert evaluate(h, {"x": 3 * w}) is False
        assert evaluate(h, {"x": 3 * w + 1}) is True

    def test_forall_via_negation(self):
        out = eliminate(parse("forall y. (2 | y or 2 | y + 1)"))
        assert out == TRUE


class TestDecide:
    def test_every_integer_even_or_odd(self):
        assert decide(parse("forall x. exists y. (x = 2*y or x = 2*y + 1)")) is True

    def test_empty_interval(self):
        assert decide(parse("exists x. (x < 0 and x > 0)")) is False

    def test_not_everything_divisible_by_3(self):
        assert decide(parse("forall x. exists y. x = 3*y")) is False

    def test_free_variables_rejected(self):
        with pytest.raises(ValueError):
            decide(parse("x > 0"))

    def test_agrees_with_bounded_bruteforce(self):
        # sentences whose quantifiers provably fit in [-50, 50]
        from presburger.model import eval_bounded
        from presburger.qe import witness_radius

        rng = random.Random(22)
        checked = 0
        while checked < 40:
            f = sample_quantified(rng, 0, rng.randint(1, 2))
            elim = GuardedEliminator()
            # innermost-out radii; skip sentences whose bounds exceed 50
            radii = {}
            ok = True

            def plan(g):
                nonlocal ok
                if not ok:
                    return
                if isinstance(g, (Exists, Forall)):
                    plan(g.body)
                    if not ok:
                        return
                    body = elim(g.body)
                    ranges = {v: radii.get(v, 50) for v in free_vars(body) if v != g.var}
                    r = witness_radius(body, g.var, ranges)
                    if r > 50:
                        ok = False
                        return
                    radii[g.var] = r
                elif isinstance(g, Not):
                    plan(g.body)
                elif isinstance(g, (And, Or)):
                    for a in g.args:
                        plan(a)

            try:
                plan(f)
            except OverBudget:
                continue
            if not ok:
                continue
            assert decide(f) == eval_bounded(f, {}, radii)
            checked += 1


class TestDnf:
    def test_distribution(self):
        a, b, c, d = (parse(t) for t in ["x > 0", "x < 9", "3 | x", "2 | x + 1"])
        got = dnf(Or((a, And((b, Or((c, d)))))))
        as_sets = [frozenset(g) for g in got]
        assert frozenset([normalize(a)]) in as_sets
        assert frozenset([normalize(b), normalize(c)]) in as_sets
        assert frozenset([normalize(b), normalize(d)]) in as_sets

    def test_unsat_disjunct_dropped(self):
        f = parse("x > 0 and -x > 0")
        assert dnf(f) == []

    def test_eliminated_interval(self):
        f = dnf(eliminate(parse("exists y. (0 < y and y < x)")))
        rebuilt = Or(tuple(And(tuple(d)) for d in f)) if f else parse("false")
        box = {"x": (-10, 10)}
        assert enumerate_box(rebuilt, box) == enumerate_box(parse("x >= 2"), box)

    def test_negated_divisibility_expanded(self):
        f = parse("not 2 | x")
        out = dnf(f)
        assert out == [[Divides(2, parse("x + 1 > 0").term)]]
        box = {"x": (-6, 6)}
        rebuilt = Or(tuple(And(tuple(d)) for d in out))
        assert enumerate_box(rebuilt, box) == enumerate_box(f, box)

    def test_disjuncts_are_atom_conjunctions(self):
        rng = random.Random(23)
        from helpers import sample_matrix

        for _ in range(50):
            f = sample_matrix(rng, ["x", "y"], rng.randint(1, 4))
            for disjunct in dnf(f):
                assert all(is_atom(a) for a in disjunct)
