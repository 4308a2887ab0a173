import random
from fractions import Fraction

import pytest

from omtsn.encoders import build_encoding, pb_problem
from omtsn.sat import Solver
from omtsn.smt import (TRUE, And, Encoding, Not, Or, SmtSolver, evaluate, ge, le, lt, rel, var)
from oracles import atoms_of, bools_of, enumerate_models, fm_feasible, to_leq

F = Fraction


def test_clausal_assert_registers_atom():
    enc = Encoding()
    enc.assert_formula(Or(var("A1"), le({"x": 1}, 1)))
    assert len(enc.clauses) == 1 and enc.atom_count() == 1


def test_tseitin_clause_count():
    enc = Encoding()
    enc.assert_formula(Or(And(var("a"), var("b")), var("c")))
    # a, b, c plus one auxiliary; 3 definition clauses and the top clause
    assert enc.nvars == 4 and len(enc.clauses) == 4


def test_assert_true_adds_nothing():
    enc = Encoding()
    enc.assert_formula(TRUE)
    assert enc.clauses == []


def test_assumption_core_over_theory():
    s = SmtSolver()
    s.assert_formula(Or(ge({"x": 1}, 2), var("A1")))
    s.assert_formula(Or(le({"x": 1}, 1), var("A2")))
    s.sync()
    a1, a2 = 2 * s.enc.bools["A1"], 2 * s.enc.bools["A2"]
    assert s.check_sat([a1 ^ 1, a2 ^ 1]) is False
    assert set(s.core) <= {a1 ^ 1, a2 ^ 1} and s.core
    assert s.check_sat() is True


def test_pure_boolean_matches_sat():
    rng = random.Random(1)
    for _ in range(50):
        cnf = [[2 * v + rng.randint(0, 1) for v in rng.sample(range(6), 3)] for _ in range(20)]
        enc = Encoding()
        for v in range(6):
            enc.bool_var(f"p{v}")
        for c in cnf:
            enc.add_clause(c)
        plain = Solver()
        plain.ensure_vars(6)
        for c in cnf:
            plain.add_clause(c)
        assert SmtSolver(enc).check_sat() == plain.solve()


def _indicator_sum(n=4):
    p = pb_problem([], [(1, var(f"A{i}")) for i in range(1, n + 1)])
    enc = build_encoding(p, "none")
    enc.assert_formula(lt({p.cost: 1}, 2), "threshold")
    return p, enc


def test_indicator_sum_learns_indicator_conflict():
    p, enc = _indicator_sum()
    s = SmtSolver(enc, ep="decision")
    s.sync()
    a1, a2 = 2 * enc.bools["A1"], 2 * enc.bools["A2"]
    assert s.check_sat([a1, a2]) is False
    assert sorted(s.core) == sorted([a1, a2])
    st = s.snapshot_stats()
    assert st["theory_checks"] >= 1 and st["pb_conflicts"] >= 1


def test_consistent_partial_counts_one_check():
    s = SmtSolver()
    s.assert_formula(ge({"x": 1}, 0))
    assert s.check_sat() is True
    assert s.snapshot_stats()["theory_checks"] == 1
    assert s.snapshot_stats()["theory_conflicts"] == 0


class _Recording(SmtSolver):
    def __init__(self, *a, **k):
        super().__init__(*a, **k)
        self.early = 0
        self.conflicts = []

    def check(self, solver, final, after_decision):
        before = self.stats["theory_checks"]
        r = super().check(solver, final, after_decision)
        if not final and self.stats["theory_checks"] > before:
            self.early += 1
        return r

    def _conflict(self, expl):
        out = super()._conflict(expl)
        self.conflicts.append(out)
        return out


def test_policy_off_never_checks_early():
    p, enc = _indicator_sum(5)
    s = _Recording(enc, ep="off")
    s.check_sat()
    assert s.early == 0
    p, enc = _indicator_sum(5)
    s = _Recording(enc, ep="decision")
    s.check_sat()
    assert s.early > 0


def _rand_formula(rng, bools, reals):
    pool = [var(b) for b in bools]
    for _ in range(3):
        co = {y: rng.choice([-1, 1, 2]) for y in rng.sample(reals, rng.randint(1, 2))}
        f = rel(rng.choice(["<=", "<", ">=", ">", "="]), co, rng.randint(-2, 2))
        if f[0] != "const":
            pool.append(f)

    def lit():
        f = rng.choice(pool)
        return f if rng.random() < 0.5 else Not(f)

    return [Or(*[lit() for _ in range(rng.randint(1, 3))]) for _ in range(rng.randint(2, 5))]


def _fm(atom_truths):
    cons = []
    for a, v in atom_truths:
        d = dict(a.lhs)
        if v:
            cons += to_leq(d, "<" if a.strict else "<=", a.rhs)
        else:
            cons += to_leq(d, ">=" if a.strict else ">", a.rhs)
    return cons


def test_models_sound_and_answers_match_oracle():
    rng = random.Random(7)
    for _ in range(120):
        hard = _rand_formula(rng, ["p", "q"], ["x", "y"])
        answers = set()
        for ep in ("off", "decision", "fixpoint"):
            s = _Recording(ep=ep)
            for f in hard:
                s.assert_formula(f)
            ok = s.check_sat()
            answers.add(ok)
            if ok:
                bools, reals = s.model_bools(), s.model_reals()
                assert all(evaluate(f, bools, reals) for f in hard)
            for c in s.conflicts:
                # the negated conflict clause is an infeasible atom conjunction
                lits = [(s.enc.atom_of[l >> 1], bool(l & 1)) for l in c]
                assert not fm_feasible(_fm(lits))
        assert len(answers) == 1
        expected = next(enumerate_models(hard), None) is not None
        assert answers == {expected}


def test_unknown_policy_rejected():
    with pytest.raises(ValueError):
        SmtSolver(ep="sometimes")
