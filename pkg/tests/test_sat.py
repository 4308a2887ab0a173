import itertools
import random

from hypothesis import given, settings, strategies as st

from omtsn.encoders import encode_seq_counter_bidir
from omtsn.sat import CONFLICT, Solver, bcp_closure, luby, read_dimacs, write_dimacs

A, B = 0, 2  # literals of vars 0 and 1


def fresh(n):
    s = Solver()
    for _ in range(n):
        s.new_var()
    return s


def brute_sat(n, clauses, fixed=()):
    for bits in itertools.product((False, True), repeat=n):
        if any(bits[l >> 1] == bool(l & 1) for l in fixed):
            continue
        if all(any(bits[l >> 1] != bool(l & 1) for l in c) for c in clauses):
            return True
    return False


def random_cnf(rng, n, m, k=3):
    return [[2 * v + rng.randint(0, 1) for v in rng.sample(range(n), k)] for _ in range(m)]


def test_unit_clause_enqueued_at_level_zero():
    s = fresh(1)
    assert s.add_clause([A])
    assert s.lit_value(A) == 1 and s.level[0] == 0


def test_complementary_units_conflict():
    s = fresh(1)
    s.add_clause([A])
    assert s.add_clause([A ^ 1]) is False
    assert s.solve() is False


def test_binary_clause_propagation():
    s = fresh(2)
    s.add_clause([A, B])
    s.decide(A ^ 1)
    assert s.propagate() is None
    assert s.lit_value(B) == 1


def test_propagate_fixpoint_idempotent():
    s = fresh(2)
    s.add_clause([A, B])
    trail = list(s.trail)
    assert s.propagate() is None and s.trail == trail


def test_propagate_conflict():
    s = fresh(2)
    s.add_clause([A, B])
    s.add_clause([A, B ^ 1])
    s.decide(A ^ 1)
    assert s.propagate() is not None


def test_assumption_core():
    s = fresh(2)
    s.add_clause([A, B])
    assert s.solve([A ^ 1, B ^ 1]) is False
    assert set(s.core) <= {A ^ 1, B ^ 1} and s.core


def test_empty_formula_sat():
    assert Solver().solve() is True


def test_random_3cnf_agrees_with_truth_table():
    rng = random.Random(2)
    for _ in range(150):
        n = 8
        cnf = random_cnf(rng, n, rng.randint(10, 45))
        s = fresh(n)
        for c in cnf:
            s.add_clause(c)
        res = s.solve()
        assert res == brute_sat(n, cnf)
        if res:
            assert all(any(s.model_value(l) for l in c) for c in cnf)


def test_learned_clauses_are_implied():
    rng = random.Random(4)
    checked = 0
    for _ in range(60):
        n = 8
        cnf = random_cnf(rng, n, 34)
        s = fresh(n)
        for c in cnf:
            s.add_clause(c)
        s.solve()
        for lc in s.learnts:
            # cnf and not(learned) must be unsat
            assert not brute_sat(n, cnf, [l ^ 1 for l in lc.lits])
            checked += 1
    assert checked > 0


def test_cores_are_genuine():
    rng = random.Random(9)
    for _ in range(80):
        n = 8
        cnf = random_cnf(rng, n, 20)
        s = fresh(n)
        for c in cnf:
            s.add_clause(c)
        assume = [2 * v + rng.randint(0, 1) for v in rng.sample(range(n), 4)]
        if not s.solve(assume):
            core = list(s.core)
            assert set(core) <= set(assume)
            assert not brute_sat(n, cnf, core)
            assert s.solve(core) is False


def test_luby_sequence():
    assert [luby(2, i) for i in range(9)] == [1, 1, 2, 1, 1, 2, 4, 1, 1]


def test_dimacs_roundtrip():
    cnf = [[0, 3], [5], [2, 4, 1]]
    n, back, comments = read_dimacs(write_dimacs(3, cnf, ["hello"]))
    assert n == 3 and back == cnf and comments == ["hello"]


def _seq4():
    nxt = iter(range(4, 1000))
    net = encode_seq_counter_bidir([0, 2, 4, 6], lambda: next(nxt))
    return net


def test_seq_counter_bcp_examples():
    net = _seq4()
    a = net.inputs
    b = net.outputs
    cl = bcp_closure(net.clauses, [l ^ 1 for l in a])
    assert all(x ^ 1 in cl for x in b)
    cl = bcp_closure(net.clauses, [a[0], a[1]])
    assert b[0] in cl and b[1] in cl
    cl = bcp_closure(net.clauses, [a[0], b[1] ^ 1])
    assert {a[1] ^ 1, a[2] ^ 1, a[3] ^ 1} <= cl


def test_solver_propagation_matches_bcp_oracle():
    net = _seq4()
    s = Solver()
    s.ensure_vars(1 + max(l >> 1 for c in net.clauses for l in c))
    for c in net.clauses:
        s.add_clause(c)
    s.decide(net.inputs[0])
    assert s.propagate() is None
    s.decide(net.inputs[1])
    assert s.propagate() is None
    ref = bcp_closure(net.clauses, net.inputs[:2])
    assert set(s.trail) == set(ref)


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False))
def test_bcp_closure_monotone(rnd):
    n = 6
    cnf = [[2 * v + rnd.randint(0, 1) for v in rnd.sample(range(n), rnd.randint(1, 3))]
           for _ in range(rnd.randint(3, 12))]
    mu = [2 * v + rnd.randint(0, 1) for v in rnd.sample(range(n), 2)]
    extra = [2 * v + rnd.randint(0, 1) for v in rnd.sample(range(n), 2)]
    mu2 = list(dict.fromkeys(mu + [l for l in extra if l ^ 1 not in mu]))
    c1 = bcp_closure(cnf, mu)
    c2 = bcp_closure(cnf, mu2)
    if c1 is not CONFLICT and c2 is not CONFLICT:
        assert c1 <= c2
    if c1 is CONFLICT:
        assert c2 is CONFLICT
