from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from omtsn.cli import main
from omtsn.encoders import maxsmt_to_omt
from omtsn.frontend import (BenchConfig, Instance, ParseError, Refuted, SortError,
                            UnknownSymbolError, Verified, from_script, generate_instances,
                            instance_text, mutants, parse, print_script, run_bench,
                            solve_instance, strip_timing, verify)
from omtsn.frontend.parser import Script
from omtsn.omt import SearchConfig
from omtsn.smt import And, Not, Or, evaluate, rel, var

F = Fraction
DECL = "(declare-fun A1 () Bool)(declare-fun A2 () Bool)(declare-fun x () Real)(declare-fun y () Real)\n"


def test_assert_soft_maps_to_soft_clause():
    inst = from_script(parse(DECL + "(assert-soft (not A1) :weight 1/3 :id g)"))
    (o,) = inst.objectives
    (s,) = o.softs
    assert (s.clause, s.weight, s.id, o.id) == (Not(var("A1")), F(1, 3), "g", "g")


def test_minimize_is_a_linear_objective():
    inst = from_script(parse(DECL + "(minimize (+ x y))"))
    (o,) = inst.objectives
    assert o.term == ((("x", F(1)), ("y", F(1))), F(0)) and not o.maximize


def test_roundtrip_example():
    sc = parse(DECL + "(assert (or A1 (<= x 1)))")
    assert parse(print_script(sc)).commands == sc.commands
    assert sc.commands[-1] == ("assert", Or(var("A1"), rel("<=", {"x": 1}, 1)))


def test_term_forms():
    sc = parse(DECL + "(assert (<= (+ (* 2 x) (* x 3) (- y) (/ x 2) 0.5) (- 1)))")
    f = sc.commands[-1][1]
    assert f == rel("<=", {"x": F(11, 2), "y": -1}, F(-3, 2))
    sc = parse(DECL + "(assert (=> A1 A2 (= x y)))(assert (= A1 A2))")
    assert len(sc.commands) == 6


def test_ids_group_and_default():
    inst = from_script(parse(DECL + "(assert-soft A1 :weight 2)(assert-soft A2)"
                                    "(assert-soft A1 :id k)(assert-soft x2 :id k)".replace(" x2", " A2")))
    assert [o.id for o in inst.objectives] == ["I", "k"]
    assert inst.objectives[0].total == 3


@pytest.mark.parametrize("text,exc,pos", [
    ("(assert (or A1", ParseError, (2, 9)),
    (")", ParseError, (2, 1)),
    ("(assert (<= A1 1))", SortError, (2, 13)),
    ("(assert (or A1 x))", SortError, (2, 16)),
    ("(assert (or A1 B))", UnknownSymbolError, (2, 16)),
    ("(assert (foo A1))", UnknownSymbolError, (2, 10)),
    ("(frobnicate)", UnknownSymbolError, (2, 2)),
    ("(assert (<= (* x y) 1))", SortError, (2, 13)),
])
def test_errors_are_distinct_and_located(text, exc, pos):
    with pytest.raises(exc) as ei:
        parse(DECL + text)
    assert (ei.value.line, ei.value.col) == pos
    assert type(ei.value) is exc


def test_negative_weight_rejected():
    with pytest.raises(ParseError):
        parse(DECL + "(assert-soft A1 :weight 0)")


# -- parse . print = id -------------------------------------------------------

names_b = st.sampled_from(["A1", "A2", "p"])
names_r = st.sampled_from(["x", "y", "z"])
coef = st.fractions(min_value=-5, max_value=5, max_denominator=4).filter(lambda c: c != 0)


@st.composite
def atoms(draw):
    co = draw(st.dictionaries(names_r, coef, min_size=1, max_size=3))
    op = draw(st.sampled_from(["<=", "<", ">=", ">", "="]))
    return rel(op, co, draw(st.fractions(min_value=-9, max_value=9, max_denominator=5)))


formulas = st.recursive(
    st.one_of(names_b.map(var), atoms()),
    lambda sub: st.one_of(sub.map(Not), st.lists(sub, min_size=2, max_size=3).map(lambda fs: And(*fs)),
                          st.lists(sub, min_size=2, max_size=3).map(lambda fs: Or(*fs))),
    max_leaves=6)


@settings(max_examples=150, deadline=None)
@given(st.lists(formulas, min_size=1, max_size=4),
       st.lists(st.tuples(formulas, st.fractions(min_value=F(1, 9), max_value=9, max_denominator=9),
                          st.sampled_from([None, "g", "I"])), max_size=3),
       st.lists(st.tuples(st.dictionaries(names_r, coef, max_size=2),
                          st.fractions(min_value=-3, max_value=3, max_denominator=2),
                          st.booleans()), max_size=2))
def test_parse_print_identity(hard, softs, objs):
    cmds = [("declare-fun", n, "Bool") for n in ("A1", "A2", "p")]
    cmds += [("declare-fun", n, "Real") for n in ("x", "y", "z")]
    cmds += [("assert", f) for f in hard]
    cmds += [("assert-soft", f, w, i) for f, w, i in softs]
    for co, k, mx in objs:
        cmds.append(("maximize" if mx else "minimize", (tuple(sorted(co.items())), k)))
    cmds += [("set-option", ":opt.priority", "box"), ("check-sat",), ("get-objectives",)]
    sc = Script(cmds)
    assert parse(print_script(sc)).commands == sc.commands


# -- generators -------------------------------------------------------------------

def test_weight1_contract():
    (inst,) = generate_instances("weight1", 1, seed=7, n=8)
    (o,) = inst.objectives
    assert len(o.softs) == 8 and all(s.weight == 1 for s in o.softs)
    reals = {n for n, s in inst.sorts().items() if s == "Real"}
    assert reals == {"y0", "y1"}
    three = [f for f in inst.hard if f[0] == "or" and len(f[1]) == 3]
    assert len(three) >= 1


def test_example1_is_the_four_indicator_sum():
    (inst,) = generate_instances("example1", 1, seed=0, n=4)
    p = maxsmt_to_omt(inst.hard, inst.objectives[0].softs)
    terms = p.pbs[0].terms
    assert [t.ind for t in terms] == ["A1", "A2", "A3", "A4"]
    assert all(t.weight == 1 for t in terms)


def test_generators_deterministic():
    for fam in ("maxsmt", "lex-pb", "weight1", "maxmin", "example1"):
        a = [instance_text(i) for i in generate_instances(fam, 3, seed=5)]
        b = [instance_text(i) for i in generate_instances(fam, 3, seed=5)]
        c = [instance_text(i) for i in generate_instances(fam, 3, seed=6)]
        assert a == b and a != c
        for t in a:
            assert instance_text(from_script(t)) == t
    m1 = generate_instances("lmt-mixed", 2, seed=1)
    m2 = generate_instances("lmt-mixed", 2, seed=1)
    assert [i.mixed for i in m1] == [i.mixed for i in m2]


# -- verification ------------------------------------------------------------------

def _solved(family, count, seed, **kw):
    out = []
    for inst in generate_instances(family, count, seed=seed, **kw):
        r = solve_instance(inst, SearchConfig())
        if r.status == "Optimal":
            out.append((inst, r))
    return out


def test_verify_accepts_optimal_results():
    for fam in ("maxsmt", "lex-pb", "maxmin", "lmt-mixed", "weight1"):
        for inst, r in _solved(fam, 6, 2):
            assert verify(inst, r) == Verified()


def test_verify_refutes_tampered_optimum():
    inst, r = _solved("maxsmt", 5, 1)[0]
    for name, m in mutants(r):
        if name.startswith("value"):
            v = verify(inst, m)
            assert isinstance(v, Refuted) and v.check in ("b", "c")


def test_verify_names_violated_clause():
    for inst, r in _solved("maxsmt", 20, 3):
        for name, m in mutants(r):
            if name.startswith("flip") and not all(evaluate(f, m.bools, m.reals) for f in inst.hard):
                v = verify(inst, m)
                assert v.check == "a" and "hard assertion violated" in v.reason
                return
    pytest.fail("no hard-violating flip found")


def test_verify_check_c_finds_improvement():
    # a consistent but suboptimal claim passes (a) and (b) and must fail (c)
    for inst, r in _solved("weight1", 10, 4):
        if r.optimum == 0:
            continue
        for name, m in mutants(r):
            if not name.startswith("flip"):
                continue
            if all(evaluate(f, m.bools, m.reals) for f in inst.hard):
                cost = sum(s.weight for s in inst.objectives[0].softs
                           if not evaluate(s.clause, m.bools, m.reals))
                if cost > r.optimum:
                    m.values = [cost]
                    v = verify(inst, m)
                    assert v.check == "c"
                    return
    pytest.fail("no suboptimal feasible flip found")


def test_verify_rejects_non_optimal_status():
    inst = generate_instances("example1", 1, seed=3, n=40)[0]
    r = solve_instance(inst, SearchConfig(encoding="none", timeout=0.001))
    assert r.status == "Timeout" and not verify(inst, r).ok


# -- bench -------------------------------------------------------------------------------

def test_bench_rows_and_summary():
    insts = generate_instances("maxsmt", 10, seed=9, n_soft=5)
    cfgs = [BenchConfig("omt", e) for e in ("none", "seqcounter", "cardnet")]
    rows, text = run_bench(insts, cfgs)
    assert len(rows) == 30
    body, summary = text.split("\n\n")
    assert len(body.splitlines()) == 31
    lines = summary.strip().splitlines()
    assert len(lines) == 4 and lines[0].startswith("# config")
    assert all(l.endswith(",0") for l in lines[1:])


def test_bench_error_row_and_timeout_row():
    mixed = generate_instances("lmt-mixed", 1, seed=0)
    hard = generate_instances("example1", 1, seed=2, n=40)
    rows, text = run_bench(mixed + hard, [BenchConfig("maxsat", "-", "-"),
                                          BenchConfig("omt", "none")], timeout=0.001)
    assert rows[0]["status"] == "Error"
    to = [r for r in rows if r["instance"] == hard[0].name and r["engine"] == "omt"][0]
    assert to["status"] == "Timeout" and F(to["best_bound"]) > 0


def test_bench_parallel_matches_sequential():
    insts = generate_instances("weight1", 3, seed=1, n=6)
    cfgs = [BenchConfig("omt", "cardnet", "binary"), BenchConfig("maxsat", "-", "-")]
    _, a = run_bench(insts, cfgs, parallelism=1)
    _, b = run_bench(insts, cfgs, parallelism=2)
    assert strip_timing(a) == strip_timing(b)


# -- CLI -----------------------------------------------------------------------------------

def test_cli_exit_codes(tmp_path, capsys):
    f = tmp_path / "a.smt2"
    f.write_text(DECL + "(assert (or A1 A2))(assert-soft (not A1) :weight 1/3)"
                        "(assert-soft (not A2) :weight 2/3)(check-sat)(get-objectives)(get-model)")
    assert main([str(f), "--verify", "--encoding", "seqcounter", "--search", "binary"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("sat") and "(objectives (I (/ 1 3)))" in out
    assert "(define-fun A1 () Bool true)" in out
    u = tmp_path / "u.smt2"
    u.write_text(DECL + "(assert A1)(assert (not A1))(assert-soft A2)(check-sat)")
    assert main([str(u)]) == 20
    b = tmp_path / "b.smt2"
    b.write_text(DECL + "(assert (or A1 A2)")
    assert main([str(b)]) == 1
    assert "error: 2:1" in capsys.readouterr().err
    assert main([str(f), "--chunk", "1"]) == 1
    assert main([str(f), "--engine", "maxsat", "--stats"]) == 0


def test_cli_timeout_and_dimacs(tmp_path, capsys):
    (inst,) = generate_instances("example1", 1, seed=2, n=40)
    f = tmp_path / "e.smt2"
    f.write_text(instance_text(inst))
    assert main([str(f), "--encoding", "none", "--timeout", "1"]) == 30
    d = tmp_path / "net.cnf"
    assert main([str(f), "--encoding", "cardnet", "--chunk", "8", "--timeout", "1",
                 "--dimacs-out", str(d)]) == 30
    text = d.read_text()
    assert "c inputs:" in text and "c outputs:" in text
    assert main(["netcheck", "--dimacs", str(d)]) == 0
    assert main(["netcheck", "--kind", "seqcounter", "--n", "3"]) == 0
    capsys.readouterr()


def test_cli_gen_and_bench(tmp_path, capsys):
    assert main(["gen", "weight1", "--count", "2", "--seed", "3", "--out", str(tmp_path)]) == 0
    assert len(list(tmp_path.glob("*.smt2"))) == 2
    out = tmp_path / "b.csv"
    assert main(["bench", "--family", "maxsmt", "--count", "2", "--n", "4",
                 "--encodings", "none,cardnet", "--out", str(out)]) == 0
    assert out.read_text().startswith("instance,engine")
