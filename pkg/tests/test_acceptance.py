"""Acceptance gate: each test prints one PASS/FAIL line (collected in the
terminal summary under "acceptance")."""

import math
import statistics
from dataclasses import replace
from fractions import Fraction

import pytest

from omtsn.encoders import check_bidirectional, standalone_network
from omtsn.frontend import (build_problem, config_matrix, generate_instances, mutants,
                            run_bench, solve_instance, strip_timing, verify)
from omtsn.frontend.verify import maxmin_value
from omtsn.omt import SearchConfig, minimize
from oracles import brute_force_maxsmt, eval_concrete, multi_objective_oracle

F = Fraction
KINDS = ("seqcounter", "cardnet")
DOUBLE_08 = F(1799972218749879, 2251799813685248)


def _search_config(cfg, **kw):
    if cfg.engine == "maxsat":
        return SearchConfig(encoding="none", ep=cfg.ep, **kw)
    return SearchConfig(strategy=cfg.search, encoding=cfg.encoding, chunk=cfg.chunk, ep=cfg.ep, **kw)


def _maxsmt_suite():
    return generate_instances("maxsmt", 500, seed=2024)


def _multi_suite():
    return generate_instances("lex-pb", 100, seed=2024)


def test_1_bidirectional_exhaustive(report):
    bad = {}
    for kind in KINDS:
        for n in range(1, 6):
            net, _ = standalone_network(kind, n)
            v = check_bidirectional(net.clauses, net.inputs, net.outputs)
            if v:
                bad[(kind, n)] = v[:3]
    assert report(1, not bad, f"bidirectional propagation over n=1..5, both kinds; violations={bad or 0}")


def test_2_oracle_equivalence(report):
    insts = _maxsmt_suite()
    assert max(len(i.objectives[0].softs) for i in insts) <= 12
    assert all(len({n for n, s in i.sorts().items() if s == "Real"}) <= 4 for i in insts)
    assert any(s.weight == DOUBLE_08 for i in insts for s in i.objectives[0].softs)
    cfgs = config_matrix()
    assert len(cfgs) == 19
    wrong = []
    for inst in insts:
        ref = brute_force_maxsmt(inst.hard, [(s.clause, s.weight) for s in inst.objectives[0].softs])
        for cfg in cfgs:
            out = solve_instance(inst, _search_config(cfg), cfg.engine)
            got = out.optimum if out.status == "Optimal" else ("unsat" if out.status == "Unsat" else out.status)
            if got != (ref if ref is not None else "unsat"):
                wrong.append((inst.name, cfg.label, got, ref))
    assert report(2, not wrong, f"{len(insts)} instances x {len(cfgs)} configs; mismatches={len(wrong)} {wrong[:3]}")


def test_3_trace_checks(report):
    issues = []
    for n in range(4, 17):
        (inst,) = generate_instances("example1", 1, seed=0, n=n)
        p, _ = build_problem(inst)
        for kind in KINDS:
            st = minimize(p, SearchConfig(encoding=kind)).stats
            if st["cuts"] < 1 or st["pb_conflicts_after_cut"] != 0:
                issues.append((n, kind, st["pb_conflicts_after_cut"]))
        st = minimize(p, SearchConfig(encoding="none")).stats
        if st["pb_conflicts_after_cut"] < 1:
            issues.append((n, "none", st["pb_conflicts_after_cut"]))
    assert report(3, not issues, f"n=4..16 network 0 / none >=1 indicator-threshold conflicts after cut; issues={issues}")


def test_4_encoding_size_growth(report):
    ns = (8, 16, 32, 64)
    seq = [len(standalone_network("seqcounter", n)[0].clauses) for n in ns]
    # least squares in log space: log count = log c + 2 log n
    c = math.exp(statistics.fmean(math.log(k) - 2 * math.log(n) for k, n in zip(seq, ns)))
    dev = max(abs(k / (c * n * n) - 1) for k, n in zip(seq, ns))
    card = [len(standalone_network("cardnet", n)[0].clauses) for n in ns]
    cs = [k / (n * math.log2(n) ** 2) for k, n in zip(card, ns)]
    spread = max(cs) / min(cs)
    ok = dev <= 0.05 and spread < 2
    assert report(4, ok, f"seqcounter c={c:.3f} max dev={dev:.2%}; cardnet c spread={spread:.2f}x")


def test_5_lex_and_maxmin(report):
    wrong = []
    for inst in _multi_suite():
        assert len(inst.objectives) <= 3 and all(len(o.softs) <= 8 for o in inst.objectives)
        ref = multi_objective_oracle(inst.hard, [[(s.clause, s.weight) for s in o.softs]
                                                 for o in inst.objectives])
        lex = solve_instance(inst, SearchConfig())
        mm = solve_instance(replace(inst, priority="maxmin"), SearchConfig())
        if ref is None:
            if lex.status != "Unsat" or mm.status != "Unsat":
                wrong.append((inst.name, lex.status, mm.status))
            continue
        if lex.status != "Optimal" or lex.values != ref[0]:
            wrong.append((inst.name, "lex", lex.values, ref[0]))
        if mm.status != "Optimal" or mm.values != [ref[1]]:
            wrong.append((inst.name, "maxmin", mm.values, ref[1]))
    assert report(5, not wrong, f"100 instances, lex and max-min vs brute force; mismatches={len(wrong)} {wrong[:3]}")


def _benign(inst, m):
    """A flipped model that is still feasible and attains the claims is no fault."""
    if not all(eval_concrete(f, m.bools, m.reals) for f in inst.hard):
        return False
    vals = [sum((s.weight for s in o.softs if not eval_concrete(s.clause, m.bools, m.reals)), F(0))
            for o in inst.objectives]
    if inst.priority == "maxmin" and len(inst.objectives) > 1:
        vals = [maxmin_value(inst, vals)]
    return vals == m.values


def test_6_verifier_soundness(report):
    suite = [(i, solve_instance(i, SearchConfig())) for i in _maxsmt_suite()]
    for i in _multi_suite():
        suite.append((i, solve_instance(i, SearchConfig())))
        mi = replace(i, priority="maxmin")
        suite.append((mi, solve_instance(mi, SearchConfig())))
    optimal = [(i, o) for i, o in suite if o.status == "Optimal"]
    rejected = [i.name for i, o in optimal if not verify(i, o).ok]
    total = missed = benign = 0
    for inst, out in optimal:
        for name, m in mutants(out):
            if name.startswith("flip") and _benign(inst, m):
                benign += 1
                continue
            total += 1
            if verify(inst, m).ok:
                missed += 1
    ok = not rejected and missed == 0 and total > 0
    assert report(6, ok, f"{len(optimal)} Optimal results confirmed (rejected={len(rejected)}); "
                         f"{total - missed}/{total} mutants refuted ({benign} benign flips excluded)")


def test_7_bench_determinism(report):
    insts = (generate_instances("maxsmt", 8, seed=7) + generate_instances("lex-pb", 4, seed=7)
             + generate_instances("weight1", 4, seed=7, n=6) + generate_instances("example1", 4, seed=7, n=6))
    _, a = run_bench(insts, config_matrix(), seed=7)
    _, b = run_bench(insts, config_matrix(), seed=7, parallelism=2)
    same = strip_timing(a) == strip_timing(b)
    assert report(7, same, f"{len(insts)} instances x 19 configs, two runs identical apart from timing")


@pytest.mark.slow
def test_8_scaled_performance_direction(report):
    ratios = []
    for seed in range(20):
        (inst,) = generate_instances("example1", 1, seed=seed, n=16)
        p, _ = build_problem(inst)
        base = minimize(p, SearchConfig(encoding="none", ep="decision"))
        net = minimize(p, SearchConfig(encoding="cardnet", ep="decision"))
        assert base.optimum == net.optimum
        ratios.append(net.stats["theory_checks"] / base.stats["theory_checks"])
    med = statistics.median(ratios)
    assert report(8, med <= 0.5, f"median theory_checks cardnet/none = {med:.3f} over 20 seeds (n=16)")
