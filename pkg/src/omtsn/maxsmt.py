"""Core-guided weighted MaxSMT (WPM1 style) on the DPLL(T) kernel, and a
cross-check that runs every engine configuration on one instance."""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .encoders import NETWORK_KINDS, SoftClause, encode_cardinality_network, maxsmt_to_omt
from .omt import STRATEGIES, OptimizationResult, SearchConfig, minimize
from .sat import SolverTimeout
from .smt import TIER_AUX, TIER_BOOL, Encoding, SmtSolver


@dataclass
class _Soft:
    clause: list  # literals (the original clause literal plus relaxation lits)
    weight: Fraction
    assume: int   # assumption literal


def _at_most_one(enc: Encoding, lits: list[int]):
    """AtMostOne through a bidirectional cardinality network with B_2 fixed false."""
    if len(lits) < 2:
        return
    net = encode_cardinality_network(lits, lambda: enc.new_var(TIER_AUX), enc.true_lit() ^ 1)
    for c in net.clauses:
        enc.add_clause(c)
    enc.add_clause([net.outputs[1] ^ 1])


def solve_core_guided(hard: Sequence, softs: Sequence[SoftClause], *, ep: str = "decision",
                      timeout: float | None = None, minimize_cores: bool = True) -> OptimizationResult:
    deadline = None if timeout is None else time.monotonic() + timeout
    enc = Encoding()
    for f in hard:
        enc.assert_formula(f)
    smt = SmtSolver(enc, ep=ep)
    lb = Fraction(0)
    stats = {"rounds": 0, "core_sizes": [], "lower_bounds": [Fraction(0)]}

    def result(status, opt=None, bools=None, reals=None):
        st = smt.snapshot_stats()
        st["rounds"] = stats["rounds"]
        st["core_sizes"] = list(stats["core_sizes"])
        st["lower_bounds"] = list(stats["lower_bounds"])
        return OptimizationResult(status, opt, bools or {}, reals or {}, st, [], True, lb)

    def mk_soft(clause, weight):
        a = 2 * enc.new_var(TIER_BOOL)
        enc.add_clause([a ^ 1] + clause)
        return _Soft(clause, weight, a)

    try:
        if not smt.check_sat(deadline=deadline):
            return result("Unsat")
        work = [mk_soft([enc.lit(s.clause)], s.weight) for s in softs]
        while True:
            by_assume = {s.assume: i for i, s in enumerate(work)}
            assumptions = [s.assume for s in work]
            if smt.check_sat(assumptions, deadline):
                return result("Optimal", lb, smt.model_bools(), smt.model_reals())
            core = [by_assume[l] for l in smt.core if l in by_assume]
            if not core:
                return result("Unsat")
            if minimize_cores and len(core) <= 8:
                core = _shrink(smt, work, core, deadline)
            stats["rounds"] += 1
            stats["core_sizes"].append(len(core))
            wmin = min(work[i].weight for i in core)
            lb += wmin
            stats["lower_bounds"].append(lb)
            relax = []
            members = set(core)
            nxt = []
            for i, s in enumerate(work):
                if i not in members:
                    nxt.append(s)
                    continue
                if s.weight > wmin:
                    nxt.append(mk_soft(list(s.clause), s.weight - wmin))
                r = 2 * enc.new_var(TIER_BOOL)
                relax.append(r)
                nxt.append(mk_soft(s.clause + [r], wmin))
            _at_most_one(enc, relax)
            work = nxt
    except SolverTimeout:
        return result("Timeout")


def _shrink(smt: SmtSolver, work, core, deadline):
    """Greedy drop-one core minimization."""
    keep = list(core)
    i = 0
    while i < len(keep):
        trial = keep[:i] + keep[i + 1:]
        if trial and not smt.check_sat([work[j].assume for j in trial], deadline):
            idx = {work[j].assume: j for j in trial}
            keep = [idx[l] for l in smt.core if l in idx] or trial
            keep = sorted(set(keep), key=trial.index)
        else:
            i += 1
    return keep


def cross_check(hard: Sequence, softs: Sequence[SoftClause], *, encodings=NETWORK_KINDS,
                strategies=STRATEGIES, chunks=(None,), ep: str = "decision",
                timeout: float | None = None) -> dict:
    """Run the OMT lane under several configurations plus the core-guided lane."""
    problem = maxsmt_to_omt(hard, softs)
    lanes = {}
    for enc in encodings:
        for st in strategies:
            for ch in chunks:
                cfg = SearchConfig(strategy=st, encoding=enc, chunk=ch, ep=ep, timeout=timeout)
                r = minimize(problem, cfg)
                name = f"omt/{enc}/{st}/{'inf' if ch is None else ch}"
                lanes[name] = r
    lanes["maxsat/core-guided"] = solve_core_guided(hard, softs, ep=ep, timeout=timeout)
    summary = {k: (r.status, r.optimum) for k, r in lanes.items()}
    if any(r.status == "Timeout" for r in lanes.values()):
        verdict = "partial"
    elif len(set(summary.values())) == 1:
        verdict = "all-equal"
    else:
        verdict = "mismatch"
    report = {"verdict": verdict, "results": summary, "lanes": lanes}
    if verdict == "mismatch":
        ref = next(iter(summary.values()))
        report["diff"] = {k: v for k, v in summary.items() if v != ref}
    return report
