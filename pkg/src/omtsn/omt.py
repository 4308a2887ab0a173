"""Optimization loops: linear, binary and adaptive search with permanent cuts,
plus lexicographic and max-min combinations of PB objectives."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .encoders import OmtProblem, build_encoding
from .sat import SolverTimeout
from .smt import SmtSolver, gt, le, lt

STRATEGIES = ("linear", "binary", "adaptive")


@dataclass
class SearchConfig:
    strategy: str = "linear"
    encoding: str = "cardnet"
    chunk: int | None = None
    ep: str = "decision"
    seed: int = 0
    timeout: float | None = None  # seconds
    tprop: bool = False
    grouped: bool | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown search strategy {self.strategy!r}")


@dataclass
class OptimizationResult:
    status: str  # Optimal | Unsat | Unbounded | Timeout
    optimum: Fraction | None = None
    bools: dict = field(default_factory=dict)
    reals: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)
    trail: list = field(default_factory=list)  # (ub, conflicts, theory checks) per cut
    attained: bool = True
    lower: Fraction | None = None
    vector: list | None = None  # lexicographic optima

    @property
    def cuts(self) -> int:
        return len(self.trail)


class _Run:
    def __init__(self, problem: OmtProblem, config: SearchConfig, deadline: float | None):
        self.problem = problem
        self.enc = build_encoding(problem, config.encoding, config.chunk, config.grouped)
        self.smt = SmtSolver(self.enc, ep=config.ep, tprop=config.tprop, seed=config.seed)
        self.lhs = ((problem.cost, Fraction(1)),)
        self.smt.objective = self.lhs
        self.deadline = deadline
        self.best: Fraction | None = None
        self.attained = True
        self.bools: dict = {}
        self.reals: dict = {}
        self.trail: list = []
        self.pb_at_first_cut: int | None = None
        self.checks_at_first_cut: int | None = None

    def solve(self, assumptions=()):
        """Sat -> minimized cost (Fraction); Unsat -> None; 'unbounded'."""
        if not self.smt.check_sat(assumptions, self.deadline):
            return None
        mr = self.smt.min_result
        if not mr.bounded:
            return "unbounded"
        ub = mr.value.r
        if self.best is None or ub < self.best:
            self.best = ub
            self.attained = mr.value.d == 0
            self.bools = self.smt.model_bools()
            self.reals = self.smt.model_reals()
        return ub

    def cut_upper(self, ub: Fraction):
        enc = self.enc
        enc.add_clause([enc.lit(lt({self.problem.cost: 1}, ub), "threshold")])
        for l in enc.implied_by_upper(self.lhs, ub):
            enc.add_clause([l])
        st = self.smt.snapshot_stats()
        if self.pb_at_first_cut is None:
            self.pb_at_first_cut = st["pb_conflicts"]
            self.checks_at_first_cut = st["theory_checks"]
        self.trail.append((ub, st["conflicts"], st["theory_checks"]))

    def cut_lower(self, lb: Fraction):
        enc = self.enc
        enc.add_clause([enc.lit(gt({self.problem.cost: 1}, lb), "threshold")])
        for l in enc.implied_by_lower(self.lhs, lb):
            enc.add_clause([l])

    def result(self, status: str, lower=None) -> OptimizationResult:
        st = self.smt.snapshot_stats()
        st["cuts"] = len(self.trail)
        first = self.pb_at_first_cut
        st["pb_conflicts_after_cut"] = st["pb_conflicts"] - first if first is not None else 0
        st["checks_after_cut"] = (st["theory_checks"] - self.checks_at_first_cut
                                  if first is not None else 0)
        if status == "Optimal" and self.best is None:
            status = "Unsat"
        opt = self.best if status in ("Optimal", "Timeout") else None
        return OptimizationResult(status, opt, self.bools, self.reals, st, list(self.trail),
                                  self.attained, lower)


def _deadline(config: SearchConfig):
    if config.timeout is None:
        return None
    return time.monotonic() + config.timeout


def minimize_linear(problem: OmtProblem, config: SearchConfig | None = None) -> OptimizationResult:
    config = config or SearchConfig()
    run = _Run(problem, config, _deadline(config))
    try:
        while True:
            r = run.solve()
            if r is None:
                return run.result("Optimal", run.best)
            if r == "unbounded":
                return run.result("Unbounded")
            run.cut_upper(r)
    except SolverTimeout:
        return run.result("Timeout")


def _use_binary(strategy: str, lb: Fraction, ub: Fraction) -> bool:
    if strategy == "binary":
        return True
    # adaptive: halve while the interval is wide relative to the lower bound
    return lb <= 0 or ub >= 2 * lb


def minimize_binary(problem: OmtProblem, config: SearchConfig | None = None) -> OptimizationResult:
    config = config or SearchConfig(strategy="binary")
    if problem.lower is None:
        raise ValueError("binary search needs a finite lower bound on the cost")
    run = _Run(problem, config, _deadline(config))
    cost = {problem.cost: 1}
    lb, lb_incl = Fraction(problem.lower), True
    try:
        r = run.solve()
        if r is None:
            return run.result("Unsat")
        if r == "unbounded":
            return run.result("Unbounded")
        ub = r
        run.cut_upper(ub)
        while not (lb_incl and ub <= lb):
            if _use_binary(config.strategy, lb, ub):
                pivot = (lb + ub) / 2
                a = run.enc.lit(le(cost, pivot), "threshold")
                r = run.solve([a])
                if r is not None:
                    ub = r
                    run.cut_upper(ub)
                    continue
                if not run.smt.core:
                    break  # no cheaper solution exists at all
                run.cut_lower(pivot)
                lb, lb_incl = pivot, False
            r = run.solve()
            if r is None:
                break
            ub = r
            run.cut_upper(ub)
        return run.result("Optimal", ub)
    except SolverTimeout:
        return run.result("Timeout", lb)


def minimize(problem: OmtProblem, config: SearchConfig | None = None) -> OptimizationResult:
    config = config or SearchConfig()
    if config.strategy == "linear" or problem.lower is None:
        return minimize_linear(problem, config)
    return minimize_binary(problem, config)


def _stages(problem: OmtProblem, stages):
    if stages is not None:
        return list(stages)
    return [(pb.cost, Fraction(0), pb.total) for pb in problem.pbs]


def _sum_stats(res, stages):
    res.stats = dict(res.stats)
    res.stats["stages"] = len(stages)
    for k in ("theory_checks", "conflicts", "decisions", "propagations", "learned",
              "theory_conflicts", "pb_conflicts", "cuts"):
        res.stats[k] = sum(s.get(k, 0) for s in stages)


def optimize_lexicographic(problem: OmtProblem, config: SearchConfig | None = None,
                           stages=None) -> OptimizationResult:
    """Minimize the stage costs in order, fixing each optimum before the next.

    ``stages`` is a list of ``(cost var, lower, upper)``; by default one per PB
    objective of ``problem``."""
    config = config or SearchConfig()
    stages = _stages(problem, stages)
    if not stages:
        raise ValueError("lexicographic optimization needs at least one objective")
    fixed = dict(problem.fixed)
    vector, stats = [], []
    res = None
    for i, (cost, lo, hi) in enumerate(stages):
        stage = replace(problem, cost=cost, fixed=dict(fixed), lower=lo, upper=hi, kind="lex")
        res = minimize(stage, config)
        stats.append(res.stats)
        if res.status != "Optimal":
            if res.status == "Unsat" and vector:
                raise RuntimeError("later lexicographic stage became unsat")
            if res.status == "Timeout" and res.optimum is not None:
                vector.append(res.optimum)
            res.vector = vector or None
            _sum_stats(res, stats)
            return res
        if not res.attained and i + 1 < len(stages):
            raise ValueError(f"lexicographic stage {cost} has a non-attained infimum")
        vector.append(res.optimum)
        fixed[cost] = res.optimum
    res.vector = vector
    _sum_stats(res, stats)
    return res


def optimize_box(problem: OmtProblem, config: SearchConfig | None = None,
                 stages=None) -> OptimizationResult:
    """Minimize every stage cost independently; the model is the last stage's."""
    config = config or SearchConfig()
    stages = _stages(problem, stages)
    vector, stats, res = [], [], None
    for cost, lo, hi in stages:
        res = minimize(replace(problem, cost=cost, lower=lo, upper=hi), config)
        stats.append(res.stats)
        vector.append(res.optimum if res.status in ("Optimal", "Timeout") else None)
        if res.status != "Optimal":
            break
    res.vector = vector
    _sum_stats(res, stats)
    return res


def maxmin_problem(problem: OmtProblem, name: str = "#maxmin") -> tuple[OmtProblem, list]:
    """Normalize each PB objective by its range and bound it by a fresh cost."""
    defs = list(problem.defs)
    parents = dict(problem.parents)
    dropped = []
    for pb in problem.pbs:
        R = pb.total
        if R == 0:
            dropped.append(pb.cost)
            continue
        defs.append((le({pb.cost: 1 / R, name: -1}, 0), "objective"))
        parents[pb.cost] = (name, 1 / R)
    defs.append((le({name: -1}, 0), "objective"))  # M >= 0
    out = replace(problem, cost=name, defs=defs, parents=parents, kind="maxmin",
                  lower=Fraction(0), upper=Fraction(1))
    return out, dropped


def optimize_maxmin(problem: OmtProblem, config: SearchConfig | None = None) -> OptimizationResult:
    mm, dropped = maxmin_problem(problem)
    res = minimize(mm, config)
    res.stats = dict(res.stats)
    res.stats["dropped_objectives"] = len(dropped)
    return res


__all__ = ["SearchConfig", "OptimizationResult", "minimize", "minimize_linear",
           "minimize_binary", "optimize_lexicographic", "optimize_box", "optimize_maxmin",
           "maxmin_problem", "STRATEGIES"]
