"""Map an :class:`Instance` onto the OMT and core-guided engines."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from fractions import Fraction

from ..encoders import OmtProblem, build_mixed_objective, maxsmt_to_omt, pb_term_defs
from ..maxsmt import solve_core_guided
from ..omt import (OptimizationResult, SearchConfig, minimize, optimize_box,
                   optimize_lexicographic, optimize_maxmin)
from ..sat import SolverTimeout
from ..smt import Encoding, SmtSolver, eq
from .instances import Instance
from .parser import FrontendError

ENGINES = ("omt", "maxsat")


@dataclass
class Stage:
    cost: str          # internal cost variable (minimized)
    lower: Fraction | None
    upper: Fraction | None
    sign: int = 1      # user value = sign * internal value


@dataclass
class Outcome:
    status: str
    names: list                 # objective names, parallel to values
    values: list                # user-facing objective values (None if unknown)
    bools: dict = field(default_factory=dict)
    reals: dict = field(default_factory=dict)
    attained: bool = True
    stats: dict = field(default_factory=dict)
    raw: OptimizationResult | None = None
    bound: Fraction | None = None  # incumbent cost of the first stage (internal sense)

    @property
    def optimum(self):
        return self.values[0] if len(self.values) == 1 else None


def _linear_stage(term, maximize, name):
    coeffs, const = term
    s = -1 if maximize else 1
    d = {name: Fraction(1)}
    for n, c in coeffs:
        d[n] = d.get(n, 0) - s * c
    return (eq(d, s * const), "objective"), Stage(name, None, None, s)


def build_problem(inst: Instance) -> tuple[OmtProblem, list[Stage]]:
    """One OMT problem carrying every objective, plus the stage list in order."""
    if inst.mixed is not None:
        p = build_mixed_objective(inst.mixed, inst.hard)
        sign = -1 if inst.mixed.maximize else 1
        return p, [Stage(p.cost, p.lower, p.upper, sign)]
    if not inst.objectives:
        raise FrontendError("instance has no objective")
    hard, pbs, defs, stages, softs = list(inst.hard), [], [], [], []
    single = len(inst.objectives) == 1
    for j, o in enumerate(inst.objectives):
        if o.is_soft:
            prefix = "#" if single else f"#{j}."
            p = maxsmt_to_omt([], o.softs, prefix)
            hard += p.hard
            pbs += p.pbs
            softs += o.softs
            stages.append(Stage(p.cost, Fraction(0), p.upper))
        else:
            d, st = _linear_stage(o.term, o.maximize, f"#obj{j}")
            defs.append(d)
            stages.append(st)
    first = stages[0]
    kind = "pb" if all(o.is_soft for o in inst.objectives) else "mixed"
    problem = OmtProblem(hard, first.cost, pbs, defs, kind=kind, lower=first.lower,
                         upper=first.upper, softs=softs)
    return problem, stages


def _user_model(inst: Instance, bools: dict, reals: dict):
    b, r = {}, {}
    for n, s in inst.sorts().items():
        if s == "Bool":
            b[n] = bool(bools.get(n, False))
        else:
            r[n] = Fraction(reals.get(n, 0))
    return b, r


def _names(inst: Instance) -> list[str]:
    if inst.mixed is not None:
        return ["mixed"]
    if len(inst.objectives) > 1 and inst.priority == "maxmin":
        return ["maxmin"]
    return [o.id for o in inst.objectives]


def solve_instance(inst: Instance, config: SearchConfig | None = None,
                   engine: str = "omt") -> Outcome:
    config = config or SearchConfig()
    if engine not in ENGINES:
        raise FrontendError(f"unknown engine {engine!r}")
    if inst.mixed is None and not inst.objectives:
        return _solve_plain(inst, config)
    if engine == "maxsat":
        return _solve_maxsat(inst, config)
    problem, stages = build_problem(inst)
    multi = len(stages) > 1
    names = _names(inst)
    if not multi:
        st = stages[0]
        res = minimize(replace(problem, cost=st.cost, lower=st.lower, upper=st.upper), config)
        vals = [None if res.optimum is None else st.sign * res.optimum]
    elif inst.priority == "maxmin":
        if not all(o.is_soft for o in inst.objectives):
            raise FrontendError("max-min combination needs soft objectives")
        res = optimize_maxmin(problem, config)
        vals = [res.optimum]
    else:
        raw = [(s.cost, s.lower, s.upper) for s in stages]
        fn = optimize_lexicographic if inst.priority == "lex" else optimize_box
        res = fn(problem, config, raw)
        vec = list(res.vector or [])
        vals = [None if i >= len(vec) or vec[i] is None else s.sign * vec[i]
                for i, s in enumerate(stages)]
    b, r = _user_model(inst, res.bools, res.reals)
    return Outcome(res.status, names, vals, b, r, res.attained, res.stats, res, res.optimum)


def _solve_plain(inst: Instance, config: SearchConfig) -> Outcome:
    enc = Encoding()
    for f in inst.hard:
        enc.assert_formula(f)
    smt = SmtSolver(enc, ep=config.ep, tprop=config.tprop, seed=config.seed)
    deadline = None if config.timeout is None else time.monotonic() + config.timeout
    try:
        sat = smt.check_sat(deadline=deadline)
    except SolverTimeout:
        return Outcome("Timeout", [], [], stats=smt.snapshot_stats())
    if not sat:
        return Outcome("Unsat", [], [], stats=smt.snapshot_stats())
    b, r = _user_model(inst, smt.model_bools(), smt.model_reals())
    return Outcome("Sat", [], [], b, r, True, smt.snapshot_stats())


def _solve_maxsat(inst: Instance, config: SearchConfig) -> Outcome:
    if inst.mixed is not None or not inst.objectives or not all(o.is_soft for o in inst.objectives):
        raise FrontendError("the maxsat engine handles soft-clause objectives only")
    if len(inst.objectives) > 1 and inst.priority != "lex":
        raise FrontendError("the maxsat engine supports lexicographic priority only")
    deadline = None if config.timeout is None else time.monotonic() + config.timeout
    hard = list(inst.hard)
    vals, stats, res = [], {}, None
    for j, o in enumerate(inst.objectives):
        left = None if deadline is None else max(0.0, deadline - time.monotonic())
        res = solve_core_guided(hard, o.softs, ep=config.ep, timeout=left)
        for k, v in res.stats.items():
            if isinstance(v, int):
                stats[k] = stats.get(k, 0) + v
        if res.status != "Optimal":
            break
        vals.append(res.optimum)
        # fix this objective at its optimum for the next stage
        p = maxsmt_to_omt([], o.softs, f"#{j}.")
        hard += p.hard
        xs = {p.cost: Fraction(1)}
        for t in p.pbs[0].terms:
            hard += [f for f, _ in pb_term_defs(t)]
            xs[t.x] = xs.get(t.x, 0) - 1
        hard += [eq(xs, 0), eq({p.cost: 1}, res.optimum)]
    vals += [None] * (len(inst.objectives) - len(vals))
    b, r = _user_model(inst, res.bools, res.reals)
    return Outcome(res.status, _names(inst), vals, b, r, True, stats, res, res.optimum)
