"""Independent re-checking of Optimal results.

(a) the model satisfies every hard assertion, (b) the objectives evaluated on
the model equal the claimed optima, (c) a fresh solver finds no model of
hard plus a strictly better objective.
"""

from __future__ import annotations

import copy
import time
from dataclasses import dataclass, replace
from fractions import Fraction

from ..encoders import build_encoding
from ..omt import maxmin_problem
from ..sat import SolverTimeout
from ..smt import SmtSolver, evaluate, linear_value, lt
from .driver import Outcome, build_problem
from .instances import Instance
from .parser import print_formula


@dataclass
class Verified:
    ok = True


@dataclass
class Refuted:
    reason: str
    check: str = ""
    ok = False


def objective_values(inst: Instance, bools: dict, reals: dict) -> list[Fraction]:
    """User-facing objective values of a model, evaluated from the source formulas."""
    def holds(f):
        return evaluate(f, bools, reals)

    if inst.mixed is not None:
        m = inst.mixed
        cover = sum((Fraction(w) for w, f in m.a_terms if holds(f)), Fraction(0))
        b = sum((Fraction(w) for w, f in m.b_terms if holds(f)), Fraction(0))
        c = sum((Fraction(w) for w, f in m.c_terms if holds(f)), Fraction(0))
        return [b + cover - c - abs(Fraction(m.K) - cover)]
    out = []
    for o in inst.objectives:
        if o.is_soft:
            out.append(sum((s.weight for s in o.softs if not holds(s.clause)), Fraction(0)))
        else:
            coeffs, const = o.term
            out.append(linear_value(coeffs, reals) + const)
    return out


def maxmin_value(inst: Instance, values: list[Fraction]) -> Fraction:
    norm = [v / o.total for v, o in zip(values, inst.objectives) if o.total > 0]
    return max(norm, default=Fraction(0))


def _improves(enc_problem, cost, bound, timeout):
    enc = build_encoding(enc_problem, "none")
    enc.assert_formula(lt({cost: 1}, bound), "threshold")
    smt = SmtSolver(enc)
    deadline = None if timeout is None else time.monotonic() + timeout
    try:
        if smt.check_sat(deadline=deadline):
            return smt.model_reals().get(cost)
    except SolverTimeout:
        return "timeout"
    return None


def verify(inst: Instance, out: Outcome, timeout: float | None = None):
    if out.status != "Optimal":
        return Refuted(f"status {out.status} is not Optimal", "status")
    if any(v is None for v in out.values):
        return Refuted("missing objective value", "status")
    # (a)
    for f in inst.hard:
        if not evaluate(f, out.bools, out.reals):
            return Refuted(f"hard assertion violated: {print_formula(f)}", "a")
    # (b)
    got = objective_values(inst, out.bools, out.reals)
    problem, stages = build_problem(inst)
    maxmin = len(stages) > 1 and inst.priority == "maxmin"
    box = len(stages) > 1 and inst.priority == "box"
    if maxmin:
        claims = [(maxmin_value(inst, got), out.values[0], 1)]
    elif box:
        # each box objective has its own model; the reported one belongs to the last
        claims = [(got[-1], out.values[-1], stages[-1].sign)]
    else:
        claims = [(g, v, s.sign) for g, v, s in zip(got, out.values, stages)]
    for g, v, sign in claims:
        if out.attained and g != v:
            return Refuted(f"model objective {g} differs from claimed optimum {v}", "b")
        if not out.attained and not sign * g > sign * v:
            return Refuted(f"model objective {g} reaches a non-attained bound {v}", "b")
    # (c)
    if maxmin:
        mm, _ = maxmin_problem(problem)
        cex = _improves(mm, mm.cost, out.values[0], timeout)
        if cex is not None:
            return Refuted(f"improving model exists (max-min value {cex})", "c")
        return Verified()
    fixed = dict(problem.fixed)
    for s, v in zip(stages, out.values):
        internal = s.sign * v
        p = replace(problem, cost=s.cost, lower=s.lower, upper=s.upper,
                    fixed=dict(fixed) if not box else dict(problem.fixed))
        cex = _improves(p, s.cost, internal, timeout)
        if cex == "timeout":
            return Refuted(f"no-better check for {s.cost} timed out", "c")
        if cex is not None:
            return Refuted(f"improving model exists ({s.cost} = {s.sign * cex})", "c")
        fixed[s.cost] = internal
    return Verified()


def mutants(out: Outcome, eps=(Fraction(1), Fraction(1, 7))):
    """Single-fault copies of an outcome: each optimum shifted by +-eps, and
    each user Boolean of the model flipped."""
    for i, v in enumerate(out.values):
        if v is None:
            continue
        for e in eps:
            for d in (e, -e):
                m = copy.copy(out)
                m.values = list(out.values)
                m.values[i] = v + d
                yield f"value[{i}]{'+' if d > 0 else '-'}{e}", m
    for name in sorted(out.bools):
        m = copy.copy(out)
        m.bools = dict(out.bools)
        m.bools[name] = not m.bools[name]
        yield f"flip {name}", m
