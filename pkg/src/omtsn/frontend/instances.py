"""Optimization instances, their script form, and seeded generators."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from ..encoders import MixedSpec, SoftClause
from ..smt import Not, Or, formula_vars, rel, var
from .parser import FrontendError, Script, parse, print_script, print_term

FAMILIES = ("maxsmt", "lex-pb", "weight1", "maxmin", "lmt-mixed", "example1")
PRIORITIES = ("lex", "maxmin", "box")

# includes the double that rounds 0.8: 1799972218749879 / 2**51
RATIONAL_WEIGHTS = (Fraction(1), Fraction(2), Fraction(1, 3), Fraction(2, 3),
                    Fraction(1799972218749879, 2251799813685248), Fraction(3, 2))


@dataclass
class Objective:
    """Either a group of soft clauses (minimize violated weight) or a linear term."""
    id: str
    softs: list = field(default_factory=list)
    term: tuple | None = None  # (coeffs, const)
    maximize: bool = False

    @property
    def is_soft(self) -> bool:
        return self.term is None

    @property
    def total(self) -> Fraction:
        return sum((s.weight for s in self.softs), Fraction(0))


@dataclass
class Instance:
    name: str
    family: str
    hard: list
    objectives: list = field(default_factory=list)
    priority: str = "lex"
    mixed: MixedSpec | None = None
    declared: dict = field(default_factory=dict)  # name -> sort, in order

    def sorts(self) -> dict[str, str]:
        bools, reals = set(), set()
        for f in self.hard:
            formula_vars(f, bools, reals)
        for o in self.objectives:
            for s in o.softs:
                formula_vars(s.clause, bools, reals)
            if o.term is not None:
                reals.update(n for n, _ in o.term[0])
        if self.mixed is not None:
            for terms in (self.mixed.a_terms, self.mixed.b_terms, self.mixed.c_terms):
                for _, f in terms:
                    formula_vars(f, bools, reals)
        out = dict(self.declared)
        for n in sorted(bools):
            out.setdefault(n, "Bool")
        for n in sorted(reals):
            out.setdefault(n, "Real")
        return out


# -- script conversion ---------------------------------------------------------

def from_script(script: Script | str, name: str = "script") -> Instance:
    if isinstance(script, str):
        script = parse(script)
    hard, objs, by_id = [], [], {}
    priority = "lex"
    for c in script.commands:
        if c[0] == "assert":
            hard.append(c[1])
        elif c[0] == "assert-soft":
            ident = c[3] if c[3] is not None else "I"
            o = by_id.get(ident)
            if o is None:
                o = by_id[ident] = Objective(ident)
                objs.append(o)
            elif not o.is_soft:
                raise FrontendError(f"objective id {ident!r} is already a term")
            o.softs.append(SoftClause(c[1], c[2], ident))
        elif c[0] in ("minimize", "maximize"):
            objs.append(Objective(print_term(c[1]), term=c[1], maximize=c[0] == "maximize"))
        elif c[0] == "set-option" and c[1] == ":opt.priority":
            if c[2] not in PRIORITIES:
                raise FrontendError(f"unknown priority {c[2]!r}")
            priority = c[2]
    return Instance(name, "script", hard, objs, priority, declared=script.declarations())


def to_script(inst: Instance) -> Script:
    """Script form of an instance (LMT mixed objectives have no surface syntax)."""
    if inst.mixed is not None:
        raise FrontendError("mixed LMT objectives cannot be written as a script")
    cmds = [("declare-fun", n, s) for n, s in inst.sorts().items()]
    if len(inst.objectives) > 1:
        cmds.append(("set-option", ":opt.priority", inst.priority))
    cmds += [("assert", f) for f in inst.hard]
    for o in inst.objectives:
        if o.is_soft:
            cmds += [("assert-soft", s.clause, s.weight, o.id) for s in o.softs]
        else:
            cmds.append(("maximize" if o.maximize else "minimize", o.term))
    cmds += [("check-sat",), ("get-objectives",)]
    return Script(cmds)


def instance_text(inst: Instance) -> str:
    return print_script(to_script(inst))


# -- generators ------------------------------------------------------------------

def _atom(rng, reals, ks=(1, 2), coefs=(-1, 1, 2), rhs=(-3, 3)):
    k = min(rng.choice(ks), len(reals))
    co = {y: rng.choice(coefs) for y in rng.sample(reals, k)}
    f = rel(rng.choice(["<=", "<", ">=", ">"]), co, rng.randint(*rhs))
    if f[0] == "const":
        return _atom(rng, reals, ks, coefs, rhs)
    return f


def _lit(rng, pool):
    f = rng.choice(pool)
    return f if rng.random() < 0.5 else Not(f)


def _clause(rng, pool, lo, hi):
    return Or(*[_lit(rng, pool) for _ in range(rng.randint(lo, hi))])


def gen_maxsmt(rng, n_soft=None, n_real=None):
    """Mixed Bool/LRA MaxSMT with rational weights; small enough for brute force."""
    nb = rng.randint(2, 5)
    ny = n_real if n_real is not None else rng.randint(1, 4)
    bools = [var(f"b{i}") for i in range(nb)]
    reals = [f"y{i}" for i in range(ny)]
    atoms = [_atom(rng, reals) for _ in range(rng.randint(2, 5))]
    pool = bools + atoms
    hard = [_clause(rng, pool, 1, 3) for _ in range(rng.randint(1, 4))]
    ns = n_soft if n_soft is not None else rng.randint(1, 12)
    softs = [SoftClause(_clause(rng, pool, 1, 2), rng.choice(RATIONAL_WEIGHTS), "I")
             for _ in range(ns)]
    return hard, [Objective("I", softs)]


def gen_weight1(rng, n=8):
    """n unit-weight softs (not A_i) plus random hard 3-clauses over the
    indicators and atoms on two reals."""
    A = [var(f"A{i}") for i in range(1, n + 1)]
    reals = ["y0", "y1"]
    atoms = [_atom(rng, reals) for _ in range(max(2, n // 2))]
    pool = A + atoms
    hard = [_clause(rng, pool, 3, 3) for _ in range(n)]
    hard += [rel(">=", {y: 1}, -4) for y in reals] + [rel("<=", {y: 1}, 4) for y in reals]
    softs = [SoftClause(Not(a), 1, "I") for a in A]
    return hard, [Objective("I", softs)]


def gen_multi(rng, r=None, n_soft=None):
    """r <= 3 PB objectives over shared variables, at most 8 softs each."""
    r = r if r is not None else rng.randint(2, 3)
    nb = rng.randint(3, 6)
    bools = [var(f"b{i}") for i in range(nb)]
    reals = ["y0", "y1"]
    atoms = [_atom(rng, reals) for _ in range(rng.randint(1, 3))]
    pool = bools + atoms
    hard = [_clause(rng, pool, 2, 3) for _ in range(rng.randint(1, 4))]
    weights = (1, 2, 3, Fraction(1, 2), Fraction(5, 3))
    objs = []
    for j in range(r):
        ns = n_soft if n_soft is not None else rng.randint(1, 8)
        ident = f"o{j + 1}"
        objs.append(Objective(ident, [SoftClause(_clause(rng, pool, 1, 2), rng.choice(weights), ident)
                                      for _ in range(ns)]))
    return hard, objs


def gen_mixed(rng, n=6):
    """cost = sum w*B + cover - sum w*C - |K - cover| (maximized)."""
    A = [var(f"A{i}") for i in range(1, n + 1)]
    reals = ["y0", "y1"]
    atoms = [_atom(rng, reals) for _ in range(2)]
    pool = A + atoms
    hard = [_clause(rng, pool, 2, 3) for _ in range(n)]
    a_terms = [(rng.randint(1, 4), a) for a in A]
    b_terms = [(rng.randint(1, 3), _lit(rng, pool)) for _ in range(rng.randint(1, 3))]
    c_terms = [(rng.randint(1, 3), _lit(rng, pool)) for _ in range(rng.randint(1, 3))]
    K = Fraction(rng.randint(0, sum(w for w, _ in a_terms)))
    return hard, MixedSpec(a_terms, b_terms, c_terms, K, maximize=True)


def gen_example1(rng, n=4):
    """cost = sum_{i=1..n} A_i; A_i false demands y_i >= c_i under a budget on sum y_i."""
    A = [var(f"A{i}") for i in range(1, n + 1)]
    hard, ys = [], {}
    for i in range(1, n + 1):
        c = rng.randint(1, 3)
        hard.append(Or(A[i - 1], rel(">=", {f"y{i}": 1}, c)))
        hard.append(rel(">=", {f"y{i}": 1}, 0))
        ys[f"y{i}"] = 1
    hard.append(rel("<=", ys, rng.randint(n // 2, n)))
    return hard, [Objective("I", [SoftClause(Not(a), 1, "I") for a in A])]


def generate_instances(family: str, count: int = 1, seed: int = 0, **size) -> list[Instance]:
    """``count`` instances of ``family``; fully determined by ``seed`` and sizes."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    out = []
    for k in range(count):
        rng = random.Random(f"{family}:{seed}:{k}")
        name = f"{family}-{seed}-{k}"
        if family == "maxsmt":
            hard, objs = gen_maxsmt(rng, size.get("n_soft"), size.get("n_real"))
            out.append(Instance(name, family, hard, objs))
        elif family == "weight1":
            hard, objs = gen_weight1(rng, size.get("n", 8))
            out.append(Instance(name, family, hard, objs))
        elif family in ("lex-pb", "maxmin"):
            hard, objs = gen_multi(rng, size.get("r"), size.get("n_soft"))
            pr = "lex" if family == "lex-pb" else "maxmin"
            out.append(Instance(name, family, hard, objs, pr))
        elif family == "lmt-mixed":
            hard, spec = gen_mixed(rng, size.get("n", 6))
            out.append(Instance(name, family, hard, [], mixed=spec))
        else:
            hard, objs = gen_example1(rng, size.get("n", 4))
            out.append(Instance(name, family, hard, objs))
    return out
