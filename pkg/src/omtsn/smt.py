"""DPLL(T): formulas, Tseitin CNF with structure sharing, the atom map, and the
SAT/simplex binding with early pruning.

Formulas are plain tuples:

* ``("const", bool)``
* ``("var", name)`` a propositional variable
* ``("atom", LinAtom, polarity)``
* ``("eq", lhs, rhs)`` a normalized linear equality ``lhs = rhs``
* ``("not", f)``, ``("and", (f, ...))``, ``("or", (f, ...))``

Use the constructors below rather than building tuples by hand; they fold
constants and keep atoms normalized.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .core import Lit
from .lra import LinAtom, MinResult, Simplex, normalize_atom, normalize_lhs
from .sat import Solver, SolverTimeout

TRUE = ("const", True)
FALSE = ("const", False)

# decision tiers: user Booleans first, then definitional aux vars, atoms last
TIER_BOOL, TIER_AUX, TIER_ATOM = 0, 1, 2

PB_TAGS = frozenset({"indicator", "objective", "threshold"})


# -- formula constructors ----------------------------------------------------

def var(name: str):
    return ("var", name)


def Not(f):
    tag = f[0]
    if tag == "const":
        return FALSE if f[1] else TRUE
    if tag == "not":
        return f[1]
    if tag == "atom":
        return ("atom", f[1], not f[2])
    return ("not", f)


def _flatten(tag, fs):
    out = []
    for f in fs:
        if f[0] == tag:
            out.extend(f[1])
        else:
            out.append(f)
    return out


def And(*fs):
    out = []
    for f in _flatten("and", fs):
        if f == FALSE:
            return FALSE
        if f != TRUE and f not in out:
            out.append(f)
    if not out:
        return TRUE
    return out[0] if len(out) == 1 else ("and", tuple(out))


def Or(*fs):
    out = []
    for f in _flatten("or", fs):
        if f == TRUE:
            return TRUE
        if f != FALSE and f not in out:
            out.append(f)
    if not out:
        return FALSE
    return out[0] if len(out) == 1 else ("or", tuple(out))


def Implies(a, b):
    return Or(Not(a), b)


def rel(op: str, coeffs: Mapping[str, Fraction], rhs=0):
    """``coeffs . x op rhs`` for op in ``<= < >= > =``."""
    rhs = Fraction(rhs)
    if op == "=":
        norm = normalize_lhs(coeffs, rhs)
        if norm is None:
            return TRUE if rhs == 0 else FALSE
        lhs, b, _ = norm
        return ("eq", lhs, b)
    r = normalize_atom(coeffs, op, rhs)
    if isinstance(r, bool):
        return TRUE if r else FALSE
    return ("atom", r[0], r[1])


def le(coeffs, rhs=0):
    return rel("<=", coeffs, rhs)


def lt(coeffs, rhs=0):
    return rel("<", coeffs, rhs)


def ge(coeffs, rhs=0):
    return rel(">=", coeffs, rhs)


def gt(coeffs, rhs=0):
    return rel(">", coeffs, rhs)


def eq(coeffs, rhs=0):
    return rel("=", coeffs, rhs)


def linear_value(lhs, values: Mapping[str, Fraction]) -> Fraction:
    return sum((c * values.get(n, Fraction(0)) for n, c in lhs), Fraction(0))


def evaluate(f, bools: Mapping[str, bool], reals: Mapping[str, Fraction]) -> bool:
    """Truth value of ``f`` under a Boolean and a rational assignment.

    Unassigned names default to False / 0."""
    tag = f[0]
    if tag == "const":
        return f[1]
    if tag == "var":
        return bool(bools.get(f[1], False))
    if tag == "atom":
        a = f[1]
        s = linear_value(a.lhs, reals)
        v = s < a.rhs if a.strict else s <= a.rhs
        return v == f[2]
    if tag == "eq":
        return linear_value(f[1], reals) == f[2]
    if tag == "not":
        return not evaluate(f[1], bools, reals)
    if tag == "and":
        return all(evaluate(g, bools, reals) for g in f[1])
    if tag == "or":
        return any(evaluate(g, bools, reals) for g in f[1])
    raise ValueError(f"malformed formula: {f!r}")


def formula_vars(f, bools: set | None = None, reals: set | None = None):
    bools = set() if bools is None else bools
    reals = set() if reals is None else reals
    tag = f[0]
    if tag == "var":
        bools.add(f[1])
    elif tag == "atom":
        reals.update(n for n, _ in f[1].lhs)
    elif tag == "eq":
        reals.update(n for n, _ in f[1])
    elif tag == "not":
        formula_vars(f[1], bools, reals)
    elif tag in ("and", "or"):
        for g in f[1]:
            formula_vars(g, bools, reals)
    elif tag != "const":
        raise ValueError(f"malformed formula: {f!r}")
    return bools, reals


# -- CNF with an atom map ----------------------------------------------------

class Encoding:
    """Clauses over packed literals plus the atom <-> variable map.

    Variables come from one monotone counter shared by propositional names,
    Tseitin/network auxiliaries and theory atoms.
    """

    def __init__(self):
        self.tiers: list[int] = []
        self.bools: dict[str, int] = {}
        self.bool_name: dict[int, str] = {}
        self.atoms: dict[LinAtom, int] = {}
        self.atom_of: dict[int, LinAtom] = {}
        self.tags: dict[int, str] = {}
        self.by_lhs: dict[tuple, list[LinAtom]] = {}
        self.clauses: list[list[Lit]] = []
        self._cache: dict = {}
        self._true: Lit | None = None

    @property
    def nvars(self) -> int:
        return len(self.tiers)

    def new_var(self, tier: int = TIER_AUX) -> int:
        self.tiers.append(tier)
        return len(self.tiers) - 1

    def bool_var(self, name: str) -> int:
        v = self.bools.get(name)
        if v is None:
            v = self.new_var(TIER_BOOL)
            self.bools[name] = v
            self.bool_name[v] = name
        return v

    def true_lit(self) -> Lit:
        if self._true is None:
            v = self.new_var(TIER_AUX)
            self._true = 2 * v
            self.clauses.append([self._true])
        return self._true

    def atom_lit(self, atom: LinAtom, polarity: bool = True, tag: str = "other") -> Lit:
        v = self.atoms.get(atom)
        if v is None:
            v = self.new_var(TIER_ATOM)
            self.atoms[atom] = v
            self.atom_of[v] = atom
            self.tags[v] = tag
            self.by_lhs.setdefault(atom.lhs, []).append(atom)
        return 2 * v if polarity else 2 * v + 1

    def add_clause(self, lits: Iterable[Lit]):
        self.clauses.append(list(lits))

    def _define(self, kind: str, lits: list[Lit]) -> Lit:
        key = (kind, tuple(sorted(set(lits))))
        g = self._cache.get(key)
        if g is not None:
            return g
        g = 2 * self.new_var(TIER_AUX)
        if kind == "and":
            for l in key[1]:
                self.clauses.append([g ^ 1, l])
            self.clauses.append([g] + [l ^ 1 for l in key[1]])
        else:
            self.clauses.append([g ^ 1] + list(key[1]))
            for l in key[1]:
                self.clauses.append([g, l ^ 1])
        self._cache[key] = g
        return g

    def lit(self, f, tag: str = "other") -> Lit:
        """A literal equivalent to ``f`` (Tseitin, cached per structure)."""
        kind = f[0]
        if kind == "var":
            return 2 * self.bool_var(f[1])
        if kind == "atom":
            return self.atom_lit(f[1], f[2], tag)
        if kind == "not":
            return self.lit(f[1], tag) ^ 1
        if kind == "const":
            t = self.true_lit()
            return t if f[1] else t ^ 1
        if kind == "eq":
            return self._define("and", list(self._eq_lits(f, tag)))
        if kind in ("and", "or"):
            return self._define(kind, [self.lit(g, tag) for g in f[1]])
        raise ValueError(f"malformed formula: {f!r}")

    def _eq_lits(self, f, tag):
        _, lhs, rhs = f
        return (self.atom_lit(LinAtom(lhs, False, rhs), True, tag),
                self.atom_lit(LinAtom(lhs, True, rhs), False, tag))

    def assert_formula(self, f, tag: str = "other"):
        kind = f[0]
        if kind == "const":
            if not f[1]:
                self.clauses.append([])
        elif kind == "and":
            for g in f[1]:
                self.assert_formula(g, tag)
        elif kind == "eq":
            for l in self._eq_lits(f, tag):
                self.clauses.append([l])
        elif kind == "or":
            self.clauses.append([self.lit(g, tag) for g in f[1]])
        else:
            self.clauses.append([self.lit(f, tag)])

    def implied_by_upper(self, lhs: tuple, bound: Fraction) -> list[Lit]:
        """Literals of registered atoms on ``lhs`` implied by ``lhs < bound``."""
        out = []
        for a in self.by_lhs.get(lhs, ()):
            if a.rhs >= bound:
                out.append(2 * self.atoms[a])
        return out

    def implied_by_lower(self, lhs: tuple, bound: Fraction) -> list[Lit]:
        """Literals of registered atoms on ``lhs`` implied by ``lhs > bound``."""
        out = []
        for a in self.by_lhs.get(lhs, ()):
            if a.rhs <= bound:
                out.append(2 * self.atoms[a] + 1)
        return out

    def implied_by_value(self, lhs: tuple, value: Fraction) -> list[Lit]:
        """Literals of registered atoms on ``lhs`` fixed by ``lhs = value``."""
        out = []
        for a in self.by_lhs.get(lhs, ()):
            holds = value < a.rhs if a.strict else value <= a.rhs
            out.append(2 * self.atoms[a] + (0 if holds else 1))
        return out

    def atom_count(self, tag: str | None = None) -> int:
        if tag is None:
            return len(self.atoms)
        return sum(1 for v in self.atom_of if self.tags[v] == tag)


# -- the DPLL(T) binding -----------------------------------------------------

EP_POLICIES = ("off", "decision", "fixpoint")


class SmtSolver:
    """CDCL plus simplex over an :class:`Encoding`, kept in sync incrementally."""

    def __init__(self, enc: Encoding | None = None, *, ep: str = "decision",
                 tprop: bool = False, luby_base: int = 64, seed: int = 0):
        if ep not in EP_POLICIES:
            raise ValueError(f"unknown early-pruning policy {ep!r}")
        self.enc = enc if enc is not None else Encoding()
        self.ep = ep
        self.tprop = tprop
        self.sat = Solver(luby_base=luby_base)
        self.sat.theory = self
        self.lra = Simplex()
        self.objective: tuple | None = None
        self._rng = random.Random(seed) if seed else None
        self.min_result: MinResult | None = None
        self.theory_model: dict[str, Fraction] = {}
        self.bool_model: list[bool] = []
        self.core: list[Lit] = []
        self._nclauses = 0
        self._pos = 0  # trail prefix already asserted in the simplex
        self._undo: list[tuple[int, int]] = []  # (trail index, simplex mark)
        self._lra_var: dict[int, int] = {}
        self._atoms_on: dict[int, list[int]] = {}
        self.stats = {"theory_checks": 0, "pb_conflicts": 0, "tprop": 0}

    # -- synchronisation ------------------------------------------------------

    def sync(self):
        enc, sat = self.enc, self.sat
        while sat.nvars < enc.nvars:
            v = sat.nvars
            sat.new_var(enc.tiers[v])
            if self._rng is not None:
                # seeded tie-breaking among equally active variables
                sat.activity[v] = self._rng.random() * 1e-6
                sat.set_tier(v, enc.tiers[v])
            atom = enc.atom_of.get(v)
            if atom is not None:
                x = self.lra.register_atom(atom)
                self._lra_var[v] = x
                self._atoms_on.setdefault(x, []).append(v)
        while self._nclauses < len(enc.clauses):
            sat.add_clause(enc.clauses[self._nclauses])
            self._nclauses += 1

    # -- theory hook ---------------------------------------------------------

    def backtrack(self, trail_len: int):
        if self._pos > trail_len:
            self._pos = trail_len
        undo = self._undo
        if undo and undo[-1][0] >= trail_len:
            mark = None
            while undo and undo[-1][0] >= trail_len:
                mark = undo.pop()[1]
            self.lra.backtrack_to(mark)

    def _conflict(self, expl) -> list[Lit]:
        lits = sorted({r ^ 1 for r in expl})
        if all(self.enc.tags.get(l >> 1) in PB_TAGS for l in lits):
            self.stats["pb_conflicts"] += 1
        return lits

    def check(self, solver: Solver, final: bool, after_decision: bool):
        if not final:
            if self.ep == "off" or (self.ep == "decision" and not after_decision):
                return None
        self.stats["theory_checks"] += 1
        trail = solver.trail
        atom_of = self.enc.atom_of
        lra = self.lra
        touched = []
        while self._pos < len(trail):
            lit = trail[self._pos]
            v = lit >> 1
            atom = atom_of.get(v)
            if atom is not None:
                self._undo.append((self._pos, lra.mark()))
                expl = lra.assert_atom(atom, not (lit & 1), lit)
                if expl is not None:
                    return self._conflict(expl)
                touched.append(self._lra_var[v])
            self._pos += 1
        expl = lra.check()
        if expl is not None:
            return self._conflict(expl)
        if self.tprop and not final and touched:
            self._propagate_bounds(solver, touched)
        if final:
            if self.objective is not None:
                self.min_result = lra.minimize(self.objective)
            self.theory_model = lra.model()
        return None

    def _propagate_bounds(self, solver: Solver, touched):
        lra = self.lra
        atom_of = self.enc.atom_of
        for x in set(touched):
            lo, up = lra.lower[x], lra.upper[x]
            for v in self._atoms_on.get(x, ()):
                if solver.value[2 * v] != 0:
                    continue
                a = atom_of[v]
                bound_u = (a.rhs, -1 if a.strict else 0)
                # atom true iff value <= bound_u (as a delta-rational)
                if up is not None and (up.r, up.d) <= bound_u:
                    solver.enqueue_implied(2 * v, [lra.ureason[x] ^ 1])
                    self.stats["tprop"] += 1
                elif lo is not None and (lo.r, lo.d) > bound_u:
                    solver.enqueue_implied(2 * v + 1, [lra.lreason[x] ^ 1])
                    self.stats["tprop"] += 1

    # -- solving -------------------------------------------------------------

    def check_sat(self, assumptions: Sequence[Lit] = (), deadline: float | None = None) -> bool:
        self.sync()
        self.min_result = None
        self.theory_model = {}
        ok = self.sat.solve(assumptions, deadline)
        if ok:
            self.bool_model = list(self.sat.model)
            self.core = []
        else:
            self.bool_model = []
            self.core = list(self.sat.core)
        return ok

    def model_bools(self) -> dict[str, bool]:
        return {n: self.bool_model[v] for n, v in self.enc.bools.items()}

    def model_reals(self) -> dict[str, Fraction]:
        return dict(self.theory_model)

    def assert_formula(self, f, tag: str = "other"):
        self.enc.assert_formula(f, tag)

    def snapshot_stats(self) -> dict[str, int]:
        s = dict(self.sat.stats)
        s.update(self.stats)
        s["lra_checks"] = self.lra.stats["checks"]
        s["pivots"] = self.lra.stats["pivots"]
        return s


__all__ = [
    "TRUE", "FALSE", "var", "Not", "And", "Or", "Implies", "rel", "le", "lt",
    "ge", "gt", "eq", "evaluate", "formula_vars", "linear_value", "Encoding",
    "SmtSolver", "SolverTimeout", "PB_TAGS", "EP_POLICIES",
]

