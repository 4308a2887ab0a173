"""CDCL SAT engine: two watched literals, first-UIP learning, Luby restarts,
assumptions with final-conflict cores, and a hook for a theory solver.

A theory hook is any object with

* ``check(solver, final, after_decision) -> list[Lit] | None`` returning a
  clause whose literals are all false under the trail (a theory conflict),
  or ``None``. It may also call :meth:`Solver.enqueue_implied`.
* ``backtrack(trail_len)`` called whenever the trail shrinks.
"""

from __future__ import annotations

import heapq
import time
from typing import Iterable, Sequence

from .core import TAUTOLOGY, Lit, dimacs_to_lit, lit_to_dimacs, normalize_clause


class SolverTimeout(Exception):
    pass


class Clause:
    __slots__ = ("lits", "learnt", "activity")

    def __init__(self, lits, learnt=False):
        self.lits = lits
        self.learnt = learnt
        self.activity = 0.0

    def __repr__(self):
        return f"Clause({[lit_to_dimacs(l) for l in self.lits]})"


def luby(y: float, x: int) -> float:
    size, seq = 1, 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) >> 1
        seq -= 1
        x = x % size
    return y**seq


class Solver:
    def __init__(self, *, luby_base: int = 64, phase_saving: bool = True,
                 minimize_learnt: bool = False):
        self.value: list[int] = []  # indexed by literal: 1 true, -1 false, 0 unassigned
        self.level: list[int] = []
        self.reason: list[Clause | None] = []
        self.activity: list[float] = []
        self.phase: list[int] = []  # 1 = assign negative literal
        self.tier: list[int] = []
        self.seen: list[bool] = []
        self.watches: list[list[Clause]] = []
        self.trail: list[Lit] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.clauses: list[Clause] = []
        self.learnts: list[Clause] = []
        self.heap: list = []
        self.var_inc = 1.0
        self.var_decay = 1 / 0.95
        self.cla_inc = 1.0
        self.cla_decay = 1 / 0.999
        self.luby_base = luby_base
        self.phase_saving = phase_saving
        self.minimize_learnt = minimize_learnt
        self.max_learnts = 2000.0
        self.ok = True
        self.theory = None
        self.deadline: float | None = None
        self.model: list[bool] = []
        self.core: list[Lit] = []
        self.stats = {"decisions": 0, "conflicts": 0, "propagations": 0,
                      "learned": 0, "restarts": 0, "theory_conflicts": 0}

    # -- variables -----------------------------------------------------------

    @property
    def nvars(self) -> int:
        return len(self.level)

    def new_var(self, tier: int = 0) -> int:
        v = len(self.level)
        self.value.extend((0, 0))
        self.level.append(0)
        self.reason.append(None)
        self.activity.append(0.0)
        self.phase.append(1)
        self.tier.append(tier)
        self.seen.append(False)
        self.watches.extend(([], []))
        heapq.heappush(self.heap, (tier, -0.0, v))
        return v

    def ensure_vars(self, n: int):
        while self.nvars < n:
            self.new_var()

    def set_tier(self, v: int, tier: int):
        self.tier[v] = tier
        heapq.heappush(self.heap, (tier, -self.activity[v], v))

    def decision_level(self) -> int:
        return len(self.trail_lim)

    def lit_value(self, lit: Lit) -> int:
        return self.value[lit]

    # -- clauses -------------------------------------------------------------

    def add_clause(self, lits: Iterable[Lit]) -> bool:
        """Add a problem clause. Returns False once the formula is known unsat."""
        if not self.ok:
            return False
        if self.trail_lim:
            self.cancel_until(0)
        c = normalize_clause(lits)
        if c is TAUTOLOGY:
            return True
        value = self.value
        if any(value[l] == 1 and self.level[l >> 1] == 0 for l in c):
            return True
        c = [l for l in c if not (value[l] == -1 and self.level[l >> 1] == 0)]
        if not c:
            self.ok = False
            return False
        if len(c) == 1:
            self.unchecked_enqueue(c[0], None)
            return True
        cl = Clause(c)
        self.clauses.append(cl)
        self._attach(cl)
        return True

    def _attach(self, c: Clause):
        self.watches[c.lits[0] ^ 1].append(c)
        self.watches[c.lits[1] ^ 1].append(c)

    def _detach(self, c: Clause):
        self.watches[c.lits[0] ^ 1].remove(c)
        self.watches[c.lits[1] ^ 1].remove(c)

    # -- trail ---------------------------------------------------------------

    def unchecked_enqueue(self, lit: Lit, reason: Clause | None):
        v = lit >> 1
        self.value[lit] = 1
        self.value[lit ^ 1] = -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def enqueue_implied(self, lit: Lit, others: Sequence[Lit]) -> None:
        """Theory propagation: ``lit`` is implied by the (true) negations of ``others``."""
        if self.value[lit] != 0:
            return
        c = Clause([lit] + list(others), learnt=True)
        if len(c.lits) >= 2:
            self.learnts.append(c)
            # second watch on the most recently assigned literal
            best = max(range(1, len(c.lits)), key=lambda i: self.level[c.lits[i] >> 1])
            c.lits[1], c.lits[best] = c.lits[best], c.lits[1]
            self._attach(c)
        self.unchecked_enqueue(lit, c if len(c.lits) >= 2 else None)

    def decide(self, lit: Lit):
        self.trail_lim.append(len(self.trail))
        self.unchecked_enqueue(lit, None)

    def cancel_until(self, lvl: int):
        if len(self.trail_lim) <= lvl:
            return
        start = self.trail_lim[lvl]
        value, phase, act, tier = self.value, self.phase, self.activity, self.tier
        heap = self.heap
        push = heapq.heappush
        for i in range(len(self.trail) - 1, start - 1, -1):
            lit = self.trail[i]
            v = lit >> 1
            value[lit] = 0
            value[lit ^ 1] = 0
            self.reason[v] = None
            if self.phase_saving:
                phase[v] = lit & 1
            push(heap, (tier[v], -act[v], v))
        del self.trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = min(self.qhead, start)
        if len(heap) > 4 * len(self.level) + 64:
            self._rebuild_heap()
        if self.theory is not None:
            self.theory.backtrack(start)

    def _rebuild_heap(self):
        self.heap = [(self.tier[v], -self.activity[v], v)
                     for v in range(self.nvars) if self.value[v << 1] == 0]
        heapq.heapify(self.heap)

    # -- propagation ---------------------------------------------------------

    def propagate(self) -> Clause | None:
        value = self.value
        trail = self.trail
        watches = self.watches
        nprops = 0
        confl = None
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            nprops += 1
            false_lit = p ^ 1
            ws = watches[p]
            i = j = 0
            n = len(ws)
            while i < n:
                c = ws[i]
                i += 1
                lits = c.lits
                if lits[0] == false_lit:
                    lits[0] = lits[1]
                    lits[1] = false_lit
                first = lits[0]
                if value[first] == 1:
                    ws[j] = c
                    j += 1
                    continue
                for k in range(2, len(lits)):
                    lk = lits[k]
                    if value[lk] != -1:
                        lits[1] = lk
                        lits[k] = false_lit
                        watches[lk ^ 1].append(c)
                        break
                else:
                    ws[j] = c
                    j += 1
                    if value[first] == -1:
                        confl = c
                        self.qhead = len(trail)
                        while i < n:
                            ws[j] = ws[i]
                            j += 1
                            i += 1
                    else:
                        self.unchecked_enqueue(first, c)
            del ws[j:]
            if confl is not None:
                break
        self.stats["propagations"] += nprops
        return confl

    # -- conflict analysis ---------------------------------------------------

    def _bump_var(self, v: int):
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            for u in range(self.nvars):
                self.activity[u] *= 1e-100
            self.var_inc *= 1e-100
            self._rebuild_heap()
        elif self.value[v << 1] == 0:
            heapq.heappush(self.heap, (self.tier[v], -self.activity[v], v))

    def _bump_clause(self, c: Clause):
        c.activity += self.cla_inc
        if c.activity > 1e20:
            for lc in self.learnts:
                lc.activity *= 1e-20
            self.cla_inc *= 1e-20

    def analyze(self, confl: Clause) -> tuple[list[Lit], int]:
        seen, level, reason, trail = self.seen, self.level, self.reason, self.trail
        cur = len(self.trail_lim)
        learnt: list[Lit] = [0]
        path = 0
        p = None
        idx = len(trail) - 1
        c = confl
        touched = []
        while True:
            if c.learnt:
                self._bump_clause(c)
            for q in (c.lits if p is None else c.lits[1:]):
                v = q >> 1
                if not seen[v] and level[v] > 0:
                    self._bump_var(v)
                    seen[v] = True
                    touched.append(v)
                    if level[v] >= cur:
                        path += 1
                    else:
                        learnt.append(q)
            while not seen[trail[idx] >> 1]:
                idx -= 1
            p = trail[idx]
            idx -= 1
            c = reason[p >> 1]
            seen[p >> 1] = False
            path -= 1
            if path == 0:
                break
        learnt[0] = p ^ 1
        if self.minimize_learnt:
            learnt = self._minimize(learnt)
        for v in touched:
            seen[v] = False
        if len(learnt) == 1:
            bt = 0
        else:
            mi = max(range(1, len(learnt)), key=lambda i: level[learnt[i] >> 1])
            learnt[1], learnt[mi] = learnt[mi], learnt[1]
            bt = level[learnt[1] >> 1]
        return learnt, bt

    def _minimize(self, learnt):
        # local (non-recursive) minimization: drop q if its reason is subsumed
        keep = [learnt[0]]
        marked = {l >> 1 for l in learnt}
        for q in learnt[1:]:
            r = self.reason[q >> 1]
            if r is None or any((x >> 1) not in marked and self.level[x >> 1] > 0
                                for x in r.lits[1:]):
                keep.append(q)
        return keep

    def analyze_final(self, p: Lit) -> list[Lit]:
        """Assumptions responsible for assumption ``p`` being false (``p`` included)."""
        core = [p]
        if not self.trail_lim:
            return core
        seen = self.seen
        seen[p >> 1] = True
        for i in range(len(self.trail) - 1, self.trail_lim[0] - 1, -1):
            lit = self.trail[i]
            v = lit >> 1
            if seen[v]:
                r = self.reason[v]
                if r is None:
                    if v != p >> 1:
                        core.append(lit)
                else:
                    for q in r.lits[1:]:
                        if self.level[q >> 1] > 0:
                            seen[q >> 1] = True
                seen[v] = False
        seen[p >> 1] = False
        return core

    def _handle_conflict_clause(self, lits: list[Lit]) -> Clause | None:
        """Turn a theory conflict clause into an analyzable conflict.

        Returns None when the conflict is at level 0 (formula unsat)."""
        if not lits:
            return None
        top = max(self.level[l >> 1] for l in lits)
        if top == 0:
            return None
        if top < self.decision_level():
            self.cancel_until(top)
        c = Clause(list(lits), learnt=True)
        return c

    def _reduce_db(self):
        locked = lambda c: self.reason[c.lits[0] >> 1] is c and self.value[c.lits[0]] == 1
        self.learnts.sort(key=lambda c: (len(c.lits) > 2, c.activity))
        half = len(self.learnts) // 2
        keep = []
        for i, c in enumerate(self.learnts):
            if i >= half or len(c.lits) <= 2 or locked(c):
                keep.append(c)
            else:
                self._detach(c)
        self.learnts = keep

    # -- search --------------------------------------------------------------

    def _pick_branch(self) -> Lit | None:
        heap, value, act, tier = self.heap, self.value, self.activity, self.tier
        while heap:
            t, na, v = heapq.heappop(heap)
            if value[v << 1] != 0 or na != -act[v] or t != tier[v]:
                continue
            return (v << 1) | self.phase[v]
        return None

    def _check_deadline(self):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise SolverTimeout()

    def _search(self, nof_conflicts: float, assumptions: list[Lit]):
        conflicts = 0
        after_decision = False
        stats = self.stats
        while True:
            confl = self.propagate()
            if confl is None and self.theory is not None:
                full = len(self.trail) == self.nvars
                tconfl = self.theory.check(self, full, after_decision)
                if tconfl is not None:
                    stats["theory_conflicts"] += 1
                    confl = self._handle_conflict_clause(tconfl)
                    if confl is None:
                        self.ok = False
                        return False
                elif self.qhead < len(self.trail):
                    continue  # theory propagated something
            after_decision = False
            if confl is not None:
                stats["conflicts"] += 1
                conflicts += 1
                if not self.trail_lim:
                    self.ok = False
                    return False
                learnt, bt = self.analyze(confl)
                self.cancel_until(bt)
                if len(learnt) == 1:
                    self.unchecked_enqueue(learnt[0], None)
                else:
                    c = Clause(learnt, learnt=True)
                    self.learnts.append(c)
                    self._attach(c)
                    self._bump_clause(c)
                    self.unchecked_enqueue(learnt[0], c)
                stats["learned"] += 1
                self.var_inc *= self.var_decay
                self.cla_inc *= self.cla_decay
                if (conflicts & 15) == 0:
                    self._check_deadline()
                continue
            if conflicts >= nof_conflicts:
                self.cancel_until(0)
                return None
            if len(self.learnts) - len(self.trail) >= self.max_learnts:
                self._reduce_db()
            next_lit = None
            while self.decision_level() < len(assumptions):
                p = assumptions[self.decision_level()]
                if self.value[p] == 1:
                    self.trail_lim.append(len(self.trail))
                elif self.value[p] == -1:
                    self.core = self.analyze_final(p)
                    return False
                else:
                    next_lit = p
                    break
            if next_lit is None:
                next_lit = self._pick_branch()
                if next_lit is None:
                    # every variable assigned and the theory (if any) accepted
                    return True
                stats["decisions"] += 1
            self.decide(next_lit)
            after_decision = True

    def solve(self, assumptions: Sequence[Lit] = (), deadline: float | None = None) -> bool:
        """Returns True (model in ``self.model``) or False (core in ``self.core``)."""
        self.deadline = deadline
        self.model = []
        self.core = []
        if not self.ok:
            return False
        self.cancel_until(0)
        assumptions = list(assumptions)
        status = None
        restarts = 0
        try:
            while status is None:
                status = self._search(luby(2, restarts) * self.luby_base, assumptions)
                if status is None:
                    restarts += 1
                    self.stats["restarts"] += 1
                    self.max_learnts *= 1.05
                    self._check_deadline()
        except SolverTimeout:
            self.cancel_until(0)
            raise
        if status:
            self.model = [self.value[v << 1] == 1 for v in range(self.nvars)]
        self.cancel_until(0)
        return status

    def model_value(self, lit: Lit) -> bool:
        return self.model[lit >> 1] ^ bool(lit & 1)


# -- standalone propagation oracle ------------------------------------------

class _BCPConflict:
    def __repr__(self):
        return "CONFLICT"

    def __bool__(self):
        return False


CONFLICT = _BCPConflict()


def bcp_closure(clauses: Sequence[Sequence[Lit]], mu: Iterable[Lit]):
    """Unit-propagation fixpoint of ``clauses`` under ``mu``.

    Returns the frozenset of implied literals (``mu`` included) or CONFLICT.
    Uses occurrence counting, independent of the solver's watch scheme.
    """
    assigned: dict[int, int] = {}
    queue = []
    for l in mu:
        v, s = l >> 1, l & 1
        if assigned.get(v, s) != s:
            return CONFLICT
        if v not in assigned:
            assigned[v] = s
            queue.append(l)
    occurs: dict[int, list[int]] = {}
    for ci, c in enumerate(clauses):
        for l in c:
            occurs.setdefault(l, []).append(ci)
    # unit and empty clauses first
    for c in clauses:
        if not c:
            return CONFLICT
    pending = list(range(len(clauses)))
    while True:
        for ci in pending:
            c = clauses[ci]
            unassigned = None
            n_un = 0
            sat = False
            for l in c:
                s = assigned.get(l >> 1)
                if s is None:
                    n_un += 1
                    unassigned = l
                elif s == (l & 1):
                    sat = True
                    break
            if sat:
                continue
            if n_un == 0:
                return CONFLICT
            if n_un == 1:
                assigned[unassigned >> 1] = unassigned & 1
                queue.append(unassigned)
        if not queue:
            break
        nxt = set()
        while queue:
            l = queue.pop()
            nxt.update(occurs.get(l ^ 1, ()))
        pending = sorted(nxt)
    return frozenset((v << 1) | s for v, s in assigned.items())


# -- DIMACS ------------------------------------------------------------------

def write_dimacs(nvars: int, clauses: Iterable[Sequence[Lit]], comments: Iterable[str] = ()) -> str:
    clauses = list(clauses)
    out = [f"c {line}" for line in comments]
    out.append(f"p cnf {nvars} {len(clauses)}")
    for c in clauses:
        out.append(" ".join(str(lit_to_dimacs(l)) for l in c) + " 0")
    return "\n".join(out) + "\n"


def read_dimacs(text: str):
    """Returns ``(nvars, clauses, comments)`` with packed literals."""
    nvars = 0
    clauses, comments, cur = [], [], []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            comments.append(line[1:].strip())
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad problem line: {raw!r}")
            nvars = int(parts[2])
            continue
        for tok in line.split():
            d = int(tok)
            if d == 0:
                clauses.append(cur)
                cur = []
            else:
                cur.append(dimacs_to_lit(d))
    if cur:
        clauses.append(cur)
    return nvars, clauses, comments
