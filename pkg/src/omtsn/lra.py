"""Exact-rational simplex for linear real arithmetic (bound-based, Bland's rule).

Atoms are kept in the normal form ``sum c_i x_i <= b`` or ``sum c_i x_i < b``
with the first coefficient (by variable name) equal to 1. ``>=`` and ``>``
become negated ``<`` and ``<=`` atoms. Each distinct left-hand side with more
than one variable (or a non-unit coefficient) is represented by a slack row.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .core import DeltaRational, format_rational

ZERO = Fraction(0)
ONE = Fraction(1)


class TheoryError(Exception):
    pass


@dataclass(frozen=True)
class LinAtom:
    lhs: tuple  # ((name, coef), ...) sorted by name, lhs[0][1] == 1
    strict: bool
    rhs: Fraction

    def __str__(self):
        terms = " + ".join(n if c == 1 else f"{format_rational(c)}*{n}" for n, c in self.lhs)
        return f"{terms} {'<' if self.strict else '<='} {format_rational(self.rhs)}"

    def holds(self, values: Mapping[str, Fraction]) -> bool:
        s = sum((c * values[n] for n, c in self.lhs), ZERO)
        return s < self.rhs if self.strict else s <= self.rhs


def normalize_lhs(coeffs: Mapping[str, Fraction], rhs: Fraction):
    """Scale ``coeffs . x (op) rhs`` so the first coefficient is 1.

    Returns ``(lhs_tuple, rhs, flipped)`` or ``None`` when no variable remains.
    """
    items = sorted((n, Fraction(c)) for n, c in coeffs.items() if c != 0)
    if not items:
        return None
    lead = items[0][1]
    lhs = tuple((n, c / lead) for n, c in items)
    return lhs, Fraction(rhs) / lead, lead < 0


def normalize_atom(coeffs: Mapping[str, Fraction], op: str, rhs: Fraction):
    """Normalize ``coeffs . x op rhs`` for op in ``<=, <, >=, >``.

    Returns ``(LinAtom, polarity)``, or a bool when the lhs is empty.
    """
    norm = normalize_lhs(coeffs, rhs)
    if norm is None:
        r = Fraction(rhs)
        return {"<=": 0 <= r, "<": 0 < r, ">=": 0 >= r, ">": 0 > r}[op]
    lhs, b, flipped = norm
    if flipped:
        op = {"<=": ">=", "<": ">", ">=": "<=", ">": "<"}[op]
    if op == "<=":
        return LinAtom(lhs, False, b), True
    if op == "<":
        return LinAtom(lhs, True, b), True
    if op == ">=":
        return LinAtom(lhs, True, b), False
    if op == ">":
        return LinAtom(lhs, False, b), False
    raise ValueError(f"unsupported relation {op!r}")


def atom_bound(atom: LinAtom, polarity: bool):
    """The bound asserted on the atom's lhs: ``('u'|'l', DeltaRational)``."""
    if polarity:
        return "u", DeltaRational(atom.rhs, -1 if atom.strict else 0)
    return "l", DeltaRational(atom.rhs, 0 if atom.strict else 1)


@dataclass
class MinResult:
    bounded: bool
    value: DeltaRational | None = None
    tight: tuple = ()


class Simplex:
    def __init__(self):
        self.names: list[str | None] = []
        self.index: dict[str, int] = {}
        self.lower: list[DeltaRational | None] = []
        self.upper: list[DeltaRational | None] = []
        self.lreason: list = []
        self.ureason: list = []
        self.val: list[DeltaRational] = []
        self.rows: dict[int, dict[int, Fraction]] = {}
        self.cols: list[set[int]] = []
        self.slack_of: dict[tuple, int] = {}
        self.undo: list = []
        self.atoms: dict[LinAtom, int] = {}
        self.consistent = True
        self.stats = {"checks": 0, "pivots": 0}

    # -- variables and rows --------------------------------------------------

    def _new(self, name):
        v = len(self.names)
        self.names.append(name)
        self.lower.append(None)
        self.upper.append(None)
        self.lreason.append(None)
        self.ureason.append(None)
        self.val.append(DeltaRational())
        self.cols.append(set())
        return v

    def var(self, name: str) -> int:
        v = self.index.get(name)
        if v is None:
            v = self._new(name)
            self.index[name] = v
        return v

    def term_var(self, lhs: tuple) -> int:
        """Variable standing for ``lhs`` (the variable itself or a slack row)."""
        if len(lhs) == 1 and lhs[0][1] == 1:
            return self.var(lhs[0][0])
        s = self.slack_of.get(lhs)
        if s is not None:
            return s
        row: dict[int, Fraction] = {}
        for name, c in lhs:
            x = self.var(name)
            if x in self.rows:
                for y, d in self.rows[x].items():
                    row[y] = row.get(y, ZERO) + c * d
            else:
                row[x] = row.get(x, ZERO) + c
        row = {y: c for y, c in row.items() if c != 0}
        s = self._new(None)
        self.rows[s] = row
        for y in row:
            self.cols[y].add(s)
        self.val[s] = self._row_value(row)
        self.slack_of[lhs] = s
        return s

    def _row_value(self, row) -> DeltaRational:
        r = d = ZERO
        val = self.val
        for y, c in row.items():
            vy = val[y]
            r += c * vy.r
            d += c * vy.d
        return DeltaRational(r, d)

    def register_atom(self, atom: LinAtom) -> int:
        v = self.atoms.get(atom)
        if v is None:
            v = self.term_var(atom.lhs)
            self.atoms[atom] = v
        return v

    # -- backtracking --------------------------------------------------------

    def mark(self) -> int:
        return len(self.undo)

    def backtrack_to(self, mark: int):
        if mark < 0 or mark > len(self.undo):
            raise TheoryError(f"unknown mark {mark}")
        undo = self.undo
        while len(undo) > mark:
            v, kind, old, why = undo.pop()
            if kind == "u":
                self.upper[v], self.ureason[v] = old, why
            else:
                self.lower[v], self.lreason[v] = old, why
        self.consistent = True

    # -- bounds --------------------------------------------------------------

    def assert_atom(self, atom: LinAtom, polarity: bool, reason=None):
        """Assert an atom; returns None or a conflict explanation (list of reasons)."""
        v = self.atoms.get(atom)
        if v is None:
            raise TheoryError(f"atom not registered: {atom}")
        if reason is None:
            reason = (atom, polarity)
        kind, b = atom_bound(atom, polarity)
        if kind == "u":
            return self.assert_upper(v, b, reason)
        return self.assert_lower(v, b, reason)

    def assert_upper(self, v: int, b: DeltaRational, reason):
        u = self.upper[v]
        if u is not None and u <= b:
            return None
        lo = self.lower[v]
        if lo is not None and b < lo:
            self.consistent = False
            return [reason, self.lreason[v]]
        self.undo.append((v, "u", u, self.ureason[v]))
        self.upper[v] = b
        self.ureason[v] = reason
        if v not in self.rows and b < self.val[v]:
            self._update(v, b)
        return None

    def assert_lower(self, v: int, b: DeltaRational, reason):
        lo = self.lower[v]
        if lo is not None and b <= lo:
            return None
        u = self.upper[v]
        if u is not None and u < b:
            self.consistent = False
            return [reason, self.ureason[v]]
        self.undo.append((v, "l", lo, self.lreason[v]))
        self.lower[v] = b
        self.lreason[v] = reason
        if v not in self.rows and self.val[v] < b:
            self._update(v, b)
        return None

    def _update(self, x: int, new: DeltaRational):
        old = self.val[x]
        dr, dd = new.r - old.r, new.d - old.d
        val = self.val
        for b in self.cols[x]:
            a = self.rows[b][x]
            vb = val[b]
            val[b] = DeltaRational(vb.r + a * dr, vb.d + a * dd)
        val[x] = new

    # -- pivoting ------------------------------------------------------------

    def _pivot(self, b: int, x: int):
        """Make nonbasic ``x`` basic in place of basic ``b``."""
        self.stats["pivots"] += 1
        rows, cols = self.rows, self.cols
        row = rows.pop(b)
        a = row.pop(x)
        inv = ONE / a
        new_row = {y: -c * inv for y, c in row.items()}
        new_row[b] = inv
        for y in row:
            cols[y].discard(b)
        cols[x].discard(b)
        for r in list(cols[x]):
            rr = rows[r]
            f = rr.pop(x)
            for y, c in new_row.items():
                nc = rr.get(y, ZERO) + f * c
                if nc == 0:
                    if y in rr:
                        del rr[y]
                        cols[y].discard(r)
                else:
                    if y not in rr:
                        cols[y].add(r)
                    rr[y] = nc
        cols[x] = set()
        rows[x] = new_row
        for y in new_row:
            cols[y].add(x)

    def _pivot_and_update(self, b: int, x: int, target: DeltaRational):
        a = self.rows[b][x]
        vb = self.val[b]
        inv = ONE / a
        tr, td = (target.r - vb.r) * inv, (target.d - vb.d) * inv
        val = self.val
        val[b] = target
        vx = val[x]
        val[x] = DeltaRational(vx.r + tr, vx.d + td)
        for r in self.cols[x]:
            if r == b:
                continue
            c = self.rows[r][x]
            vr = val[r]
            val[r] = DeltaRational(vr.r + c * tr, vr.d + c * td)
        self._pivot(b, x)

    # -- feasibility ---------------------------------------------------------

    def check(self):
        """Returns None when consistent, otherwise a conflict explanation."""
        self.stats["checks"] += 1
        lower, upper, val, rows = self.lower, self.upper, self.val, self.rows
        while True:
            bad = None
            for b in sorted(rows):
                vb = val[b]
                lo = lower[b]
                if lo is not None and vb < lo:
                    bad, need_up = b, True
                    break
                u = upper[b]
                if u is not None and u < vb:
                    bad, need_up = b, False
                    break
            if bad is None:
                self.consistent = True
                return None
            b = bad
            row = rows[b]
            entering = None
            for x in sorted(row):
                a = row[x]
                if need_up == (a > 0):
                    u = upper[x]
                    if u is None or val[x] < u:
                        entering = x
                        break
                else:
                    lo = lower[x]
                    if lo is None or lo < val[x]:
                        entering = x
                        break
            if entering is None:
                self.consistent = False
                return self._explain(b, need_up)
            self._pivot_and_update(b, entering, lower[b] if need_up else upper[b])

    def _explain(self, b: int, need_up: bool):
        expl = [self.lreason[b] if need_up else self.ureason[b]]
        for x, a in self.rows[b].items():
            if need_up == (a > 0):
                expl.append(self.ureason[x])
            else:
                expl.append(self.lreason[x])
        return expl

    # -- optimization --------------------------------------------------------

    def minimize(self, target) -> MinResult:
        """Minimize a variable index, a name, or an lhs tuple over the current bounds."""
        if not self.consistent:
            raise TheoryError("minimize called on an inconsistent tableau")
        if isinstance(target, str):
            t = self.var(target)
        elif isinstance(target, tuple):
            t = self.term_var(target)
        else:
            t = target
        lower, upper, val, rows = self.lower, self.upper, self.val, self.rows
        while True:
            obj = rows[t] if t in rows else {t: ONE}
            entering = None
            for x in sorted(obj):
                c = obj[x]
                if c > 0:
                    lo = lower[x]
                    if lo is None or lo < val[x]:
                        entering, down = x, True
                        break
                else:
                    u = upper[x]
                    if u is None or val[x] < u:
                        entering, down = x, False
                        break
            if entering is None:
                tight = []
                for x, c in obj.items():
                    tight.append(self.lreason[x] if c > 0 else self.ureason[x])
                return MinResult(True, val[t], tuple(tight))
            x = entering
            # step limit from x's own bound
            best = None  # (step, var, target)
            if down:
                lo = lower[x]
                if lo is not None:
                    best = (val[x] - lo, x, lo)
            else:
                u = upper[x]
                if u is not None:
                    best = (u - val[x], x, u)
            # basic variables depending on x (obj row itself when t basic has no role here)
            for r in sorted(self.cols[x]):
                a = rows[r][x]
                # r changes by a * dx, dx = -step if down else +step
                sgn = -a if down else a
                if sgn > 0:
                    u = upper[r]
                    if u is None:
                        continue
                    step = (u - val[r]).scale(ONE / sgn)
                    tgt = u
                else:
                    lo = lower[r]
                    if lo is None:
                        continue
                    step = (val[r] - lo).scale(ONE / -sgn)
                    tgt = lo
                if best is None or step < best[0] or (step == best[0] and r < best[1]):
                    best = (step, r, tgt)
            if best is None:
                return MinResult(False)
            step, r, tgt = best
            if r == x:
                self._update(x, tgt)
            else:
                self._pivot_and_update(r, x, tgt)

    # -- models --------------------------------------------------------------

    def concrete_delta(self) -> Fraction:
        delta = ONE
        for v in range(len(self.names)):
            x = self.val[v]
            lo = self.lower[v]
            if lo is not None and lo.r < x.r and lo.d > x.d:
                delta = min(delta, (x.r - lo.r) / (lo.d - x.d))
            u = self.upper[v]
            if u is not None and x.r < u.r and x.d > u.d:
                delta = min(delta, (u.r - x.r) / (x.d - u.d))
        return delta

    def model(self) -> dict[str, Fraction]:
        delta = self.concrete_delta()
        return {n: self.val[i].r + self.val[i].d * delta
                for n, i in self.index.items()}

    def value(self, name: str) -> DeltaRational:
        return self.val[self.var(name)]

    def check_invariants(self) -> bool:
        """Basic valuations equal their rows; nonbasic values within bounds."""
        for b, row in self.rows.items():
            if self._row_value(row) != self.val[b]:
                return False
        for v in range(len(self.names)):
            if v in self.rows:
                continue
            lo, u = self.lower[v], self.upper[v]
            if lo is not None and self.val[v] < lo:
                return False
            if u is not None and u < self.val[v]:
                return False
        return True
