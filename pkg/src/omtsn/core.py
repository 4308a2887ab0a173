"""Foundation types: variables, literals, clauses, rationals, delta-rationals.

Literals use the packed integer encoding ``2 * var + sign`` where ``sign == 1``
marks a negative literal, so ``lit ^ 1`` negates and ``lit >> 1`` recovers the
variable. Variables are dense indices starting at 0.
"""

from __future__ import annotations

import enum
import re
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Iterable

Rational = Fraction

Var = int
Lit = int


def mk_lit(var: Var, negated: bool = False) -> Lit:
    return (var << 1) | int(negated)


def pos(var: Var) -> Lit:
    return var << 1


def neg(lit: Lit) -> Lit:
    return lit ^ 1


def lit_var(lit: Lit) -> Var:
    return lit >> 1


def is_neg(lit: Lit) -> bool:
    return bool(lit & 1)


def lit_to_dimacs(lit: Lit) -> int:
    v = (lit >> 1) + 1
    return -v if lit & 1 else v


def dimacs_to_lit(d: int) -> Lit:
    if d == 0:
        raise ValueError("0 is not a DIMACS literal")
    return mk_lit(abs(d) - 1, d < 0)


def lit_str(lit: Lit) -> str:
    return ("-" if lit & 1 else "") + f"v{lit >> 1}"


class LBool(enum.IntEnum):
    FALSE = -1
    UNASSIGNED = 0
    TRUE = 1


class _Tautology:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "TAUTOLOGY"


TAUTOLOGY = _Tautology()


def normalize_clause(lits: Iterable[Lit]):
    """Sort by (var, polarity) and drop duplicates; TAUTOLOGY on l and -l."""
    out = sorted(set(lits))
    for a, b in zip(out, out[1:]):
        if a ^ 1 == b:
            return TAUTOLOGY
    return out


class VarPool:
    """Monotone variable allocator shared by Boolean and atom variables."""

    def __init__(self, start: int = 0):
        self.top = start

    def new_var(self) -> Var:
        v = self.top
        self.top += 1
        return v

    def __len__(self):
        return self.top


# --- rationals -------------------------------------------------------------

_RAT_RE = re.compile(r"^\s*([+-]?\d+)\s*/\s*(\d+)\s*$")


def parse_rational(text: str) -> Fraction:
    """Parse ``n``, ``n/d`` or an exact decimal literal such as ``0.5``."""
    s = str(text).strip()
    m = _RAT_RE.match(s)
    if m:
        num, den = int(m.group(1)), int(m.group(2))
        if den == 0:
            raise ZeroDivisionError(f"zero denominator in {text!r}")
        return Fraction(num, den)
    try:
        return Fraction(Decimal(s))
    except (InvalidOperation, ValueError):
        raise ValueError(f"not a rational literal: {text!r}") from None


def format_rational(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def rational_arith(a: Fraction, b: Fraction, op: str) -> Fraction:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0:
            raise ZeroDivisionError("rational division by zero")
        return a / b
    raise ValueError(f"unknown operator {op!r}")


class DeltaRational:
    """``real + delta * d`` for a positive infinitesimal ``d``."""

    __slots__ = ("r", "d")

    def __init__(self, r=0, d=0):
        self.r = r if isinstance(r, Fraction) else Fraction(r)
        self.d = d if isinstance(d, Fraction) else Fraction(d)

    def __add__(self, o):
        return DeltaRational(self.r + o.r, self.d + o.d)

    def __sub__(self, o):
        return DeltaRational(self.r - o.r, self.d - o.d)

    def __neg__(self):
        return DeltaRational(-self.r, -self.d)

    def scale(self, c: Fraction) -> "DeltaRational":
        return DeltaRational(self.r * c, self.d * c)

    def _key(self):
        return (self.r, self.d)

    def __eq__(self, o):
        if isinstance(o, DeltaRational):
            return self.r == o.r and self.d == o.d
        if isinstance(o, (int, Fraction)):
            return self.d == 0 and self.r == o
        return NotImplemented

    def __hash__(self):
        return hash(self.r) if self.d == 0 else hash((self.r, self.d))

    def __lt__(self, o):
        return self.r < o.r or (self.r == o.r and self.d < o.d)

    def __le__(self, o):
        return self.r < o.r or (self.r == o.r and self.d <= o.d)

    def __gt__(self, o):
        return o < self

    def __ge__(self, o):
        return o <= self

    def __repr__(self):
        if self.d == 0:
            return f"DeltaRational({format_rational(self.r)})"
        return f"DeltaRational({format_rational(self.r)}, {format_rational(self.d)})"


def delta_compare(a: DeltaRational, b: DeltaRational) -> int:
    """-1, 0 or 1 by lexicographic order on (real, delta)."""
    if a < b:
        return -1
    if b < a:
        return 1
    return 0
