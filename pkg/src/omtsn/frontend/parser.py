"""SMT-LIB subset with assert-soft and optimization commands.

Commands are tuples:

* ``("declare-fun", name, sort)`` with sort ``Bool`` or ``Real``
* ``("assert", formula)``
* ``("assert-soft", formula, weight, id_or_None)``
* ``("minimize", term)`` / ``("maximize", term)`` where a term is
  ``(coeffs, const)`` with ``coeffs`` a sorted tuple of ``(name, Fraction)``
* ``("check-sat",)``, ``("get-objectives",)``, ``("get-model",)``, ``("exit",)``
* ``("set-option", keyword, value)``
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from ..core import format_rational, parse_rational
from ..smt import FALSE, TRUE, And, Not, Or, rel, var


class FrontendError(Exception):
    def __init__(self, msg, line=None, col=None):
        self.line, self.col = line, col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(where + msg)


class ParseError(FrontendError):
    pass


class SortError(FrontendError):
    pass


class UnknownSymbolError(FrontendError):
    pass


@dataclass
class Script:
    commands: list = field(default_factory=list)

    def declarations(self) -> dict[str, str]:
        return {c[1]: c[2] for c in self.commands if c[0] == "declare-fun"}


# -- s-expressions -----------------------------------------------------------

_TOKEN = re.compile(r"""\s+|;[^\n]*|(?P<lp>\()|(?P<rp>\))|(?P<kw>:[^\s()]+)|(?P<atom>[^\s();]+)""")


class Sym(str):
    """A token with its source position."""

    def __new__(cls, text, line, col):
        s = super().__new__(cls, text)
        s.line, s.col = line, col
        return s


def tokenize(text: str):
    pos, line, line_start = 0, 1, 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        col = pos - line_start + 1
        if m.lastgroup == "lp":
            out.append(Sym("(", line, col))
        elif m.lastgroup == "rp":
            out.append(Sym(")", line, col))
        elif m.lastgroup in ("kw", "atom"):
            out.append(Sym(m.group(), line, col))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    return out


def read_sexprs(text: str):
    toks = tokenize(text)
    stack, top = [], []
    for t in toks:
        if t == "(":
            stack.append((top, t))
            top = []
        elif t == ")":
            if not stack:
                raise ParseError("unbalanced ')'", t.line, t.col)
            parent, opener = stack.pop()
            parent.append(_Node(top, opener.line, opener.col))
            top = parent
        else:
            top.append(t)
    if stack:
        opener = stack[-1][1]
        raise ParseError("unclosed '('", opener.line, opener.col)
    return top


class _Node(list):
    def __init__(self, items, line, col):
        super().__init__(items)
        self.line, self.col = line, col


# -- terms -------------------------------------------------------------------

def _pos(x):
    return getattr(x, "line", None), getattr(x, "col", None)


def _is_number(tok: str) -> bool:
    return bool(re.fullmatch(r"[0-9]+(\.[0-9]+)?(/[0-9]+)?", tok))


class _Ctx:
    def __init__(self):
        self.sorts: dict[str, str] = {}

    def real(self, e):
        """Linear term -> (coeffs dict, const)."""
        if isinstance(e, str):
            if _is_number(e):
                return {}, parse_rational(e)
            s = self.sorts.get(e)
            if s is None:
                raise UnknownSymbolError(f"unknown symbol {e!r}", *_pos(e))
            if s != "Real":
                raise SortError(f"{e!r} is {s}, expected Real", *_pos(e))
            return {str(e): Fraction(1)}, Fraction(0)
        if not e:
            raise ParseError("empty term", *_pos(e))
        head, args = e[0], e[1:]
        if not isinstance(head, str):
            raise ParseError("term head must be a symbol", *_pos(e))
        if head == "+":
            acc, c = {}, Fraction(0)
            for a in args:
                d, k = self.real(a)
                for n, v in d.items():
                    acc[n] = acc.get(n, 0) + v
                c += k
            return acc, c
        if head == "-":
            if not args:
                raise ParseError("'-' needs arguments", *_pos(e))
            d0, c0 = self.real(args[0])
            if len(args) == 1:
                return {n: -v for n, v in d0.items()}, -c0
            acc = dict(d0)
            for a in args[1:]:
                d, k = self.real(a)
                for n, v in d.items():
                    acc[n] = acc.get(n, 0) - v
                c0 -= k
            return acc, c0
        if head == "*":
            terms = [self.real(a) for a in args]
            scale = Fraction(1)
            var_term = None
            for d, k in terms:
                if d:
                    if var_term is not None:
                        raise SortError("nonlinear multiplication", *_pos(e))
                    var_term = (d, k)
                else:
                    scale *= k
            if var_term is None:
                return {}, scale
            d, k = var_term
            return {n: v * scale for n, v in d.items()}, k * scale
        if head == "/":
            if len(args) != 2:
                raise ParseError("'/' takes two arguments", *_pos(e))
            d, k = self.real(args[0])
            dd, kd = self.real(args[1])
            if dd:
                raise SortError("division by a non-constant", *_pos(e))
            if kd == 0:
                raise ParseError("division by zero", *_pos(e))
            return {n: v / kd for n, v in d.items()}, k / kd
        if head in ("<=", "<", ">=", ">", "=", "and", "or", "not", "=>"):
            raise SortError(f"Bool term {head!r} used where Real expected", *_pos(e))
        raise UnknownSymbolError(f"unknown function {head!r}", *_pos(head))

    def boolean(self, e):
        if isinstance(e, str):
            if e == "true":
                return TRUE
            if e == "false":
                return FALSE
            if _is_number(e):
                raise SortError(f"numeral {e!r} used where Bool expected", *_pos(e))
            s = self.sorts.get(e)
            if s is None:
                raise UnknownSymbolError(f"unknown symbol {e!r}", *_pos(e))
            if s != "Bool":
                raise SortError(f"{e!r} is {s}, expected Bool", *_pos(e))
            return var(str(e))
        if not e:
            raise ParseError("empty formula", *_pos(e))
        head, args = e[0], e[1:]
        if not isinstance(head, str):
            raise ParseError("formula head must be a symbol", *_pos(e))
        if head == "not":
            if len(args) != 1:
                raise ParseError("'not' takes one argument", *_pos(e))
            return Not(self.boolean(args[0]))
        if head == "and":
            return And(*[self.boolean(a) for a in args])
        if head == "or":
            return Or(*[self.boolean(a) for a in args])
        if head == "=>":
            if len(args) < 2:
                raise ParseError("'=>' takes at least two arguments", *_pos(e))
            fs = [self.boolean(a) for a in args]
            out = fs[-1]
            for f in reversed(fs[:-1]):
                out = Or(Not(f), out)
            return out
        if head in ("<=", "<", ">=", ">", "="):
            if len(args) != 2:
                raise ParseError(f"'{head}' takes two arguments", *_pos(e))
            if head == "=" and self._is_bool(args[0]):
                a, b = self.boolean(args[0]), self.boolean(args[1])
                return Or(And(a, b), And(Not(a), Not(b)))
            d1, c1 = self.real(args[0])
            d2, c2 = self.real(args[1])
            coeffs = dict(d1)
            for n, v in d2.items():
                coeffs[n] = coeffs.get(n, 0) - v
            return rel(head, coeffs, c2 - c1)
        if head in ("+", "-", "*", "/"):
            raise SortError(f"Real term {head!r} used where Bool expected", *_pos(e))
        raise UnknownSymbolError(f"unknown function {head!r}", *_pos(head))

    def _is_bool(self, e):
        if isinstance(e, str):
            return e in ("true", "false") or self.sorts.get(e) == "Bool"
        return bool(e) and isinstance(e[0], str) and e[0] in (
            "not", "and", "or", "=>", "<=", "<", ">=", ">", "=")


def _attrs(items, start):
    out = {}
    i = start
    while i < len(items):
        k = items[i]
        if not (isinstance(k, str) and k.startswith(":")):
            raise ParseError(f"expected attribute, got {k!r}", *_pos(k))
        if i + 1 >= len(items):
            raise ParseError(f"attribute {k} lacks a value", *_pos(k))
        out[str(k)] = items[i + 1]
        i += 2
    return out


def _weight(v):
    if isinstance(v, str):
        try:
            return parse_rational(v)
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"bad weight {v!r}", *_pos(v)) from None
    d, k = _Ctx().real(v)
    if d:
        raise SortError("weight must be constant", *_pos(v))
    return k


def parse(text: str) -> Script:
    ctx = _Ctx()
    cmds = []
    for e in read_sexprs(text):
        if isinstance(e, str) or not e or not isinstance(e[0], str):
            raise ParseError("expected a command", *_pos(e))
        head, args = e[0], e[1:]
        if head in ("declare-fun", "declare-const"):
            if head == "declare-fun":
                if len(args) != 3 or not isinstance(args[1], list) or args[1]:
                    raise ParseError("only 0-ary declare-fun is supported", *_pos(e))
                name, sort = args[0], args[2]
            else:
                if len(args) != 2:
                    raise ParseError("declare-const takes a name and a sort", *_pos(e))
                name, sort = args
            if not isinstance(name, str) or not isinstance(sort, str):
                raise ParseError("bad declaration", *_pos(e))
            if sort not in ("Bool", "Real"):
                raise SortError(f"unsupported sort {sort!r}", *_pos(sort))
            if name in ctx.sorts:
                raise ParseError(f"{name!r} declared twice", *_pos(name))
            ctx.sorts[str(name)] = str(sort)
            cmds.append(("declare-fun", str(name), str(sort)))
        elif head == "assert":
            if len(args) != 1:
                raise ParseError("assert takes one formula", *_pos(e))
            cmds.append(("assert", ctx.boolean(args[0])))
        elif head == "assert-soft":
            if not args:
                raise ParseError("assert-soft needs a formula", *_pos(e))
            f = ctx.boolean(args[0])
            at = _attrs(args, 1)
            w = _weight(at[":weight"]) if ":weight" in at else Fraction(1)
            if w <= 0:
                raise ParseError("soft weight must be positive", *_pos(e))
            ident = str(at[":id"]) if ":id" in at else None
            cmds.append(("assert-soft", f, w, ident))
        elif head in ("minimize", "maximize"):
            if len(args) < 1:
                raise ParseError(f"{head} needs a term", *_pos(e))
            d, k = ctx.real(args[0])
            coeffs = tuple(sorted((n, v) for n, v in d.items() if v != 0))
            cmds.append((head, (coeffs, k)))
        elif head in ("check-sat", "get-objectives", "get-model", "exit"):
            cmds.append((str(head),))
        elif head == "set-option":
            if len(args) != 2 or not str(args[0]).startswith(":"):
                raise ParseError("set-option takes a keyword and a value", *_pos(e))
            cmds.append(("set-option", str(args[0]), str(args[1])))
        elif head == "set-logic":
            continue
        else:
            raise UnknownSymbolError(f"unknown command {head!r}", *_pos(head))
    return Script(cmds)


# -- printing ----------------------------------------------------------------

def print_rational(q: Fraction) -> str:
    q = Fraction(q)
    if q < 0:
        return f"(- {print_rational(-q)})"
    if q.denominator == 1:
        return str(q.numerator)
    return f"(/ {q.numerator} {q.denominator})"


def print_linear(coeffs) -> str:
    parts = []
    for n, c in coeffs:
        parts.append(n if c == 1 else f"(* {print_rational(c)} {n})")
    if not parts:
        return "0"
    return parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"


def print_formula(f) -> str:
    tag = f[0]
    if tag == "const":
        return "true" if f[1] else "false"
    if tag == "var":
        return f[1]
    if tag == "atom":
        a, pol = f[1], f[2]
        if pol:
            op = "<" if a.strict else "<="
        else:
            op = ">=" if a.strict else ">"
        return f"({op} {print_linear(a.lhs)} {print_rational(a.rhs)})"
    if tag == "eq":
        return f"(= {print_linear(f[1])} {print_rational(f[2])})"
    if tag == "not":
        return f"(not {print_formula(f[1])})"
    if tag in ("and", "or"):
        return f"({tag} " + " ".join(print_formula(g) for g in f[1]) + ")"
    raise ValueError(f"malformed formula {f!r}")


def print_term(term) -> str:
    coeffs, const = term
    if const == 0:
        return print_linear(coeffs)
    if not coeffs:
        return print_rational(const)
    return f"(+ {print_linear(coeffs)} {print_rational(const)})"


def print_script(script: Script) -> str:
    lines = []
    for c in script.commands:
        h = c[0]
        if h == "declare-fun":
            lines.append(f"(declare-fun {c[1]} () {c[2]})")
        elif h == "assert":
            lines.append(f"(assert {print_formula(c[1])})")
        elif h == "assert-soft":
            s = f"(assert-soft {print_formula(c[1])} :weight {format_rational(c[2])}"
            if c[3] is not None:
                s += f" :id {c[3]}"
            lines.append(s + ")")
        elif h in ("minimize", "maximize"):
            lines.append(f"({h} {print_term(c[1])})")
        elif h == "set-option":
            lines.append(f"(set-option {c[1]} {c[2]})")
        else:
            lines.append(f"({h})")
    return "\n".join(lines) + "\n"
