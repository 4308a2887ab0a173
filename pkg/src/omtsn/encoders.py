"""Formula-level constructions: MaxSMT to OMT, weight groups, bidirectional
sorting networks, their attachment to cost thresholds, activation clauses,
chunk splitting and the mixed LMT objective form.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .core import Lit, VarPool, lit_to_dimacs
from .sat import CONFLICT, bcp_closure, read_dimacs, write_dimacs
from .smt import (TIER_AUX, Encoding, Not, Or, eq, ge, le, lt, var)

NETWORK_KINDS = ("none", "seqcounter", "cardnet")


class EncodingError(ValueError):
    pass


# -- problem objects ---------------------------------------------------------

@dataclass
class SoftClause:
    clause: tuple
    weight: Fraction
    id: str | None = None

    def __post_init__(self):
        self.weight = Fraction(self.weight)
        if self.weight <= 0:
            raise EncodingError(f"soft clause weight must be positive, got {self.weight}")


@dataclass
class PBTerm:
    weight: Fraction
    ind: str  # Boolean indicator
    x: str    # companion real: x = weight if ind else 0


@dataclass
class PBObjective:
    cost: str
    terms: list[PBTerm]

    @property
    def total(self) -> Fraction:
        return sum((t.weight for t in self.terms), Fraction(0))


@dataclass
class OmtProblem:
    hard: list
    cost: str
    pbs: list[PBObjective] = field(default_factory=list)
    defs: list = field(default_factory=list)  # (formula, tag)
    kind: str = "pb"
    lower: Fraction | None = None
    upper: Fraction | None = None
    parents: dict = field(default_factory=dict)  # pb cost -> (parent var, scale)
    softs: list = field(default_factory=list)
    fixed: dict = field(default_factory=dict)  # var -> value (lexicographic stages)


@dataclass
class SortingNetwork:
    kind: str
    inputs: list[Lit]
    outputs: list[Lit]
    aux: list[int]
    clauses: list[list[Lit]]


@dataclass
class Group:
    weight: Fraction
    members: list[int]


# -- MaxSMT -> OMT -----------------------------------------------------------

def pb_term_defs(t: PBTerm):
    """Per-indicator constraints: the two implications, the box bounds, and the
    LA-valid exclusion between ``x = w`` and ``x = 0``."""
    a, x, w = var(t.ind), {t.x: 1}, t.weight
    return [
        (Or(Not(a), eq(x, w)), "indicator"),
        (Or(a, eq(x, 0)), "indicator"),
        (ge(x, 0), "objective"),
        (le(x, w), "objective"),
        (Or(Not(le(x, 0)), lt(x, w)), "indicator"),
    ]


def maxsmt_to_omt(hard: Sequence, softs: Sequence[SoftClause], prefix: str = "#") -> OmtProblem:
    terms, hard_out = [], list(hard)
    for i, s in enumerate(softs):
        if not isinstance(s, SoftClause):
            raise EncodingError("soft constraints must be SoftClause objects")
        c = s.clause
        if c[0] == "not" and c[1][0] == "var":
            # soft (not v): v itself already is the violation indicator
            terms.append(PBTerm(s.weight, c[1][1], f"{prefix}x{i}"))
            continue
        a = f"{prefix}A{i}"
        terms.append(PBTerm(s.weight, a, f"{prefix}x{i}"))
        hard_out.append(Or(var(a), c))
    pb = PBObjective(f"{prefix}cost", terms)
    return OmtProblem(hard_out, pb.cost, [pb], kind="pb", lower=Fraction(0),
                      upper=pb.total, softs=list(softs))


def group_by_weight(weights: Sequence[Fraction]) -> list[Group]:
    """Partition indices by exact weight, groups in order of first occurrence."""
    groups: dict[Fraction, Group] = {}
    for i, w in enumerate(weights):
        w = Fraction(w)
        if w not in groups:
            groups[w] = Group(w, [])
        groups[w].members.append(i)
    return list(groups.values())


def split_chunks(items: Sequence, chunk_size: int | None) -> list[list]:
    """Consecutive chunks of at most ``chunk_size`` items (None means no split)."""
    if chunk_size is None or chunk_size == math.inf:
        return [list(items)]
    if chunk_size < 2:
        raise EncodingError(f"chunk size must be >= 2, got {chunk_size}")
    return [list(items[i:i + chunk_size]) for i in range(0, len(items), chunk_size)]


# -- sorting networks --------------------------------------------------------

def encode_seq_counter_bidir(inputs: Sequence[Lit], new_var: Callable[[], int]) -> SortingNetwork:
    """Sequential counter with k = n, forward and reverse implications."""
    n = len(inputs)
    if n == 0:
        raise EncodingError("network needs at least one input")
    A = list(inputs)
    S = [[2 * new_var() for _ in range(n)] for _ in range(n)]  # S[i][j] = S_{i+1,j+1}
    cl = []
    # forward
    cl.append([A[0] ^ 1, S[0][0]])
    for j in range(1, n):
        cl.append([S[0][j] ^ 1])
    for i in range(1, n):
        cl.append([A[i] ^ 1, S[i][0]])
        cl.append([S[i - 1][0] ^ 1, S[i][0]])
        for j in range(1, n):
            cl.append([A[i] ^ 1, S[i - 1][j - 1] ^ 1, S[i][j]])
            cl.append([S[i - 1][j] ^ 1, S[i][j]])
        cl.append([A[i] ^ 1, S[i - 1][n - 1] ^ 1])
    # reverse
    cl.append([S[0][0] ^ 1, A[0]])
    for i in range(1, n):
        cl.append([S[i][0] ^ 1, A[i], S[i - 1][0]])
        for j in range(1, n):
            cl.append([S[i][j] ^ 1, A[i], S[i - 1][j]])
            cl.append([S[i][j] ^ 1, S[i - 1][j - 1], S[i - 1][j]])
    aux = [l >> 1 for row in S for l in row]
    return SortingNetwork("seqcounter", A, list(S[n - 1]), aux, cl)


def seq_counter_clause_count(n: int) -> int:
    """Closed form of the schema above."""
    if n == 1:
        return 2
    forward = 1 + (n - 1) + (n - 1) * (2 + 2 * (n - 1) + 1)
    reverse = 1 + (n - 1) * (1 + 2 * (n - 1))
    return forward + reverse


class _CardBuilder:
    def __init__(self, new_var, false_lit):
        self.new_var = new_var
        self.false = false_lit
        self.clauses = []
        self.aux = []

    def comparator(self, x1, x2):
        f = self.false
        if x1 == f:
            return x2, f
        if x2 == f:
            return x1, f
        y1, y2 = 2 * self.new_var(), 2 * self.new_var()
        self.aux += [y1 >> 1, y2 >> 1]
        self.clauses += [
            [x1 ^ 1, y1], [x2 ^ 1, y1], [x1 ^ 1, x2 ^ 1, y2],
            [y1 ^ 1, x1, x2], [y2 ^ 1, x1], [y2 ^ 1, x2],
        ]
        return y1, y2

    def merge(self, a, b):
        if len(a) == 1:
            return list(self.comparator(a[0], b[0]))
        d = self.merge(a[0::2], b[0::2])
        e = self.merge(a[1::2], b[1::2])
        out = [d[0]]
        for i in range(len(a) - 1):
            out += self.comparator(d[i + 1], e[i])
        out.append(e[-1])
        return out

    def sort(self, xs):
        if len(xs) == 1:
            return list(xs)
        h = len(xs) // 2
        return self.merge(self.sort(xs[:h]), self.sort(xs[h:]))


def encode_cardinality_network(inputs: Sequence[Lit], new_var: Callable[[], int],
                               false_lit: Lit | None = None) -> SortingNetwork:
    """Odd-even merge-sort network of bidirectional 2-comparators.

    Inputs are padded to a power of two with one constant-false literal; when
    ``false_lit`` is not given a fresh variable is allocated and fixed by a unit.
    """
    n = len(inputs)
    if n == 0:
        raise EncodingError("network needs at least one input")
    size = 1 << (n - 1).bit_length()
    clauses = []
    aux = []
    if size > n and false_lit is None:
        fv = new_var()
        aux.append(fv)
        false_lit = 2 * fv + 1
        clauses.append([false_lit])
    b = _CardBuilder(new_var, false_lit if false_lit is not None else -1)
    outs = b.sort(list(inputs) + [false_lit] * (size - n))
    clauses += b.clauses
    return SortingNetwork("cardnet", list(inputs), outs[:n], aux + b.aux, clauses)


def build_network(kind: str, inputs: Sequence[Lit], new_var: Callable[[], int],
                  false_lit: Lit | None = None) -> SortingNetwork:
    if kind == "seqcounter":
        return encode_seq_counter_bidir(inputs, new_var)
    if kind == "cardnet":
        return encode_cardinality_network(inputs, new_var, false_lit)
    raise EncodingError(f"unknown network kind {kind!r}")


def check_bidirectional(clauses, inputs, outputs) -> list[str]:
    """Exhaustive check of the four propagation properties over all partial
    input assignments; returns a list of violation descriptions."""
    n = len(inputs)
    bad = []
    for vals in itertools.product((None, True, False), repeat=n):
        mu = [a if v else a ^ 1 for a, v in zip(inputs, vals) if v is not None]
        k = sum(1 for v in vals if v is True)
        m = n - sum(1 for v in vals if v is False)
        free = [a for a, v in zip(inputs, vals) if v is None]
        cl = bcp_closure(clauses, mu)
        if cl is CONFLICT:
            bad.append(f"{vals}: conflict on consistent input")
            continue
        for i in range(k):
            if outputs[i] not in cl:
                bad.append(f"{vals}: B{i + 1} not propagated")
        for i in range(m, n):
            if outputs[i] ^ 1 not in cl:
                bad.append(f"{vals}: not B{i + 1} not propagated")
        if k < n and free:
            c2 = bcp_closure(clauses, mu + [outputs[k] ^ 1])
            if c2 is CONFLICT or any(a ^ 1 not in c2 for a in free):
                bad.append(f"{vals}: not B{k + 1} does not force free inputs false")
        if m >= 1 and free:
            c3 = bcp_closure(clauses, mu + [outputs[m - 1]])
            if c3 is CONFLICT or any(a not in c3 for a in free):
                bad.append(f"{vals}: B{m} does not force free inputs true")
    return bad


def network_to_dimacs(net: SortingNetwork) -> str:
    """Standalone DIMACS with ``inputs:``/``outputs:`` manifest comments."""
    used = sorted({l >> 1 for c in net.clauses for l in c}
                  | {l >> 1 for l in net.inputs} | {l >> 1 for l in net.outputs})
    remap = {v: i for i, v in enumerate(used)}

    def rl(l):
        return 2 * remap[l >> 1] | (l & 1)

    clauses = [[rl(l) for l in c] for c in net.clauses]
    comments = [
        f"kind: {net.kind}",
        "inputs: " + " ".join(str(lit_to_dimacs(rl(l))) for l in net.inputs),
        "outputs: " + " ".join(str(lit_to_dimacs(rl(l))) for l in net.outputs),
    ]
    return write_dimacs(len(used), clauses, comments)


def network_from_dimacs(text: str):
    """Inverse of :func:`network_to_dimacs`: ``(clauses, inputs, outputs, kind)``."""
    from .core import dimacs_to_lit
    _, clauses, comments = read_dimacs(text)
    inputs = outputs = None
    kind = "unknown"
    for c in comments:
        key, _, rest = c.partition(":")
        key = key.strip()
        if key == "inputs":
            inputs = [dimacs_to_lit(int(t)) for t in rest.split()]
        elif key == "outputs":
            outputs = [dimacs_to_lit(int(t)) for t in rest.split()]
        elif key == "kind":
            kind = rest.strip()
    if inputs is None or outputs is None:
        raise EncodingError("DIMACS file lacks an inputs/outputs manifest")
    if len(inputs) != len(outputs):
        raise EncodingError("manifest arity mismatch")
    return clauses, inputs, outputs, kind


# -- attachment to the arithmetic side ---------------------------------------

def attach_network(enc: Encoding, net: SortingNetwork, w: Fraction, target: str):
    """Link outputs to thresholds on ``target``: for each i,
    B_i -> (i*w <= target), not B_i -> (target <= (i-1)*w), and their exclusion."""
    w = Fraction(w)
    t = {target: 1}
    for c in net.clauses:
        enc.add_clause(c)
    for i, b in enumerate(net.outputs, start=1):
        hi = enc.lit(ge(t, i * w), "threshold")
        lo = enc.lit(le(t, (i - 1) * w), "threshold")
        enc.add_clause([b ^ 1, hi])
        enc.add_clause([b, lo])
        enc.add_clause([hi ^ 1, lo ^ 1])


def attach_activation(enc: Encoding, source: str, scale: Fraction, target: str,
                      thresholds: Sequence[Fraction]):
    """not(theta*scale <= source) -> not(theta <= target), for each threshold theta.

    With ``scale = 1`` and ``source`` the global cost this is the activation
    family linking cost cuts to per-group thresholds."""
    for th in thresholds:
        src = enc.lit(lt({source: 1}, th * scale), "threshold")
        dst = enc.lit(lt({target: 1}, th), "threshold")
        enc.add_clause([src ^ 1, dst])


def attach_grouped_activation(enc: Encoding, cost: str, units):
    """Activation clauses for ``units`` = list of (weight, size, tau name)."""
    if not units:
        raise EncodingError("activation needs a grouped objective")
    for w, k, tau in units:
        attach_activation(enc, cost, Fraction(1), tau, [w * i for i in range(1, k + 1)])


def encode_pb_objective(enc: Encoding, pb: PBObjective, network: str = "none",
                        chunk: int | None = None, grouped: bool | None = None,
                        activation: bool = True, parent=None):
    """Emit the defining constraints of ``pb`` (and networks when requested).

    Returns a summary dict with the units used; useful for tests and stats."""
    if network not in NETWORK_KINDS:
        raise EncodingError(f"unknown encoding {network!r}")
    for t in pb.terms:
        for f, tag in pb_term_defs(t):
            enc.assert_formula(f, tag)
    if grouped is None:
        grouped = network != "none"
    cost = {pb.cost: 1}
    info = {"units": [], "networks": []}
    if not grouped or not pb.terms:
        coeffs = dict(cost)
        for t in pb.terms:
            coeffs[t.x] = coeffs.get(t.x, 0) - 1
        enc.assert_formula(eq(coeffs, 0), "objective")
        return info
    units = []
    for g in group_by_weight([t.weight for t in pb.terms]):
        for ch in split_chunks(g.members, chunk):
            units.append((g.weight, ch))
    false_lit = enc.true_lit() ^ 1 if network == "cardnet" else None

    def new_var():
        return enc.new_var(TIER_AUX)

    def network_for(w, members, target):
        ins = [2 * enc.bool_var(pb.terms[i].ind) for i in members]
        net = build_network(network, ins, new_var, false_lit)
        attach_network(enc, net, w, target)
        info["networks"].append(net)

    if len(units) == 1 and len(units[0][1]) > 1:
        # a single unit: thresholds directly on the cost
        w, members = units[0]
        coeffs = dict(cost)
        for i in members:
            coeffs[pb.terms[i].x] = -1
        enc.assert_formula(eq(coeffs, 0), "objective")
        if network != "none":
            network_for(w, members, pb.cost)
            if parent is not None and activation:
                pvar, scale = parent
                attach_activation(enc, pvar, scale, pb.cost,
                                  [w * i for i in range(1, len(members) + 1)])
        info["units"].append((w, len(members), pb.cost))
        return info
    coeffs = dict(cost)
    act = []
    for u, (w, members) in enumerate(units):
        if len(members) == 1:
            coeffs[pb.terms[members[0]].x] = -1
            continue
        tau = f"{pb.cost}#t{u}"
        coeffs[tau] = -1
        tdef = {tau: 1}
        for i in members:
            tdef[pb.terms[i].x] = -1
        enc.assert_formula(eq(tdef, 0), "objective")
        enc.assert_formula(ge({tau: 1}, 0), "objective")
        enc.assert_formula(le({tau: 1}, w * len(members)), "objective")
        info["units"].append((w, len(members), tau))
        if network != "none":
            network_for(w, members, tau)
            act.append((w, len(members), tau))
    enc.assert_formula(eq(coeffs, 0), "objective")
    if act and activation:
        attach_grouped_activation(enc, pb.cost, act)
        if parent is not None:
            pvar, scale = parent
            for w, k, tau in act:
                attach_activation(enc, pvar, scale, tau, [w * i for i in range(1, k + 1)])
    return info


def build_encoding(problem: OmtProblem, network: str = "none", chunk: int | None = None,
                   grouped: bool | None = None, activation: bool | None = None) -> Encoding:
    enc = Encoding()
    for f in problem.hard:
        enc.assert_formula(f, "other")
    for f, tag in problem.defs:
        enc.assert_formula(f, tag)
    if activation is None:
        activation = problem.kind != "mixed"
    for pb in problem.pbs:
        encode_pb_objective(enc, pb, network, chunk, grouped, activation,
                            problem.parents.get(pb.cost))
    for name, value in problem.fixed.items():
        enc.assert_formula(eq({name: 1}, value), "objective")
        lhs = ((name, Fraction(1)),)
        for l in enc.implied_by_value(lhs, Fraction(value)):
            enc.add_clause([l])
    return enc


# -- mixed LMT objectives ----------------------------------------------------

@dataclass
class MixedSpec:
    """cost = sum w*B + cover - sum w*C - |K - cover|, cover = sum w*A."""
    a_terms: list  # (weight, formula)
    b_terms: list = field(default_factory=list)
    c_terms: list = field(default_factory=list)
    K: Fraction = Fraction(0)
    maximize: bool = True


def _pb_from_terms(terms, name, prefix, hard):
    out = []
    for i, (w, f) in enumerate(terms):
        w = Fraction(w)
        if w <= 0:
            raise EncodingError("PB term weights must be positive")
        if f[0] == "var":
            ind = f[1]
        else:
            ind = f"{name}#L{i}"
            hard.append(Or(Not(var(ind)), f))
            hard.append(Or(var(ind), Not(f)))
        out.append(PBTerm(w, ind, f"{name}#x{i}"))
    return PBObjective(name, out)


def build_mixed_objective(spec: MixedSpec, hard: Sequence = (), prefix: str = "#") -> OmtProblem:
    hard = list(hard)
    K = Fraction(spec.K)
    cover = _pb_from_terms(spec.a_terms, f"{prefix}cover", prefix, hard)
    pbs = [cover]
    bsum = csum = None
    if spec.b_terms:
        bsum = _pb_from_terms(spec.b_terms, f"{prefix}bsum", prefix, hard)
        pbs.append(bsum)
    if spec.c_terms:
        csum = _pb_from_terms(spec.c_terms, f"{prefix}csum", prefix, hard)
        pbs.append(csum)
    t, mc, obj = f"{prefix}abs", f"{prefix}mixed", f"{prefix}obj"
    cv = cover.cost
    defs = [
        (ge({t: 1, cv: 1}, K), "other"),          # t >= K - cover
        (ge({t: 1, cv: -1}, -K), "other"),        # t >= cover - K
        (Or(le({t: 1, cv: 1}, K), le({t: 1, cv: -1}, -K)), "other"),
    ]
    coeffs = {mc: -1, cv: 1, t: -1}
    if bsum is not None:
        coeffs[bsum.cost] = 1
    if csum is not None:
        coeffs[csum.cost] = -1
    defs.append((eq(coeffs, 0), "other"))
    sign = -1 if spec.maximize else 1
    defs.append((eq({obj: 1, mc: -sign}, 0), "other"))
    wa, wb = cover.total, bsum.total if bsum else Fraction(0)
    wc = csum.total if csum else Fraction(0)
    absmax = max(abs(K), abs(wa - K))
    lo_c, hi_c = -wc - absmax, wb + wa
    lower, upper = (-hi_c, -lo_c) if spec.maximize else (lo_c, hi_c)
    return OmtProblem(hard, obj, pbs, defs, kind="mixed", lower=lower, upper=upper)


def standalone_network(kind: str, n: int):
    """A network over fresh inputs 0..n-1 (handy for property checks)."""
    pool = VarPool()
    ins = [2 * pool.new_var() for _ in range(n)]
    return build_network(kind, ins, pool.new_var), pool


def pb_problem(hard: Sequence, terms: Sequence, prefix: str = "#") -> OmtProblem:
    """Minimize ``sum w * f`` over ``(w, f)`` terms directly (no soft clauses)."""
    hard = list(hard)
    pb = _pb_from_terms(terms, f"{prefix}cost", prefix, hard)
    return OmtProblem(hard, pb.cost, [pb], kind="pb", lower=Fraction(0), upper=pb.total)
