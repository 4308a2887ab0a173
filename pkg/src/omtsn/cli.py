"""Command line: ``omtsn FILE [flags]`` solves a script; ``omtsn netcheck``,
``omtsn gen`` and ``omtsn bench`` are utility subcommands.

Exit codes: 0 Optimal/Sat, 20 Unsat, 30 Timeout, 1 usage/parse error.
"""

from __future__ import annotations

import argparse
import os
import sys

from .encoders import (NETWORK_KINDS, EncodingError, check_bidirectional, group_by_weight,
                       network_from_dimacs, network_to_dimacs, split_chunks, standalone_network)
from .frontend import (FAMILIES, FrontendError, config_matrix, from_script, generate_instances,
                       instance_text, parse, run_bench, solve_instance, verify)
from .frontend.parser import print_rational
from .omt import STRATEGIES, SearchConfig
from .smt import EP_POLICIES

EXIT = {"Optimal": 0, "Sat": 0, "Unbounded": 0, "Unsat": 20, "Timeout": 30}


def _chunk(text):
    if text == "inf":
        return None
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("chunk must be an integer >= 2 or 'inf'") from None
    if n < 2:
        raise argparse.ArgumentTypeError("chunk must be >= 2")
    return n


def _solve_parser():
    p = argparse.ArgumentParser(prog="omtsn", description="OMT(LRA) solver with sorting networks")
    p.add_argument("file", help="SMT-LIB script ('-' reads stdin)")
    p.add_argument("--engine", choices=("omt", "maxsat"), default="omt")
    p.add_argument("--encoding", choices=NETWORK_KINDS, default="cardnet")
    p.add_argument("--chunk", type=_chunk, default=None, help="N or inf")
    p.add_argument("--search", choices=STRATEGIES, default="linear")
    p.add_argument("--ep", choices=EP_POLICIES, default="decision")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timeout", type=int, default=None, metavar="MS")
    p.add_argument("--verify", action="store_true")
    p.add_argument("--stats", action="store_true")
    p.add_argument("--dimacs-out", metavar="PATH")
    return p


def _value(v, out, maximize):
    if out.status == "Unbounded":
        return "oo" if maximize else "(- oo)"
    if v is None:
        return "unknown"
    s = print_rational(v)
    if not out.attained:
        return f"(- {s} epsilon)" if maximize else f"(+ {s} epsilon)"
    return s


def _print_model(out, sorts):
    lines = ["(model"]
    for n, s in sorts.items():
        if s == "Bool":
            lines.append(f"  (define-fun {n} () Bool {'true' if out.bools.get(n) else 'false'})")
        else:
            lines.append(f"  (define-fun {n} () Real {print_rational(out.reals.get(n, 0))})")
    lines.append(")")
    print("\n".join(lines))


def _export_network(inst, kind, chunk, path):
    if kind == "none":
        raise FrontendError("--dimacs-out needs --encoding seqcounter or cardnet")
    soft = next((o for o in inst.objectives if o.is_soft), None)
    if soft is None or not soft.softs:
        raise FrontendError("--dimacs-out needs a soft objective")
    units = [ch for g in group_by_weight([s.weight for s in soft.softs])
             for ch in split_chunks(g.members, chunk)]
    size = max(len(u) for u in units)
    net, _ = standalone_network(kind, size)
    with open(path, "w") as fh:
        fh.write(network_to_dimacs(net))


def solve_main(argv) -> int:
    args = _solve_parser().parse_args(argv)
    try:
        text = sys.stdin.read() if args.file == "-" else open(args.file).read()
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    try:
        script = parse(text)
        inst = from_script(script, os.path.basename(args.file))
        if args.dimacs_out:
            _export_network(inst, args.encoding, args.chunk, args.dimacs_out)
        cfg = SearchConfig(strategy=args.search, encoding=args.encoding, chunk=args.chunk,
                           ep=args.ep, seed=args.seed,
                           timeout=None if args.timeout is None else args.timeout / 1000)
        out = solve_instance(inst, cfg, args.engine)
    except (FrontendError, EncodingError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    heads = [c[0] for c in script.commands]
    word = {"Optimal": "sat", "Sat": "sat", "Unbounded": "sat", "Unsat": "unsat"}.get(out.status, "unknown")
    print(word)
    if out.names and out.status != "Unsat" and ("get-objectives" in heads
                                                or "get-model" not in heads):
        maxs = [o.maximize for o in inst.objectives] or [True]
        if inst.priority == "maxmin" and len(inst.objectives) > 1:
            maxs = [False]
        vals = " ".join(f"({n} {_value(v, out, m)})"
                        for n, v, m in zip(out.names, out.values, maxs))
        print(f"(objectives {vals})")
    if out.status in ("Optimal", "Sat", "Unbounded", "Timeout") and "get-model" in heads:
        _print_model(out, inst.sorts())
    if args.stats:
        for k, v in sorted(out.stats.items()):
            print(f"(:{k} {v})", file=sys.stderr)
    code = EXIT.get(out.status, 1)
    if args.verify and out.status == "Optimal":
        r = verify(inst, out)
        if r.ok:
            print("; verified", file=sys.stderr)
        else:
            print(f"; refuted ({r.check}): {r.reason}", file=sys.stderr)
            code = 1
    return code


def netcheck_main(argv) -> int:
    p = argparse.ArgumentParser(prog="omtsn netcheck",
                                description="exhaustively check bidirectional propagation")
    p.add_argument("--kind", choices=("seqcounter", "cardnet"), default="cardnet")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--dimacs", metavar="PATH", help="check a network exported with --dimacs-out")
    args = p.parse_args(argv)
    try:
        if args.dimacs:
            clauses, ins, outs, kind = network_from_dimacs(open(args.dimacs).read())
        else:
            if not 1 <= args.n <= 8:
                raise EncodingError("exhaustive check supports 1 <= n <= 8")
            net, _ = standalone_network(args.kind, args.n)
            clauses, ins, outs, kind = net.clauses, net.inputs, net.outputs, net.kind
    except (OSError, EncodingError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    bad = check_bidirectional(clauses, ins, outs)
    print(f"{kind} n={len(ins)} clauses={len(clauses)} violations={len(bad)}")
    for b in bad[:20]:
        print("  " + b)
    return 0 if not bad else 1


def gen_main(argv) -> int:
    p = argparse.ArgumentParser(prog="omtsn gen", description="write generated instances")
    p.add_argument("family", choices=[f for f in FAMILIES if f != "lmt-mixed"])
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=None, help="size parameter")
    p.add_argument("--out", default=".", help="output directory")
    args = p.parse_args(argv)
    size = {} if args.n is None else ({"n": args.n} if args.family in ("weight1", "example1")
                                       else {"n_soft": args.n})
    os.makedirs(args.out, exist_ok=True)
    for inst in generate_instances(args.family, args.count, args.seed, **size):
        path = os.path.join(args.out, inst.name + ".smt2")
        with open(path, "w") as fh:
            fh.write(instance_text(inst))
        print(path)
    return 0


def bench_main(argv) -> int:
    p = argparse.ArgumentParser(prog="omtsn bench", description="run the configuration matrix")
    p.add_argument("--family", choices=FAMILIES, default="maxsmt")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--encodings", default=",".join(NETWORK_KINDS))
    p.add_argument("--no-maxsat", action="store_true")
    p.add_argument("--ep", choices=EP_POLICIES, default="decision")
    p.add_argument("--timeout", type=int, default=None, metavar="MS")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="-")
    args = p.parse_args(argv)
    encs = tuple(e for e in args.encodings.split(",") if e)
    if any(e not in NETWORK_KINDS for e in encs):
        print(f"error: unknown encoding in {args.encodings!r}", file=sys.stderr)
        return 1
    size = {} if args.n is None else ({"n": args.n} if args.family in ("weight1", "example1", "lmt-mixed")
                                       else {"n_soft": args.n})
    insts = generate_instances(args.family, args.count, args.seed, **size)
    cfgs = config_matrix(encs, ep=args.ep, maxsat=not args.no_maxsat)
    _, text = run_bench(insts, cfgs, args.jobs,
                        None if args.timeout is None else args.timeout / 1000, args.seed)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    sub = {"netcheck": netcheck_main, "gen": gen_main, "bench": bench_main}
    try:
        if argv and argv[0] in sub:
            return sub[argv[0]](argv[1:])
        return solve_main(argv)
    except SystemExit as e:  # argparse usage errors and --help
        return 1 if e.code else 0


if __name__ == "__main__":
    sys.exit(main())
