"""Benchmark harness: one CSV row per (instance, configuration) and a summary block.

Columns (times are integer milliseconds; rationals print as ``p/q``)::

    instance, engine, encoding, search, chunk, ep, status, optimum, time_ms,
    decisions, conflicts, propagations, theory_checks, theory_conflicts,
    learned, cuts, pb_conflicts, best_bound

Multi-objective optima are joined with ``;``.  The summary block follows a
blank line; each line starts with ``#`` and lists per-configuration
terminated, timeout and error counts, total time and optimum mismatches
against the per-instance majority.
"""

from __future__ import annotations

import csv
import io
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from ..core import format_rational
from ..encoders import NETWORK_KINDS
from ..omt import STRATEGIES, SearchConfig
from .driver import Outcome, build_problem, solve_instance

COLUMNS = ["instance", "engine", "encoding", "search", "chunk", "ep", "status", "optimum",
           "time_ms", "decisions", "conflicts", "propagations", "theory_checks",
           "theory_conflicts", "learned", "cuts", "pb_conflicts", "best_bound"]
TIMING_COLUMNS = ("time_ms",)
STAT_COLUMNS = ("decisions", "conflicts", "propagations", "theory_checks",
                "theory_conflicts", "learned", "cuts", "pb_conflicts")


@dataclass(frozen=True)
class BenchConfig:
    engine: str = "omt"
    encoding: str = "cardnet"
    search: str = "linear"
    chunk: int | None = None
    ep: str = "decision"

    @property
    def label(self) -> str:
        if self.engine == "maxsat":
            return f"maxsat/core-guided/{self.ep}"
        ch = "inf" if self.chunk is None else self.chunk
        return f"omt/{self.encoding}/{self.search}/{ch}/{self.ep}"


def config_matrix(encodings=NETWORK_KINDS, searches=STRATEGIES, chunks=(None, 4),
                  ep="decision", maxsat=True) -> list[BenchConfig]:
    out = [BenchConfig("omt", e, s, c, ep) for e in encodings for s in searches for c in chunks]
    if maxsat:
        out.append(BenchConfig("maxsat", "-", "-", None, ep))
    return out


def _fmt(v) -> str:
    if v is None:
        return ""
    return format_rational(v)


def _fmt_values(values) -> str:
    if not values or all(v is None for v in values):
        return ""
    return ";".join(_fmt(v) for v in values)


def _fallback_bound(inst):
    try:
        _, stages = build_problem(inst)
    except Exception:
        return None
    return stages[0].upper


def run_one(inst, cfg: BenchConfig, timeout: float | None = None, seed: int = 0) -> dict:
    row = {"instance": inst.name, "engine": cfg.engine, "encoding": cfg.encoding,
           "search": cfg.search, "chunk": "inf" if cfg.chunk is None else str(cfg.chunk),
           "ep": cfg.ep}
    if cfg.engine == "maxsat":
        row.update(encoding="-", search="-", chunk="-")
    t0 = time.perf_counter()
    try:
        sc = SearchConfig(strategy=cfg.search if cfg.engine == "omt" else "linear",
                          encoding=cfg.encoding if cfg.engine == "omt" else "none",
                          chunk=cfg.chunk, ep=cfg.ep, seed=seed, timeout=timeout)
        out: Outcome = solve_instance(inst, sc, cfg.engine)
    except Exception as e:  # recorded, the harness continues
        row.update(status="Error", optimum="", time_ms=int((time.perf_counter() - t0) * 1000),
                   best_bound="", error=f"{type(e).__name__}: {e}")
        for k in STAT_COLUMNS:
            row[k] = ""
        return row
    row["status"] = out.status
    row["optimum"] = _fmt_values(out.values) if out.status == "Optimal" else ""
    row["time_ms"] = int((time.perf_counter() - t0) * 1000)
    for k in STAT_COLUMNS:
        row[k] = out.stats.get(k, 0)
    if out.status == "Optimal":
        bound = _fmt_values(out.values)
    elif out.status == "Timeout":
        b = out.bound if out.bound is not None else _fallback_bound(inst)
        bound = _fmt(b)
    else:
        bound = ""
    row["best_bound"] = bound
    return row


def _task(args):
    return run_one(*args)


def summarize(rows: list[dict], configs: list[BenchConfig]) -> list[str]:
    key = {c.label: c for c in configs}
    by_inst: dict[str, Counter] = {}
    for r in rows:
        if r["status"] in ("Optimal", "Unsat", "Unbounded"):
            by_inst.setdefault(r["instance"], Counter())[(r["status"], r["optimum"])] += 1
    majority = {i: c.most_common(1)[0][0] for i, c in by_inst.items()}
    lines = ["# config,terminated,timeouts,errors,total_time_ms,mismatches"]
    for label in key:
        mine = [r for r in rows if r["_label"] == label]
        term = sum(r["status"] in ("Optimal", "Unsat", "Unbounded") for r in mine)
        tos = sum(r["status"] == "Timeout" for r in mine)
        errs = sum(r["status"] == "Error" for r in mine)
        total = sum(int(r["time_ms"]) for r in mine)
        mism = sum(1 for r in mine if r["status"] in ("Optimal", "Unsat", "Unbounded")
                   and majority.get(r["instance"]) != (r["status"], r["optimum"]))
        lines.append(f"# {label},{term},{tos},{errs},{total},{mism}")
    return lines


def run_bench(instances, configs=None, parallelism: int = 1, timeout: float | None = None,
              seed: int = 0) -> tuple[list[dict], str]:
    """Run every configuration on every instance; returns rows and the CSV text."""
    configs = list(configs) if configs is not None else config_matrix()
    tasks = [(inst, cfg, timeout, seed) for inst in instances for cfg in configs]
    if parallelism > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as ex:
            rows = list(ex.map(_task, tasks))
    else:
        rows = [_task(t) for t in tasks]
    for (_, cfg, _, _), r in zip(tasks, rows):
        r["_label"] = cfg.label
    buf = io.StringIO()
    w = csv.DictWriter(buf, COLUMNS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    buf.write("\n")
    for line in summarize(rows, configs):
        buf.write(line + "\n")
    return rows, buf.getvalue()


def strip_timing(text: str) -> str:
    """The CSV with timing columns (and summary total times) blanked."""
    out = []
    lines = text.split("\n")
    idx = [COLUMNS.index(c) for c in TIMING_COLUMNS]
    for line in lines:
        if line.startswith("#"):
            parts = line.split(",")
            if len(parts) == 6 and not line.startswith("# config"):
                parts[4] = ""
            out.append(",".join(parts))
        elif line:
            parts = next(csv.reader([line]))
            for i in idx:
                if i < len(parts):
                    parts[i] = ""
            out.append(",".join(parts))
        else:
            out.append(line)
    return "\n".join(out)
