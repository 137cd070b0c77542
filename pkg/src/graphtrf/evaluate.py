"""Routing strategies over an evaluation journal, and the table-shaped report."""

from __future__ import annotations

import math
from typing import Mapping, Sequence

from .graph import QaInstance, TaskKind
from .metrics import ProbeStats, TaskAggregate, gre, task_aggregate
from .render import TRF_ORDER, TrfKind
from .router import ideal_route, route_with

FIXED = "fixed"
LEARNED = "learned"
IDEAL = "ideal"


def parse_strategy(text: str) -> tuple[str, TrfKind | None]:
    """``fixed:<TRF>``, ``learned`` or ``ideal``."""
    text = text.strip()
    if text.lower() in (LEARNED, IDEAL):
        return text.lower(), None
    head, sep, tail = text.partition(":")
    if head.lower() == FIXED and sep:
        return FIXED, TrfKind.parse(tail)
    raise ValueError(f"unknown strategy {text!r}: use fixed:<TRF>, learned or ideal")


def strategy_name(kind: str, trf: TrfKind | None) -> str:
    return f"{FIXED}:{trf.value}" if kind == FIXED else kind


def all_strategies() -> list[str]:
    return [strategy_name(FIXED, t) for t in TRF_ORDER] + [LEARNED, IDEAL]


def needed_trfs(strategy: str, instances: Sequence[QaInstance], router=None) -> dict[str, list[TrfKind]]:
    """TRFs each question must be probed with before ``strategy`` can be scored."""
    kind, trf = parse_strategy(strategy)
    if kind == FIXED:
        return {q.id: [trf] for q in instances}
    if kind == LEARNED:
        return {q.id: [route_with(router, q)] for q in instances}
    return {q.id: list(TRF_ORDER) for q in instances}


def choose(strategy: str, instances: Sequence[QaInstance], stats: Mapping[str, Mapping[TrfKind, ProbeStats]],
           alpha: float, router=None) -> dict[str, TrfKind]:
    """The TRF each question is answered with under ``strategy``.

    Ideal routing picks by GRE on the evaluation runs themselves, so it is an
    upper bound rather than a deployable strategy.
    """
    kind, trf = parse_strategy(strategy)
    if kind == FIXED:
        return {q.id: trf for q in instances}
    if kind == LEARNED:
        return {q.id: route_with(router, q) for q in instances}
    return {q.id: ideal_route({t: gre(stats[q.id][t], alpha) for t in TRF_ORDER}) for q in instances}


def aggregate(instances: Sequence[QaInstance], stats: Mapping[str, Mapping[TrfKind, ProbeStats]],
              choice: Mapping[str, TrfKind], alpha: float) -> dict[TaskKind, TaskAggregate]:
    by_task: dict[TaskKind, list[ProbeStats]] = {}
    for q in instances:
        by_task.setdefault(q.task, []).append(stats[q.id][choice[q.id]])
    return {t: task_aggregate(by_task[t], alpha) for t in TaskKind if t in by_task}


def _num(x: float) -> str:
    return repr(float(x))


def report_tsv(results: Mapping[str, Mapping[TaskKind, TaskAggregate]], alpha: float) -> str:
    """Rows are strategies, and each task gets acc, tok and GRE columns.

    Numbers are written at full precision so GRE can be recomputed from the
    acc and tok columns; ``pretty_report`` rounds for reading.
    """
    tasks = [t for t in TaskKind if any(t in r for r in results.values())]
    head = ["strategy"] + [f"{t.value}.{c}" for t in tasks for c in ("acc", "tok", "gre")]
    lines = [f"# alpha={alpha!r}", "\t".join(head)]
    for name, row in results.items():
        cells = [name]
        for t in tasks:
            agg = row.get(t)
            cells += [_num(agg.acc_pct), _num(agg.avg_tok), _num(agg.gre)] if agg else ["", "", ""]
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> tuple[float, dict[str, dict[str, tuple[float, float, float]]]]:
    """Inverse of ``report_tsv``: (alpha, strategy -> task -> (acc, tok, gre))."""
    lines = [ln for ln in text.splitlines() if ln]
    alpha = float(lines[0].split("=", 1)[1])
    head = lines[1].split("\t")
    tasks = [h.split(".")[0] for h in head[1::3]]
    out: dict[str, dict[str, tuple[float, float, float]]] = {}
    for ln in lines[2:]:
        if ln.startswith("#"):
            break
        cells = ln.split("\t")
        row = {}
        for i, t in enumerate(tasks):
            a, k, g = cells[1 + 3 * i: 4 + 3 * i]
            if a:
                row[t] = (float(a), float(k), float(g))
        out[cells[0]] = row
    return alpha, out


def pretty_report(text: str) -> str:
    """Fixed-width Acc(Tok) / GRE rendering of a report TSV, one decimal place."""
    alpha, rows = parse_report(text)
    tasks = [t.value for t in TaskKind if any(t.value in r for r in rows.values())]
    width = max([len(n) for n in rows] + [8])
    out = [" " * width + "".join(f"  {t:>19}" for t in tasks)]
    for name, row in rows.items():
        cells = []
        for t in tasks:
            if t in row:
                a, k, g = row[t]
                cells.append(f"  {f'{a:.1f}({k:.1f})':>13} {g:>5.1f}")
            else:
                cells.append(" " * 21)
        out.append(name.ljust(width) + "".join(cells))
    out.append(f"alpha = {alpha:g}")
    # the verification block is already readable; pass it through
    _, sep, block = text.partition("\n# ideal routing")
    if sep:
        out.append("\n# ideal routing" + block.rstrip("\n"))
    return "\n".join(out) + "\n"


def best_fixed(results: Mapping[str, Mapping[TaskKind, TaskAggregate]], task: TaskKind) -> float:
    vals = [row[task].gre for name, row in results.items() if name.startswith(FIXED + ":") and task in row]
    return max(vals) if vals else -math.inf
