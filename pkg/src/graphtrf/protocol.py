"""Answer extraction and judging."""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass

from . import oracles
from .errors import EmptyRuns
from .graph import QaInstance, TaskKind

# content may not contain another opening tag, so "<answer><answer>x</answer>" yields "x"
_ANSWER_SPAN = re.compile(r"<answer>((?:(?!<answer>).)*?)</answer>", re.DOTALL)
_CLASS = re.compile(r"class\s*(\d+)", re.IGNORECASE)


def extract_answer(response_text: str) -> str | None:
    """Trimmed content of the last ``<answer>...</answer>`` span, or None."""
    spans = _ANSWER_SPAN.findall(response_text or "")
    if not spans:
        return None
    return spans[-1].strip()


def wrap_answer(answer: str) -> str:
    return f"<answer>{answer}</answer>"


def parse_path(text: str) -> list[int] | None:
    parts = [p.strip() for p in text.split("->")]
    if not parts or any(not p.isdigit() for p in parts):
        return None
    return [int(p) for p in parts]


def _parse_int(text: str) -> int | None:
    text = text.strip()
    if re.fullmatch(r"[+-]?\d+", text):
        return int(text)
    return None


def _yes_no(text: str) -> bool | None:
    low = text.strip().lower()
    if low == "yes":
        return True
    if low == "no":
        return False
    return None


def format_gold(instance: QaInstance) -> str:
    """The canonical answer string a correct response would carry."""
    gold, task = instance.gold, instance.task
    if task in (TaskKind.CONN, TaskKind.CYC, TaskKind.LP):
        return "Yes" if gold else "No"
    if task in (TaskKind.TS, TaskKind.SP, TaskKind.HP):
        return "->".join(map(str, gold))
    if task is TaskKind.NC:
        return f"Class {gold}"
    return str(gold)


def validate_answer(instance: QaInstance, answer: str | None) -> bool:
    """Judge an extracted answer against the instance; unparseable answers are wrong.

    Path-shaped answers are checked structurally, so any valid ordering or
    optimal path is accepted, not only the stored canonical witness.
    """
    if answer is None:
        return False
    task, g, p = instance.task, instance.graph, instance.params
    if task in (TaskKind.CONN, TaskKind.CYC, TaskKind.LP):
        verdict = _yes_no(answer)
        return verdict is not None and verdict == bool(instance.gold)
    if task in (TaskKind.MF, TaskKind.BGM):
        value = _parse_int(answer)
        return value is not None and value == int(instance.gold)
    if task is TaskKind.NC:
        m = _CLASS.fullmatch(answer.strip())
        return m is not None and int(m.group(1)) == int(instance.gold)
    path = parse_path(answer)
    if path is None:
        return False
    if any(not (0 <= x < g.node_count) for x in path):
        return False
    if task is TaskKind.TS:
        return oracles.is_topological_order(g, path)
    if task is TaskKind.SP:
        if len(path) < 2 or path[0] != p["u"] or path[-1] != p["v"] or len(set(path)) != len(path):
            return False
        weight = oracles.path_weight(g, path)
        best = oracles.path_weight(g, instance.gold)
        return weight is not None and weight == best
    if task is TaskKind.HP:
        return oracles.is_hamilton_path(g, path, p.get("start", 0))
    raise ValueError(f"no validator for {task}")


def estimate_tokens(text: str) -> int:
    """Fallback token count when a provider omits usage: ceil(chars / 4)."""
    return math.ceil(len(text) / 4)


@dataclass(frozen=True)
class JudgedRun:
    response_text: str
    completion_tokens: int
    extracted: str | None
    correct: bool

    def __post_init__(self):
        if self.completion_tokens < 0:
            raise ValueError("completion_tokens must be >= 0")
        if self.correct and self.extracted is None:
            raise ValueError("a correct run must carry an extracted answer")

    def to_dict(self) -> dict:
        return asdict(self)


def judge(instance: QaInstance, response_text: str, completion_tokens: int) -> JudgedRun:
    extracted = extract_answer(response_text)
    return JudgedRun(response_text, int(completion_tokens), extracted, validate_answer(instance, extracted))


@dataclass(frozen=True)
class ProbeStats:
    """Accuracy ratio and mean completion tokens over k runs."""

    accuracy: float
    avg_tok: float

    def __post_init__(self):
        if not (0.0 <= self.accuracy <= 1.0):
            raise ValueError(f"accuracy {self.accuracy} outside [0, 1]")
        if not self.avg_tok > 0:
            raise ValueError(f"avg_tok must be positive, got {self.avg_tok}")


def judge_runs(runs) -> ProbeStats:
    """Aggregate k judged runs: accuracy = correct / k, avg_tok = mean tokens over all runs."""
    runs = list(runs)
    if not runs:
        raise EmptyRuns("judge_runs needs at least one run")
    correct = sum(1 for r in runs if r.correct)
    tokens = sum(r.completion_tokens for r in runs)
    return ProbeStats(correct / len(runs), tokens / len(runs))
