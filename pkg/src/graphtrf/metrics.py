"""Graph Response Efficiency (GRE) and the quantities derived from it."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import EmptyRecords, ZeroAccuracy
from .protocol import ProbeStats
from .render import TRF_ORDER, TrfKind

__all__ = [
    "GreParams", "ProbeStats", "gre", "log_objectives", "preferred_set",
    "task_aggregate", "TaskAggregate",
]


@dataclass(frozen=True)
class GreParams:
    """Trade-off exponent and number of runs per (question, TRF).

    ``alpha = 0`` is accepted and reduces GRE to scaled accuracy.
    """

    alpha: float = 0.5
    k: int = 10

    def __post_init__(self):
        if self.alpha < 0 or not math.isfinite(self.alpha):
            raise ValueError(f"alpha must be a finite value >= 0, got {self.alpha}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


def gre(stats: ProbeStats, params: GreParams | float = 0.5) -> float:
    """100 * accuracy / avg_tok ** alpha."""
    alpha = params.alpha if isinstance(params, GreParams) else float(params)
    return 100.0 * stats.accuracy / stats.avg_tok ** alpha


def log_objectives(stats: ProbeStats, params: GreParams | float = 0.5) -> tuple[float, float]:
    """(log(100 * accuracy), -log(avg_tok)); log gre = acc_obj + alpha * eff_obj."""
    if stats.accuracy <= 0:
        raise ZeroAccuracy("accuracy objective undefined at zero accuracy")
    return math.log(100.0 * stats.accuracy), -math.log(stats.avg_tok)


def preferred_set(per_trf_gre: Mapping[TrfKind, float]) -> list[TrfKind]:
    """Every TRF attaining the maximum GRE (exact equality), in canonical order."""
    missing = [t for t in TRF_ORDER if t not in per_trf_gre]
    if missing:
        raise ValueError(f"GRE map lacks {[t.value for t in missing]}")
    best = max(per_trf_gre[t] for t in TRF_ORDER)
    return [t for t in TRF_ORDER if per_trf_gre[t] == best]


@dataclass(frozen=True)
class TaskAggregate:
    acc_pct: float
    avg_tok: float
    gre: float
    count: int


def task_aggregate(records: Iterable[ProbeStats], alpha: float = 0.5) -> TaskAggregate:
    """Task-level accuracy %, mean tokens, and GRE of those two means.

    The GRE here is computed from the averages, not averaged over questions.
    """
    records = list(records)
    if not records:
        raise EmptyRecords("task_aggregate needs at least one record")
    acc_pct = 100.0 * sum(r.accuracy for r in records) / len(records)
    avg_tok = sum(r.avg_tok for r in records) / len(records)
    return TaskAggregate(acc_pct, avg_tok, acc_pct / avg_tok ** alpha, len(records))


def gre_from_pct(acc_pct: float, avg_tok: float, alpha: float = 0.5) -> float:
    """GRE from a reported accuracy percentage and token count."""
    return acc_pct / avg_tok ** alpha
