"""Probing loop, append-only journal, and TRF preference (TRFP) dataset.

The journal is the source of truth: every judged run is written before any
aggregate is computed, aggregates are always recomputed from it, and a rerun
skips runs already present. Each run draws from its own seed derived from
(seed, question, TRF, run index), so an interrupted probe resumed later ends
with exactly the records an uninterrupted one would have written.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import IncompleteJournal, ProbeError
from .features import featurize
from .graph import QaInstance, TaskKind
from .metrics import GreParams, gre, preferred_set
from .protocol import JudgedRun, ProbeStats, judge, judge_runs
from .render import TRF_ORDER, Rasterizer, TrfKind, assemble_prompt


def run_seed(seed: int, question_id: str, trf: TrfKind, run_idx: int, salt: int = 0) -> list[int]:
    qkey = int.from_bytes(hashlib.sha256(question_id.encode()).digest()[:8], "little")
    return [int(seed), int(salt), qkey, TRF_ORDER.index(trf), int(run_idx)]


@dataclass(frozen=True)
class JournalRecord:
    question_id: str
    trf: TrfKind
    run_idx: int
    response: str
    tokens: int
    correct: bool
    extracted: str | None = None

    @property
    def key(self) -> tuple[str, TrfKind, int]:
        return self.question_id, self.trf, self.run_idx

    def to_json(self) -> str:
        return json.dumps({
            "question_id": self.question_id,
            "trf": self.trf.value,
            "run_idx": self.run_idx,
            "response": self.response,
            "tokens": self.tokens,
            "correct": self.correct,
            "extracted": self.extracted,
        }, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "JournalRecord":
        return cls(d["question_id"], TrfKind(d["trf"]), int(d["run_idx"]), d["response"],
                   int(d["tokens"]), bool(d["correct"]), d.get("extracted"))

    def judged(self) -> JudgedRun:
        return JudgedRun(self.response, self.tokens, self.extracted, self.correct)


class Journal:
    """Append-only JSONL file of judged runs; appends are serialized."""

    def __init__(self, path):
        self.path = os.fspath(path)
        self._lock = threading.Lock()
        self._records: dict[tuple[str, TrfKind, int], JournalRecord] = {}
        if os.path.exists(self.path):
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    try:
                        rec = JournalRecord.from_dict(json.loads(line))
                    except (ValueError, KeyError):
                        # a torn final line from an interrupted write
                        continue
                    self._records.setdefault(rec.key, rec)

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, key) -> bool:
        return key in self._records

    def append(self, record: JournalRecord) -> None:
        with self._lock:
            if record.key in self._records:
                return
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(record.to_json() + "\n")
            self._records[record.key] = record

    def records(self) -> list[JournalRecord]:
        with self._lock:
            return sorted(self._records.values(), key=lambda r: (r.question_id, TRF_ORDER.index(r.trf), r.run_idx))


def stats_from_records(
    records: Iterable[JournalRecord], k: int, trfs: Iterable[TrfKind] = TRF_ORDER, strict: bool = True
) -> dict[str, dict[TrfKind, ProbeStats]]:
    """Per-question, per-TRF ProbeStats from the first k runs of each cell.

    With ``strict`` a cell with fewer than k runs raises IncompleteJournal;
    otherwise such cells are left out.
    """
    trfs = tuple(trfs)
    cells: dict[str, dict[TrfKind, dict[int, JournalRecord]]] = {}
    for rec in records:
        if rec.run_idx < k and rec.trf in trfs:
            cells.setdefault(rec.question_id, {}).setdefault(rec.trf, {})[rec.run_idx] = rec
    out: dict[str, dict[TrfKind, ProbeStats]] = {}
    for qid in sorted(cells):
        row = {}
        for trf in trfs:
            runs = cells[qid].get(trf, {})
            if len(runs) < k:
                if strict:
                    raise IncompleteJournal(f"question {qid} has {len(runs)}/{k} runs for {trf.value}")
                continue
            row[trf] = judge_runs(runs[i].judged() for i in range(k))
        out[qid] = row
    return out


@dataclass
class Prober:
    """Render, query, judge and journal (question, TRF, run) cells."""

    client: object
    journal: Journal
    params: GreParams = field(default_factory=GreParams)
    seed: int = 0
    salt: int = 0
    cot: bool = False
    rasterizer: Rasterizer | None = None
    workers: int = 1

    def _prompt(self, instance: QaInstance, trf: TrfKind):
        raster = self.rasterizer if getattr(self.client, "needs_images", False) else None
        return assemble_prompt(instance, trf, cot=self.cot, rasterizer=raster)

    def _run_one(self, instance: QaInstance, trf: TrfKind, run_idx: int, prompt) -> None:
        try:
            text, tokens = self.client.respond(instance, prompt, run_seed(self.seed, instance.id, trf, run_idx, self.salt))
        except Exception as exc:
            raise ProbeError(instance.id, trf.value, run_idx, exc) from exc
        judged = judge(instance, text, tokens)
        self.journal.append(JournalRecord(instance.id, trf, run_idx, text, judged.completion_tokens,
                                          judged.correct, judged.extracted))

    def pending(self, instances: Iterable[QaInstance], trfs: Iterable[TrfKind] = TRF_ORDER):
        for inst in instances:
            for trf in trfs:
                for r in range(self.params.k):
                    if (inst.id, trf, r) not in self.journal:
                        yield inst, trf, r

    def run(self, instances: Iterable[QaInstance], trfs: Iterable[TrfKind] = TRF_ORDER,
            selection: Mapping[str, Iterable[TrfKind]] | None = None) -> None:
        """Fill every missing cell. ``selection`` restricts TRFs per question id."""
        instances = list(instances)
        trfs = tuple(trfs)
        jobs = []
        prompts: dict[tuple[str, TrfKind], object] = {}
        for inst in instances:
            wanted = tuple(selection[inst.id]) if selection is not None else trfs
            for inst_, trf, r in self.pending([inst], wanted):
                key = (inst.id, trf)
                if key not in prompts:
                    try:
                        prompts[key] = self._prompt(inst, trf)
                    except Exception as exc:
                        raise ProbeError(inst.id, trf.value, r, exc) from exc
                jobs.append((inst, trf, r, prompts[key]))
        if self.workers <= 1:
            for job in jobs:
                self._run_one(*job)
            return
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            futures = [pool.submit(self._run_one, *job) for job in jobs]
            errors = [f.exception() for f in futures if f.exception() is not None]
        if errors:
            raise errors[0]

    def probe_question(self, instance: QaInstance, trfs: Iterable[TrfKind] = TRF_ORDER) -> dict[TrfKind, ProbeStats]:
        trfs = tuple(trfs)
        self.run([instance], trfs)
        recs = [r for r in self.journal.records() if r.question_id == instance.id]
        return stats_from_records(recs, self.params.k, trfs)[instance.id]


def probe_question(instance: QaInstance, client, params: GreParams, journal: Journal, seed: int = 0,
                   **kwargs) -> dict[TrfKind, ProbeStats]:
    """Probe all 8 TRFs k times for one question and return their ProbeStats."""
    return Prober(client, journal, params, seed, **kwargs).probe_question(instance)


# ---------------------------------------------------------------------------
# TRFP dataset


@dataclass(frozen=True)
class TrfpExample:
    question_id: str
    task: TaskKind
    features: tuple[float, ...]
    label_set: tuple[TrfKind, ...]
    per_trf_gre: dict[TrfKind, float]

    def __post_init__(self):
        if not self.label_set:
            raise ValueError("label_set must be nonempty")

    def to_json(self) -> str:
        return json.dumps({
            "question_id": self.question_id,
            "task": self.task.value,
            "features": list(self.features),
            "label_set": [t.value for t in self.label_set],
            "per_trf_gre": {t.value: self.per_trf_gre[t] for t in TRF_ORDER},
        }, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "TrfpExample":
        return cls(
            d["question_id"], TaskKind(d["task"]), tuple(float(x) for x in d["features"]),
            tuple(TrfKind(t) for t in d["label_set"]),
            {TrfKind(k): float(v) for k, v in d["per_trf_gre"].items()},
        )


def make_example(instance: QaInstance, stats: Mapping[TrfKind, ProbeStats], alpha: float) -> TrfpExample:
    per = {t: gre(stats[t], alpha) for t in TRF_ORDER}
    return TrfpExample(instance.id, instance.task, tuple(float(x) for x in featurize(instance)),
                       tuple(preferred_set(per)), per)


def build_trfp(instances: Iterable[QaInstance], records: Iterable[JournalRecord], params: GreParams) -> list[TrfpExample]:
    """One TrfpExample per instance, labels recomputed from the journal."""
    instances = list(instances)
    stats = stats_from_records(records, params.k)
    out = []
    for inst in instances:
        if inst.id not in stats:
            raise IncompleteJournal(f"question {inst.id} missing from the journal")
        out.append(make_example(inst, stats[inst.id], params.alpha))
    return out


def write_trfp(path, examples: Iterable[TrfpExample]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(ex.to_json() + "\n")


def read_trfp(path) -> list[TrfpExample]:
    with open(path, encoding="utf-8") as fh:
        return [TrfpExample.from_dict(json.loads(line)) for line in fh if line.strip()]


def label_frequencies(examples: Iterable[TrfpExample]) -> dict[TaskKind, list[tuple[TrfKind, float]]]:
    """Per task: TRFs ranked by the share of questions whose label set contains them.

    Shares can sum above 100% within a task because label sets may hold ties.
    """
    counts: dict[TaskKind, dict[TrfKind, int]] = {}
    totals: dict[TaskKind, int] = {}
    for ex in examples:
        totals[ex.task] = totals.get(ex.task, 0) + 1
        row = counts.setdefault(ex.task, {t: 0 for t in TRF_ORDER})
        for t in ex.label_set:
            row[t] += 1
    out = {}
    for task in TaskKind:
        if task not in totals:
            continue
        ranked = sorted(TRF_ORDER, key=lambda t: (-counts[task][t], TRF_ORDER.index(t)))
        out[task] = [(t, 100.0 * counts[task][t] / totals[task]) for t in ranked]
    return out


_ORDINALS = ["1st", "2nd", "3rd", "4th", "5th", "6th", "7th", "8th"]


def frequency_tsv(examples: Iterable[TrfpExample], top: int = 8) -> str:
    freq = label_frequencies(examples)
    tasks = list(freq)
    lines = ["rank\t" + "\t".join(t.value for t in tasks)]
    for r in range(min(top, len(TRF_ORDER))):
        cells = [f"{freq[t][r][0].value} ({freq[t][r][1]:.1f}%)" for t in tasks]
        lines.append(_ORDINALS[r] + "\t" + "\t".join(cells))
    return "\n".join(lines) + "\n"
