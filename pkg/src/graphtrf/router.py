"""Multi-label TRF router, routing strategies, and the ideal-routing check."""

from __future__ import annotations

import base64
import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import Degenerate, DimensionMismatch, IncompleteJournal
from .features import FEATURE_DIM, FEATURE_LAYOUT, featurize
from .graph import QaInstance
from .metrics import ProbeStats, gre, log_objectives, preferred_set
from .probe import TrfpExample
from .render import TRF_ORDER, TrfKind

MODEL_VERSION = 1


@dataclass(frozen=True)
class Hyper:
    lr: float = 0.5
    epochs: int = 200
    batch: int = 64
    l2: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if self.epochs < 0 or self.batch < 1 or self.l2 < 0:
            raise ValueError("epochs >= 0, batch >= 1 and l2 >= 0 required")

    def to_dict(self) -> dict:
        return {"lr": self.lr, "epochs": self.epochs, "batch": self.batch, "l2": self.l2, "seed": self.seed}


@dataclass
class RouterModel:
    W: np.ndarray
    b: np.ndarray
    layout: str = FEATURE_LAYOUT
    trf_order: tuple[TrfKind, ...] = TRF_ORDER
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.W.shape != (len(self.trf_order), self.W.shape[1]) or self.b.shape != (len(self.trf_order),):
            raise DimensionMismatch(f"weights {self.W.shape} / bias {self.b.shape} do not match {len(self.trf_order)} TRFs")
        if not (np.isfinite(self.W).all() and np.isfinite(self.b).all()):
            raise ValueError("router weights must be finite")

    @property
    def feature_dim(self) -> int:
        return self.W.shape[1]

    def to_json(self) -> str:
        def enc(a):
            return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii")

        return json.dumps({
            "version": MODEL_VERSION,
            "layout": self.layout,
            "trf_order": [t.value for t in self.trf_order],
            "shape": list(self.W.shape),
            "W": enc(self.W),
            "b": enc(self.b),
            "meta": self.meta,
        }, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "RouterModel":
        d = json.loads(text)
        if d.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')}")
        rows, cols = d["shape"]

        def dec(s, shape):
            return np.frombuffer(base64.b64decode(s), dtype="<f8").astype(np.float64).reshape(shape)

        return cls(dec(d["W"], (rows, cols)), dec(d["b"], (rows,)), d["layout"],
                   tuple(TrfKind(t) for t in d["trf_order"]), d.get("meta", {}))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "RouterModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


def label_matrix(examples: Sequence[TrfpExample]) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([ex.features for ex in examples], dtype=np.float64)
    Y = np.zeros((len(examples), len(TRF_ORDER)))
    for i, ex in enumerate(examples):
        for t in ex.label_set:
            Y[i, TRF_ORDER.index(t)] = 1.0
    return X, Y


def bce_loss(model: RouterModel, X, Y) -> float:
    return kernels.bce_loss_grad(X, Y, model.W, model.b)[0]


def train(dataset: Sequence[TrfpExample], hyper: Hyper = Hyper()) -> RouterModel:
    """Mini-batch gradient descent on the mean multi-label BCE, from zero weights.

    Shuffling uses ``hyper.seed`` only, so the same dataset and hyperparameters
    give the same weights on the same backend.
    """
    dataset = list(dataset)
    if not dataset:
        raise ValueError("cannot train on an empty dataset")
    X, Y = label_matrix(dataset)
    d = X.shape[1]
    W = np.zeros((len(TRF_ORDER), d))
    b = np.zeros(len(TRF_ORDER))
    rng = np.random.default_rng(hyper.seed)
    curve = [kernels.bce_loss_grad(X, Y, W, b)[0]]
    for _ in range(hyper.epochs):
        order = rng.permutation(X.shape[0])
        kernels.sgd_epoch(X, Y, W, b, order, hyper.batch, hyper.lr, hyper.l2)
        curve.append(kernels.bce_loss_grad(X, Y, W, b)[0])
    if hyper.epochs and (Y == Y[0]).all() and min(curve[1:]) >= curve[0]:
        raise Degenerate("all examples share one label set and the loss never decreased")
    meta = {
        "hyper": hyper.to_dict(),
        "examples": X.shape[0],
        "loss_curve": curve,
        "final_loss": curve[-1],
        "backend": kernels.backend(hyper.batch),
    }
    return RouterModel(W, b, meta=meta)


def _check_dim(model: RouterModel, x: np.ndarray) -> None:
    if x.shape[-1] != model.feature_dim:
        raise DimensionMismatch(f"features have dimension {x.shape[-1]}, model expects {model.feature_dim}")


def predict(model: RouterModel, features) -> dict[TrfKind, float]:
    x = np.asarray(features, dtype=np.float64)
    _check_dim(model, x)
    z = model.W @ x + model.b
    p = 1.0 / (1.0 + np.exp(-z))
    return {t: float(p[i]) for i, t in enumerate(model.trf_order)}


def predict_matrix(model: RouterModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    _check_dim(model, X)
    return 1.0 / (1.0 + np.exp(-(X @ model.W.T + model.b)))


def argmax_trf(scores: Mapping[TrfKind, float]) -> TrfKind:
    """Highest score; exact ties go to the earliest TRF in canonical order."""
    best = None
    for t in TRF_ORDER:
        if t in scores and (best is None or scores[t] > scores[best]):
            best = t
    if best is None:
        raise ValueError("no scores to route on")
    return best


def route(model: RouterModel, instance: QaInstance) -> TrfKind:
    return argmax_trf(predict(model, featurize(instance)))


def ideal_route(per_trf_gre: Mapping[TrfKind, float]) -> TrfKind:
    return preferred_set(per_trf_gre)[0]


class ExternalRouter:
    """Routes from ``router_predictions.jsonl``: one line per question with
    ``question_id`` and ``probs`` (8 probabilities keyed or ordered by TRF)."""

    def __init__(self, path):
        self.probs: dict[str, dict[TrfKind, float]] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                d = json.loads(line)
                probs = d["probs"]
                if isinstance(probs, list):
                    if len(probs) != len(TRF_ORDER):
                        raise DimensionMismatch(f"{d['question_id']}: expected 8 probabilities")
                    probs = dict(zip(TRF_ORDER, probs))
                else:
                    probs = {TrfKind.parse(k): v for k, v in probs.items()}
                self.probs[d["question_id"]] = {t: float(v) for t, v in probs.items()}

    def route(self, instance: QaInstance) -> TrfKind:
        try:
            return argmax_trf(self.probs[instance.id])
        except KeyError:
            raise KeyError(f"no external prediction for {instance.id}") from None


def load_router(path):
    """A RouterModel file, or an interchange predictions file (``.jsonl``)."""
    if os.fspath(path).endswith(".jsonl"):
        return ExternalRouter(path)
    return RouterModel.load(path)


def route_with(router, instance: QaInstance) -> TrfKind:
    if isinstance(router, RouterModel):
        return route(router, instance)
    return router.route(instance)


# ---------------------------------------------------------------------------
# ideal routing versus fixed TRFs


@dataclass(frozen=True)
class ParetoRow:
    trf: TrfKind
    gre_gap: float  # mean GRE of ideal minus mean GRE of this TRF, all questions
    log_gap: float  # same for log GRE, on questions with nonzero accuracy under both
    log_count: int
    inequality_ok: bool  # rearranged per-question inequality held on every such question
    violations: int
    dominated: bool  # ideal at least as accurate and at most as costly on average

    @property
    def passed(self) -> bool:
        return self.gre_gap >= 0 and self.inequality_ok


@dataclass(frozen=True)
class ParetoReport:
    alpha: float
    questions: int
    rows: tuple[ParetoRow, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_tsv(self) -> str:
        lines = [f"# ideal routing vs fixed TRFs, alpha={self.alpha:g}, questions={self.questions}",
                 "trf\tgre_gap\tlog_gre_gap\tlog_n\tinequality\tviolations\tdominated\tresult"]
        for r in self.rows:
            lines.append(f"{r.trf.value}\t{r.gre_gap:.6f}\t{r.log_gap:.6f}\t{r.log_count}\t"
                         f"{'ok' if r.inequality_ok else 'violated'}\t{r.violations}\t"
                         f"{'yes' if r.dominated else 'no'}\t{'pass' if r.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


def verify_pareto(stats: Mapping[str, Mapping[TrfKind, ProbeStats]], alpha: float = 0.5,
                  tol: float = 1e-12) -> ParetoReport:
    """Compare ideal routing with each fixed TRF over per-question ProbeStats.

    For every question where both the ideal choice and ``f`` have nonzero
    accuracy, the check is acc_obj* - acc_obj_f >= alpha * (eff_f - eff*), the
    log form of GRE* >= GRE_f split into its accuracy and token parts.
    """
    qids = sorted(stats)
    if not qids:
        raise IncompleteJournal("journal holds no questions")
    for q in qids:
        missing = [t.value for t in TRF_ORDER if t not in stats[q]]
        if missing:
            raise IncompleteJournal(f"question {q} lacks TRFs {missing}")
    ideal = {}
    G = {}
    for q in qids:
        G[q] = {t: gre(stats[q][t], alpha) for t in TRF_ORDER}
        ideal[q] = ideal_route(G[q])
    rows = []
    for f in TRF_ORDER:
        gap = sum(G[q][ideal[q]] - G[q][f] for q in qids) / len(qids)
        log_diffs = []
        violations = 0
        for q in qids:
            s_star, s_f = stats[q][ideal[q]], stats[q][f]
            if s_star.accuracy <= 0 or s_f.accuracy <= 0:
                continue
            acc_s, eff_s = log_objectives(s_star, alpha)
            acc_f, eff_f = log_objectives(s_f, alpha)
            if acc_s - acc_f < alpha * (eff_f - eff_s) - tol:
                violations += 1
            log_diffs.append((acc_s + alpha * eff_s) - (acc_f + alpha * eff_f))
        acc_gap = sum(stats[q][ideal[q]].accuracy - stats[q][f].accuracy for q in qids)
        tok_gap = sum(stats[q][ideal[q]].avg_tok - stats[q][f].avg_tok for q in qids)
        rows.append(ParetoRow(
            f, gap, sum(log_diffs) / len(log_diffs) if log_diffs else math.nan, len(log_diffs),
            violations == 0, violations, acc_gap >= 0 and tok_gap <= 0,
        ))
    return ParetoReport(alpha, len(qids), tuple(rows))


def mean_log_gre(stats: Mapping[str, Mapping[TrfKind, ProbeStats]], choice: Mapping[str, TrfKind],
                 alpha: float, questions: Iterable[str]) -> float:
    vals = [math.log(gre(stats[q][choice[q]], alpha)) for q in questions]
    return sum(vals) / len(vals)
