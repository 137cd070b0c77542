"""Question featurization for the TRF router."""

from __future__ import annotations

import hashlib
import re

import numpy as np

from .graph import QaInstance, TaskKind
from .render import task_instruction

FEATURE_LAYOUT = "graphtrf-features-v1"
HASH_BUCKETS = 256
TASK_SLOTS = len(TaskKind)
GRAPH_SLOTS = 6
FEATURE_DIM = TASK_SLOTS + GRAPH_SLOTS + HASH_BUCKETS

# fixed scales keep graph statistics near unit range for the default size regime
NODE_SCALE = 30.0
EDGE_SCALE = 100.0

_TOKEN = re.compile(r"[a-z]+|\d+")


def _bucket(token: str) -> tuple[int, float]:
    digest = hashlib.blake2b(token.encode(), digest_size=8).digest()
    h = int.from_bytes(digest, "little")
    return h % HASH_BUCKETS, (1.0 if (h >> 63) & 1 == 0 else -1.0)


def hashed_bow(text: str) -> np.ndarray:
    """Signed feature hashing of lower-cased word/number tokens, L2-normalised."""
    vec = np.zeros(HASH_BUCKETS)
    for tok in _TOKEN.findall(text.lower()):
        idx, sign = _bucket(tok)
        vec[idx] += sign
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


def featurize(instance: QaInstance, prompt_text: str | None = None) -> np.ndarray:
    """Layout: task one-hot, node count, edge count, density, directed,
    weighted, bipartite, then hashed question-text buckets.

    Graph statistics come from the instance itself. ``prompt_text`` defaults
    to the task instruction, which does not depend on the TRF.
    """
    if prompt_text is None:
        prompt_text = task_instruction(instance)
    g = instance.graph
    onehot = np.zeros(TASK_SLOTS)
    onehot[list(TaskKind).index(instance.task)] = 1.0
    n, m = g.node_count, g.edge_count
    pairs = n * (n - 1) if g.directed else n * (n - 1) / 2
    if g.bipartite is not None:
        pairs = g.bipartite[0] * g.bipartite[1]
    density = m / pairs if pairs else 0.0
    stats = np.array([
        n / NODE_SCALE,
        m / EDGE_SCALE,
        density,
        float(g.directed),
        float(g.weighted or instance.task.needs_weights),
        float(g.bipartite is not None),
    ])
    return np.concatenate([onehot, stats, hashed_bow(prompt_text)])
