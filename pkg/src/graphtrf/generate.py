"""Random graph and QA-instance generation.

Every generator is a pure function of its seed. Instance-level generators take
a seed key (an int or a tuple of ints) rather than a live generator so the key
can be folded into the instance id.
"""

from __future__ import annotations

import hashlib
import json
from typing import Sequence

import numpy as np

from . import oracles
from .errors import ConfigError, GenerationExhausted, SearchBudgetExceeded
from .graph import GenConfig, GraphInstance, QaInstance, TaskKind

SeedKey = int | Sequence[int]


def _rng(seed: SeedKey) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def gen_er_graph(
    config: GenConfig,
    directed: bool,
    weighted: bool,
    rng: np.random.Generator,
    *,
    n: int | None = None,
    p: float | None = None,
    acyclic: bool = False,
) -> GraphInstance:
    """Erdos-Renyi G(n, p) with n and p drawn once per graph from the config ranges.

    ``acyclic=True`` draws an undirected G(n, p) and orients every edge along a
    random node permutation, which yields a uniformly oriented DAG.
    """
    if n is None:
        n = int(rng.integers(config.node_range[0], config.node_range[1] + 1))
    if p is None:
        p = float(rng.uniform(*config.edge_prob_range))
    if directed and not acyclic:
        pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    else:
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    keep = rng.random(len(pairs)) < p
    chosen = [pairs[i] for i in np.flatnonzero(keep)]
    if acyclic:
        rank = rng.permutation(n)
        chosen = [(i, j) if rank[i] < rank[j] else (j, i) for i, j in chosen]
    if weighted:
        ws = rng.integers(config.weight_range[0], config.weight_range[1] + 1, size=len(chosen))
        edges = tuple((u, v, int(w)) for (u, v), w in zip(chosen, ws))
    else:
        edges = tuple(chosen)
    return GraphInstance(directed=directed, node_count=n, edges=edges)


def gen_bipartite_graph(config: GenConfig, rng: np.random.Generator) -> GraphInstance:
    """Host/task graph; each side's size is drawn from half of node_range."""
    lo = max(1, config.node_range[0] // 2)
    hi = max(lo, config.node_range[1] // 2)
    hosts = int(rng.integers(lo, hi + 1))
    tasks = int(rng.integers(lo, hi + 1))
    p = float(rng.uniform(*config.edge_prob_range))
    keep = rng.random(hosts * tasks) < p
    edges = tuple((h, hosts + t) for h in range(hosts) for t in range(tasks) if keep[h * tasks + t])
    return GraphInstance(directed=True, node_count=hosts + tasks, edges=edges, bipartite=(hosts, tasks))


def _pair(rng: np.random.Generator, n: int) -> tuple[int, int]:
    u, v = rng.choice(n, size=2, replace=False)
    return int(u), int(v)


def instance_id(task: TaskKind, seed: SeedKey, graph: GraphInstance, params: dict) -> str:
    key = list(seed) if not isinstance(seed, (int, np.integer)) else [int(seed)]
    blob = json.dumps([task.value, [int(x) for x in key], graph.to_dict(), params], separators=(",", ":"), sort_keys=True)
    return f"{task.value.lower()}-{hashlib.sha256(blob.encode()).hexdigest()[:16]}"


def _attempt(task: TaskKind, config: GenConfig, rng: np.random.Generator):
    """One draw; returns (graph, params, gold) or None when the draw is invalid."""
    if task is TaskKind.CONN:
        g = gen_er_graph(config, False, False, rng)
        u, v = _pair(rng, g.node_count)
        return g, {"u": u, "v": v}, oracles.connectivity(g, u, v)
    if task is TaskKind.CYC:
        g = gen_er_graph(config, False, False, rng)
        return g, {}, oracles.has_cycle(g)
    if task is TaskKind.TS:
        g = gen_er_graph(config, True, False, rng, acyclic=True)
        if not oracles.is_acyclic(g):
            return None
        return g, {}, oracles.topo_sort(g)
    if task is TaskKind.SP:
        g = gen_er_graph(config, False, True, rng)
        u, v = _pair(rng, g.node_count)
        if not oracles.connectivity(g, u, v):
            return None
        return g, {"u": u, "v": v}, oracles.shortest_path(g, u, v)[1]
    if task is TaskKind.MF:
        g = gen_er_graph(config, True, True, rng)
        s, t = _pair(rng, g.node_count)
        value = oracles.max_flow(g, s, t)
        if value <= 0:
            return None
        return g, {"source": s, "sink": t}, value
    if task is TaskKind.BGM:
        g = gen_bipartite_graph(config, rng)
        value = oracles.max_bipartite_matching(g)
        if value <= 0:
            return None
        return g, {}, value
    if task is TaskKind.HP:
        g = gen_er_graph(config, False, False, rng)
        try:
            path = oracles.hamilton_path_from(g, 0, budget=config.hp_search_budget)
        except SearchBudgetExceeded:
            return None
        if path is None:
            return None
        return g, {"start": 0}, path
    raise ValueError(f"{task.value} is generated by gen_attributed_instance")


def gen_qa_instance(task: TaskKind, config: GenConfig, seed: SeedKey) -> QaInstance:
    """Draw graphs until one admits a valid gold answer for ``task``."""
    if task.attributed:
        return gen_attributed_instance(task, config, config.class_count, seed)
    config.validate_for(task)
    rng = _rng(seed)
    for _ in range(config.max_attempts):
        drawn = _attempt(task, config, rng)
        if drawn is None:
            continue
        g, params, gold = drawn
        return QaInstance(instance_id(task, seed, g, params), task, g, params, gold)
    raise GenerationExhausted(f"no valid {task.value} graph in {config.max_attempts} attempts")


def planted_partition(
    n: int, class_count: int, intra_prob: float, inter_prob: float, rng: np.random.Generator
) -> tuple[list[int], list[tuple[int, int]]]:
    classes = [int(c) for c in rng.integers(0, class_count, size=n)]
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    draws = rng.random(len(pairs))
    edges = [
        (i, j) for (i, j), r in zip(pairs, draws)
        if r < (intra_prob if classes[i] == classes[j] else inter_prob)
    ]
    return classes, edges


def gen_attributed_instance(task: TaskKind, config: GenConfig, class_count: int, seed: SeedKey) -> QaInstance:
    """Synthetic link-prediction or node-classification instance.

    Both start from a planted-partition graph. NC hides one node's class and
    asks for it. LP either deletes an existing edge (gold True) or picks a
    non-edge (gold False) with equal probability; the deleted edge is absent
    from the stored graph.
    """
    if task not in (TaskKind.LP, TaskKind.NC):
        raise ValueError(f"{task.value} is not an attributed task")
    if task is TaskKind.NC and class_count < 2:
        raise ConfigError("NC needs class_count >= 2")
    if config.node_range[0] < 2:
        raise ConfigError(f"{task.value} needs node_range.min >= 2")
    rng = _rng(seed)
    for _ in range(config.max_attempts):
        n = int(rng.integers(config.node_range[0], config.node_range[1] + 1))
        classes, edges = planted_partition(n, class_count, config.intra_prob, config.inter_prob, rng)
        if task is TaskKind.NC:
            node = int(rng.integers(n))
            if not any(node in e for e in edges):
                continue
            attrs = {i: (f"Class {c}" if i != node else "Unknown") for i, c in enumerate(classes)}
            g = GraphInstance(False, n, tuple(edges), node_attrs=attrs, node_classes=dict(enumerate(classes)))
            params = {"node": node, "class_count": class_count}
            return QaInstance(instance_id(task, seed, g, params), task, g, params, classes[node])
        attrs = {i: f"Group {c}" for i, c in enumerate(classes)}
        remove = bool(rng.random() < 0.5)
        if remove:
            if not edges:
                continue
            k = int(rng.integers(len(edges)))
            u, v = edges[k]
            kept = edges[:k] + edges[k + 1:]
        else:
            present = set(edges)
            non_edges = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in present]
            if not non_edges:
                continue
            u, v = non_edges[int(rng.integers(len(non_edges)))]
            kept = edges
        g = GraphInstance(False, n, tuple(kept), node_attrs=attrs, node_classes=dict(enumerate(classes)))
        params = {"u": u, "v": v, "removed": remove}
        return QaInstance(instance_id(task, seed, g, params), task, g, params, remove)
    raise GenerationExhausted(f"no valid {task.value} graph in {config.max_attempts} attempts")


def gen_dataset(tasks: Sequence[TaskKind], count: int, config: GenConfig) -> list[QaInstance]:
    """``count`` instances per task; instance i of task t is seeded by (seed, t, i)."""
    out = []
    for task in tasks:
        t_idx = list(TaskKind).index(task)
        for i in range(count):
            out.append(gen_qa_instance(task, config, (config.seed, t_idx, i)))
    return out
