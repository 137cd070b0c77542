"""Graph and QA-instance data model with JSON(L) serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Iterator

from .errors import ConfigError, InvalidNode

SCHEMA_VERSION = 1


class TaskKind(str, Enum):
    CONN = "Conn"
    CYC = "Cyc"
    TS = "TS"
    SP = "SP"
    MF = "MF"
    BGM = "BGM"
    HP = "HP"
    LP = "LP"
    NC = "NC"

    @classmethod
    def parse(cls, text: str) -> "TaskKind":
        for kind in cls:
            if kind.value.lower() == text.strip().lower():
                return kind
        raise ValueError(f"unknown task {text!r}")

    @property
    def needs_weights(self) -> bool:
        return self in (TaskKind.SP, TaskKind.MF)

    @property
    def needs_direction(self) -> bool:
        return self in (TaskKind.TS, TaskKind.MF)

    @property
    def attributed(self) -> bool:
        return self in (TaskKind.LP, TaskKind.NC)


IN_DOMAIN_TASKS = (
    TaskKind.CONN, TaskKind.CYC, TaskKind.TS, TaskKind.SP,
    TaskKind.MF, TaskKind.BGM, TaskKind.HP,
)
TASK_ORDER = tuple(TaskKind)

Edge = tuple  # (u, v) or (u, v, weight)


@dataclass(frozen=True)
class GraphInstance:
    """A small labeled graph.

    Undirected edges are stored with ``u < v``; edges are kept sorted so two
    equal graphs always serialize to the same bytes. For bipartite graphs the
    first ``host_count`` node ids are hosts and the rest are tasks.
    """

    directed: bool
    node_count: int
    edges: tuple[tuple[int, ...], ...] = ()
    bipartite: tuple[int, int] | None = None
    node_attrs: dict[int, str] | None = None
    node_classes: dict[int, int] | None = None

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("node_count must be >= 1")
        canon = []
        seen = set()
        weighted = None
        for e in self.edges:
            u, v = int(e[0]), int(e[1])
            w = int(e[2]) if len(e) > 2 and e[2] is not None else None
            if not (0 <= u < self.node_count and 0 <= v < self.node_count):
                raise InvalidNode(f"edge ({u}, {v}) outside 0..{self.node_count - 1}")
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if not self.directed and u > v:
                u, v = v, u
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
            has_w = w is not None
            if weighted is None:
                weighted = has_w
            elif weighted != has_w:
                raise ValueError("either every edge carries a weight or none does")
            if has_w and w <= 0:
                raise ValueError("edge weights must be positive")
            canon.append((u, v, w) if has_w else (u, v))
        canon.sort()
        object.__setattr__(self, "edges", tuple(canon))
        if self.bipartite is not None:
            hosts, tasks = self.bipartite
            if hosts < 1 or tasks < 1 or hosts + tasks != self.node_count:
                raise ValueError("bipartite split must cover node_count")
            object.__setattr__(self, "bipartite", (int(hosts), int(tasks)))
            for e in canon:
                if (e[0] < hosts) == (e[1] < hosts):
                    raise ValueError(f"edge ({e[0]}, {e[1]}) does not cross the partition")
        if self.node_attrs is not None:
            object.__setattr__(self, "node_attrs", {int(k): str(v) for k, v in sorted(self.node_attrs.items(), key=lambda kv: int(kv[0]))})
        if self.node_classes is not None:
            object.__setattr__(self, "node_classes", {int(k): int(v) for k, v in sorted(self.node_classes.items(), key=lambda kv: int(kv[0]))})

    @property
    def weighted(self) -> bool:
        return bool(self.edges) and len(self.edges[0]) == 3

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def edge_weight(self, u: int, v: int) -> int | None:
        """Weight of edge u-v (direction respected for directed graphs), None if absent."""
        return self._weight_map().get((u, v))

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._weight_map()

    def _weight_map(self) -> dict[tuple[int, int], int]:
        cached = self.__dict__.get("_wmap")
        if cached is None:
            cached = {}
            for e in self.edges:
                w = e[2] if len(e) == 3 else 1
                cached[(e[0], e[1])] = w
                if not self.directed:
                    cached[(e[1], e[0])] = w
            object.__setattr__(self, "_wmap", cached)
        return cached

    def neighbors(self) -> list[list[int]]:
        """Out-neighbors per node (both directions for undirected graphs), ascending."""
        adj: list[list[int]] = [[] for _ in range(self.node_count)]
        for e in self.edges:
            adj[e[0]].append(e[1])
            if not self.directed:
                adj[e[1]].append(e[0])
        for row in adj:
            row.sort()
        return adj

    def check_node(self, *nodes: int) -> None:
        for x in nodes:
            if not (isinstance(x, int) and 0 <= x < self.node_count):
                raise InvalidNode(f"node {x!r} not in 0..{self.node_count - 1}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "directed": self.directed,
            "node_count": self.node_count,
            "edges": [list(e) for e in self.edges],
            "bipartite": list(self.bipartite) if self.bipartite else None,
            "node_attrs": {str(k): v for k, v in self.node_attrs.items()} if self.node_attrs is not None else None,
            "node_classes": {str(k): v for k, v in self.node_classes.items()} if self.node_classes is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "GraphInstance":
        return cls(
            directed=bool(d["directed"]),
            node_count=int(d["node_count"]),
            edges=tuple(tuple(e) for e in d.get("edges", [])),
            bipartite=tuple(d["bipartite"]) if d.get("bipartite") else None,
            node_attrs=d.get("node_attrs"),
            node_classes=d.get("node_classes"),
        )

    def __eq__(self, other):
        if not isinstance(other, GraphInstance):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash((self.directed, self.node_count, self.edges, self.bipartite))


@dataclass(frozen=True)
class GenConfig:
    node_range: tuple[int, int] = (3, 30)
    edge_prob_range: tuple[float, float] = (0.1, 0.7)
    weight_range: tuple[int, int] = (1, 10)
    seed: int = 0
    max_attempts: int = 10_000
    # planted-partition edge probabilities for the attributed (LP/NC) tasks
    intra_prob: float = 0.5
    inter_prob: float = 0.05
    class_count: int = 2
    # node expansions allowed per Hamiltonian-path check during generation
    hp_search_budget: int = 200_000

    def __post_init__(self):
        lo, hi = self.node_range
        if lo < 1 or hi < lo:
            raise ConfigError(f"bad node_range {self.node_range}")
        plo, phi = self.edge_prob_range
        if not (0.0 <= plo <= phi <= 1.0):
            raise ConfigError(f"bad edge_prob_range {self.edge_prob_range}")
        wlo, whi = self.weight_range
        if wlo < 1 or whi < wlo:
            raise ConfigError(f"bad weight_range {self.weight_range}")
        if self.max_attempts < 1:
            raise ConfigError("max_attempts must be >= 1")
        if not (0.0 <= self.inter_prob <= 1.0 and 0.0 <= self.intra_prob <= 1.0):
            raise ConfigError("planted-partition probabilities must lie in [0, 1]")
        if self.class_count < 1:
            raise ConfigError("class_count must be >= 1")

    def validate_for(self, task: TaskKind) -> None:
        if task not in (TaskKind.CYC, TaskKind.TS, TaskKind.HP, TaskKind.BGM) and self.node_range[0] < 2:
            raise ConfigError(f"{task.value} needs two distinct endpoints: node_range.min must be >= 2")
        if task is TaskKind.BGM and self.node_range[1] < 2:
            raise ConfigError("BGM needs node_range.max >= 2 to hold one host and one task")
        if task is TaskKind.NC and self.class_count < 2:
            raise ConfigError("NC needs class_count >= 2")

    def to_dict(self) -> dict[str, Any]:
        return {
            "node_range": list(self.node_range),
            "edge_prob_range": list(self.edge_prob_range),
            "weight_range": list(self.weight_range),
            "seed": self.seed,
            "max_attempts": self.max_attempts,
            "intra_prob": self.intra_prob,
            "inter_prob": self.inter_prob,
            "class_count": self.class_count,
            "hp_search_budget": self.hp_search_budget,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "GenConfig":
        d = dict(d)
        for key in ("node_range", "edge_prob_range", "weight_range"):
            if key in d:
                d[key] = tuple(d[key])
        known = cls.__dataclass_fields__.keys()
        unknown = set(d) - set(known)
        if unknown:
            raise ConfigError(f"unknown gen config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class QaInstance:
    id: str
    task: TaskKind
    graph: GraphInstance
    params: dict[str, Any] = field(default_factory=dict)
    gold: Any = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": SCHEMA_VERSION,
            "id": self.id,
            "task": self.task.value,
            "graph": self.graph.to_dict(),
            "params": self.params,
            "gold": self.gold,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "QaInstance":
        if d.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported instance schema {d.get('schema')!r}")
        gold = d["gold"]
        if isinstance(gold, list):
            gold = [int(x) for x in gold]
        return cls(
            id=d["id"],
            task=TaskKind(d["task"]),
            graph=GraphInstance.from_dict(d["graph"]),
            params=dict(d.get("params", {})),
            gold=gold,
        )

    @classmethod
    def from_json(cls, line: str) -> "QaInstance":
        return cls.from_dict(json.loads(line))


def write_instances(path, instances: Iterable[QaInstance]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(inst.to_json() + "\n")
            n += 1
    return n


def read_instances(path) -> list[QaInstance]:
    return list(iter_instances(path))


def iter_instances(path) -> Iterator[QaInstance]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield QaInstance.from_json(line)
