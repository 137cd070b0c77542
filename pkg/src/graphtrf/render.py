"""Topology representation forms (TRFs) and prompt assembly.

Three textual forms (edge set, adjacency list, adjacency matrix) are rendered
from fixed templates; five visual forms are emitted as DOT sources that differ
only in the Graphviz layout engine. ``parse_topology`` inverts the textual
forms and is used to check that rendering loses no structure.
"""

from __future__ import annotations

import hashlib
import os
import re
import shutil
import subprocess
import threading
from dataclasses import dataclass
from enum import Enum

from .errors import RenderFailed, RendererMissing, UnsupportedCombination
from .graph import GraphInstance, QaInstance, TaskKind


class TrfKind(str, Enum):
    VDOT = "Vdot"
    VNEATO = "Vneato"
    VCIRCO = "Vcirco"
    VFDP = "Vfdp"
    VSFDP = "Vsfdp"
    TSET = "Tset"
    TLIST = "Tlist"
    TMAT = "Tmat"

    @classmethod
    def parse(cls, text: str) -> "TrfKind":
        for kind in cls:
            if kind.value.lower() == text.strip().lower():
                return kind
        raise ValueError(f"unknown TRF {text!r}")

    @property
    def visual(self) -> bool:
        return self.value.startswith("V")

    @property
    def engine(self) -> str:
        if not self.visual:
            raise ValueError(f"{self.value} is textual")
        return self.value[1:]


TRF_ORDER: tuple[TrfKind, ...] = tuple(TrfKind)
VISUAL_TRFS = TRF_ORDER[:5]
TEXTUAL_TRFS = TRF_ORDER[5:]

COT_SUFFIX = (
    "Please think step by step and present the rationales in a well-structured manner, "
    "to make the answer more reliable and robust."
)

_CONTROL_YES_NO = (
    "Please put the answer between <answer> and </answer> tags. "
    "For example, <answer>Yes</answer> or <answer>No</answer>."
)
_CONTROL_PATH = (
    "Please put the answer between <answer> and </answer> tags. "
    "For example, <answer>0->1->2->3->4</answer> or <answer>0->1->3->7->8->4->6->5->9->2</answer>."
)
_CONTROL_NUMBER = (
    "Please put the answer between <answer> and </answer> tags. "
    "For example, <answer>3</answer> or <answer>8</answer>."
)
_CONTROL_CLASS = (
    "Please put the answer between <answer> and </answer> tags. "
    "For example, <answer>Class 1</answer> or <answer>Class 3</answer>."
)

CONTROL_INSTRUCTIONS: dict[TaskKind, str] = {
    TaskKind.CONN: _CONTROL_YES_NO,
    TaskKind.CYC: _CONTROL_YES_NO,
    TaskKind.LP: _CONTROL_YES_NO,
    TaskKind.TS: _CONTROL_PATH,
    TaskKind.SP: _CONTROL_PATH,
    TaskKind.HP: _CONTROL_PATH,
    TaskKind.MF: _CONTROL_NUMBER,
    # BGM has no dedicated control sentence; its answer is a count like MF
    TaskKind.BGM: _CONTROL_NUMBER,
    TaskKind.NC: _CONTROL_CLASS,
}

_UNDIRECTED_INTRO = (
    "In an undirected graph, (i,j) means that node i and node j are connected with an undirected edge. "
    "The nodes are numbered from 0 to {last}, and the edges are"
)


def task_instruction(instance: QaInstance) -> str:
    """The task question with its placeholders filled in."""
    p, g = instance.params, instance.graph
    task = instance.task
    if task is TaskKind.CONN:
        return f"Is there a path between node {p['u']} and node {p['v']} in this undirected graph?"
    if task is TaskKind.CYC:
        return "Is there a cycle in this undirected graph?"
    if task is TaskKind.TS:
        return (
            "This representation depicts a directed graph, in which each directed edge from node A to node B "
            "signifies that, according to the topological order, node A must precede node B. "
            "Q: The topological order of the directed graph is:"
        )
    if task is TaskKind.SP:
        return (
            "This representation illustrates an undirected graph, with each edge's weight indicated by a "
            f"numerical label in close proximity. Q: What is the shortest path from node {p['u']} to node {p['v']}?"
        )
    if task is TaskKind.MF:
        return (
            "This representation illustrates a directed graph, with each edge's capacity indicated by a "
            f"numerical label in close proximity. Q: What is the maximum flow from node {p['source']} "
            f"to node {p['sink']}:"
        )
    if task is TaskKind.BGM:
        hosts, tasks = g.bipartite
        return (
            f"There are {hosts} hosts numbered from 0 to {hosts - 1}, and {tasks} tasks numbered from 0 to "
            f"{tasks - 1}. Each host has a set of tasks that it is interested in, represented by arrows from a "
            "host to a task in the diagram. However, each host is capable of solving only one task, and "
            "similarly, each task can be resolved by just one host. Q:  What is the maximum number of hosts "
            "that can be assigned a task they are interested in?"
        )
    if task is TaskKind.HP:
        return "Q: Begin with node 0, what is the path in this graph that visits every node exactly once?"
    if task is TaskKind.LP:
        return (
            "The task is link prediction, aiming to predict the presence or absence of an unknown edge between "
            f"Node {p['u']} and Node {p['v']} based on the known graph structure. "
            f"Q: Does an unknown edge exist between Node {p['u']} and Node {p['v']}?"
        )
    if task is TaskKind.NC:
        return (
            "The task is semi-supervised node classification, and needs to predict which class Node "
            f"{p['node']} belongs to, based on graph structure and known node classes. "
            f"Q: Node {p['node']} belongs to Class:"
        )
    raise ValueError(f"no instruction for {task}")


def control_instruction(task: TaskKind) -> str:
    return CONTROL_INSTRUCTIONS[task]


# ---------------------------------------------------------------------------
# textual forms


def _family(task: TaskKind) -> str:
    if task in (TaskKind.CONN, TaskKind.CYC, TaskKind.HP):
        return "plain"
    if task in (TaskKind.LP, TaskKind.NC):
        return "attributed"
    return task.value


def _check_shape(instance: QaInstance) -> None:
    g, task = instance.graph, instance.task
    fam = _family(task)
    if fam in ("plain", "attributed", "SP") and g.directed:
        raise UnsupportedCombination(f"{task.value} templates describe undirected graphs")
    if fam in ("TS", "MF") and not g.directed:
        raise UnsupportedCombination(f"{task.value} templates describe directed graphs")
    if fam in ("SP", "MF") and g.edges and not g.weighted:
        raise UnsupportedCombination(f"{task.value} templates need edge weights")
    if fam == "BGM" and g.bipartite is None:
        raise UnsupportedCombination("BGM templates need a host/task partition")


def _attr_block(g: GraphInstance) -> str:
    lines = ["The node attributes are:"]
    for node, attr in (g.node_attrs or {}).items():
        lines.append(f"Node {node}, Attribute {attr}")
    return "\n".join(lines)


def _bgm_pairs(g: GraphInstance) -> list[tuple[int, int]]:
    hosts = g.bipartite[0]
    return sorted((min(e[0], e[1]), max(e[0], e[1]) - hosts) for e in g.edges)


def render_textual(instance: QaInstance, trf: TrfKind) -> str:
    if trf.visual:
        raise UnsupportedCombination(f"{trf.value} is a visual TRF")
    _check_shape(instance)
    if trf is TrfKind.TSET:
        return _render_set(instance)
    if trf is TrfKind.TLIST:
        return _render_list(instance)
    return _render_mat(instance)


def _render_set(instance: QaInstance) -> str:
    g, fam = instance.graph, _family(instance.task)
    last = g.node_count - 1
    if fam in ("plain", "attributed"):
        body = _UNDIRECTED_INTRO.format(last=last) + ":\n" + " , ".join(f"({e[0]}, {e[1]})" for e in g.edges)
        return body + ("\n" + _attr_block(g) if fam == "attributed" else "")
    if fam == "TS":
        lines = [f"In a directed graph with {g.node_count} nodes numbered from 0 to {last}:"]
        lines += [f"node {e[0]} should be visited before node {e[1]}" for e in g.edges]
        return "\n".join(lines)
    if fam == "SP":
        lines = [f"In an undirected graph, the nodes are numbered from 0 to {last}, and the edges are:"]
        lines += [f"an edge between node {u} and node {v} with weight {w}," for u, v, w in g.edges]
        return "\n".join(lines)
    if fam == "MF":
        lines = [f"In a directed graph, the nodes are numbered from 0 to {last}, and the edges are:"]
        lines += [f"an edge from node {u} to node {v} with capacity {w}," for u, v, w in g.edges]
        return "\n".join(lines)
    hosts, tasks = g.bipartite
    lines = [
        f"There are {hosts} hosts numbered from 0 to {hosts - 1}, and {tasks} tasks numbered from 0 to "
        f"{tasks - 1}. Each host has a set of tasks that it is interested in:"
    ]
    lines += [f"Host {h} is interested in task {t}." for h, t in _bgm_pairs(g)]
    return "\n".join(lines)


def _render_list(instance: QaInstance) -> str:
    g, fam = instance.graph, _family(instance.task)
    last = g.node_count - 1
    adj = g.neighbors()
    if fam in ("plain", "attributed"):
        lines = [_UNDIRECTED_INTRO.format(last=last) + " presented in an adjacent list format:"]
        lines += [f"{i} <-> " + ", ".join(map(str, row)) for i, row in enumerate(adj) if row]
        if fam == "attributed":
            lines.append(_attr_block(g))
        return "\n".join(lines)
    if fam == "TS":
        lines = [f"In a directed graph with {g.node_count} nodes numbered from 0 to {last}:"]
        lines += [f"node {i} should be visited before node " + ", ".join(map(str, row)) for i, row in enumerate(adj) if row]
        return "\n".join(lines)
    if fam in ("SP", "MF"):
        kind = "an undirected" if fam == "SP" else "a directed"
        label = "distance" if fam == "SP" else "capacity"
        lines = [
            f"In {kind} graph, the nodes are numbered from 0 to {last}, and the edges are presented in an "
            "adjacent list format:"
        ]
        for i, row in enumerate(adj):
            if row:
                items = ", ".join(f"node {j} with {label}: {g.edge_weight(i, j)}" for j in row)
                lines.append(f"node {i} is connected to: {items}")
        return "\n".join(lines)
    hosts, tasks = g.bipartite
    lines = [
        f"There are {hosts} hosts numbered from 0 to {hosts - 1}, and {tasks} tasks numbered from 0 to "
        f"{tasks - 1}. Each host has a set of tasks that it is interested in:"
    ]
    by_host: dict[int, list[int]] = {}
    for h, t in _bgm_pairs(g):
        by_host.setdefault(h, []).append(t)
    for h, ts in sorted(by_host.items()):
        noun = "task" if len(ts) == 1 else "tasks"
        lines.append(f"Host {h} is interested in {noun} " + ", ".join(map(str, ts)) + ".")
    return "\n".join(lines)


def _matrix_lines(row_label: str, col_label: str, cells: list[list[int]]) -> list[str]:
    cols = len(cells[0]) if cells else 0
    header = ":    " + f"{col_label}0" + "".join(f"    {j}" for j in range(1, cols))
    rows = [f"{row_label}{i}" + "".join(f"  {x}" for x in row) for i, row in enumerate(cells)]
    return [header] + rows


def _render_mat(instance: QaInstance) -> str:
    g, fam = instance.graph, _family(instance.task)
    last = g.node_count - 1
    if fam == "BGM":
        hosts, tasks = g.bipartite
        cells = [[0] * tasks for _ in range(hosts)]
        for h, t in _bgm_pairs(g):
            cells[h][t] = 1
        head = (
            f"There are {hosts} hosts numbered from 0 to {hosts - 1}, and {tasks} tasks numbered from 0 to "
            f"{tasks - 1}. Each host has a set of tasks that it is interested in"
        )
        return "\n".join([head] + _matrix_lines("Host", "Task", cells))
    n = g.node_count
    cells = [[0] * n for _ in range(n)]
    for e in g.edges:
        w = e[2] if len(e) == 3 else 1
        cells[e[0]][e[1]] = w
        if not g.directed:
            cells[e[1]][e[0]] = w
    if fam in ("plain", "attributed"):
        head = _UNDIRECTED_INTRO.format(last=last) + " represented in an adjacent matrix format"
    elif fam == "TS":
        head = f"In a directed graph with {n} nodes numbered from 0 to {last}, the edges are represented in an adjacent matrix format"
    else:
        kind = "an undirected" if fam == "SP" else "a directed"
        head = (
            f"In {kind} graph, the nodes are numbered from 0 to {last}, and the edges are represented in an "
            "adjacent matrix format with weights"
        )
    lines = [head] + _matrix_lines("node", "node", cells)
    if fam == "attributed":
        lines.append(_attr_block(g))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# inverse of the textual forms

def parse_topology(text: str, trf: TrfKind) -> tuple[int, list[tuple[int, ...]]]:
    """Recover ``(node_count, edges)`` from a textual rendering.

    BGM renderings come back with task ids offset by the host count, matching
    the node numbering of the stored graph.
    """
    if trf.visual:
        raise UnsupportedCombination("only textual TRFs can be parsed")
    lines = text.split("\n")
    head = lines[0]
    m = re.match(r"There are (\d+) hosts numbered from 0 to -?\d+, and (\d+) tasks", head)
    if m:
        hosts = int(m.group(1))
        n = hosts + int(m.group(2))
        edges = []
        if trf is TrfKind.TSET:
            for line in lines[1:]:
                h, t = map(int, re.match(r"Host (\d+) is interested in task (\d+)\.", line).groups())
                edges.append((h, hosts + t))
        elif trf is TrfKind.TLIST:
            for line in lines[1:]:
                mm = re.match(r"Host (\d+) is interested in tasks? (.*)\.$", line)
                h = int(mm.group(1))
                edges += [(h, hosts + int(t)) for t in mm.group(2).split(", ")]
        else:
            for line in lines[2:]:
                mm = re.match(r"Host(\d+)((?:  \d+)*)$", line)
                h = int(mm.group(1))
                vals = [int(x) for x in mm.group(2).split()]
                edges += [(h, hosts + t) for t, x in enumerate(vals) if x]
        return n, sorted(edges)

    m = re.search(r"with (\d+) nodes numbered", head)
    if m:
        n = int(m.group(1))
    else:
        n = int(re.search(r"numbered from 0 to (-?\d+)", head).group(1)) + 1
    directed = "a directed graph" in head
    weighted = "with weights" in head or bool(re.search(r"with (?:weight|capacity|distance):? \d", text))
    body = lines[1:]
    if "The node attributes are:" in body:
        body = body[: body.index("The node attributes are:")]
    edges: set[tuple[int, ...]] = set()

    def add(u: int, v: int, w: int | None = None):
        if not directed and u > v:
            u, v = v, u
        edges.add((u, v, w) if w is not None else (u, v))

    if trf is TrfKind.TSET:
        if "(i,j) means" in head:
            for u, v in re.findall(r"\((\d+), (\d+)\)", "\n".join(body)):
                add(int(u), int(v))
        for line in body:
            if mm := re.match(r"node (\d+) should be visited before node (\d+)$", line):
                add(int(mm.group(1)), int(mm.group(2)))
            elif mm := re.match(r"an edge (?:between|from) node (\d+) (?:and|to) node (\d+) with (?:weight|capacity) (\d+),$", line):
                add(int(mm.group(1)), int(mm.group(2)), int(mm.group(3)))
    elif trf is TrfKind.TLIST:
        for line in body:
            if mm := re.match(r"(\d+) <-> (.*)$", line):
                for v in mm.group(2).split(", "):
                    add(int(mm.group(1)), int(v))
            elif mm := re.match(r"node (\d+) should be visited before node (.*)$", line):
                for v in mm.group(2).split(", "):
                    add(int(mm.group(1)), int(v))
            elif mm := re.match(r"node (\d+) is connected to: (.*)$", line):
                for v, w in re.findall(r"node (\d+) with (?:distance|capacity): (\d+)", mm.group(2)):
                    add(int(mm.group(1)), int(v), int(w))
    else:
        for line in body[1:]:
            mm = re.match(r"node(\d+)((?:  \d+)*)$", line)
            i = int(mm.group(1))
            for j, x in enumerate(int(t) for t in mm.group(2).split()):
                if x:
                    add(i, j, x if weighted else None)
    return n, sorted(edges)


# ---------------------------------------------------------------------------
# visual forms


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def render_visual(instance: QaInstance, trf: TrfKind) -> str:
    """DOT source for a visual TRF; only the layout engine varies between forms."""
    if not trf.visual:
        raise UnsupportedCombination(f"{trf.value} is a textual TRF")
    g = instance.graph
    kind, arrow = ("digraph", "->") if g.directed else ("graph", "--")
    lines = [
        f"{kind} G {{",
        f"  layout={trf.engine};",
        '  bgcolor="white";',
        "  node [shape=circle];",
    ]
    if g.bipartite is not None:
        hosts = g.bipartite[0]
        names = [f"h{i}" if i < hosts else f"t{i - hosts}" for i in range(g.node_count)]
        for i in range(g.node_count):
            label = str(i) if i < hosts else str(i - hosts)
            shape = "box" if i < hosts else "circle"
            lines.append(f"  {names[i]} [label={_dot_quote(label)}, shape={shape}];")
    else:
        names = [str(i) for i in range(g.node_count)]
        for i in range(g.node_count):
            label = str(i)
            if g.node_attrs and i in g.node_attrs:
                label = f"{i}: {g.node_attrs[i]}"
            lines.append(f"  {i} [label={_dot_quote(label)}];")
    for e in g.edges:
        stmt = f"  {names[e[0]]} {arrow} {names[e[1]]}"
        if len(e) == 3:
            stmt += f' [label="{e[2]}"]'
        lines.append(stmt + ";")
    lines.append("}")
    return "\n".join(lines) + "\n"


_DOT_LAYOUT = re.compile(r"^\s*layout=(\w+);", re.MULTILINE)


class Rasterizer:
    """Runs an external DOT renderer and caches PNG output by source hash.

    Concurrent calls for the same source share one subprocess; distinct
    sources render in parallel.
    """

    def __init__(self, renderer_path: str | None = None, cache_dir: str | None = None, timeout: float = 60.0):
        self.renderer_path = renderer_path or "dot"
        self.cache_dir = cache_dir
        self.timeout = timeout
        self._cache: dict[str, bytes] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()
        self.invocations = 0

    def _binary(self) -> str:
        path = self.renderer_path
        if os.sep in path:
            if os.path.isfile(path) and os.access(path, os.X_OK):
                return path
            raise RendererMissing(f"renderer not found at {path}")
        found = shutil.which(path)
        if found is None:
            raise RendererMissing(f"renderer {path!r} is not on PATH")
        return found

    def rasterize(self, dot_source: str) -> bytes:
        key = hashlib.sha256(dot_source.encode()).hexdigest()
        with self._guard:
            if key in self._cache:
                return self._cache[key]
            lock = self._locks.setdefault(key, threading.Lock())
        with lock:
            if key in self._cache:
                return self._cache[key]
            disk = os.path.join(self.cache_dir, key + ".png") if self.cache_dir else None
            if disk and os.path.exists(disk):
                with open(disk, "rb") as fh:
                    data = fh.read()
            else:
                data = self._run(dot_source)
                if disk:
                    os.makedirs(self.cache_dir, exist_ok=True)
                    with open(disk, "wb") as fh:
                        fh.write(data)
            with self._guard:
                self._cache[key] = data
            return data

    def _run(self, dot_source: str) -> bytes:
        binary = self._binary()
        m = _DOT_LAYOUT.search(dot_source)
        cmd = [binary, "-Tpng"] + ([f"-K{m.group(1)}"] if m else [])
        self.invocations += 1
        try:
            proc = subprocess.run(cmd, input=dot_source.encode(), capture_output=True, timeout=self.timeout)
        except subprocess.TimeoutExpired as exc:
            raise RenderFailed("renderer timed out") from exc
        if proc.returncode != 0:
            stderr = proc.stderr.decode(errors="replace")
            raise RenderFailed(f"renderer exited with {proc.returncode}: {stderr.strip()}", stderr)
        return proc.stdout


_default_rasterizer: Rasterizer | None = None


def rasterize(dot_source: str, renderer_path: str | None = None) -> bytes:
    global _default_rasterizer
    if _default_rasterizer is None or (renderer_path and _default_rasterizer.renderer_path != renderer_path):
        _default_rasterizer = Rasterizer(renderer_path)
    return _default_rasterizer.rasterize(dot_source)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RenderedPrompt:
    trf: TrfKind
    instruction: str
    control: str
    topology_text: str | None = None
    dot_source: str | None = None
    image_bytes: bytes | None = None
    cot_suffix: str | None = None

    @property
    def text(self) -> str:
        """The user-turn text; visual topology travels separately as the image."""
        parts = [self.topology_text] if self.topology_text is not None else []
        parts += [self.instruction, self.control]
        if self.cot_suffix:
            parts.append(self.cot_suffix)
        return "\n".join(parts)


def assemble_prompt(
    instance: QaInstance, trf: TrfKind, cot: bool = False, rasterizer: Rasterizer | None = None
) -> RenderedPrompt:
    instruction = task_instruction(instance)
    control = control_instruction(instance.task)
    suffix = COT_SUFFIX if cot else None
    if trf.visual:
        dot = render_visual(instance, trf)
        image = rasterizer.rasterize(dot) if rasterizer is not None else None
        return RenderedPrompt(trf, instruction, control, dot_source=dot, image_bytes=image, cot_suffix=suffix)
    return RenderedPrompt(trf, instruction, control, topology_text=render_textual(instance, trf), cot_suffix=suffix)
