"""Exact reference solvers for the graph QA tasks.

These produce gold answers at generation time and back the answer validators.
Tie-breaking is deterministic (smallest node id first) so canonical witnesses
are reproducible.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from typing import Any

from .errors import CycleDetected, InvalidNode, NotBipartite, SearchBudgetExceeded, Unreachable
from .graph import GraphInstance, QaInstance, TaskKind


@dataclass(frozen=True)
class OracleResult:
    task: TaskKind
    value: Any
    witness: Any = None


def _find(parent: list[int], x: int) -> int:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def connectivity(graph: GraphInstance, u: int, v: int) -> bool:
    """Union-find reachability; edge direction is ignored."""
    graph.check_node(u, v)
    parent = list(range(graph.node_count))
    for e in graph.edges:
        a, b = _find(parent, e[0]), _find(parent, e[1])
        if a != b:
            parent[max(a, b)] = min(a, b)
    return _find(parent, u) == _find(parent, v)


def has_cycle(graph: GraphInstance) -> bool:
    """Iterative DFS looking for a back edge in an undirected graph."""
    adj = graph.neighbors() if not graph.directed else _undirected_adj(graph)
    seen = [False] * graph.node_count
    for root in range(graph.node_count):
        if seen[root]:
            continue
        seen[root] = True
        stack = [(root, -1)]
        while stack:
            node, parent = stack.pop()
            for nb in adj[node]:
                if nb == parent:
                    continue
                if seen[nb]:
                    return True
                seen[nb] = True
                stack.append((nb, node))
    return False


def _undirected_adj(graph: GraphInstance) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(graph.node_count)]
    for e in graph.edges:
        adj[e[0]].append(e[1])
        adj[e[1]].append(e[0])
    return adj


def topo_sort(graph: GraphInstance) -> list[int]:
    """Kahn's algorithm with a min-heap frontier."""
    indeg = [0] * graph.node_count
    adj = graph.neighbors()
    for e in graph.edges:
        indeg[e[1]] += 1
    frontier = [i for i in range(graph.node_count) if indeg[i] == 0]
    heapq.heapify(frontier)
    order: list[int] = []
    while frontier:
        node = heapq.heappop(frontier)
        order.append(node)
        for nb in adj[node]:
            indeg[nb] -= 1
            if indeg[nb] == 0:
                heapq.heappush(frontier, nb)
    if len(order) != graph.node_count:
        raise CycleDetected("graph contains a directed cycle")
    return order


def is_acyclic(graph: GraphInstance) -> bool:
    if not graph.directed:
        return not has_cycle(graph)
    try:
        topo_sort(graph)
    except CycleDetected:
        return False
    return True


def shortest_path(graph: GraphInstance, u: int, v: int) -> tuple[int, list[int]]:
    """Dijkstra returning ``(distance, node path)``.

    Among equally short predecessors the smallest node id is kept, which makes
    the returned path canonical. ``u == v`` gives ``(0, [])``.
    """
    graph.check_node(u, v)
    if u == v:
        return 0, []
    n = graph.node_count
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for e in graph.edges:
        w = e[2] if len(e) == 3 else 1
        adj[e[0]].append((e[1], w))
        if not graph.directed:
            adj[e[1]].append((e[0], w))
    inf = float("inf")
    dist = [inf] * n
    pred = [-1] * n
    dist[u] = 0
    heap = [(0, u)]
    done = [False] * n
    while heap:
        d, node = heapq.heappop(heap)
        if done[node]:
            continue
        done[node] = True
        for nb, w in adj[node]:
            nd = d + w
            if nd < dist[nb]:
                dist[nb] = nd
                pred[nb] = node
                heapq.heappush(heap, (nd, nb))
            elif nd == dist[nb] and node < pred[nb]:
                pred[nb] = node
    if dist[v] == inf:
        raise Unreachable(f"node {v} unreachable from node {u}")
    path = [v]
    while path[-1] != u:
        path.append(pred[path[-1]])
    path.reverse()
    return int(dist[v]), path


def _edmonds_karp(graph: GraphInstance, s: int, t: int) -> tuple[int, dict[tuple[int, int], int]]:
    n = graph.node_count
    cap = [[0] * n for _ in range(n)]
    for e in graph.edges:
        w = e[2] if len(e) == 3 else 1
        cap[e[0]][e[1]] += w
        if not graph.directed:
            cap[e[1]][e[0]] += w
    flow = [[0] * n for _ in range(n)]
    total = 0
    while True:
        parent = [-1] * n
        parent[s] = s
        queue = deque([s])
        while queue and parent[t] == -1:
            x = queue.popleft()
            for y in range(n):
                if parent[y] == -1 and cap[x][y] - flow[x][y] > 0:
                    parent[y] = x
                    queue.append(y)
        if parent[t] == -1:
            break
        push = float("inf")
        y = t
        while y != s:
            x = parent[y]
            push = min(push, cap[x][y] - flow[x][y])
            y = x
        y = t
        while y != s:
            x = parent[y]
            flow[x][y] += push
            flow[y][x] -= push
            y = x
        total += push
    assignment = {(x, y): flow[x][y] for x in range(n) for y in range(n) if flow[x][y] > 0}
    return int(total), assignment


def max_flow(graph: GraphInstance, s: int, t: int) -> int:
    """Edmonds-Karp maximum flow; edge weights are capacities (1 if unweighted)."""
    graph.check_node(s, t)
    if s == t:
        raise InvalidNode("source and sink must differ")
    return _edmonds_karp(graph, s, t)[0]


def _hopcroft_karp(graph: GraphInstance) -> dict[int, int]:
    if graph.bipartite is None:
        raise NotBipartite("graph has no host/task partition")
    hosts, tasks = graph.bipartite
    adj: list[list[int]] = [[] for _ in range(hosts)]
    for e in graph.edges:
        a, b = e[0], e[1]
        if a >= hosts:
            a, b = b, a
        if a >= hosts or b < hosts:
            raise NotBipartite(f"edge ({e[0]}, {e[1]}) does not cross the partition")
        adj[a].append(b - hosts)
    for row in adj:
        row.sort()
    match_h = [-1] * hosts
    match_t = [-1] * tasks
    nil = hosts
    dist = [0] * (hosts + 1)

    def bfs() -> bool:
        queue = deque()
        for h in range(hosts):
            if match_h[h] == -1:
                dist[h] = 0
                queue.append(h)
            else:
                dist[h] = -1
        dist[nil] = -1
        while queue:
            h = queue.popleft()
            for t in adj[h]:
                nxt = match_t[t] if match_t[t] != -1 else nil
                if dist[nxt] == -1:
                    dist[nxt] = dist[h] + 1
                    if nxt != nil:
                        queue.append(nxt)
        return dist[nil] != -1

    def dfs(h: int) -> bool:
        for t in adj[h]:
            nxt = match_t[t]
            if nxt == -1:
                if dist[nil] == dist[h] + 1:
                    match_h[h], match_t[t] = t, h
                    return True
            elif dist[nxt] == dist[h] + 1 and dfs(nxt):
                match_h[h], match_t[t] = t, h
                return True
        dist[h] = -1
        return False

    while bfs():
        for h in range(hosts):
            if match_h[h] == -1:
                dfs(h)
    return {h: t for h, t in enumerate(match_h) if t != -1}


def max_bipartite_matching(graph: GraphInstance) -> int:
    """Hopcroft-Karp maximum matching size."""
    return len(_hopcroft_karp(graph))


def hamilton_path_from(graph: GraphInstance, start: int = 0, budget: int | None = None) -> list[int] | None:
    """Backtracking search for a Hamiltonian path beginning at ``start``.

    Neighbors are tried in ascending order, so the path returned is the
    lexicographically smallest one. Branches whose unvisited remainder is no
    longer connected to the current endpoint are pruned. With ``budget`` set,
    raises SearchBudgetExceeded after that many node expansions.
    """
    graph.check_node(start)
    n = graph.node_count
    if n == 1:
        return [start]
    adj = graph.neighbors() if not graph.directed else _undirected_adj(graph)
    masks = [0] * n
    for i, row in enumerate(adj):
        for j in row:
            masks[i] |= 1 << j
    adj = [sorted(set(row)) for row in adj]
    full = (1 << n) - 1
    if not _reaches_all(masks, start, full):
        return None
    # more than two degree-one nodes rules out any Hamiltonian path
    leaves = [i for i in range(n) if bin(masks[i]).count("1") <= 1]
    if any(bin(masks[i]).count("1") == 0 for i in range(n)):
        return None
    if len(leaves) > 2 or (len(leaves) == 2 and start not in leaves):
        return None

    path = [start]
    expansions = 0

    def extend(node: int, visited: int) -> bool:
        nonlocal expansions
        if visited == full:
            return True
        expansions += 1
        if budget is not None and expansions > budget:
            raise SearchBudgetExceeded(f"no verdict within {budget} expansions")
        remaining = full & ~visited
        if not _reaches_all(masks, node, remaining | (1 << node), within=remaining | (1 << node)):
            return False
        for nb in adj[node]:
            bit = 1 << nb
            if visited & bit:
                continue
            path.append(nb)
            if extend(nb, visited | bit):
                return True
            path.pop()
        return False

    if extend(start, 1 << start):
        return path
    return None


def _reaches_all(masks: list[int], src: int, target: int, within: int | None = None) -> bool:
    """True when every node in ``target`` is reachable from ``src`` using only ``within`` nodes."""
    allowed = target if within is None else within
    seen = 1 << src
    frontier = seen
    while frontier:
        nxt = 0
        f = frontier
        while f:
            low = f & -f
            i = low.bit_length() - 1
            nxt |= masks[i]
            f ^= low
        nxt &= allowed & ~seen
        seen |= nxt
        frontier = nxt
    return seen & target == target


# ---------------------------------------------------------------------------
# witness checkers (independent of the solvers above)


def is_topological_order(graph: GraphInstance, order: list[int]) -> bool:
    if sorted(order) != list(range(graph.node_count)):
        return False
    pos = {node: i for i, node in enumerate(order)}
    return all(pos[e[0]] < pos[e[1]] for e in graph.edges)


def path_weight(graph: GraphInstance, path: list[int]) -> int | None:
    """Total weight along ``path``, or None if some hop is not an edge."""
    total = 0
    for a, b in zip(path, path[1:]):
        w = graph.edge_weight(a, b)
        if w is None:
            return None
        total += w
    return total


def is_hamilton_path(graph: GraphInstance, path: list[int], start: int = 0) -> bool:
    if not path or path[0] != start:
        return False
    if sorted(path) != list(range(graph.node_count)):
        return False
    return all(graph.has_edge(a, b) or graph.has_edge(b, a) for a, b in zip(path, path[1:]))


# ---------------------------------------------------------------------------


def solve(instance: QaInstance) -> OracleResult:
    """Recompute the gold answer (and a witness where one exists) for ``instance``."""
    g, p, task = instance.graph, instance.params, instance.task
    if task is TaskKind.CONN:
        return OracleResult(task, connectivity(g, p["u"], p["v"]))
    if task is TaskKind.CYC:
        return OracleResult(task, has_cycle(g))
    if task is TaskKind.TS:
        order = topo_sort(g)
        return OracleResult(task, order, order)
    if task is TaskKind.SP:
        dist, path = shortest_path(g, p["u"], p["v"])
        return OracleResult(task, path, dist)
    if task is TaskKind.MF:
        value, assignment = _edmonds_karp(g, p["source"], p["sink"])
        return OracleResult(task, value, assignment)
    if task is TaskKind.BGM:
        matching = _hopcroft_karp(g)
        return OracleResult(task, len(matching), matching)
    if task is TaskKind.HP:
        path = hamilton_path_from(g, p.get("start", 0))
        return OracleResult(task, path, path)
    if task is TaskKind.LP:
        # ground truth is fixed when the held-out pair is chosen
        return OracleResult(task, bool(p["removed"]))
    if task is TaskKind.NC:
        if g.node_classes is None:
            raise ValueError("NC instance lacks node classes")
        return OracleResult(task, g.node_classes[p["node"]])
    raise ValueError(f"no oracle for {task}")
