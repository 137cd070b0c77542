"""Slow reference solvers used as test oracles. Exhaustive on purpose; n <= 8."""

from __future__ import annotations

import itertools
from collections import deque


def adjacency(g, undirected=None):
    und = (not g.directed) if undirected is None else undirected
    adj = {i: set() for i in range(g.node_count)}
    for e in g.edges:
        adj[e[0]].add(e[1])
        if und:
            adj[e[1]].add(e[0])
    return adj


def bfs_reachable(g, u, v):
    adj = adjacency(g)
    seen, todo = {u}, deque([u])
    while todo:
        x = todo.popleft()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                todo.append(y)
    return v in seen


def component_count(g):
    adj = adjacency(g, undirected=True)
    seen, comps = set(), 0
    for s in range(g.node_count):
        if s in seen:
            continue
        comps += 1
        stack = [s]
        seen.add(s)
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
    return comps


def has_cycle_by_count(g):
    # a forest has exactly n - components edges
    return g.edge_count > g.node_count - component_count(g)


def respects_precedence(g, order):
    if sorted(order) != list(range(g.node_count)):
        return False
    pos = {x: i for i, x in enumerate(order)}
    return all(pos[e[0]] < pos[e[1]] for e in g.edges)


def any_topological_order(g):
    for perm in itertools.permutations(range(g.node_count)):
        if respects_precedence(g, perm):
            return list(perm)
    return None


def simple_paths(g, u, v):
    adj = adjacency(g)
    out = []

    def walk(path, seen):
        x = path[-1]
        if x == v:
            out.append(list(path))
            return
        for y in sorted(adj[x]):
            if y not in seen:
                seen.add(y)
                path.append(y)
                walk(path, seen)
                path.pop()
                seen.remove(y)

    walk([u], {u})
    return out


def weight_of(g, path):
    w = {}
    for a, b, c in g.edges:
        w[(a, b)] = c
        if not g.directed:
            w[(b, a)] = c
    return sum(w[(path[i], path[i + 1])] for i in range(len(path) - 1))


def shortest_by_enumeration(g, u, v):
    paths = simple_paths(g, u, v)
    if not paths:
        return None
    return min(weight_of(g, p) for p in paths)


def min_cut(g, s, t):
    others = [x for x in range(g.node_count) if x not in (s, t)]
    best = None
    for r in range(len(others) + 1):
        for extra in itertools.combinations(others, r):
            side = {s, *extra}
            cap = sum(c for a, b, c in g.edges if a in side and b not in side)
            best = cap if best is None else min(best, cap)
    return best


def max_matching_by_enumeration(g):
    hosts = g.bipartite[0]
    options = {h: sorted(b for a, b in g.edges if a == h) for h in range(hosts)}

    def go(h, used):
        if h == hosts:
            return 0
        best = go(h + 1, used)
        for t in options[h]:
            if t not in used:
                used.add(t)
                best = max(best, 1 + go(h + 1, used))
                used.remove(t)
        return best

    return go(0, set())


def is_ham_path(g, path, start=0):
    if not path or path[0] != start or sorted(path) != list(range(g.node_count)):
        return False
    adj = adjacency(g)
    return all(path[i + 1] in adj[path[i]] for i in range(len(path) - 1))


def first_ham_path_by_permutation(g, start=0):
    rest = [x for x in range(g.node_count) if x != start]
    for perm in itertools.permutations(rest):
        path = [start, *perm]
        if is_ham_path(g, path, start):
            return path
    return None
