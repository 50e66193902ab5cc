"""Shared fixtures and brute-force oracles written independently of the package internals."""

from __future__ import annotations

import math
import random

from tabudistrict.instance import Edge, Instance, Unit
from tabudistrict.plan import Plan

# Reconstruction of the 25-unit worked example: three districts, unit
# populations of 1, every shared boundary of length 1.
FIG1_DISTRICTS = {
    "A": [1, 2, 3, 4, 5, 10, 14],
    "B": [6, 7, 8, 9, 11, 12, 17],
    "C": [13, 15, 16, 18, 19, 20, 21, 22, 23, 24, 25],
}
FIG1_EDGES = [
    # inside A
    (1, 2), (2, 3), (3, 4), (4, 5), (5, 10), (10, 2), (10, 14),
    # inside B
    (6, 7), (7, 8), (8, 12), (12, 11), (11, 6), (11, 9), (9, 17),
    # inside C
    (13, 16), (16, 19), (19, 20), (20, 24), (24, 16), (19, 18), (18, 25), (25, 22),
    (22, 19), (22, 21), (21, 15), (15, 23), (23, 21),
    # between districts
    (10, 15), (14, 15), (14, 21), (1, 6), (2, 11), (5, 9), (10, 9), (14, 17),
    (8, 22), (9, 13), (9, 16), (11, 18), (11, 19), (11, 22), (12, 22), (17, 21),
]


def fig1_instance() -> Instance:
    units = [Unit(i, 1, 1.0, 4.0) for i in range(1, 26)]
    return Instance(units, [Edge(u, v, 1.0) for u, v in FIG1_EDGES])


def fig1_plan(instance: Instance | None = None) -> Plan:
    instance = instance or fig1_instance()
    mapping = {uid: d for d, key in enumerate("ABC") for uid in FIG1_DISTRICTS[key]}
    return Plan.from_mapping(instance, mapping)


def ids_of(instance: Instance, indices) -> set:
    return {instance.ids[i] for i in indices}


def idx_of(instance: Instance, ids) -> set:
    return {instance.index[u] for u in ids}


# -- graph oracles -------------------------------------------------------------


def components(adj: dict, nodes: set) -> list[set]:
    seen, out = set(), []
    for s in sorted(nodes):
        if s in seen:
            continue
        comp, stack = {s}, [s]
        seen.add(s)
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y in nodes and y not in seen:
                    seen.add(y)
                    comp.add(y)
                    stack.append(y)
        out.append(comp)
    return out


def brute_cut_points(adj: dict, nodes: set) -> set:
    """Nodes whose removal increases the number of components."""
    base = len(components(adj, nodes))
    return {v for v in nodes if len(components(adj, nodes - {v})) > base}


def brute_bcc_edge_partition(adj: dict, nodes: set) -> set:
    """Edge classes where two edges share a block iff no single vertex separates them."""
    edges = sorted({(min(u, v), max(u, v)) for u in nodes for v in adj[u] if v in nodes})
    label = {}
    for v in nodes:
        for k, comp in enumerate(components(adj, nodes - {v})):
            for x in comp:
                label[(v, x)] = k
    parent = list(range(len(edges)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, e in enumerate(edges):
        for j in range(i + 1, len(edges)):
            f = edges[j]
            together = True
            for v in nodes:
                x = e[0] if e[0] != v else e[1]
                y = f[0] if f[0] != v else f[1]
                if label[(v, x)] != label[(v, y)]:
                    together = False
                    break
            if together:
                parent[find(i)] = find(j)
    classes: dict[int, set] = {}
    for i, e in enumerate(edges):
        classes.setdefault(find(i), set()).add(e)
    return {frozenset(c) for c in classes.values()}


def random_connected_graph(rng: random.Random, n: int, extra: float) -> Instance:
    """Random spanning tree plus a random number of chords."""
    edges = set()
    for v in range(1, n):
        u = rng.randrange(v)
        edges.add((u, v))
    for _ in range(int(extra * n)):
        u, v = rng.sample(range(n), 2)
        edges.add((min(u, v), max(u, v)))
    units = [Unit(i, rng.randint(0, 50), 1.0, 10.0) for i in range(n)]
    return Instance(units, [Edge(u, v, 1.0) for u, v in edges])


def index_adjacency(instance: Instance) -> dict:
    return {i: set(instance.neighbors[i]) for i in range(instance.n)}


# -- objective oracle ----------------------------------------------------------


def objective_from_scratch(instance: Instance, assignment, r: int, w_pop=1.0, w_comp=0.0):
    """Recompute PopDev and compactness from raw unit data (no package aggregates)."""
    pop = [0] * r
    area = [0.0] * r
    perim = [0.0] * r
    for i, d in enumerate(assignment):
        pop[d] += instance.population[i]
        area[d] += instance.area[i]
        perim[d] += instance.perimeter[i]
    for e in instance.edges:
        i, j = instance.index[e.u], instance.index[e.v]
        if assignment[i] == assignment[j]:
            perim[assignment[i]] -= 2 * e.shared_length
    total = sum(pop)
    # floor(|p - total/r|) without leaving the integers
    popdev = sum(abs(r * p - total) // r for p in pop)
    comp = 0.0
    if w_comp:
        comp = sum(total / 1000.0 * (1 - 4 * math.pi * a / (p * p)) for a, p in zip(area, perim))
    return popdev, comp, w_pop * popdev + w_comp * comp


def connected_ids(instance: Instance, units: set) -> bool:
    if not units:
        return False
    adj = index_adjacency(instance)
    return len(components(adj, set(units))) == 1


# -- acceptance reporting ------------------------------------------------------

ACCEPTANCE_LINES: dict[int, str] = {}


class criterion:
    """Record one PASS / FAIL / SKIP line for acceptance criterion ``number``."""

    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title
        self.detail = ""

    def note(self, text: str) -> None:
        self.detail = text

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            status = "PASS"
        elif exc_type.__name__ == "Skipped":
            status, self.detail = "SKIP", str(exc)
        else:
            status = "FAIL"
            reason = str(exc).splitlines()[0][:200] if str(exc) else exc_type.__name__
            self.detail = f"{self.detail} | {reason}" if self.detail else reason
        line = f"[criterion {self.number:2d}] {status}  {self.title}"
        if self.detail:
            line += f" -- {self.detail}"
        ACCEPTANCE_LINES[self.number] = line
        print(line)
        return False
