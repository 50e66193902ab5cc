"""Cut points, biconnected components and composite moves of one district.

A composite move for cut point ``c`` is ``c`` plus every component of
``district - {c}`` except the largest one. Components are compared by size
(unit count by default, optionally population); equal sizes are broken by
keeping the component that holds the lowest unit index.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

from .instance import Instance


class DisconnectedDistrictError(ValueError):
    pass


@dataclass(frozen=True)
class BlockCutTree:
    bccs: tuple[frozenset, ...]
    bcc_edges: tuple[tuple[tuple[int, int], ...], ...]
    cut_points: frozenset
    bcc_to_cpts: tuple[frozenset, ...]
    cpt_to_bccs: dict

    def is_tree(self) -> bool:
        """Contracting every bcc to a node and linking it to its cut points yields a tree."""
        nodes = len(self.bccs) + len(self.cut_points)
        links = sum(len(c) for c in self.bcc_to_cpts)
        if links != nodes - 1:
            return False
        if not self.bccs:
            return True
        seen_b, seen_c = {0}, set()
        queue = deque([("b", 0)])
        while queue:
            kind, x = queue.popleft()
            if kind == "b":
                for c in self.bcc_to_cpts[x]:
                    if c not in seen_c:
                        seen_c.add(c)
                        queue.append(("c", c))
            else:
                for b in self.cpt_to_bccs[x]:
                    if b not in seen_b:
                        seen_b.add(b)
                        queue.append(("b", b))
        return len(seen_b) + len(seen_c) == nodes


def analyze_district(instance: Instance, member_set: Iterable[int]) -> BlockCutTree:
    """Biconnected decomposition of the subgraph induced by ``member_set``.

    Iterative Hopcroft-Tarjan DFS with an edge stack; linear in the number of
    members plus induced edges. Raises :class:`DisconnectedDistrictError` if
    the members do not induce a connected subgraph.
    """
    members = member_set if isinstance(member_set, (set, frozenset)) else set(member_set)
    if not members:
        raise DisconnectedDistrictError("empty district")
    nbrs = instance.neighbors
    root = min(members)
    disc = {root: 0}
    low = {root: 0}
    counter = 1
    edge_stack: list[tuple[int, int]] = []
    comps: list[list[tuple[int, int]]] = []
    cut = set()
    root_children = 0
    stack = [(root, -1, iter(nbrs[root]))]
    while stack:
        u, parent, it = stack[-1]
        advanced = False
        for v in it:
            if v not in members or v == parent:
                continue
            dv = disc.get(v)
            if dv is None:
                disc[v] = low[v] = counter
                counter += 1
                edge_stack.append((u, v))
                stack.append((v, u, iter(nbrs[v])))
                advanced = True
                break
            if dv < disc[u]:
                edge_stack.append((u, v))
                if dv < low[u]:
                    low[u] = dv
        if advanced:
            continue
        stack.pop()
        if parent < 0:
            continue
        if low[u] < low[parent]:
            low[parent] = low[u]
        if low[u] >= disc[parent]:
            comp = []
            while True:
                e = edge_stack.pop()
                comp.append(e)
                if e == (parent, u):
                    break
            comps.append(comp)
            if parent == root:
                root_children += 1
            else:
                cut.add(parent)
    if len(disc) != len(members):
        raise DisconnectedDistrictError(
            f"district is not connected ({len(disc)} of {len(members)} units reachable)"
        )
    if root_children > 1:
        cut.add(root)

    if not comps:
        blocks = [(frozenset([root]), ())]
    else:
        blocks = []
        for comp in comps:
            units = frozenset(x for e in comp for x in e)
            blocks.append((units, tuple(sorted((min(e), max(e)) for e in comp))))
        blocks.sort(key=lambda b: (min(b[0]), len(b[0])))
    bccs = tuple(b[0] for b in blocks)
    bcc_edges = tuple(b[1] for b in blocks)
    cut_points = frozenset(cut)
    bcc_to_cpts = tuple(frozenset(b & cut_points) for b in bccs)
    cpt_to_bccs: dict[int, set] = {c: set() for c in cut_points}
    for k, cp in enumerate(bcc_to_cpts):
        for c in cp:
            cpt_to_bccs[c].add(k)
    return BlockCutTree(
        bccs, bcc_edges, cut_points, bcc_to_cpts,
        {c: frozenset(s) for c, s in cpt_to_bccs.items()},
    )


class CompositeMove:
    """A cut point together with the smaller components hanging from it.

    Attribute sums are accumulated during the tree traversal; ``members`` is
    materialized on first access.
    """

    __slots__ = (
        "anchor", "population", "area", "perimeter_sum", "internal_shared",
        "shared_with_rest", "size", "_parts", "_members",
    )

    def __init__(self, anchor, population, area, perimeter_sum, internal_shared,
                 shared_with_rest, size, parts):
        self.anchor = anchor
        self.population = population
        self.area = area
        self.perimeter_sum = perimeter_sum
        self.internal_shared = internal_shared
        self.shared_with_rest = shared_with_rest
        self.size = size
        self._parts = parts
        self._members = None

    @property
    def perimeter(self) -> float:
        """Dissolved boundary length of the member set."""
        return self.perimeter_sum - 2.0 * self.internal_shared

    @property
    def members(self) -> frozenset:
        if self._members is None:
            out = {self.anchor}
            todo = list(self._parts)
            while todo:
                p = todo.pop()
                if isinstance(p, CompositeMove):
                    if p._members is not None:
                        out |= p._members
                    else:
                        out.add(p.anchor)
                        todo.extend(p._parts)
                else:
                    out |= p
            self._members = frozenset(out)
        return self._members

    def __repr__(self):
        return f"CompositeMove(anchor={self.anchor}, members={sorted(self.members)})"


class _Acc:
    """Running attribute sums of a subtree of the block-cut tree."""

    __slots__ = ("count", "weight", "pop", "area", "perim", "internal", "lo", "lo2", "parts")

    def __init__(self):
        self.count = 0
        self.weight = 0
        self.pop = 0
        self.area = 0.0
        self.perim = 0.0
        self.internal = 0.0
        self.lo = None
        self.lo2 = None
        self.parts = []

    def note_min(self, x):
        if x is None:
            return
        if self.lo is None or x < self.lo:
            self.lo, self.lo2 = x, self.lo
        elif x != self.lo and (self.lo2 is None or x < self.lo2):
            self.lo2 = x

    def min_excluding(self, c):
        return self.lo2 if self.lo == c else self.lo


@dataclass
class _Side:
    """One component of ``district - {cpt}`` (cut point excluded)."""

    weight: int
    lo: int
    count: int
    pop: int
    area: float
    perim: float
    internal: float
    parts: list
    bcc: int

    def key(self):
        return (self.weight, -self.lo)


@dataclass
class _CutState:
    bccs: set
    maxc: _Side | None = None
    rest: list = field(default_factory=list)
    rest_weight: int = 0


def composite_moves(instance: Instance, member_set: Iterable[int], tree: BlockCutTree | None = None,
                    size_by: str = "units") -> dict[int, CompositeMove]:
    """One composite move per cut point, built leaf-to-root over the block-cut tree.

    Returns ``{cut point: CompositeMove}``. ``size_by`` is ``"units"`` or
    ``"population"``. Runs in time linear in the district size (member sets
    are materialized lazily).
    """
    members = member_set if isinstance(member_set, (set, frozenset)) else set(member_set)
    if tree is None:
        tree = analyze_district(instance, members)
    if not tree.cut_points:
        return {}
    by_pop = size_by == "population"
    if size_by not in ("units", "population"):
        raise ValueError(f"unknown size measure {size_by!r}")
    pop, area, perim = instance.population, instance.area, instance.perimeter

    def w_of(i):
        return pop[i] if by_pop else 1

    total_weight = sum(pop[i] for i in members) if by_pop else len(members)

    accs = []
    anchor_weight: dict[tuple[int, int], float] = {}
    for k, (units, edges) in enumerate(zip(tree.bccs, tree.bcc_edges)):
        acc = _Acc()
        for i in units:
            acc.count += 1
            acc.weight += w_of(i)
            acc.pop += pop[i]
            acc.area += area[i]
            acc.perim += perim[i]
            acc.note_min(i)
        for i, j in edges:
            s = instance.shared(i, j)
            acc.internal += s
            for x in (i, j):
                if x in tree.cut_points:
                    anchor_weight[(x, k)] = anchor_weight.get((x, k), 0.0) + s
        acc.parts.append(units)
        accs.append(acc)

    bcc_cpts = [set(c) for c in tree.bcc_to_cpts]
    state = {c: _CutState(set(b)) for c, b in tree.cpt_to_bccs.items()}
    leaves = deque(k for k, cp in enumerate(bcc_cpts) if len(cp) == 1)
    out: dict[int, CompositeMove] = {}

    def side(k, c) -> _Side:
        a = accs[k]
        return _Side(a.weight - w_of(c), a.min_excluding(c), a.count - 1, a.pop - pop[c],
                     a.area - area[c], a.perim - perim[c], a.internal, a.parts, k)

    def remaining_min(c, st) -> int:
        hanging = set()
        for s in ([st.maxc] if st.maxc else []) + st.rest:
            for p in s.parts:
                hanging |= p if not isinstance(p, CompositeMove) else p.members
        return min(i for i in members if i != c and i not in hanging)

    while leaves:
        k = leaves.popleft()
        if not bcc_cpts[k]:
            continue
        c = next(iter(bcc_cpts[k]))
        st = state[c]
        if k not in st.bccs:
            continue
        comp = side(k, c)
        if st.maxc is None or comp.key() > st.maxc.key():
            if st.maxc is not None:
                st.rest.append(st.maxc)
                st.rest_weight += st.maxc.weight
            st.maxc = comp
        else:
            st.rest.append(comp)
            st.rest_weight += comp.weight
        st.bccs.discard(k)
        kept = None
        if len(st.bccs) == 1:
            wc = w_of(c)
            max_incl = st.maxc.weight + wc
            union_incl = st.maxc.weight + st.rest_weight + wc
            remaining_incl = total_weight - union_incl + wc
            absorb = max_incl < remaining_incl
            if not absorb and max_incl == remaining_incl:
                absorb = remaining_min(c, st) < st.maxc.lo
            if absorb:
                st.rest.append(st.maxc)
                st.rest_weight += st.maxc.weight
                st.maxc = None
                kept = st.bccs.pop()
        if not st.bccs:
            if kept is None:
                kept = st.maxc.bcc
            move = CompositeMove(
                anchor=c,
                population=pop[c] + sum(s.pop for s in st.rest),
                area=area[c] + sum(s.area for s in st.rest),
                perimeter_sum=perim[c] + sum(s.perim for s in st.rest),
                internal_shared=sum(s.internal for s in st.rest),
                shared_with_rest=anchor_weight.get((c, kept), 0.0),
                size=1 + sum(s.count for s in st.rest),
                parts=[p for s in st.rest for p in s.parts],
            )
            out[c] = move
            if st.maxc is None:
                # the kept side absorbs the composite and may become a leaf
                acc = accs[kept]
                acc.count += move.size - 1
                acc.weight += sum(s.weight for s in st.rest)
                acc.pop += move.population - pop[c]
                acc.area += move.area - area[c]
                acc.perim += move.perimeter_sum - perim[c]
                acc.internal += move.internal_shared
                for s in st.rest:
                    acc.note_min(s.lo)
                acc.parts.append(move)
                bcc_cpts[kept].discard(c)
                if len(bcc_cpts[kept]) == 1:
                    leaves.append(kept)
    if len(out) != len(tree.cut_points):
        raise RuntimeError("composite traversal did not resolve every cut point")
    return out


ORACLE_LIMIT = 30


def minimal_move_oracle(instance: Instance, member_set: Iterable[int], anchor: int,
                        limit: int = ORACLE_LIMIT) -> frozenset | None:
    """Smallest connected ``M`` containing ``anchor`` whose removal leaves a connected, non-empty rest.

    Exhaustive level-by-level enumeration of connected supersets of
    ``{anchor}`` (bitmask search). Among equally small answers the one whose
    remainder contains the lowest unit index wins. Returns ``None`` for a
    single-unit district.
    """
    units = sorted(member_set)
    if anchor not in units:
        raise ValueError("anchor is not a member of the district")
    if len(units) > limit:
        raise ValueError(f"district of {len(units)} units exceeds the oracle limit of {limit}")
    if len(units) == 1:
        return None
    pos = {u: k for k, u in enumerate(units)}
    adj = [0] * len(units)
    for u in units:
        for v in instance.neighbors[u]:
            if v in pos:
                adj[pos[u]] |= 1 << pos[v]
    full = (1 << len(units)) - 1

    def is_connected(mask):
        if not mask:
            return False
        seen = mask & -mask
        frontier = seen
        while frontier:
            grow = 0
            m = frontier
            while m:
                b = m & -m
                grow |= adj[b.bit_length() - 1]
                m ^= b
            frontier = grow & mask & ~seen
            seen |= frontier
        return seen == mask

    level = {1 << pos[anchor]}
    while level:
        valid = [m for m in level if m != full and is_connected(full & ~m)]
        if valid:
            # lowest bit of the remainder = lowest unit index kept in the district
            best = min(valid, key=lambda m: (full & ~m) & -(full & ~m))
            return frozenset(units[k] for k in range(len(units)) if best >> k & 1)
        nxt = set()
        for m in level:
            border = 0
            x = m
            while x:
                b = x & -x
                border |= adj[b.bit_length() - 1]
                x ^= b
            border &= ~m
            while border:
                b = border & -border
                nxt.add(m | b)
                border ^= b
        level = nxt
    return None
