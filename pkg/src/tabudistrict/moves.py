"""Candidate pool of single-unit and composite moves, switch validity and best switch search."""

from __future__ import annotations

from bisect import bisect_left
from typing import Callable, Iterable

from .contiguity import BlockCutTree, analyze_district, composite_moves
from .instance import Instance
from .plan import Plan


class Move:
    """Reassignment of a connected unit set from ``source`` to ``dest``.

    ``shared_src`` is the boundary the members share with the rest of the
    source district and ``shared_dst`` the boundary shared with the
    destination; together with ``perim`` (dissolved member boundary) they
    make the aggregate update and scoring O(1).
    """

    __slots__ = (
        "members", "anchor", "source", "dest", "pop", "area", "perimeter_sum",
        "internal_shared", "shared_src", "shared_dst", "dest_contacts", "order",
    )

    def __init__(self, members, anchor, source, dest, pop, area, perimeter_sum, internal_shared,
                 shared_src, shared_dst, dest_contacts):
        self.members = members
        self.anchor = anchor
        self.source = source
        self.dest = dest
        self.pop = pop
        self.area = area
        self.perimeter_sum = perimeter_sum
        self.internal_shared = internal_shared
        self.shared_src = shared_src
        self.shared_dst = shared_dst
        self.dest_contacts = dest_contacts
        self.order = (pop, anchor)

    @property
    def perim(self) -> float:
        return self.perimeter_sum - 2.0 * self.internal_shared

    @property
    def is_composite(self) -> bool:
        return len(self.members) > 1

    @property
    def key(self) -> tuple:
        """Identity used for tabu bookkeeping and deduplication."""
        return (self.members, self.source, self.dest)

    def sorted_members(self) -> list[int]:
        return sorted(self.members)

    def reverse_key(self) -> tuple:
        return (self.members, self.dest, self.source)

    def same_as(self, other: "Move") -> bool:
        return (
            self.key == other.key
            and self.anchor == other.anchor
            and self.pop == other.pop
            and self.dest_contacts == other.dest_contacts
            and abs(self.area - other.area) <= 1e-9 * max(1.0, abs(self.area))
            and abs(self.perim - other.perim) <= 1e-9 * max(1.0, abs(self.perim))
            and abs(self.shared_src - other.shared_src) <= 1e-9 * max(1.0, abs(self.shared_src))
            and abs(self.shared_dst - other.shared_dst) <= 1e-9 * max(1.0, abs(self.shared_dst))
        )

    def __repr__(self):
        return f"Move({sorted(self.members)}: {self.source}->{self.dest}, pop={self.pop})"


class DistrictStructure:
    __slots__ = ("members", "tree", "composites")

    def __init__(self, instance: Instance, members: frozenset, size_by: str = "units"):
        self.members = members
        self.tree: BlockCutTree = analyze_district(instance, members)
        self.composites = composite_moves(instance, members, self.tree, size_by=size_by)

    @property
    def cut_points(self) -> frozenset:
        return self.tree.cut_points


def _contacts(instance: Instance, units, assignment, source: int):
    """``{district: (contact units, shared length)}`` for districts other than ``source``."""
    out: dict[int, list] = {}
    nbrs, wts = instance.neighbors, instance.weights
    for i in units:
        for j, w in zip(nbrs[i], wts[i]):
            d = assignment[j]
            if d != source:
                rec = out.get(d)
                if rec is None:
                    out[d] = [{j}, w]
                else:
                    rec[0].add(j)
                    rec[1] += w
    return out


class CandidatePool:
    """Feasible moves per ordered district pair, each list sorted by population transferred.

    A composite move becomes a candidate toward district ``B`` when its cut
    point touches ``B`` (``contact="anchor"``) or, with ``contact="members"``,
    when any member does.
    """

    def __init__(self, instance: Instance, plan: Plan, composite: bool = True,
                 contact: str = "anchor", size_by: str = "units"):
        if contact not in ("anchor", "members"):
            raise ValueError(f"unknown contact rule {contact!r}")
        self.instance = instance
        self.composite = composite
        self.contact = contact
        self.size_by = size_by
        self.r = plan.r
        self.structures: list[DistrictStructure | None] = [None] * plan.r
        self.pairs: dict[tuple[int, int], list[Move]] = {}
        self.refresh(plan, range(plan.r), full=True)

    def structure(self, plan: Plan, d: int) -> DistrictStructure:
        st = self.structures[d]
        mem = plan.members[d]
        if st is None or len(st.members) != len(mem) or st.members != mem:
            st = DistrictStructure(self.instance, frozenset(mem), self.size_by)
            self.structures[d] = st
        return st

    def _outgoing(self, plan: Plan, src: int, dests=None) -> dict[int, list[Move]]:
        inst = self.instance
        assignment = plan.assignment
        members = plan.members[src]
        out: dict[int, list[Move]] = {}
        if len(members) < 2:
            return out
        st = self.structure(plan, src)
        cuts = st.tree.cut_points
        nbrs, wts = inst.neighbors, inst.weights
        pop, area, perim = inst.population, inst.area, inst.perimeter
        for u in members:
            foreign = None
            own = 0.0
            for j, w in zip(nbrs[u], wts[u]):
                d = assignment[j]
                if d == src:
                    own += w
                elif dests is None or d in dests:
                    if foreign is None:
                        foreign = {}
                    rec = foreign.get(d)
                    if rec is None:
                        foreign[d] = [{j}, w]
                    else:
                        rec[0].add(j)
                        rec[1] += w
            if u not in cuts:
                if foreign is None:
                    continue
                mset = frozenset((u,))
                for d, (contacts, sh) in foreign.items():
                    out.setdefault(d, []).append(
                        Move(mset, u, src, d, pop[u], area[u], perim[u], 0.0, own, sh,
                             frozenset(contacts))
                    )
            elif self.composite:
                if self.contact == "anchor" and foreign is None:
                    continue
                cm = st.composites[u]
                mset = cm.members
                touch = _contacts(inst, mset, assignment, src)
                targets = foreign if self.contact == "anchor" else touch
                for d in targets:
                    if dests is not None and d not in dests:
                        continue
                    contacts, sh = touch[d]
                    out.setdefault(d, []).append(
                        Move(mset, u, src, d, cm.population, cm.area, cm.perimeter_sum,
                             cm.internal_shared, cm.shared_with_rest, sh, frozenset(contacts))
                    )
        for lst in out.values():
            lst.sort(key=_order)
        return out

    def refresh(self, plan: Plan, districts: Iterable[int], full: bool = False) -> set:
        """Recompute every pair touching ``districts``; returns the refreshed ordered pairs."""
        affected = set(districts)
        touched = set()
        for src in range(self.r):
            if src in affected or full:
                new = self._outgoing(plan, src)
                for d in range(self.r):
                    if d != src:
                        touched.add((src, d))
                        if d in new:
                            self.pairs[(src, d)] = new[d]
                        else:
                            self.pairs.pop((src, d), None)
            else:
                new = self._outgoing(plan, src, affected)
                for d in affected:
                    if d == src:
                        continue
                    touched.add((src, d))
                    if d in new:
                        self.pairs[(src, d)] = new[d]
                    else:
                        self.pairs.pop((src, d), None)
        return touched

    def moves(self, a: int, b: int) -> list[Move]:
        return self.pairs.get((a, b), [])

    def all_moves(self):
        for pair in sorted(self.pairs):
            yield from self.pairs[pair]

    def total(self) -> int:
        return sum(len(v) for v in self.pairs.values())

    def equivalent(self, other: "CandidatePool") -> bool:
        """Element-wise equality of the two pools."""
        if set(self.pairs) != set(other.pairs):
            return False
        for pair, lst in self.pairs.items():
            olst = other.pairs[pair]
            if len(lst) != len(olst) or not all(a.same_as(b) for a, b in zip(lst, olst)):
                return False
        return True


def _order(m: Move):
    return m.order


def enumerate_candidates(instance: Instance, plan: Plan, composite: bool = True,
                         contact: str = "anchor", size_by: str = "units") -> CandidatePool:
    return CandidatePool(instance, plan, composite=composite, contact=contact, size_by=size_by)


def update_candidates(pool: CandidatePool, instance: Instance, plan: Plan, applied) -> CandidatePool:
    """Refresh ``pool`` after ``applied`` (a move or a ``(m1, m2)`` switch) was committed."""
    m = applied[0] if isinstance(applied, tuple) else applied
    pool.refresh(plan, (m.source, m.dest))
    return pool


def switch_valid(m1: Move, m2: Move) -> bool:
    """True unless one move's destination contacts all lie inside the other move.

    After the exchange each move must still touch what remains of its
    destination district.
    """
    if m1.source != m2.dest or m1.dest != m2.source:
        raise ValueError("switch moves must run in opposite directions between the same districts")
    return not (m1.dest_contacts <= m2.members) and not (m2.dest_contacts <= m1.members)


def count_valid_switches(pool_ab: list[Move], pool_ba: list[Move]) -> int:
    return sum(1 for m1 in pool_ab for m2 in pool_ba if switch_valid(m1, m2))


def best_switch(pool_ab: list[Move], pool_ba: list[Move], scorer, agg_a, agg_b, window: int = 3,
                allowed: Callable[[Move], bool] | None = None, instance: Instance | None = None,
                pops_ba: list[int] | None = None):
    """Best valid ``(score, m1, m2)`` exchange between two districts, or ``None``.

    For each ``m1`` the ideal counter-transfer is located by binary search in
    ``pool_ba`` (sorted by population) and ``window`` usable moves on each
    side are scored with the full objective. With a population-only
    objective the score is a convex function of the transfer, so this equals
    exhaustive search over all valid pairs.
    """
    if not pool_ab or not pool_ba:
        return None
    if pops_ba is None:
        pops_ba = [m.pop for m in pool_ba]
    half_gap = (agg_a.population - agg_b.population) / 2.0
    use_cross = bool(scorer.w_comp) and instance is not None
    n = len(pool_ba)
    best = None
    for m1 in pool_ab:
        if allowed is not None and not allowed(m1):
            continue
        target = m1.pop - half_gap
        mid = bisect_left(pops_ba, target)
        for start, step in ((mid - 1, -1), (mid, 1)):
            found = 0
            j = start
            while 0 <= j < n and found < window:
                m2 = pool_ba[j]
                j += step
                if allowed is not None and not allowed(m2):
                    continue
                if m1.dest_contacts <= m2.members or m2.dest_contacts <= m1.members:
                    continue
                found += 1
                cross = 0.0
                if use_cross:
                    from .plan import switch_cross_shared

                    cross = switch_cross_shared(instance, m1, m2)
                score = scorer.switch_delta(m1, m2, agg_a, agg_b, cross)
                if best is None or score > best[0]:
                    best = (score, m1, m2)
    return best


def exhaustive_best_switch(pool_ab, pool_ba, scorer, agg_a, agg_b, instance=None):
    """Reference search over every valid pair."""
    best = None
    for m1 in pool_ab:
        for m2 in pool_ba:
            if not switch_valid(m1, m2):
                continue
            cross = 0.0
            if scorer.w_comp and instance is not None:
                from .plan import switch_cross_shared

                cross = switch_cross_shared(instance, m1, m2)
            score = scorer.switch_delta(m1, m2, agg_a, agg_b, cross)
            if best is None or score > best[0]:
                best = (score, m1, m2)
    return best
