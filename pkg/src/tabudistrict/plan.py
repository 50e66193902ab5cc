"""Districting plans with incrementally maintained per-district aggregates."""

from __future__ import annotations

import csv
import io
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from .instance import Instance
from .objective import ppi


class InfeasibleMoveError(ValueError):
    """A move or switch would break coverage, emptiness or contiguity rules."""


class PlanError(ValueError):
    pass


@dataclass(slots=True)
class DistrictAggregate:
    population: int
    area: float
    perimeter: float
    unit_count: int

    def copy(self) -> "DistrictAggregate":
        return DistrictAggregate(self.population, self.area, self.perimeter, self.unit_count)


class Plan:
    """Assignment of every unit (by index) to a district in ``range(r)``.

    A plan owns its aggregates and mutates them in place on
    :func:`apply_move` / :func:`apply_switch`. With ``debug=True`` every
    accepted operation is cross-checked against a full recomputation and the
    contiguity oracle.
    """

    def __init__(self, instance: Instance, assignment: Sequence[int], r: int | None = None,
                 debug: bool = False):
        if len(assignment) != instance.n:
            raise PlanError(f"assignment covers {len(assignment)} of {instance.n} units")
        self.instance = instance
        self.assignment = [int(d) for d in assignment]
        self.r = r if r is not None else (max(self.assignment) + 1 if self.assignment else 0)
        self.members: list[set[int]] = [set() for _ in range(self.r)]
        for i, d in enumerate(self.assignment):
            if not 0 <= d < self.r:
                raise PlanError(f"unit {instance.ids[i]} assigned to invalid district {d}")
            self.members[d].add(i)
        for d, mem in enumerate(self.members):
            if not mem:
                raise PlanError(f"district {d} is empty")
        self.aggregates = build_aggregates(instance, self)
        self.debug = debug

    @classmethod
    def from_mapping(cls, instance: Instance, mapping: dict[int, int], **kw) -> "Plan":
        """Build from ``{unit id: district label}``; labels are renumbered in sorted order."""
        missing = [uid for uid in instance.ids if uid not in mapping]
        unknown = [uid for uid in mapping if uid not in instance.index]
        problems = []
        if missing:
            problems.append(f"units without a district: {missing[:10]}")
        if unknown:
            problems.append(f"unknown unit ids: {unknown[:10]}")
        if problems:
            raise PlanError("; ".join(problems))
        labels = sorted(set(mapping.values()))
        relabel = {lab: k for k, lab in enumerate(labels)}
        return cls(instance, [relabel[mapping[uid]] for uid in instance.ids], len(labels), **kw)

    def copy(self) -> "Plan":
        new = object.__new__(Plan)
        new.instance = self.instance
        new.assignment = list(self.assignment)
        new.r = self.r
        new.members = [set(m) for m in self.members]
        new.aggregates = [a.copy() for a in self.aggregates]
        new.debug = self.debug
        return new

    def labels(self) -> dict[int, int]:
        """``{unit id: district}``."""
        ids = self.instance.ids
        return {ids[i]: d for i, d in enumerate(self.assignment)}

    def populations(self) -> list[int]:
        return [a.population for a in self.aggregates]

    def __repr__(self):
        return f"Plan(r={self.r}, populations={self.populations()})"


def build_aggregates(instance: Instance, plan: Plan) -> list[DistrictAggregate]:
    """Recompute every district's aggregate from scratch."""
    aggs = [DistrictAggregate(0, 0.0, 0.0, 0) for _ in range(plan.r)]
    assignment = plan.assignment
    internal = [0.0] * plan.r
    for i, d in enumerate(assignment):
        a = aggs[d]
        a.population += instance.population[i]
        a.area += instance.area[i]
        a.perimeter += instance.perimeter[i]
        a.unit_count += 1
    for e in instance.edges:
        i, j = instance.index[e.u], instance.index[e.v]
        if assignment[i] == assignment[j]:
            internal[assignment[i]] += e.shared_length
    for d, a in enumerate(aggs):
        a.perimeter -= 2.0 * internal[d]
    return aggs


def connected(instance: Instance, units: set[int]) -> bool:
    """Breadth-first reachability check that ``units`` induce a connected subgraph."""
    if not units:
        return False
    start = next(iter(units))
    seen = {start}
    queue = deque([start])
    nbrs = instance.neighbors
    while queue:
        i = queue.popleft()
        for j in nbrs[i]:
            if j in units and j not in seen:
                seen.add(j)
                queue.append(j)
    return len(seen) == len(units)


def is_contiguous(instance: Instance, plan: Plan, district: int) -> bool:
    if not 0 <= district < plan.r:
        raise IndexError(f"district {district} out of range")
    return connected(instance, plan.members[district])


def shared_between(instance: Instance, a: Iterable[int], b: set[int]) -> float:
    total = 0.0
    for i in a:
        for j, w in zip(instance.neighbors[i], instance.weights[i]):
            if j in b:
                total += w
    return total


def _check(plan: Plan, districts: Iterable[int]) -> None:
    fresh = build_aggregates(plan.instance, plan)
    for d in range(plan.r):
        got, want = plan.aggregates[d], fresh[d]
        scale = max(1.0, abs(want.area), abs(want.perimeter))
        if (got.population != want.population or got.unit_count != want.unit_count
                or abs(got.area - want.area) > 1e-9 * scale
                or abs(got.perimeter - want.perimeter) > 1e-9 * scale):
            raise AssertionError(f"aggregate drift in district {d}: {got} vs {want}")
    for d in districts:
        if not plan.members[d]:
            raise AssertionError(f"district {d} emptied")
        if not connected(plan.instance, plan.members[d]):
            raise AssertionError(f"district {d} lost contiguity")


def _reassign(plan: Plan, members, source: int, dest: int) -> None:
    src, dst = plan.members[source], plan.members[dest]
    for i in members:
        plan.assignment[i] = dest
        src.discard(i)
        dst.add(i)


def apply_move(plan: Plan, move) -> Plan:
    """Reassign ``move.members`` from ``move.source`` to ``move.dest`` in place."""
    src, dst = move.source, move.dest
    members = move.members
    if src == dst:
        raise InfeasibleMoveError("source and destination coincide")
    if len(members) >= len(plan.members[src]):
        raise InfeasibleMoveError(f"move would empty district {src}")
    if any(plan.assignment[i] != src for i in members):
        raise InfeasibleMoveError("move members are not all in the source district")
    _reassign(plan, members, src, dst)
    a, b = plan.aggregates[src], plan.aggregates[dst]
    a.population -= move.pop
    b.population += move.pop
    a.area -= move.area
    b.area += move.area
    a.perimeter += 2.0 * move.shared_src - move.perim
    b.perimeter += move.perim - 2.0 * move.shared_dst
    a.unit_count -= len(members)
    b.unit_count += len(members)
    if plan.debug:
        _check(plan, (src, dst))
    return plan


def switch_cross_shared(instance: Instance, m1, m2) -> float:
    small, big = (m1.members, m2.members) if len(m1.members) <= len(m2.members) else (m2.members, m1.members)
    return shared_between(instance, small, big)


def apply_switch(plan: Plan, m1, m2) -> Plan:
    """Exchange ``m1`` (A to B) and ``m2`` (B to A) atomically."""
    from .moves import switch_valid

    if not switch_valid(m1, m2):
        raise InfeasibleMoveError("invalid switch")
    a_idx, b_idx = m1.source, m1.dest
    if len(m1.members) >= len(plan.members[a_idx]) or len(m2.members) >= len(plan.members[b_idx]):
        raise InfeasibleMoveError("switch would empty a district")
    if any(plan.assignment[i] != a_idx for i in m1.members) or \
            any(plan.assignment[i] != b_idx for i in m2.members):
        raise InfeasibleMoveError("switch members are not in their source districts")
    x = switch_cross_shared(plan.instance, m1, m2)
    _reassign(plan, m1.members, a_idx, b_idx)
    _reassign(plan, m2.members, b_idx, a_idx)
    a, b = plan.aggregates[a_idx], plan.aggregates[b_idx]
    net = m1.pop - m2.pop
    a.population -= net
    b.population += net
    a.area += m2.area - m1.area
    b.area += m1.area - m2.area
    a.perimeter += 2.0 * m1.shared_src - m1.perim + m2.perim - 2.0 * (m2.shared_dst - x)
    b.perimeter += m1.perim - 2.0 * m1.shared_dst - m2.perim + 2.0 * (m2.shared_src + x)
    a.unit_count += len(m2.members) - len(m1.members)
    b.unit_count += len(m1.members) - len(m2.members)
    if plan.debug:
        _check(plan, (a_idx, b_idx))
    return plan


def write_plan_csv(plan: Plan, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["unit_id", "district"])
    for uid, d in zip(plan.instance.ids, plan.assignment):
        w.writerow([uid, d])


def plan_to_csv(plan: Plan) -> str:
    buf = io.StringIO()
    write_plan_csv(plan, buf)
    return buf.getvalue()


def read_plan_csv(instance: Instance, stream, **kw) -> Plan:
    """Parse ``unit_id,district`` rows; raises :class:`PlanError` on coverage problems."""
    data = stream.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8-sig")
    reader = csv.DictReader(io.StringIO(data, newline=""))
    if not reader.fieldnames or {"unit_id", "district"} - {f.strip() for f in reader.fieldnames}:
        raise PlanError("plan CSV needs header unit_id,district")
    reader.fieldnames = [f.strip() for f in reader.fieldnames]
    mapping: dict[int, int] = {}
    for row in reader:
        if not (row.get("unit_id") or "").strip():
            continue
        uid = int(row["unit_id"])
        if uid in mapping:
            raise PlanError(f"unit {uid} assigned twice")
        mapping[uid] = int(row["district"])
    return Plan.from_mapping(instance, mapping, **kw)


def plan_summary(plan: Plan) -> dict:
    """``{district: {population, area, perimeter, ppi}}`` for JSON export."""
    out = {}
    for d, a in enumerate(plan.aggregates):
        out[str(d)] = {
            "population": a.population,
            "area": a.area,
            "perimeter": a.perimeter,
            "ppi": ppi(a.area, a.perimeter) if a.area > 0 and a.perimeter > 0 else math.nan,
        }
    return out
