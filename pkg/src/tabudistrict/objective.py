"""Population deviation, Polsby-Popper compactness and O(1) move scoring."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class ObjectiveConfig:
    weight_popdev: float = 1.0
    weight_compactness: float = 0.0
    r: int = 1
    total_population: int = 0

    def __post_init__(self):
        if self.weight_popdev < 0 or self.weight_compactness < 0:
            raise ValueError("objective weights must be non-negative")
        if self.weight_popdev == 0 and self.weight_compactness == 0:
            raise ValueError("at least one objective weight must be positive")
        if self.r < 1:
            raise ValueError("r must be at least 1")


@dataclass(frozen=True)
class ObjectiveValue:
    popdev: int
    compactness: float
    combined: float

    def as_dict(self) -> dict:
        return {"popdev": self.popdev, "compactness": self.compactness, "combined": self.combined}


def district_deviation(population: int, r: int, total: int) -> int:
    # floor(|p - total/r|) == |r*p - total| // r, exact in integers
    return abs(r * population - total) // r


def pop_dev(district_populations: Sequence[int], r: int, total: int) -> int:
    """Sum over districts of the floored absolute deviation from ``total / r``."""
    if r <= 0:
        raise ValueError("r must be positive")
    return sum(abs(r * p - total) // r for p in district_populations)


def ppi(area: float, perimeter: float) -> float:
    if area <= 0 or perimeter <= 0:
        raise ValueError(f"Polsby-Popper needs positive area and perimeter, got {area}, {perimeter}")
    return FOUR_PI * area / (perimeter * perimeter)


def compactness(district_aggregates, total_population: int) -> float:
    """Sum of ``Pop/1000 * (1 - PPI_i)`` over districts."""
    scale = total_population / 1000.0
    return sum(scale * (1.0 - ppi(a.area, a.perimeter)) for a in district_aggregates)


def evaluate(aggregates, config: ObjectiveConfig) -> ObjectiveValue:
    pops = [a.population for a in aggregates]
    dev = pop_dev(pops, config.r, config.total_population)
    comp = compactness(aggregates, config.total_population) if config.weight_compactness > 0 else 0.0
    return ObjectiveValue(dev, comp, config.weight_popdev * dev + config.weight_compactness * comp)


class Scorer:
    """Per-district objective terms and move/switch deltas from aggregates only.

    Deltas follow ``f(current) - f(after)``: positive means the objective drops.
    """

    __slots__ = ("r", "total", "w_pop", "w_comp", "scale")

    def __init__(self, config: ObjectiveConfig):
        self.r = config.r
        self.total = config.total_population
        self.w_pop = config.weight_popdev
        self.w_comp = config.weight_compactness
        self.scale = config.total_population / 1000.0

    def term(self, population: int, area: float, perimeter: float) -> float:
        t = self.w_pop * (abs(self.r * population - self.total) // self.r)
        if self.w_comp:
            t += self.w_comp * self.scale * (1.0 - FOUR_PI * area / (perimeter * perimeter))
        return t

    def popdev_delta(self, pa: int, pb: int, transfer: int) -> int:
        r, tot = self.r, self.total
        before = abs(r * pa - tot) // r + abs(r * pb - tot) // r
        after = abs(r * (pa - transfer) - tot) // r + abs(r * (pb + transfer) - tot) // r
        return before - after

    def move_delta(self, move, src, dst) -> float:
        if not self.w_comp:
            return self.w_pop * self.popdev_delta(src.population, dst.population, move.pop)
        before = self.term(src.population, src.area, src.perimeter) + \
            self.term(dst.population, dst.area, dst.perimeter)
        after = self.term(
            src.population - move.pop, src.area - move.area,
            src.perimeter - move.perim + 2.0 * move.shared_src,
        ) + self.term(
            dst.population + move.pop, dst.area + move.area,
            dst.perimeter + move.perim - 2.0 * move.shared_dst,
        )
        return before - after

    def switch_delta(self, m1, m2, a, b, cross: float = 0.0) -> float:
        """``m1`` moves A to B and ``m2`` moves B to A; ``cross`` is their shared boundary."""
        net = m1.pop - m2.pop
        if not self.w_comp:
            return self.w_pop * self.popdev_delta(a.population, b.population, net)
        before = self.term(a.population, a.area, a.perimeter) + \
            self.term(b.population, b.area, b.perimeter)
        pa = a.perimeter - m1.perim + 2.0 * m1.shared_src + m2.perim - 2.0 * (m2.shared_dst - cross)
        pb = b.perimeter + m1.perim - 2.0 * m1.shared_dst - m2.perim + 2.0 * (m2.shared_src + cross)
        after = self.term(a.population - net, a.area - m1.area + m2.area, pa) + \
            self.term(b.population + net, b.area + m1.area - m2.area, pb)
        return before - after


def score_move(move, source_agg, dest_agg, config: ObjectiveConfig) -> float:
    """Objective drop from applying ``move``, computed from aggregates only."""
    return Scorer(config).move_delta(move, source_agg, dest_agg)


def score_switch(m1, m2, source_agg, dest_agg, config: ObjectiveConfig, instance=None,
                 cross: float | None = None) -> float:
    """Objective drop from exchanging ``m1`` and ``m2``.

    The shared boundary between the two member sets only matters for
    compactness; pass ``cross`` or an ``instance`` to compute it.
    """
    if cross is None:
        cross = 0.0
        if config.weight_compactness and instance is not None:
            from .plan import switch_cross_shared

            cross = switch_cross_shared(instance, m1, m2)
    return Scorer(config).switch_delta(m1, m2, source_agg, dest_agg, cross)
