"""Seed-growing initialization, the tabu engine and its greedy / Kernighan-Lin presets."""

from __future__ import annotations

import math
import random
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .instance import Instance
from .moves import CandidatePool, Move, best_switch, enumerate_candidates
from .objective import ObjectiveConfig, ObjectiveValue, Scorer, evaluate
from .plan import Plan, apply_move, apply_switch

METHODS = ("greedy", "kl", "tabu")

PRESETS = {
    "greedy": ("greedy", False),
    "kl": ("kl", False),
    "tabu": ("tabu", False),
    "greedy*": ("greedy", True),
    "kl*": ("kl", True),
    "tabu*": ("tabu", True),
}
_ALIASES = {"k-l": "kl", "cm-tabu": "tabu*"}


def resolve_preset(name: str) -> tuple[str, bool]:
    """Map ``"tabu*"``, ``"tabu-cm"``, ``"K-L*"`` etc. to ``(method, composite_enabled)``."""
    key = name.strip().lower()
    for suffix in ("-cm", "_cm", "+cm", "-composite"):
        if key.endswith(suffix):
            key = key[: -len(suffix)] + "*"
    star = key.endswith("*")
    base = _ALIASES.get(key.rstrip("*"), key.rstrip("*"))
    if base.endswith("*"):
        return PRESETS[base]
    if base not in METHODS:
        raise ValueError(f"unknown method preset {name!r}")
    return base, star


def preset_name(method: str, composite: bool) -> str:
    return method + ("*" if composite else "")


def preset_slug(name: str) -> str:
    """File-system friendly preset name (``tabu*`` -> ``tabu-cm``)."""
    method, composite = resolve_preset(name)
    return method + ("-cm" if composite else "")


@dataclass(frozen=True)
class SearchConfig:
    r: int
    method: str = "tabu"
    composite_enabled: bool = True
    tabu_factor: float = 0.08
    nim_factor: float = 3.0
    weight_popdev: float = 1.0
    weight_compactness: float = 0.0
    seed: int = 0
    window: int = 3
    aspiration: bool = False
    size_by: str = "units"
    contact: str = "anchor"
    debug: bool = False
    max_iterations: int | None = None
    record_trace: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.r < 1:
            raise ValueError("r must be at least 1")
        if self.window < 1:
            raise ValueError("window must be at least 1")

    @classmethod
    def from_preset(cls, name: str, r: int, **kw) -> "SearchConfig":
        method, composite = resolve_preset(name)
        return cls(r=r, method=method, composite_enabled=composite, **kw)

    @property
    def preset(self) -> str:
        return preset_name(self.method, self.composite_enabled)

    def tabu_length(self, n: int) -> float:
        if self.method == "greedy":
            return 0
        if self.method == "kl":
            return math.inf
        return int(round(self.tabu_factor * n))

    def max_nim(self, n: int) -> float:
        if self.method == "greedy":
            return 0
        if self.method == "kl":
            return math.inf
        return int(round(self.nim_factor * n))

    def objective(self, instance: Instance) -> ObjectiveConfig:
        return ObjectiveConfig(self.weight_popdev, self.weight_compactness, self.r,
                               instance.total_population)


def init_plan(instance: Instance, r: int, seed=0, debug: bool = False) -> Plan:
    """Random seed-growing: ``r`` distinct seeds, then round-robin accretion of a random unassigned neighbor."""
    n = instance.n
    if not 1 <= r <= n:
        raise ValueError(f"need 1 <= r <= n, got r={r}, n={n}")
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    assignment = [-1] * n
    frontier: list[set] = []
    for d, s in enumerate(rng.sample(range(n), r)):
        assignment[s] = d
        frontier.append(set())
    for i, d in enumerate(assignment):
        if d >= 0:
            frontier[d].update(instance.neighbors[i])
    remaining = n - r
    while remaining:
        grew = False
        for d in range(r):
            options = [j for j in frontier[d] if assignment[j] < 0]
            if not options:
                frontier[d].clear()
                continue
            options.sort()
            pick = options[rng.randrange(len(options))]
            assignment[pick] = d
            frontier[d].intersection_update(options)
            frontier[d].discard(pick)
            frontier[d].update(j for j in instance.neighbors[pick] if assignment[j] < 0)
            remaining -= 1
            grew = True
            if not remaining:
                break
        if not grew:
            raise ValueError("instance graph is disconnected; seed growing cannot cover it")
    return Plan(instance, assignment, r, debug=debug)


def derive_seed(seed: int, index: int) -> int:
    """Independent 64-bit seed for restart ``index``."""
    ss = np.random.SeedSequence([int(seed) % (1 << 64), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class TabuState:
    k: float
    max_nim: float
    rng: random.Random
    best_assignment: list
    best_value: ObjectiveValue
    current_value: ObjectiveValue
    tabu_list: deque = field(default_factory=deque)
    tabu_counts: dict = field(default_factory=dict)
    locked: set = field(default_factory=set)
    non_improving_count: int = 0
    iteration: int = 0

    def is_tabu(self, key) -> bool:
        return key in self.tabu_counts


@dataclass
class Step:
    kind: str
    moves: tuple
    delta: float
    value: ObjectiveValue
    new_best: bool


@dataclass
class RunResult:
    assignment: tuple
    value: ObjectiveValue
    initial_value: ObjectiveValue
    iterations: int
    elapsed: float
    seed: int
    stop_reason: str
    trace: list | None = None

    def plan(self, instance: Instance) -> Plan:
        return Plan(instance, list(self.assignment), max(self.assignment) + 1)


class TabuSearch:
    """One trajectory: greedy, K-L or tabu depending on ``config.method``."""

    def __init__(self, instance: Instance, config: SearchConfig, plan: Plan | None = None):
        self.instance = instance
        self.config = config
        rng = random.Random(config.seed)
        if plan is None:
            plan = init_plan(instance, config.r, rng, debug=config.debug)
        elif plan.r != config.r:
            raise ValueError("plan district count differs from config.r")
        self.plan = plan
        self.objective = config.objective(instance)
        self.scorer = Scorer(self.objective)
        self.pool: CandidatePool = enumerate_candidates(
            instance, plan, composite=config.composite_enabled, contact=config.contact,
            size_by=config.size_by,
        )
        value = evaluate(plan.aggregates, self.objective)
        self.initial_value = value
        self.state = TabuState(
            k=config.tabu_length(instance.n),
            max_nim=config.max_nim(instance.n),
            rng=rng,
            best_assignment=list(plan.assignment),
            best_value=value,
            current_value=value,
        )
        self._scored: dict[tuple[int, int], list] = {}
        self._switch: dict[tuple[int, int], tuple] = {}
        self._version: dict[tuple[int, int], int] = {}
        self.stop_reason = ""
        self.trace: list | None = [] if config.record_trace else None

    # -- candidate bookkeeping -------------------------------------------------

    def _bump(self, a: int, b: int) -> None:
        key = (a, b) if a < b else (b, a)
        self._version[key] = self._version.get(key, 0) + 1

    def _scored_pair(self, pair):
        lst = self._scored.get(pair)
        if lst is None:
            moves = self.pool.pairs.get(pair, ())
            a, b = self.plan.aggregates[pair[0]], self.plan.aggregates[pair[1]]
            sc = self.scorer
            if not sc.w_comp:
                r, tot, w = sc.r, sc.total, sc.w_pop
                pa, pb = a.population, b.population
                base = abs(r * pa - tot) // r + abs(r * pb - tot) // r
                lst = [
                    (w * (base - abs(r * (pa - m.pop) - tot) // r - abs(r * (pb + m.pop) - tot) // r), m)
                    for m in moves
                ]
            else:
                lst = [(sc.move_delta(m, a, b), m) for m in moves]
            lst.sort(key=lambda x: (-x[0], x[1].order))
            self._scored[pair] = lst
        return lst

    def _allowed(self, m: Move) -> bool:
        st = self.state
        if m.key in st.tabu_counts:
            return False
        if st.locked and not st.locked.isdisjoint(m.members):
            return False
        return True

    def _switch_pair(self, a: int, b: int):
        version = self._version.get((a, b), 0)
        cached = self._switch.get((a, b))
        if cached is not None and cached[0] == version:
            return cached[1]
        ab = self.pool.pairs.get((a, b))
        ba = self.pool.pairs.get((b, a))
        res = None
        if ab and ba:
            res = best_switch(
                ab, ba, self.scorer, self.plan.aggregates[a], self.plan.aggregates[b],
                window=self.config.window, allowed=self._allowed,
                instance=self.instance,
            )
        self._switch[(a, b)] = (version, res)
        return res

    def candidates(self):
        """Best non-tabu candidates: ``(delta, [("move", m) | ("switch", (m1, m2)), ...])``."""
        st = self.state
        best = -math.inf
        ties: list = []
        gap = st.current_value.combined - st.best_value.combined
        aspire = self.config.aspiration
        r = self.plan.r
        for a in range(r):
            for b in range(r):
                if a == b or (a, b) not in self.pool.pairs:
                    continue
                for delta, m in self._scored_pair((a, b)):
                    if delta < best:
                        break
                    if not self._allowed(m):
                        if not (aspire and delta > gap and m.key in st.tabu_counts
                                and (not st.locked or st.locked.isdisjoint(m.members))):
                            continue
                    if delta > best:
                        best = delta
                        ties = [("move", m)]
                    else:
                        ties.append(("move", m))
        for a in range(r):
            for b in range(a + 1, r):
                res = self._switch_pair(a, b)
                if res is None:
                    continue
                delta = res[0]
                if delta > best:
                    best = delta
                    ties = [("switch", (res[1], res[2]))]
                elif delta == best:
                    ties.append(("switch", (res[1], res[2])))
        return best, ties

    # -- one iteration -----------------------------------------------------------

    def _improves(self, value: float) -> bool:
        best = self.state.best_value.combined
        return value < best - 1e-9 * max(1.0, abs(best))

    def step(self) -> Step | None:
        """Select, apply and record the best candidate; ``None`` signals the stop."""
        st = self.state
        if st.best_value.combined <= 0:
            self.stop_reason = "objective lower bound reached"
            return None
        delta, ties = self.candidates()
        if not ties:
            self.stop_reason = "no feasible non-tabu candidate"
            return None
        if not self._improves(st.current_value.combined - delta) and \
                st.non_improving_count + 1 > st.max_nim:
            self.stop_reason = "non-improving limit reached"
            return None
        kind, payload = ties[st.rng.randrange(len(ties))] if len(ties) > 1 else ties[0]
        if kind == "move":
            moves = (payload,)
            apply_move(self.plan, payload)
        else:
            moves = payload
            apply_switch(self.plan, *payload)
        a, b = moves[0].source, moves[0].dest
        touched = self.pool.refresh(self.plan, (a, b))
        for pair in touched:
            self._scored.pop(pair, None)
            self._bump(*pair)

        if st.k > 0:
            keys = []
            for m in moves:
                keys.append(m.key)
                keys.append(m.reverse_key())
            st.tabu_list.append(keys)
            for key in keys:
                st.tabu_counts[key] = st.tabu_counts.get(key, 0) + 1
            while len(st.tabu_list) > st.k:
                for key in st.tabu_list.popleft():
                    left = st.tabu_counts[key] - 1
                    if left:
                        st.tabu_counts[key] = left
                    else:
                        del st.tabu_counts[key]
                    self._bump(key[1], key[2])
        if self.config.method == "kl":
            for m in moves:
                st.locked.update(m.members)

        value = evaluate(self.plan.aggregates, self.objective)
        new_best = self._improves(value.combined)
        st.current_value = value
        st.iteration += 1
        if new_best:
            st.best_value = value
            st.best_assignment = list(self.plan.assignment)
            st.non_improving_count = 0
        else:
            st.non_improving_count += 1
        record = Step(kind, moves, delta, value, new_best)
        if self.trace is not None:
            self.trace.append(record)
        return record

    def run(self) -> RunResult:
        start = time.perf_counter()
        limit = self.config.max_iterations
        while True:
            if limit is not None and self.state.iteration >= limit:
                self.stop_reason = "iteration limit"
                break
            if self.step() is None:
                break
        return self.result(time.perf_counter() - start)

    def result(self, elapsed: float = 0.0) -> RunResult:
        st = self.state
        return RunResult(
            assignment=tuple(st.best_assignment),
            value=st.best_value,
            initial_value=self.initial_value,
            iterations=st.iteration,
            elapsed=elapsed,
            seed=self.config.seed,
            stop_reason=self.stop_reason,
            trace=self.trace,
        )


def search_step(search: TabuSearch) -> Step | None:
    return search.step()


def run(instance: Instance, config: SearchConfig) -> RunResult:
    """Initialize from ``config.seed``, iterate to the stop rule, return the best plan seen."""
    start = time.perf_counter()
    search = TabuSearch(instance, config)
    result = search.run()
    result.elapsed = time.perf_counter() - start
    return result


def _run_indexed(args):
    instance, config = args
    return run(instance, config)


def multi_restart(instance: Instance, config: SearchConfig, restarts: int,
                  parallelism: int = 1) -> list[RunResult]:
    """``restarts`` independent runs; restart ``i`` uses ``derive_seed(config.seed, i)``."""
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    configs = [replace(config, seed=derive_seed(config.seed, i)) for i in range(restarts)]
    if parallelism <= 1:
        return [run(instance, c) for c in configs]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(_run_indexed, [(instance, c) for c in configs], chunksize=4))
