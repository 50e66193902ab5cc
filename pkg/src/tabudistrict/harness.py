"""Multi-restart experiments: score distributions, rank-sum tests and result files."""

from __future__ import annotations

import csv
import itertools
import json
import math
import os
from dataclasses import asdict, dataclass, field

from .instance import Instance, read_instance
from .objective import compactness, pop_dev, ppi
from .plan import Plan, connected, read_plan_csv
from .search import RunResult, SearchConfig, multi_restart, preset_slug, resolve_preset


@dataclass(frozen=True)
class RunStats:
    n: int
    min: float
    p5: float
    q1: float
    median: float
    q3: float
    p95: float
    max: float
    iqr: float
    stddev: float
    mean: float
    mean_time_per_run: float | None = None

    def as_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        if not timing:
            d.pop("mean_time_per_run")
        return d


def nearest_rank(ordered, q: float):
    """The ``ceil(q*n)``-th smallest value (first one for ``q == 0``)."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("quantile must lie in [0, 1]")
    k = max(1, math.ceil(q * len(ordered) - 1e-12))
    return ordered[k - 1]


def summarize(scores, times=None) -> RunStats:
    if len(scores) == 0:
        raise ValueError("cannot summarize an empty score list")
    xs = sorted(scores)
    n = len(xs)
    mean = math.fsum(xs) / n
    var = math.fsum((x - mean) ** 2 for x in xs) / (n - 1) if n > 1 else 0.0
    q1, q3 = nearest_rank(xs, 0.25), nearest_rank(xs, 0.75)
    return RunStats(
        n=n,
        min=xs[0],
        p5=nearest_rank(xs, 0.05),
        q1=q1,
        median=nearest_rank(xs, 0.5),
        q3=q3,
        p95=nearest_rank(xs, 0.95),
        max=xs[-1],
        iqr=q3 - q1,
        stddev=math.sqrt(var),
        mean=mean,
        mean_time_per_run=(math.fsum(times) / len(times)) if times else None,
    )


@dataclass(frozen=True)
class RankSumResult:
    u: float
    p_value: float
    method: str


def midranks(values) -> list[float]:
    """1-based ranks with ties sharing their average rank."""
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


EXACT_LIMIT = 8


def rank_sum_test(a, b) -> RankSumResult:
    """Two-sided Mann-Whitney test; ``u`` counts pairs with ``a`` above ``b`` (ties count half).

    Exact enumeration of rank assignments when both samples have at most
    eight values, otherwise the tie-corrected normal approximation with
    continuity correction.
    """
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be non-empty")
    ranks = midranks(list(a) + list(b))
    r1 = math.fsum(ranks[:n1])
    u = r1 - n1 * (n1 + 1) / 2.0
    mu = n1 * n2 / 2.0
    if n1 <= EXACT_LIMIT and n2 <= EXACT_LIMIT:
        obs = abs(u - mu) - 1e-9
        hits = total = 0
        offset = n1 * (n1 + 1) / 2.0
        for combo in itertools.combinations(ranks, n1):
            total += 1
            if abs(math.fsum(combo) - offset - mu) >= obs:
                hits += 1
        return RankSumResult(u, min(1.0, hits / total), "exact")
    n = n1 + n2
    counts: dict[float, int] = {}
    for r in ranks:
        counts[r] = counts.get(r, 0) + 1
    tie = sum(t**3 - t for t in counts.values())
    var = n1 * n2 / 12.0 * ((n + 1) - tie / (n * (n - 1)))
    if var <= 0:
        return RankSumResult(u, 1.0, "normal")
    z = max(0.0, abs(u - mu) - 0.5) / math.sqrt(var)
    return RankSumResult(u, min(1.0, math.erfc(z / math.sqrt(2.0))), "normal")


@dataclass
class ExperimentConfig:
    instance_path: str | None
    presets: list[str]
    restarts: int
    r: int
    seed: int = 0
    weight_popdev: float = 1.0
    weight_compactness: float = 0.0
    out_dir: str | None = None
    parallelism: int = 1
    search_options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if not self.presets:
            raise ValueError("at least one preset is required")
        for p in self.presets:
            resolve_preset(p)

    def search_config(self, preset: str) -> SearchConfig:
        return SearchConfig.from_preset(
            preset, self.r, seed=self.seed, weight_popdev=self.weight_popdev,
            weight_compactness=self.weight_compactness, **self.search_options,
        )


@dataclass
class ExperimentResult:
    stats: dict
    tests: dict
    runs: dict

    def scores(self, preset: str) -> list[float]:
        return [r.value.combined for r in self.runs[preset]]


def _num(x) -> str:
    if isinstance(x, float) and x.is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(x) if isinstance(x, float) else str(x)


def write_scores(runs: list[RunResult], stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["restart", "seed", "score", "popdev", "compactness", "iterations"])
    for i, run in enumerate(runs):
        v = run.value
        w.writerow([i, run.seed, _num(v.combined), v.popdev, _num(v.compactness), run.iterations])


def write_times(runs: list[RunResult], stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["restart", "seconds"])
    for i, run in enumerate(runs):
        w.writerow([i, f"{run.elapsed:.6f}"])


def run_experiment(config: ExperimentConfig, instance: Instance | None = None) -> ExperimentResult:
    """Run every preset from the same derived seeds (paired restarts) and export the results.

    Files under ``out_dir``: ``scores_<preset>.csv`` (deterministic),
    ``times_<preset>.csv`` (wall clock), ``summary.json`` (deterministic),
    ``timing.json`` and ``pairwise_tests.json``.
    """
    if instance is None:
        instance = read_instance(config.instance_path)
    runs: dict[str, list[RunResult]] = {}
    stats: dict[str, RunStats] = {}
    for preset in config.presets:
        res = multi_restart(instance, config.search_config(preset), config.restarts,
                            config.parallelism)
        runs[preset] = res
        stats[preset] = summarize([r.value.combined for r in res], [r.elapsed for r in res])
    tests = {}
    for p, q in itertools.combinations(config.presets, 2):
        t = rank_sum_test([r.value.combined for r in runs[p]], [r.value.combined for r in runs[q]])
        tests[f"{p} vs {q}"] = {"a": p, "b": q, "u": t.u, "p_value": t.p_value, "method": t.method}
    result = ExperimentResult(stats, tests, runs)
    if config.out_dir:
        export_experiment(config, instance, result)
    return result


def export_experiment(config: ExperimentConfig, instance: Instance, result: ExperimentResult) -> None:
    out = config.out_dir
    os.makedirs(out, exist_ok=True)
    for preset, res in result.runs.items():
        slug = preset_slug(preset)
        with open(os.path.join(out, f"scores_{slug}.csv"), "w", encoding="utf-8", newline="") as fh:
            write_scores(res, fh)
        with open(os.path.join(out, f"times_{slug}.csv"), "w", encoding="utf-8", newline="") as fh:
            write_times(res, fh)
    summary = {
        "instance": os.path.basename(config.instance_path) if config.instance_path else None,
        "units": instance.n,
        "districts": config.r,
        "restarts": config.restarts,
        "seed": config.seed,
        "weights": {"popdev": config.weight_popdev, "compactness": config.weight_compactness},
        "methods": {p: s.as_dict(timing=False) for p, s in result.stats.items()},
    }
    with open(os.path.join(out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out, "timing.json"), "w", encoding="utf-8") as fh:
        json.dump({p: s.mean_time_per_run for p, s in result.stats.items()}, fh, indent=2)
        fh.write("\n")
    with open(os.path.join(out, "pairwise_tests.json"), "w", encoding="utf-8") as fh:
        json.dump(result.tests, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class PlanReport:
    districts: int
    contiguous: dict
    populations: dict
    ppi: dict
    popdev: int
    compactness: float

    @property
    def ok(self) -> bool:
        return all(self.contiguous.values())

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "districts": self.districts,
            "popdev": self.popdev,
            "compactness": self.compactness,
            "contiguous": self.contiguous,
            "populations": self.populations,
            "ppi": self.ppi,
        }


def validate_plan(instance: Instance, plan) -> PlanReport:
    """Full metric report for ``plan`` (a :class:`Plan`, a path or a readable CSV stream)."""
    if isinstance(plan, (str, os.PathLike)):
        with open(plan, "rb") as fh:
            plan = read_plan_csv(instance, fh)
    elif not isinstance(plan, Plan):
        plan = read_plan_csv(instance, plan)
    contiguous = {str(d): connected(instance, plan.members[d]) for d in range(plan.r)}
    aggs = plan.aggregates
    ppis = {}
    for d, a in enumerate(aggs):
        ppis[str(d)] = ppi(a.area, a.perimeter) if a.area > 0 and a.perimeter > 0 else None
    total = instance.total_population
    comp = compactness(aggs, total) if all(v is not None for v in ppis.values()) else math.nan
    return PlanReport(
        districts=plan.r,
        contiguous=contiguous,
        populations={str(d): a.population for d, a in enumerate(aggs)},
        ppi=ppis,
        popdev=pop_dev([a.population for a in aggs], plan.r, total),
        compactness=comp,
    )


__all__ = [
    "ExperimentConfig", "ExperimentResult", "PlanReport", "RankSumResult",
    "RunStats", "midranks", "nearest_rank", "rank_sum_test", "run_experiment", "summarize",
    "validate_plan",
]
