"""Problem input: spatial units, shared-boundary adjacency, ingestion and grids."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from collections import deque
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np


class InstanceError(ValueError):
    """Raised when input data cannot form a valid instance."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class Unit:
    id: int
    population: int
    area: float
    perimeter: float


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    shared_length: float


class Instance:
    """Immutable unit set with a symmetric, weighted adjacency.

    Units are stored sorted by id and addressed internally by their position
    (``index``), so "lowest index" and "lowest id" coincide. Construction does
    not validate; use :func:`validate_instance` or :func:`make_instance`.
    """

    def __init__(self, units: Iterable[Unit], edges: Iterable[Edge]):
        units = tuple(sorted(units, key=lambda u: u.id))
        self.units = units
        self.ids = tuple(u.id for u in units)
        self.index = {uid: i for i, uid in enumerate(self.ids)}
        self.population = tuple(int(u.population) for u in units)
        self.area = tuple(float(u.area) for u in units)
        self.perimeter = tuple(float(u.perimeter) for u in units)
        self.total_population = sum(self.population)
        self.n = len(units)

        merged: dict[tuple[int, int], Edge] = {}
        raw = list(edges)
        for e in raw:
            key = (min(e.u, e.v), max(e.u, e.v))
            if key not in merged:
                merged[key] = Edge(key[0], key[1], float(e.shared_length))
        self.edges = tuple(merged[k] for k in sorted(merged))
        self._raw_edges = tuple(raw)

        nbrs: list[dict[int, float]] = [dict() for _ in range(self.n)]
        for e in self.edges:
            i = self.index.get(e.u)
            j = self.index.get(e.v)
            if i is None or j is None or i == j:
                continue
            nbrs[i][j] = e.shared_length
            nbrs[j][i] = e.shared_length
        self.neighbors = tuple(tuple(sorted(d)) for d in nbrs)
        self.weights = tuple(tuple(d[j] for j in sorted(d)) for d in nbrs)
        self._shared = nbrs

    def shared(self, i: int, j: int) -> float:
        """Shared boundary length between unit indices ``i`` and ``j`` (0 if not adjacent)."""
        return self._shared[i].get(j, 0.0)

    def adjacency(self) -> dict[int, dict[int, float]]:
        """Neighbor index keyed by unit id."""
        return {
            self.ids[i]: {self.ids[j]: w for j, w in self._shared[i].items()}
            for i in range(self.n)
        }

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return self.units == other.units and self.edges == other.edges

    def __hash__(self):
        return hash((self.units, self.edges))

    def __repr__(self):
        return (
            f"Instance(n={self.n}, edges={len(self.edges)}, "
            f"total_population={self.total_population})"
        )


def count_components(instance: Instance) -> int:
    seen = [False] * instance.n
    count = 0
    for start in range(instance.n):
        if seen[start]:
            continue
        count += 1
        seen[start] = True
        queue = deque([start])
        while queue:
            i = queue.popleft()
            for j in instance.neighbors[i]:
                if not seen[j]:
                    seen[j] = True
                    queue.append(j)
    return count


def validate_instance(instance: Instance) -> list[str]:
    """Return every violated instance invariant; an empty list means valid."""
    out = []
    seen_ids = set()
    for u in instance.units:
        if u.id in seen_ids:
            out.append(f"duplicate unit id: {u.id}")
        seen_ids.add(u.id)
        if u.population < 0:
            out.append(f"negative population: unit {u.id} ({u.population})")
        if u.area < 0:
            out.append(f"negative area: unit {u.id} ({u.area})")
        if u.perimeter < 0:
            out.append(f"negative perimeter: unit {u.id} ({u.perimeter})")

    lengths: dict[tuple[int, int], float] = {}
    for e in instance._raw_edges:
        if e.u == e.v:
            out.append(f"self-loop edge on unit {e.u}")
            continue
        for end in (e.u, e.v):
            if end not in instance.index:
                out.append(f"dangling edge endpoint: {end} in edge ({e.u}, {e.v})")
        if e.shared_length < 0:
            out.append(f"negative shared_length on edge ({e.u}, {e.v})")
        key = (min(e.u, e.v), max(e.u, e.v))
        prev = lengths.get(key)
        if prev is not None and prev != float(e.shared_length):
            out.append(
                f"conflicting duplicate edge {key}: {prev} vs {float(e.shared_length)}"
            )
        lengths.setdefault(key, float(e.shared_length))
        if e.u in instance.index and e.v in instance.index:
            limit = min(
                instance.perimeter[instance.index[e.u]],
                instance.perimeter[instance.index[e.v]],
            )
            if e.shared_length > limit * (1 + 1e-9) + 1e-12:
                out.append(f"shared_length exceeds perimeter on edge ({e.u}, {e.v})")

    if instance.n == 0:
        out.append("empty instance")
    else:
        ncomp = count_components(instance)
        if ncomp > 1:
            out.append(f"disconnected: {ncomp} components")
    return out


def make_instance(units: Iterable[Unit], edges: Iterable[Edge]) -> Instance:
    """Build an instance and raise :class:`InstanceError` on any violation."""
    instance = Instance(units, edges)
    problems = validate_instance(instance)
    if problems:
        raise InstanceError(problems)
    return instance


def _text(source) -> str:
    data = source.read() if hasattr(source, "read") else source
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8-sig")
    return data


def _as_int(value, what):
    if isinstance(value, bool):
        raise InstanceError([f"bad {what}: {value!r}"])
    if isinstance(value, int):
        return value
    try:
        f = float(value)
    except (TypeError, ValueError):
        raise InstanceError([f"bad {what}: {value!r}"]) from None
    if not f.is_integer():
        raise InstanceError([f"bad {what}: {value!r} is not an integer"])
    return int(f)


def _as_float(value, what):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise InstanceError([f"bad {what}: {value!r}"]) from None


def _unit(rec) -> Unit:
    try:
        return Unit(
            id=_as_int(rec["id"], "unit id"),
            population=_as_int(rec["population"], "population"),
            area=_as_float(rec["area"], "area"),
            perimeter=_as_float(rec["perimeter"], "perimeter"),
        )
    except KeyError as exc:
        raise InstanceError([f"unit record missing field {exc.args[0]!r}"]) from None


def _edge(rec) -> Edge:
    try:
        return Edge(
            u=_as_int(rec["u"], "edge endpoint"),
            v=_as_int(rec["v"], "edge endpoint"),
            shared_length=_as_float(rec["shared_length"], "shared_length"),
        )
    except KeyError as exc:
        raise InstanceError([f"edge record missing field {exc.args[0]!r}"]) from None


def _csv_records(text: str, required: Sequence[str]) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text, newline=""))
    if reader.fieldnames is None:
        raise InstanceError(["empty CSV input"])
    header = [h.strip() for h in reader.fieldnames]
    missing = [c for c in required if c not in header]
    if missing:
        raise InstanceError([f"CSV header missing columns: {', '.join(missing)}"])
    reader.fieldnames = header
    return [row for row in reader if any((v or "").strip() for v in row.values())]


def load_instance(source, format: str = "json") -> Instance:
    """Parse and validate an instance.

    Parameters
    ----------
    source : readable stream, or a ``(units, edges)`` pair of streams for csv-pair
    format : ``"json"`` or ``"csv-pair"``

    Raises
    ------
    InstanceError
        On parse failure or any invariant violation (duplicate ids, dangling
        endpoints, conflicting duplicate edges, disconnected graph, ...).
    """
    if format == "json":
        try:
            doc = json.loads(_text(source))
        except json.JSONDecodeError as exc:
            raise InstanceError([f"JSON parse failure: {exc}"]) from None
        if not isinstance(doc, dict) or "units" not in doc or "edges" not in doc:
            raise InstanceError(["JSON instance needs top-level 'units' and 'edges'"])
        units = [_unit(r) for r in doc["units"]]
        edges = [_edge(r) for r in doc["edges"]]
    elif format in ("csv-pair", "csv"):
        units_src, edges_src = source
        units = [
            _unit(r) for r in _csv_records(_text(units_src), ("id", "population", "area", "perimeter"))
        ]
        edges = [_edge(r) for r in _csv_records(_text(edges_src), ("u", "v", "shared_length"))]
    else:
        raise ValueError(f"unknown instance format {format!r}")
    return make_instance(units, edges)


def dump_instance(instance: Instance, target, format: str = "json") -> None:
    """Write ``instance``; for csv-pair ``target`` is a ``(units, edges)`` pair of text streams."""
    if format == "json":
        doc = {
            "units": [
                {"id": u.id, "population": u.population, "area": u.area, "perimeter": u.perimeter}
                for u in instance.units
            ],
            "edges": [{"u": e.u, "v": e.v, "shared_length": e.shared_length} for e in instance.edges],
        }
        json.dump(doc, target)
    elif format in ("csv-pair", "csv"):
        units_out, edges_out = target
        w = csv.writer(units_out, lineterminator="\n")
        w.writerow(["id", "population", "area", "perimeter"])
        for u in instance.units:
            w.writerow([u.id, u.population, repr(u.area), repr(u.perimeter)])
        w = csv.writer(edges_out, lineterminator="\n")
        w.writerow(["u", "v", "shared_length"])
        for e in instance.edges:
            w.writerow([e.u, e.v, repr(e.shared_length)])
    else:
        raise ValueError(f"unknown instance format {format!r}")


def read_instance(path: str | os.PathLike) -> Instance:
    """Load from a ``.json`` file, a directory holding ``units.csv``/``edges.csv``, or ``units.csv``."""
    path = os.fspath(path)
    if os.path.isdir(path):
        units_path = os.path.join(path, "units.csv")
        edges_path = os.path.join(path, "edges.csv")
    elif path.endswith(".csv"):
        units_path = path
        edges_path = os.path.join(os.path.dirname(path), "edges.csv")
    else:
        with open(path, "rb") as fh:
            return load_instance(fh, "json")
    with open(units_path, "rb") as fu, open(edges_path, "rb") as fe:
        return load_instance((fu, fe), "csv-pair")


def write_instance(instance: Instance, path: str | os.PathLike, format: str = "json") -> None:
    path = os.fspath(path)
    if format == "json":
        with open(path, "w", encoding="utf-8") as fh:
            dump_instance(instance, fh, "json")
        return
    os.makedirs(path, exist_ok=True)
    with open(os.path.join(path, "units.csv"), "w", encoding="utf-8", newline="") as fu, open(
        os.path.join(path, "edges.csv"), "w", encoding="utf-8", newline=""
    ) as fe:
        dump_instance(instance, (fu, fe), "csv-pair")


def parse_population_model(model) -> tuple:
    """Accept ``("uniform", c)``, ``("lognormal", mu, sigma)`` or strings like ``"lognormal:9.8,1.0"``."""
    if isinstance(model, str):
        name, _, args = model.partition(":")
        values = [float(a) for a in args.split(",") if a.strip()]
        model = (name.strip().lower(), *values)
    name = model[0]
    if name == "uniform":
        if len(model) != 2 or model[1] < 0:
            raise ValueError("uniform population model needs one non-negative constant")
        return ("uniform", int(model[1]))
    if name == "lognormal":
        if len(model) != 3 or model[2] < 0:
            raise ValueError("lognormal population model needs mu and sigma >= 0")
        return ("lognormal", float(model[1]), float(model[2]))
    raise ValueError(f"unknown population model {name!r}")


def generate_grid(rows: int, cols: int, population_model=("uniform", 1), seed: int = 0,
                  target_total: int | None = None) -> Instance:
    """Rook-adjacency grid of unit squares; unit ``r*cols + c`` sits at row ``r``, column ``c``.

    ``target_total`` rescales sampled populations so they sum to roughly that value.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be positive")
    model = parse_population_model(population_model)
    n = rows * cols
    if model[0] == "uniform":
        pops = [model[1]] * n
    else:
        rng = np.random.default_rng(seed)
        raw = rng.lognormal(model[1], model[2], size=n)
        if target_total is not None:
            raw *= target_total / raw.sum()
        pops = [int(p) for p in np.rint(raw)]
    units = [Unit(i, pops[i], 1.0, 4.0) for i in range(n)]
    edges = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append(Edge(i, i + 1, 1.0))
            if r + 1 < rows:
                edges.append(Edge(i, i + cols, 1.0))
    return Instance(units, edges)


def lognormal_params_for_mean(mean: float, sigma: float) -> tuple[float, float]:
    """``(mu, sigma)`` whose lognormal has the requested mean."""
    return (math.log(mean) - sigma * sigma / 2.0, sigma)
