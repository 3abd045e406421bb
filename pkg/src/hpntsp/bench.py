"""Benchmark evaluation: per-instance results, aggregated reports, pairwise tests."""
from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .heuristics import farthest_insertion, nearest_neighbor, random_tour, two_opt
from .model import HPN, greedy_tours
from .train import paired_t_test_one_sided
from .tsp import Instance, Tour

SCHEMA_VERSION = 1
CSV_FIELDS = ("method", "n", "instance_id", "length", "seconds")
HEURISTICS = ("nearest_neighbor", "farthest_insertion", "two_opt", "random")
NEURAL = ("hpn",)
METHODS = HEURISTICS + NEURAL


@dataclass(frozen=True)
class InstanceResult:
    method: str
    n: int
    instance_id: int
    length: float
    seconds: float


@dataclass
class ReportRow:
    method: str
    n: int
    count: int
    mean_length: float
    total_seconds: float
    mean_length_denormalized: float | None = None


@dataclass
class BenchReport:
    rows: list[ReportRow]
    # p_values[a][b]: one-sided paired test that method a is shorter than method b
    p_values: dict[str, dict[str, float]] = field(default_factory=dict)
    scale: float | None = None
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def table(self) -> str:
        head = f"{'method':<28} {'n':>6} {'count':>6} {'Obj.':>10} {'time(s)':>9}"
        if self.scale is not None:
            head += f" {'denormalized':>14}"
        lines = [head]
        for r in self.rows:
            line = f"{r.method:<28} {r.n:>6} {r.count:>6} {r.mean_length:>10.4f} {r.total_seconds:>9.2f}"
            if r.mean_length_denormalized is not None:
                line += f" {r.mean_length_denormalized:>14.1f}"
            lines.append(line)
        return "\n".join(lines)


def parse_methods(spec: str | list[str], two_opt_flag: bool = False) -> list[str]:
    names = spec.split(",") if isinstance(spec, str) else list(spec)
    out = []
    for raw in names:
        name = raw.strip()
        if not name:
            continue
        base = name[:-5] if name.endswith("+2opt") else name
        if base not in METHODS:
            raise ValueError(f"unknown method {base!r}; choose from {', '.join(METHODS)}")
        if two_opt_flag and not name.endswith("+2opt") and base != "two_opt":
            name = f"{base}+2opt"
        if name not in out:
            out.append(name)
    if not out:
        raise ValueError("no methods given")
    return out


def solve_heuristic(method: str, inst: Instance, instance_id: int, seed: int = 0) -> Tour:
    base, refine = (method[:-5], True) if method.endswith("+2opt") else (method, False)
    if base == "nearest_neighbor":
        tour = nearest_neighbor(inst, 0)
    elif base == "farthest_insertion":
        tour = farthest_insertion(inst)
    elif base == "random":
        tour = random_tour(inst, seed + instance_id)
    elif base == "two_opt":
        tour = two_opt(inst, random_tour(inst, seed + instance_id))
    else:
        raise ValueError(f"not a heuristic: {method}")
    return two_opt(inst, tour) if refine and base != "two_opt" else tour


def _heuristic_chunk(args) -> list[InstanceResult]:
    method, items, seed = args
    out = []
    for iid, coords in items:
        inst = Instance(coords)
        t0 = time.perf_counter()
        tour = solve_heuristic(method, inst, iid, seed)
        out.append(InstanceResult(method, inst.n, iid, tour.length, time.perf_counter() - t0))
    return out


def _run_heuristic(method, instances, seed, workers) -> list[InstanceResult]:
    items = [(i, inst.coords) for i, inst in enumerate(instances)]
    if workers <= 1 or len(items) < 2:
        return _heuristic_chunk((method, items, seed))
    chunks = [(method, items[k::workers], seed) for k in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_heuristic_chunk, chunks))
    return sorted((r for part in parts for r in part), key=lambda r: r.instance_id)


def _run_hpn(method, instances, model: HPN) -> list[InstanceResult]:
    refine = method.endswith("+2opt")
    out = []
    # instances of equal size decode as one batch
    by_n: dict[int, list[int]] = {}
    for i, inst in enumerate(instances):
        by_n.setdefault(inst.n, []).append(i)
    for n, ids in by_n.items():
        coords = np.stack([instances[i].coords for i in ids])
        t0 = time.perf_counter()
        tours = greedy_tours(model, coords)
        per = (time.perf_counter() - t0) / len(ids)
        for i, tour in zip(ids, tours):
            t1 = time.perf_counter()
            result = Tour.of(instances[i], tour)
            if refine:
                result = two_opt(instances[i], result)
            out.append(InstanceResult(method, n, i, result.length, per + time.perf_counter() - t1))
    return sorted(out, key=lambda r: r.instance_id)


def evaluate(instances: list[Instance], methods: list[str], model: HPN | None = None,
             seed: int = 0, workers: int = 1) -> list[InstanceResult]:
    results: list[InstanceResult] = []
    for method in methods:
        if method.split("+")[0] in NEURAL:
            if model is None:
                raise ValueError(f"method {method} needs a checkpoint")
            results.extend(_run_hpn(method, instances, model))
        else:
            results.extend(_run_heuristic(method, instances, seed, workers))
    return results


def aggregate(results: list[InstanceResult], scale: float | None = None) -> BenchReport:
    """Build the report purely from per-instance results."""
    by_method: dict[str, list[InstanceResult]] = {}
    for r in results:
        by_method.setdefault(r.method, []).append(r)
    rows = []
    for method, rs in by_method.items():
        lengths = np.array([r.length for r in rs])
        ns = sorted({r.n for r in rs})
        rows.append(ReportRow(method, ns[0] if len(ns) == 1 else -1, len(rs), float(lengths.mean()),
                              float(sum(r.seconds for r in rs)),
                              None if scale is None else float(lengths.mean() * scale)))
    p_values: dict[str, dict[str, float]] = {}
    for a, ra in by_method.items():
        for b, rb in by_method.items():
            if a == b or len(ra) < 2 or [r.instance_id for r in ra] != [r.instance_id for r in rb]:
                continue
            p_values.setdefault(a, {})[b] = paired_t_test_one_sided([r.length for r in ra],
                                                                    [r.length for r in rb])
    return BenchReport(rows, p_values, scale)


def write_results_csv(path, results: list[InstanceResult]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_FIELDS)
        for r in results:
            w.writerow([r.method, r.n, r.instance_id, repr(r.length), repr(r.seconds)])


def read_results_csv(path) -> list[InstanceResult]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_FIELDS:
            raise ValueError(f"{path}: expected columns {','.join(CSV_FIELDS)}")
        return [InstanceResult(row["method"], int(row["n"]), int(row["instance_id"]),
                               float(row["length"]), float(row["seconds"])) for row in reader]


def write_report(out_dir, results: list[InstanceResult], scale: float | None = None) -> BenchReport:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_results_csv(out_dir / "results.csv", results)
    report = aggregate(results, scale)
    (out_dir / "report.json").write_text(report.to_json() + "\n")
    return report
