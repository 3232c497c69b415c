"""Synthetic-store benchmark: search cost versus search dimensionality.

The store fills every dimension of every record with uniform pseudo-random
values in [0, 10). Generation is counter-based so the data is reproducible
across runs and languages; for the element at flat index i (column-major:
i = dim * records + row) with seed s:

    z = splitmix64(s + i):
        z = (s + i + 0x9E3779B97F4A7C15) mod 2^64
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2^64
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2^64
        z =  z ^ (z >> 31)
    xorshift64* step on state z (0 replaced by the splitmix increment):
        z ^= z >> 12; z ^= z << 25; z ^= z >> 27   (mod 2^64)
        out = z * 0x2545F4914F6CDD1D mod 2^64
    value = 10 * out / 2^64

Timings are wall-clock means over the requested number of seeded searches
per dimensionality; per-column read counters prove a d-dimensional search
touches exactly d columns regardless of the store's total dimensionality.
"""
from __future__ import annotations

import gc
import random
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .index import IndexSnapshot, snapshot_from_columns
from .schema import (
    DimensionDef,
    DomainSpaceDef,
    Keycomment,
    KeycommentPair,
    Keyword,
    LeafContent,
    Registry,
)
from .search import DimQuery, SearchRequest, numeric_search

_SPLITMIX_INC = np.uint64(0x9E3779B97F4A7C15)
_SPLITMIX_M1 = np.uint64(0xBF58476D1CE4E5B9)
_SPLITMIX_M2 = np.uint64(0x94D049BB133111EB)
_XORSHIFT_M = np.uint64(0x2545F4914F6CDD1D)


def rng_uniform(seed: int, start: int, count: int, lo: float = 0.0, hi: float = 10.0) -> np.ndarray:
    """Deterministic uniform values for flat indexes [start, start+count)."""
    i = np.arange(start, start + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (np.uint64(seed) + i) + _SPLITMIX_INC
        z = (z ^ (z >> np.uint64(30))) * _SPLITMIX_M1
        z = (z ^ (z >> np.uint64(27))) * _SPLITMIX_M2
        z = z ^ (z >> np.uint64(31))
        z[z == 0] = _SPLITMIX_INC
        z = z ^ (z >> np.uint64(12))
        z = z ^ (z << np.uint64(25))
        z = z ^ (z >> np.uint64(27))
        out = z * _XORSHIFT_M
    return lo + (hi - lo) * (out.astype(np.float64) / 2.0**64)


def bench_dsi(dims: int) -> str:
    return f"urn:dspace:bench/{dims}d"


def _pair(kw0: str) -> KeycommentPair:
    kc = Keycomment(keywords=(Keyword(text=kw0),))
    return KeycommentPair(fixed=kc, changeable=kc, state="ok")


def build_synthetic(dims: int, dvs: int, seed: int) -> tuple[Registry, IndexSnapshot]:
    """Fully-defined store: `dims` float dimensions x `dvs` records."""
    registry = Registry()
    dsi = bench_dsi(dims)
    registry.register(
        DomainSpaceDef(
            dsi=dsi,
            pair=_pair(f"bench-{dims}d"),
            owner=0,
            metric="M1",
            dimensions=tuple(
                DimensionDef(di=f"d{j:03d}", pair=_pair(f"d{j:03d}"), weight=1.0,
                             content=LeafContent(kind="float-max"))
                for j in range(dims)
            ),
        )
    )
    cs = np.arange(dvs, dtype=np.uint64)
    columns = {
        f"{dsi}#d{j:03d}": (cs, rng_uniform(seed, j * dvs, dvs)) for j in range(dims)
    }
    return registry, snapshot_from_columns(columns, dvs, registry=registry)


@dataclass
class BenchPoint:
    d: int
    mean_ms: float
    columns_read: int
    hits: int


@dataclass
class BenchReport:
    dims: int
    dvs: int
    searches: int
    seed: int
    backend: str
    points: list[BenchPoint] = field(default_factory=list)
    kernel_comparison: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "dims": self.dims,
            "dvs": self.dvs,
            "searches": self.searches,
            "seed": self.seed,
            "backend": self.backend,
            "points": [
                {"d": p.d, "mean_ms": p.mean_ms, "columns_read": p.columns_read,
                 "hits": p.hits}
                for p in self.points
            ],
            "kernel_comparison_ms": self.kernel_comparison,
        }


def run_searches(
    registry: Registry,
    snapshot: IndexSnapshot,
    dims: int,
    searches: int,
    seed: int,
    max_d: int = 10,
    pcnt: int = 1000,
) -> list[BenchPoint]:
    """Mean search time and column reads for dimensionality 1..max_d."""
    dsi = bench_dsi(dims)
    points = []
    gc_was_enabled = gc.isenabled()
    try:
        for d in range(1, max_d + 1):
            picker = random.Random((seed << 8) ^ d)
            elapsed = []
            per_search_reads = []
            hits = 0
            # warm-up outside the timer (JIT compilation, caches)
            for _ in range(2):
                _run_one(registry, snapshot, dsi, dims, d, picker, pcnt)
            gc.collect()
            gc.disable()  # collector pauses would swamp per-search timings
            for _ in range(searches):
                snapshot.reset_read_counts()
                t0 = time.perf_counter()
                res = _run_one(registry, snapshot, dsi, dims, d, picker, pcnt)
                elapsed.append(time.perf_counter() - t0)
                per_search_reads.append(
                    sum(1 for n in snapshot.read_counts.values() if n > 0)
                )
                hits = len(res.hits)
            gc.enable()
            points.append(
                BenchPoint(d=d, mean_ms=float(np.mean(elapsed) * 1e3),
                           columns_read=max(per_search_reads), hits=hits)
            )
    finally:
        if gc_was_enabled:
            gc.enable()
    return points


def _run_one(registry, snapshot, dsi, dims, d, picker, pcnt):
    chosen = picker.sample(range(dims), d)
    req = SearchRequest(
        dsi=dsi,
        dims=tuple(
            DimQuery(path=f"d{j:03d}", sim=picker.uniform(0.0, 10.0)) for j in chosen
        ),
        pcnt=pcnt,
    )
    return numeric_search(req, snapshot, registry)


def compare_total_dims(
    dims_a: int,
    dims_b: int,
    dvs: int,
    searches: int,
    seed: int,
    max_d: int = 10,
    pcnt: int = 1000,
) -> list[tuple[int, float, float]]:
    """Mean search time per dimensionality for two stores of different total
    dimensionality, interleaving the timed searches so both see the same
    machine conditions. Returns (d, mean_ms_a, mean_ms_b) triples."""
    reg_a, snap_a = build_synthetic(dims_a, dvs, seed)
    reg_b, snap_b = build_synthetic(dims_b, dvs, seed)
    out = []
    gc_was_enabled = gc.isenabled()
    try:
        for d in range(1, max_d + 1):
            picker_a = random.Random((seed << 8) ^ d)
            picker_b = random.Random((seed << 8) ^ d)
            for _ in range(2):
                _run_one(reg_a, snap_a, bench_dsi(dims_a), dims_a, d, picker_a, pcnt)
                _run_one(reg_b, snap_b, bench_dsi(dims_b), dims_b, d, picker_b, pcnt)
            gc.collect()
            gc.disable()
            times_a, times_b = [], []
            for _ in range(searches):
                t0 = time.perf_counter()
                _run_one(reg_a, snap_a, bench_dsi(dims_a), dims_a, d, picker_a, pcnt)
                t1 = time.perf_counter()
                _run_one(reg_b, snap_b, bench_dsi(dims_b), dims_b, d, picker_b, pcnt)
                t2 = time.perf_counter()
                times_a.append(t1 - t0)
                times_b.append(t2 - t1)
            gc.enable()
            out.append((d, float(np.mean(times_a) * 1e3), float(np.mean(times_b) * 1e3)))
    finally:
        if gc_was_enabled:
            gc.enable()
    return out


def compare_kernels(snapshot: IndexSnapshot, repeats: int = 3) -> dict[str, float]:
    """Time the merge and distance kernels on both backends."""
    urls = sorted(snapshot.columns)[:3]
    arrays = [snapshot.columns[u].cs for u in urls]
    values = np.column_stack([snapshot.columns[u].vals for u in urls])
    weights = np.ones(values.shape[1])
    out: dict[str, float] = {}
    backends = ["numpy"] + (["numba"] if kernels.USE_NUMBA else [])
    for backend in backends:
        kernels.intersect_positions(arrays, force=backend)  # warm-up
        t0 = time.perf_counter()
        for _ in range(repeats):
            kernels.intersect_positions(arrays, force=backend)
        out[f"intersect_{backend}"] = (time.perf_counter() - t0) / repeats * 1e3
        kernels.minkowski_agg(values, weights, 1.0, force=backend)
        t0 = time.perf_counter()
        for _ in range(repeats):
            kernels.minkowski_agg(values, weights, 1.0, force=backend)
        out[f"minkowski_{backend}"] = (time.perf_counter() - t0) / repeats * 1e3
    return out


def run_bench(
    dims: int = 64,
    dvs: int = 100_000,
    searches: int = 20,
    seed: int = 1,
    max_d: int = 10,
    kernel_comparison: bool = True,
) -> BenchReport:
    registry, snapshot = build_synthetic(dims, dvs, seed)
    report = BenchReport(dims=dims, dvs=dvs, searches=searches, seed=seed,
                         backend=kernels.backend())
    report.points = run_searches(registry, snapshot, dims, searches, seed,
                                 max_d=min(max_d, dims))
    if kernel_comparison:
        report.kernel_comparison = compare_kernels(snapshot)
    return report
