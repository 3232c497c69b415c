"""Two-step numeric search.

Step one finds a space by word search over the definitions' first keywords;
step two is similarity/range search of its vectors over the synchronized
index. Searched dimensions are the similarity targets plus every dimension
carrying a bound or text condition; only vectors defined on all of them are
candidates, and the distance is computed from the similarity dimensions
alone. Statistics cover every match, not just the returned page.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import index as engine
from . import metric
from .codec import tux_decode, tux_prefix_range
from .errors import UnknownReference, ValidationError
from .index import IndexSnapshot, OWNER_COLUMN
from .schema import ColumnRoute, FlatLeaf, LeafContent, Registry

DEFAULT_PCNT = 1000


@dataclass(frozen=True)
class DimQuery:
    path: str
    sim: float | None = None
    min: float | None = None
    max: float | None = None
    g: bool = False
    word: str | None = None
    tux: str | None = None

    @property
    def searched(self) -> bool:
        return any(v is not None for v in (self.sim, self.min, self.max, self.word, self.tux))


@dataclass(frozen=True)
class SearchRequest:
    dsi: str
    dims: tuple[DimQuery, ...]
    offered: bool | None = None
    wanted: bool | None = None
    pcnt: int = DEFAULT_PCNT


@dataclass(frozen=True)
class DimStats:
    av: float
    sd: float
    min: float
    max: float


@dataclass(frozen=True)
class Hit:
    c: int
    d: float
    values: dict[str, float | str]
    a: int = 0
    vl: str = ""
    resource: str = ""
    kw0: str = ""
    comment: str = ""


@dataclass
class SearchResult:
    hits: list[Hit]
    stats: dict[str, DimStats]
    scatter: list[tuple[float, float]] | None
    total: int


@dataclass(frozen=True)
class DsSummary:
    dsi: str
    id: int
    kw0: str
    comment: str
    s: int  # search count
    r: int  # resource count


def find_ds(
    query: str,
    registry: Registry,
    search_counts: Mapping[str, int] | None = None,
    resource_counts: Mapping[str, int] | None = None,
) -> list[DsSummary]:
    """Case-insensitive prefix match of the query against each definition's
    first keyword; ranked by resource count descending, ties by DSI."""
    q = query.lower()
    out = []
    for dsi in registry.dsis():
        defn = registry.get(dsi)
        kw0 = defn.pair.fixed.kw0
        if not kw0.lower().startswith(q):
            continue
        out.append(
            DsSummary(
                dsi=dsi,
                id=registry.local_id(dsi),
                kw0=kw0,
                comment=defn.pair.fixed.comment,
                s=(search_counts or {}).get(dsi, 0),
                r=(resource_counts or {}).get(dsi, 0),
            )
        )
    out.sort(key=lambda s: (-s.r, s.dsi))
    return out


def stats(values_by_dim: Mapping[str, Sequence[float]]) -> dict[str, DimStats]:
    """Mean, population standard deviation, min and max per dimension."""
    out = {}
    for path, values in values_by_dim.items():
        arr = np.asarray(values, dtype=np.float64)
        if arr.size == 0:
            raise ValidationError(f"no matches carry values for {path!r}")
        out[path] = DimStats(
            av=float(arr.mean()),
            sd=float(arr.std()),
            min=float(arr.min()),
            max=float(arr.max()),
        )
    return out


def scatter_data(
    matches_values: Mapping[str, Sequence[float]], x_path: str, y_path: str
) -> list[tuple[float, float]]:
    """(x, y) pairs in match order for two available dimensions."""
    try:
        xs, ys = matches_values[x_path], matches_values[y_path]
    except KeyError as e:
        raise UnknownReference(f"dimension {e.args[0]!r} not available on matches") from None
    return [(float(x), float(y)) for x, y in zip(xs, ys)]


# ---------------------------------------------------------------------------
# numeric search


@dataclass
class _ResolvedDim:
    query: DimQuery
    path: str
    url: str  # canonical column
    route: ColumnRoute
    leaf: FlatLeaf | None  # None for the reserved @owner dimension
    kind: str


def _canonical_bounds(
    route: ColumnRoute, lo: float | None, hi: float | None
) -> tuple[float | None, float | None]:
    """Map request-unit bounds into canonical column units (a*x + b)."""
    clo = None if lo is None else route.a * lo + route.b
    chi = None if hi is None else route.a * hi + route.b
    if route.a < 0:
        clo, chi = chi, clo
    return clo, chi


def _from_canonical(route: ColumnRoute, values: np.ndarray) -> np.ndarray:
    if route.a == 1.0 and route.b == 0.0:
        return values
    return (values - route.b) / route.a


def _resolve_dims(req: SearchRequest, flat) -> list[_ResolvedDim]:
    resolved = []
    for q in req.dims:
        if q.path == "@owner":
            resolved.append(
                _ResolvedDim(q, "@owner", OWNER_COLUMN,
                             ColumnRoute(OWNER_COLUMN, 1.0, 0.0), None, "integer")
            )
            continue
        leaf = flat.resolve_path(q.path)
        content = leaf.defn.content
        kind = content.kind if isinstance(content, LeafContent) else "float-max"
        if kind == "text" and (q.sim is not None or q.min is not None or q.max is not None):
            raise ValidationError(f"text dimension {leaf.path!r} only takes word conditions")
        if kind != "text" and q.word is not None:
            raise ValidationError(f"word condition needs a text dimension, not {leaf.path!r}")
        if kind == "tux" and q.sim is not None:
            raise ValidationError(f"tux dimension {leaf.path!r} is searched by prefix")
        if kind != "tux" and q.tux is not None:
            raise ValidationError(f"tux prefix needs a tux dimension, not {leaf.path!r}")
        resolved.append(_ResolvedDim(q, leaf.path, "", ColumnRoute("", 1, 0), leaf, kind))
    return resolved


def numeric_search(
    req: SearchRequest,
    snapshot: IndexSnapshot,
    registry: Registry,
    access_counts: Mapping[int, int] | None = None,
) -> SearchResult:
    if not (1 <= req.pcnt <= 1000):
        raise ValidationError("pcnt must be in [1, 1000]")
    if not any(q.searched for q in req.dims):
        raise ValidationError("request needs a similarity target, bound, or text condition")
    dsi = registry.resolve(req.dsi)
    flat = registry.flatten(dsi)
    dims = _resolve_dims(req, flat)
    for rd in dims:
        if rd.leaf is not None:
            rd.url = snapshot.sameas.route(rd.leaf.url).canonical
            rd.route = snapshot.sameas.route(rd.leaf.url)
        # @owner already routed

    word_dims = [rd for rd in dims if rd.query.word is not None]
    scan_dims = [rd for rd in dims if rd.query.searched and rd.query.word is None]
    searched_dims = word_dims + scan_dims

    # a searched dimension no vector defines yields an empty result
    for rd in searched_dims:
        if rd.url not in snapshot.columns:
            return SearchResult(hits=[], stats={}, scatter=None, total=0)

    jump_lists = []
    for rd in word_dims:
        jump_lists.append(engine.text_lookup(snapshot, rd.url, word=rd.query.word))

    searched: list[tuple[str, float | None, float | None]] = []
    for rd in scan_dims:
        if rd.query.tux is not None:
            t_lo, t_hi = tux_prefix_range(rd.query.tux)
            lo, hi = _canonical_bounds(rd.route, float(t_lo), float(t_hi))
        else:
            lo, hi = _canonical_bounds(rd.route, rd.query.min, rd.query.max)
        searched.append((rd.url, lo, hi))

    # jump optimization: the tightest bounded column with a side index
    bounded = [
        (url, lo, hi) for url, lo, hi in searched
        if (lo is not None or hi is not None) and url in snapshot.sorted_values
    ]
    prefilters = [engine.range_prefilter(snapshot, url, lo, hi) for url, lo, hi in bounded]
    if prefilters:
        jump_lists.append(min(prefilters, key=len))

    jump_set = None
    if jump_lists:
        jump_set = jump_lists[0]
        for extra in jump_lists[1:]:
            jump_set = _intersect_two(jump_set, extra)

    if searched:
        cs, values = engine.scan_arrays(snapshot, searched, jump_set)
        for i, rd in enumerate(scan_dims):
            values[:, i] = _from_canonical(rd.route, values[:, i])
    else:
        cs = jump_set if jump_set is not None else np.empty(0, dtype=np.uint64)
        values = np.empty((cs.size, 0), dtype=np.float64)

    if req.offered is not None or req.wanted is not None:
        keep = np.ones(cs.size, dtype=bool)
        for i, c in enumerate(cs):
            rec = snapshot.record(int(c))
            if req.offered is not None and rec.offered != req.offered:
                keep[i] = False
            if req.wanted is not None and rec.wanted != req.wanted:
                keep[i] = False
        cs, values = cs[keep], values[keep]

    total = int(cs.size)

    sim_dims = [rd for rd in scan_dims if rd.query.sim is not None]
    if sim_dims and flat.tree is not None and total:
        col_of = {rd.path: i for i, rd in enumerate(scan_dims)}
        sub = metric.restrict(flat.tree, frozenset(rd.path for rd in sim_dims))
        target = np.zeros(len(scan_dims))
        for rd in sim_dims:
            target[col_of[rd.path]] = rd.query.sim
        target_matrix = np.broadcast_to(target, values.shape)

        def distance(vals: np.ndarray) -> np.ndarray:
            return metric.evaluate_batch(sub, col_of, vals, target_matrix[: vals.shape[0]])

    else:

        def distance(vals: np.ndarray) -> np.ndarray:
            return np.zeros(vals.shape[0])

    if total:
        top_cs, top_d, top_vals = engine.topk(cs, values, distance, req.pcnt)
    else:
        top_cs = np.empty(0, dtype=np.uint64)
        top_d = np.empty(0)
        top_vals = values

    # values of g dimensions over every match (for stats) and per hit
    g_dims = [rd for rd in dims if rd.query.g]
    display_dims = _unique_dims(searched_dims + g_dims)
    match_values: dict[str, np.ndarray] = {}
    defined_masks: dict[str, np.ndarray] = {}
    scan_col = {rd.path: i for i, rd in enumerate(scan_dims)}
    for rd in display_dims:
        if rd.path in scan_col:
            match_values[rd.path] = values[:, scan_col[rd.path]]
            defined_masks[rd.path] = np.ones(cs.size, dtype=bool)
        else:
            vals, mask = _fetch_column_values(snapshot, rd, cs)
            match_values[rd.path] = vals
            defined_masks[rd.path] = mask

    stat_input = {}
    for rd in g_dims:
        if rd.kind in ("text",):
            continue  # no numeric statistics over interned ids
        mask = defined_masks[rd.path]
        if mask.any():
            stat_input[rd.path] = match_values[rd.path][mask]
    stat_out = stats(stat_input) if stat_input else {}

    # hit assembly; cs is ascending, so hit rows resolve by binary search
    top_rows = np.searchsorted(cs, top_cs)
    hits = []
    for i in range(top_cs.size):
        c = int(top_cs[i])
        row = int(top_rows[i])
        rec = snapshot.record(c)
        hit_values: dict[str, float | str] = {}
        for rd in display_dims:
            if not defined_masks[rd.path][row]:
                continue
            hit_values[rd.path] = _display_value(snapshot, rd, match_values[rd.path][row])
        hits.append(
            Hit(
                c=c, d=float(top_d[i]), values=hit_values,
                a=(access_counts or {}).get(c, 0),
                vl=rec.vl, resource=rec.resource, kw0=rec.kw0, comment=rec.comment,
            )
        )

    scatter = None
    g_numeric = [rd for rd in g_dims if rd.kind != "text"]
    if len(g_numeric) >= 2:
        x_rd, y_rd = g_numeric[0], g_numeric[1]
        scatter = []
        for i in range(top_cs.size):
            row = int(top_rows[i])
            if defined_masks[x_rd.path][row] and defined_masks[y_rd.path][row]:
                scatter.append(
                    (float(match_values[x_rd.path][row]), float(match_values[y_rd.path][row]))
                )
    return SearchResult(hits=hits, stats=stat_out, scatter=scatter, total=total)


def _unique_dims(dims: list[_ResolvedDim]) -> list[_ResolvedDim]:
    seen = set()
    out = []
    for rd in dims:
        if rd.path not in seen:
            seen.add(rd.path)
            out.append(rd)
    return out


def _intersect_two(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    from . import kernels

    common, _ = kernels.intersect_positions([np.asarray(a, dtype=np.uint64),
                                             np.asarray(b, dtype=np.uint64)])
    return common


def _fetch_column_values(
    snapshot: IndexSnapshot, rd: _ResolvedDim, cs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Values of one column at the given record ids; mask marks defined."""
    col = snapshot.columns.get(rd.url)
    if col is None:
        return np.full(cs.size, np.nan), np.zeros(cs.size, dtype=bool)
    snapshot._touch(rd.url)
    idx = np.searchsorted(col.cs, cs)
    safe = np.minimum(idx, max(len(col.cs) - 1, 0))
    mask = (idx < len(col.cs)) & (col.cs[safe] == cs) if len(col.cs) else np.zeros(cs.size, bool)
    vals = np.full(cs.size, np.nan)
    if mask.any():
        vals[mask] = _from_canonical(rd.route, col.vals[idx[mask]])
    return vals, mask


def _display_value(snapshot: IndexSnapshot, rd: _ResolvedDim, scalar: float) -> float | str:
    if rd.kind == "text":
        return snapshot.interns.text_of(scalar)
    if rd.kind == "tux":
        try:
            return tux_decode(scalar)
        except ValidationError:
            return float(scalar)
    return float(scalar)


# ---------------------------------------------------------------------------
# JSON forms (shared by HTTP service and CLI for byte parity)


def request_from_json(obj: Mapping) -> SearchRequest:
    if not isinstance(obj, Mapping) or "dsi" not in obj:
        raise ValidationError("search request needs a dsi")
    dims = []
    for d in obj.get("dims", []):
        dims.append(
            DimQuery(
                path=str(d["path"]),
                sim=None if d.get("sim") is None else float(d["sim"]),
                min=None if d.get("min") is None else float(d["min"]),
                max=None if d.get("max") is None else float(d["max"]),
                g=bool(d.get("g", False)),
                word=d.get("word"),
                tux=d.get("tux"),
            )
        )
    return SearchRequest(
        dsi=str(obj["dsi"]),
        dims=tuple(dims),
        offered=obj.get("offered"),
        wanted=obj.get("wanted"),
        pcnt=int(obj.get("pcnt", DEFAULT_PCNT)),
    )


def request_to_json(req: SearchRequest) -> dict:
    dims = []
    for q in req.dims:
        d: dict = {"path": q.path}
        if q.sim is not None:
            d["sim"] = q.sim
        if q.min is not None:
            d["min"] = q.min
        if q.max is not None:
            d["max"] = q.max
        if q.g:
            d["g"] = True
        if q.word is not None:
            d["word"] = q.word
        if q.tux is not None:
            d["tux"] = q.tux
        dims.append(d)
    out: dict = {"dsi": req.dsi, "dims": dims, "pcnt": req.pcnt}
    if req.offered is not None:
        out["offered"] = req.offered
    if req.wanted is not None:
        out["wanted"] = req.wanted
    return out


def _json_scalar(v: float | str) -> float | int | str:
    if isinstance(v, str):
        return v
    f = float(v)
    return int(f) if f.is_integer() and abs(f) < 2**53 else f


def result_to_json(res: SearchResult) -> dict:
    hits = []
    for h in res.hits:
        item: dict = {
            "c": h.c,
            "d": _json_scalar(h.d),
            "values": {p: _json_scalar(v) for p, v in h.values.items()},
            "a": h.a,
        }
        if h.vl:
            item["vl"] = h.vl
        if h.resource:
            item["resource"] = h.resource
        if h.kw0:
            item["keycomment"] = {"kw0": h.kw0, "comment": h.comment}
        hits.append(item)
    out: dict = {
        "hits": hits,
        "stats": {
            p: {"av": s.av, "sd": s.sd, "min": _json_scalar(s.min), "max": _json_scalar(s.max)}
            for p, s in res.stats.items()
        },
        "total": res.total,
    }
    if res.scatter is not None:
        out["scatter"] = [[_json_scalar(x), _json_scalar(y)] for x, y in res.scatter]
    return out
