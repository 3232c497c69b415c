"""The synchronized index.

Every dimension owns one column of (c, value) records in strictly ascending
record-counter order; one global counter c is assigned per DV-group during a
single build pass, so a k-way merge over ascending c joins any subset of
columns in one scan that never touches unsearched dimensions. Optional side
structures: per-column value-sorted indexes for range prefilters/jumps and
word postings for text dimensions.

Snapshots are immutable; a rebuilt snapshot replaces the old one atomically.
"""
from __future__ import annotations

import io
import re
import struct
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import kernels
from .codec import DVGroup, URLRef, tux_prefix_range
from .errors import ParseError, UnknownReference, ValidationError
from .schema import (
    ColumnRoute,
    ComputedContent,
    LeafContent,
    Registry,
    SameAsMap,
    resolve_same_as,
)

MAGIC = b"DSIX1\x00"
OWNER_COLUMN = "urn:dspace:owner"

_RECORD_DTYPE = np.dtype([("c", "<u8"), ("v", "<f8")])
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric word parts, in order."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Column:
    cs: np.ndarray  # uint64, strictly ascending
    vals: np.ndarray  # float64

    def __len__(self):
        return len(self.cs)


@dataclass(frozen=True)
class RecordEntry:
    c: int
    dsis: tuple[str, ...]
    vl: str = ""
    resource: str = ""
    kw0: str = ""
    comment: str = ""
    owner: int | None = None
    offered: bool | None = None
    wanted: bool | None = None


@dataclass
class BuildReport:
    groups: int = 0
    records: int = 0
    rejected: int = 0
    rejects: list[tuple[int, str, str]] = field(default_factory=list)  # (c, column, reason)


@dataclass(frozen=True)
class BuildOptions:
    depth_limit: int = 8
    sorted_value_index: bool = True
    text_postings: bool = True
    max_reject_detail: int = 100


class InternTable:
    """Assigns stable 64-bit ids to long payloads, in first-seen order."""

    def __init__(self):
        self._by_text: dict[str, int] = {}
        self._by_id: list[str] = []

    def intern(self, text: str) -> int:
        idx = self._by_text.get(text)
        if idx is None:
            idx = len(self._by_id)
            self._by_text[text] = idx
            self._by_id.append(text)
        return idx

    def lookup(self, text: str) -> int | None:
        return self._by_text.get(text)

    def text_of(self, idx: int | float) -> str:
        i = int(idx)
        if i != idx or not (0 <= i < len(self._by_id)):
            raise UnknownReference(f"unknown intern id {idx!r}")
        return self._by_id[i]

    def items(self) -> list[tuple[int, str]]:
        return list(enumerate(self._by_id))

    def __len__(self):
        return len(self._by_id)


class IndexSnapshot:
    """Immutable search structure; safe for unlimited concurrent readers.

    read_counts instruments column accesses (scan/prefilter/lookup) and is
    not part of the serialized form.
    """

    def __init__(
        self,
        columns: dict[str, Column],
        records: list[RecordEntry],
        sorted_values: dict[str, Column],
        postings: dict[str, dict[str, np.ndarray]],
        interns: InternTable,
        sameas: SameAsMap,
        report: BuildReport,
    ):
        self.columns = columns
        self.records = records
        self.sorted_values = sorted_values
        self.postings = postings
        self.interns = interns
        self.sameas = sameas
        self.report = report
        self.read_counts: dict[str, int] = {}

    def reset_read_counts(self) -> None:
        self.read_counts = {}

    def _touch(self, url: str) -> None:
        self.read_counts[url] = self.read_counts.get(url, 0) + 1

    def column(self, url: str) -> Column:
        col = self.columns.get(url)
        if col is None:
            raise UnknownReference(f"unknown index column {url!r}")
        return col

    def record(self, c: int) -> RecordEntry:
        if not (0 <= c < len(self.records)):
            raise UnknownReference(f"unknown record {c}")
        return self.records[c]

    # -- serialization ------------------------------------------------------

    def to_bytes(self) -> bytes:
        out = io.BytesIO()
        out.write(MAGIC)

        def w_str(s: str) -> None:
            data = s.encode("utf-8")
            out.write(struct.pack("<I", len(data)))
            out.write(data)

        def w_column(url: str, col: Column) -> None:
            w_str(url)
            out.write(struct.pack("<Q", len(col)))
            arr = np.empty(len(col), dtype=_RECORD_DTYPE)
            arr["c"] = col.cs
            arr["v"] = col.vals
            out.write(arr.tobytes())

        out.write(struct.pack("<I", len(self.columns)))
        for url in sorted(self.columns):
            w_column(url, self.columns[url])

        out.write(struct.pack("<Q", len(self.records)))
        for r in self.records:
            out.write(struct.pack("<Q", r.c))
            w_str(r.vl)
            w_str(r.resource)
            out.write(struct.pack("<I", len(r.dsis)))
            for dsi in r.dsis:
                w_str(dsi)
            w_str(r.kw0)
            w_str(r.comment)
            out.write(struct.pack("<q", -1 if r.owner is None else r.owner))
            flags = 0
            if r.offered is not None:
                flags |= 1 | (2 if r.offered else 0)
            if r.wanted is not None:
                flags |= 4 | (8 if r.wanted else 0)
            out.write(struct.pack("<B", flags))

        out.write(struct.pack("<I", len(self.sorted_values)))
        for url in sorted(self.sorted_values):
            w_column(url, self.sorted_values[url])

        out.write(struct.pack("<I", len(self.postings)))
        for url in sorted(self.postings):
            w_str(url)
            words = self.postings[url]
            out.write(struct.pack("<Q", len(words)))
            for word in sorted(words):
                w_str(word)
                cs = words[word]
                out.write(struct.pack("<Q", len(cs)))
                out.write(cs.astype("<u8").tobytes())

        out.write(struct.pack("<Q", len(self.interns)))
        for idx, text in self.interns.items():
            out.write(struct.pack("<Q", idx))
            w_str(text)

        routes = sorted(self.sameas.items())
        out.write(struct.pack("<Q", len(routes)))
        for url, route in routes:
            w_str(url)
            w_str(route.canonical)
            out.write(struct.pack("<dd", route.a, route.b))

        out.write(struct.pack("<QQ", self.report.groups, self.report.rejected))
        return out.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "IndexSnapshot":
        buf = io.BytesIO(data)
        if buf.read(len(MAGIC)) != MAGIC:
            raise ParseError("not a DSIX1 snapshot")

        def r_str() -> str:
            (n,) = struct.unpack("<I", buf.read(4))
            return buf.read(n).decode("utf-8")

        def r_column() -> tuple[str, Column]:
            url = r_str()
            (n,) = struct.unpack("<Q", buf.read(8))
            arr = np.frombuffer(buf.read(16 * n), dtype=_RECORD_DTYPE)
            return url, Column(cs=arr["c"].copy(), vals=arr["v"].copy())

        (ncols,) = struct.unpack("<I", buf.read(4))
        columns = dict(r_column() for _ in range(ncols))

        (nrec,) = struct.unpack("<Q", buf.read(8))
        records = []
        for _ in range(nrec):
            (c,) = struct.unpack("<Q", buf.read(8))
            vl = r_str()
            resource = r_str()
            (ndsi,) = struct.unpack("<I", buf.read(4))
            dsis = tuple(r_str() for _ in range(ndsi))
            kw0 = r_str()
            comment = r_str()
            (owner,) = struct.unpack("<q", buf.read(8))
            (flags,) = struct.unpack("<B", buf.read(1))
            records.append(
                RecordEntry(
                    c=c, dsis=dsis, vl=vl, resource=resource, kw0=kw0, comment=comment,
                    owner=None if owner == -1 else owner,
                    offered=bool(flags & 2) if flags & 1 else None,
                    wanted=bool(flags & 8) if flags & 4 else None,
                )
            )

        (nsv,) = struct.unpack("<I", buf.read(4))
        sorted_values = dict(r_column() for _ in range(nsv))

        (npost,) = struct.unpack("<I", buf.read(4))
        postings: dict[str, dict[str, np.ndarray]] = {}
        for _ in range(npost):
            url = r_str()
            (nwords,) = struct.unpack("<Q", buf.read(8))
            words = {}
            for _ in range(nwords):
                word = r_str()
                (n,) = struct.unpack("<Q", buf.read(8))
                words[word] = np.frombuffer(buf.read(8 * n), dtype="<u8").copy()
            postings[url] = words

        interns = InternTable()
        (nint,) = struct.unpack("<Q", buf.read(8))
        for _ in range(nint):
            struct.unpack("<Q", buf.read(8))
            interns.intern(r_str())

        (nroutes,) = struct.unpack("<Q", buf.read(8))
        routes = {}
        for _ in range(nroutes):
            url = r_str()
            canonical = r_str()
            a, b = struct.unpack("<dd", buf.read(16))
            routes[url] = ColumnRoute(canonical, a, b)

        groups, rejected = struct.unpack("<QQ", buf.read(16))
        report = BuildReport(groups=groups, rejected=rejected,
                             records=int(sum(len(col) for col in columns.values())))
        return cls(columns, records, sorted_values, postings, interns,
                   SameAsMap(routes), report)


# ---------------------------------------------------------------------------
# expression evaluation for computed dimensions


class _ExprParser:
    """Recursive-descent evaluator for `+ - * /`, parens, decimals, DIs."""

    _token_re = re.compile(r"\s*(\d+\.?\d*|\.\d+|[A-Za-z0-9_-]+|[()+\-*/])")

    def __init__(self, expr: str, env: Mapping[str, float]):
        self.tokens: list[str] = []
        pos = 0
        while pos < len(expr):
            m = self._token_re.match(expr, pos)
            if not m:
                if expr[pos:].strip():
                    raise ParseError(f"bad expression near {expr[pos:]!r}")
                break
            self.tokens.append(m.group(1))
            pos = m.end()
        self.pos = 0
        self.env = env

    def _peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _next(self) -> str:
        tok = self._peek()
        if tok is None:
            raise ParseError("unexpected end of expression")
        self.pos += 1
        return tok

    def parse(self) -> float:
        v = self._sum()
        if self._peek() is not None:
            raise ParseError(f"trailing tokens in expression: {self.tokens[self.pos:]}")
        return v

    def _sum(self) -> float:
        v = self._product()
        while self._peek() in ("+", "-"):
            op = self._next()
            rhs = self._product()
            v = v + rhs if op == "+" else v - rhs
        return v

    def _product(self) -> float:
        v = self._factor()
        while self._peek() in ("*", "/"):
            op = self._next()
            rhs = self._factor()
            v = v * rhs if op == "*" else v / rhs
        return v

    def _factor(self) -> float:
        tok = self._next()
        if tok == "(":
            v = self._sum()
            if self._next() != ")":
                raise ParseError("unbalanced parentheses")
            return v
        if tok == "-":
            return -self._factor()
        if tok == "+":
            return self._factor()
        if re.match(r"^(\d+\.?\d*|\.\d+)$", tok):
            return float(tok)
        if tok in self.env:
            return float(self.env[tok])
        raise UnknownReference(f"expression references undefined sibling {tok!r}")


def eval_expression(expr: str, env: Mapping[str, float]) -> float:
    return _ExprParser(expr, env).parse()


# ---------------------------------------------------------------------------
# build


def build_index(
    groups: Iterable[DVGroup],
    registry: Registry,
    options: BuildOptions = BuildOptions(),
) -> IndexSnapshot:
    """One pass over DV-groups in stable store order.

    Each group gets one record counter c; every defined dimension emits one
    column record, routed through the sameAs affine into its canonical
    column. Text values are interned and additionally tokenized into
    postings. Out-of-range values reject that record only and are counted.
    """
    sameas = resolve_same_as(registry)
    interns = InternTable()
    col_cs: dict[str, list[int]] = {}
    col_vals: dict[str, list[float]] = {}
    postings: dict[str, dict[str, list[int]]] = {}
    records: list[RecordEntry] = []
    report = BuildReport()

    def reject(c: int, column: str, reason: str) -> None:
        report.rejected += 1
        if len(report.rejects) < options.max_reject_detail:
            report.rejects.append((c, column, reason))

    def emit(c: int, column: str, value: float) -> bool:
        cs = col_cs.setdefault(column, [])
        if cs and cs[-1] == c:
            reject(c, column, "duplicate record for this c")
            return False
        cs.append(c)
        col_vals.setdefault(column, []).append(float(value))
        report.records += 1
        return True

    for c, group in enumerate(groups):
        kw0 = comment = ""
        owner = offered = wanted = None
        vl = resource = ""
        for dv in group.members:
            flat = registry.flatten(dv.dsi, options.depth_limit)
            explicit: dict[str, float | str] = {}
            for inst in dv.dims:
                if isinstance(inst.value, URLRef):
                    continue  # DV-by-reference: not expanded into columns
                explicit[inst.path] = inst.value
            # computed leaves derive from explicitly given siblings
            for lf in flat.leaves:
                if not isinstance(lf.defn.content, ComputedContent):
                    continue
                prefix = lf.path[: -len(lf.di)]
                env = {}
                for sib in flat.leaves:
                    if sib.path.startswith(prefix) and "/" not in sib.path[len(prefix):]:
                        v = explicit.get(sib.path)
                        if isinstance(v, float):
                            env[sib.di] = v
                try:
                    explicit[lf.path] = eval_expression(lf.defn.content.expr, env)
                except (UnknownReference, ZeroDivisionError):
                    continue
            for lf in flat.leaves:
                if lf.path not in explicit:
                    continue
                value = explicit[lf.path]
                route = sameas.route(lf.url)
                content = lf.defn.content
                if isinstance(content, LeafContent) and content.kind == "text":
                    word_cs = postings.setdefault(route.canonical, {})
                    if emit(c, route.canonical, float(interns.intern(str(value)))):
                        if options.text_postings:
                            for word in set(tokenize(str(value))):
                                lst = word_cs.setdefault(word, [])
                                if not lst or lst[-1] != c:
                                    lst.append(c)
                    continue
                scalar = float(value)
                if isinstance(content, LeafContent):
                    if content.min is not None and scalar < content.min:
                        reject(c, route.canonical, f"value {scalar} below min {content.min}")
                        continue
                    if content.max is not None and scalar > content.max:
                        reject(c, route.canonical, f"value {scalar} above max {content.max}")
                        continue
                emit(c, route.canonical, route.a * scalar + route.b)
            if dv.owner is not None:
                owner = dv.owner
                emit(c, OWNER_COLUMN, float(dv.owner))
            if dv.keycomment is not None and not kw0:
                kw0 = dv.keycomment.kw0
                comment = dv.keycomment.comment
            vl = vl or (dv.vl or "")
            resource = resource or (dv.resource or "")
            offered = offered if offered is not None else dv.offered
            wanted = wanted if wanted is not None else dv.wanted
        # entry is written only after all the group's dimension records
        records.append(
            RecordEntry(
                c=c, dsis=tuple(dict.fromkeys(dv.dsi for dv in group.members)),
                vl=vl, resource=resource or (group.resource or ""),
                kw0=kw0, comment=comment, owner=owner, offered=offered, wanted=wanted,
            )
        )
        report.groups += 1

    columns = {
        url: Column(
            cs=np.asarray(col_cs[url], dtype=np.uint64),
            vals=np.asarray(col_vals[url], dtype=np.float64),
        )
        for url in col_cs
    }
    sorted_values: dict[str, Column] = {}
    if options.sorted_value_index:
        for url, col in columns.items():
            order = np.argsort(col.vals, kind="stable")
            sorted_values[url] = Column(cs=col.cs[order], vals=col.vals[order])
    post_arrays = {
        url: {w: np.asarray(cs, dtype=np.uint64) for w, cs in words.items()}
        for url, words in postings.items()
    }
    return IndexSnapshot(columns, records, sorted_values, post_arrays, interns, sameas, report)


def snapshot_from_columns(
    columns: Mapping[str, tuple[np.ndarray, np.ndarray]],
    n_records: int,
    registry: Registry | None = None,
    sorted_value_index: bool = False,
) -> IndexSnapshot:
    """Assemble a snapshot directly from prebuilt (cs, values) arrays.

    Bypasses per-DV ingestion for synthetic stores (benchmarks, large
    geometry fixtures); the search path is identical either way.
    """
    cols = {}
    for url, (cs, vals) in columns.items():
        cs = np.asarray(cs, dtype=np.uint64)
        vals = np.asarray(vals, dtype=np.float64)
        if cs.size and not (np.diff(cs.astype(np.int64)) > 0).all():
            raise ValidationError(f"column {url!r}: c not strictly ascending")
        cols[url] = Column(cs=cs, vals=vals)
    sorted_values = {}
    if sorted_value_index:
        for url, col in cols.items():
            order = np.argsort(col.vals, kind="stable")
            sorted_values[url] = Column(cs=col.cs[order], vals=col.vals[order])
    records = [RecordEntry(c=c, dsis=()) for c in range(n_records)]
    sameas = resolve_same_as(registry) if registry is not None else SameAsMap({})
    report = BuildReport(groups=n_records,
                         records=int(sum(len(c) for c in cols.values())))
    return IndexSnapshot(cols, records, sorted_values, {}, InternTable(), sameas, report)


# ---------------------------------------------------------------------------
# scan / prefilter / lookup / topk


def scan_arrays(
    snapshot: IndexSnapshot,
    searched: Sequence[tuple[str, float | None, float | None]],
    jump_set: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Merge-join the searched columns over ascending c.

    Returns (cs, values) where values is (n, len(searched)). Emits exactly
    the c present in all searched columns, bounds applied; a jump set
    restricts emission further. Unsearched columns are never touched.
    """
    if not searched:
        raise ValidationError("need at least one searched column")
    cols = []
    for url, _, _ in searched:
        col = snapshot.column(url)
        snapshot._touch(url)
        cols.append(col)
    arrays = [col.cs for col in cols]
    if jump_set is not None:
        arrays.append(np.asarray(jump_set, dtype=np.uint64))
    common, positions = kernels.intersect_positions(arrays)
    values = np.empty((common.size, len(cols)), dtype=np.float64)
    for i, col in enumerate(cols):
        values[:, i] = col.vals[positions[i]]
    mask = np.ones(common.size, dtype=bool)
    for i, (_, lo, hi) in enumerate(searched):
        if lo is not None:
            mask &= values[:, i] >= lo
        if hi is not None:
            mask &= values[:, i] <= hi
    if not mask.all():
        common, values = common[mask], values[mask]
    return common, values


def scan(
    snapshot: IndexSnapshot,
    searched: Sequence[tuple[str, float | None, float | None]],
    jump_set: np.ndarray | None = None,
) -> Iterator[tuple[int, np.ndarray]]:
    """Streaming form of scan_arrays: yields (c, value vector) ascending."""
    cs, values = scan_arrays(snapshot, searched, jump_set)
    for i in range(cs.size):
        yield int(cs[i]), values[i]


def range_prefilter(
    snapshot: IndexSnapshot, column: str, lo: float | None, hi: float | None
) -> np.ndarray:
    """Ascending c of all records of one column with lo <= value <= hi.

    Needs the sorted-value side index; binary-searches the value range and
    sorts the ids so they can drive jumps in a later scan.
    """
    sv = snapshot.sorted_values.get(column)
    if sv is None:
        if column not in snapshot.columns:
            raise UnknownReference(f"unknown index column {column!r}")
        raise UnknownReference(f"no sorted-value index for column {column!r}")
    snapshot._touch(column)
    lo_v = -np.inf if lo is None else lo
    hi_v = np.inf if hi is None else hi
    if lo_v > hi_v:
        return np.empty(0, dtype=np.uint64)
    start = np.searchsorted(sv.vals, lo_v, side="left")
    stop = np.searchsorted(sv.vals, hi_v, side="right")
    return np.sort(sv.cs[start:stop])


def text_lookup(
    snapshot: IndexSnapshot,
    column: str,
    word: str | None = None,
    tux_prefix: str | None = None,
) -> np.ndarray:
    """Ascending c list for a word (postings) or tux prefix (value range)."""
    if (word is None) == (tux_prefix is None):
        raise ValidationError("pass exactly one of word / tux_prefix")
    if word is not None:
        words = snapshot.postings.get(column)
        if words is None:
            raise UnknownReference(f"no text postings for column {column!r}")
        snapshot._touch(column)
        return words.get(word.lower(), np.empty(0, dtype=np.uint64))
    lo, hi = tux_prefix_range(tux_prefix)
    if column in snapshot.sorted_values:
        return range_prefilter(snapshot, column, float(lo), float(hi))
    col = snapshot.column(column)
    snapshot._touch(column)
    mask = (col.vals >= lo) & (col.vals <= hi)
    return col.cs[mask]


def topk(
    cs: np.ndarray,
    values: np.ndarray,
    distance: Callable[[np.ndarray], np.ndarray],
    pcnt: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The pcnt smallest-distance candidates, ascending distance, ties by
    ascending c. Returns (cs, distances, values) reordered."""
    if not (1 <= pcnt <= 1000):
        raise ValidationError("pcnt must be in [1, 1000]")
    d = np.asarray(distance(values), dtype=np.float64)
    if d.size > pcnt:
        # select before sorting; keep every candidate tied with the kth
        # distance so ascending c can break the boundary ties
        part = np.argpartition(d, pcnt - 1)
        kth = d[part[pcnt - 1]]
        sel = np.flatnonzero(d <= kth)
    else:
        sel = np.arange(d.size)
    order = sel[np.lexsort((cs[sel], d[sel]))][:pcnt]
    return cs[order], d[order], values[order]
