"""Domain space definitions: parsing, validation, nesting, evolution.

A definition is a JSON document in a fixed canonical form (sorted keys,
2-space indent, LF, UTF-8 NFC). Definitions are identified by the URL they
live at (the DSI) and evolve append-only: existing dimensions are never
reordered or deleted, fixed keycomments freeze once the state leaves draft.
"""
from __future__ import annotations

import hashlib
import json
import re
import unicodedata
from dataclasses import dataclass
from typing import Any, Mapping

from . import metric
from .errors import FixedPartViolation, ParseError, UnknownReference, ValidationError

DI_RE = re.compile(r"^[A-Za-z0-9_-]+$")
METRIC_ORDERS = {"M1": 1.0, "M2": 2.0, "Minf": float("inf")}
ATTRIBUTES = {"c", "f", "n"}
STATES = ("draft", "ok", "deprecated")
DEFAULT_DEPTH_LIMIT = 8
RATIO_CAP = 1e6

LEAF_KINDS = {
    "integer",
    "money",
    "float-medium",
    "float-max",
    "date",
    "list",
    "tux",
    "text",
}
# kinds compared with the equality metric instead of |x-y|
DISCRETE_KINDS = {"tux", "text"}

DATE_FORMATS = (
    "yyyy-mm-dd hh:mm:ss",
    "yyyy-mm-dd hh:mm",
    "yyyy-mm-dd hh",
    "yyyy-mm-dd",
    "yyyy-mm",
    "yyyy",
    "hh:mm:ss",
    "hh:mm",
)


def _nfc(obj):
    if isinstance(obj, str):
        return unicodedata.normalize("NFC", obj)
    if isinstance(obj, list):
        return [_nfc(v) for v in obj]
    if isinstance(obj, dict):
        return {_nfc(k): _nfc(v) for k, v in obj.items()}
    return obj


def canonical_json(payload: Mapping) -> str:
    return json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n"


@dataclass(frozen=True)
class Keyword:
    text: str
    url: str | None = None


@dataclass(frozen=True)
class Keycomment:
    keywords: tuple[Keyword, ...]
    comment: str = ""

    def __post_init__(self):
        if not self.keywords or not self.keywords[0].text:
            raise ValidationError("keycomment needs a non-empty first keyword")

    @property
    def kw0(self) -> str:
        return self.keywords[0].text


@dataclass(frozen=True)
class KeycommentPair:
    fixed: Keycomment
    changeable: Keycomment
    state: str = "draft"

    def __post_init__(self):
        if self.state not in STATES:
            raise ValidationError(f"unknown state {self.state!r}")


@dataclass(frozen=True)
class AffineLink:
    """Declares this item's value equal to a * target + b."""

    url: str
    a: float = 1.0
    b: float = 0.0

    def __post_init__(self):
        if self.a == 0:
            raise ValidationError("sameAs factor must be nonzero")


@dataclass(frozen=True)
class Interval:
    label: str
    lower: float | None = None
    upper: float | None = None


@dataclass(frozen=True)
class LeafContent:
    kind: str
    min: float | None = None
    max: float | None = None
    date_format: str | None = None
    intervals: tuple[Interval, ...] = ()
    extra: tuple[tuple[str, Any], ...] = ()

    def __post_init__(self):
        if self.kind not in LEAF_KINDS:
            raise ValidationError(f"unknown leaf kind {self.kind!r}")
        if self.min is not None and self.max is not None and self.min > self.max:
            raise ValidationError("min must be <= max")
        if self.kind == "date":
            if self.date_format not in DATE_FORMATS:
                raise ValidationError(f"unknown date format {self.date_format!r}")
        if self.kind == "list":
            if not self.intervals:
                raise ValidationError("list kind needs an interval table")
            _check_interval_table(self.intervals)

    @property
    def interval_mode(self) -> bool:
        return any(iv.lower is not None or iv.upper is not None for iv in self.intervals)

    def effective_bounds(self, idx: int) -> tuple[float | None, float | None]:
        """Interval borders with the default rule applied: a missing lower
        border is the previous interval's upper border."""
        iv = self.intervals[idx]
        lower = iv.lower
        if lower is None and idx > 0:
            lower = self.intervals[idx - 1].upper
        return lower, iv.upper


def _check_interval_table(intervals: tuple[Interval, ...]) -> None:
    have_borders = any(iv.lower is not None or iv.upper is not None for iv in intervals)
    labels = [iv.label for iv in intervals]
    if len(set(labels)) != len(labels):
        raise ValidationError("interval labels must be unique")
    if not have_borders:
        return  # plain item list
    last = None
    for i, iv in enumerate(intervals):
        lower = iv.lower if iv.lower is not None else last
        if i > 0 and lower is None:
            raise ValidationError(f"interval {iv.label!r} has no lower border")
        if i < len(intervals) - 1 and iv.upper is None:
            raise ValidationError(f"interval {iv.label!r} has no upper border")
        if lower is not None and iv.upper is not None and iv.upper < lower:
            raise ValidationError(f"interval {iv.label!r} borders decrease")
        if last is not None and lower is not None and lower < last:
            raise ValidationError("interval borders must be non-decreasing")
        last = iv.upper if iv.upper is not None else last


@dataclass(frozen=True)
class BranchContent:
    dsi: str


@dataclass(frozen=True)
class ExternalContent:
    url: str  # DSI + "#" + DI of a foreign leaf dimension


@dataclass(frozen=True)
class ComputedContent:
    expr: str  # algebraic expression over sibling DIs


Content = LeafContent | BranchContent | ExternalContent | ComputedContent


@dataclass(frozen=True)
class DimensionDef:
    di: str
    pair: KeycommentPair
    weight: float
    content: Content
    rank: int | None = None
    same_as: AffineLink | None = None
    extra: tuple[tuple[str, Any], ...] = ()

    def __post_init__(self):
        if not DI_RE.match(self.di):
            raise ValidationError(f"invalid DI {self.di!r}")
        if not (self.weight > 0):
            raise ValidationError(f"dimension {self.di!r}: weight must be > 0")

    @property
    def unit(self) -> str | None:
        kws = self.pair.fixed.keywords
        return kws[1].text if len(kws) > 1 else None


@dataclass(frozen=True)
class DomainSpaceDef:
    dsi: str
    pair: KeycommentPair
    owner: int
    dimensions: tuple[DimensionDef, ...]
    metric: str | None = None  # "M1" | "M2" | "Minf" | "GPS"; None -> default M1
    attributes: tuple[str, ...] = ()
    relation: KeycommentPair | None = None
    same_as: AffineLink | None = None
    extra: tuple[tuple[str, Any], ...] = ()

    def __post_init__(self):
        if self.metric is not None and self.metric not in METRIC_ORDERS and self.metric != "GPS":
            raise ValidationError(f"unknown metric string {self.metric!r}")
        for a in self.attributes:
            if a not in ATTRIBUTES:
                raise ValidationError(f"unknown attribute {a!r}")
        seen = set()
        for d in self.dimensions:
            if d.di in seen:
                raise ValidationError(f"duplicate DI {d.di!r}")
            seen.add(d.di)

    @property
    def metric_order(self) -> float:
        if self.metric is None:
            return 1.0  # Manhattan default
        return METRIC_ORDERS.get(self.metric, 1.0)

    def dimension(self, di: str) -> DimensionDef:
        for d in self.dimensions:
            if d.di == di:
                return d
        raise UnknownReference(f"no dimension {di!r} in {self.dsi}")

    def dimension_url(self, di: str) -> str:
        return f"{self.dsi}#{di}"


@dataclass(frozen=True)
class FlatLeaf:
    path: str  # slash-joined DIs from the root space
    di: str
    url: str  # dimension URL: defining DSI + "#" + DI
    defn: DimensionDef
    space_dsi: str


@dataclass(frozen=True)
class FlatBranch:
    path: str
    di: str
    dsi: str  # DSI of the nested space


@dataclass(frozen=True)
class FlatSchema:
    dsi: str
    leaves: tuple[FlatLeaf, ...]
    tree: metric.MetricNode | None
    cycles: tuple[str, ...] = ()
    branches: tuple[FlatBranch, ...] = ()

    def leaf(self, path: str) -> FlatLeaf:
        for lf in self.leaves:
            if lf.path == path:
                return lf
        raise UnknownReference(f"no dimension path {path!r} in {self.dsi}")

    def resolve_path(self, name: str) -> FlatLeaf:
        """Exact path match, else unique match on the final DI."""
        for lf in self.leaves:
            if lf.path == name:
                return lf
        hits = [lf for lf in self.leaves if lf.di == name]
        if len(hits) == 1:
            return hits[0]
        if not hits:
            raise UnknownReference(f"no dimension {name!r} in {self.dsi}")
        raise UnknownReference(f"ambiguous dimension {name!r} in {self.dsi}")

    def resolve_branch(self, name: str) -> FlatBranch:
        for br in self.branches:
            if br.path == name:
                return br
        hits = [br for br in self.branches if br.di == name]
        if len(hits) == 1:
            return hits[0]
        raise UnknownReference(f"no branch dimension {name!r} in {self.dsi}")


# ---------------------------------------------------------------------------
# parsing


def _parse_keycomment(obj, where: str) -> Keycomment:
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: keycomment must be an object")
    kws = obj.get("keywords")
    if not isinstance(kws, list) or not kws:
        raise ValidationError(f"{where}: keycomment needs a keywords array")
    keywords = []
    for kw in kws:
        if not isinstance(kw, dict) or "text" not in kw:
            raise ValidationError(f"{where}: keyword needs a text field")
        keywords.append(Keyword(text=str(kw["text"]), url=kw.get("url")))
    return Keycomment(keywords=tuple(keywords), comment=str(obj.get("comment", "")))


def _parse_pair(obj, where: str) -> KeycommentPair:
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: pair must be an object")
    return KeycommentPair(
        fixed=_parse_keycomment(obj.get("fixed"), where + ".fixed"),
        changeable=_parse_keycomment(obj.get("changeable"), where + ".changeable"),
        state=obj.get("state", "draft"),
    )


def _parse_same_as(obj, where: str) -> AffineLink:
    if not isinstance(obj, dict) or "url" not in obj:
        raise ValidationError(f"{where}: sameAs needs a url")
    return AffineLink(url=str(obj["url"]), a=float(obj.get("a", 1.0)), b=float(obj.get("b", 0.0)))


def _opt_float(obj, key, where):
    if key not in obj or obj[key] is None:
        return None
    try:
        return float(obj[key])
    except (TypeError, ValueError):
        raise ValidationError(f"{where}: {key} must be a number") from None


def _parse_content(obj, where: str) -> Content:
    if not isinstance(obj, dict) or len(obj) != 1:
        raise ValidationError(f"{where}: content must hold exactly one variant")
    (variant, body), = obj.items()
    if variant == "leaf":
        known = {"kind", "min", "max", "dateFormat", "intervals"}
        intervals = []
        for iv in body.get("intervals", []):
            intervals.append(
                Interval(
                    label=str(iv["label"]),
                    lower=_opt_float(iv, "lower", where),
                    upper=_opt_float(iv, "upper", where),
                )
            )
        return LeafContent(
            kind=body.get("kind", ""),
            min=_opt_float(body, "min", where),
            max=_opt_float(body, "max", where),
            date_format=body.get("dateFormat"),
            intervals=tuple(intervals),
            extra=tuple(sorted((k, v) for k, v in body.items() if k not in known)),
        )
    if variant == "branch":
        return BranchContent(dsi=str(body["dsi"]))
    if variant == "external":
        return ExternalContent(url=str(body["url"]))
    if variant == "computed":
        return ComputedContent(expr=str(body["expr"]))
    raise ValidationError(f"{where}: unknown content variant {variant!r}")


def _parse_dimension(obj, where: str) -> DimensionDef:
    known = {"di", "rank", "sameAs", "pair", "weight", "content"}
    if "di" not in obj:
        raise ValidationError(f"{where}: dimension needs a di")
    di = str(obj["di"])
    try:
        weight = float(obj.get("weight", 1.0))
    except (TypeError, ValueError):
        raise ValidationError(f"{where}.{di}: weight must be a number") from None
    return DimensionDef(
        di=di,
        rank=int(obj["rank"]) if obj.get("rank") is not None else None,
        same_as=_parse_same_as(obj["sameAs"], f"{where}.{di}") if "sameAs" in obj else None,
        pair=_parse_pair(obj.get("pair"), f"{where}.{di}.pair"),
        weight=weight,
        content=_parse_content(obj.get("content"), f"{where}.{di}.content"),
        extra=tuple(sorted((k, v) for k, v in obj.items() if k not in known)),
    )


def parse_ds_definition(document: str) -> DomainSpaceDef:
    """Parse a definition document; unknown fields survive round-trips."""
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", line=e.lineno, col=e.colno) from None
    raw = _nfc(raw)
    if not isinstance(raw, dict):
        raise ValidationError("definition must be a JSON object")
    if "dsi" not in raw:
        raise ValidationError("definition needs a dsi")
    known = {"dsi", "sameAs", "pair", "owner", "metric", "attributes", "relation", "dimensions"}
    dims = tuple(
        _parse_dimension(d, "dimensions") for d in raw.get("dimensions", [])
    )
    return DomainSpaceDef(
        dsi=str(raw["dsi"]),
        same_as=_parse_same_as(raw["sameAs"], "sameAs") if "sameAs" in raw else None,
        pair=_parse_pair(raw.get("pair"), "pair"),
        owner=int(raw.get("owner", 0)),
        metric=raw.get("metric"),
        attributes=tuple(raw.get("attributes", [])),
        relation=_parse_pair(raw["relation"], "relation") if "relation" in raw else None,
        dimensions=dims,
        extra=tuple(sorted((k, v) for k, v in raw.items() if k not in known)),
    )


# ---------------------------------------------------------------------------
# serialization


def _keycomment_payload(kc: Keycomment) -> dict:
    kws = []
    for kw in kc.keywords:
        item = {"text": kw.text}
        if kw.url is not None:
            item["url"] = kw.url
        kws.append(item)
    return {"keywords": kws, "comment": kc.comment}


def _pair_payload(pair: KeycommentPair) -> dict:
    return {
        "fixed": _keycomment_payload(pair.fixed),
        "changeable": _keycomment_payload(pair.changeable),
        "state": pair.state,
    }


def _same_as_payload(link: AffineLink) -> dict:
    return {"a": link.a, "b": link.b, "url": link.url}


def _content_payload(content: Content) -> dict:
    if isinstance(content, LeafContent):
        body: dict[str, Any] = {"kind": content.kind}
        if content.min is not None:
            body["min"] = content.min
        if content.max is not None:
            body["max"] = content.max
        if content.date_format is not None:
            body["dateFormat"] = content.date_format
        if content.intervals:
            ivs = []
            for iv in content.intervals:
                item: dict[str, Any] = {"label": iv.label}
                if iv.lower is not None:
                    item["lower"] = iv.lower
                if iv.upper is not None:
                    item["upper"] = iv.upper
                ivs.append(item)
            body["intervals"] = ivs
        body.update(dict(content.extra))
        return {"leaf": body}
    if isinstance(content, BranchContent):
        return {"branch": {"dsi": content.dsi}}
    if isinstance(content, ExternalContent):
        return {"external": {"url": content.url}}
    return {"computed": {"expr": content.expr}}


def _dimension_payload(d: DimensionDef) -> dict:
    body: dict[str, Any] = {
        "di": d.di,
        "pair": _pair_payload(d.pair),
        "weight": d.weight,
        "content": _content_payload(d.content),
    }
    if d.rank is not None:
        body["rank"] = d.rank
    if d.same_as is not None:
        body["sameAs"] = _same_as_payload(d.same_as)
    body.update(dict(d.extra))
    return body


def definition_payload(defn: DomainSpaceDef) -> dict:
    body: dict[str, Any] = {
        "dsi": defn.dsi,
        "pair": _pair_payload(defn.pair),
        "owner": defn.owner,
        "attributes": list(defn.attributes),
        "dimensions": [_dimension_payload(d) for d in defn.dimensions],
    }
    if defn.metric is not None:
        body["metric"] = defn.metric
    if defn.relation is not None:
        body["relation"] = _pair_payload(defn.relation)
    if defn.same_as is not None:
        body["sameAs"] = _same_as_payload(defn.same_as)
    body.update(dict(defn.extra))
    return body


def serialize_ds_definition(defn: DomainSpaceDef) -> str:
    """Canonical document: sorted keys, 2-space indent, LF, trailing newline."""
    return canonical_json(definition_payload(defn))


# ---------------------------------------------------------------------------
# fixed-part checksum


def fixed_part_checksum(defn: DomainSpaceDef) -> str:
    """SHA-256 (hex) over the immutable parts of a definition.

    Covers the fixed keycomments, metric and attribute strings, and the
    original dimension order with each dimension's content descriptor.
    Changeable keycomments, states, ranks, weights and sameAs links are
    excluded, so edits to those leave the digest unchanged.
    """
    payload = {
        "fixed": _keycomment_payload(defn.pair.fixed),
        "metric": defn.metric or "",
        "attributes": list(defn.attributes),
        "relation": _keycomment_payload(defn.relation.fixed) if defn.relation else None,
        "dimensions": [
            {
                "di": d.di,
                "content": _content_payload(d.content),
                "fixed": _keycomment_payload(d.pair.fixed),
            }
            for d in defn.dimensions
        ],
    }
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# registry


class Registry:
    """Definition store: single writer, append-only evolution per DSI.

    Every accepted version keeps all prior dimensions unchanged and in
    place; fixed keycomments freeze once their pair leaves draft state.
    """

    def __init__(self):
        self._versions: dict[str, list[DomainSpaceDef]] = {}
        self._ids: list[str] = []  # local integer id -> dsi, in registration order
        self._flat_cache: dict[tuple[str, int, int], FlatSchema] = {}

    def __contains__(self, dsi: str) -> bool:
        return dsi in self._versions

    def dsis(self) -> list[str]:
        return list(self._ids)

    def local_id(self, dsi: str) -> int:
        try:
            return self._ids.index(dsi)
        except ValueError:
            raise UnknownReference(f"unknown DSI {dsi!r}") from None

    def resolve(self, ref: str | int) -> str:
        """Accept a DSI URL or a local integer id."""
        if isinstance(ref, int) or (isinstance(ref, str) and ref.isdigit()):
            idx = int(ref)
            if 0 <= idx < len(self._ids):
                return self._ids[idx]
            raise UnknownReference(f"unknown definition id {ref}")
        if ref in self._versions:
            return ref
        raise UnknownReference(f"unknown DSI {ref!r}")

    def get(self, ref: str | int) -> DomainSpaceDef:
        return self._versions[self.resolve(ref)][-1]

    def versions(self, dsi: str) -> list[DomainSpaceDef]:
        return list(self._versions[self.resolve(dsi)])

    def register(self, defn: DomainSpaceDef | str, actor: int | None = None) -> int:
        """Add a definition or a new version of one; returns the local id."""
        if isinstance(defn, str):
            defn = parse_ds_definition(defn)
        prior = self._versions.get(defn.dsi)
        if prior:
            self._check_evolution(prior[-1], defn, actor)
            prior.append(defn)
        else:
            self._versions[defn.dsi] = [defn]
            self._ids.append(defn.dsi)
        return self._ids.index(defn.dsi)

    @staticmethod
    def _check_evolution(old: DomainSpaceDef, new: DomainSpaceDef, actor: int | None) -> None:
        if actor is not None and actor != old.owner:
            raise FixedPartViolation(
                f"only owner {old.owner} may update {old.dsi}; got {actor}"
            )
        if len(new.dimensions) < len(old.dimensions):
            raise FixedPartViolation("dimensions cannot be deleted")
        _check_pair_evolution(old.pair, new.pair, f"{old.dsi} pair")
        for i, od in enumerate(old.dimensions):
            nd = new.dimensions[i]
            if nd.di != od.di:
                raise FixedPartViolation(
                    f"dimension {i} renamed/reordered: {od.di!r} -> {nd.di!r}"
                )
            if nd.content != od.content:
                raise FixedPartViolation(f"dimension {od.di!r}: content is fixed")
            _check_pair_evolution(od.pair, nd.pair, f"dimension {od.di!r} pair")

    def flatten(self, ref: str | int, depth_limit: int = DEFAULT_DEPTH_LIMIT) -> FlatSchema:
        dsi = self.resolve(ref)
        key = (dsi, len(self._versions[dsi]), depth_limit)
        if key not in self._flat_cache:
            self._flat_cache[key] = flatten(self.get(dsi), self, depth_limit)
        return self._flat_cache[key]


def _check_pair_evolution(old: KeycommentPair, new: KeycommentPair, where: str) -> None:
    transitions = {"draft": STATES, "ok": ("ok", "deprecated"), "deprecated": ("deprecated",)}
    if new.state not in transitions[old.state]:
        raise FixedPartViolation(f"{where}: illegal state change {old.state} -> {new.state}")
    if old.state != "draft" and new.fixed != old.fixed:
        raise FixedPartViolation(f"{where}: fixed keycomment is immutable past draft")


# ---------------------------------------------------------------------------
# flattening


def flatten(
    defn: DomainSpaceDef, registry: Registry, depth_limit: int = DEFAULT_DEPTH_LIMIT
) -> FlatSchema:
    """Depth-first expansion of branches into the leaf list plus metric tree.

    Branch expansion beyond depth_limit layers is cut and the cut path is
    recorded, which terminates circular definitions.
    """
    if depth_limit < 1:
        raise ValidationError("depth_limit must be >= 1")
    leaves: list[FlatLeaf] = []
    cycles: list[str] = []
    branches: list[FlatBranch] = []

    def build(space: DomainSpaceDef, prefix: str, depth: int) -> metric.MetricNode | None:
        leaf_dims: list[metric.LeafDim] = []
        children: list[tuple[float, metric.MetricNode]] = []
        local_leaves: list[FlatLeaf] = []
        for dim in space.dimensions:
            path = prefix + dim.di
            content = dim.content
            if isinstance(content, ExternalContent):
                target_dsi, _, target_di = content.url.partition("#")
                target = registry.get(target_dsi).dimension(target_di)
                if not isinstance(target.content, (LeafContent, ComputedContent)):
                    raise ValidationError(f"external dimension {content.url} is not a leaf")
                lf = FlatLeaf(path=path, di=dim.di, url=content.url,
                              defn=target, space_dsi=target_dsi)
                leaves.append(lf)
                local_leaves.append(lf)
                kind = target.content.kind if isinstance(target.content, LeafContent) else "float-max"
                leaf_dims.append(
                    metric.LeafDim(path, dim.weight, discrete=kind in DISCRETE_KINDS)
                )
            elif isinstance(content, (LeafContent, ComputedContent)):
                lf = FlatLeaf(path=path, di=dim.di, url=space.dimension_url(dim.di),
                              defn=dim, space_dsi=space.dsi)
                leaves.append(lf)
                local_leaves.append(lf)
                kind = content.kind if isinstance(content, LeafContent) else "float-max"
                leaf_dims.append(
                    metric.LeafDim(path, dim.weight, discrete=kind in DISCRETE_KINDS)
                )
            else:  # branch
                branches.append(FlatBranch(path=path, di=dim.di, dsi=content.dsi))
                if depth + 1 > depth_limit:
                    cycles.append(path)
                    continue
                sub = registry.get(content.dsi)
                node = build(sub, path + "/", depth + 1)
                if node is not None:
                    children.append((dim.weight, node))
        if space.metric == "GPS":
            if len(local_leaves) != 2 or children:
                raise ValidationError(f"{space.dsi}: GPS metric needs exactly 2 leaf dimensions")
            return metric.GeodesicLeaf(lat=local_leaves[0].path, lon=local_leaves[1].path)
        order = space.metric_order
        if leaf_dims:
            leaf_node = metric.MinkowskiLeaf(order, tuple(leaf_dims))
            if not children:
                return leaf_node
            children.insert(0, (1.0, leaf_node))
        if not children:
            return None
        return metric.Composite(order, tuple(children))

    tree = build(defn, "", 1)
    return FlatSchema(dsi=defn.dsi, leaves=tuple(leaves), tree=tree,
                      cycles=tuple(cycles), branches=tuple(branches))


# ---------------------------------------------------------------------------
# sameAs resolution


@dataclass(frozen=True)
class ColumnRoute:
    canonical: str
    a: float  # canonical_value = a * value + b
    b: float


class SameAsMap:
    """Maps every dimension URL to its canonical index column and the affine
    transform into the canonical unit."""

    def __init__(self, routes: dict[str, ColumnRoute]):
        self._routes = routes

    def route(self, url: str) -> ColumnRoute:
        return self._routes.get(url) or ColumnRoute(url, 1.0, 0.0)

    def items(self):
        return self._routes.items()

    def __len__(self):
        return len(self._routes)


def resolve_same_as(registry: Registry) -> SameAsMap:
    """Union sameAs-linked dimension URLs into canonical columns.

    Dimension links relate single dimensions; a space-level link pairs the
    two spaces' dimensions by original position. The canonical member of a
    component is the lexicographically smallest URL that is not itself the
    target of a link (falling back to the smallest member in pure cycles).
    """
    # edges: (u, v, a, b) meaning value_u = a * value_v + b
    edges: list[tuple[str, str, float, float]] = []
    nodes: set[str] = set()
    targets: set[str] = set()
    for dsi in registry.dsis():
        space = registry.get(dsi)
        for dim in space.dimensions:
            nodes.add(space.dimension_url(dim.di))
        if space.same_as is not None:
            link = space.same_as
            try:
                other = registry.get(link.url)
            except UnknownReference:
                raise UnknownReference(f"sameAs target {link.url!r} not registered") from None
            for this_dim, other_dim in zip(space.dimensions, other.dimensions):
                u = space.dimension_url(this_dim.di)
                v = other.dimension_url(other_dim.di)
                edges.append((u, v, link.a, link.b))
                nodes.update((u, v))
                targets.add(v)
        for dim in space.dimensions:
            if dim.same_as is None:
                continue
            u = space.dimension_url(dim.di)
            v = dim.same_as.url
            edges.append((u, v, dim.same_as.a, dim.same_as.b))
            nodes.update((u, v))
            targets.add(v)

    adj: dict[str, list[tuple[str, float, float]]] = {n: [] for n in nodes}
    for u, v, a, b in edges:
        adj[u].append((v, a, b))  # u = a*v + b
        adj[v].append((u, 1.0 / a, -b / a))  # v = (u - b)/a
    for lst in adj.values():
        lst.sort()

    routes: dict[str, ColumnRoute] = {}
    seen: set[str] = set()
    for start in sorted(nodes):
        if start in seen:
            continue
        component = []
        stack = [start]
        comp_seen = {start}
        while stack:
            n = stack.pop()
            component.append(n)
            for m, _, _ in adj[n]:
                if m not in comp_seen:
                    comp_seen.add(m)
                    stack.append(m)
        if len(component) == 1:
            seen.add(start)
            continue
        roots = sorted(n for n in component if n not in targets)
        canonical = roots[0] if roots else min(component)
        # BFS composing transforms: canonical_value = a*value + b per member
        trans: dict[str, tuple[float, float]] = {canonical: (1.0, 0.0)}
        queue = [canonical]
        while queue:
            u = queue.pop(0)
            au, bu = trans[u]
            for v, a, b in adj[u]:
                # u = a*v + b  =>  canonical = au*(a*v + b) + bu
                cand = (au * a, au * b + bu)
                if v in trans:
                    ca, cb = trans[v]
                    scale = max(1.0, abs(ca), abs(cb))
                    if abs(ca - cand[0]) > 1e-9 * scale or abs(cb - cand[1]) > 1e-9 * scale:
                        raise ValidationError(
                            f"inconsistent sameAs cycle through {v!r}"
                        )
                    continue
                trans[v] = cand
                queue.append(v)
        for n in component:
            a, b = trans[n]
            routes[n] = ColumnRoute(canonical, a, b)
        seen.update(component)
    return SameAsMap(routes)


# ---------------------------------------------------------------------------
# evaluation spaces


def _grade_intervals() -> tuple[Interval, ...]:
    return tuple(Interval(label=str(i)) for i in range(16))


def _eval_pair(kw0: str, comment: str = "") -> KeycommentPair:
    kc = Keycomment(keywords=(Keyword(text=kw0),), comment=comment)
    return KeycommentPair(fixed=kc, changeable=kc, state="ok")


def derive_evaluation_ds(
    defn: DomainSpaceDef, registry: Registry, depth_limit: int = DEFAULT_DEPTH_LIMIT
) -> DomainSpaceDef:
    """Derive the evaluation space of a definition.

    First dimension is the evaluated DV's URL; then one branch per original
    leaf with correct-value / value-ratio / precision-grade /
    reliability-grade dimensions. The per-leaf sub-spaces are registered as
    a side effect so the result can be flattened; the evaluation space
    itself is returned unregistered.
    """
    flat = flatten(defn, registry, depth_limit)
    dims: list[DimensionDef] = [
        DimensionDef(
            di="evaluated-dv",
            pair=_eval_pair("evaluated-dv", "URL of the evaluated domain vector"),
            weight=1.0,
            content=LeafContent(kind="text"),
        )
    ]
    used_dis = {"evaluated-dv"}
    for lf in flat.leaves:
        safe = re.sub(r"[^A-Za-z0-9_-]", "_", lf.path)
        n = 2
        while safe in used_dis:
            safe = f"{safe}-{n}"
            n += 1
        used_dis.add(safe)
        sub_dsi = f"{defn.dsi}?eval={safe}"
        if isinstance(lf.defn.content, LeafContent):
            correct_content = lf.defn.content
        else:  # computed leaves evaluate to plain floats
            correct_content = LeafContent(kind="float-max")
        sub = DomainSpaceDef(
            dsi=sub_dsi,
            pair=_eval_pair(f"evaluation-of-{safe}"),
            owner=defn.owner,
            metric="M1",
            dimensions=(
                DimensionDef(
                    di="correct-value",
                    pair=lf.defn.pair,
                    weight=1.0,
                    content=correct_content,
                ),
                DimensionDef(
                    di="value-ratio",
                    pair=_eval_pair("value-ratio", "|value| / |correct value|"),
                    weight=1.0,
                    content=LeafContent(kind="float-max", min=0.0, max=RATIO_CAP),
                ),
                DimensionDef(
                    di="precision-grade",
                    pair=_eval_pair("precision-grade"),
                    weight=1.0,
                    content=LeafContent(kind="list", intervals=_grade_intervals()),
                ),
                DimensionDef(
                    di="reliability-grade",
                    pair=_eval_pair("reliability-grade"),
                    weight=1.0,
                    content=LeafContent(kind="list", intervals=_grade_intervals()),
                ),
            ),
        )
        if sub_dsi not in registry:
            registry.register(sub)
        dims.append(
            DimensionDef(di=safe, pair=_eval_pair(safe), weight=1.0,
                         content=BranchContent(dsi=sub_dsi))
        )
    return DomainSpaceDef(
        dsi=f"{defn.dsi}?eval",
        pair=_eval_pair(f"evaluation-of-{defn.pair.fixed.kw0}"),
        owner=defn.owner,
        metric="M1",
        dimensions=tuple(dims),
    )
