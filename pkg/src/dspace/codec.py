"""Domain vector codec: the short text grammar, embedded form, and the
canonical scalar encodings per dimension kind.

A DV line is the DSI followed by semicolon-separated fields. Untagged value
fields bind positionally to the flattened leaf order; `DI=` tags bind
explicitly. Reserved `@` tags carry DV metadata (they cannot collide with
dimension identifiers, whose charset excludes `@`): `@kc`, `@owner`, `@o`,
`@w`, `@vl`. An untagged `u<url>` field is the described resource, an
untagged `d<date>` field the DV date. A value may carry a reliability
suffix `s<decimal>` (standard-deviation estimate).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable

from .errors import ParseError, UnknownReference, ValidationError
from .schema import (
    FlatLeaf,
    FlatSchema,
    Keycomment,
    Keyword,
    LeafContent,
    ComputedContent,
)

TUX_BASE = 37
TUX_LEN = 8
TUX_MAX = TUX_BASE**TUX_LEN - 1  # < 2**42

_TUX_RE = re.compile(r"^[a-z0-9]{1,8}$")
_INT_RE = re.compile(r"^[+-]?\d+$")
_MONEY_RE = re.compile(r"^[+-]?\d+(\.\d{1,2})?$")
_FLOAT_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_DATE_RE = re.compile(
    r"^(\d{4})(?:-(\d{2})(?:-(\d{2})(?: (\d{2})(?::(\d{2})(?::(\d{2}))?)?)?)?)?$"
)
_TIME_RE = re.compile(r"^(\d{2}):(\d{2})(?::(\d{2}))?$")
_DI_TAG_RE = re.compile(r"^([A-Za-z0-9_/@-]+)=")
# identifiers (DSIs) may be any URI, opaque urn: forms included; the u-prefix
# resource marker demands a hierarchical locator so the two cannot collide
_URI_RE = re.compile(r"^[a-zA-Z][a-zA-Z0-9+.-]*:\S+$")
_URL_RE = re.compile(r"^[a-zA-Z][a-zA-Z0-9+.-]*://\S+$")
_EMBEDDED_RE = re.compile(r"<v\s+(.*?)>(.*?)</v>", re.DOTALL)

_DATE_FIELD_COUNT = {
    "yyyy-mm-dd hh:mm:ss": 6,
    "yyyy-mm-dd hh:mm": 5,
    "yyyy-mm-dd hh": 4,
    "yyyy-mm-dd": 3,
    "yyyy-mm": 2,
    "yyyy": 1,
}
_TIME_FIELD_COUNT = {"hh:mm:ss": 3, "hh:mm": 2}
_FULL_DATE_FORMAT = "yyyy-mm-dd hh:mm:ss"


# ---------------------------------------------------------------------------
# tux


def _tux_code(ch: str) -> int:
    if "0" <= ch <= "9":
        return ord(ch) - ord("0") + 1
    if "a" <= ch <= "z":
        return ord(ch) - ord("a") + 11
    raise ParseError(f"invalid tux character {ch!r}")


def tux_encode(s: str) -> int:
    """Order-preserving encoding of 1..8 chars of [a-z0-9] into an integer.

    Polynomial over base 37 with pad=0, so shorter strings sort before
    their extensions and prefixes span contiguous numeric ranges.
    """
    if not _TUX_RE.match(s):
        raise ParseError(f"not a tux value: {s!r}")
    value = 0
    for i in range(TUX_LEN):
        code = _tux_code(s[i]) if i < len(s) else 0
        value += code * TUX_BASE ** (TUX_LEN - 1 - i)
    assert value <= TUX_MAX < 2**42
    return value


def tux_decode(value: int | float) -> str:
    v = int(value)
    if v != value or not (0 < v <= TUX_MAX):
        raise ValidationError(f"not a tux scalar: {value!r}")
    codes = []
    for i in range(TUX_LEN):
        v, rem = divmod(v, TUX_BASE)
        codes.append(rem)
    codes.reverse()
    while codes and codes[-1] == 0:
        codes.pop()
    chars = []
    for code in codes:
        if code == 0:
            raise ValidationError(f"scalar {value!r} has interior padding")
        chars.append(chr(code - 1 + ord("0")) if code <= 10 else chr(code - 11 + ord("a")))
    return "".join(chars)


def tux_prefix_range(prefix: str) -> tuple[int, int]:
    """Inclusive scalar range of all tux values starting with `prefix`."""
    lo = tux_encode(prefix)
    return lo, lo + TUX_BASE ** (TUX_LEN - len(prefix)) - 1


# ---------------------------------------------------------------------------
# dates


def _date_fields(raw: str, fmt: str) -> tuple[int, ...]:
    if fmt in _TIME_FIELD_COUNT:
        m = _TIME_RE.match(raw)
        if not m:
            raise ParseError(f"not a {fmt} time: {raw!r}")
        given = [g for g in m.groups() if g is not None]
        if len(given) > _TIME_FIELD_COUNT[fmt]:
            raise ParseError(f"time {raw!r} exceeds format {fmt}")
        return tuple(int(g) for g in given)
    m = _DATE_RE.match(raw)
    if not m:
        raise ParseError(f"not a {fmt} date: {raw!r}")
    given = [g for g in m.groups() if g is not None]
    if len(given) > _DATE_FIELD_COUNT[fmt]:
        raise ParseError(f"date {raw!r} exceeds format {fmt}")
    return tuple(int(g) for g in given)


def date_encode(raw: str, fmt: str = _FULL_DATE_FORMAT) -> float:
    """Seconds since 1970-01-01T00:00:00 UTC; missing trailing fields are
    the interval start. Time-only formats count seconds from midnight."""
    fields = _date_fields(raw, fmt)
    if fmt in _TIME_FIELD_COUNT:
        h, mi, s = (fields + (0, 0))[:3]
        if h > 23 or mi > 59 or s > 59:
            raise ParseError(f"invalid time {raw!r}")
        return float(h * 3600 + mi * 60 + s)
    defaults = (1, 1, 0, 0, 0)  # month, day, hour, minute, second
    y, mo, d, h, mi, s = (tuple(fields) + defaults[len(fields) - 1 :])[:6]
    try:
        dt = datetime(y, mo, d, h, mi, s, tzinfo=timezone.utc)
    except ValueError as e:
        raise ParseError(f"invalid date {raw!r}: {e}") from None
    return float(int(dt.timestamp()))


def date_decode(scalar: float, fmt: str = _FULL_DATE_FORMAT) -> str:
    v = int(scalar)
    if v != scalar:
        raise ValidationError(f"date scalar must be integral seconds: {scalar!r}")
    if fmt in _TIME_FIELD_COUNT:
        if not (0 <= v < 86400):
            raise ValidationError(f"time-of-day scalar out of range: {scalar!r}")
        h, rem = divmod(v, 3600)
        mi, s = divmod(rem, 60)
        return f"{h:02d}:{mi:02d}:{s:02d}" if fmt == "hh:mm:ss" else f"{h:02d}:{mi:02d}"
    dt = datetime.fromtimestamp(v, tz=timezone.utc)
    out = f"{dt.year:04d}"
    if fmt == "yyyy":
        return out
    out += f"-{dt.month:02d}"
    if fmt == "yyyy-mm":
        return out
    out += f"-{dt.day:02d}"
    if fmt == "yyyy-mm-dd":
        return out
    out += f" {dt.hour:02d}"
    if fmt == "yyyy-mm-dd hh":
        return out
    out += f":{dt.minute:02d}"
    if fmt == "yyyy-mm-dd hh:mm":
        return out
    return out + f":{dt.second:02d}"


# ---------------------------------------------------------------------------
# per-kind scalar encoding


def _leaf_content(defn) -> LeafContent:
    content = defn.content if hasattr(defn, "content") else defn
    if isinstance(content, ComputedContent):
        return LeafContent(kind="float-max")
    if not isinstance(content, LeafContent):
        raise ValidationError("not a leaf dimension")
    return content


def _interval_sim_value(content: LeafContent, idx: int) -> float:
    lower, upper = content.effective_bounds(idx)
    if lower is not None and upper is not None:
        return (lower + upper) / 2.0
    if lower is not None:
        return lower
    if upper is not None:
        return upper
    return 0.0


def encode_value(defn, raw: str) -> float:
    """Canonical 64-bit scalar of a lexical value for one leaf dimension.

    Text kind has no scalar form here; the index interns it instead.
    """
    content = _leaf_content(defn)
    kind = content.kind
    if kind == "integer":
        if not _INT_RE.match(raw):
            raise ParseError(f"not an integer: {raw!r}")
        value = float(int(raw))
    elif kind == "money":
        if not _MONEY_RE.match(raw):
            raise ParseError(f"not a money value: {raw!r}")
        value = round(float(raw), 2)
    elif kind in ("float-medium", "float-max"):
        if not _FLOAT_RE.match(raw):
            raise ParseError(f"not a number: {raw!r}")
        value = float(raw)
        if not math.isfinite(value):
            raise ParseError(f"non-finite number: {raw!r}")
    elif kind == "date":
        value = date_encode(raw, content.date_format or _FULL_DATE_FORMAT)
    elif kind == "list":
        labels = [iv.label for iv in content.intervals]
        if raw not in labels:
            raise UnknownReference(f"unknown list label {raw!r}")
        idx = labels.index(raw)
        value = _interval_sim_value(content, idx) if content.interval_mode else float(idx)
    elif kind == "tux":
        value = float(tux_encode(raw))
    elif kind == "text":
        raise ValidationError("text values are interned at index build, not scalar-encoded")
    else:  # pragma: no cover - kinds are validated at parse
        raise ValidationError(f"unknown kind {kind!r}")
    if content.min is not None and value < content.min:
        raise ValidationError(f"value {raw!r} below min {content.min}")
    if content.max is not None and value > content.max:
        raise ValidationError(f"value {raw!r} above max {content.max}")
    return value


def decode_value(defn, scalar: float) -> str:
    """Inverse of encode_value on the canonical lexical form."""
    content = _leaf_content(defn)
    kind = content.kind
    if kind == "integer":
        v = int(scalar)
        if v != scalar:
            raise ValidationError(f"not an integer scalar: {scalar!r}")
        return str(v)
    if kind == "money":
        return f"{scalar:.2f}"
    if kind == "float-medium":
        return f"{scalar:.8g}"
    if kind == "float-max":
        return repr(float(scalar))
    if kind == "date":
        return date_decode(scalar, content.date_format or _FULL_DATE_FORMAT)
    if kind == "list":
        if content.interval_mode:
            for idx in range(len(content.intervals)):
                if _interval_sim_value(content, idx) == scalar:
                    return content.intervals[idx].label
            raise ValidationError(f"no interval maps to scalar {scalar!r}")
        idx = int(scalar)
        if idx != scalar or not (0 <= idx < len(content.intervals)):
            raise ValidationError(f"list index out of range: {scalar!r}")
        return content.intervals[idx].label
    if kind == "tux":
        return tux_decode(scalar)
    raise ValidationError(f"kind {kind!r} has no scalar decoding")


def interval_search_params(defn, label: str, slot: str) -> float | None:
    """Search-mask value an interval label contributes to one slot.

    sim: interval mean (or the single existing border); min/max: the
    corresponding border if it exists, else None.
    """
    content = _leaf_content(defn)
    if content.kind != "list" or not content.interval_mode:
        raise ValidationError("dimension has no interval table")
    labels = [iv.label for iv in content.intervals]
    if label not in labels:
        raise UnknownReference(f"unknown interval label {label!r}")
    idx = labels.index(label)
    lower, upper = content.effective_bounds(idx)
    if slot == "sim":
        return _interval_sim_value(content, idx)
    if slot == "min":
        return lower
    if slot == "max":
        return upper
    raise ValidationError(f"unknown slot {slot!r}")


# ---------------------------------------------------------------------------
# domain vectors


@dataclass(frozen=True)
class URLRef:
    """A dimension instance given as the URL of another DV."""

    url: str


@dataclass(frozen=True)
class DimensionInstance:
    path: str
    value: float | str | URLRef
    reliability: float | None = None

    def __post_init__(self):
        if self.reliability is not None and not (
            math.isfinite(self.reliability) and self.reliability >= 0
        ):
            raise ValidationError("reliability must be finite and >= 0")


@dataclass
class DomainVector:
    dsi: str
    dims: list[DimensionInstance] = field(default_factory=list)
    vl: str | None = None
    resource: str | None = None
    keycomment: Keycomment | None = None
    owner: int | None = None
    offered: bool | None = None
    wanted: bool | None = None
    date_text: str | None = None

    @property
    def date(self) -> float | None:
        return date_encode(self.date_text) if self.date_text else None

    def value_of(self, path: str):
        for inst in self.dims:
            if inst.path == path:
                return inst.value
        return None


@dataclass
class DVGroup:
    members: list[DomainVector]
    resource: str | None = None

    def __post_init__(self):
        if not self.members:
            raise ValidationError("a DV group needs at least one member")
        seen = set()
        for dv in self.members:
            for inst in dv.dims:
                key = (dv.dsi, inst.path)
                if key in seen:
                    raise ValidationError(f"dimension {key} bound twice in group")
                seen.add(key)


def _split_fields(text: str) -> list[str]:
    """Split on top-level semicolons, honoring double-quoted spans."""
    fields, buf, quoted, escaped = [], [], False, False
    for ch in text:
        if escaped:
            buf.append(ch)
            escaped = False
            continue
        if ch == "\\" and quoted:
            buf.append(ch)
            escaped = True
            continue
        if ch == '"':
            quoted = not quoted
            buf.append(ch)
            continue
        if ch == ";" and not quoted:
            fields.append("".join(buf).strip())
            buf = []
            continue
        buf.append(ch)
    if quoted:
        raise ParseError("unterminated quoted text")
    fields.append("".join(buf).strip())
    return fields


def _unquote(token: str) -> str:
    if len(token) < 2 or token[0] != '"' or token[-1] != '"':
        raise ParseError(f"expected quoted text, got {token!r}")
    out, escaped = [], False
    for ch in token[1:-1]:
        if escaped:
            if ch not in '\\"nrt':
                raise ParseError(f"bad escape \\{ch}")
            out.append({"n": "\n", "r": "\r", "t": "\t"}.get(ch, ch))
            escaped = False
        elif ch == "\\":
            escaped = True
        elif ch == '"':
            raise ParseError("unescaped quote inside quoted text")
        else:
            out.append(ch)
    if escaped:
        raise ParseError("dangling escape in quoted text")
    return "".join(out)


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _parse_keycomment_field(raw: str) -> Keycomment:
    # "kw0 | kw1 || comment" - keywords separated by |, comment after ||
    head, sep, comment = raw.partition("||")
    keywords = tuple(Keyword(text=k.strip()) for k in head.split("|") if k.strip())
    if not keywords:
        raise ParseError(f"keycomment needs a first keyword: {raw!r}")
    return Keycomment(keywords=keywords, comment=comment.strip() if sep else "")


def _format_keycomment(kc: Keycomment) -> str:
    head = " | ".join(kw.text for kw in kc.keywords)
    return f"{head} || {kc.comment}" if kc.comment else head


def _format_number(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def _kind_lexical_ok(kind: str, token: str, content: LeafContent) -> bool:
    try:
        encode_value(content, token)
        return True
    except (ParseError, UnknownReference, ValidationError):
        return False


def _parse_scalar_field(token: str, leaf: FlatLeaf) -> tuple[float, float | None]:
    """Parse a value token for one leaf, honoring the reliability suffix."""
    content = _leaf_content(leaf.defn)
    if content.kind == "text":
        return _unquote(token), None  # type: ignore[return-value]
    if content.kind == "tux":
        return encode_value(content, token), None
    if _kind_lexical_ok(content.kind, token, content):
        return encode_value(content, token), None
    idx = token.rfind("s")
    if idx > 0:
        core, rel = token[:idx], token[idx + 1 :]
        if re.match(r"^\d+(\.\d+)?$", rel) and _kind_lexical_ok(content.kind, core, content):
            return encode_value(content, core), float(rel)
    raise ParseError(f"value {token!r} does not fit kind {content.kind!r} of {leaf.path!r}")


def parse_dv(text: str, schema: FlatSchema) -> DomainVector:
    """Parse one DV in the short grammar against a flattened schema."""
    fields = _split_fields(text.strip())
    if not fields or not _URI_RE.match(fields[0]):
        raise ParseError("DV must start with the DSI URL")
    dsi = fields[0]
    if dsi != schema.dsi:
        raise UnknownReference(f"DV names DSI {dsi!r}, schema is {schema.dsi!r}")
    dv = DomainVector(dsi=dsi)
    bound: set[str] = set()
    positional = 0
    for raw in fields[1:]:
        if not raw:
            continue
        m = _DI_TAG_RE.match(raw)
        if m:
            tag, value = m.group(1), raw[m.end() :].strip()
            if tag.startswith("@"):
                _apply_meta(dv, tag, value)
                continue
            if value.startswith("u") and _URL_RE.match(value[1:]):
                branch = schema.resolve_branch(tag)
                if branch.path in bound:
                    raise ParseError(f"dimension {branch.path!r} bound twice")
                dv.dims.append(DimensionInstance(path=branch.path, value=URLRef(value[1:])))
                bound.add(branch.path)
                continue
            leaf = schema.resolve_path(tag)
            if leaf.path in bound:
                raise ParseError(f"dimension {leaf.path!r} bound twice")
            scalar, rel = _parse_scalar_field(value, leaf)
            dv.dims.append(DimensionInstance(path=leaf.path, value=scalar, reliability=rel))
            bound.add(leaf.path)
            continue
        if raw.startswith("d") and _DATE_RE.match(raw[1:]):
            dv.date_text = raw[1:]
            continue
        if raw.startswith("u") and _URL_RE.match(raw[1:]):
            if dv.resource is None:
                dv.resource = raw[1:]
            elif dv.vl is None:
                dv.vl = raw[1:]
            else:
                raise ParseError("more than two untagged URL fields")
            continue
        if positional >= len(schema.leaves):
            raise ParseError(
                f"too many positional values: {positional + 1} > {len(schema.leaves)} leaves"
            )
        leaf = schema.leaves[positional]
        positional += 1
        if leaf.path in bound:
            raise ParseError(f"dimension {leaf.path!r} bound twice")
        scalar, rel = _parse_scalar_field(raw, leaf)
        dv.dims.append(DimensionInstance(path=leaf.path, value=scalar, reliability=rel))
        bound.add(leaf.path)
    # canonical instance order: the original definition order, so permuting
    # DI-tagged fields never changes the parsed DV
    order = {lf.path: i for i, lf in enumerate(schema.leaves)}
    order.update({br.path: len(order) + i for i, br in enumerate(schema.branches)})
    dv.dims.sort(key=lambda inst: order.get(inst.path, len(order)))
    return dv


def _apply_meta(dv: DomainVector, tag: str, value: str) -> None:
    if tag == "@kc":
        dv.keycomment = _parse_keycomment_field(_unquote(value))
    elif tag == "@owner":
        if not _INT_RE.match(value):
            raise ParseError(f"@owner must be an integer, got {value!r}")
        dv.owner = int(value)
    elif tag == "@o":
        dv.offered = value == "1"
    elif tag == "@w":
        dv.wanted = value == "1"
    elif tag == "@vl":
        if not (value.startswith("u") and _URI_RE.match(value[1:])):
            raise ParseError(f"@vl must be a u-prefixed URL, got {value!r}")
        dv.vl = value[1:]
    elif tag == "@resource":
        if not (value.startswith("u") and _URI_RE.match(value[1:])):
            raise ParseError(f"@resource must be a u-prefixed URL, got {value!r}")
        dv.resource = value[1:]
    else:
        raise ParseError(f"unknown reserved tag {tag!r}")


def serialize_dv(
    dv: DomainVector,
    schema: FlatSchema,
    form: str = "short",
    click_text: str = "",
) -> str:
    """Round-trip inverse of parse_dv.

    Values are positional when the defined dimensions are a prefix of the
    original leaf order, DI-tagged otherwise.
    """
    fields = [dv.dsi]
    if dv.resource:
        # opaque URIs must ride a tag: an untagged u-marker only carries
        # hierarchical URLs, everything else would lex as a member boundary
        if _URL_RE.match(dv.resource):
            fields.append("u" + dv.resource)
        else:
            fields.append("@resource=u" + dv.resource)
    if dv.vl:
        fields.append("@vl=u" + dv.vl)
    if dv.date_text:
        fields.append("d" + dv.date_text)
    if dv.keycomment:
        fields.append("@kc=" + _quote(_format_keycomment(dv.keycomment)))
    if dv.owner is not None:
        fields.append(f"@owner={dv.owner}")
    if dv.offered is not None:
        fields.append(f"@o={1 if dv.offered else 0}")
    if dv.wanted is not None:
        fields.append(f"@w={1 if dv.wanted else 0}")
    by_path = {inst.path: inst for inst in dv.dims}
    prefix_paths = [lf.path for lf in schema.leaves[: len(dv.dims)]]
    is_prefix = set(by_path) == set(prefix_paths)

    def value_text(leaf: FlatLeaf, inst: DimensionInstance) -> str:
        content = _leaf_content(leaf.defn)
        if isinstance(inst.value, URLRef):
            return "u" + inst.value.url
        if content.kind == "text":
            out = _quote(str(inst.value))
        else:
            out = decode_value(content, float(inst.value))
        if inst.reliability is not None:
            out += "s" + _format_number(inst.reliability)
        return out

    for leaf in schema.leaves:
        inst = by_path.get(leaf.path)
        if inst is None:
            continue
        text = value_text(leaf, inst)
        fields.append(text if is_prefix else f"{leaf.di}={text}")
    for branch in schema.branches:
        inst = by_path.get(branch.path)
        if inst is not None and isinstance(inst.value, URLRef):
            fields.append(f"{branch.di}=u{inst.value.url}")
    short = "; ".join(fields)
    if form == "embedded":
        return f"<v {short}>{click_text}</v>"
    return short


def extract_embedded(document: str) -> list[tuple[str, str]]:
    """All `<v dv-text>click text</v>` spans of a document, in order."""
    return [(m.group(1).strip(), m.group(2)) for m in _EMBEDDED_RE.finditer(document)]


def parse_dv_group(text: str, schema_lookup: Callable[[str], FlatSchema]) -> DVGroup:
    """Parse a group line: member DVs are separated by their DSI fields.

    An untagged `u`-prefixed URL is a resource marker, not a member
    boundary, even though it lexes as a URL with a `u...` scheme.
    """
    fields = _split_fields(text.strip())
    segments: list[list[str]] = []
    for f in fields:
        is_resource_marker = f.startswith("u") and _URL_RE.match(f[1:])
        if _URI_RE.match(f) and not is_resource_marker:
            segments.append([f])
        else:
            if not segments:
                raise ParseError("DV group must start with a DSI URL")
            segments[-1].append(f)
    members = [parse_dv("; ".join(seg), schema_lookup(seg[0])) for seg in segments]
    resource = next((m.resource for m in members if m.resource), None)
    return DVGroup(members=members, resource=resource)


def serialize_dv_group(group: DVGroup, schema_lookup: Callable[[str], FlatSchema]) -> str:
    parts = []
    for i, dv in enumerate(group.members):
        if i > 0 and dv.resource == group.resource:
            dv = DomainVector(**{**dv.__dict__, "resource": None})
        parts.append(serialize_dv(dv, schema_lookup(dv.dsi)))
    return "; ".join(parts)
