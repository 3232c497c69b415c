"""Mapping between RDF-style triples and DV stores.

Subjects sort lexicographically and become one DV-group each (so every
triple of a subject shares one record counter); each distinct predicate
becomes a text dimension of a generated space, chunked into chained spaces
of at most 256 dimensions. Multi-valued (subject, predicate) pairs expand
into replica dimensions so the mapping stays bijective. Duplicate triples
collapse.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

from .codec import DimensionInstance, DomainVector, DVGroup
from .errors import ParseError, ValidationError
from .schema import (
    DimensionDef,
    DomainSpaceDef,
    Keycomment,
    KeycommentPair,
    Keyword,
    LeafContent,
)

CHUNK_SIZE = 256
BRIDGE_DSI_PREFIX = "urn:dspace:rdf"

_DIM_DI_RE = re.compile(r"^p(\d+)(?:_r(\d+))?$")


@dataclass(frozen=True, order=True)
class Triple:
    subject: str
    predicate: str
    object: str

    def __post_init__(self):
        if not self.subject or not self.predicate:
            raise ValidationError("triple needs a non-empty subject and predicate")


def _pair(kw0: str, comment: str = "") -> KeycommentPair:
    kc = Keycomment(keywords=(Keyword(text=kw0),), comment=comment)
    return KeycommentPair(fixed=kc, changeable=kc, state="ok")


def triples_to_dvs(
    triples: Iterable[Triple], dsi_prefix: str = BRIDGE_DSI_PREFIX
) -> tuple[list[DomainSpaceDef], list[DVGroup]]:
    """Map triples to generated space definitions plus a DV-group store.

    Returns the chain of generated spaces (one when at most 256 dimensions
    suffice) and one group per subject, in ascending subject order.
    """
    uniq = sorted(set(triples))
    # replica count per predicate = max objects any subject attaches to it
    per_sp: dict[tuple[str, str], list[str]] = {}
    for t in uniq:
        per_sp.setdefault((t.subject, t.predicate), []).append(t.object)
    predicates = sorted({t.predicate for t in uniq})
    replicas = {p: 1 for p in predicates}
    for (s, p), objs in per_sp.items():
        replicas[p] = max(replicas[p], len(objs))

    # one dimension per (predicate, replica), chunked into spaces of <= 256
    pred_index = {p: i for i, p in enumerate(predicates)}
    dim_keys: list[tuple[str, int]] = []
    dim_di = {}
    dim_kw0 = {}
    for p in predicates:
        for k in range(1, replicas[p] + 1):
            dim_keys.append((p, k))
            dim_di[(p, k)] = f"p{pred_index[p]}" if k == 1 else f"p{pred_index[p]}_r{k}"
            dim_kw0[(p, k)] = p if k == 1 else f"{p}#{k}"

    chunks = [dim_keys[i : i + CHUNK_SIZE] for i in range(0, len(dim_keys), CHUNK_SIZE)] or [[]]
    spaces = []
    for part, keys in enumerate(chunks):
        dims = tuple(
            DimensionDef(
                di=dim_di[key],
                pair=_pair(dim_kw0[key]),
                weight=1.0,
                content=LeafContent(kind="text"),
            )
            for key in keys
        )
        spaces.append(
            DomainSpaceDef(
                dsi=f"{dsi_prefix}/part{part}",
                pair=_pair(f"rdf-bridge-part{part}", "generated from a triple store"),
                owner=0,
                metric="M1",
                dimensions=dims,
            )
        )

    chunk_of = {}
    for part, keys in enumerate(chunks):
        for key in keys:
            chunk_of[key] = part

    groups = []
    for subject in sorted({t.subject for t in uniq}):
        members: dict[int, DomainVector] = {}
        for p in predicates:
            objs = per_sp.get((subject, p))
            if not objs:
                continue
            for k, obj in enumerate(sorted(objs), start=1):
                key = (p, k)
                part = chunk_of[key]
                dv = members.get(part)
                if dv is None:
                    dv = DomainVector(dsi=spaces[part].dsi, resource=subject)
                    members[part] = dv
                dv.dims.append(DimensionInstance(path=dim_di[key], value=obj))
        groups.append(DVGroup(members=[members[p] for p in sorted(members)], resource=subject))
    return spaces, groups


def dvs_to_triples(spaces: list[DomainSpaceDef], groups: Iterable[DVGroup]) -> list[Triple]:
    """Exact inverse of triples_to_dvs over a bridge-generated store."""
    predicate_of: dict[tuple[str, str], str] = {}
    for space in spaces:
        for dim in space.dimensions:
            if not _DIM_DI_RE.match(dim.di):
                raise ValidationError(
                    f"store is not bridge-generated: unexpected DI {dim.di!r}"
                )
            kw0 = dim.pair.fixed.kw0
            predicate = kw0.rsplit("#", 1)[0] if _DIM_DI_RE.match(dim.di).group(2) else kw0
            predicate_of[(space.dsi, dim.di)] = predicate
    out = []
    for group in groups:
        subject = group.resource
        if not subject:
            raise ValidationError("bridge groups carry the subject as resource")
        for dv in group.members:
            for inst in dv.dims:
                key = (dv.dsi, inst.path)
                if key not in predicate_of:
                    raise ValidationError(f"unknown bridge dimension {key}")
                out.append(Triple(subject, predicate_of[key], str(inst.value)))
    return out


# ---------------------------------------------------------------------------
# N-Triples lines


_IRI_RE = re.compile(r"^<([^<>\s]*)>$")
_LITERAL_RE = re.compile(r'^"((?:[^"\\]|\\.)*)"$')
_ESCAPES = {"n": "\n", "r": "\r", "t": "\t", '"': '"', "\\": "\\"}


def _unescape(text: str) -> str:
    out, i = [], 0
    while i < len(text):
        ch = text[i]
        if ch == "\\":
            i += 1
            if i >= len(text) or text[i] not in _ESCAPES:
                raise ParseError(f"bad escape in literal: {text!r}")
            out.append(_ESCAPES[text[i]])
        else:
            out.append(ch)
        i += 1
    return "".join(out)


def _escape(text: str) -> str:
    return (
        text.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\r", "\\r")
        .replace("\t", "\\t")
    )


def _split_terms(line: str) -> list[str]:
    terms, buf, mode = [], [], None  # mode: None | "<" | '"'
    i = 0
    while i < len(line):
        ch = line[i]
        if mode == '"':
            buf.append(ch)
            if ch == "\\":
                i += 1
                if i < len(line):
                    buf.append(line[i])
            elif ch == '"':
                mode = None
        elif mode == "<":
            buf.append(ch)
            if ch == ">":
                mode = None
        elif ch in "<\"":
            buf.append(ch)
            mode = ch if ch == "<" else '"'
        elif ch.isspace():
            if buf:
                terms.append("".join(buf))
                buf = []
        else:
            buf.append(ch)
        i += 1
    if buf:
        terms.append("".join(buf))
    return terms


def read_ntriples(text: str) -> list[Triple]:
    triples = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        terms = _split_terms(line)
        if len(terms) != 4 or terms[3] != ".":
            raise ParseError(f"not an N-Triples line: {line!r}", line=lineno)
        parts = []
        for term in terms[:3]:
            m = _IRI_RE.match(term)
            if m:
                parts.append(m.group(1))
                continue
            m = _LITERAL_RE.match(term)
            if m:
                parts.append(_unescape(m.group(1)))
                continue
            raise ParseError(f"bad term {term!r}", line=lineno)
        triples.append(Triple(*parts))
    return triples


def write_ntriples(triples: Iterable[Triple]) -> str:
    lines = []
    for t in triples:
        obj = f"<{t.object}>" if re.match(r"^[a-zA-Z][a-zA-Z0-9+.-]*:", t.object) else f'"{_escape(t.object)}"'
        lines.append(f"<{t.subject}> <{t.predicate}> {obj} .")
    return "\n".join(lines) + ("\n" if lines else "")
