"""HTTP facade over a Store.

All bodies are JSON UTF-8; errors come back as {code, message} with 400 for
validation problems, 404 for unknown ids, 409 for fixed-part mutations and
503 when no snapshot exists yet. Responses are rendered through the same
serializer the CLI uses, so CLI and API output are byte-identical.
"""
from __future__ import annotations

import json
from urllib.parse import unquote

from fastapi import FastAPI, Request, Response

from .errors import (
    DspaceError,
    FixedPartViolation,
    NotComparable,
    ParseError,
    UnknownReference,
    ValidationError,
)
from .search import find_ds, request_from_json, result_to_json
from .store import NoSnapshot, Store

OWNER_HEADER = "x-owner-id"


def to_json_bytes(payload) -> bytes:
    """Canonical response encoding shared by the HTTP API and the CLI."""
    return json.dumps(payload, ensure_ascii=False, sort_keys=True,
                      separators=(",", ":")).encode("utf-8")


def _json_response(payload, status_code: int = 200) -> Response:
    return Response(content=to_json_bytes(payload), status_code=status_code,
                    media_type="application/json")


_STATUS = (
    (NoSnapshot, 503, "no_snapshot"),
    (FixedPartViolation, 409, "fixed_part"),
    (UnknownReference, 404, "not_found"),
    (NotComparable, 400, "not_comparable"),
    (ParseError, 400, "parse_error"),
    (ValidationError, 400, "validation"),
)


def _error_response(exc: DspaceError) -> Response:
    for klass, status, code in _STATUS:
        if isinstance(exc, klass):
            return _json_response({"code": code, "message": str(exc)}, status)
    return _json_response({"code": "internal", "message": str(exc)}, 500)


def create_app(store: Store) -> FastAPI:
    app = FastAPI(title="dspace", docs_url=None, redoc_url=None)

    @app.exception_handler(DspaceError)
    async def _handle(request: Request, exc: DspaceError):
        return _error_response(exc)

    def owner_of(request: Request) -> int | None:
        raw = request.headers.get(OWNER_HEADER)
        return int(raw) if raw is not None else None

    @app.get("/healthz")
    async def healthz():
        return _json_response(
            {
                "ok": True,
                "definitions": len(store.registry.dsis()),
                "groups": len(store.groups),
                "snapshot": store.snapshot is not None,
            }
        )

    @app.get("/ds")
    async def list_ds(query: str = ""):
        hits = find_ds(query, store.registry, store.search_counts, store.resource_counts())
        return _json_response(
            {
                "results": [
                    {"id": h.id, "dsi": h.dsi, "kw0": h.kw0, "comment": h.comment,
                     "s": h.s, "r": h.r}
                    for h in hits
                ]
            }
        )

    @app.post("/ds")
    async def register_ds(request: Request):
        document = (await request.body()).decode("utf-8")
        return _json_response(store.register_definition(document, actor=owner_of(request)))

    @app.get("/ds/{ref:path}")
    async def get_ds(ref: str):
        return _json_response(store.definition_info(unquote(ref)))

    @app.post("/ds/{ref:path}/dv")
    async def ingest_dv(ref: str, request: Request):
        body = json.loads((await request.body()).decode("utf-8"))
        if not isinstance(body, dict) or "text" not in body:
            raise ValidationError('body must be {"text": "<dv line>"}')
        dsi = store.registry.resolve(unquote(ref))
        group = store.ingest_line(str(body["text"]), expected_dsi=dsi)
        return _json_response({"ok": True, "members": len(group.members),
                               "c": len(store.groups) - 1})

    @app.get("/dv/{c}")
    async def dv_detail(c: int):
        detail = store.dv_detail(c)
        detail["a"] = store.bump_access(c)
        return _json_response(detail)

    @app.post("/search")
    async def search(request: Request):
        body = json.loads((await request.body()).decode("utf-8"))
        req = request_from_json(body)
        result = store.search(req)
        return _json_response(result_to_json(result))

    @app.post("/index/build")
    async def build_index():
        return _json_response(store.build_snapshot())

    return app
