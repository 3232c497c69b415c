#!/usr/bin/env python3
"""Regenerate the frontend parity fixtures from the live engine.

Emits the definition tree and the demo search exchange exactly as the HTTP
service serves them, so the console tests can assert field-for-field parity
against real responses. Run from the repository root:

    python3 scripts/gen_frontend_fixtures.py
"""
import json
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from fastapi.testclient import TestClient

from dspace.schema import serialize_ds_definition
from dspace.service import create_app
from dspace.store import Store

from fixtures import (
    CUPBOARD_DSI,
    FINANCES_DSI,
    SIZE_DSI,
    cupboard_def,
    cupboard_dv_lines,
    finances_def,
    size_def,
)

DEMO_SEARCH_REQUEST = {
    "dsi": CUPBOARD_DSI,
    "dims": [
        {"path": "Finances/Price", "sim": 0, "g": True},
        {"path": "Size/Width", "g": True},
    ],
    "pcnt": 1000,
}


def main() -> None:
    out_dir = Path(__file__).resolve().parents[1] / "frontend" / "fixtures"
    out_dir.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        store = Store(tmp)
        for defn in (finances_def(), size_def(), cupboard_def()):
            store.register_definition(serialize_ds_definition(defn))
        for line in cupboard_dv_lines():
            store.ingest_line(line)
        store.build_snapshot()
        client = TestClient(create_app(store))

        definitions = {}
        for dsi in (CUPBOARD_DSI, FINANCES_DSI, SIZE_DSI):
            resp = client.get(f"/ds/{dsi}")
            resp.raise_for_status()
            definitions[dsi] = resp.json()
        (out_dir / "cupboard_definition.json").write_text(
            json.dumps({"root": CUPBOARD_DSI, "definitions": definitions},
                       indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

        resp = client.post("/search", json=DEMO_SEARCH_REQUEST)
        resp.raise_for_status()
        (out_dir / "cupboard_search.json").write_text(
            json.dumps({"request": DEMO_SEARCH_REQUEST, "response": resp.json()},
                       indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    print(f"wrote fixtures to {out_dir}")


if __name__ == "__main__":
    main()
