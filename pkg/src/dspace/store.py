"""Persistent store: definitions, DV log, snapshot, counters.

Everything is a plain file under one data directory so state stays
inspectable and diffable: definitions as canonical JSON (one file per
accepted version, numbered in acceptance order), vectors as an append-only
log of short-grammar lines, the index as a DSIX1 binary, counters as JSON.

One writer owns the store; readers work against the immutable current
snapshot, which a rebuild replaces atomically.
"""
from __future__ import annotations

import json
import os
import re
import threading
from pathlib import Path
from .codec import DVGroup, URLRef, decode_value, parse_dv_group
from .errors import DspaceError, UnknownReference, ValidationError
from .index import BuildOptions, IndexSnapshot, build_index
from .schema import (
    Registry,
    fixed_part_checksum,
    parse_ds_definition,
    serialize_ds_definition,
)
from .search import SearchRequest, SearchResult, numeric_search


class NoSnapshot(DspaceError):
    """Search requested before any index build."""


DATA_DIR_ENV = "DSPACE_DATA_DIR"


def default_data_dir() -> Path:
    return Path(os.environ.get(DATA_DIR_ENV, "dspace-data"))


class Store:
    def __init__(self, data_dir: str | os.PathLike | None = None):
        self.root = Path(data_dir) if data_dir is not None else default_data_dir()
        self.definitions_dir = self.root / "definitions"
        self.dv_log = self.root / "dvs.log"
        self.snapshot_path = self.root / "snapshot.dsix"
        self.counters_path = self.root / "counters.json"
        self.definitions_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self.registry = Registry()
        self.groups: list[DVGroup] = []
        self._lines: list[str] = []
        self.snapshot: IndexSnapshot | None = None
        self.search_counts: dict[str, int] = {}
        self.access_counts: dict[int, int] = {}
        self._load()

    # -- loading ------------------------------------------------------------

    def _load(self) -> None:
        for path in sorted(self.definitions_dir.glob("*.json")):
            self.registry.register(path.read_text(encoding="utf-8"))
        if self.dv_log.exists():
            raw = self.dv_log.read_text(encoding="utf-8")
            # a crashed append may leave a partial last line: only lines
            # terminated by \n are part of the durable prefix
            complete, sep, _tail = raw.rpartition("\n")
            if sep:
                for line in complete.split("\n"):
                    line = line.strip()
                    if line:
                        self._lines.append(line)
                        self.groups.append(parse_dv_group(line, self.registry.flatten))
        if self.snapshot_path.exists():
            self.snapshot = IndexSnapshot.from_bytes(self.snapshot_path.read_bytes())
        if self.counters_path.exists():
            data = json.loads(self.counters_path.read_text(encoding="utf-8"))
            self.search_counts = {k: int(v) for k, v in data.get("s", {}).items()}
            self.access_counts = {int(k): int(v) for k, v in data.get("a", {}).items()}

    # -- definitions ----------------------------------------------------------

    def register_definition(self, document: str, actor: int | None = None) -> dict:
        defn = parse_ds_definition(document)
        with self._lock:
            local_id = self.registry.register(defn, actor=actor)
            version = len(self.registry.versions(defn.dsi))
            seq = len(list(self.definitions_dir.glob("*.json")))
            safe = re.sub(r"[^A-Za-z0-9_-]+", "-", defn.dsi)[-60:]
            path = self.definitions_dir / f"{seq:05d}_{safe}.json"
            path.write_text(serialize_ds_definition(defn), encoding="utf-8")
        return {
            "id": local_id,
            "dsi": defn.dsi,
            "version": version,
            "checksum": fixed_part_checksum(defn),
        }

    def definition_info(self, ref: str | int) -> dict:
        defn = self.registry.get(ref)
        return {
            "id": self.registry.local_id(defn.dsi),
            "dsi": defn.dsi,
            "version": len(self.registry.versions(defn.dsi)),
            "checksum": fixed_part_checksum(defn),
            "definition": json.loads(serialize_ds_definition(defn)),
        }

    # -- vectors --------------------------------------------------------------

    def ingest_line(self, line: str, expected_dsi: str | None = None) -> DVGroup:
        line = line.strip()
        group = parse_dv_group(line, self.registry.flatten)
        if expected_dsi is not None and all(m.dsi != expected_dsi for m in group.members):
            raise ValidationError(f"group does not contain a DV of {expected_dsi!r}")
        with self._lock:
            with open(self.dv_log, "a", encoding="utf-8") as f:
                f.write(line + "\n")
                f.flush()
                os.fsync(f.fileno())
            self._lines.append(line)
            self.groups.append(group)
        return group

    def ingest_file(self, path: str | os.PathLike) -> int:
        n = 0
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                self.ingest_line(line)
                n += 1
        return n

    def resource_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for group in self.groups:
            for dv in group.members:
                counts[dv.dsi] = counts.get(dv.dsi, 0) + 1
        return counts

    def dv_detail(self, c: int) -> dict:
        if not (0 <= c < len(self.groups)):
            raise UnknownReference(f"unknown record {c}")
        group = self.groups[c]
        members = []
        for dv in group.members:
            flat = self.registry.flatten(dv.dsi)
            values = {}
            for inst in dv.dims:
                if isinstance(inst.value, URLRef):
                    values[inst.path] = inst.value.url
                elif isinstance(inst.value, str):
                    values[inst.path] = inst.value
                else:
                    leaf = flat.leaf(inst.path)
                    values[inst.path] = decode_value(leaf.defn, float(inst.value))
            entry: dict = {"dsi": dv.dsi, "values": values}
            if dv.owner is not None:
                entry["owner"] = dv.owner
            members.append(entry)
        first = group.members[0]
        out: dict = {"c": c, "members": members, "a": self.access_counts.get(c, 0)}
        if group.resource:
            out["resource"] = group.resource
        if first.vl:
            out["vl"] = first.vl
        if first.keycomment:
            out["keycomment"] = {
                "kw0": first.keycomment.kw0,
                "comment": first.keycomment.comment,
            }
        if first.offered is not None:
            out["offered"] = first.offered
        if first.wanted is not None:
            out["wanted"] = first.wanted
        return out

    # -- index ----------------------------------------------------------------

    def build_snapshot(self, options: BuildOptions = BuildOptions()) -> dict:
        with self._lock:
            groups = list(self.groups)
        snapshot = build_index(groups, self.registry, options)
        tmp = self.snapshot_path.with_suffix(".tmp")
        tmp.write_bytes(snapshot.to_bytes())
        tmp.replace(self.snapshot_path)  # atomic swap for restarts
        self.snapshot = snapshot  # atomic swap for live readers
        return {
            "groups": snapshot.report.groups,
            "records": snapshot.report.records,
            "rejected": snapshot.report.rejected,
        }

    # -- search -----------------------------------------------------------------

    def search(self, req: SearchRequest) -> SearchResult:
        if self.snapshot is None:
            raise NoSnapshot("no index snapshot; run an index build first")
        dsi = self.registry.resolve(req.dsi)
        self._bump_search(dsi)
        return numeric_search(req, self.snapshot, self.registry, self.access_counts)

    # -- counters (monotone, advisory) -----------------------------------------

    def _bump_search(self, dsi: str) -> None:
        with self._lock:
            self.search_counts[dsi] = self.search_counts.get(dsi, 0) + 1
            self._write_counters()

    def bump_access(self, c: int) -> int:
        with self._lock:
            self.access_counts[c] = self.access_counts.get(c, 0) + 1
            self._write_counters()
            return self.access_counts[c]

    def _write_counters(self) -> None:
        payload = {
            "s": self.search_counts,
            "a": {str(k): v for k, v in self.access_counts.items()},
        }
        tmp = self.counters_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
        tmp.replace(self.counters_path)
