"""File-backed document store with atomic writes.

Every document is one JSON file under a kind directory. Writes go to a
temporary sibling first and are renamed into place, so a reader never
observes a partially written document and a crash between writes leaves
every stored file readable.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

KINDS = ("instances", "baselines", "sessions")


class Store:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        for kind in KINDS:
            (self.root / kind).mkdir(parents=True, exist_ok=True)

    def _path(self, kind: str, doc_id: str) -> Path:
        if kind not in KINDS:
            raise ValueError(f"unknown document kind {kind!r}")
        if not doc_id or "/" in doc_id or doc_id.startswith("."):
            raise ValueError(f"bad document id {doc_id!r}")
        return self.root / kind / f"{doc_id}.json"

    def put(self, kind: str, doc_id: str, doc: dict) -> None:
        path = self._path(kind, doc_id)
        payload = json.dumps(doc, indent=2, sort_keys=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{doc_id}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as handle:
                handle.write(payload)
                handle.write("\n")
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def get(self, kind: str, doc_id: str) -> dict | None:
        path = self._path(kind, doc_id)
        if not path.exists():
            return None
        with path.open() as handle:
            return json.load(handle)

    def exists(self, kind: str, doc_id: str) -> bool:
        return self._path(kind, doc_id).exists()

    def delete(self, kind: str, doc_id: str) -> None:
        path = self._path(kind, doc_id)
        if path.exists():
            path.unlink()

    def list_ids(self, kind: str) -> list[str]:
        if kind not in KINDS:
            raise ValueError(f"unknown document kind {kind!r}")
        return sorted(p.stem for p in (self.root / kind).glob("*.json"))
