"""On-disk workspace: content-addressed artifacts, command journal, preference log."""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from pathlib import Path

DEFAULT_ENV = "COLLAGE_WORKSPACE"
_KINDS = ("maps", "configs", "renders", "weights", "traces", "datasets")


def content_id(*parts) -> str:
    """Stable hex id from the canonical JSON encoding of the inputs."""
    blob = json.dumps(parts, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()[:16]


class Workspace:
    """Artifact store rooted at a directory; ids are hashes of their inputs."""

    def __init__(self, root: str | Path | None = None):
        if root is None:
            root = os.environ.get(DEFAULT_ENV, ".collage")
        self.root = Path(root)
        for kind in _KINDS:
            (self.root / kind).mkdir(parents=True, exist_ok=True)
        self.index_path = self.root / "index.json"
        self.journal_path = self.root / "journal.jsonl"
        self.prefs_path = self.root / "preferences.jsonl"
        self._lock = threading.Lock()
        self._index = self._load_index()

    def _load_index(self) -> dict:
        if self.index_path.exists():
            return json.loads(self.index_path.read_text(encoding="utf-8"))
        return {"v": 1, "artifacts": {}}

    def _save_index(self) -> None:
        tmp = self.index_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self._index, indent=1, sort_keys=True), encoding="utf-8")
        tmp.replace(self.index_path)

    # ------------------------------------------------------------ artifacts

    def path_for(self, kind: str, artifact_id: str, suffix: str) -> Path:
        if kind not in _KINDS:
            raise ValueError(f"unknown artifact kind {kind!r}")
        return self.root / kind / f"{artifact_id}{suffix}"

    def register(self, kind: str, artifact_id: str, path: Path, meta: dict | None = None) -> None:
        with self._lock:
            self._index["artifacts"][artifact_id] = {
                "kind": kind,
                "path": str(path.relative_to(self.root)),
                "meta": meta or {},
            }
            self._save_index()

    def lookup(self, artifact_id: str) -> dict | None:
        entry = self._index["artifacts"].get(artifact_id)
        if entry is None:
            return None
        path = self.root / entry["path"]
        if not path.exists():
            return None
        return {**entry, "abs_path": path}

    def has(self, artifact_id: str) -> bool:
        return self.lookup(artifact_id) is not None

    def write_json(self, kind: str, artifact_id: str, payload: dict, meta: dict | None = None) -> Path:
        path = self.path_for(kind, artifact_id, ".json")
        path.write_text(json.dumps(payload, indent=1, sort_keys=True), encoding="utf-8")
        self.register(kind, artifact_id, path, meta)
        return path

    def read_json(self, artifact_id: str) -> dict:
        entry = self.lookup(artifact_id)
        if entry is None:
            raise KeyError(f"unknown artifact {artifact_id}")
        return json.loads(entry["abs_path"].read_text(encoding="utf-8"))

    # ------------------------------------------------------------- journal

    def journal(self, command: str, args: dict) -> None:
        line = json.dumps(
            {"v": 1, "t": time.time(), "command": command, "args": args}, sort_keys=True
        )
        with self._lock, open(self.journal_path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
