"""Directory-backed knowledge-base store with content-addressed, write-once artifacts.

Layout::

    <root>/artifacts/<sha256>     immutable bytes (documents and PDDL alike)
    <root>/index.json             model name -> {part: sha256}
    <root>/runs/<id>.jsonl        run event logs
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
from contextlib import contextmanager
from pathlib import Path

PARTS = ("states", "transitions", "rules")
INDEX = "index.json"


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class Store:
    def __init__(self, root):
        self.root = Path(root)
        self.artifacts = self.root / "artifacts"
        self.runs = self.root / "runs"
        self.artifacts.mkdir(parents=True, exist_ok=True)
        self.runs.mkdir(parents=True, exist_ok=True)
        self._index_lock = threading.Lock()
        self._locks_lock = threading.Lock()
        self._locks: dict[str, threading.Lock] = {}

    # locking -------------------------------------------------------------
    @contextmanager
    def model_lock(self, name: str):
        """Serialize mutations of one model; other models proceed in parallel."""
        with self._locks_lock:
            lock = self._locks.setdefault(name, threading.Lock())
        with lock:
            yield

    # artifacts -----------------------------------------------------------
    def put_artifact(self, data: bytes) -> str:
        """Store ``data`` under its digest; existing digests are never rewritten."""
        digest = sha256_hex(data)
        target = self.artifacts / digest
        if target.exists():
            return digest
        fd, tmp = tempfile.mkstemp(dir=self.artifacts, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            try:
                os.link(tmp, target)
            except FileExistsError:
                pass
        finally:
            os.unlink(tmp)
        return digest

    def get_artifact(self, digest: str) -> bytes | None:
        if len(digest) != 64 or any(c not in "0123456789abcdef" for c in digest):
            return None
        path = self.artifacts / digest
        return path.read_bytes() if path.is_file() else None

    # index ---------------------------------------------------------------
    def _read_index(self) -> dict:
        path = self.root / INDEX
        if not path.is_file():
            return {"models": {}}
        return json.loads(path.read_text())

    def _write_index(self, index: dict) -> None:
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=".index-")
        with os.fdopen(fd, "w") as fh:
            json.dump(index, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, self.root / INDEX)

    def model_parts(self, name: str) -> dict | None:
        with self._index_lock:
            return self._read_index()["models"].get(name)

    def set_part(self, name: str, part: str, digest: str) -> bool:
        """Point ``name``'s ``part`` at ``digest``; True when the revision changed."""
        if part not in PARTS:
            raise ValueError(f"unknown model part {part!r}")
        with self._index_lock:
            index = self._read_index()
            parts = index["models"].setdefault(name, {})
            changed = parts.get(part) != digest
            parts[part] = digest
            if changed:
                self._write_index(index)
            return changed

    def model_names(self) -> list[str]:
        with self._index_lock:
            return sorted(self._read_index()["models"])

    def document(self, name: str, part: str) -> str | None:
        parts = self.model_parts(name) or {}
        digest = parts.get(part)
        if digest is None:
            return None
        return self.get_artifact(digest).decode()

    # run logs ------------------------------------------------------------
    def write_run_log(self, run_id: str, text: str) -> None:
        fd, tmp = tempfile.mkstemp(dir=self.runs, prefix=".run-")
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, self.runs / f"{run_id}.jsonl")

    def run_count(self) -> int:
        return sum(1 for _ in self.runs.glob("*.jsonl"))


__all__ = ["PARTS", "Store", "sha256_hex"]
