"""Reusable transition library: a directory of ``.kmf`` files plus ``MANIFEST.json``.

The manifest lists every entry with the file it comes from, a sha256
checksum per file, and the functors that declare route vertices and edges::

    {
      "files": {"transport.kmf": "<sha256>"},
      "entries": [{"name": "pickup-agent", "kind": "transition", "file": "transport.kmf"}],
      "route": {"vertex": "is_poi", "edge": "next"}
    }
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..syntax import parse_model
from ..terms import Model, State, TransitionSpec
from .taxonomy import Taxonomy, validate_against_taxonomy

MANIFEST = "MANIFEST.json"
KINDS = ("state", "transition")


class LibraryError(ValueError):
    pass


@dataclass(frozen=True)
class LibraryEntry:
    name: str
    kind: str
    item: State | TransitionSpec
    provenance: str


@dataclass(frozen=True)
class TransitionLibrary:
    entries: dict = field(default_factory=dict)  # name -> LibraryEntry
    vertex_functor: str | None = None
    edge_functor: str | None = None

    def transitions(self) -> dict:
        return {n: e.item for n, e in self.entries.items() if e.kind == "transition"}

    def states(self) -> dict:
        return {n: e.item for n, e in self.entries.items() if e.kind == "state"}

    def as_model(self) -> Model:
        return Model(states=self.states(), transitions=self.transitions())

    def validate(self, tax: Taxonomy) -> None:
        report = validate_against_taxonomy(self.as_model(), tax)
        if not report.ok:
            raise LibraryError("library entries violate the taxonomy: " + "; ".join(map(str, report.violations)))


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def load_library(directory, taxonomy: Taxonomy | None = None) -> TransitionLibrary:
    """Load and verify a library directory; optionally check it against ``taxonomy``."""
    root = Path(directory)
    manifest_path = root / MANIFEST
    if not manifest_path.is_file():
        raise LibraryError(f"{root} has no {MANIFEST}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise LibraryError(f"{manifest_path}: {exc}") from None

    models: dict = {}
    for fname, digest in sorted(manifest.get("files", {}).items()):
        path = root / fname
        if not path.is_file():
            raise LibraryError(f"manifest lists missing file {fname}")
        if _sha256(path) != digest:
            raise LibraryError(f"checksum mismatch for {fname}")
        models[fname] = parse_model(path.read_text())

    entries: dict = {}
    for e in manifest.get("entries", []):
        name, kind, fname = e["name"], e["kind"], e["file"]
        if kind not in KINDS:
            raise LibraryError(f"entry {name}: unknown kind {kind!r}")
        if fname not in models:
            raise LibraryError(f"entry {name}: file {fname} is not listed with a checksum")
        pool = models[fname].transitions if kind == "transition" else models[fname].states
        if name not in pool:
            raise LibraryError(f"entry {name}: no {kind} of that name in {fname}")
        if name in entries:
            raise LibraryError(f"entry {name} listed twice")
        entries[name] = LibraryEntry(name, kind, pool[name], fname)

    route = manifest.get("route", {})
    lib = TransitionLibrary(entries, route.get("vertex"), route.get("edge"))
    if taxonomy is not None:
        lib.validate(taxonomy)
    return lib


def write_manifest(directory, vertex: str | None = None, edge: str | None = None) -> dict:
    """(Re)generate ``MANIFEST.json`` listing every state and transition in the directory."""
    root = Path(directory)
    files, entries = {}, []
    for path in sorted(root.glob("*.kmf")):
        files[path.name] = _sha256(path)
        m = parse_model(path.read_text())
        entries += [{"name": n, "kind": "state", "file": path.name} for n in sorted(m.states)]
        entries += [{"name": n, "kind": "transition", "file": path.name} for n in sorted(m.transitions)]
    manifest = {"files": files, "entries": entries}
    if vertex or edge:
        manifest["route"] = {k: v for k, v in (("vertex", vertex), ("edge", edge)) if v}
    (root / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def default_library_path() -> Path:
    return Path(__file__).resolve().parent.parent / "data" / "library"


def default_library(taxonomy: Taxonomy | None = None) -> TransitionLibrary:
    return load_library(default_library_path(), taxonomy)


__all__ = [
    "LibraryEntry",
    "LibraryError",
    "TransitionLibrary",
    "default_library",
    "default_library_path",
    "load_library",
    "write_manifest",
]
