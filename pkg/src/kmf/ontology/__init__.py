"""Concept taxonomy, model validation against it, the transition library and reuse metrics."""

from .library import (
    LibraryEntry,
    LibraryError,
    TransitionLibrary,
    default_library,
    default_library_path,
    load_library,
    write_manifest,
)
from .reuse import Entity, ReuseError, ReuseReport, reusability_index, reusability_report
from .taxonomy import (
    ANY,
    NUMBER,
    Taxonomy,
    TaxonomyError,
    ValidationReport,
    Violation,
    default_taxonomy,
    load_taxonomy,
    parse_taxonomy,
    validate_against_taxonomy,
)

__all__ = [
    "ANY",
    "NUMBER",
    "Entity",
    "LibraryEntry",
    "LibraryError",
    "ReuseError",
    "ReuseReport",
    "Taxonomy",
    "TaxonomyError",
    "TransitionLibrary",
    "ValidationReport",
    "Violation",
    "default_library",
    "default_library_path",
    "default_taxonomy",
    "load_library",
    "load_taxonomy",
    "parse_taxonomy",
    "reusability_index",
    "reusability_report",
    "validate_against_taxonomy",
    "write_manifest",
]
