"""Hybrid FMEA/FTA safety analysis for AI-based driving stacks."""

from importlib import resources
from pathlib import Path

from .model import DomainError, HazardProject, validate_project
from .parser import ParseFailure, load, parse, serialize

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "HazardProject",
    "ParseFailure",
    "bundled_path",
    "load",
    "load_reference",
    "parse",
    "serialize",
    "validate_project",
]


def bundled_path(name: str = "reference.hsa") -> Path:
    """Filesystem path of a bundled project file."""
    return Path(str(resources.files(__package__) / "data" / name))


def load_reference() -> HazardProject:
    """The bundled reference project (architecture, FMEA, mitigations, tree)."""
    return load(bundled_path("reference.hsa"))
