"""Domain types shared by the analysis engines, plus structural validation.

Every type is a frozen dataclass. Source spans ride along for diagnostics but
are excluded from equality, so two projects compare equal when they describe
the same model regardless of where (or whether) they were parsed.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Mapping

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_-]*\Z")

RATING_MIN = 1
RATING_MAX = 10

ERROR = "ERROR"
WARNING = "WARNING"


class DomainError(ValueError):
    """Raised when an operation receives a value outside its domain."""


@dataclass(frozen=True, order=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int = 1

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


def _span():
    return field(default=None, compare=False, repr=False)


class Guideword(enum.Enum):
    INCORRECT_VALUE = "IncorrectValue"
    MISSING_VALUE = "MissingValue"
    VALUE_TOO_HIGH = "ValueTooHigh"
    VALUE_TOO_LOW = "ValueTooLow"
    INCORRECT_TIMING = "IncorrectTiming"

    @classmethod
    def from_token(cls, token: str) -> "Guideword":
        try:
            return cls(token)
        except ValueError:
            raise DomainError(f"unknown guideword {token!r}") from None

    @property
    def display(self) -> str:
        return _GUIDEWORD_DISPLAY[self]


_GUIDEWORD_DISPLAY = {
    Guideword.INCORRECT_VALUE: "Incorrect Value",
    Guideword.MISSING_VALUE: "Missing Value",
    Guideword.VALUE_TOO_HIGH: "Value too high",
    Guideword.VALUE_TOO_LOW: "Value too low",
    Guideword.INCORRECT_TIMING: "Incorrect Timing",
}

GUIDEWORD_ORDER = tuple(Guideword)


def sorted_guidewords(guidewords) -> tuple[Guideword, ...]:
    return tuple(g for g in GUIDEWORD_ORDER if g in set(guidewords))


@dataclass(frozen=True)
class Component:
    id: str
    name: str = ""
    functionality: str = ""
    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()
    features: tuple[str, ...] = ()
    span: SourceSpan | None = _span()

    @property
    def display_name(self) -> str:
        return self.name or self.id


@dataclass(frozen=True)
class Interface:
    id: str
    producer: str
    consumers: tuple[str, ...]
    payload: str = ""
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class PseudoElement:
    """An FMEA subject that is not an architecture component (e.g. a dataset)."""

    id: str
    span: SourceSpan | None = _span()

    @property
    def display_name(self) -> str:
        # TrainingDataset -> "Training Dataset"
        return re.sub(r"(?<=[a-z0-9])(?=[A-Z])", " ", self.id).replace("_", " ")


@dataclass(frozen=True)
class ArchitectureModel:
    name: str = ""
    components: tuple[Component, ...] = ()
    interfaces: tuple[Interface, ...] = ()
    pseudo_elements: tuple[PseudoElement, ...] = ()
    annotations: Mapping[str, str] = field(default_factory=dict)
    span: SourceSpan | None = _span()

    def component(self, cid: str) -> Component | None:
        for c in self.components:
            if c.id == cid:
                return c
        return None

    def element_name(self, eid: str) -> str:
        c = self.component(eid)
        if c is not None:
            return c.display_name
        for p in self.pseudo_elements:
            if p.id == eid:
                return p.display_name
        return eid


@dataclass(frozen=True)
class AiFailureMode:
    id: str
    label: str
    guidewords: frozenset[Guideword]
    description: str = ""
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class RiskRating:
    severity: int
    occurrence: int
    detection: int

    def problems(self) -> list[str]:
        out = []
        for name in ("severity", "occurrence", "detection"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or not RATING_MIN <= v <= RATING_MAX:
                out.append(f"{name} out of range [{RATING_MIN},{RATING_MAX}]: {v!r}")
        return out


@dataclass(frozen=True)
class FmeaEntry:
    id: str
    element: str
    failure_mode: str
    manifestation: str
    effect: str
    caused_by: str
    rating: RiskRating
    span: SourceSpan | None = _span()


class GateKind(enum.Enum):
    AND = "AND"
    OR = "OR"


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    children: tuple[str, ...]
    label: str = ""
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class BasicEvent:
    label: str = ""
    probability: float | None = None
    fmea_link: str | None = None
    span: SourceSpan | None = _span()


Node = Gate | BasicEvent


@dataclass(frozen=True)
class FaultTree:
    id: str
    top: str
    nodes: Mapping[str, Node]
    span: SourceSpan | None = _span()

    def basic_events(self) -> list[str]:
        return [nid for nid, n in self.nodes.items() if isinstance(n, BasicEvent)]

    def reachable(self) -> list[str]:
        """Node ids reachable from the top, in depth-first preorder."""
        seen: dict[str, None] = {}
        stack = [self.top]
        while stack:
            nid = stack.pop()
            if nid in seen or nid not in self.nodes:
                continue
            seen[nid] = None
            node = self.nodes[nid]
            if isinstance(node, Gate):
                stack.extend(reversed(node.children))
        return list(seen)

    def reachable_events(self) -> list[str]:
        return sorted(n for n in self.reachable() if isinstance(self.nodes[n], BasicEvent))


@dataclass(frozen=True)
class FmeaTarget:
    entry: str
    detection_delta: int
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class FtaTarget:
    event: str
    monitor_label: str
    miss_probability: float | None = None
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class Mitigation:
    id: str
    name: str
    comment: str = ""
    fmea_targets: tuple[FmeaTarget, ...] = ()
    fta_targets: tuple[FtaTarget, ...] = ()
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class SimulationConfig:
    trials: int
    seed: int
    occurrence_scale: float = 2.0
    detection_scale: float = 10.0
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class HazardProject:
    architecture: ArchitectureModel = field(default_factory=ArchitectureModel)
    taxonomy: tuple[AiFailureMode, ...] = ()
    fmea: tuple[FmeaEntry, ...] = ()
    trees: tuple[FaultTree, ...] = ()
    mitigations: tuple[Mitigation, ...] = ()
    sim_config: SimulationConfig | None = None

    def failure_mode(self, mid: str) -> AiFailureMode | None:
        return next((m for m in self.taxonomy if m.id == mid), None)

    def entry(self, eid: str) -> FmeaEntry | None:
        return next((e for e in self.fmea if e.id == eid), None)

    def tree(self, tid: str) -> FaultTree | None:
        return next((t for t in self.trees if t.id == tid), None)

    def mitigation(self, mid: str) -> Mitigation | None:
        return next((m for m in self.mitigations if m.id == mid), None)


def monitor_node_id(label: str) -> str:
    """Node id used for the monitor event a mitigation adds to a fault tree."""
    nid = re.sub(r"[^A-Za-z0-9_-]", "_", label.strip())
    if not nid or not re.match(r"[A-Za-z_]", nid):
        nid = "_" + nid
    return nid


# --- validation -------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    location: SourceSpan | None
    message: str
    subject: str = ""

    def sort_key(self):
        loc = self.location
        if loc is None:
            return ("", 0, 0, self.subject, self.message)
        return (loc.file, loc.line, loc.column, self.subject, self.message)

    def __str__(self) -> str:
        where = f"{self.location}: " if self.location else ""
        return f"{where}{self.severity.lower()}: {self.message}"


def _is_prob(p) -> bool:
    return isinstance(p, (int, float)) and not isinstance(p, bool) and 0.0 <= p <= 1.0


def _duplicates(items, what: str, out: list[Diagnostic]) -> None:
    seen: set[str] = set()
    for it in items:
        if it.id in seen:
            out.append(Diagnostic(ERROR, it.span, f"duplicate {what} id '{it.id}'", it.id))
        seen.add(it.id)


def _ident_check(items, what: str, out: list[Diagnostic]) -> None:
    for it in items:
        if not isinstance(it.id, str) or not IDENT_RE.match(it.id):
            out.append(Diagnostic(ERROR, it.span, f"invalid {what} identifier {it.id!r}", str(it.id)))


def taxonomy_diagnostics(project: HazardProject) -> list[Diagnostic]:
    out = []
    for m in project.taxonomy:
        if not m.guidewords:
            out.append(Diagnostic(ERROR, m.span, f"failure mode '{m.id}' maps to no guideword", m.id))
    modes = {m.id for m in project.taxonomy}
    for e in project.fmea:
        if e.failure_mode not in modes:
            out.append(Diagnostic(
                ERROR, e.span,
                f"fmea entry '{e.id}' references undeclared failure mode '{e.failure_mode}'", e.id))
    return out


def _architecture_diagnostics(arch: ArchitectureModel, out: list[Diagnostic]) -> None:
    _ident_check(arch.components, "component", out)
    _ident_check(arch.interfaces, "interface", out)
    _ident_check(arch.pseudo_elements, "pseudo-element", out)
    _duplicates(arch.components, "component", out)
    _duplicates(arch.interfaces, "interface", out)
    _duplicates(arch.pseudo_elements, "pseudo-element", out)
    comp_ids = {c.id for c in arch.components}
    for p in arch.pseudo_elements:
        if p.id in comp_ids:
            out.append(Diagnostic(ERROR, p.span, f"pseudo-element '{p.id}' collides with a component id", p.id))
    iface = {i.id: i for i in arch.interfaces}
    for c in arch.components:
        for direction, refs in (("input", c.inputs), ("output", c.outputs)):
            for ref in refs:
                if ref not in iface:
                    out.append(Diagnostic(
                        ERROR, c.span, f"component '{c.id}' {direction} references undeclared interface '{ref}'", c.id))
                elif direction == "output" and iface[ref].producer != c.id:
                    out.append(Diagnostic(
                        WARNING, c.span, f"component '{c.id}' lists output '{ref}' produced by '{iface[ref].producer}'", c.id))
                elif direction == "input" and c.id not in iface[ref].consumers:
                    out.append(Diagnostic(
                        WARNING, c.span, f"component '{c.id}' lists input '{ref}' but is not one of its consumers", c.id))
    for i in arch.interfaces:
        if i.producer not in comp_ids:
            out.append(Diagnostic(ERROR, i.span, f"interface '{i.id}' producer '{i.producer}' is not a declared component", i.id))
        if not i.consumers:
            out.append(Diagnostic(ERROR, i.span, f"interface '{i.id}' has no consumers", i.id))
        for cons in i.consumers:
            if cons not in comp_ids:
                out.append(Diagnostic(ERROR, i.span, f"interface '{i.id}' consumer '{cons}' is not a declared component", i.id))
    for key in arch.annotations:
        if not IDENT_RE.match(key) or key == "name":
            out.append(Diagnostic(ERROR, arch.span, f"invalid annotation key {key!r}", key))


def _fmea_diagnostics(project: HazardProject, out: list[Diagnostic]) -> None:
    arch = project.architecture
    elements = {c.id for c in arch.components} | {p.id for p in arch.pseudo_elements}
    _ident_check(project.fmea, "fmea entry", out)
    _duplicates(project.fmea, "fmea entry", out)
    for e in project.fmea:
        if e.element not in elements:
            out.append(Diagnostic(
                ERROR, e.span, f"fmea entry '{e.id}' element '{e.element}' is neither a component nor a pseudo-element", e.id))
        for problem in e.rating.problems():
            out.append(Diagnostic(ERROR, e.span, f"fmea entry '{e.id}': {problem}", e.id))


def _tree_cycles(tree: FaultTree) -> list[str]:
    """Gate ids that sit on a cycle (iterative three-colour DFS)."""
    WHITE, GREY, BLACK = 0, 1, 2
    colour = {nid: WHITE for nid in tree.nodes}
    on_cycle: list[str] = []
    for root in tree.nodes:
        if colour[root] != WHITE:
            continue
        stack = [(root, iter(_children(tree, root)))]
        colour[root] = GREY
        while stack:
            nid, it = stack[-1]
            child = next(it, None)
            if child is None:
                colour[nid] = BLACK
                stack.pop()
            elif child not in colour:
                continue
            elif colour[child] == GREY:
                on_cycle.append(nid)
            elif colour[child] == WHITE:
                colour[child] = GREY
                stack.append((child, iter(_children(tree, child))))
    return on_cycle


def _children(tree: FaultTree, nid: str) -> tuple[str, ...]:
    node = tree.nodes.get(nid)
    return node.children if isinstance(node, Gate) else ()


def _tree_diagnostics(project: HazardProject, out: list[Diagnostic]) -> None:
    _ident_check(project.trees, "fault tree", out)
    _duplicates(project.trees, "fault tree", out)
    entries = {e.id for e in project.fmea}
    for t in project.trees:
        for nid, node in t.nodes.items():
            if not IDENT_RE.match(nid):
                out.append(Diagnostic(ERROR, node.span, f"tree '{t.id}': invalid node identifier {nid!r}", nid))
        if t.top not in t.nodes:
            out.append(Diagnostic(ERROR, t.span, f"tree '{t.id}': top node '{t.top}' is not declared", t.id))
        for nid, node in t.nodes.items():
            if isinstance(node, Gate):
                if not node.children:
                    out.append(Diagnostic(ERROR, node.span, f"tree '{t.id}': gate '{nid}' has no children", nid))
                for ch in node.children:
                    if ch not in t.nodes:
                        out.append(Diagnostic(
                            ERROR, node.span, f"tree '{t.id}': gate '{nid}' references undeclared node '{ch}'", nid))
                if len(set(node.children)) != len(node.children):
                    out.append(Diagnostic(WARNING, node.span, f"tree '{t.id}': gate '{nid}' lists a child twice", nid))
            else:
                if node.probability is not None and not _is_prob(node.probability):
                    out.append(Diagnostic(
                        ERROR, node.span, f"tree '{t.id}': event '{nid}' probability out of range [0,1]", nid))
                if node.fmea_link is not None and node.fmea_link not in entries:
                    out.append(Diagnostic(
                        ERROR, node.span,
                        f"tree '{t.id}': event '{nid}' links undeclared fmea entry '{node.fmea_link}'", nid))
        for nid in _tree_cycles(t):
            out.append(Diagnostic(ERROR, t.nodes[nid].span, f"tree '{t.id}': cycle through gate '{nid}'", nid))
        if t.top in t.nodes:
            reach = set(t.reachable())
            for nid, node in t.nodes.items():
                if nid not in reach:
                    out.append(Diagnostic(
                        ERROR, node.span, f"tree '{t.id}': node '{nid}' is unreachable from top '{t.top}'", nid))


def _mitigation_diagnostics(project: HazardProject, out: list[Diagnostic]) -> None:
    _ident_check(project.mitigations, "mitigation", out)
    _duplicates(project.mitigations, "mitigation", out)
    entries = {e.id: e for e in project.fmea}
    # monitor node ids already claimed, per tree
    claimed = {t.id: set(t.nodes) for t in project.trees}
    for m in project.mitigations:
        seen_entries: set[str] = set()
        for tgt in m.fmea_targets:
            e = entries.get(tgt.entry)
            if e is None:
                out.append(Diagnostic(
                    ERROR, tgt.span or m.span, f"mitigation '{m.id}' targets undeclared fmea entry '{tgt.entry}'", m.id))
            if tgt.entry in seen_entries:
                out.append(Diagnostic(
                    ERROR, tgt.span or m.span, f"mitigation '{m.id}' targets fmea entry '{tgt.entry}' twice", m.id))
            seen_entries.add(tgt.entry)
            if not isinstance(tgt.detection_delta, int) or tgt.detection_delta >= 0:
                out.append(Diagnostic(
                    ERROR, tgt.span or m.span,
                    f"mitigation '{m.id}': detection delta must be negative, got {tgt.detection_delta}", m.id))
            elif e is not None and isinstance(e.rating.detection, int) and e.rating.detection + tgt.detection_delta < RATING_MIN:
                out.append(Diagnostic(
                    ERROR, tgt.span or m.span,
                    f"mitigation '{m.id}': detection of '{e.id}' would drop below {RATING_MIN}", m.id))
        for tgt in m.fta_targets:
            where = [t for t in project.trees if tgt.event in t.nodes]
            if not where:
                out.append(Diagnostic(
                    ERROR, tgt.span or m.span, f"mitigation '{m.id}' targets undeclared fault tree event '{tgt.event}'", m.id))
            for t in where:
                if isinstance(t.nodes[tgt.event], Gate):
                    out.append(Diagnostic(
                        ERROR, tgt.span or m.span,
                        f"mitigation '{m.id}' targets gate '{tgt.event}' in tree '{t.id}'; only basic events can be mitigated", m.id))
                    continue
                for nid in (monitor_node_id(tgt.monitor_label), f"{tgt.event}__mitigated"):
                    if nid in claimed[t.id]:
                        out.append(Diagnostic(
                            ERROR, tgt.span or m.span,
                            f"mitigation '{m.id}': node id '{nid}' already used in tree '{t.id}'", m.id))
                    claimed[t.id].add(nid)
            if tgt.miss_probability is not None and not _is_prob(tgt.miss_probability):
                out.append(Diagnostic(
                    ERROR, tgt.span or m.span, f"mitigation '{m.id}': monitor miss probability out of range [0,1]", m.id))


def _sim_diagnostics(cfg: SimulationConfig | None, out: list[Diagnostic]) -> None:
    if cfg is None:
        return
    if not isinstance(cfg.trials, int) or cfg.trials < 1:
        out.append(Diagnostic(ERROR, cfg.span, f"simulation trials must be >= 1, got {cfg.trials}", "simulation"))
    if not isinstance(cfg.seed, int) or not 0 <= cfg.seed < 2**64:
        out.append(Diagnostic(ERROR, cfg.span, "simulation seed must be a 64-bit unsigned integer", "simulation"))
    for name in ("occurrence_scale", "detection_scale"):
        if not getattr(cfg, name) > 0:
            out.append(Diagnostic(ERROR, cfg.span, f"simulation {name} must be > 0", "simulation"))


def validate_project(project: HazardProject) -> list[Diagnostic]:
    """Check every structural invariant of a project.

    Returns diagnostics ordered by source position then subject id; the list is
    empty exactly when the project is consistent. Never raises on bad content.
    """
    out: list[Diagnostic] = []
    _architecture_diagnostics(project.architecture, out)
    _ident_check(project.taxonomy, "failure mode", out)
    _duplicates(project.taxonomy, "failure mode", out)
    out.extend(taxonomy_diagnostics(project))
    _fmea_diagnostics(project, out)
    _tree_diagnostics(project, out)
    _mitigation_diagnostics(project, out)
    _sim_diagnostics(project.sim_config, out)
    # stable sort keeps check order for diagnostics sharing a location
    return sorted(dict.fromkeys(out), key=Diagnostic.sort_key)


def has_errors(diags) -> bool:
    return any(d.severity == ERROR for d in diags)
