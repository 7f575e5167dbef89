"""Reader and writer for the ``.hsa`` project format.

The format is block structured::

    component Encoder {
      name: "Encoder"
      functionality: "Compresses multi-view camera feeds"
      outputs: enc_latents
    }

    fault_tree collision {
      top: top
      top = OR(e1, e2) label: "Collision"
      e1 = event p: 0.1 fmea: F1
      e2 = event
    }

``parse`` recovers at block granularity: an error inside one top-level block
skips to the end of that block and parsing continues, so independent mistakes
are all reported in one pass.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .model import (
    RATING_MAX,
    RATING_MIN,
    AiFailureMode,
    ArchitectureModel,
    BasicEvent,
    Component,
    FaultTree,
    FmeaEntry,
    FmeaTarget,
    FtaTarget,
    Gate,
    GateKind,
    Guideword,
    HazardProject,
    Interface,
    Mitigation,
    PseudoElement,
    RiskRating,
    SimulationConfig,
    SourceSpan,
    sorted_guidewords,
)

LEXICAL = "lexical"
SYNTAX = "syntax"
DUPLICATE = "duplicate"
RANGE = "range"
INCLUDE = "include"


@dataclass(frozen=True)
class ParseError:
    span: SourceSpan
    message: str
    kind: str = SYNTAX

    def __str__(self) -> str:
        return f"{self.span}: {self.kind} error: {self.message}"


class ParseFailure(Exception):
    """Raised by :func:`parse_or_raise` and :func:`load`; carries every error."""

    def __init__(self, errors: list[ParseError]):
        self.errors = errors
        super().__init__("\n".join(str(e) for e in errors))


# --- lexer ------------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT STRING INT REAL PUNCT EOF
    value: object
    span: SourceSpan


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<real>[-+]?(?:\d+\.\d*|\.\d+|\d+(?=[eE]))(?:[eE][-+]?\d+)?)
  | (?P<int>[-+]?\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_-]*)
  | (?P<string>")
  | (?P<punct>[{}(),:=])
    """,
    re.VERBOSE,
)


def tokenize(text: str, origin: str) -> tuple[list[Token], list[ParseError]]:
    tokens: list[Token] = []
    errors: list[ParseError] = []
    pos, line, line_start = 0, 1, 0
    n = len(text)
    while pos < n:
        col = pos - line_start + 1
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            errors.append(ParseError(SourceSpan(origin, line, col, 1), f"illegal character {text[pos]!r}", LEXICAL))
            pos += 1
            continue
        kind = m.lastgroup
        if kind == "string":
            value, end, err = _scan_string(text, pos)
            span = SourceSpan(origin, line, col, max(1, end - pos))
            if err:
                errors.append(ParseError(span, err, LEXICAL))
            tokens.append(Token("STRING", value, span))
            nl = text.count("\n", pos, end)
            if nl:
                line += nl
                line_start = text.rindex("\n", pos, end) + 1
            pos = end
            continue
        lexeme = m.group()
        span = SourceSpan(origin, line, col, max(1, len(lexeme)))
        if kind == "ws" or kind == "comment":
            nl = lexeme.count("\n")
            if nl:
                line += nl
                line_start = pos + lexeme.rindex("\n") + 1
        elif kind == "real":
            tokens.append(Token("REAL", float(lexeme), span))
        elif kind == "int":
            tokens.append(Token("INT", int(lexeme), span))
        elif kind == "ident":
            tokens.append(Token("IDENT", lexeme, span))
        else:
            tokens.append(Token("PUNCT", lexeme, span))
        pos = m.end()
    tokens.append(Token("EOF", None, SourceSpan(origin, line, pos - line_start + 1, 1)))
    return tokens, errors


def _scan_string(text: str, start: int) -> tuple[str, int, str | None]:
    out = []
    i = start + 1
    while i < len(text):
        ch = text[i]
        if ch == '"':
            return "".join(out), i + 1, None
        if ch == "\\":
            nxt = text[i + 1] if i + 1 < len(text) else ""
            if nxt in ('"', "\\"):
                out.append(nxt)
                i += 2
                continue
            return "".join(out), i + 2, f"invalid escape '\\{nxt}' in string"
        out.append(ch)
        i += 1
    return "".join(out), i, "unterminated string"


# --- parser -----------------------------------------------------------------


class _BlockError(Exception):
    def __init__(self, error: ParseError):
        self.error = error


TOP_KEYWORDS = (
    "include", "architecture", "component", "pseudo_element", "interface",
    "failure_mode", "fmea", "fault_tree", "mitigation", "simulation",
)


class _Parser:
    def __init__(self, tokens: list[Token], origin: str, check_ranges: bool):
        self.toks = tokens
        self.i = 0
        self.origin = origin
        self.check_ranges = check_ranges
        self.errors: list[ParseError] = []
        self.decls: list[tuple[str, object]] = []

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "EOF":
            self.i += 1
        return t

    def fail(self, msg: str, tok: Token | None = None, kind: str = SYNTAX):
        raise _BlockError(ParseError((tok or self.tok).span, msg, kind))

    def _describe(self, t: Token) -> str:
        if t.kind == "EOF":
            return "end of input"
        if t.kind == "STRING":
            return "string literal"
        return repr(str(t.value))

    def is_punct(self, p: str, t: Token | None = None) -> bool:
        t = t or self.tok
        return t.kind == "PUNCT" and t.value == p

    def expect_punct(self, p: str) -> Token:
        if not self.is_punct(p):
            self.fail(f"expected '{p}', found {self._describe(self.tok)}")
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "IDENT":
            self.fail(f"expected {what}, found {self._describe(self.tok)}")
        return self.advance()

    def expect_string(self) -> str:
        if self.tok.kind != "STRING":
            self.fail(f"expected string, found {self._describe(self.tok)}")
        return self.advance().value

    def expect_int(self) -> tuple[int, Token]:
        if self.tok.kind != "INT":
            self.fail(f"expected integer, found {self._describe(self.tok)}")
        t = self.advance()
        return t.value, t

    def expect_real(self) -> tuple[float, Token]:
        if self.tok.kind not in ("INT", "REAL"):
            self.fail(f"expected number, found {self._describe(self.tok)}")
        t = self.advance()
        v = float(t.value)
        if not math.isfinite(v):
            self.fail("number is not finite", t, RANGE)
        return v, t

    def range_error(self, tok: Token, msg: str) -> None:
        if self.check_ranges:
            self.errors.append(ParseError(tok.span, msg, RANGE))

    def ident_list(self) -> tuple[str, ...]:
        items = [self.expect_ident().value]
        while self.is_punct(","):
            self.advance()
            items.append(self.expect_ident().value)
        return tuple(items)

    def string_list(self) -> tuple[str, ...]:
        items = [self.expect_string()]
        while self.is_punct(","):
            self.advance()
            items.append(self.expect_string())
        return tuple(items)

    def at_key(self) -> bool:
        return self.tok.kind == "IDENT" and self.is_punct(":", self.peek())

    def key(self, seen: dict[str, Token], repeatable: tuple[str, ...] = ()) -> str:
        t = self.expect_ident("key")
        self.expect_punct(":")
        if t.value in seen and t.value not in repeatable:
            raise _BlockError(ParseError(t.span, f"duplicate key '{t.value}' in block", DUPLICATE))
        seen[t.value] = t
        return t.value

    def require(self, seen: dict, keys: tuple[str, ...], start: Token, block: str) -> None:
        for k in keys:
            if k not in seen:
                self.fail(f"{block} is missing required key '{k}'", start)

    # top level
    def parse(self) -> None:
        while self.tok.kind != "EOF":
            start = self.i
            try:
                self.declaration()
            except _BlockError as e:
                self.errors.append(e.error)
                self.recover(start)

    def recover(self, start: int) -> None:
        """Skip to the end of the current top-level block."""
        self.i = max(self.i, start + 1)
        depth = sum(1 for t in self.toks[start:self.i] if self.is_punct("{", t)) - sum(
            1 for t in self.toks[start:self.i] if self.is_punct("}", t))
        while self.tok.kind != "EOF":
            if depth <= 0 and self.tok.kind == "IDENT" and self.tok.value in TOP_KEYWORDS:
                return
            if self.is_punct("{"):
                depth += 1
            elif self.is_punct("}"):
                depth -= 1
                self.advance()
                if depth <= 0:
                    return
                continue
            self.advance()

    def declaration(self) -> None:
        t = self.tok
        if t.kind != "IDENT" or t.value not in TOP_KEYWORDS:
            self.fail(f"expected a declaration keyword, found {self._describe(t)}")
        self.advance()
        handler = getattr(self, f"p_{t.value}")
        self.decls.append((t.value, handler(t)))

    def p_include(self, start: Token):
        if self.tok.kind != "STRING":
            self.fail("expected file name string after 'include'")
        return (self.advance().value, start.span)

    def p_architecture(self, start: Token) -> ArchitectureModel:
        self.expect_punct("{")
        seen: dict[str, Token] = {}
        name, notes = "", {}
        while not self.is_punct("}"):
            k = self.key(seen)
            if k == "name":
                name = self.expect_string()
            else:
                notes[k] = self.expect_string()
        self.expect_punct("}")
        return ArchitectureModel(name=name, annotations=notes, span=start.span)

    def p_component(self, start: Token) -> Component:
        cid = self.expect_ident("component id").value
        self.expect_punct("{")
        seen: dict[str, Token] = {}
        fields: dict[str, object] = {}
        while not self.is_punct("}"):
            k = self.key(seen)
            if k in ("name", "functionality"):
                fields[k] = self.expect_string()
            elif k in ("inputs", "outputs"):
                fields[k] = self.ident_list()
            elif k == "features":
                fields[k] = self.string_list()
            else:
                self.fail(f"unknown component key '{k}'", seen[k])
        self.expect_punct("}")
        return Component(id=cid, span=start.span, **fields)

    def p_pseudo_element(self, start: Token) -> PseudoElement:
        return PseudoElement(self.expect_ident("pseudo-element id").value, span=start.span)

    def p_interface(self, start: Token) -> Interface:
        iid = self.expect_ident("interface id").value
        self.expect_punct("{")
        seen: dict[str, Token] = {}
        fields: dict[str, object] = {}
        while not self.is_punct("}"):
            k = self.key(seen)
            if k == "from":
                fields["producer"] = self.expect_ident("component id").value
            elif k == "to":
                fields["consumers"] = self.ident_list()
            elif k == "payload":
                fields["payload"] = self.expect_string()
            else:
                self.fail(f"unknown interface key '{k}'", seen[k])
        self.require(seen, ("from", "to"), start, f"interface '{iid}'")
        self.expect_punct("}")
        return Interface(id=iid, span=start.span, **fields)

    def p_failure_mode(self, start: Token) -> AiFailureMode:
        mid = self.expect_ident("failure mode id").value
        self.expect_punct("{")
        seen: dict[str, Token] = {}
        fields: dict[str, object] = {}
        while not self.is_punct("}"):
            k = self.key(seen)
            if k == "label":
                fields["label"] = self.expect_string()
            elif k == "description":
                fields["description"] = self.expect_string()
            elif k == "guidewords":
                gws = []
                while True:
                    t = self.expect_ident("guideword")
                    try:
                        gws.append(Guideword(t.value))
                    except ValueError:
                        self.fail(
                            f"unknown guideword '{t.value}' (expected one of "
                            + ", ".join(g.value for g in Guideword) + ")", t)
                    if not self.is_punct(","):
                        break
                    self.advance()
                if len(set(gws)) != len(gws):
                    self.fail("guideword listed twice", seen[k], DUPLICATE)
                fields["guidewords"] = frozenset(gws)
            else:
                self.fail(f"unknown failure_mode key '{k}'", seen[k])
        self.require(seen, ("label", "guidewords"), start, f"failure_mode '{mid}'")
        self.expect_punct("}")
        return AiFailureMode(id=mid, span=start.span, **fields)

    def p_fmea(self, start: Token) -> FmeaEntry:
        eid = self.expect_ident("fmea entry id").value
        self.expect_punct("{")
        seen: dict[str, Token] = {}
        fields: dict[str, object] = {}
        ratings: dict[str, int] = {}
        text_keys = {"manifestation": "manifestation", "effect": "effect", "cause": "caused_by"}
        while not self.is_punct("}"):
            k = self.key(seen)
            if k == "element":
                fields["element"] = self.expect_ident("element id").value
            elif k == "mode":
                fields["failure_mode"] = self.expect_ident("failure mode id").value
            elif k in text_keys:
                fields[text_keys[k]] = self.expect_string()
            elif k in ("severity", "occurrence", "detection"):
                v, t = self.expect_int()
                if not RATING_MIN <= v <= RATING_MAX:
                    self.range_error(t, f"{k} out of range [{RATING_MIN},{RATING_MAX}]: {v}")
                ratings[k] = v
            else:
                self.fail(f"unknown fmea key '{k}'", seen[k])
        self.require(
            seen, ("element", "mode", "manifestation", "effect", "cause", "severity", "occurrence", "detection"),
            start, f"fmea '{eid}'")
        self.expect_punct("}")
        return FmeaEntry(id=eid, rating=RiskRating(**ratings), span=start.span, **fields)

    def p_fault_tree(self, start: Token) -> FaultTree:
        tid = self.expect_ident("fault tree id").value
        self.expect_punct("{")
        top = None
        nodes: dict[str, object] = {}
        while not self.is_punct("}"):
            if self.tok.kind == "IDENT" and self.tok.value == "top" and self.is_punct(":", self.peek()):
                t = self.advance()
                self.advance()
                if top is not None:
                    self.fail("duplicate key 'top' in block", t, DUPLICATE)
                top = self.expect_ident("node id").value
                continue
            nt = self.expect_ident("node definition")
            if nt.value in nodes:
                self.fail(f"duplicate node '{nt.value}' in fault tree '{tid}'", nt, DUPLICATE)
            self.expect_punct("=")
            nodes[nt.value] = self.tree_node(nt)
        if top is None:
            self.fail(f"fault_tree '{tid}' is missing required key 'top'", start)
        self.expect_punct("}")
        return FaultTree(id=tid, top=top, nodes=nodes, span=start.span)

    def tree_node(self, nt: Token):
        t = self.expect_ident("'AND', 'OR' or 'event'")
        seen: dict[str, Token] = {}
        if t.value in ("AND", "OR"):
            self.expect_punct("(")
            children = self.ident_list()
            self.expect_punct(")")
            label = ""
            if self.tok.kind == "IDENT" and self.tok.value == "label" and self.is_punct(":", self.peek()):
                self.key(seen)
                label = self.expect_string()
            return Gate(GateKind(t.value), children, label, span=nt.span)
        if t.value != "event":
            self.fail(f"expected 'AND', 'OR' or 'event', found {self._describe(t)}", t)
        fields: dict[str, object] = {}
        while self.tok.kind == "IDENT" and self.tok.value in ("p", "fmea", "label") and self.is_punct(":", self.peek()):
            k = self.key(seen)
            if k == "p":
                v, vt = self.expect_real()
                if not 0.0 <= v <= 1.0:
                    self.range_error(vt, f"probability out of range [0,1]: {v}")
                fields["probability"] = v
            elif k == "fmea":
                fields["fmea_link"] = self.expect_ident("fmea entry id").value
            else:
                fields["label"] = self.expect_string()
        return BasicEvent(span=nt.span, **fields)

    def p_mitigation(self, start: Token) -> Mitigation:
        mid = self.expect_ident("mitigation id").value
        self.expect_punct("{")
        seen: dict[str, Token] = {}
        name, comment = None, ""
        fmea_targets, fta_targets = [], []
        repeat = ("fmea_target", "delta_d", "fta_target", "monitor", "miss_p")
        while not self.is_punct("}"):
            kt = self.tok
            k = self.key(seen, repeat)
            if k == "name":
                name = self.expect_string()
            elif k == "comment":
                comment = self.expect_string()
            elif k == "fmea_target":
                entry = self.expect_ident("fmea entry id").value
                if not (self.tok.kind == "IDENT" and self.tok.value == "delta_d"):
                    self.fail("expected 'delta_d:' after fmea_target")
                self.key(seen, repeat)
                v, vt = self.expect_int()
                if v >= 0:
                    self.range_error(vt, f"delta_d must be negative, got {v}")
                fmea_targets.append(FmeaTarget(entry, v, span=kt.span))
            elif k == "fta_target":
                event = self.expect_ident("event id").value
                if not (self.tok.kind == "IDENT" and self.tok.value == "monitor"):
                    self.fail("expected 'monitor:' after fta_target")
                self.key(seen, repeat)
                label = self.expect_string()
                miss = None
                if self.tok.kind == "IDENT" and self.tok.value == "miss_p" and self.is_punct(":", self.peek()):
                    self.key(seen, repeat)
                    miss, vt = self.expect_real()
                    if not 0.0 <= miss <= 1.0:
                        self.range_error(vt, f"miss_p out of range [0,1]: {miss}")
                fta_targets.append(FtaTarget(event, label, miss, span=kt.span))
            else:
                self.fail(f"unexpected mitigation key '{k}'", kt)
        if name is None:
            self.fail(f"mitigation '{mid}' is missing required key 'name'", start)
        self.expect_punct("}")
        return Mitigation(mid, name, comment, tuple(fmea_targets), tuple(fta_targets), span=start.span)

    def p_simulation(self, start: Token) -> SimulationConfig:
        self.expect_punct("{")
        seen: dict[str, Token] = {}
        fields: dict[str, object] = {}
        while not self.is_punct("}"):
            k = self.key(seen)
            if k == "trials":
                v, t = self.expect_int()
                if v < 1:
                    self.range_error(t, f"trials must be >= 1, got {v}")
                fields[k] = v
            elif k == "seed":
                v, t = self.expect_int()
                if not 0 <= v < 2**64:
                    self.range_error(t, "seed must be a 64-bit unsigned integer")
                fields[k] = v
            elif k in ("occurrence_scale", "detection_scale"):
                v, t = self.expect_real()
                if v <= 0:
                    self.range_error(t, f"{k} must be > 0")
                fields[k] = v
            else:
                self.fail(f"unknown simulation key '{k}'", seen[k])
        self.require(seen, ("trials", "seed"), start, "simulation")
        self.expect_punct("}")
        return SimulationConfig(span=start.span, **fields)


def _default_reader(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _parse_decls(text, origin, check_ranges):
    tokens, errors = tokenize(text, origin)
    p = _Parser(tokens, origin, check_ranges)
    p.parse()
    return p.decls, errors + p.errors


def parse(
    source_text: str,
    origin: str = "<input>",
    *,
    check_ranges: bool = True,
    reader: Callable[[str], str] | None = None,
) -> HazardProject | list[ParseError]:
    """Parse project text into a :class:`HazardProject`.

    Returns the project on success or a non-empty list of :class:`ParseError`.
    Cross-reference checking is left to :func:`hysafe.model.validate_project`.
    With ``check_ranges=False`` out-of-range literals (e.g. ``severity: 11``)
    are accepted here so that validation can report them instead.

    ``include "x.hsa"`` is resolved relative to ``origin`` through ``reader``
    (defaults to reading from disk). Included files may not include further.
    """
    reader = reader or _default_reader
    decls, errors = _parse_decls(source_text, origin, check_ranges)
    merged: list[tuple[str, object]] = []
    for kind, value in decls:
        if kind != "include":
            merged.append((kind, value))
            continue
        name, span = value
        target = str(Path(origin).parent / name)
        if Path(target).resolve() == Path(origin).resolve():
            errors.append(ParseError(span, f"include cycle: '{name}' includes itself", INCLUDE))
            continue
        try:
            text = reader(target)
        except OSError as exc:
            errors.append(ParseError(span, f"cannot read included file '{name}': {exc.strerror or exc}", INCLUDE))
            continue
        sub, sub_errors = _parse_decls(text, target, check_ranges)
        errors.extend(sub_errors)
        for skind, svalue in sub:
            if skind == "include":
                _, sspan = svalue
                cyc = Path(str(Path(target).parent / svalue[0])).resolve() == Path(origin).resolve()
                msg = "include cycle" if cyc else "nested include is not supported (one include level only)"
                errors.append(ParseError(sspan, msg, INCLUDE))
            else:
                merged.append((skind, svalue))
    project, build_errors = _assemble(merged)
    errors.extend(build_errors)
    if errors:
        return sorted(errors, key=lambda e: (e.span.file != origin, e.span))
    return project


def _assemble(decls) -> tuple[HazardProject, list[ParseError]]:
    errors: list[ParseError] = []
    arch: ArchitectureModel | None = None
    buckets: dict[str, list] = {k: [] for k in TOP_KEYWORDS}
    sim = None
    for kind, value in decls:
        if kind == "architecture":
            if arch is not None:
                errors.append(ParseError(value.span, "duplicate 'architecture' block", DUPLICATE))
            arch = value
        elif kind == "simulation":
            if sim is not None:
                errors.append(ParseError(value.span, "duplicate 'simulation' block", DUPLICATE))
            sim = value
        else:
            buckets[kind].append(value)
    arch = arch or ArchitectureModel()
    arch = ArchitectureModel(
        name=arch.name,
        components=tuple(buckets["component"]),
        interfaces=tuple(buckets["interface"]),
        pseudo_elements=tuple(buckets["pseudo_element"]),
        annotations=arch.annotations,
        span=arch.span,
    )
    project = HazardProject(
        architecture=arch,
        taxonomy=tuple(buckets["failure_mode"]),
        fmea=tuple(buckets["fmea"]),
        trees=tuple(buckets["fault_tree"]),
        mitigations=tuple(buckets["mitigation"]),
        sim_config=sim,
    )
    return project, errors


def parse_or_raise(source_text: str, origin: str = "<input>", **kw) -> HazardProject:
    result = parse(source_text, origin, **kw)
    if isinstance(result, list):
        raise ParseFailure(result)
    return result


def load(path, **kw) -> HazardProject:
    """Read and parse a project file; raises :class:`ParseFailure` or ``OSError``."""
    path = str(path)
    return parse_or_raise(_default_reader(path), path, **kw)


def merge(projects: list[HazardProject]) -> HazardProject:
    """Concatenate several projects' declarations (first architecture block wins)."""
    if len(projects) == 1:
        return projects[0]
    arch_src = next((p.architecture for p in projects if p.architecture.name or p.architecture.annotations),
                    ArchitectureModel())
    sim = next((p.sim_config for p in projects if p.sim_config is not None), None)
    cat = lambda attr: tuple(x for p in projects for x in getattr(p, attr))  # noqa: E731
    archs = [p.architecture for p in projects]
    return HazardProject(
        architecture=ArchitectureModel(
            name=arch_src.name,
            components=tuple(c for a in archs for c in a.components),
            interfaces=tuple(i for a in archs for i in a.interfaces),
            pseudo_elements=tuple(x for a in archs for x in a.pseudo_elements),
            annotations=arch_src.annotations,
            span=arch_src.span,
        ),
        taxonomy=cat("taxonomy"),
        fmea=cat("fmea"),
        trees=cat("trees"),
        mitigations=cat("mitigations"),
        sim_config=sim,
    )


# --- serializer -------------------------------------------------------------


def quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _num(x: float) -> str:
    r = repr(float(x))
    return r if ("." in r or "e" in r) else r + ".0"


def serialize(project: HazardProject) -> str:
    """Canonical text for a project: fixed key order, two-space indent."""
    out: list[str] = []

    def block(header: str, lines: list[str]) -> None:
        out.append(header + " {")
        out.extend("  " + ln for ln in lines)
        out.append("}")
        out.append("")

    arch = project.architecture
    if arch.name or arch.annotations:
        lines = [f"name: {quote(arch.name)}"] if arch.name else []
        lines += [f"{k}: {quote(v)}" for k, v in arch.annotations.items()]
        block("architecture", lines)
    for c in arch.components:
        lines = []
        if c.name:
            lines.append(f"name: {quote(c.name)}")
        if c.functionality:
            lines.append(f"functionality: {quote(c.functionality)}")
        if c.inputs:
            lines.append("inputs: " + ", ".join(c.inputs))
        if c.outputs:
            lines.append("outputs: " + ", ".join(c.outputs))
        if c.features:
            lines.append("features: " + ", ".join(quote(f) for f in c.features))
        block(f"component {c.id}", lines)
    for p in arch.pseudo_elements:
        out.append(f"pseudo_element {p.id}")
    if arch.pseudo_elements:
        out.append("")
    for i in arch.interfaces:
        lines = [f"from: {i.producer}", "to: " + ", ".join(i.consumers)]
        if i.payload:
            lines.append(f"payload: {quote(i.payload)}")
        block(f"interface {i.id}", lines)
    for m in project.taxonomy:
        lines = [f"label: {quote(m.label)}",
                 "guidewords: " + ", ".join(g.value for g in sorted_guidewords(m.guidewords))]
        if m.description:
            lines.append(f"description: {quote(m.description)}")
        block(f"failure_mode {m.id}", lines)
    for e in project.fmea:
        r = e.rating
        block(f"fmea {e.id}", [
            f"element: {e.element}",
            f"mode: {e.failure_mode}",
            f"manifestation: {quote(e.manifestation)}",
            f"effect: {quote(e.effect)}",
            f"cause: {quote(e.caused_by)}",
            f"severity: {r.severity}",
            f"occurrence: {r.occurrence}",
            f"detection: {r.detection}",
        ])
    for t in project.trees:
        lines = [f"top: {t.top}"]
        for nid, node in t.nodes.items():
            if isinstance(node, Gate):
                s = f"{nid} = {node.kind.value}({', '.join(node.children)})"
                if node.label:
                    s += f" label: {quote(node.label)}"
            else:
                s = f"{nid} = event"
                if node.probability is not None:
                    s += f" p: {_num(node.probability)}"
                if node.fmea_link is not None:
                    s += f" fmea: {node.fmea_link}"
                if node.label:
                    s += f" label: {quote(node.label)}"
            lines.append(s)
        block(f"fault_tree {t.id}", lines)
    for m in project.mitigations:
        lines = [f"name: {quote(m.name)}"]
        if m.comment:
            lines.append(f"comment: {quote(m.comment)}")
        for ft in m.fmea_targets:
            lines.append(f"fmea_target: {ft.entry} delta_d: {ft.detection_delta}")
        for tt in m.fta_targets:
            s = f"fta_target: {tt.event} monitor: {quote(tt.monitor_label)}"
            if tt.miss_probability is not None:
                s += f" miss_p: {_num(tt.miss_probability)}"
            lines.append(s)
        block(f"mitigation {m.id}", lines)
    cfg = project.sim_config
    if cfg is not None:
        block("simulation", [
            f"trials: {cfg.trials}",
            f"seed: {cfg.seed}",
            f"occurrence_scale: {_num(cfg.occurrence_scale)}",
            f"detection_scale: {_num(cfg.detection_scale)}",
        ])
    while out and out[-1] == "":
        out.pop()
    return "\n".join(out) + "\n" if out else ""
