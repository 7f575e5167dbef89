"""Markdown tables, Graphviz DOT graphs and the JSON summary document."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass

from .fmea import FmeaDeltaReport, RankedFmea
from .fta import CutSetReport, ProbabilityResult
from .model import Gate, GateKind, HazardProject, FaultTree, sorted_guidewords
from .sim import SimulationReport

FMEA_COLUMNS = ("System Element", "AI Failure Mode (Guidewords)", "Manifestation", "Effect",
                "Caused By", "S", "O", "D", "RPN")
DELTA_COLUMNS = ("System Element", "AI Failure Mode (Guidewords)", "Mitigation", "D Delta", "RPN Delta")


def _cell(text) -> str:
    return str(text).replace("\\", "\\\\").replace("|", "\\|").replace("\n", " ")


def _table(header, rows) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(_cell(c) for c in row) + " |" for row in rows]
    return "\n".join(lines) + "\n"


def guideword_text(guidewords) -> str:
    """Compact display of a guideword set.

    Shared leading or trailing words are written once:
    {IncorrectValue, IncorrectTiming} -> "Incorrect Value/Timing",
    {ValueTooHigh, ValueTooLow} -> "Value too high/low".
    """
    words = [g.display.split() for g in sorted_guidewords(guidewords)]
    if not words:
        return ""
    if len(words) == 1:
        return " ".join(words[0])
    head = 0
    while all(len(w) > head + 1 for w in words) and len({w[head] for w in words}) == 1:
        head += 1
    tail = 0
    while all(len(w) > head + tail + 1 for w in words) and len({w[-1 - tail] for w in words}) == 1:
        tail += 1
    middles = [" ".join(w[head:len(w) - tail]) for w in words]
    parts = [" ".join(words[0][:head]), "/".join(middles), " ".join(words[0][len(words[0]) - tail:] if tail else [])]
    return " ".join(p for p in parts if p)


def mode_text(project: HazardProject, mode_id: str) -> str:
    mode = project.failure_mode(mode_id)
    if mode is None:
        return mode_id
    return f"{mode.label} ({guideword_text(mode.guidewords)})"


def render_fmea(ranked: RankedFmea, project: HazardProject) -> str:
    rows = []
    for r in ranked.entries:
        e = r.entry
        rows.append((
            project.architecture.element_name(e.element),
            mode_text(project, e.failure_mode),
            e.manifestation, e.effect, e.caused_by,
            e.rating.severity, e.rating.occurrence, e.rating.detection, r.rpn,
        ))
    return _table(FMEA_COLUMNS, rows)


def render_fmea_delta(report: FmeaDeltaReport, project: HazardProject) -> str:
    rows = []
    for row in report.rows:
        e = project.entry(row.entry_id)
        m = project.mitigation(row.mitigation_id)
        rows.append((
            project.architecture.element_name(e.element) if e else row.entry_id,
            mode_text(project, e.failure_mode) if e else "",
            m.name if m else row.mitigation_id,
            f"{row.d_before}→{row.d_after} ({row.d_delta:+d})",
            f"{row.rpn_before}→{row.rpn_after} ({row.rpn_delta:+d})",
        ))
    return _table(DELTA_COLUMNS, rows)


# --- DOT ---------------------------------------------------------------------


def dot_id(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _attrs(**kw) -> str:
    return "[" + ", ".join(f"{k}={dot_id(str(v))}" for k, v in kw.items()) + "]"


GATE_SHAPES = {GateKind.AND: "box", GateKind.OR: "invtriangle"}


def render_fta_dot(tree: FaultTree, cut_report: CutSetReport | None = None) -> str:
    """Fault tree as a top-down digraph.

    AND gates are boxes, OR gates inverted triangles, basic events ellipses.
    With a cut-set report, single points of failure get a red border.
    """
    singles = set(cut_report.single_points) if cut_report else set()
    lines = [f"digraph {dot_id(tree.id)} {{", "  rankdir=TB;"]
    for nid in tree.reachable():
        node = tree.nodes[nid]
        if isinstance(node, Gate):
            label = f"{node.kind.value}\\n{node.label or nid}"
            lines.append(f"  {dot_id(nid)} {_attrs(shape=GATE_SHAPES[node.kind], label=label)};")
        else:
            text = node.label or nid
            if node.probability is not None:
                text += f"\\np={node.probability:.6g}"
            attrs = {"shape": "ellipse", "label": text}
            if nid in singles:
                attrs["color"] = "red"
            lines.append(f"  {dot_id(nid)} {_attrs(**attrs)};")
    for nid in tree.reachable():
        node = tree.nodes[nid]
        if isinstance(node, Gate):
            lines.extend(f"  {dot_id(nid)} -> {dot_id(c)};" for c in node.children)
    lines.append("}")
    return "\n".join(lines) + "\n"


def render_architecture_dot(project: HazardProject) -> str:
    arch = project.architecture
    lines = [f"digraph {dot_id(arch.name or 'architecture')} {{", "  rankdir=LR;"]
    for c in arch.components:
        lines.append(f"  {dot_id(c.id)} {_attrs(shape='box', label=c.display_name)};")
    for p in arch.pseudo_elements:
        lines.append(f"  {dot_id(p.id)} {_attrs(shape='note', label=p.display_name)};")
    for i in arch.interfaces:
        for cons in i.consumers:
            lines.append(f"  {dot_id(i.producer)} -> {dot_id(cons)} {_attrs(label=i.id)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


_DOT_TOKEN = re.compile(r'\s+|(?P<str>"(?:[^"\\]|\\.)*")|(?P<id>[A-Za-z_][A-Za-z0-9_]*|-?\d+(?:\.\d+)?)'
                        r"|(?P<arrow>->)|(?P<p>[{}\[\];,=])")


class DotSyntaxError(ValueError):
    pass


def check_dot(text: str) -> None:
    """Validate the DOT subset emitted here; raises :class:`DotSyntaxError`.

    Grammar: ``digraph ID { stmt* }`` where a statement is ``ID = ID ;``,
    ``ID [attrs] ;`` or ``ID -> ID [attrs] ;`` and attrs are ``ID = ID``
    pairs separated by commas.
    """
    toks = []
    pos = 0
    while pos < len(text):
        m = _DOT_TOKEN.match(text, pos)
        if m is None:
            raise DotSyntaxError(f"unexpected character {text[pos]!r} at offset {pos}")
        if m.lastgroup:
            kind = "id" if m.lastgroup == "str" else m.lastgroup
            toks.append((kind, m.group()))
        pos = m.end()
    toks.append(("eof", ""))
    i = 0

    def take(kind, value=None):
        nonlocal i
        k, v = toks[i]
        if k != kind or (value is not None and v != value):
            raise DotSyntaxError(f"expected {value or kind}, found {v or k!r}")
        i += 1
        return v

    def attr_list():
        take("p", "[")
        while toks[i] != ("p", "]"):
            take("id")
            take("p", "=")
            take("id")
            if toks[i] == ("p", ","):
                take("p", ",")
        take("p", "]")

    if take("id") != "digraph":
        raise DotSyntaxError("only digraphs are emitted")
    take("id")
    take("p", "{")
    while toks[i] != ("p", "}"):
        take("id")
        if toks[i] == ("p", "="):
            take("p", "=")
            take("id")
        elif toks[i][0] == "arrow":
            take("arrow")
            take("id")
            if toks[i] == ("p", "["):
                attr_list()
        elif toks[i] == ("p", "["):
            attr_list()
        take("p", ";")
    take("p", "}")
    take("eof")


# --- JSON --------------------------------------------------------------------


def _num(x):
    if isinstance(x, bool) or x is None:
        return x
    if isinstance(x, int):
        return x
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.12g}")


def fmea_json(ranked: RankedFmea) -> list[dict]:
    return [
        {
            "rank": r.rank,
            "id": r.entry.id,
            "element": r.entry.element,
            "failure_mode": r.entry.failure_mode,
            "severity": r.entry.rating.severity,
            "occurrence": r.entry.rating.occurrence,
            "detection": r.entry.rating.detection,
            "rpn": r.rpn,
        }
        for r in ranked.entries
    ]


def delta_json(report: FmeaDeltaReport) -> list[dict]:
    return [
        {
            "id": row.entry_id,
            "mitigation": row.mitigation_id,
            "d_before": row.d_before,
            "d_after": row.d_after,
            "d_delta": row.d_delta,
            "rpn_before": row.rpn_before,
            "rpn_after": row.rpn_after,
            "rpn_delta": row.rpn_delta,
        }
        for row in report.rows
    ]


def simulation_json(sim: SimulationReport) -> dict:
    return {
        "trials": sim.trials,
        "seed": sim.seed,
        "mitigated": sim.mitigated,
        "residual_rate": _num(sim.residual_rate),
        "wilson_95_interval": [_num(v) for v in sim.wilson_95_interval],
        "analytic_rate": _num(sim.analytic_rate),
        "modes": [
            {
                "id": m.entry_id,
                "failure_mode": m.failure_mode,
                "injected": m.injected,
                "detected_by_monitor": m.detected_by_monitor,
                "detected_by_evaluator": m.detected_by_evaluator,
                "escaped": m.escaped,
                "residual_rate": _num(m.residual_rate),
                "wilson_95_interval": [_num(v) for v in m.wilson_95_interval],
                "analytic_rate": _num(m.analytic_rate),
            }
            for m in sim.modes
        ],
    }


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def render_summary_json(
    project: HazardProject,
    ranked: RankedFmea,
    cut_report: CutSetReport | None,
    prob: ProbabilityResult | None,
    sim: SimulationReport | None = None,
) -> str:
    doc = {
        "fmea": fmea_json(ranked),
        "cut_sets": cut_report.as_lists() if cut_report else [],
        "single_points": list(cut_report.single_points) if cut_report else [],
        "probability": None if prob is None else {
            "exact": _num(prob.exact),
            "rare_event_upper": _num(prob.rare_event_upper),
        },
        "simulation": None if sim is None else simulation_json(sim),
    }
    return dumps(doc)


def render_simulation_table(sim: SimulationReport) -> str:
    header = ("Entry", "Failure Mode", "Injected", "Monitor", "Evaluator", "Escaped",
              "Residual", "Wilson 95%", "Analytic")
    rows = [
        (m.entry_id, m.failure_mode, m.injected, m.detected_by_monitor, m.detected_by_evaluator, m.escaped,
         f"{m.residual_rate:.6g}", f"[{m.wilson_95_interval[0]:.6g}, {m.wilson_95_interval[1]:.6g}]",
         f"{m.analytic_rate:.6g}")
        for m in sim.modes
    ]
    rows.append(("(any)", "", "", "", "", sim.escaped_trials, f"{sim.residual_rate:.6g}",
                 f"[{sim.wilson_95_interval[0]:.6g}, {sim.wilson_95_interval[1]:.6g}]", f"{sim.analytic_rate:.6g}"))
    return _table(header, rows)


@dataclass(frozen=True)
class ReportBundle:
    fmea_markdown: str
    fmea_delta_markdown: str
    fta_dot_before: str
    fta_dot_after: str | None
    architecture_dot: str
    summary_json: str

    FILES = {
        "fmea_markdown": "fmea.md",
        "fmea_delta_markdown": "fmea_delta.md",
        "fta_dot_before": "fta_before.dot",
        "fta_dot_after": "fta_after.dot",
        "architecture_dot": "architecture.dot",
        "summary_json": "summary.json",
    }

    def files(self) -> dict[str, str]:
        out = {}
        for attr, name in self.FILES.items():
            text = getattr(self, attr)
            if text is not None:
                out[name] = text
        return out
