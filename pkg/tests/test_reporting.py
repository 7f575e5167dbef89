from __future__ import annotations

import json
import re
from dataclasses import replace

import pytest

from hysafe.fmea import apply_fmea_mitigations, rank_fmea
from hysafe.fta import apply_fta_mitigations, minimal_cut_sets, top_event_probability
from hysafe.model import BasicEvent, FaultTree, FtaTarget, Gate, GateKind, Guideword, HazardProject, Mitigation
from hysafe.reporting import (
    DotSyntaxError,
    ReportBundle,
    check_dot,
    guideword_text,
    render_architecture_dot,
    render_fmea,
    render_fmea_delta,
    render_fta_dot,
    render_simulation_table,
    render_summary_json,
)
from hysafe.sim import run_simulation

G = Guideword


def pair(kind, p1=None, p2=None):
    return FaultTree("t", "top", {"top": Gate(kind, ("e1", "e2")),
                                  "e1": BasicEvent(probability=p1), "e2": BasicEvent(probability=p2)})


def table_rows(md):
    return [[c.strip() for c in line.strip("|").split(" | ")] for line in md.splitlines()[2:]]


def node_lines(dot):
    return {m.group(1): m.group(2) for m in re.finditer(r'^\s*"([^"]+)" \[(.*)\];$', dot, re.M)}


def edges(dot):
    return re.findall(r'^\s*"([^"]+)" -> "([^"]+)";$', dot, re.M)


# --- markdown -------------------------------------------------------------------


def test_fmea_table(reference):
    md = render_fmea(rank_fmea(reference), reference)
    lines = md.splitlines()
    assert lines[0] == ("| System Element | AI Failure Mode (Guidewords) | Manifestation | Effect | Caused By "
                        "| S | O | D | RPN |")
    rows = table_rows(md)
    assert rows[0][-1] == "252"
    assert [int(r[-1]) for r in rows] == [252, 252, 216, 162, 150, 150, 100, 80]
    assert rows[0][0] == "Latent Denoiser - Quantized Activations"
    assert any(r[1] == "Temporal Reasoning Failure (Incorrect Value/Timing)" for r in rows)


def test_empty_fmea_is_header_only():
    md = render_fmea(rank_fmea(HazardProject()), HazardProject())
    assert len(md.splitlines()) == 2


@pytest.mark.parametrize("gws, text", [
    ({G.INCORRECT_VALUE, G.INCORRECT_TIMING}, "Incorrect Value/Timing"),
    ({G.VALUE_TOO_HIGH, G.VALUE_TOO_LOW}, "Value too high/low"),
    ({G.INCORRECT_VALUE, G.MISSING_VALUE}, "Incorrect/Missing Value"),
    ({G.MISSING_VALUE}, "Missing Value"),
    (set(), ""),
])
def test_guideword_text(gws, text):
    assert guideword_text(gws) == text


def test_pipes_in_cells_are_escaped(reference):
    e = replace(reference.fmea[0], effect="a | b")
    md = render_fmea(rank_fmea(replace(reference, fmea=(e,))), reference)
    assert "a \\| b" in md


def test_delta_table(reference):
    report, _ = apply_fmea_mitigations(reference, [m.id for m in reference.mitigations])
    rows = table_rows(render_fmea_delta(report, reference))
    assert rows[0][3] == "4→1 (-3)"
    assert rows[0][4] == "252→63 (-189)"
    assert [r[4].split("(")[1].rstrip(")") for r in rows] == ["-189", "-189", "-162", "-108", "-100", "-100", "-50", "-40"]


# --- DOT --------------------------------------------------------------------------


def test_and_tree_dot():
    t = pair(GateKind.AND)
    dot = render_fta_dot(t)
    check_dot(dot)
    assert set(edges(dot)) == {("top", "e1"), ("top", "e2")}
    nodes = node_lines(dot)
    assert 'shape="box"' in nodes["top"]
    assert all('shape="ellipse"' in nodes[e] for e in ("e1", "e2"))
    assert 'shape="invtriangle"' in node_lines(render_fta_dot(pair(GateKind.OR)))["top"]


def test_single_points_flagged_red():
    t = pair(GateKind.OR)
    nodes = node_lines(render_fta_dot(t, minimal_cut_sets(t)))
    assert all('color="red"' in nodes[e] for e in ("e1", "e2"))
    t = pair(GateKind.AND)
    assert 'color="red"' not in render_fta_dot(t, minimal_cut_sets(t))


def test_mitigated_tree_gains_monitor_nodes(reference):
    t = reference.trees[0]
    after = apply_fta_mitigations(t, list(reference.mitigations), strict=False)
    before_nodes, after_nodes = node_lines(render_fta_dot(t)), node_lines(render_fta_dot(after))
    added = set(after_nodes) - set(before_nodes)
    # one guard AND and one monitor ellipse per mitigated event
    assert len(added) == 2 * 5
    assert sum('shape="box"' in after_nodes[n] for n in added) == 5
    assert sum('shape="ellipse"' in after_nodes[n] for n in added) == 5
    dot = render_fta_dot(after, minimal_cut_sets(after))
    assert [n for n, a in node_lines(dot).items() if 'color="red"' in a] == ["ev_feature_degradation"]


def test_dot_outputs_validate(reference):
    t = reference.trees[0]
    for dot in (render_fta_dot(t), render_fta_dot(t, minimal_cut_sets(t)), render_architecture_dot(reference)):
        check_dot(dot)
    weird = FaultTree('q"uote', "top", {"top": Gate(GateKind.OR, ("e",), 'say "hi" \\ there'),
                                         "e": BasicEvent('x"y', 0.5)})
    check_dot(render_fta_dot(weird))


@pytest.mark.parametrize("bad", [
    "graph g { a; }",
    "digraph g { a -> ; }",
    'digraph g { a [shape="box" }',
    "digraph g { a }",
    "digraph g { a; } trailing",
    'digraph g { "unterminated; }',
])
def test_dot_validator_rejects_malformed(bad):
    with pytest.raises(DotSyntaxError):
        check_dot(bad)


def test_architecture_dot(reference):
    dot = render_architecture_dot(reference)
    pairs = set(edges_with_labels(dot))
    for i in reference.architecture.interfaces:
        for c in i.consumers:
            assert (i.producer, c) in pairs
    assert len(node_lines(dot)) == len(reference.architecture.components) + len(reference.architecture.pseudo_elements)


def edges_with_labels(dot):
    return re.findall(r'^\s*"([^"]+)" -> "([^"]+)" \[', dot, re.M)


# --- JSON -------------------------------------------------------------------------


def test_summary_json_without_simulation(reference):
    t = reference.trees[0]
    doc = json.loads(render_summary_json(reference, rank_fmea(reference), minimal_cut_sets(t), None))
    assert list(doc) == ["fmea", "cut_sets", "single_points", "probability", "simulation"]
    assert doc["simulation"] is None and doc["probability"] is None
    assert doc["fmea"][0]["rpn"] == 252
    assert len(doc["single_points"]) == 6


def test_summary_json_probability():
    t = pair(GateKind.OR, 0.1, 0.2)
    p = HazardProject(trees=(t,))
    doc = json.loads(render_summary_json(p, rank_fmea(p), minimal_cut_sets(t), top_event_probability(t)))
    assert doc["probability"] == {"exact": 0.28, "rare_event_upper": 0.3}
    assert doc["cut_sets"] == [["e1"], ["e2"]]


def test_summary_json_with_simulation_is_stable(reference):
    sim = run_simulation(reference, trials=2000)
    render = lambda: render_summary_json(reference, rank_fmea(reference), None, None, sim)  # noqa: E731
    text = render()
    assert text == render()
    doc = json.loads(text)
    assert doc["simulation"]["trials"] == 2000
    for mode in doc["simulation"]["modes"]:
        for key in ("residual_rate", "analytic_rate"):
            digits = re.sub(r"[^0-9]", "", repr(mode[key]).split("e")[0]).lstrip("0")
            assert len(digits) <= 12


def test_simulation_table(reference):
    sim = run_simulation(reference, trials=500)
    md = render_simulation_table(sim)
    rows = table_rows(md)
    assert len(rows) == len(sim.modes) + 1 and rows[-1][0] == "(any)"


def test_bundle_file_names():
    b = ReportBundle("a", "b", "c", None, "e", "f")
    assert list(b.files()) == ["fmea.md", "fmea_delta.md", "fta_before.dot", "architecture.dot", "summary.json"]


def test_monitor_label_used_for_new_node():
    t = pair(GateKind.OR)
    after = apply_fta_mitigations(t, [Mitigation("m", "m", fta_targets=(FtaTarget("e1", "Policy Monitor"),))])
    nodes = node_lines(render_fta_dot(after))
    assert 'label="Policy Monitor"' in nodes["Policy_Monitor"]
