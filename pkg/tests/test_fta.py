from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from hysafe.fta import (
    ResourceLimitError,
    apply_fta_mitigations,
    evaluate_assignment,
    minimal_cut_sets,
    minimize,
    or_tree,
    top_event_probability,
)
from hysafe.model import BasicEvent, DomainError, FaultTree, FtaTarget, Gate, GateKind, Mitigation, monitor_node_id

AND, OR = GateKind.AND, GateKind.OR


def tree(top, gates, probs=None):
    """Build a tree from {gate_id: (kind, children)}; leaves are inferred."""
    probs = probs or {}
    nodes = {g: Gate(k, tuple(ch)) for g, (k, ch) in gates.items()}
    for k, ch in gates.values():
        for c in ch:
            if c not in gates:
                nodes[c] = BasicEvent(label=c, probability=probs.get(c))
    return FaultTree("t", top, nodes)


def monitors_for(events, rng=None, tag="mon"):
    rng = rng or random.Random(0)
    return [Mitigation(f"m_{e}", f"guard {e}", fta_targets=(FtaTarget(e, f"{tag}_{e}", round(rng.uniform(0, 0.99), 3)),))
            for e in events]


seeds = st.integers(min_value=0, max_value=2**32 - 1)


def tree_from_seed(seed, **kw):
    return oracles.random_tree(random.Random(seed), **kw)


# --- cut sets ---------------------------------------------------------------


def test_or_gives_two_single_points():
    r = minimal_cut_sets(tree("top", {"top": (OR, ["e1", "e2"])}))
    assert r.as_lists() == [["e1"], ["e2"]]
    assert r.single_points == ("e1", "e2")


def test_and_gives_one_pair():
    r = minimal_cut_sets(tree("top", {"top": (AND, ["e1", "e2"])}))
    assert r.as_lists() == [["e1", "e2"]]
    assert r.single_points == ()


def test_mixed_tree_matches_brute_force():
    t = tree("top", {"top": (OR, ["a", "e3", "b"]), "a": (AND, ["e1", "e2"]), "b": (AND, ["e2", "e4"])})
    expected = oracles.minimal_true_points(t)
    assert expected == {frozenset({"e3"}), frozenset({"e1", "e2"}), frozenset({"e2", "e4"})}
    assert minimal_cut_sets(t).as_lists() == [["e3"], ["e1", "e2"], ["e2", "e4"]]


def test_absorption_through_shared_subtree():
    # e1 alone fires via g, so the {e1, e2} path is absorbed
    t = tree("top", {"top": (OR, ["g", "h"]), "g": (OR, ["e1", "e3"]), "h": (AND, ["g", "e2"])})
    assert minimal_cut_sets(t).as_lists() == [["e1"], ["e3"]]


def test_minimize_drops_supersets_and_sorts():
    sets = [frozenset("bc"), frozenset("b"), frozenset("abc"), frozenset("ad"), frozenset("b")]
    assert minimize(sets) == [frozenset("b"), frozenset("ad")]


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_cut_sets_equal_minimal_true_points(seed):
    t = tree_from_seed(seed)
    report = minimal_cut_sets(t)
    assert set(report.cut_sets) == oracles.minimal_true_points(t)
    assert list(report.cut_sets) == sorted(report.cut_sets, key=lambda s: (len(s), sorted(s)))
    assert report.single_points == tuple(sorted(next(iter(c)) for c in report.cut_sets if len(c) == 1))


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_every_cut_set_fires_and_no_proper_subset_does(seed):
    t = tree_from_seed(seed)
    for cs in minimal_cut_sets(t).cut_sets:
        assert evaluate_assignment(t, cs)
        for e in cs:
            assert not evaluate_assignment(t, cs - {e})


def test_event_limit_raises_resource_error():
    t = tree("top", {"top": (OR, [f"e{i}" for i in range(10)])})
    with pytest.raises(ResourceLimitError, match="HYSAFE_EVENT_LIMIT") as exc:
        minimal_cut_sets(t, limit=9)
    assert exc.value.limit == 9
    assert len(minimal_cut_sets(t, limit=10).cut_sets) == 10


def test_cycle_is_rejected():
    t = FaultTree("t", "a", {"a": Gate(OR, ("b", "e")), "b": Gate(AND, ("a",)), "e": BasicEvent()})
    with pytest.raises(DomainError, match="cycle"):
        minimal_cut_sets(t)


def test_dangling_child_is_rejected():
    t = FaultTree("t", "top", {"top": Gate(OR, ("ghost",))})
    with pytest.raises(DomainError, match="ghost"):
        minimal_cut_sets(t)


# --- evaluate_assignment ----------------------------------------------------


def test_evaluate_and_gate():
    t = tree("top", {"top": (AND, ["e1", "e2"])})
    assert evaluate_assignment(t, {"e1"}) is False
    assert evaluate_assignment(t, {"e1", "e2"}) is True


def test_evaluate_shared_dag():
    t = tree("top", {"top": (OR, ["a", "b"]), "a": (AND, ["e1", "e2"]), "b": (AND, ["e1", "e3"])})
    assert len(t.nodes) == 6
    assert evaluate_assignment(t, {"e1", "e3"}) is True
    assert evaluate_assignment(t, {"e2", "e3"}) is False


def test_evaluate_unknown_or_gate_id_raises():
    t = tree("top", {"top": (AND, ["e1", "e2"])})
    with pytest.raises(DomainError):
        evaluate_assignment(t, {"nope"})
    with pytest.raises(DomainError):
        evaluate_assignment(t, {"top"})


@settings(max_examples=100, deadline=None)
@given(seeds, st.data())
def test_coherence(seed, data):
    t = tree_from_seed(seed)
    events = oracles.events_of(t)
    chosen = data.draw(st.sets(st.sampled_from(events)))
    extra = data.draw(st.sampled_from(events))
    assert evaluate_assignment(t, chosen) == oracles.holds(t, chosen)
    if evaluate_assignment(t, chosen):
        assert evaluate_assignment(t, chosen | {extra})


# --- probability ------------------------------------------------------------


def test_or_probability_exact_and_bound():
    t = tree("top", {"top": (OR, ["e1", "e2"])}, {"e1": 0.1, "e2": 0.2})
    assert oracles.enumerated_probability(t) == pytest.approx(0.28, abs=1e-15)
    r = top_event_probability(t)
    assert r.exact == pytest.approx(0.28, abs=1e-12)
    assert r.rare_event_upper == pytest.approx(0.30, abs=1e-12)


def test_and_probability_is_product():
    t = tree("top", {"top": (AND, ["e1", "e2"])}, {"e1": 0.1, "e2": 0.2})
    r = top_event_probability(t)
    assert r.exact == pytest.approx(0.02, abs=1e-15)
    assert r.rare_event_upper == pytest.approx(0.02, abs=1e-15)


def test_zero_probability_event():
    t = tree("top", {"top": (OR, ["e"])}, {"e": 0.0})
    assert top_event_probability(t).exact == 0.0


def test_shared_event_not_double_counted():
    # OR(AND(a,b), AND(a,c)) = a and (b or c); naive gate arithmetic gets this wrong
    p = {"a": 0.5, "b": 0.5, "c": 0.5}
    t = tree("top", {"top": (OR, ["x", "y"]), "x": (AND, ["a", "b"]), "y": (AND, ["a", "c"])}, p)
    assert top_event_probability(t).exact == pytest.approx(0.5 * 0.75, abs=1e-15)
    naive = 1 - (1 - 0.25) * (1 - 0.25)
    assert not math.isclose(naive, 0.375)


def test_missing_probability_names_event():
    t = tree("top", {"top": (OR, ["e1", "e2"])}, {"e1": 0.1})
    with pytest.raises(DomainError, match="missing probability for basic event 'e2'"):
        top_event_probability(t)


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_probability_matches_enumeration(seed):
    t = tree_from_seed(seed)
    r = top_event_probability(t)
    assert abs(r.exact - oracles.enumerated_probability(t)) <= 1e-12
    assert r.exact <= min(1.0, r.rare_event_upper) + 1e-12
    assert 0.0 <= r.exact <= 1.0


def test_or_tree_helper():
    t = or_tree("x", {"a": 0.1, "b": 0.2})
    assert top_event_probability(t).exact == pytest.approx(0.28)


# --- mitigation transform ---------------------------------------------------


def test_mitigation_structure():
    t = tree("top", {"top": (OR, ["e_halluc", "e_other"])})
    m = Mitigation("uq", "Policy Monitor", fta_targets=(FtaTarget("e_halluc", "PolicyMonitorMiss"),))
    out = apply_fta_mitigations(t, [m])
    guard = out.nodes["top"].children[0]
    assert out.nodes["top"].children[1] == "e_other"
    assert out.nodes[guard] == Gate(AND, ("e_halluc", "PolicyMonitorMiss"), out.nodes[guard].label)
    assert out.nodes["PolicyMonitorMiss"].label == "PolicyMonitorMiss"
    assert out.nodes["PolicyMonitorMiss"].probability is None
    assert minimal_cut_sets(out).as_lists() == [["e_other"], ["PolicyMonitorMiss", "e_halluc"]]
    # input untouched
    assert t.nodes["top"].children == ("e_halluc", "e_other")


def test_empty_mitigation_list_is_identity():
    t = tree("top", {"top": (OR, ["e1", "e2"])})
    assert apply_fta_mitigations(t, []) == t


def test_mitigated_contribution_drops_to_product():
    m = [Mitigation("uq", "uq", fta_targets=(FtaTarget("e", "mon", 0.2),))]
    alone = tree("top", {"top": (OR, ["e"])}, {"e": 0.1})
    after = apply_fta_mitigations(alone, m)
    assert oracles.enumerated_probability(after) == pytest.approx(0.02, abs=1e-15)
    assert top_event_probability(after).exact == pytest.approx(0.02, abs=1e-15)

    pair = tree("top", {"top": (OR, ["e", "f"])}, {"e": 0.1, "f": 0.3})
    after = apply_fta_mitigations(pair, m)
    expected = oracles.enumerated_probability(after)
    assert expected == pytest.approx(1 - 0.98 * 0.7, abs=1e-15)
    assert top_event_probability(after).exact == pytest.approx(expected, abs=1e-12)


def test_targeting_a_gate_is_an_error():
    t = tree("top", {"top": (OR, ["g", "e"]), "g": (AND, ["a", "b"])})
    with pytest.raises(DomainError, match="gate"):
        apply_fta_mitigations(t, [Mitigation("m", "m", fta_targets=(FtaTarget("g", "mon"),))])


def test_duplicate_monitor_label_is_an_error():
    t = tree("top", {"top": (OR, ["a", "b"])})
    ms = [Mitigation("m1", "m1", fta_targets=(FtaTarget("a", "Monitor"),)),
          Mitigation("m2", "m2", fta_targets=(FtaTarget("b", "Monitor"),))]
    with pytest.raises(DomainError, match="duplicate monitor"):
        apply_fta_mitigations(t, ms)


def test_unknown_target_strict_and_lenient():
    t = tree("top", {"top": (OR, ["a", "b"])})
    m = [Mitigation("m", "m", fta_targets=(FtaTarget("zzz", "mon"),))]
    with pytest.raises(DomainError):
        apply_fta_mitigations(t, m)
    assert apply_fta_mitigations(t, m, strict=False) == t


def expected_after(before, guarded):
    """Each pre-transform cut set plus the monitors of its guarded events."""
    return {cs | {monitor_node_id(guarded[e]) for e in cs if e in guarded} for cs in before.cut_sets}


@settings(max_examples=100, deadline=None)
@given(seeds, st.data())
def test_mitigation_soundness(seed, data):
    t = tree_from_seed(seed)
    events = oracles.events_of(t)
    targets = data.draw(st.sets(st.sampled_from(events), min_size=1))
    ms = monitors_for(sorted(targets))
    after_tree = apply_fta_mitigations(t, ms)
    before, after = minimal_cut_sets(t), minimal_cut_sets(after_tree)
    assert not set(after.single_points) & targets
    assert set(after.cut_sets) == expected_after(before, {e: f"mon_{e}" for e in targets})


@settings(max_examples=40, deadline=None)
@given(seeds, st.data())
def test_mitigation_never_raises_probability(seed, data):
    t = tree_from_seed(seed)
    targets = data.draw(st.sets(st.sampled_from(oracles.events_of(t)), min_size=1))
    after = apply_fta_mitigations(t, monitors_for(sorted(targets), random.Random(seed)))
    assert top_event_probability(after).exact <= top_event_probability(t).exact + 1e-12


def test_bundled_tree_mitigation(reference):
    t = reference.trees[0]
    before = minimal_cut_sets(t)
    assert len(before.single_points) == 6
    after_tree = apply_fta_mitigations(t, list(reference.mitigations), strict=False)
    after = minimal_cut_sets(after_tree)
    guarded = {nid[: -len("__mitigated")] for nid in after_tree.nodes if nid.endswith("__mitigated")}
    assert guarded == {"ev_hallucination", "ev_quantized_hallucination", "ev_temporal_misprediction",
                       "ev_infeasible_maneuver", "ev_command_misinterpretation"}
    assert not guarded & set(after.single_points)
    assert after.single_points == ("ev_feature_degradation",)
    assert all(len(cs) == 2 for cs in after.cut_sets if cs & guarded)
