"""Fault tree analysis: minimal cut sets, top-event probability, monitor insertion.

Trees are coherent (AND/OR only) and may share subtrees. Probabilities assume
independent basic events; shared events are handled by conditioning on them
rather than by naive gate-local arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import (
    BasicEvent,
    DomainError,
    FaultTree,
    Gate,
    GateKind,
    Mitigation,
    monitor_node_id,
)

DEFAULT_EVENT_LIMIT = 64
MAX_MOCUS_ROWS = 2_000_000


class ResourceLimitError(DomainError):
    def __init__(self, message: str, limit: int):
        super().__init__(message)
        self.limit = limit


@dataclass(frozen=True)
class CutSetReport:
    cut_sets: tuple[frozenset[str], ...]
    single_points: tuple[str, ...]

    def as_lists(self) -> list[list[str]]:
        return [sorted(cs) for cs in self.cut_sets]


@dataclass(frozen=True)
class ProbabilityResult:
    exact: float
    rare_event_upper: float


def _cut_set_order(cs: frozenset[str]):
    return (len(cs), sorted(cs))


def minimize(sets) -> list[frozenset[str]]:
    """Drop every set that is a superset of another; sorted by (size, members)."""
    kept: list[frozenset[str]] = []
    for s in sorted(set(sets), key=_cut_set_order):
        if not any(k <= s for k in kept):
            kept.append(s)
    return kept


def _check_events(tree: FaultTree, limit: int) -> list[str]:
    if tree.top not in tree.nodes:
        raise DomainError(f"tree '{tree.id}': top node '{tree.top}' is not declared")
    for nid in tree.reachable():
        node = tree.nodes[nid]
        if isinstance(node, Gate):
            missing = [c for c in node.children if c not in tree.nodes]
            if missing:
                raise DomainError(f"tree '{tree.id}': gate '{nid}' references undeclared node '{missing[0]}'")
            if not node.children:
                raise DomainError(f"tree '{tree.id}': gate '{nid}' has no children")
    _topological(tree)
    events = tree.reachable_events()
    if len(events) > limit:
        raise ResourceLimitError(
            f"tree '{tree.id}' has {len(events)} basic events, above the limit of {limit} "
            "(raise it with HYSAFE_EVENT_LIMIT or the event_limit argument)", limit)
    return events


def minimal_cut_sets(tree: FaultTree, limit: int = DEFAULT_EVENT_LIMIT) -> CutSetReport:
    """MOCUS: expand gates top-down into rows of basic events, then absorb.

    Each row is a set of node ids whose conjunction implies the top event. An
    OR gate in a row splits it into one row per child; an AND gate is replaced
    in place by all of its children. Rows containing only basic events are
    cut sets; absorption then leaves the minimal ones.
    """
    _check_events(tree, limit)
    gates = {nid for nid, n in tree.nodes.items() if isinstance(n, Gate)}
    done: set[frozenset[str]] = set()
    seen: set[frozenset[str]] = set()
    work = [frozenset([tree.top])]
    while work:
        row = work.pop()
        if row in seen:
            continue
        seen.add(row)
        if len(seen) > MAX_MOCUS_ROWS:
            raise ResourceLimitError(f"tree '{tree.id}': MOCUS expansion exceeded {MAX_MOCUS_ROWS} rows", limit)
        pending = sorted(row & gates)
        if not pending:
            done.add(row)
            continue
        g = pending[0]
        gate = tree.nodes[g]
        rest = row - {g}
        if gate.kind is GateKind.AND:
            work.append(rest | frozenset(gate.children))
        else:
            work.extend(rest | {c} for c in gate.children)
    cut_sets = minimize(done)
    singles = tuple(sorted(next(iter(cs)) for cs in cut_sets if len(cs) == 1))
    return CutSetReport(tuple(cut_sets), singles)


def evaluate_assignment(tree: FaultTree, true_events) -> bool:
    """Boolean value of the top event with exactly ``true_events`` occurring."""
    true_events = set(true_events)
    for e in true_events:
        node = tree.nodes.get(e)
        if not isinstance(node, BasicEvent):
            raise DomainError(f"'{e}' is not a basic event of tree '{tree.id}'")
    memo: dict[str, bool] = {}

    def value(nid: str) -> bool:
        if nid in memo:
            return memo[nid]
        node = tree.nodes[nid]
        if isinstance(node, BasicEvent):
            v = nid in true_events
        elif node.kind is GateKind.AND:
            v = all(value(c) for c in node.children)
        else:
            v = any(value(c) for c in node.children)
        memo[nid] = v
        return v

    if tree.top not in tree.nodes:
        raise DomainError(f"tree '{tree.id}': top node '{tree.top}' is not declared")
    return value(tree.top)


def _topological(tree: FaultTree) -> list[str]:
    """Reachable nodes with every parent listed before its children."""
    reach = tree.reachable()
    indeg = dict.fromkeys(reach, 0)
    for nid in reach:
        node = tree.nodes[nid]
        if isinstance(node, Gate):
            for c in node.children:
                indeg[c] += 1
    ready = [n for n in reach if indeg[n] == 0]
    order = []
    while ready:
        nid = ready.pop()
        order.append(nid)
        node = tree.nodes[nid]
        if isinstance(node, Gate):
            for c in node.children:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
    if len(order) != len(reach):
        raise DomainError(f"tree '{tree.id}' contains a cycle")
    return order


def top_event_probability(tree: FaultTree, limit: int = DEFAULT_EVENT_LIMIT,
                          cut_report: CutSetReport | None = None) -> ProbabilityResult:
    """Exact top-event probability plus the rare-event (cut-set sum) bound.

    The exact value uses Shannon decomposition: at a gate whose children share
    an unconditioned event e, P = p_e * P(.|e) + (1 - p_e) * P(.|not e).
    Once no unconditioned event is shared between children they are
    independent and combine as a product (AND) or complement product (OR).

    Modules (gates whose descendants are reachable only through them) are
    solved once on their own and then treated as a single event, so a shared
    module costs one pivot rather than one per event inside it.
    """
    events = _check_events(tree, limit)
    probs: dict[str, float] = {}
    for e in events:
        p = tree.nodes[e].probability
        if p is None:
            raise DomainError(f"missing probability for basic event '{e}' in tree '{tree.id}'")
        probs[e] = float(p)

    order = _topological(tree)
    kids = {n: tree.nodes[n].children if isinstance(tree.nodes[n], Gate) else () for n in order}
    parents: dict[str, set[str]] = {n: set() for n in order}
    for n in order:
        for c in kids[n]:
            parents[c].add(n)
    below: dict[str, frozenset[str]] = {}
    for n in reversed(order):
        below[n] = frozenset([n]).union(*(below[c] for c in kids[n]))
    modules = {
        g for g in order
        if kids[g] and g != tree.top and all(parents[d] <= below[g] for d in below[g] if d != g)
    }

    def atom_probability(nid: str) -> float:
        if nid in probs:
            return probs[nid]
        probs[nid] = _solve(tree, nid, kids, leaves, modules, atom_probability)
        return probs[nid]

    leaves = frozenset(events)
    exact = min(1.0, max(0.0, _solve(tree, tree.top, kids, leaves, modules, atom_probability)))
    report = cut_report or minimal_cut_sets(tree, limit)
    upper = math.fsum(math.prod(probs[e] for e in cs) for cs in report.cut_sets)
    return ProbabilityResult(exact, upper)


def _solve(tree: FaultTree, root: str, kids, leaves, modules, atom_probability) -> float:
    """Probability of ``root`` with nested modules and basic events as atoms."""

    def is_atom(n: str) -> bool:
        return n != root and (n in leaves or n in modules)

    # local topological order, leaves at atoms
    order: list[str] = []
    seen: set[str] = set()

    def visit(n: str) -> None:
        seen.add(n)
        if not is_atom(n):
            for c in kids[n]:
                if c not in seen:
                    visit(c)
        order.append(n)

    visit(root)
    order.reverse()
    paths = dict.fromkeys(order, 0)
    paths[root] = 1
    for n in order:
        if not is_atom(n):
            for c in kids[n]:
                paths[c] += paths[n]
    shared = {n for n in order if is_atom(n) and paths[n] > 1}
    under: dict[str, frozenset[str]] = {}
    for n in reversed(order):
        if is_atom(n):
            under[n] = frozenset([n]) & shared
        else:
            under[n] = frozenset().union(*(under[c] for c in kids[n]))

    memo: dict[tuple[str, tuple], float] = {}

    def prob(nid: str, ctx: dict[str, bool]) -> float:
        if is_atom(nid):
            if nid in ctx:
                return 1.0 if ctx[nid] else 0.0
            return atom_probability(nid)
        key = (nid, tuple(sorted((e, v) for e, v in ctx.items() if e in under[nid])))
        if key in memo:
            return memo[key]
        pivot = _shared_between_children(kids[nid], under, ctx)
        if pivot is not None:
            p = atom_probability(pivot)
            hi = prob(nid, {**ctx, pivot: True}) if p > 0 else 0.0
            lo = prob(nid, {**ctx, pivot: False}) if p < 1 else 0.0
            result = p * hi + (1.0 - p) * lo
        elif tree.nodes[nid].kind is GateKind.AND:
            result = math.prod(prob(c, ctx) for c in kids[nid])
        else:
            result = 1.0 - math.prod(1.0 - prob(c, ctx) for c in kids[nid])
        memo[key] = result
        return result

    return prob(root, {})


def _shared_between_children(children, under, ctx) -> str | None:
    counts: dict[str, int] = {}
    for c in dict.fromkeys(children):
        for e in under[c]:
            if e not in ctx:
                counts[e] = counts.get(e, 0) + 1
    shared = sorted(e for e, k in counts.items() if k > 1)
    return shared[0] if shared else None


def apply_fta_mitigations(tree: FaultTree, mitigations: list[Mitigation], *, strict: bool = True) -> FaultTree:
    """Guard each targeted basic event with a monitor.

    Every reference to a targeted event e is redirected to a new gate
    ``AND(e, monitor)``, so e alone no longer reaches the top event. With
    ``strict=False`` targets naming events of other trees are ignored.
    """
    targets = []
    for m in mitigations:
        for t in m.fta_targets:
            if t.event not in tree.nodes:
                if strict:
                    raise DomainError(f"mitigation '{m.id}' targets '{t.event}', which is not in tree '{tree.id}'")
                continue
            if isinstance(tree.nodes[t.event], Gate):
                raise DomainError(f"mitigation '{m.id}' targets gate '{t.event}'; only basic events can be mitigated")
            targets.append((m, t))

    guarded: dict[str, tuple[str, str, BasicEvent]] = {}
    taken = set(tree.nodes)
    for m, t in targets:
        if t.event in guarded:
            raise DomainError(f"event '{t.event}' in tree '{tree.id}' is targeted by more than one monitor")
        mon_id = monitor_node_id(t.monitor_label)
        gate_id = f"{t.event}__mitigated"
        for nid in (mon_id, gate_id):
            if nid in taken:
                raise DomainError(f"duplicate monitor '{t.monitor_label}' (node '{nid}') in tree '{tree.id}'")
            taken.add(nid)
        guarded[t.event] = (gate_id, mon_id, BasicEvent(label=t.monitor_label, probability=t.miss_probability))

    if not guarded:
        return tree

    def redirect(nid: str) -> str:
        return guarded[nid][0] if nid in guarded else nid

    nodes: dict[str, object] = {}
    for nid, node in tree.nodes.items():
        if isinstance(node, Gate):
            nodes[nid] = Gate(node.kind, tuple(redirect(c) for c in node.children), node.label, span=node.span)
            continue
        if nid in guarded:
            gate_id, mon_id, monitor = guarded[nid]
            label = f"{node.label or nid} (guarded)"
            nodes[gate_id] = Gate(GateKind.AND, (nid, mon_id), label)
            nodes[nid] = node
            nodes[mon_id] = monitor
        else:
            nodes[nid] = node
    return FaultTree(tree.id, redirect(tree.top), nodes, span=tree.span)


def or_tree(tree_id: str, events: dict[str, float], top: str = "top") -> FaultTree:
    """A single OR gate over independent events with the given probabilities."""
    nodes: dict[str, object] = {top: Gate(GateKind.OR, tuple(events))}
    nodes.update((e, BasicEvent(label=e, probability=p)) for e, p in events.items())
    return FaultTree(tree_id, top, nodes)

