#!/usr/bin/env python3
# Cut sets of the lane-change tree before and after adding runtime monitors.

from hysafe import load_reference
from hysafe.fta import apply_fta_mitigations, minimal_cut_sets, top_event_probability
from dataclasses import replace

from hysafe.model import BasicEvent

project = load_reference()
tree = project.trees[0]

before = minimal_cut_sets(tree)
print(f"{tree.id}: {len(before.cut_sets)} minimal cut sets")
print("single points:", ", ".join(before.single_points))

# every targeted event gets ANDed with a monitor that must also miss
after_tree = apply_fta_mitigations(tree, list(project.mitigations), strict=False)
after = minimal_cut_sets(after_tree)
print("\nafter mitigation")
for cs in after.cut_sets:
    print("  {" + ", ".join(sorted(cs)) + "}")
print("single points:", ", ".join(after.single_points) or "(none)")

# the bundled tree is structural only; give every event the same rate to get numbers
p = 1e-3
quantified = replace(tree, nodes={k: replace(v, probability=p) if isinstance(v, BasicEvent) else v
                                  for k, v in tree.nodes.items()})
r = top_event_probability(quantified)
print(f"\nwith p={p} per event: exact={r.exact:.6g}  rare-event bound={r.rare_event_upper:.6g}")

# bundled monitors carry no miss probability either; assume each misses 1 in 10
mitigations = [replace(m, fta_targets=tuple(replace(t, miss_probability=0.1) for t in m.fta_targets))
               for m in project.mitigations]
r_after = top_event_probability(apply_fta_mitigations(quantified, mitigations, strict=False))
print(f"after monitors:      exact={r_after.exact:.6g}")
