#!/usr/bin/env python3
# Write a small project in the .hsa language, validate it, and render a report.

from hysafe import parse, serialize, validate_project
from hysafe.fta import minimal_cut_sets, top_event_probability
from hysafe.reporting import render_fta_dot

SOURCE = """
component Planner { name: "Planner" outputs: plan }
component Controller { name: "Controller" inputs: plan }
interface plan { from: Planner to: Controller }

failure_mode Hallucination { label: "Hallucination" guidewords: IncorrectValue }

fmea fm_plan {
  element: Planner
  mode: Hallucination
  manifestation: "implausible path"
  effect: "unsafe maneuver"
  cause: "out-of-distribution scene"
  severity: 9 occurrence: 5 detection: 6
}

fault_tree crash {
  top: crash
  crash = OR(bad_plan, both_sensors)
  both_sensors = AND(cam, radar)
  bad_plan = event fmea: fm_plan p: 0.01
  cam = event p: 0.05
  radar = event p: 0.02
}
"""

# mistakes come back as positioned diagnostics, not exceptions
broken = parse(SOURCE.replace("severity: 9", "severity: 12"), "demo.hsa")
for err in broken:
    print(err)

project = parse(SOURCE, "demo.hsa")
print("diagnostics:", validate_project(project) or "none")

text = serialize(project)
assert parse(text) == project
print(text)

tree = project.trees[0]
cuts = minimal_cut_sets(tree)
print("cut sets:", cuts.as_lists())
print(f"P(crash) = {top_event_probability(tree).exact:.6g}")
print(render_fta_dot(tree, cuts))
