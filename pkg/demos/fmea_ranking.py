#!/usr/bin/env python3
# Rank the bundled FMEA by RPN, then see what the mitigation set buys.

from hysafe import load_reference
from hysafe.fmea import apply_fmea_mitigations, rank_fmea
from hysafe.reporting import render_fmea, render_fmea_delta

project = load_reference()

ranked = rank_fmea(project)
print(render_fmea(ranked, project))

# the worst offenders share RPN 252; ties break on S, then O, then id
top = ranked.entries[0]
print(f"rank 1: {top.entry.id}  S={top.entry.rating.severity} O={top.entry.rating.occurrence} "
      f"D={top.entry.rating.detection}  RPN={top.rpn}\n")

# mitigations only ever improve detection, so S and O stay put
report, mitigated = apply_fmea_mitigations(project, [m.id for m in project.mitigations])
print(render_fmea_delta(report, project))

total_before = sum(r.rpn_before for r in report.rows)
total_after = sum(r.rpn_after for r in report.rows)
print(f"summed RPN {total_before} -> {total_after} ({total_after / total_before:.0%} of the original)")
