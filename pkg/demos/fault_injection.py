#!/usr/bin/env python3
# Monte Carlo fault injection against the fused stack, checked against the analytic rates.

import math

from hysafe import load_reference
from hysafe.fta import top_event_probability
from hysafe.reporting import render_simulation_table
from hysafe.sim import FAULTY_MANEUVERS, analytic_tree, physics_check, run_simulation

# the safety evaluator's physics check on the canned bad trajectories
for name, candidate in FAULTY_MANEUVERS:
    verdict = physics_check(candidate)
    print(f"{name:32s} {'pass' if verdict else 'REJECT'}  {verdict.reason}")
print()

project = load_reference()
base = run_simulation(project)
print(render_simulation_table(base))

worst = max(abs(m.residual_rate - m.analytic_rate) / math.sqrt(m.analytic_rate * (1 - m.analytic_rate) / base.trials)
            for m in base.modes if 0 < m.analytic_rate < 1)
print(f"largest deviation from analytic: {worst:.2f} sigma")

# the OR of per-mode escapes is the FTA view of the same thing
print(f"P(any escape) analytic via FTA: {top_event_probability(analytic_tree(base)).exact:.6g}")

mitigated = run_simulation(project, mitigated=True)
print(f"\nresidual rate: {base.residual_rate:.5f} unmitigated, {mitigated.residual_rate:.5f} mitigated")
