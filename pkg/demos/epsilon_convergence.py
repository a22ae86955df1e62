#! /usr/bin/env python
"""Droplet energies on a rough channel floor as the roughness scale shrinks.

Runs a coarse epsilon sweep (resolution 96, a few seconds) and prints the
rough-wall energy next to the effective flat-wall energy.  The gap should
shrink with epsilon.  Use the ``converge`` command with the configs in
``configs/`` for the full-resolution run.
"""

import math
import sys

from roughwet import Profile
from roughwet.experiment import ExperimentConfig, emit_outputs, epsilon_sweep
from roughwet.geometry import Channel

cfg = ExperimentConfig(profile=Profile.sinusoid(0.5), base=Channel(1.0, 0.6), gamma=0.3,
                       q=0.05, epsilon_list=(1 / 4, 1 / 8), resolution=96)
rows = epsilon_sweep(cfg)

print(f"{'eps':>7s} {'F_eps':>9s} {'F_eff':>9s} {'gap %':>7s} {'angle':>7s} {'pred':>7s}")
for r in rows:
    gap = 100 * abs(r.F_eps - r.F_eff) / r.F_eff
    print(f"{r.epsilon:7.4f} {r.F_eps:9.5f} {r.F_eff:9.5f} {gap:7.2f}"
          f" {math.degrees(r.angle_measured):7.2f} {math.degrees(r.angle_predicted):7.2f}")

if "--save" in sys.argv:
    paths = emit_outputs(rows, "demo_convergence")
    print("wrote", paths["csv"], paths["svg"])
