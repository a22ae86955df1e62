#! /usr/bin/env python
"""Explicit certificate margins inside a partly filled groove.

A nonnegative margin everywhere on the groove would prove that the dry
cavity cannot be invaded.  The margin curve shows where the explicit
construction loses, which is where the lid-height sine meets the wall angle.
"""

import sys

import numpy as np
import matplotlib
import matplotlib.pyplot as plt

from roughwet import Profile, effective_gamma
from roughwet.certificate import certify_explicit, explicit_margins

p = Profile.sinusoid(0.5)
g = 0.9
ew = effective_gamma(p, g)
print(f"gamma={g}  regime={ew.regime.value}  lid height y0={ew.y0:.6f} of depth {p.depth}")

curves = {}
for variant in ("literal", "cosine"):
    res = certify_explicit(p, g, ew.y0, variant=variant)
    y, margin, _, _ = explicit_margins(p, g, ew.y0, 2048, variant)
    curves[variant] = (y, margin)
    print(f"{variant:8s} verdict={res.verdict.value}  worst margin={res.worst_margin:+.5f}")

if "--no-plot" in sys.argv:
    sys.exit(0)
if "--save" in sys.argv:
    matplotlib.use("Agg")
fig, ax = plt.subplots(figsize=(5, 4))
for name, (y, m) in curves.items():
    ax.plot(y, m, label=name)
ax.axhline(0.0, color="k", lw=0.8)
ax.set_xlabel("height y in the groove")
ax.set_ylabel("margin")
ax.legend()
if "--save" in sys.argv:
    fig.savefig("groove_certificate.svg")
else:
    plt.show()
