#! /usr/bin/env python
"""Effective wetting coefficient of a sinusoidal wall as gamma varies.

Below the critical coefficient the liquid fills the grooves completely and
the wall behaves like a flat wall with coefficient r*gamma (Wenzel).  Above
it the grooves are only partly filled and the effective coefficient bends
away from the Wenzel line.
"""

import sys

import numpy as np
import matplotlib
import matplotlib.pyplot as plt

from roughwet import Profile, effective_gamma

p = Profile.sinusoid(0.5)
print(f"roughness r = {p.roughness():.6f}, critical gamma = {p.critical_gamma():.6f}")

gammas = np.linspace(0.0, 0.99, 199)
eff = np.array([effective_gamma(p, g).gamma_eff for g in gammas])
wenzel = np.minimum(1.0, p.roughness() * gammas)

for g in (0.3, 0.6, 0.8, 0.95):
    ew = effective_gamma(p, g)
    print(f"gamma={g:.2f}  regime={ew.regime.value:16s} gamma_eff={ew.gamma_eff:.5f}"
          f"  theta_eff={np.degrees(ew.theta_eff):7.3f} deg")

if "--no-plot" in sys.argv:
    sys.exit(0)
if "--save" in sys.argv:
    matplotlib.use("Agg")
fig, ax = plt.subplots(figsize=(5, 4))
ax.plot(gammas, eff, label="effective")
ax.plot(gammas, wenzel, "--", label="Wenzel min(1, r gamma)")
ax.axvline(p.critical_gamma(), color="grey", lw=0.8)
ax.set_xlabel("gamma")
ax.set_ylabel("gamma_eff")
ax.legend()
if "--save" in sys.argv:
    fig.savefig("wetting_regimes.svg")
else:
    plt.show()
