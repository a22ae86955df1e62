"""Wetting on periodically rough walls.

Effective interaction energy and regimes (:mod:`roughwet.wetting`),
unreachability certificates for groove cavities (:mod:`roughwet.certificate`),
and graph-cut droplet minimisers on rasterised rough domains
(:mod:`roughwet.geometry`, :mod:`roughwet.solver`, :mod:`roughwet.experiment`).
"""

from .profile import Profile
from .wetting import Regime, contact_angle, effective_gamma

__version__ = "0.1.0"
__all__ = ["Profile", "Regime", "contact_angle", "effective_gamma"]
