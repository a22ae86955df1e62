import math

import numpy as np
import pytest

from roughwet.profile import Profile
from roughwet.wetting import (AngleUndefinedError, Regime, cassie_params, check_a5_shape,
                              contact_angle, effective_gamma, g_of_y)

SIN = Profile.sinusoid(0.5)
TRI = Profile.triangle(2.0)


def brute_min_lid(p, gamma, n=10 ** 6):
    """Grid minimum of s + gamma * arc(s, 1/2), by cumulative midpoint sums."""
    s = np.linspace(0.0, 0.5, n + 1)
    mid = 0.5 * (s[1:] + s[:-1])
    seg = np.sqrt(1 + p._half_slope(mid) ** 2) * (0.5 / n)
    arc = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    G = s + gamma * arc
    i = int(np.argmin(G))
    return s[i], G[i]


def test_g_endpoints():
    for p in (SIN, TRI):
        assert g_of_y(p, 0.4, 0.0) == pytest.approx(0.5, abs=1e-12)
        assert g_of_y(p, 0.4, p.depth) == pytest.approx(0.4 * p.roughness() / 2, abs=1e-12)


def test_g_triangle_closed_form():
    assert g_of_y(TRI, 0.6, 0.4) == pytest.approx(0.3 + 0.6 * 0.4 * math.sqrt(1.25), abs=1e-12)


def test_g_range_error():
    with pytest.raises(ValueError):
        g_of_y(SIN, 0.5, SIN.depth + 0.1)


def test_flat_full_wetting():
    ew = effective_gamma(Profile.flat(), 0.5)
    assert ew.regime is Regime.FULL_WETTING
    assert ew.gamma_eff == 0.5
    assert math.degrees(ew.theta_eff) == pytest.approx(120.0, abs=1e-12)


def test_triangle_post_critical():
    ew = effective_gamma(TRI, 0.6)
    assert ew.regime is Regime.PARTIAL_WETTING
    assert ew.gamma_eff == pytest.approx(1.0, abs=1e-12)
    assert ew.s0 == 0.5 and ew.y0 == 0.0
    _, val = brute_min_lid(TRI, 0.6)
    assert ew.gamma_eff == pytest.approx(2 * val, abs=1e-6)


@pytest.mark.parametrize("m", [0.5, 2.0, 5.0])
def test_triangle_gamma_eff_closed_form(m):
    p = Profile.triangle(m)
    r = math.sqrt(1 + m * m)
    for g in np.linspace(0.0, 0.999, 100):
        assert effective_gamma(p, g).gamma_eff == pytest.approx(min(1.0, r * g), abs=1e-8)


def test_sinusoid_interior_minimiser():
    g = 0.8
    ew = effective_gamma(SIN, g)
    assert ew.regime is Regime.PARTIAL_WETTING
    assert 0 < ew.y0 < SIN.depth
    assert abs(SIN.inverse_slope(ew.y0)) == pytest.approx(g / math.sqrt(1 - g * g), abs=1e-6)
    assert ew.gamma_eff < min(1.0, SIN.roughness() * g)
    s_ref, val = brute_min_lid(SIN, g)
    assert ew.s0 == pytest.approx(s_ref, abs=2e-6)
    assert ew.gamma_eff == pytest.approx(2 * val, abs=1e-8)


def test_cassie_identity():
    for g in (0.6, 0.7, 0.8, 0.9):
        ew = effective_gamma(SIN, g)
        if 0 < ew.s0 < 0.5:
            f, rho = ew.cassie_f, ew.cassie_rho
            assert -ew.gamma_eff == pytest.approx(rho * f * (-g) + f - 1, abs=1e-8)


def test_cassie_limits():
    ew = effective_gamma(SIN, 0.3)
    assert cassie_params(ew, SIN) == (1.0, SIN.roughness())
    assert cassie_params(effective_gamma(TRI, 0.6), TRI) == (0.0, 1.0)


def test_gamma_eff_monotone_and_bounded():
    for p in (SIN, TRI, Profile.sinusoid(0.2)):
        gs = np.linspace(0, 0.999, 50)
        vals = [effective_gamma(p, g).gamma_eff for g in gs]
        assert np.all(np.diff(vals) >= -1e-12)
        for g, v in zip(gs, vals):
            assert v <= min(1.0, p.roughness() * g) + 1e-12


def test_continuity_at_critical_gamma():
    for p in (SIN, TRI):
        gc = p.critical_gamma()
        assert effective_gamma(p, gc).regime is Regime.FULL_WETTING
        above = effective_gamma(p, gc + 1e-6)
        assert above.regime is Regime.PARTIAL_WETTING
        assert abs(above.gamma_eff - p.roughness() * gc) <= 1e-4


def test_degenerate():
    ew = effective_gamma(SIN, 1.0)
    assert ew.regime is Regime.DEGENERATE
    assert math.isnan(ew.gamma_eff)


def test_contact_angle():
    assert contact_angle(0.0) == pytest.approx(math.pi / 2)
    assert contact_angle(1.0) == pytest.approx(math.pi)
    assert math.degrees(contact_angle(0.65)) == pytest.approx(130.54, abs=5e-3)
    with pytest.raises(AngleUndefinedError, match="out of range"):
        contact_angle(1.118)


def test_effective_angle_obtuse():
    for g in np.linspace(0.01, 0.99, 25):
        ew = effective_gamma(SIN, g)
        assert math.pi / 2 < ew.theta_eff <= math.pi


def test_a5_shape():
    assert check_a5_shape(SIN, 0.8).passed
    rep = check_a5_shape(TRI, 0.6)
    assert rep.passed and rep.n_samples == 0
    with pytest.raises(ValueError):
        check_a5_shape(SIN, 0.3)
