import math

import numpy as np
import pytest

from roughwet.certificate import (CoverageError, EndSlopeError, GrooveDomain, Method, Verdict,
                                  certify_discrete_field, certify_explicit, certify_sigma_beta,
                                  compute_y1, explicit_margins, explicit_sigma_beta,
                                  field_from_sigma_beta)
from roughwet.profile import Profile
from roughwet.wetting import effective_gamma

SIN = Profile.sinusoid(0.5)


def lid_integral_riemann(p, s_lo, s_hi, n=10 ** 6):
    t = s_lo + (np.arange(n) + 0.5) * (s_hi - s_lo) / n
    return float(np.sum(np.abs(p._half_slope(t)) / t) * (s_hi - s_lo) / n)


def test_y1_triangle_log_integral():
    p = Profile.triangle(1.0)
    assert compute_y1(p, 0.0) == pytest.approx(0.5 * (1 - math.exp(-1)), abs=1e-10)


def test_y1_near_top_is_top():
    assert compute_y1(SIN, SIN.depth - 1e-9) == SIN.depth


def test_y1_sinusoid_against_riemann():
    y0 = effective_gamma(SIN, 0.8).y0
    y1 = compute_y1(SIN, y0)
    assert y0 < y1 < SIN.depth
    s0 = float(SIN.inverse_height(y0))
    s1 = float(SIN.inverse_height(y1))
    assert lid_integral_riemann(SIN, s1, s0) == pytest.approx(1.0, abs=1e-6)


def test_triangle_rejected():
    with pytest.raises(EndSlopeError, match="profile violates end-slope hypothesis"):
        certify_explicit(Profile.triangle(2.0), 0.6, 0.1)


def test_vacuous_when_groove_is_empty():
    res = certify_explicit(SIN, 0.3, SIN.depth)
    assert res.verdict is Verdict.CERTIFIED and res.method is Method.EXPLICIT_LEMMA
    assert res.worst_margin >= 0


@pytest.mark.parametrize("variant", ["literal", "cosine"])
def test_explicit_fails_below_cauchy_schwarz_bound(variant):
    # sqrt(1-I^2) + I|z'| meets sqrt(1+z'^2) where the curves cross, so the
    # margin there is at most gamma - 1
    g = 0.95
    y0 = effective_gamma(SIN, g).y0
    res = certify_explicit(SIN, g, y0, variant=variant)
    assert res.verdict is Verdict.NOT_CERTIFIED
    assert res.worst_margin <= g - 1 + 1e-3


def test_explicit_near_critical_is_vacuous():
    # just above gamma_c the lid sits at the groove top, so D is empty
    g = SIN.critical_gamma() + 1e-3
    y0 = effective_gamma(SIN, g).y0
    assert y0 == SIN.depth
    assert certify_explicit(SIN, g, y0).verdict is Verdict.CERTIFIED
    # on a genuine groove the test fails near the critical point
    y_mid = 0.5 * SIN.depth
    assert certify_explicit(SIN, g, y_mid).verdict is Verdict.NOT_CERTIFIED


def test_certified_iff_margin_nonnegative():
    for g in (0.6, 0.7, 0.8, 0.95):
        res = certify_explicit(SIN, g, effective_gamma(SIN, g).y0)
        assert res.certified == (res.worst_margin >= 0)


def test_margins_monotone_in_gamma_at_fixed_groove():
    y0 = effective_gamma(SIN, 0.8).y0
    worst = [certify_explicit(SIN, g, y0).worst_margin for g in np.linspace(0.6, 0.99, 10)]
    assert np.all(np.diff(worst) >= -1e-12)
    y, m1, _, _ = explicit_margins(SIN, 0.7, y0)
    _, m2, _, _ = explicit_margins(SIN, 0.9, y0)
    assert np.all(m2 >= m1)


def test_sigma_beta_cross_method_agreement():
    for g in (0.7, 0.8, 0.95):
        y0 = effective_gamma(SIN, g).y0
        y, sig, beta = explicit_sigma_beta(SIN, y0, variant="cosine")
        sb = certify_sigma_beta(SIN, g, y0, y, sig, beta)
        ex = certify_explicit(SIN, g, y0, variant="cosine")
        assert sb.verdict is ex.verdict


def test_literal_sigma_breaks_divergence_condition():
    y0 = effective_gamma(SIN, 0.8).y0
    y, sig, beta = explicit_sigma_beta(SIN, y0, variant="literal")
    res = certify_sigma_beta(SIN, 0.99, y0, y, sig, beta)
    assert res.verdict is Verdict.NOT_CERTIFIED


def test_sigma_one_on_shallow_walls():
    p = Profile.triangle(2.0)
    y = np.linspace(0.1, p.depth, 300)
    res = certify_sigma_beta(p, 0.6, 0.1, y, np.ones_like(y), np.zeros_like(y))
    assert res.verdict is Verdict.CERTIFIED and res.method is Method.SIGMA_BETA


def test_sigma_start_value():
    p = Profile.triangle(2.0)
    y = np.linspace(0.1, p.depth, 300)
    sig = np.ones_like(y)
    sig[0] = 0.5
    res = certify_sigma_beta(p, 0.6, 0.1, y, sig, np.zeros_like(y))
    assert res.verdict is Verdict.NOT_CERTIFIED and res.failed == "d"


def test_sigma_beta_shape_errors():
    y = np.linspace(0.1, 1.0, 300)
    with pytest.raises(ValueError):
        certify_sigma_beta(Profile.triangle(2.0), 0.6, 0.1, y, y[:-1], y)
    with pytest.raises(ValueError):
        certify_sigma_beta(Profile.triangle(2.0), 0.6, 0.1, y[:100], y[:100], y[:100])


def test_field_matches_sigma_beta():
    p = Profile.triangle(2.0)
    groove = GrooveDomain(p, 0.1)
    y = np.linspace(0.1, p.depth, 300)
    xs, ys, w = field_from_sigma_beta(groove, y, np.ones_like(y), np.zeros_like(y))
    fr = certify_discrete_field(groove, 0.6, xs, ys, w)
    sb = certify_sigma_beta(p, 0.6, 0.1, y, np.ones_like(y), np.zeros_like(y))
    assert fr.verdict is sb.verdict is Verdict.CERTIFIED

    y0 = effective_gamma(SIN, 0.8).y0
    yy, sig, beta = explicit_sigma_beta(SIN, y0, variant="cosine")
    g2 = GrooveDomain(SIN, y0)
    xs, ys, w = field_from_sigma_beta(g2, yy, sig, beta)
    assert (certify_discrete_field(g2, 0.8, xs, ys, w).verdict
            is certify_sigma_beta(SIN, 0.8, y0, yy, sig, beta).verdict)


def test_field_norm_violation():
    p = Profile.triangle(2.0)
    groove = GrooveDomain(p, 0.1)
    xs = np.linspace(-0.5, 0.5, 128)
    ys = np.linspace(0.1, p.depth, 128)
    w = np.zeros((128, 128, 2))
    w[..., 1] = 1.0
    assert certify_discrete_field(groove, 0.6, xs, ys, w).certified
    w[64, 64] = (0.0, 1.2)
    res = certify_discrete_field(groove, 0.6, xs, ys, w)
    assert res.verdict is Verdict.NOT_CERTIFIED and res.failed == "a"


def test_field_coverage():
    groove = GrooveDomain(Profile.triangle(2.0), 0.1)
    xs = np.linspace(-0.1, 0.1, 128)
    ys = np.linspace(0.1, 1.0, 128)
    with pytest.raises(CoverageError):
        certify_discrete_field(groove, 0.6, xs, ys, np.zeros((128, 128, 2)))


def test_field_empty_groove():
    groove = GrooveDomain(SIN, SIN.depth)
    xs = np.linspace(0, 1, 128)
    res = certify_discrete_field(groove, 0.5, xs, xs, np.zeros((128, 128, 2)))
    assert res.certified
