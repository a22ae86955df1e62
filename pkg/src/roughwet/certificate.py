"""Sufficient conditions for the groove domain to be unreachable.

The groove domain is ``D = {(x, y): y0 <= y <= Y, |x| <= h(y)}``, bounded by
the flat lid ``Gamma_1`` at ``y = y0`` and the groove wall ``Gamma_2``.
Every check here is sufficient only; ``NOT_CERTIFIED`` never means the
domain is reachable.

All wall quantities are evaluated in the ``s`` variable (``y = zeta(s)``),
where inequalities involving ``h'`` are multiplied through by ``|zeta'|``.
That keeps them bounded at the groove ends where ``h'`` diverges.
"""

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import brentq

from ._numerics import panel_integrals
from .profile import Profile, ProfileKind

GRID_POINTS = 4096
EXPLICIT_SLACK = 1e-12
SIGMA_BETA_SLACK = 1e-9
FIELD_SLACK_PER_SPACING = 1e-6


class EndSlopeError(ValueError):
    pass


class CoverageError(ValueError):
    pass


class Verdict(str, enum.Enum):
    CERTIFIED = "Certified"
    NOT_CERTIFIED = "NotCertified"


class Method(str, enum.Enum):
    EXPLICIT_LEMMA = "ExplicitLemma"
    SIGMA_BETA = "SigmaBeta"
    DISCRETE_FIELD = "DiscreteField"


@dataclass(frozen=True)
class GrooveDomain:
    profile: Profile
    y0: float

    @property
    def depth(self):
        return self.profile.depth

    @property
    def is_empty(self):
        return not self.y0 < self.depth

    @property
    def lid_halfwidth(self):
        return float(self.profile.inverse_height(self.y0))

    def contains(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        inside = (y >= self.y0) & (y <= self.depth)
        yc = np.clip(y, 0.0, self.depth)
        return inside & (np.abs(x) <= self.profile.inverse_height(yc))


@dataclass(frozen=True)
class CertificateResult:
    """Outcome of a certificate check.

    ``worst_margin`` is the smallest ``RHS - LHS + slack`` over all checked
    points, so ``CERTIFIED`` holds exactly when it is non-negative.
    ``witness`` locates the worst point and ``failed`` names the first
    violated condition.
    """

    verdict: Verdict
    method: Method
    y1: float
    worst_margin: float
    witness: Optional[tuple] = None
    failed: Optional[str] = None
    slack: float = 0.0

    @property
    def certified(self):
        return self.verdict is Verdict.CERTIFIED


def _require_end_slopes(p: Profile):
    if p.kind is ProfileKind.TRIANGLE:
        raise EndSlopeError("profile violates end-slope hypothesis (h' must be -inf at 0 and Y)")
    if p.kind is ProfileKind.TABULATED:
        ends = np.abs(p._half_slope(np.array([0.0, 0.5])))
        if np.any(ends > 1e-9):
            raise EndSlopeError("profile violates end-slope hypothesis (h' must be -inf at 0 and Y)")


def _inv_h_integrand(p):
    # d/ds of the lid integral: |zeta'(s)| / s, bounded for smooth even profiles
    return lambda t: np.abs(p._half_slope(t)) / t


def _lid_integral(p, s_lo, s_hi):
    """``int 1/h dy`` between heights ``zeta(s_hi)`` and ``zeta(s_lo)``."""
    if s_lo >= s_hi:
        return 0.0
    if p.kind is ProfileKind.TRIANGLE:
        return p.m * math.log(s_hi / s_lo) if s_lo > 0 else math.inf
    f = _inv_h_integrand(p)
    val, _ = integrate.quad(lambda t: float(f(t)), s_lo, s_hi,
                            epsabs=1e-12, epsrel=1e-12, limit=200)
    return val


def compute_y1(p: Profile, y0, level=1.0):
    """Height ``y1`` where ``int_{y0}^{y1} 1/h`` reaches ``level`` (else ``Y``)."""
    Y = p.depth
    if not y0 < Y:
        return Y
    s0 = float(p.inverse_height(y0))
    if p.kind is ProfileKind.TRIANGLE:
        total = math.inf
    else:
        total = _lid_integral(p, 0.0, s0)
    if total <= level:
        return Y
    s_lo = 1e-300
    s1 = brentq(lambda s1: _lid_integral(p, s1, s0) - level, s_lo, s0,
                xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return float(p.eval(s1))


def _lid_integral_on_grid(p, s):
    """Cumulative ``int_{y0}^{zeta(s_k)} 1/h`` for an increasing ``s`` grid
    whose last node is ``h(y0)``."""
    pieces = panel_integrals(_inv_h_integrand(p), s)
    return np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])


def certify_explicit(p: Profile, gamma, y0, n=GRID_POINTS, variant="literal",
                     slack=EXPLICIT_SLACK) -> CertificateResult:
    """Explicit unreachability test on a grid of heights in ``[y0, Y]``.

    ``variant="literal"`` checks

        -h' sqrt(1 - I^2) + I <= gamma sqrt(1 + h'^2)    while I <= 1
        1 <= gamma sqrt(1 + h'^2)                         beyond,

    with ``I(y) = int_{y0}^y 1/h``.  ``variant="cosine"`` uses the exact
    solution ``sigma = cos I`` of the divergence condition instead,

        -h' cos I + sin I <= gamma sqrt(1 + h'^2)         while I <= pi/2,

    which is a genuine instance of :func:`certify_sigma_beta`.
    """
    _require_end_slopes(p)
    if variant not in ("literal", "cosine"):
        raise ValueError(f"unknown variant {variant!r}")
    level = 1.0 if variant == "literal" else 0.5 * math.pi
    Y = p.depth
    if p.is_flat or not y0 < Y:
        return CertificateResult(Verdict.CERTIFIED, Method.EXPLICIT_LEMMA, Y, math.inf,
                                 slack=slack)

    y, margin, early, y1 = explicit_margins(p, gamma, y0, n, variant, slack)
    k = int(np.argmin(margin))
    worst = float(margin[k])
    verdict = Verdict.CERTIFIED if worst >= 0.0 else Verdict.NOT_CERTIFIED
    failed = None
    if verdict is Verdict.NOT_CERTIFIED:
        failed = "lid inequality on [y0, y1]" if early[k] else "wall inequality on [y1, Y]"
    return CertificateResult(verdict, Method.EXPLICIT_LEMMA, y1, worst,
                             witness=(float(y[k]),), failed=failed, slack=slack)


def explicit_margins(p: Profile, gamma, y0, n=GRID_POINTS, variant="literal",
                     slack=EXPLICIT_SLACK):
    """Pointwise margins ``RHS - LHS + slack`` of the explicit test.

    Returns ``(y, margin, early, y1)`` on an ``s`` grid running from the groove
    tip (``y = Y``) down to the lid (``y = y0``); ``early`` marks the points
    below ``y1``.
    """
    level = 1.0 if variant == "literal" else 0.5 * math.pi
    y1 = compute_y1(p, y0, level=level)
    s0 = float(p.inverse_height(y0))
    s = np.linspace(0.0, s0, n)
    I = _lid_integral_on_grid(p, s)
    dz = np.abs(p._half_slope(s))
    rhs = gamma * np.sqrt(1.0 + dz * dz)
    early = I <= level
    Ie = np.minimum(I, level)
    if variant == "literal":
        lhs_early = np.sqrt(np.maximum(1.0 - Ie * Ie, 0.0)) + Ie * dz
    else:
        lhs_early = np.cos(Ie) + np.sin(Ie) * dz
    lhs = np.where(early, lhs_early, dz)
    return p.eval(s), rhs - lhs + slack, early, y1


def explicit_sigma_beta(p: Profile, y0, n=GRID_POINTS, variant="literal"):
    """Tables ``(y, sigma, beta)`` on ``[y0, Y]`` induced by the explicit test.

    ``beta = sqrt(1 - sigma^2) / h``, which is infinite at ``y = Y``.
    """
    s0 = float(p.inverse_height(y0))
    s = np.linspace(0.0, s0, n)
    I = _lid_integral_on_grid(p, s)
    if variant == "literal":
        sigma = np.sqrt(np.maximum(1.0 - I * I, 0.0))
    else:
        sigma = np.where(I < 0.5 * math.pi, np.cos(np.minimum(I, 0.5 * math.pi)), 0.0)
    with np.errstate(divide="ignore"):
        beta = np.sqrt(np.maximum(1.0 - sigma * sigma, 0.0)) / s
    y = p.eval(s)
    return y[::-1].copy(), sigma[::-1].copy(), beta[::-1].copy()


def certify_sigma_beta(p: Profile, gamma, y0, y, sigma, beta,
                       slack=SIGMA_BETA_SLACK) -> CertificateResult:
    """Check a ``(sigma, beta)`` pair pointwise on a common height grid.

    Conditions, with ``sigma'`` from centred differences:

    (a) ``sigma^2 + h^2 beta^2 <= 1``
    (b) ``sigma' + beta >= 0``
    (c) ``-h' sigma + h beta <= gamma sqrt(1 + h'^2)``
    (d) ``sigma(y0) = 1``

    At the groove bottom (``h = 0``) only (c) and (d) are checked, with
    ``h beta |zeta'|`` taken as zero.
    """
    y = np.asarray(y, float)
    sigma = np.asarray(sigma, float)
    beta = np.asarray(beta, float)
    if not (y.shape == sigma.shape == beta.shape) or y.ndim != 1:
        raise ValueError("sigma and beta tables must share the height grid")
    if y.size < 256:
        raise ValueError("sigma/beta tables need at least 256 points")
    if np.any(np.diff(y) <= 0):
        raise ValueError("height grid must be strictly increasing")
    Y = p.depth
    if abs(y[0] - y0) > 1e-12 or y[-1] > Y + 1e-12:
        raise ValueError("height grid must start at y0 and stay within [y0, Y]")

    s = p.inverse_height(np.clip(y, 0.0, Y))
    dz = np.abs(p._half_slope(s))
    wall = s > 0.0
    hb = np.where(wall, s * np.where(wall, beta, 0.0), 0.0)
    dsig = np.gradient(sigma, y)

    margins = {
        "a": np.where(wall, 1.0 - sigma ** 2 - hb ** 2, np.inf),
        "b": np.where(wall, dsig + beta, np.inf),
        # (c) multiplied by |zeta'|
        "c": gamma * np.sqrt(1.0 + dz * dz) - sigma - hb * dz,
        "d": np.where(np.arange(y.size) == 0, -abs(sigma[0] - 1.0), np.inf),
    }
    worst, where, failed = math.inf, None, None
    for name, m in margins.items():
        m = m + slack
        k = int(np.argmin(m))
        if m[k] < worst:
            worst, where = float(m[k]), (float(y[k]),)
        if failed is None and m[k] < 0.0:
            failed = name
    verdict = Verdict.CERTIFIED if failed is None else Verdict.NOT_CERTIFIED
    return CertificateResult(verdict, Method.SIGMA_BETA, math.nan, worst,
                             witness=where, failed=failed, slack=slack)


def field_from_sigma_beta(groove: GrooveDomain, y, sigma, beta, nx=256, ny=256):
    """Sample ``w = (x beta(y), sigma(y))`` on a rectangle covering ``D``.

    Returns ``(xs, ys, w)`` with ``w.shape == (ny, nx, 2)``.  Infinite
    ``beta`` at the groove bottom is replaced by its finite neighbour (the
    node there has ``x = 0`` inside ``D``).
    """
    beta = np.asarray(beta, float).copy()
    bad = ~np.isfinite(beta)
    if np.any(bad):
        beta[bad] = np.max(beta[~bad])
    halfw = groove.lid_halfwidth
    xs = np.linspace(-halfw, halfw, nx)
    ys = np.linspace(groove.y0, groove.depth, ny)
    b = np.interp(ys, y, beta)
    sg = np.interp(ys, y, sigma)
    w = np.empty((ny, nx, 2))
    w[..., 0] = xs[None, :] * b[:, None]
    w[..., 1] = sg[:, None]
    return xs, ys, w


def certify_discrete_field(groove: GrooveDomain, gamma, xs, ys, w,
                           slack=None) -> CertificateResult:
    """Check a grid vector field against the four field conditions.

    (a) ``|w| <= 1`` in ``D``; (b) ``div w >= 0`` at interior nodes of ``D``;
    (c) ``w . nu <= gamma`` on the groove wall; (d) ``w . nu = -1`` on the
    lid, whose outward normal is ``-e_y``.
    """
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    w = np.asarray(w, float)
    if w.shape != (ys.size, xs.size, 2):
        raise ValueError("field must have shape (len(ys), len(xs), 2)")
    if xs.size < 128 or ys.size < 128:
        raise ValueError("field resolution must be at least 128 x 128")
    spacing = max(np.max(np.diff(xs)), np.max(np.diff(ys)))
    if slack is None:
        slack = FIELD_SLACK_PER_SPACING * spacing
    if groove.is_empty:
        return CertificateResult(Verdict.CERTIFIED, Method.DISCRETE_FIELD, groove.depth,
                                 math.inf, slack=slack)
    p = groove.profile
    halfw = groove.lid_halfwidth
    tol = 1e-12
    if (xs[0] > -halfw + tol or xs[-1] < halfw - tol
            or ys[0] > groove.y0 + tol or ys[-1] < groove.depth - tol):
        raise CoverageError("vector field grid does not cover the groove domain")

    X, Yg = np.meshgrid(xs, ys)
    inside = groove.contains(X, Yg)
    interp = RegularGridInterpolator((ys, xs), w, bounds_error=False, fill_value=None)

    margins = {}
    norm = np.hypot(w[..., 0], w[..., 1])
    margins["a"] = (np.where(inside, 1.0 - norm, np.inf), X, Yg)

    div = np.gradient(w[..., 0], xs, axis=1) + np.gradient(w[..., 1], ys, axis=0)
    interior = inside.copy()
    interior[0, :] = interior[-1, :] = False
    interior[:, 0] = interior[:, -1] = False
    margins["b"] = (np.where(interior, div, np.inf), X, Yg)

    s_wall = np.linspace(0.0, halfw, 4 * ys.size)
    yw = p.eval(s_wall)
    dz = p._half_slope(s_wall)
    speed = np.sqrt(1.0 + dz * dz)
    walls = []
    for side in (1.0, -1.0):
        pts = np.column_stack([yw, side * s_wall])
        nu = np.column_stack([-side * dz / speed, 1.0 / speed])
        wv = interp(pts)
        walls.append((gamma - np.sum(wv * nu, axis=1), side * s_wall, yw))
    wall_m = np.concatenate([m for m, _, _ in walls])
    wall_x = np.concatenate([x for _, x, _ in walls])
    wall_y = np.concatenate([y for _, _, y in walls])
    margins["c"] = (wall_m, wall_x, wall_y)

    x_lid = np.linspace(-halfw, halfw, 2 * xs.size)
    y_lid = np.full_like(x_lid, groove.y0)
    w_lid = interp(np.column_stack([y_lid, x_lid]))
    margins["d"] = (-np.abs(w_lid[:, 1] - 1.0), x_lid, y_lid)

    worst, where, failed = math.inf, None, None
    for name, (m, mx, my) in margins.items():
        m = np.asarray(m) + slack
        k = np.unravel_index(int(np.argmin(m)), m.shape)
        if m[k] < worst:
            worst, where = float(m[k]), (float(mx[k]), float(my[k]))
        if failed is None and m[k] < 0.0:
            failed = name
    verdict = Verdict.CERTIFIED if failed is None else Verdict.NOT_CERTIFIED
    y1 = compute_y1(p, groove.y0)
    return CertificateResult(verdict, Method.DISCRETE_FIELD, y1, worst,
                             witness=where, failed=failed, slack=slack)
