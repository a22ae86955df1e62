"""Periodic groove profiles.

A profile ``zeta`` is a 1-periodic, even, non-negative function that is
non-increasing on the half period ``[0, 1/2]``.  Its maximum ``Y = zeta(0)``
is the groove depth and ``h`` denotes the inverse of ``zeta`` restricted to
``[0, 1/2]`` (so ``h(0) = 1/2`` and ``h(Y) = 0``).
"""

import csv
import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from ._numerics import golden_section, panel_integrals

QUAD_TOL = 1e-10
QUAD_LIMIT = 60
CRITICAL_SAMPLES = 2 ** 14


class InvalidProfileError(ValueError):
    pass


class NoInverseError(ValueError):
    pass


class OneSidedDerivativeError(ValueError):
    """Raised when the slope is requested at a kink.

    The two one-sided derivatives are kept in ``left`` and ``right``.
    """

    def __init__(self, s, left, right):
        super().__init__(
            f"profile has a kink at s={s}: left slope {left}, right slope {right}"
        )
        self.s = s
        self.left = left
        self.right = right


class ProfileKind(str, enum.Enum):
    FLAT = "flat"
    TRIANGLE = "triangle"
    SINUSOID = "sinusoid"
    TABULATED = "tabulated"


def _reduce(s):
    """Map ``s`` to the half period ``[0, 1/2]``; also return the slope sign."""
    t = np.mod(s, 1.0)
    sign = np.where(t <= 0.5, 1.0, -1.0)
    return np.where(t <= 0.5, t, 1.0 - t), sign


@dataclass(frozen=True)
class Profile:
    """Groove profile on the unit period.

    Use the constructors :meth:`flat`, :meth:`triangle`, :meth:`sinusoid`
    and :meth:`tabulated` rather than calling the class directly.
    """

    kind: ProfileKind
    m: float = 0.0
    a: float = 0.0
    samples: tuple = ()
    period: float = field(default=1.0, init=False)

    def __post_init__(self):
        if self.kind is ProfileKind.TRIANGLE and not self.m > 0:
            raise InvalidProfileError("triangle slope m must be positive")
        if self.kind is ProfileKind.SINUSOID and not self.a > 0:
            raise InvalidProfileError("sinusoid amplitude a must be positive")
        if self.kind is ProfileKind.TABULATED:
            _validate_samples(self.samples)

    @classmethod
    def flat(cls):
        return cls(ProfileKind.FLAT)

    @classmethod
    def triangle(cls, m):
        return cls(ProfileKind.TRIANGLE, m=float(m))

    @classmethod
    def sinusoid(cls, a):
        return cls(ProfileKind.SINUSOID, a=float(a))

    @classmethod
    def tabulated(cls, samples):
        samples = tuple((float(s), float(z)) for s, z in samples)
        return cls(ProfileKind.TABULATED, samples=samples)

    @classmethod
    def from_csv(cls, path):
        """Read a tabulated profile from a CSV file with header ``s,zeta``."""
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or set(reader.fieldnames) != {"s", "zeta"}:
                raise InvalidProfileError(f"{path}: expected header 's,zeta'")
            rows = [(float(r["s"]), float(r["zeta"])) for r in reader]
        return cls.tabulated(rows)

    @property
    def is_flat(self):
        return self.kind is ProfileKind.FLAT

    @cached_property
    def _spline(self):
        s, z = np.array(self.samples).T
        d = PchipInterpolator(s, z).derivative()(s)
        # even + periodic + C^1 forces zero slope at both ends
        d[0] = d[-1] = 0.0
        return CubicHermiteSpline(s, z, d)

    @cached_property
    def _dspline(self):
        return self._spline.derivative()

    def _breakpoints(self):
        if self.kind is ProfileKind.TABULATED:
            return [s for s, _ in self.samples[1:-1]]
        return None

    # -- pointwise evaluation ---------------------------------------------

    def eval(self, s):
        """Profile height ``zeta(s)``."""
        t, _ = _reduce(np.asarray(s, dtype=float))
        if self.kind is ProfileKind.FLAT:
            out = np.zeros_like(t)
        elif self.kind is ProfileKind.TRIANGLE:
            out = self.m * (0.5 - t)
        elif self.kind is ProfileKind.SINUSOID:
            out = 0.5 * self.a * (1.0 + np.cos(2.0 * np.pi * t))
        else:
            out = self._spline(t)
        return out[()] if out.ndim == 0 else out

    def slope(self, s):
        """Derivative ``zeta'(s)``; raises at the kinks of a triangle."""
        s = np.asarray(s, dtype=float)
        t, sign = _reduce(s)
        if self.kind is ProfileKind.FLAT:
            out = np.zeros_like(t)
        elif self.kind is ProfileKind.TRIANGLE:
            kink = (t == 0.0) | (t == 0.5)
            if np.any(kink):
                s_k = float(np.atleast_1d(s)[np.argmax(np.atleast_1d(kink))])
                at_top = float(np.mod(s_k, 1.0)) == 0.0
                left, right = (self.m, -self.m) if at_top else (-self.m, self.m)
                raise OneSidedDerivativeError(s_k, left, right)
            out = -self.m * sign
        elif self.kind is ProfileKind.SINUSOID:
            out = -self.a * np.pi * np.sin(2.0 * np.pi * s)
        else:
            out = sign * self._dspline(t)
        return out[()] if out.ndim == 0 else out

    def _half_slope(self, t):
        """Slope on the open half period, vectorised, no kink checks."""
        t = np.asarray(t, dtype=float)
        if self.kind is ProfileKind.FLAT:
            return np.zeros_like(t)
        if self.kind is ProfileKind.TRIANGLE:
            return np.full_like(t, -self.m)
        if self.kind is ProfileKind.SINUSOID:
            return -self.a * np.pi * np.sin(2.0 * np.pi * t)
        return self._dspline(t)

    def _speed(self, t):
        return np.sqrt(1.0 + self._half_slope(t) ** 2)

    # -- derived scalars ----------------------------------------------------

    @cached_property
    def depth(self):
        """Groove depth ``Y = max zeta``."""
        return float(self.eval(0.0))

    @cached_property
    def mean_height(self):
        """Period average of ``zeta``."""
        if self.kind is ProfileKind.FLAT:
            return 0.0
        if self.kind is ProfileKind.TRIANGLE:
            return 0.25 * self.m
        if self.kind is ProfileKind.SINUSOID:
            return 0.5 * self.a
        return 2.0 * float(self._spline.integrate(0.0, 0.5))

    def inverse_height(self, y):
        """Inverse branch ``h(y)`` on ``[0, 1/2]`` by vectorised bisection."""
        if self.is_flat:
            raise NoInverseError("a flat profile has no inverse branch")
        y = np.asarray(y, dtype=float)
        Y = self.depth
        if np.any((y < 0.0) | (y > Y)):
            raise ValueError(f"height outside [0, {Y}]")
        lo = np.zeros_like(y)
        hi = np.full_like(y, 0.5)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            above = self.eval(mid) > y
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        out = 0.5 * (lo + hi)
        out = np.where(y == 0.0, 0.5, np.where(y == Y, 0.0, out))
        return out[()] if out.ndim == 0 else out

    def inverse_slope(self, y):
        """``h'(y) = 1 / zeta'(h(y))``; ``-inf`` where ``zeta'`` vanishes."""
        s = self.inverse_height(y)
        d = self._half_slope(s)
        with np.errstate(divide="ignore"):
            out = np.where(d == 0.0, -np.inf, 1.0 / np.where(d == 0.0, 1.0, d))
        return out[()] if np.ndim(out) == 0 else out

    def arc_length(self, s_a, s_b):
        """Length of the graph of ``zeta`` over ``[s_a, s_b]`` within ``[0, 1/2]``."""
        if not (0.0 <= s_a <= s_b <= 0.5):
            raise ValueError("need 0 <= s_a <= s_b <= 1/2")
        if s_a == s_b:
            return 0.0
        if self.kind in (ProfileKind.FLAT, ProfileKind.TRIANGLE):
            return (s_b - s_a) * math.sqrt(1.0 + self.m ** 2)
        pts = self._breakpoints()
        if pts is not None:
            pts = [p for p in pts if s_a < p < s_b] or None
        val, _ = integrate.quad(
            lambda t: math.sqrt(1.0 + float(self._half_slope(t)) ** 2),
            s_a,
            s_b,
            epsabs=QUAD_TOL * 1e-2,
            epsrel=1e-13,
            limit=QUAD_LIMIT,
            points=pts,
        )
        return val

    def arc_to_half(self, s):
        """Arc length from each ``s`` to ``1/2``, for many ``s`` at once.

        Gauss-Legendre panels between the sorted abscissae, accumulated from
        the right; faster than repeated :meth:`arc_length` and accurate to
        rounding for the analytic kinds.
        """
        s = np.asarray(s, dtype=float)
        flat = s.ravel()
        order = np.argsort(flat)
        nodes = np.concatenate([flat[order], [0.5]])
        pieces = panel_integrals(self._speed, nodes)
        tail = np.cumsum(pieces[::-1])[::-1]
        out = np.empty_like(flat)
        out[order] = tail
        return out.reshape(s.shape)

    def roughness(self):
        """Average roughness ``r = 2 * arc_length(0, 1/2)``."""
        return self._roughness

    @cached_property
    def _roughness(self):
        return 2.0 * self.arc_length(0.0, 0.5)

    def critical_gamma(self):
        """``1 / sqrt(1 + max |zeta'|^2)`` via dense sampling + golden section."""
        return self._critical_gamma

    @cached_property
    def _critical_gamma(self):
        n = CRITICAL_SAMPLES
        t = (np.arange(n) + 0.5) * (0.5 / n)
        mag = np.abs(self._half_slope(t))
        i = int(np.argmax(mag))
        lo = t[max(i - 1, 0)]
        hi = t[min(i + 1, n - 1)]
        _, neg = golden_section(lambda x: -abs(float(self._half_slope(x))), lo, hi)
        best = max(float(mag[i]), -neg)
        return 1.0 / math.sqrt(1.0 + best * best)


def _validate_samples(samples):
    if len(samples) < 4:
        raise InvalidProfileError("tabulated profile needs at least 4 samples")
    s, z = np.array(samples, dtype=float).T
    if abs(s[0]) > 1e-12 or abs(s[-1] - 0.5) > 1e-12:
        raise InvalidProfileError("tabulated samples must span s = 0 .. 1/2")
    if np.any(np.diff(s) <= 0):
        raise InvalidProfileError("tabulated abscissae must be strictly increasing")
    if np.any(np.diff(z) >= 0):
        raise InvalidProfileError("tabulated heights must be strictly decreasing")
    if abs(z[-1]) > 1e-12:
        raise InvalidProfileError("tabulated profile must vanish at s = 1/2")
