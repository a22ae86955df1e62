"""Rough domains, their rasterisation and the discrete measure data.

The rough wall is the base wall pushed inward by ``eps * (Y - zeta(s/eps))``
so that ``Omega_eps`` sits inside the base domain ``Omega``; groove cavities
are centred where ``zeta`` peaks and tooth tips stand ``eps * Y`` off the
base wall.

Grids are indexed ``[row, col] = [j, i]`` with cell centres at
``origin + (i, j) * spacing``.  The origin is chosen so that straight base
walls run through cell centres.
"""

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from shapely.geometry import LinearRing

from .profile import Profile

SAMPLES_PER_PERIOD = 64
SUBSAMPLES = 4
MIN_CELLS_PER_PERIOD = 8
FLAT_DISK_SEGMENTS = 2048
GAMMA_OTHER = 0.999


class GeometryError(ValueError):
    pass


class ResolutionError(ValueError):
    def __init__(self, required, given):
        super().__init__(
            f"resolution too coarse: {given} cells per unit given, "
            f"at least {required} needed (spacing <= epsilon/8)"
        )
        self.required = required
        self.given = given


class CellClass(enum.IntEnum):
    EXTERIOR = 0
    INTERIOR = 1
    BOUNDARY = 2


@dataclass(frozen=True)
class Channel:
    """Rectangle ``[0, width] x [0, height]`` with a rough bottom wall."""

    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise GeometryError("channel width and height must be positive")

    @property
    def bbox(self):
        return 0.0, 0.0, self.width, self.height

    @property
    def rough_length(self):
        return self.width

    @property
    def area(self):
        return self.width * self.height

    def distance_to_wall(self, x, y):
        """Distance to the base wall ``y = 0``."""
        return np.abs(np.asarray(y, float))


@dataclass(frozen=True)
class Disk:
    """Disk of the given radius centred at the origin; its whole rim is rough."""

    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError("disk radius must be positive")

    @property
    def bbox(self):
        r = self.radius
        return -r, -r, r, r

    @property
    def rough_length(self):
        return 2.0 * math.pi * self.radius

    @property
    def area(self):
        return math.pi * self.radius ** 2

    def distance_to_wall(self, x, y):
        return np.abs(self.radius - np.hypot(x, y))


Base = Union[Channel, Disk]


def check_reciprocal(eps, tol=1e-9):
    """Return ``j`` with ``eps = 1/j``; raise if there is none."""
    if not eps > 0:
        raise GeometryError("epsilon must equal 1/j for an integer j >= 1")
    j = round(1.0 / eps)
    if j < 1 or abs(1.0 / eps - j) > tol * max(1.0, j):
        raise GeometryError(f"epsilon must equal 1/j (got {eps})")
    return j


@dataclass(frozen=True, eq=False)
class RoughDomain:
    base: Base
    profile: Profile
    epsilon: float
    boundary: np.ndarray  # (N, 2) vertices of the closed polyline, CCW
    rough: np.ndarray  # (N,) segment k joins vertex k to k+1 (mod N)
    gamma: float = 0.0
    gamma_other: float = GAMMA_OTHER

    @property
    def segments(self):
        p = self.boundary
        return p, np.roll(p, -1, axis=0)

    @property
    def segment_lengths(self):
        a, b = self.segments
        return np.hypot(*(b - a).T)

    @property
    def gamma_map(self):
        return np.where(self.rough, self.gamma, self.gamma_other)

    @property
    def rough_wall_length(self):
        return float(self.segment_lengths[self.rough].sum())

    @property
    def amplitude(self):
        """Largest inward displacement of the wall, ``eps * Y``."""
        return self.epsilon * self.profile.depth

    @property
    def mean_offset(self):
        """Distance from the base wall to the mean line of the rough wall."""
        return self.epsilon * (self.profile.depth - self.profile.mean_height)

    def with_gamma(self, gamma, gamma_other=None):
        go = self.gamma_other if gamma_other is None else gamma_other
        return RoughDomain(self.base, self.profile, self.epsilon, self.boundary,
                           self.rough, float(gamma), float(go))

    def polygon_area(self):
        x, y = self.boundary.T
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    def inside(self, x, y):
        """Membership in ``Omega_eps`` (closed), vectorised."""
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if isinstance(self.base, Channel):
            W, H = self.base.width, self.base.height
            n = int(self.rough.sum())
            wx, wy = self.boundary[: n + 1].T
            floor = np.interp(x, wx, wy)
            return (x >= 0.0) & (x <= W) & (y <= H) & (y >= floor)
        # polar test against the polyline radius, linear in angle
        th = np.arctan2(self.boundary[:, 1], self.boundary[:, 0]) % (2 * np.pi)
        rho = np.hypot(self.boundary[:, 0], self.boundary[:, 1])
        order = np.argsort(th)
        return np.hypot(x, y) <= np.interp(np.arctan2(y, x) % (2 * np.pi),
                                           th[order], rho[order], period=2 * np.pi)

    def hausdorff_to_base(self):
        """Hausdorff distance between the vertex set and the base boundary."""
        if isinstance(self.base, Channel):
            r = self.rough
            d = np.abs(self.boundary[r, 1])
            return float(d.max()) if d.size else 0.0
        return float(np.abs(self.base.radius - np.hypot(*self.boundary.T)).max())


def _displacement(p, eps, s):
    if p.is_flat:
        return np.zeros_like(s)
    return eps * (p.depth - p.eval(s / eps))


def build_rough_boundary(base: Base, p: Profile, eps, gamma=0.0,
                         gamma_other=GAMMA_OTHER,
                         samples_per_period=SAMPLES_PER_PERIOD) -> RoughDomain:
    """Closed polyline of ``Omega_eps`` for the given base and profile."""
    check_reciprocal(eps)
    if samples_per_period < SAMPLES_PER_PERIOD:
        raise GeometryError(f"need at least {SAMPLES_PER_PERIOD} samples per period")
    L = base.rough_length
    periods = L / eps
    n_per = round(periods)
    if not p.is_flat and abs(periods - n_per) > 1e-9 * max(1.0, periods):
        raise GeometryError(
            f"rough wall length {L} is not an integer multiple of epsilon {eps}"
        )

    if isinstance(base, Channel):
        n = max(n_per, 1) * samples_per_period
        s = np.linspace(0.0, L, n + 1)
        bottom = np.column_stack([s, _displacement(p, eps, s)])
        W, H = base.width, base.height
        if bottom[:, 1].max() >= H:
            raise GeometryError("roughness amplitude reaches the top wall")
        pts = np.vstack([bottom, [[W, H], [0.0, H]]])
        rough = np.zeros(len(pts), dtype=bool)
        rough[:n] = True
    else:
        n = max(n_per * samples_per_period, FLAT_DISK_SEGMENTS)
        s = np.arange(n) * (L / n)
        R = base.radius
        rad = R - _displacement(p, eps, s)
        if rad.min() <= 0.0:
            raise GeometryError("roughness displacement exceeds the disk radius")
        phi = s / R
        pts = np.column_stack([rad * np.cos(phi), rad * np.sin(phi)])
        rough = np.ones(n, dtype=bool)

    if not LinearRing(pts).is_simple:
        raise GeometryError("rough boundary self-intersects (epsilon too large)")
    return RoughDomain(base, p, float(eps), pts, rough, float(gamma), float(gamma_other))


# -- perimeter stencil ---------------------------------------------------

_FORWARD16 = np.array([(0, 1), (1, 2), (1, 1), (2, 1), (1, 0), (2, -1), (1, -1), (1, -2)])
_FORWARD8 = np.array([(0, 1), (1, 1), (1, 0), (1, -1)])


@dataclass(frozen=True, eq=False)
class Stencil:
    """Symmetric neighbourhood with Cauchy-Crofton weights.

    ``offsets`` are ``(drow, dcol)`` pairs covering both signs, each with half
    the Crofton weight, so summing over all cells and all offsets counts every
    unordered pair once.  ``forward`` gives the equivalent one-sided form.
    """

    offsets: np.ndarray
    weights: np.ndarray

    @property
    def forward(self):
        k = len(self.offsets) // 2
        return self.offsets[:k], 2.0 * self.weights[:k]


def crofton_weights(forward, spacing=1.0):
    """Full Crofton weights for one-sided offsets ordered by angle in ``[0, pi)``."""
    ang = np.arctan2(forward[:, 0], forward[:, 1])
    nxt = np.roll(ang, -1)
    nxt[-1] += np.pi
    prv = np.roll(ang, 1)
    prv[0] -= np.pi
    dphi = 0.5 * (nxt - prv)
    return spacing * dphi / (2.0 * np.hypot(forward[:, 0], forward[:, 1]))


def perimeter_stencil(grid=None, neighbourhood=16, spacing=None) -> Stencil:
    """Cauchy-Crofton stencil for the grid spacing (16 or 8 neighbours)."""
    if spacing is None:
        spacing = 1.0 if grid is None else grid.spacing
    if neighbourhood == 16:
        fwd = _FORWARD16
    elif neighbourhood == 8:
        fwd = _FORWARD8
    else:
        raise ValueError("neighbourhood must be 16 or 8")
    w = crofton_weights(fwd, spacing)
    return Stencil(np.vstack([fwd, -fwd]), np.concatenate([w, w]) / 2.0)


def shifted_pairs(shape, offset):
    """Slices ``(a, b)`` so that ``arr[a]`` and ``arr[b]`` pair each cell with its neighbour."""
    dr, dc = int(offset[0]), int(offset[1])
    ny, nx = shape

    def rng(d, n):
        return (slice(0, n - d), slice(d, n)) if d >= 0 else (slice(-d, n), slice(0, n + d))

    ra, rb = rng(dr, ny)
    ca, cb = rng(dc, nx)
    return (ra, ca), (rb, cb)


def pair_sum(phi, stencil, active=None):
    """``sum_{pairs} w |phi(c) - phi(c+o)|`` over pairs of active cells."""
    phi = np.asarray(phi, float)
    total = 0.0
    offs, ws = stencil.forward
    for o, w in zip(offs, ws):
        a, b = shifted_pairs(phi.shape, o)
        d = np.abs(phi[a] - phi[b])
        if active is not None:
            d = d[active[a] & active[b]]
        total += w * float(d.sum())
    return total


# -- rasterisation -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Grid:
    nx: int
    ny: int
    spacing: float
    origin: tuple  # centre of cell (row 0, col 0)
    inside_fraction: np.ndarray
    cell_class: np.ndarray
    trace_weight: np.ndarray
    stencil: Stencil
    piece_cell: np.ndarray = field(repr=False)
    piece_segment: np.ndarray = field(repr=False)
    piece_length: np.ndarray = field(repr=False)

    @property
    def shape(self):
        return self.ny, self.nx

    @property
    def cell_area(self):
        return self.spacing ** 2

    @property
    def active(self):
        return self.cell_class != CellClass.EXTERIOR

    def centres(self):
        x = self.origin[0] + self.spacing * np.arange(self.nx)
        y = self.origin[1] + self.spacing * np.arange(self.ny)
        return np.meshgrid(x, y)

    def area(self):
        return float(self.inside_fraction.sum()) * self.cell_area


def _inside_fraction(dom, origin, spacing, shape, sub=SUBSAMPLES):
    ny, nx = shape
    off = ((np.arange(sub) + 0.5) / sub - 0.5) * spacing
    x = origin[0] + spacing * np.arange(nx)
    frac = np.empty(shape)
    # rows are independent; processed in blocks to bound memory
    block = max(1, 2 ** 20 // (nx * sub * sub))
    for j0 in range(0, ny, block):
        j1 = min(ny, j0 + block)
        y = origin[1] + spacing * np.arange(j0, j1)
        X = x[None, :, None, None] + off[None, None, None, :]
        Y = y[:, None, None, None] + off[None, None, :, None]
        X, Y = np.broadcast_arrays(X, Y)
        frac[j0:j1] = dom.inside(X, Y).mean(axis=(2, 3))
    return frac


def _clip_segments(dom, origin, spacing, shape):
    """Split every polyline segment at cell edges.

    Returns flat cell indices, segment indices and piece lengths.
    """
    ny, nx = shape
    ox = origin[0] - 0.5 * spacing
    oy = origin[1] - 0.5 * spacing
    a, b = dom.segments
    cells, segs, lens = [], [], []
    for k in range(len(a)):
        p, q = a[k], b[k]
        d = q - p
        ts = [0.0, 1.0]
        for ax, o in ((0, ox), (1, oy)):
            if d[ax] == 0.0:
                continue
            lo, hi = sorted((p[ax], q[ax]))
            m = np.arange(math.ceil((lo - o) / spacing), math.floor((hi - o) / spacing) + 1)
            t = (o + m * spacing - p[ax]) / d[ax]
            ts.extend(t[(t > 0.0) & (t < 1.0)])
        ts = np.unique(ts)
        mid = 0.5 * (ts[1:] + ts[:-1])
        ln = np.diff(ts) * math.hypot(d[0], d[1])
        mx = p[0] + mid * d[0]
        my = p[1] + mid * d[1]
        ci = np.clip(np.floor((mx - ox) / spacing).astype(int), 0, nx - 1)
        cj = np.clip(np.floor((my - oy) / spacing).astype(int), 0, ny - 1)
        keep = ln > 0.0
        cells.append(cj[keep] * nx + ci[keep])
        segs.append(np.full(int(keep.sum()), k))
        lens.append(ln[keep])
    return np.concatenate(cells), np.concatenate(segs), np.concatenate(lens)


def required_resolution(eps):
    return math.ceil(MIN_CELLS_PER_PERIOD / eps - 1e-9)


def rasterize(dom: RoughDomain, n_cells_per_unit: int, neighbourhood=16) -> Grid:
    """Rasterise ``Omega_eps`` on a square grid with ``n_cells_per_unit`` cells per unit."""
    if not dom.profile.is_flat:
        need = required_resolution(dom.epsilon)
        if n_cells_per_unit < need:
            raise ResolutionError(need, n_cells_per_unit)
    h = 1.0 / n_cells_per_unit
    x0, y0, x1, y1 = dom.base.bbox
    nx = int(round((x1 - x0) / h)) + 1
    ny = int(round((y1 - y0) / h)) + 1
    origin = (x0, y0)
    frac = _inside_fraction(dom, origin, h, (ny, nx))
    pc, ps, pl = _clip_segments(dom, origin, h, (ny, nx))

    cls = np.full((ny, nx), CellClass.BOUNDARY, dtype=np.int8)
    cls[frac == 1.0] = CellClass.INTERIOR
    cls[frac == 0.0] = CellClass.EXTERIOR
    walled = np.zeros(ny * nx, dtype=bool)
    walled[pc] = True
    cls.ravel()[walled] = CellClass.BOUNDARY

    grid = Grid(nx, ny, h, origin, frac, cls, np.zeros((ny, nx)),
                perimeter_stencil(spacing=h, neighbourhood=neighbourhood), pc, ps, pl)
    tw = trace_weights(dom, grid)
    object.__setattr__(grid, "trace_weight", tw)
    return grid


def trace_weights(dom: RoughDomain, grid: Grid, gamma_map=None):
    """Per-cell ``sum gamma(segment) * clipped length``.

    ``gamma_map`` may be ``None`` (use the domain's values), a scalar applied
    to every segment, a mapping ``{"wall": g, "other": g_other}`` or a
    per-segment array.
    """
    if gamma_map is None:
        g = dom.gamma_map
    elif isinstance(gamma_map, dict):
        g = np.where(dom.rough, gamma_map.get("wall", dom.gamma),
                     gamma_map.get("other", dom.gamma_other))
    elif np.ndim(gamma_map) == 0:
        g = np.full(len(dom.rough), float(gamma_map))
    else:
        g = np.asarray(gamma_map, float)
        if g.shape != dom.rough.shape:
            raise ValueError("per-segment gamma array has the wrong length")
    w = np.bincount(grid.piece_cell, weights=g[grid.piece_segment] * grid.piece_length,
                    minlength=grid.nx * grid.ny)
    return w.reshape(grid.shape)


def write_pgm(path, image, maxval=255):
    """Write a plain (P2) PGM; row 0 of ``image`` is the bottom of the picture."""
    img = np.asarray(image, float)
    if img.dtype == bool or img.max(initial=0) <= 1.0:
        img = img * maxval
    img = np.clip(np.rint(img), 0, maxval).astype(int)[::-1]
    ny, nx = img.shape
    lines = ["P2", f"{nx} {ny}", str(maxval)]
    lines += [" ".join(map(str, row)) for row in img]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_pgm(path):
    with open(path, encoding="ascii") as fh:
        tokens = fh.read().split()
    if tokens[0] != "P2":
        raise ValueError("not a plain PGM file")
    nx, ny, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    data = np.array(tokens[4:4 + nx * ny], dtype=int).reshape(ny, nx)
    return data[::-1], maxval
