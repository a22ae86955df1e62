"""Discrete droplet energy, min-cut minimisation and angle measurement.

The discrete energy of a binary field ``u`` on the active cells is

    F(u) = sum_{pairs} w |u_c - u_n|  +  sum_c trace_weight_c u_c

with Cauchy-Crofton pair weights.  ``min_cut_solve`` minimises
``F(u) - lam * V(u)`` exactly by an s-t minimum cut.  Because the discrete
isoperimetric profile is concave, that Lagrangian problem only ever returns
(near-)empty or (near-)full sets for droplet-sized volumes, so
``minimize_with_volume`` runs a volume-preserving minimising-movement scheme
instead: every step is an exact min-cut of ``F + movement penalty - lam V`` on
a band around the current interface, with ``lam`` bisected to hold the volume.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import maxflow
import numpy as np
from scipy import ndimage
from scipy.optimize import least_squares
from skimage.measure import find_contours

from .geometry import CellClass, Channel, Disk, pair_sum, shifted_pairs

log = logging.getLogger(__name__)

VOLUME_TOL = 0.005


class ConstraintError(ValueError):
    pass


class MeasurementError(ValueError):
    pass


@dataclass(eq=False)
class DropletField:
    grid: object
    occupancy: np.ndarray  # bool, shape grid.shape

    def __post_init__(self):
        occ = np.asarray(self.occupancy, dtype=bool)
        if occ.shape != self.grid.shape:
            raise ValueError("occupancy shape does not match the grid")
        self.occupancy = occ & self.grid.active

    @property
    def volume(self):
        g = self.grid
        return float(g.inside_fraction[self.occupancy].sum()) * g.cell_area

    @classmethod
    def empty(cls, grid):
        return cls(grid, np.zeros(grid.shape, bool))

    @classmethod
    def full(cls, grid):
        return cls(grid, grid.active.copy())


@dataclass(frozen=True)
class EnergyReport:
    perimeter_term: float
    trace_term: float
    total: float
    lam: float = 0.0
    achieved_volume: float = 0.0
    cut_value: float = 0.0
    target_volume: Optional[float] = None

    def as_dict(self):
        return {
            "perimeter_term": self.perimeter_term,
            "trace_term": self.trace_term,
            "total": self.total,
            "lambda": self.lam,
            "achieved_volume": self.achieved_volume,
            "cut_value": self.cut_value,
        }


def _unary(grid, tw, lam):
    return np.where(grid.active, tw - lam * grid.cell_area * grid.inside_fraction, 0.0)


def cut_cost(field: DropletField, tw, lam):
    """Value of the s-t cut that the labelling ``field`` induces at multiplier ``lam``.

    Equals ``F - lam * V + sum max(-unary, 0)``.
    """
    g = field.grid
    u = _unary(g, tw, lam)
    occ = field.occupancy
    per = pair_sum(occ, g.stencil, g.active)
    return per + float(u[occ].sum()) + float(np.maximum(-u, 0.0).sum())


def discrete_energy(field: DropletField, tw=None, lam=0.0) -> EnergyReport:
    """Perimeter, trace and total energy of a binary field."""
    g = field.grid
    tw = g.trace_weight if tw is None else tw
    occ = field.occupancy
    per = float(pair_sum(occ, g.stencil, g.active))
    tr = float(tw[occ].sum())
    return EnergyReport(per, tr, per + tr, lam, field.volume, cut_cost(field, tw, lam))


# -- exact min-cut on a subgraph ------------------------------------------

class _BandProblem:
    """Min-cut problem on the free cells, with the rest held fixed.

    ``base_unary`` excludes the volume term, which is added per ``lam``.
    """

    def __init__(self, grid, tw, free, fixed_value, extra_unary=None):
        self.grid = grid
        ny, nx = grid.shape
        idx = -np.ones(grid.shape, dtype=np.int64)
        n = int(free.sum())
        idx[free] = np.arange(n)
        self.free = free
        self.idx = idx
        self.n = n
        unary = tw.astype(float).copy()
        if extra_unary is not None:
            unary += extra_unary
        const = 0.0
        active = grid.active
        fixed_on = fixed_value & active & ~free
        ii, jj, ww = [], [], []
        offs, ws = grid.stencil.forward
        for o, w in zip(offs, ws):
            a, b = shifted_pairs(grid.shape, o)
            fa, fb = free[a], free[b]
            both = fa & fb
            ii.append(idx[a][both])
            jj.append(idx[b][both])
            ww.append(np.full(int(both.sum()), w))
            # free cell next to a fixed active cell: the pair becomes unary
            for fx, fy, sx, sy in ((fa, fb, a, b), (fb, fa, b, a)):
                m = fx & ~fy & active[sy]
                on = fixed_on[sy]
                unary[sx] += np.where(m, np.where(on, -w, w), 0.0)
                const += w * float((m & on).sum())
        self.i = np.concatenate(ii)
        self.j = np.concatenate(jj)
        self.w = np.concatenate(ww)
        self.base_unary = unary[free]
        self.mass = (grid.cell_area * grid.inside_fraction)[free]
        self.const = const
        self.nodes = np.arange(n)
        self._warm = None
        self._lam = None
        self._graph = maxflow.Graph[float](n, len(self.i))
        self._graph.add_nodes(n)
        if len(self.i):
            self._graph.add_edges(self.i, self.j, self.w, self.w)

    def solve(self, lam):
        """Minimum cut at multiplier ``lam`` on a fresh copy of the graph."""
        u = self.base_unary - lam * self.mass
        g = self._graph.copy()
        # a node left on the source side is occupied and pays its sink capacity
        g.add_grid_tedges(self.nodes, np.maximum(-u, 0.0), np.maximum(u, 0.0))
        flow = g.maxflow()
        x = g.get_grid_segments(self.nodes) == 0
        return x, flow, float(np.maximum(-u, 0.0).sum())

    def solve_warm(self, lam):
        """Same labelling as :meth:`solve`, reusing the previous flow.

        Only the terminal capacities change with ``lam``, so the residual
        graph and search trees of the last solve stay valid.
        """
        if self._warm is None:
            self._warm = self._graph.copy()
            u = self.base_unary - lam * self.mass
            self._warm.add_grid_tedges(self.nodes, np.maximum(-u, 0.0), np.maximum(u, 0.0))
            self._warm.maxflow()
        else:
            a = (lam - self._lam) * self.mass
            self._warm.add_grid_tedges(self.nodes, np.maximum(a, 0.0), np.maximum(-a, 0.0))
            self._warm.mark_grid_nodes(self.nodes)
            self._warm.maxflow(reuse_trees=True)
        self._lam = lam
        return self._warm.get_grid_segments(self.nodes) == 0

    def embed(self, x, fixed_value):
        out = fixed_value & self.grid.active & ~self.free
        out[self.free] = x
        return out


def min_cut_solve(grid, tw, lam, free=None, fixed=None):
    """Global minimiser of ``F - lam * V`` (over ``free`` cells, rest fixed).

    Returns ``(DropletField, cut_value)`` where ``cut_value`` is the max-flow
    value; for a full-grid solve it equals :func:`cut_cost` of the result.
    """
    if not np.isfinite(lam) or not np.all(np.isfinite(tw)):
        raise ValueError("weights and lambda must be finite")
    active = grid.active
    free = active.copy() if free is None else (np.asarray(free, bool) & active)
    fixed = np.zeros(grid.shape, bool) if fixed is None else np.asarray(fixed, bool)
    prob = _BandProblem(grid, tw, free, fixed)
    x, flow, _ = prob.solve(lam)
    return DropletField(grid, prob.embed(x, fixed)), flow


# -- seeds ---------------------------------------------------------------

def _wall_frame(dom):
    """A contact point on the base wall and the inward unit normal there."""
    if isinstance(dom.base, Channel):
        return np.array([0.5 * dom.base.width, 0.0]), np.array([0.0, 1.0])
    return np.array([0.0, dom.base.radius]), np.array([0.0, -1.0])


def cap_seed(grid, dom, q, theta, empty_below=None):
    """Disc cut by the wall, meeting the base wall at angle ``theta``,
    scaled so that its grid volume is as close to ``q`` as possible.

    ``empty_below`` (a distance from the base wall) leaves groove cavities
    below that level dry.
    """
    X, Y = grid.centres()
    p0, nrm = _wall_frame(dom)
    keep = grid.active.copy()
    if empty_below is not None:
        keep &= dom.base.distance_to_wall(X, Y) >= empty_below

    def make(rho):
        c = p0 - rho * math.cos(theta) * nrm
        return keep & (np.hypot(X - c[0], Y - c[1]) <= rho)

    area = theta - math.sin(theta) * math.cos(theta)
    lo, hi = 0.0, 4.0 * math.sqrt(q / max(area, 1e-3)) + 4 * grid.spacing
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if DropletField(grid, make(mid)).volume < q:
            lo = mid
        else:
            hi = mid
    a, b = DropletField(grid, make(lo)), DropletField(grid, make(hi))
    return a if abs(a.volume - q) <= abs(b.volume - q) else b


# -- volume repair -------------------------------------------------------

def _flip_costs(occ, grid, tw, window):
    """Energy change of flipping each cell of ``window`` (a pair of slices)."""
    ys, xs = window
    pad = 2
    y0, y1 = max(ys.start - pad, 0), min(ys.stop + pad, grid.ny)
    x0, x1 = max(xs.start - pad, 0), min(xs.stop + pad, grid.nx)
    sub = occ[y0:y1, x0:x1].astype(float)
    act = grid.active[y0:y1, x0:x1]
    delta = np.where(sub > 0, -tw[y0:y1, x0:x1], tw[y0:y1, x0:x1])
    for o, w in zip(grid.stencil.offsets, grid.stencil.weights):
        a, b = shifted_pairs(sub.shape, o)
        m = act[a] & act[b]
        # flipping c changes |u_c - u_n| by 1 - 2|u_c - u_n|; both orderings count
        d = 2.0 * w * (1.0 - 2.0 * np.abs(sub[a] - sub[b])) * m
        delta[a] += d
    return delta, (slice(y0, y1), slice(x0, x1))


def repair_volume(field: DropletField, tw, q, max_flips=100000):
    """Greedy exact-volume repair.

    Adds (removes) the cheapest cell on the outer (inner) layer of the set
    until the volume is within half a cell of ``q``.
    """
    g = field.grid
    occ = field.occupancy.copy()
    mass = g.cell_area * g.inside_fraction
    vol = float(mass[occ].sum())
    half = 0.5 * g.cell_area
    for _ in range(max_flips):
        grow = vol < q - half
        if not grow and vol <= q + half:
            break
        rows, cols = np.nonzero(occ)
        if rows.size == 0:
            rows, cols = np.nonzero(g.active)
        win = (slice(max(rows.min() - 3, 0), rows.max() + 4),
               slice(max(cols.min() - 3, 0), cols.max() + 4))
        delta, sl = _flip_costs(occ, g, tw, win)
        o = occ[sl]
        near = ndimage.binary_dilation(o, np.ones((3, 3))) & ~o if grow else \
            o & ~ndimage.binary_erosion(o, np.ones((3, 3)), border_value=1)
        cand = near & g.active[sl] & (mass[sl] > 0)
        if not cand.any():
            break
        cost = np.where(cand, delta, np.inf)
        k = np.unravel_index(int(np.argmin(cost)), cost.shape)
        occ[sl][k] = grow
        vol += mass[sl][k] if grow else -mass[sl][k]
    return DropletField(g, occ)


# -- minimising movements with volume control ----------------------------

@dataclass
class SolverOptions:
    volume_tol: float = VOLUME_TOL
    band: int = 12
    max_steps: int = 200
    max_stalls: int = 8
    tau0: float = 2.0
    tau_min: float = 0.25
    tau_max: float = 64.0
    bisection_iters: int = 40
    lam_rtol: float = 1e-7
    step_tol: float = 0.2
    jitter: float = 1e-3
    repair: bool = True
    seed_angles_deg: tuple = (60.0, 90.0, 120.0, 150.0)


@dataclass
class VolumeSolveInfo:
    candidates: list = field(default_factory=list)  # (label, energy, volume)
    steps: int = 0
    touches_other_walls: bool = False


def _jitter(shape):
    # fixed per-cell perturbation that breaks ties between symmetric cells
    return np.random.default_rng(12345).random(shape)


def _step(grid, tw, E, q, tau, lam, opts):
    """One minimising-movement step at time step ``tau``.

    Returns the new set and its multiplier; ``lam`` seeds the bracket.
    """
    active = grid.active
    d_in = ndimage.distance_transform_edt(E | ~active)
    d_out = ndimage.distance_transform_edt(~E)
    dist = np.where(E, d_in, d_out)
    free = active & (dist <= opts.band)
    mass = grid.cell_area * grid.inside_fraction
    dist = np.maximum(dist - 0.5, 0.0) + opts.jitter * _jitter(grid.shape)
    pen = dist * grid.spacing * mass / tau
    extra = np.where(E, -pen, pen)
    prob = _BandProblem(grid, tw, free, E, extra_unary=extra)
    fixed_vol = float(mass[E & ~free].sum())

    cache = {}

    def vol_at(l):
        if l not in cache:
            x = prob.solve_warm(l)
            cache[l] = (fixed_vol + float(prob.mass[x].sum()), x)
        return cache[l][0]

    tol = opts.step_tol * opts.volume_tol * q
    step = 0.05 * max(abs(lam), 1.0)
    lo, hi = lam - step, lam + step
    while vol_at(lo) > q and step < 1e8:
        step *= 2.0
        lo = lam - step
    step = 0.05 * max(abs(lam), 1.0)
    while vol_at(hi) < q and step < 1e8:
        step *= 2.0
        hi = lam + step
    # Illinois false position on the monotone volume response
    flo, fhi = vol_at(lo) - q, vol_at(hi) - q
    side = 0
    for _ in range(opts.bisection_iters):
        if min(abs(flo), abs(fhi)) <= tol:
            break
        if hi - lo <= opts.lam_rtol * max(abs(lo), abs(hi), 1.0):
            break
        mid = hi - fhi * (hi - lo) / (fhi - flo) if fhi != flo else 0.5 * (lo + hi)
        if not lo < mid < hi:
            mid = 0.5 * (lo + hi)
        fm = vol_at(mid) - q
        if fm < 0:
            lo, flo = mid, fm
            if side == -1:
                fhi *= 0.5
            side = -1
        else:
            hi, fhi = mid, fm
            if side == 1:
                flo *= 0.5
            side = 1
    best = lo if abs(vol_at(lo) - q) <= abs(vol_at(hi) - q) else hi
    return prob.embed(cache[best][1], E), best


def _adjusted(f, tw, lam, q):
    """Energy corrected to first order for the volume error."""
    return discrete_energy(f, tw).total - lam * (f.volume - q)


def _descend(grid, tw, seed, q, opts):
    """Descend from ``seed`` by accepted minimising-movement steps.

    Every step is followed by exact-volume repair, so all iterates carry the
    target volume up to half a cell.  ``tau`` (in units of
    ``spacing * sqrt(q/pi)``) grows when a step leaves the set unchanged and
    shrinks when it fails to lower the energy.  Returns the accepted
    iterates, the repaired seed first.
    """
    R0 = math.sqrt(q / math.pi)
    unit = grid.spacing * R0
    tau = opts.tau0
    lam = 1.0 / R0
    cur = repair_volume(seed, tw, q)
    e_cur = discrete_energy(cur, tw).total
    out = [(cur, math.nan)]
    stalls = 0
    steps = 0
    while steps < opts.max_steps and stalls < opts.max_stalls:
        steps += 1
        E_new, lam_new = _step(grid, tw, cur.occupancy, q, tau * unit, lam, opts)
        f = repair_volume(DropletField(grid, E_new), tw, q)
        if np.array_equal(f.occupancy, cur.occupancy):
            stalls += 1
            if tau >= opts.tau_max:
                break
            tau = min(2.0 * tau, opts.tau_max)
            continue
        e_new = discrete_energy(f, tw).total
        gain = (e_cur - lam_new * (cur.volume - q)) - (e_new - lam_new * (f.volume - q))
        if gain > 1e-12:
            cur, e_cur, lam = f, e_new, lam_new
            out.append((f, lam))
            stalls = 0
            tau = min(1.5 * tau, opts.tau_max)
        else:
            stalls += 1
            tau *= 0.5
            if tau < opts.tau_min:
                break
    return out, steps


def minimize_with_volume(grid, tw, q, dom=None, seeds=None, opts=None):
    """Minimise the discrete energy among sets of volume ``q``.

    ``seeds`` is a list of ``(label, DropletField)``; if omitted, wall caps at
    the angles in ``opts.seed_angles_deg`` are used (needs ``dom``).  Seeds
    are descended with the minimising-movement scheme; every feasible iterate
    (volume within ``opts.volume_tol``), seeds included, is a candidate, and
    the one of least energy after exact-volume repair is returned.
    """
    opts = opts or SolverOptions()
    avail = grid.area()
    if not 0.0 < q < avail:
        raise ConstraintError(f"volume q={q} outside (0, {avail})")
    if seeds is None:
        if dom is None:
            raise ValueError("need either seeds or a domain to build them")
        seeds = [(f"cap{a:g}", cap_seed(grid, dom, q, math.radians(a)))
                 for a in opts.seed_angles_deg]

    info = VolumeSolveInfo()
    best = None
    for label, seed in seeds:
        pool, n = _descend(grid, tw, seed, q, opts)
        info.steps += n
        for f, lam in pool:
            if abs(f.volume - q) > opts.volume_tol * q:
                continue
            rep = discrete_energy(f, tw, 0.0 if math.isnan(lam) else lam)
            if best is None or rep.total < best[1].total:
                best = (f, rep)
        f, lam = pool[-1]
        info.candidates.append((label, discrete_energy(f, tw).total, f.volume))
    if best is None:
        raise ConstraintError("no feasible droplet found within the volume tolerance")

    g, rep = best
    report = EnergyReport(rep.perimeter_term, rep.trace_term, rep.total, rep.lam,
                          rep.achieved_volume, rep.cut_value, q)
    if dom is not None:
        from .geometry import trace_weights
        other = trace_weights(dom, grid, {"wall": 0.0, "other": 1.0})
        info.touches_other_walls = bool((other[g.occupancy] > 0).any())
        if info.touches_other_walls:
            log.warning("minimiser touches a non-rough wall; enlarge the domain")
    return g, report, info


# -- apparent contact angle ----------------------------------------------

@dataclass(frozen=True)
class AngleMeasurement:
    angle: float
    residual: float
    centre: tuple
    radius: float
    n_points: int

    def __float__(self):
        return self.angle


def _fit_circle(pts):
    x, y = pts.T
    A = np.column_stack([x, y, np.ones_like(x)])
    b = x ** 2 + y ** 2
    (cx2, cy2, c), *_ = np.linalg.lstsq(A, b, rcond=None)
    cx, cy = cx2 / 2, cy2 / 2
    r = math.sqrt(max(c + cx ** 2 + cy ** 2, 0.0))

    def res(p):
        return np.hypot(x - p[0], y - p[1]) - p[2]

    sol = least_squares(res, [cx, cy, r], method="lm")
    cx, cy, r = sol.x
    return cx, cy, abs(r), float(np.sqrt(np.mean(sol.fun ** 2)))


def measure_apparent_angle(field: DropletField, dom, margin=None,
                           reference="mean") -> AngleMeasurement:
    """Apparent contact angle of the droplet against the smooth wall.

    The interface is traced by marching squares on the occupancy; points
    within ``margin`` of the base wall (default ``2*eps*Y + 2*spacing``, i.e.
    twice the roughness amplitude) or within two cells of the other walls
    are discarded; a circle is fitted to the rest and intersected with the
    wall line.  ``reference="mean"`` uses the mean line of the rough wall
    (parallel to the base wall, offset by ``dom.mean_offset``);
    ``reference="base"`` uses the base wall itself.  The two coincide for a
    flat profile and as ``eps -> 0``.
    """
    g = field.grid
    occ = field.occupancy
    if not occ.any():
        raise MeasurementError("no interface: the field is empty")
    lab, n = ndimage.label(occ, np.ones((3, 3)))
    if n > 1:
        sizes = ndimage.sum(occ, lab, range(1, n + 1))
        occ = lab == (1 + int(np.argmax(sizes)))
    rough_tw = np.zeros(g.shape)
    rough_tw.ravel()[:] = np.bincount(
        g.piece_cell, weights=dom.rough[g.piece_segment] * g.piece_length,
        minlength=g.nx * g.ny)
    if not (rough_tw[occ] > 0).any():
        raise MeasurementError("no wall contact")
    if margin is None:
        margin = 2.0 * dom.amplitude + 2.0 * g.spacing

    pad = np.pad(occ.astype(float), 1)
    pts = [c for c in find_contours(pad, 0.5)]
    if not pts:
        raise MeasurementError("no interface found")
    pts = np.vstack(pts) - 1.0
    x = g.origin[0] + pts[:, 1] * g.spacing
    y = g.origin[1] + pts[:, 0] * g.spacing
    keep = dom.base.distance_to_wall(x, y) > margin
    if isinstance(dom.base, Channel):
        side = 2.0 * g.spacing
        keep &= (x > side) & (x < dom.base.width - side) & (y < dom.base.height - side)
    if keep.sum() < 8:
        raise MeasurementError("no interface: too few contour points away from the wall")
    P = np.column_stack([x[keep], y[keep]])
    cx, cy, rho, resid = _fit_circle(P)

    if reference not in ("mean", "base"):
        raise ValueError("reference must be 'mean' or 'base'")
    off = dom.mean_offset if reference == "mean" else 0.0
    if isinstance(dom.base, Channel):
        c = -(cy - off) / rho
    else:
        Rb = dom.base.radius - off
        d = math.hypot(cx, cy)
        # angle between the radii at an intersection point of the two circles
        c = -(Rb ** 2 + rho ** 2 - d ** 2) / (2.0 * Rb * rho)
    if abs(c) > 1.0:
        raise MeasurementError("fitted circle does not meet the wall")
    return AngleMeasurement(math.acos(c), resid, (cx, cy), rho, int(keep.sum()))
