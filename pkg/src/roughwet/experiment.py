"""Convergence experiments: rough-wall minimisers against the effective flat wall."""

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .geometry import Channel, build_rough_boundary, rasterize, required_resolution, write_pgm
from .profile import Profile
from .solver import (DropletField, EnergyReport, MeasurementError, SolverOptions,
                     cap_seed, discrete_energy, measure_apparent_angle,
                     minimize_with_volume, repair_volume)
from .wetting import Regime, contact_angle, effective_gamma

log = logging.getLogger(__name__)

CSV_HEADER = ["epsilon", "F_eps", "F_eff", "recovery_energy", "l1_distance",
              "angle_measured_deg", "angle_predicted_deg"]


@dataclass(frozen=True)
class ExperimentConfig:
    profile: Profile
    base: object
    gamma: float
    q: float
    epsilon_list: tuple
    resolution: int = 256
    gamma_other: float = 0.999
    solver: SolverOptions = field(default_factory=SolverOptions)
    threads: int = 1


@dataclass(frozen=True)
class Reference:
    field: DropletField
    report: EnergyReport
    coefficient: float
    angle_predicted: float
    regime: Regime
    y0: Optional[float]
    detached: bool = False


@dataclass(frozen=True)
class ConvergenceRow:
    epsilon: float
    F_eps: float
    F_eff: float
    l1_distance: float
    angle_measured: float
    angle_predicted: float
    recovery_energy: float
    error: Optional[str] = None
    field: Optional[DropletField] = field(default=None, repr=False, compare=False)

    def csv_values(self):
        return [self.epsilon, self.F_eps, self.F_eff, self.recovery_energy, self.l1_distance,
                math.degrees(self.angle_measured), math.degrees(self.angle_predicted)]


def _resolution(cfg, eps):
    if cfg.profile.is_flat:
        return cfg.resolution
    return max(cfg.resolution, required_resolution(eps))


def _seed_angles(cfg, extra=()):
    ew = effective_gamma(cfg.profile, cfg.gamma)
    angs = {math.pi / 2, ew.theta_Y}
    for a in (ew.theta_W, ew.theta_eff, *extra):
        if not math.isnan(a):
            angs.add(a)
    return sorted(angs)


def _detached_disk(grid, dom, q):
    """Free disc of volume ``q`` in the middle of the domain."""
    X, Y = grid.centres()
    x0, y0, x1, y1 = dom.base.bbox
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    r = math.sqrt(q / math.pi)
    return repair_volume(DropletField(grid, np.hypot(X - cx, Y - cy) <= r),
                         grid.trace_weight, q)


def effective_reference(cfg: ExperimentConfig, resolution=None) -> Reference:
    """Minimiser ``E0`` of the flat-wall problem with the effective coefficient."""
    ew = effective_gamma(cfg.profile, cfg.gamma)
    if ew.regime is Regime.DEGENERATE:
        raise ValueError("gamma >= 1: effective coefficient undefined")
    coef = ew.gamma_eff
    res = resolution or cfg.resolution
    flat = build_rough_boundary(cfg.base, Profile.flat(), 1.0, gamma=min(coef, 1.0),
                                gamma_other=cfg.gamma_other)
    grid = rasterize(flat, res)
    if coef >= 1.0:
        f = _detached_disk(grid, flat, cfg.q)
        return Reference(f, discrete_energy(f), coef, math.pi, ew.regime, ew.y0, True)
    seeds = [(f"cap{math.degrees(a):.1f}", cap_seed(grid, flat, cfg.q, a))
             for a in sorted({math.pi / 2, contact_angle(coef), 2 * math.pi / 3, 5 * math.pi / 6})]
    f, rep, _ = minimize_with_volume(grid, grid.trace_weight, cfg.q, dom=flat,
                                     seeds=seeds, opts=cfg.solver)
    return Reference(f, rep, coef, contact_angle(coef), ew.regime, ew.y0)


def _dry_level(cfg, eps, y0):
    """Height above the base wall below which groove cavities stay dry."""
    if y0 is None or cfg.profile.is_flat:
        return None
    return eps * (cfg.profile.depth - y0)


def _ball_repair(field, tw, q):
    """Top up the volume with a disc centred on the droplet apex, then polish."""
    g = field.grid
    occ = field.occupancy
    if field.volume < q and occ.any():
        X, Y = g.centres()
        cols = np.nonzero(occ.any(axis=0))[0]
        col = int(np.rint(np.average(np.arange(g.nx), weights=occ.sum(axis=0))))
        col = int(np.clip(col, cols.min(), cols.max()))
        rows = np.nonzero(occ[:, col])[0]
        top = (X[0, col], Y[rows.max(), col]) if rows.size else (X[0, col], Y[0, col])
        d = np.hypot(X - top[0], Y - top[1])
        lo, hi = 0.0, 2.0 * math.sqrt(max(q, 0.0))
        for _ in range(50):
            r = 0.5 * (lo + hi)
            if DropletField(g, occ | (d <= r)).volume < q:
                lo = r
            else:
                hi = r
        field = DropletField(g, occ | (d <= hi))
    return repair_volume(field, tw, q)


def recovery_set(ref: Reference, grid, dom, cfg, eps):
    """``E0`` restricted to ``Omega_eps`` (dry cavities removed in partial wetting),
    with the lost volume restored by a ball."""
    occ = ref.field.occupancy & grid.active
    lvl = _dry_level(cfg, eps, ref.y0) if ref.regime is Regime.PARTIAL_WETTING else None
    if lvl is not None:
        X, Y = grid.centres()
        occ &= dom.base.distance_to_wall(X, Y) >= lvl
    return _ball_repair(DropletField(grid, occ), grid.trace_weight, cfg.q)


def _centroid_col(occ):
    w = occ.sum(axis=0)
    return float(np.average(np.arange(occ.shape[1]), weights=w)) if w.sum() else 0.0


def resample_nearest(occ, shape):
    """Nearest-neighbour resampling of a mask onto a grid of ``shape``."""
    if occ.shape == tuple(shape):
        return occ
    ny, nx = shape
    r = np.minimum((np.arange(ny) + 0.5) * occ.shape[0] / ny, occ.shape[0] - 1).astype(int)
    c = np.minimum((np.arange(nx) + 0.5) * occ.shape[1] / nx, occ.shape[1] - 1).astype(int)
    return occ[np.ix_(r, c)]


def l1_distance(a: DropletField, b: DropletField):
    """Area of the symmetric difference after aligning centroids along the wall."""
    ga, gb = a.grid, b.grid
    fine = ga if ga.spacing <= gb.spacing else gb
    A = resample_nearest(a.occupancy, fine.shape)
    B = resample_nearest(b.occupancy, fine.shape)
    shift = int(np.rint(_centroid_col(A) - _centroid_col(B)))
    B = np.roll(B, shift, axis=1)
    return float(np.count_nonzero(A ^ B)) * fine.cell_area


def solve_rough(cfg: ExperimentConfig, eps, extra_seeds=(), y0=None):
    """Minimise on ``Omega_eps`` from wall caps at the relevant angles.

    Caps are seeded with grooves filled and, for a rough profile, with the
    cavities left dry below the lid level.  Returns ``(field, report, dom)``.
    """
    dom = build_rough_boundary(cfg.base, cfg.profile, eps, gamma=cfg.gamma,
                               gamma_other=cfg.gamma_other)
    grid = rasterize(dom, _resolution(cfg, eps))
    lvl = _dry_level(cfg, eps, y0) or eps * cfg.profile.depth
    seeds = [(label, make(grid, dom)) for label, make in extra_seeds]
    for a in _seed_angles(cfg):
        seeds.append((f"cap{math.degrees(a):.1f}", cap_seed(grid, dom, cfg.q, a)))
        if not cfg.profile.is_flat:
            seeds.append((f"cap{math.degrees(a):.1f}dry",
                          cap_seed(grid, dom, cfg.q, a, empty_below=lvl)))
    f, rep, _ = minimize_with_volume(grid, grid.trace_weight, cfg.q, dom=dom,
                                     seeds=seeds, opts=cfg.solver)
    return f, rep, dom


def _row(cfg, ref, eps):
    try:
        rec_energy = []

        def recovery(grid, dom):
            rec = recovery_set(ref, grid, dom, cfg, eps)
            rec_energy.append(discrete_energy(rec).total)
            return rec

        f, rep, dom = solve_rough(cfg, eps, [("recovery", recovery)], ref.y0)
        try:
            ang = measure_apparent_angle(f, dom).angle
        except MeasurementError as exc:
            log.warning("epsilon=%g: %s", eps, exc)
            ang = math.nan
        return ConvergenceRow(eps, rep.total, ref.report.total, l1_distance(f, ref.field), ang,
                              ref.angle_predicted, rec_energy[0], None, f)
    except Exception as exc:  # recorded in the row; the sweep goes on
        log.error("epsilon=%g failed: %s", eps, exc)
        nan = math.nan
        return ConvergenceRow(eps, nan, ref.report.total, nan, nan, ref.angle_predicted,
                              nan, f"{type(exc).__name__}: {exc}")


def epsilon_sweep(cfg: ExperimentConfig, reference: Optional[Reference] = None):
    """Solve on ``Omega_eps`` for each epsilon and compare with the flat-wall reference."""
    eps = list(cfg.epsilon_list)
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilon_list must be strictly decreasing")
    ref = reference or effective_reference(cfg)
    if cfg.threads > 1 and len(eps) > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as ex:
            rows = list(ex.map(_row, [cfg] * len(eps), [ref] * len(eps), eps))
    else:
        rows = [_row(cfg, ref, e) for e in eps]
    return rows


def write_csv(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)  # RFC 4180 CRLF line endings
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([repr(float(v)) for v in r.csv_values()])


def write_svg(rows, path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "roughwet"
    eps = [r.epsilon for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(eps, [r.F_eps for r in rows], "o-", label="F_eps")
    ax.plot(eps, [r.F_eff for r in rows], "s--", label="F_eff")
    ax.plot(eps, [r.recovery_energy for r in rows], "^:", label="recovery")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("epsilon")
    ax.set_ylabel("energy")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def mask_image(field: DropletField):
    """0 outside the domain, 128 vapour, 255 liquid."""
    img = np.where(field.grid.active, 128, 0)
    img[field.occupancy] = 255
    return img


def emit_outputs(rows, outdir, stem="convergence"):
    """CSV table, SVG plot and one PGM per solved epsilon; returns the paths."""
    if not rows:
        raise ValueError("empty table: nothing to write")
    os.makedirs(outdir, exist_ok=True)
    paths = {"csv": os.path.join(outdir, f"{stem}.csv"),
             "svg": os.path.join(outdir, f"{stem}.svg"), "pgm": []}
    write_csv(rows, paths["csv"])
    write_svg(rows, paths["svg"])
    for r in rows:
        if r.field is not None:
            j = round(1.0 / r.epsilon)
            p = os.path.join(outdir, f"E_eps_1_{j}.pgm")
            write_pgm(p, mask_image(r.field))
            paths["pgm"].append(p)
    return paths
