"""Command-line entry point: ``roughwet {analyze,certify,minimize,converge} CONFIG``.

Exit codes: 0 success, 1 usage or config error, 2 constraint or geometry
error, 3 numeric failure.  All outputs go to ``output.outdir``, together with
a copy of the config file.
"""

import argparse
import csv
import logging
import math
import os
import sys

import numpy as np

from .certificate import CoverageError, EndSlopeError, certify_explicit, explicit_margins
from .config import ConfigError, parse_config
from .geometry import GeometryError, write_pgm
from .profile import InvalidProfileError, NoInverseError
from .solver import ConstraintError, MeasurementError, measure_apparent_angle
from .wetting import AngleUndefinedError, Regime, effective_gamma

EXIT_OK, EXIT_USAGE, EXIT_CONSTRAINT, EXIT_NUMERIC = 0, 1, 2, 3

_CONSTRAINT = (ConstraintError, GeometryError, EndSlopeError, InvalidProfileError,
               NoInverseError, CoverageError, AngleUndefinedError)
_NUMERIC = (ArithmeticError, MeasurementError, np.linalg.LinAlgError, RuntimeError)

log = logging.getLogger("roughwet")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return "none"
    return str(getattr(v, "value", v))


def _deg(rad):
    return math.degrees(rad) if rad is not None else math.nan


def _write_kv(path, pairs):
    with open(path, "w", encoding="utf-8") as fh:
        for k, v in pairs:
            fh.write(f"{k} = {_fmt(v)}\n")


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def analysis_pairs(p, gamma):
    ew = effective_gamma(p, gamma)
    return [("gamma", ew.gamma), ("gamma_c", ew.gamma_c), ("r", ew.roughness),
            ("regime", ew.regime), ("gamma_eff", ew.gamma_eff), ("y0", ew.y0),
            ("s0", ew.s0), ("f", ew.cassie_f), ("rho", ew.cassie_rho),
            ("theta_Y_deg", _deg(ew.theta_Y)), ("theta_W_deg", _deg(ew.theta_W)),
            ("theta_eff_deg", _deg(ew.theta_eff))]


def cmd_analyze(cfg, args):
    pairs = analysis_pairs(cfg.profile, cfg.gamma)
    for k, v in pairs:
        print(f"{k}: {_fmt(v)}")
    _write_kv(os.path.join(cfg.outdir, "analyze.txt"), pairs)
    if cfg.gamma_sweep:
        gs = np.linspace(0.0, 1.0, cfg.gamma_sweep, endpoint=False)
        rows = []
        for g in gs:
            ew = effective_gamma(cfg.profile, float(g))
            rows.append([float(g), ew.regime, ew.gamma_eff, _deg(ew.theta_eff)])
        _write_rows(os.path.join(cfg.outdir, "analyze_sweep.csv"),
                    ["gamma", "regime", "gamma_eff", "theta_eff_deg"], rows)
    return EXIT_OK


def cmd_certify(cfg, args):
    p, g = cfg.profile, cfg.gamma
    ew = effective_gamma(p, g)
    y0 = ew.y0 if ew.regime is Regime.PARTIAL_WETTING else p.depth
    res = certify_explicit(p, g, y0, n=cfg.cert_n, variant=cfg.cert_variant)
    pairs = [("verdict", res.verdict), ("method", res.method), ("regime", ew.regime),
             ("gamma", g), ("y0", y0), ("y1", res.y1), ("worst_margin", res.worst_margin),
             ("witness_y", res.witness[0] if res.witness else None),
             ("failed", res.failed)]
    for k, v in pairs:
        print(f"{k}: {_fmt(v)}")
    _write_kv(os.path.join(cfg.outdir, "certify.txt"), pairs)
    if not p.is_flat and y0 < p.depth:
        y, margin, _, _ = explicit_margins(p, g, y0, cfg.cert_n, cfg.cert_variant)
        _write_rows(os.path.join(cfg.outdir, "certify_margins.csv"), ["y", "margin"],
                    zip(map(float, y), map(float, margin)))
    return EXIT_OK


def cmd_minimize(cfg, args):
    from .experiment import mask_image, solve_rough

    ew = effective_gamma(cfg.profile, cfg.gamma)
    f, rep, dom = solve_rough(cfg.experiment(), cfg.epsilon, y0=ew.y0)
    try:
        ang = _deg(measure_apparent_angle(f, dom).angle)
    except MeasurementError as exc:
        log.warning("%s", exc)
        ang = math.nan
    pairs = [("epsilon", cfg.epsilon), ("perimeter_term", rep.perimeter_term),
             ("trace_term", rep.trace_term), ("total", rep.total), ("lambda", rep.lam),
             ("target_volume", cfg.q), ("achieved_volume", rep.achieved_volume),
             ("angle_deg", ang)]
    for k, v in pairs:
        print(f"{k}: {_fmt(v)}")
    _write_kv(os.path.join(cfg.outdir, "minimize_report.txt"), pairs)
    _write_rows(os.path.join(cfg.outdir, "minimize.csv"), [k for k, _ in pairs],
                [[v for _, v in pairs]])
    write_pgm(os.path.join(cfg.outdir, "minimize.pgm"), mask_image(f))
    return EXIT_OK


def cmd_converge(cfg, args):
    from .experiment import emit_outputs, epsilon_sweep

    rows = epsilon_sweep(cfg.experiment(threads=args.threads))
    paths = emit_outputs(rows, cfg.outdir)
    for r in rows:
        print(" ".join(f"{k}={_fmt(float(v))}" for k, v in zip(
            ("epsilon", "F_eps", "F_eff", "recovery", "l1", "angle_deg", "predicted_deg"),
            r.csv_values())) + (f" error={r.error}" if r.error else ""))
    print(f"wrote {paths['csv']}")
    return EXIT_NUMERIC if any(r.error for r in rows) else EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "certify": cmd_certify,
            "minimize": cmd_minimize, "converge": cmd_converge}


def build_parser():
    ap = argparse.ArgumentParser(prog="roughwet",
                                 description="Wetting of rough walls: analysis and simulation.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {"analyze": "effective wetting coefficient, regime and angles",
             "certify": "unreachability certificate for the groove cavities",
             "minimize": "droplet minimiser on the rough domain at one epsilon",
             "converge": "epsilon sweep against the effective flat-wall model"}
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text)
        sp.add_argument("config", help="path to the run config")
        sp.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a config key (repeatable)")
        sp.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker processes (default: number of CPUs)")
    return ap


def run(command, cfg, args):
    """Dispatch ``command`` and map failures onto exit codes."""
    os.makedirs(cfg.outdir, exist_ok=True)
    with open(os.path.join(cfg.outdir, os.path.basename(cfg.source)), "w",
              encoding="utf-8") as fh:
        fh.write(cfg.text)
        for item in args.overrides:
            fh.write(f"# --set {item}\n")
    try:
        return COMMANDS[command](cfg, args)
    except _CONSTRAINT as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except _NUMERIC as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = parse_config(args.config, args.overrides)
    except ConfigError as exc:
        for line in exc.errors:
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_USAGE
    return run(args.command, cfg, args)


if __name__ == "__main__":
    sys.exit(main())
