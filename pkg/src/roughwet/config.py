"""Run configuration: a flat INI-style file with dotted key paths.

Every key is addressed as ``section.key`` (for example ``wetting.gamma``),
both in error messages and in ``--set`` overrides.  Parsing collects all
violations before failing.

Example::

    [profile]
    kind = sinusoid
    a = 0.5

    [domain]
    base = channel
    width = 1.0
    height = 0.6

    [wetting]
    gamma = 0.3

    [experiment]
    q = 0.05
    epsilon_list = 1/4, 1/8, 1/16
"""

import configparser
import math
import os
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

from .geometry import Channel, Disk
from .profile import InvalidProfileError, Profile
from .solver import SolverOptions

DEFAULT_RESOLUTION = 256
DEFAULT_VOLUME_TOL = 0.005
DEFAULT_GAMMA_OTHER = 0.999
DEFAULT_EPSILONS = "1/4, 1/8, 1/16"

# keys that may also be given under [experiment]
_ALIASES = {"experiment.gamma": "wetting.gamma",
            "experiment.epsilon_list": "domain.epsilon_list",
            "experiment.outdir": "output.outdir"}

_KNOWN = {
    "profile": {"kind", "a", "m", "samples"},
    "domain": {"base", "width", "height", "radius", "epsilon", "epsilon_list"},
    "wetting": {"gamma", "gamma_other"},
    "experiment": {"q", "gamma", "epsilon_list", "outdir", "gamma_sweep"},
    "solver": {"resolution", "volume_tol", "band", "max_steps"},
    "certificate": {"variant", "n"},
    "output": {"outdir"},
}


class ConfigError(ValueError):
    """All violations found in a config file, one per line."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass(frozen=True)
class RunConfig:
    profile: Profile
    base: object
    gamma: float
    q: float
    epsilon_list: tuple
    epsilon: float
    gamma_other: float = DEFAULT_GAMMA_OTHER
    resolution: int = DEFAULT_RESOLUTION
    solver: SolverOptions = field(default_factory=SolverOptions)
    cert_variant: str = "literal"
    cert_n: int = 4096
    gamma_sweep: int = 0
    outdir: str = "out"
    source: Optional[str] = None
    text: str = ""

    def experiment(self, threads=1):
        from .experiment import ExperimentConfig
        return ExperimentConfig(self.profile, self.base, self.gamma, self.q,
                                self.epsilon_list, self.resolution, self.gamma_other,
                                self.solver, threads)


def parse_epsilon(text):
    """``1/j`` or a decimal equal to one; returns the float value."""
    try:
        v = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not a number: {text!r}") from None
    if v <= 0 or (1 / v).denominator != 1:
        # tolerate decimal spellings of 1/j such as 0.125
        j = round(1 / float(v)) if v > 0 else 0
        if j < 1 or abs(float(v) * j - 1.0) > 1e-12:
            raise ValueError(f"epsilon must equal 1/j (got {text.strip()})")
        return 1.0 / j
    return float(v)


class _Reader:
    """Typed access to a ConfigParser that records errors instead of raising."""

    def __init__(self, cp):
        self.cp = cp
        self.errors = []

    def raw(self, path):
        sec, key = path.split(".", 1)
        if self.cp.has_option(sec, key):
            return self.cp.get(sec, key)
        for alias, canon in _ALIASES.items():
            if canon == path:
                a_sec, a_key = alias.split(".", 1)
                if self.cp.has_option(a_sec, a_key):
                    return self.cp.get(a_sec, a_key)
        return None

    def get(self, path, conv, default=None, required=False, check=None, why=""):
        text = self.raw(path)
        if text is None:
            if required:
                self.errors.append(f"{path}: missing required key")
            return default
        try:
            val = conv(text)
        except ValueError as exc:
            self.errors.append(f"{path}: {exc}" if "epsilon" in str(exc)
                               else f"{path}: expected {conv.__name__}, got {text!r}")
            return default
        if check is not None and not check(val):
            self.errors.append(f"{path}: {why} (got {text.strip()})")
            return default
        return val


def _finite(x):
    return math.isfinite(x)


def _apply_overrides(cp, overrides, errors):
    for item in overrides or ():
        if "=" not in item:
            errors.append(f"--set {item!r}: expected key=value")
            continue
        key, val = (t.strip() for t in item.split("=", 1))
        if "." not in key:
            errors.append(f"--set {key}: expected section.key")
            continue
        sec, opt = key.split(".", 1)
        if not cp.has_section(sec):
            cp.add_section(sec)
        cp.set(sec, opt, val)


def _check_unknown(cp, errors):
    for sec in cp.sections():
        if sec not in _KNOWN:
            errors.append(f"{sec}: unknown section")
            continue
        for key in cp.options(sec):
            if key not in _KNOWN[sec]:
                errors.append(f"{sec}.{key}: unknown key")


def _profile(r, base_dir):
    kind = r.get("profile.kind", str.strip, required=True)
    if kind is None:
        return None
    kind = kind.lower()
    try:
        if kind == "flat":
            return Profile.flat()
        if kind == "triangle":
            m = r.get("profile.m", float, required=True, check=lambda v: v > 0,
                      why="slope must be positive")
            return None if m is None else Profile.triangle(m)
        if kind == "sinusoid":
            a = r.get("profile.a", float, required=True, check=lambda v: v > 0,
                      why="amplitude must be positive")
            return None if a is None else Profile.sinusoid(a)
        if kind == "tabulated":
            path = r.get("profile.samples", str.strip, required=True)
            if path is None:
                return None
            path = os.path.join(base_dir, path)
            if not os.path.isfile(path):
                r.errors.append(f"profile.samples: file not found: {path}")
                return None
            return Profile.from_csv(path)
    except InvalidProfileError as exc:
        r.errors.append(f"profile: {exc}")
        return None
    r.errors.append(f"profile.kind: expected flat, triangle, sinusoid or tabulated (got {kind})")
    return None


def _base(r):
    kind = (r.get("domain.base", str.strip, default="channel") or "channel").lower()
    pos = dict(check=lambda v: v > 0 and _finite(v), why="must be positive")
    if kind == "channel":
        w = r.get("domain.width", float, default=1.0, **pos)
        h = r.get("domain.height", float, default=0.6, **pos)
        return Channel(w, h) if w and h else None
    if kind == "disk":
        R = r.get("domain.radius", float, default=1.0 / (2 * math.pi), **pos)
        return Disk(R) if R else None
    r.errors.append(f"domain.base: expected channel or disk (got {kind})")
    return None


def _epsilons(r):
    text = r.raw("domain.epsilon_list") or DEFAULT_EPSILONS
    path = "domain.epsilon_list"
    vals, bad = [], False
    for tok in text.split(","):
        if not tok.strip():
            continue
        try:
            vals.append(parse_epsilon(tok))
        except ValueError as exc:
            r.errors.append(f"{path}: {exc}")
            bad = True
    if not vals and not bad:
        r.errors.append(f"{path}: empty list")
    elif not bad and any(b >= a for a, b in zip(vals, vals[1:])):
        r.errors.append(f"{path}: must be strictly decreasing")
    return tuple(vals)


def read_config(path, overrides=()):
    """Load the file and apply ``--set`` overrides; returns ``(parser, errors)``."""
    errors = []
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError([f"{path}: {exc.strerror}"]) from None
    except configparser.Error as exc:
        raise ConfigError([f"{path}: {exc.message}"]) from None
    _apply_overrides(cp, overrides, errors)
    return cp, errors


def parse_config(path, overrides=()) -> RunConfig:
    """Parse and validate a run configuration.

    Raises
    ------
    ConfigError
        Listing every violation, each prefixed with its key path.
    """
    cp, errors = read_config(path, overrides)
    _check_unknown(cp, errors)
    r = _Reader(cp)
    base_dir = os.path.dirname(os.path.abspath(path))

    prof = _profile(r, base_dir)
    base = _base(r)
    eps_list = _epsilons(r)
    eps_one = r.get("domain.epsilon", parse_epsilon)
    gamma = r.get("wetting.gamma", float, required=True,
                  check=lambda g: 0.0 <= g < 1.0, why="must satisfy 0 <= gamma < 1")
    g_other = r.get("wetting.gamma_other", float, default=DEFAULT_GAMMA_OTHER,
                    check=lambda g: 0.0 <= g <= 1.0, why="must lie in [0, 1]")
    q = r.get("experiment.q", float, default=0.05,
              check=lambda v: v > 0 and _finite(v), why="must be positive")
    sweep = r.get("experiment.gamma_sweep", int, default=0,
                  check=lambda v: v >= 0, why="must be non-negative")
    res = r.get("solver.resolution", int, default=DEFAULT_RESOLUTION,
                check=lambda v: v >= 8, why="must be at least 8")
    vtol = r.get("solver.volume_tol", float, default=DEFAULT_VOLUME_TOL,
                 check=lambda v: 0 < v < 1, why="must lie in (0, 1)")
    band = r.get("solver.band", int, default=SolverOptions.band,
                 check=lambda v: v >= 2, why="must be at least 2")
    steps = r.get("solver.max_steps", int, default=SolverOptions.max_steps,
                  check=lambda v: v >= 1, why="must be positive")
    variant = r.get("certificate.variant", str.strip, default="literal",
                    check=lambda v: v in ("literal", "cosine"), why="expected literal or cosine")
    cert_n = r.get("certificate.n", int, default=4096,
                   check=lambda v: v >= 16, why="must be at least 16")
    outdir = r.get("output.outdir", str.strip, default="out")

    if base is not None and q is not None and q >= base.area:
        r.errors.append(f"experiment.q: must be smaller than the domain area {base.area:g}")

    if r.errors or errors:
        raise ConfigError(errors + r.errors)

    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return RunConfig(
        profile=prof, base=base, gamma=gamma, q=q, epsilon_list=eps_list,
        epsilon=eps_one if eps_one is not None else eps_list[-1],
        gamma_other=g_other, resolution=res,
        solver=replace(SolverOptions(), volume_tol=vtol, band=band, max_steps=steps),
        cert_variant=variant, cert_n=cert_n, gamma_sweep=sweep,
        outdir=os.path.join(base_dir, outdir), source=os.path.abspath(path), text=text)
