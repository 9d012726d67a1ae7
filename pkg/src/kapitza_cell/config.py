"""Line-oriented run configuration: `section.key = value` pairs.

Every numeric field is validated against the solver preconditions before
any solve starts, and unknown keys are rejected so a saved config is a
faithful record of a run.
"""

from dataclasses import dataclass

from .geometry import PlacedInclusion, ShapeSpec
from .greens import PeriodicGreenConfig
from .transmission import PhaseParameters

COMMANDS = ("solve", "sweep", "limit", "verify", "greens-check")

_KNOWN_KEYS = {
    "shape.kind", "shape.radius", "shape.a", "shape.b",
    "shape.amplitude", "shape.wave_number",
    "cell.center_x", "cell.center_y", "cell.eps",
    "sweep.eps",
    "phases.lambda_plus", "phases.lambda_minus",
    "rho.model", "rho.r_star", "rho.rho0", "rho.c", "rho.beta",
    "solver.n_nodes",
    "greens.eta", "greens.tail_tol", "greens.real_cutoff", "greens.fourier_cutoff",
    "output.dir",
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key and line."""


@dataclass
class RunConfig:
    shape: ShapeSpec
    center: tuple
    phases: PhaseParameters
    eps: float
    eps_values: tuple
    n_nodes: int
    green: PeriodicGreenConfig
    green_overrides: dict
    out_dir: str
    command: str = None


def _fail(key, line, msg):
    where = f" (line {line})" if line else ""
    raise ConfigError(f"{key}{where}: {msg}")


class _Table:
    def __init__(self, entries):
        self.entries = entries  # key -> (raw value, line number)
        self.seen = set()

    def raw(self, key, default=None):
        self.seen.add(key)
        if key in self.entries:
            return self.entries[key]
        return default, 0

    def has(self, key):
        return key in self.entries

    def number(self, key, default=None, convert=float, kind="number"):
        raw, line = self.raw(key)
        if raw is None:
            return default
        try:
            value = convert(raw)
        except ValueError:
            _fail(key, line, f"expected a {kind}, got {raw!r}")
        return value

    def text(self, key, default=None):
        raw, _ = self.raw(key)
        return default if raw is None else raw

    def line(self, key):
        return self.entries.get(key, (None, 0))[1]


def _scan(text):
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = (value, lineno)
    return _Table(entries)


def _parse_shape(tab):
    kind = tab.text("shape.kind", "disk")
    try:
        if kind == "disk":
            return ShapeSpec.disk(tab.number("shape.radius", 1.0))
        if kind == "ellipse":
            return ShapeSpec.ellipse(tab.number("shape.a", 1.0), tab.number("shape.b", 1.0))
        if kind == "smooth-star":
            if not (tab.has("shape.amplitude") and tab.has("shape.wave_number")):
                _fail("shape.amplitude", tab.line("shape.kind"),
                      "smooth-star requires shape.amplitude and shape.wave_number")
            return ShapeSpec.star(tab.number("shape.amplitude"),
                                  tab.number("shape.wave_number", convert=int, kind="integer"))
    except ConfigError:
        raise
    except ValueError as exc:
        _fail("shape.kind", tab.line("shape.kind"), str(exc))
    _fail("shape.kind", tab.line("shape.kind"),
          f"unknown shape kind {kind!r} (disk, ellipse, smooth-star)")


def _parse_phases(tab):
    lp = tab.number("phases.lambda_plus", 1.0)
    lm = tab.number("phases.lambda_minus", 1.0)
    for key, val in (("phases.lambda_plus", lp), ("phases.lambda_minus", lm)):
        if not val > 0:
            _fail(key, tab.line(key), "conductivity must be positive")
    model = tab.text("rho.model", "linear")
    try:
        if model == "linear":
            return PhaseParameters.linear(lp, lm, tab.number("rho.r_star", 1.0))
        if model == "constant":
            return PhaseParameters.constant(lp, lm, tab.number("rho.rho0", 1.0))
        if model == "power":
            return PhaseParameters.power(lp, lm, tab.number("rho.c", 1.0),
                                         tab.number("rho.beta", 0.5))
    except ConfigError:
        raise
    except ValueError as exc:
        _fail("rho.model", tab.line("rho.model"), str(exc))
    _fail("rho.model", tab.line("rho.model"),
          f"unknown resistivity model {model!r} (linear, constant, power)")


def _parse_eps_list(tab):
    raw, line = tab.raw("sweep.eps")
    if raw is None:
        return ()
    try:
        values = tuple(float(tok) for tok in raw.replace(",", " ").split())
    except ValueError:
        _fail("sweep.eps", line, f"expected a comma-separated list of numbers, got {raw!r}")
    if not values:
        _fail("sweep.eps", line, "empty eps list")
    return values


def _check_placement(shape, center, eps, key, line):
    try:
        PlacedInclusion(shape, center, eps)
    except ValueError as exc:
        _fail(key, line, str(exc))
    from .geometry import discretize, place
    try:
        place(discretize(shape, 16), center, eps)
    except ValueError as exc:
        _fail(key, line, str(exc))


def parse_config(text):
    """Parse and fully validate a configuration; raises ConfigError with the
    offending key and line on any violation."""
    tab = _scan(text)
    shape = _parse_shape(tab)
    phases = _parse_phases(tab)

    cx = tab.number("cell.center_x", 0.5)
    cy = tab.number("cell.center_y", 0.5)
    for key, val in (("cell.center_x", cx), ("cell.center_y", cy)):
        if not 0 < val < 1:
            _fail(key, tab.line(key), "inclusion center must lie inside the open unit cell")

    eps = tab.number("cell.eps")
    if eps is not None:
        _check_placement(shape, (cx, cy), eps, "cell.eps", tab.line("cell.eps"))
    eps_values = _parse_eps_list(tab)
    for e in eps_values:
        _check_placement(shape, (cx, cy), e, "sweep.eps", tab.line("sweep.eps"))

    n_nodes = tab.number("solver.n_nodes", 256, convert=int, kind="integer")
    if n_nodes < 16 or n_nodes % 2:
        _fail("solver.n_nodes", tab.line("solver.n_nodes"),
              "node count must be an even integer >= 16")

    overrides = {}
    for key, name, conv in (("greens.eta", "eta", float),
                            ("greens.tail_tol", "target_tail_tol", float),
                            ("greens.real_cutoff", "real_cutoff", float),
                            ("greens.fourier_cutoff", "fourier_cutoff", int)):
        if tab.has(key):
            overrides[name] = tab.number(key, convert=conv,
                                         kind="integer" if conv is int else "number")
    try:
        green = PeriodicGreenConfig(**overrides)
    except ValueError as exc:
        raise ConfigError(f"greens configuration: {exc}") from exc

    out_dir = tab.text("output.dir", "out")
    return RunConfig(shape=shape, center=(cx, cy), phases=phases, eps=eps,
                     eps_values=eps_values, n_nodes=n_nodes, green=green,
                     green_overrides=overrides, out_dir=out_dir)
