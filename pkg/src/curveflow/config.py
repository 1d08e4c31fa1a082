"""Plain-text ``key = value`` run configurations.

Phases are numbered from 1 in files and from 0 in the library.  Shapes
are listed as ``shapes.<name> = <kind> <phase> <param> ...`` and take
precedence in file order; ``shapes.background`` names the phase that
fills the rest of the domain.  A ``scenario = <name>`` line starts from a
canned configuration, and every other key then acts as an override.

Example::

    mesh.nx = 40
    mesh.ny = 40
    phases.k = 2
    shapes.disk = disk 1 0.5 0.5 0.35
    shapes.background = 2
    time.dt = 0.00765625
    time.K = 10
    time.M = 8
    mode = bmo
"""
from __future__ import annotations

from dataclasses import replace

from .dmf import PENALTY_FORMS
from .driver import MODES, SCENARIOS, RunConfig
from .field import Shape

__all__ = ["ConfigError", "KEYS", "REQUIRED", "parse_config", "load_config", "format_config"]

SHAPE_ARITY = {"disk": (3,), "ellipse": (4, 5), "rect": (4,), "halfplane": (3,)}

KEYS = {
    "scenario": "scenario",
    "name": "name",
    "mesh.nx": "nx",
    "mesh.ny": "ny",
    "phases.k": "k",
    "time.dt": "dt",
    "time.K": "K",
    "time.M": "M",
    "mode": "mode",
    "initial": "initial",
    "constraint.enabled": "constraint",
    "constraint.epsilon": "epsilon",
    "constraint.form": "penalty_form",
    "transport.enabled": "transport",
    "transport.beta": "beta",
    "output.every": "geometry_every",
    "fit.phase": "fit_phase",
    "solver": "solver",
}
REQUIRED = ("mesh.nx", "mesh.ny", "phases.k", "time.dt", "time.K", "time.M", "shapes.background")


class ConfigError(ValueError):
    """Malformed configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _bool(key, text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(key, f"expected a boolean, got {text!r}")


def _int(key, text):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {text!r}") from None


def _float(key, text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(key, f"expected a number, got {text!r}") from None


def _shape(key, text):
    parts = text.split()
    if len(parts) < 2:
        raise ConfigError(key, "expected '<kind> <phase> <params...>'")
    kind = parts[0]
    if kind not in SHAPE_ARITY:
        raise ConfigError(key, f"unknown shape kind {kind!r}")
    phase = _int(key, parts[1]) - 1
    params = tuple(_float(key, p) for p in parts[2:])
    if len(params) not in SHAPE_ARITY[kind]:
        raise ConfigError(key, f"{kind} takes {SHAPE_ARITY[kind]} parameters, got {len(params)}")
    return Shape(kind, params, phase)


def parse_config(text: str) -> RunConfig:
    """Parse configuration text into a :class:`RunConfig`.

    Raises
    ------
    ConfigError
        Unknown or missing keys and unparsable values; the message starts
        with the key name.
    """
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS and not key.startswith("shapes."):
            raise ConfigError(key, "unknown key")
        entries.append((key, value))
    seen = {}
    for key, value in entries:
        if key in seen:
            raise ConfigError(key, "duplicate key")
        seen[key] = value

    base = None
    if "scenario" in seen:
        name = seen["scenario"]
        if name not in SCENARIOS:
            raise ConfigError("scenario", f"unknown scenario {name!r}")
        base = SCENARIOS[name]
    else:
        for key in REQUIRED:
            if key not in seen:
                raise ConfigError(key, "missing required key")

    kw = {}
    shapes = []
    for key, value in entries:
        if key == "shapes.background":
            kw["background"] = _int(key, value) - 1
        elif key.startswith("shapes."):
            shapes.append(_shape(key, value))
        elif key == "scenario":
            continue
        else:
            attr = KEYS[key]
            if attr in ("nx", "ny", "k", "K", "M", "geometry_every"):
                kw[attr] = _int(key, value)
            elif attr in ("dt", "epsilon", "beta"):
                kw[attr] = _float(key, value)
            elif attr in ("constraint", "transport"):
                kw[attr] = _bool(key, value)
            elif attr == "fit_phase":
                kw[attr] = _int(key, value) - 1
            elif attr == "mode":
                if value not in MODES:
                    raise ConfigError(key, f"expected one of {MODES}, got {value!r}")
                kw[attr] = value
            elif attr == "penalty_form":
                if value not in PENALTY_FORMS:
                    raise ConfigError(key, f"expected one of {PENALTY_FORMS}, got {value!r}")
                kw[attr] = value
            else:
                kw[attr] = value
    if shapes or base is None:
        kw["shapes"] = tuple(shapes)
    try:
        if base is None:
            return RunConfig(**kw)
        return replace(base, **kw)
    except ValueError as exc:
        raise ConfigError("config", str(exc)) from None


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("path", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


def format_config(cfg: RunConfig) -> str:
    """Inverse of :func:`parse_config` for configurations built from shapes."""
    lines = [
        f"name = {cfg.name}",
        f"mesh.nx = {cfg.nx}",
        f"mesh.ny = {cfg.ny}",
        f"phases.k = {cfg.k}",
    ]
    for n, s in enumerate(cfg.shapes, 1):
        lines.append(f"shapes.s{n} = {s.kind} {s.phase + 1} " + " ".join(repr(float(p)) for p in s.params))
    lines.append(f"shapes.background = {cfg.background + 1}")
    lines += [
        f"time.dt = {cfg.dt!r}",
        f"time.K = {cfg.K}",
        f"time.M = {cfg.M}",
        f"mode = {cfg.mode}",
    ]
    if cfg.initial is not None:
        lines.append(f"initial = {cfg.initial}")
    lines += [
        f"constraint.enabled = {str(cfg.constraint).lower()}",
        f"constraint.epsilon = {cfg.epsilon!r}",
        f"constraint.form = {cfg.penalty_form}",
        f"transport.enabled = {str(cfg.transport).lower()}",
        f"transport.beta = {cfg.beta!r}",
        f"output.every = {cfg.geometry_every}",
    ]
    if cfg.fit_phase is not None:
        lines.append(f"fit.phase = {cfg.fit_phase + 1}")
    return "\n".join(lines) + "\n"

